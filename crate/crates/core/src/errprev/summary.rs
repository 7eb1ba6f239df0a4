//! The follow-up summary: key fields verbatim, the chronology, and the
//! possible errors, on one non-interruptive screen.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::chronology::{build_chronology, Chronology, Emphasis};
use super::record::{RegistryRecord, RegistrySchema};
use super::rules::{evaluate_rules, PossibleError, RuleSet};
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryLayout {
    /// Fields shown in the first section, in display order.
    pub key_fields: Vec<String>,
}

impl SummaryLayout {
    /// Reads the `[summary]` table of a registry file.
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Wrapper {
            #[serde(default)]
            summary: SummaryLayout,
        }
        Ok(toml::from_str::<Wrapper>(text)?.summary)
    }

    pub fn validate(&self, schema: &RegistrySchema) -> Result<()> {
        for f in &self.key_fields {
            schema.field(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyField {
    pub field: String,
    pub label: String,
    /// Rendered value, or `None` when the record leaves it empty.
    pub value: Option<String>,
    pub emphasis: Emphasis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowUpSummary {
    pub record: String,
    pub key_fields: Vec<KeyField>,
    pub chronology: Chronology,
    pub possible_errors: Vec<PossibleError>,
}

/// Builds all three sections. Fields and event kinds used by a fired rule
/// are highlighted.
pub fn generate_summary(
    record: &RegistryRecord,
    schema: &RegistrySchema,
    rules: &RuleSet,
    layout: &SummaryLayout,
) -> Result<FollowUpSummary> {
    layout.validate(schema)?;
    let mut fields = BTreeSet::new();
    let mut kinds = BTreeSet::new();
    for r in rules.fired(record) {
        fields.extend(r.referenced_fields());
        kinds.extend(r.referenced_kinds());
    }
    let emphasis = |hit: bool| if hit { Emphasis::Highlight } else { Emphasis::Plain };
    let key_fields = layout
        .key_fields
        .iter()
        .map(|id| {
            let def = schema.field(id)?;
            Ok(KeyField {
                field: id.clone(),
                label: def.display_label().to_string(),
                value: record.field(id).map(ToString::to_string),
                emphasis: emphasis(fields.contains(id)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut chronology = build_chronology(record, schema);
    for e in &mut chronology.entries {
        e.emphasis = emphasis(kinds.contains(&e.kind));
    }
    Ok(FollowUpSummary {
        record: record.id.clone(),
        key_fields,
        chronology,
        possible_errors: evaluate_rules(record, rules),
    })
}

impl FollowUpSummary {
    /// Appends extra warnings, such as antisyndrome flags, to the
    /// possible-error section.
    pub fn with_warnings(mut self, extra: impl IntoIterator<Item = PossibleError>) -> Self {
        self.possible_errors.extend(extra);
        self
    }

    pub fn highlighted_fields(&self) -> impl Iterator<Item = &str> {
        self.key_fields
            .iter()
            .filter(|k| k.emphasis == Emphasis::Highlight)
            .map(|k| k.field.as_str())
    }

    /// Plain-text rendering; highlighted items are wrapped in `**`.
    pub fn to_plain_text(&self) -> String {
        let mark = |e: Emphasis, s: String| match e {
            Emphasis::Highlight => format!("**{s}**"),
            Emphasis::Plain => s,
        };
        let mut out = format!("Follow-up summary: {}\n\n1) Key fields\n", self.record);
        for k in &self.key_fields {
            let value = k.value.as_deref().unwrap_or("not recorded");
            let _ = writeln!(out, "   {}", mark(k.emphasis, format!("{}: {value}", k.label)));
        }
        out.push_str("\n2) Chronology\n");
        if self.chronology.entries.is_empty() {
            out.push_str("   no dated events\n");
        }
        for (i, e) in self.chronology.entries.iter().enumerate() {
            let mut line = format!("{}  {}", e.date.format("%Y-%m-%d"), e.label);
            if !e.attributes.is_empty() {
                let attrs: Vec<String> = e.attributes.iter().map(|(k, v)| format!("{k}: {v}")).collect();
                let _ = write!(line, " ({})", attrs.join(", "));
            }
            let _ = write!(out, "   {}", mark(e.emphasis, line));
            for a in self.chronology.anomalies_at(i) {
                let then = self
                    .chronology
                    .entries
                    .iter()
                    .find(|e| e.kind == a.expected_then)
                    .map_or(a.expected_then.as_str(), |e| e.label.as_str());
                let _ = write!(
                    out,
                    "  [date order: expected before {then} on {}]",
                    a.then_date.format("%Y-%m-%d")
                );
            }
            out.push('\n');
        }
        for d in &self.chronology.excluded {
            let _ = writeln!(out, "   unreadable date for {}: \"{}\"", d.source, d.raw);
        }
        out.push_str("\n3) Possible errors\n");
        if self.possible_errors.is_empty() {
            out.push_str("   none\n");
        }
        for p in &self.possible_errors {
            let _ = writeln!(out, "   - {} (likelihood {}) [{}]", p.message, p.likelihood, p.rule);
        }
        out
    }
}
