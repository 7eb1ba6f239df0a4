//! Registry records: typed fields plus dated clinical events, validated
//! against a registry schema loaded from TOML.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldType {
    Text,
    Number {
        /// Cut points used when the field is itemized for mining.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        bins: Vec<f64>,
    },
    Date,
    Category {
        values: Vec<String>,
    },
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDef {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(flatten)]
    pub kind: FieldType,
}

impl FieldDef {
    pub fn display_label(&self) -> &str {
        if self.label.is_empty() {
            &self.id
        } else {
            &self.label
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventKindDef {
    pub id: String,
    #[serde(default)]
    pub label: String,
    /// Position in the canonical clinical course; kinds sharing a position
    /// are never compared.
    pub order: u32,
}

fn default_formats() -> Vec<String> {
    vec!["%Y-%m-%d".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrySchema {
    #[serde(rename = "field", default)]
    pub fields: Vec<FieldDef>,
    #[serde(rename = "event", default)]
    pub events: Vec<EventKindDef>,
    /// Accepted date spellings, tried in turn.
    #[serde(default = "default_formats")]
    pub date_formats: Vec<String>,
    /// Field holding the class label used for antisyndrome mining.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_field: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum DateProblem {
    Unparseable,
    /// More than one configured format reads the text, with different dates.
    Ambiguous { candidates: Vec<NaiveDate> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateDiagnostic {
    /// Field id, or `event:<kind>` for event dates.
    pub source: String,
    pub raw: String,
    #[serde(flatten)]
    pub problem: DateProblem,
}

/// Parses `raw` with every format; succeeds only when all matching formats
/// agree on the date.
pub fn parse_date(raw: &str, formats: &[String]) -> std::result::Result<NaiveDate, DateProblem> {
    let found: BTreeSet<NaiveDate> = formats
        .iter()
        .filter_map(|f| NaiveDate::parse_from_str(raw.trim(), f).ok())
        .collect();
    match found.len() {
        0 => Err(DateProblem::Unparseable),
        1 => Ok(*found.iter().next().expect("one")),
        _ => Err(DateProblem::Ambiguous {
            candidates: found.into_iter().collect(),
        }),
    }
}

impl RegistrySchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for f in &self.fields {
            if !seen.insert(f.id.as_str()) {
                return Err(Error::Schema(format!("duplicate registry field `{}`", f.id)));
            }
            if let FieldType::Category { values } = &f.kind {
                if values.is_empty() {
                    return Err(Error::Schema(format!("category field `{}` has no values", f.id)));
                }
            }
        }
        let mut kinds = BTreeSet::new();
        for e in &self.events {
            if !kinds.insert(e.id.as_str()) {
                return Err(Error::Schema(format!("duplicate event kind `{}`", e.id)));
            }
        }
        if self.date_formats.is_empty() {
            return Err(Error::Schema("at least one date format is required".into()));
        }
        if let Some(l) = &self.label_field {
            self.field(l)?;
        }
        Ok(())
    }

    pub fn field(&self, id: &str) -> Result<&FieldDef> {
        self.fields
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| Error::UnknownParameter(id.to_string()))
    }

    pub fn event_kind(&self, id: &str) -> Result<&EventKindDef> {
        self.events
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::Schema(format!("unknown event kind `{id}`")))
    }

    /// Type-checks a raw record. Bad dates do not fail validation; the
    /// affected field or event is dropped and a diagnostic is kept.
    pub fn validate_record(&self, raw: RawRecord) -> Result<RegistryRecord> {
        let mut fields = BTreeMap::new();
        let mut diagnostics = Vec::new();
        for (id, value) in raw.fields {
            let def = self.field(&id)?;
            if value.is_null() {
                continue;
            }
            let mismatch = |detail: &str| Error::TypeMismatch {
                parameter: id.clone(),
                detail: detail.to_string(),
            };
            let typed = match (&def.kind, &value) {
                (FieldType::Text, serde_json::Value::String(s)) => FieldValue::Text(s.clone()),
                (FieldType::Number { .. }, serde_json::Value::Number(n)) => {
                    FieldValue::Number(n.as_f64().ok_or_else(|| mismatch("not a finite number"))?)
                }
                (FieldType::Boolean, serde_json::Value::Bool(b)) => FieldValue::Bool(*b),
                (FieldType::Category { values }, serde_json::Value::String(s)) => {
                    if !values.contains(s) {
                        return Err(mismatch(&format!("`{s}` is not one of {values:?}")));
                    }
                    FieldValue::Category(s.clone())
                }
                (FieldType::Date, serde_json::Value::String(s)) => match parse_date(s, &self.date_formats) {
                    Ok(d) => FieldValue::Date(d),
                    Err(problem) => {
                        diagnostics.push(DateDiagnostic {
                            source: id.clone(),
                            raw: s.clone(),
                            problem,
                        });
                        continue;
                    }
                },
                _ => return Err(mismatch(&format!("unexpected value {value}"))),
            };
            fields.insert(id, typed);
        }
        let mut events = Vec::new();
        for e in raw.events {
            self.event_kind(&e.kind)?;
            match parse_date(&e.date, &self.date_formats) {
                Ok(date) => events.push(ClinicalEvent {
                    kind: e.kind,
                    date,
                    attributes: e.attributes,
                }),
                Err(problem) => diagnostics.push(DateDiagnostic {
                    source: format!("event:{}", e.kind),
                    raw: e.date,
                    problem,
                }),
            }
        }
        Ok(RegistryRecord {
            id: raw.id,
            fields,
            events,
            diagnostics,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub kind: String,
    pub date: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

/// A record as entered, before type checking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    #[serde(default)]
    pub fields: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub events: Vec<RawEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum FieldValue {
    Text(String),
    Number(f64),
    Date(NaiveDate),
    Category(String),
    Bool(bool),
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Text(s) | FieldValue::Category(s) => f.write_str(s),
            FieldValue::Number(n) => write!(f, "{n}"),
            FieldValue::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            FieldValue::Bool(true) => f.write_str("yes"),
            FieldValue::Bool(false) => f.write_str("no"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalEvent {
    pub kind: String,
    pub date: NaiveDate,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryRecord {
    pub id: String,
    pub fields: BTreeMap<String, FieldValue>,
    pub events: Vec<ClinicalEvent>,
    /// Dates that could not be read and were left out.
    #[serde(default)]
    pub diagnostics: Vec<DateDiagnostic>,
}

impl RegistryRecord {
    pub fn field(&self, id: &str) -> Option<&FieldValue> {
        self.fields.get(id)
    }

    pub fn events_of<'a>(&'a self, kinds: &'a [String]) -> impl Iterator<Item = &'a ClinicalEvent> + 'a {
        self.events.iter().filter(move |e| kinds.contains(&e.kind))
    }
}
