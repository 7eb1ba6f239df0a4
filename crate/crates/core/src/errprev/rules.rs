//! Possible-error rules. A rule is a conjunction of atoms over record fields
//! and events; rules live in TOML files and are checked against the registry
//! schema when loaded.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::record::{ClinicalEvent, FieldType, FieldValue, RegistryRecord, RegistrySchema};
use crate::error::{Error, Result};

/// One event kind or several interchangeable ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KindSet {
    One(String),
    Many(Vec<String>),
}

impl KindSet {
    pub fn kinds(&self) -> Vec<String> {
        match self {
            KindSet::One(k) => vec![k.clone()],
            KindSet::Many(ks) => ks.clone(),
        }
    }

    fn matches(&self, kind: &str) -> bool {
        match self {
            KindSet::One(k) => k == kind,
            KindSet::Many(ks) => ks.iter().any(|k| k == kind),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "atom", rename_all = "snake_case")]
pub enum Atom {
    /// Compares a field with a constant; false when the field is missing.
    Field {
        field: String,
        op: CmpOp,
        value: serde_json::Value,
    },
    FieldPresent {
        field: String,
    },
    EventExists {
        kind: KindSet,
    },
    /// Some `first` event is dated strictly before some `then` event.
    EventOrder {
        first: KindSet,
        then: KindSet,
    },
    /// Days from the earliest `from` event to the earliest `to` event after
    /// it, compared with `days`.
    EventGap {
        from: KindSet,
        to: KindSet,
        op: CmpOp,
        days: f64,
    },
    /// A `kind` event dated strictly between the earliest `after` event and
    /// the earliest `before` event following it.
    EventBetween {
        kind: KindSet,
        after: KindSet,
        before: KindSet,
    },
    EventAttr {
        kind: KindSet,
        attribute: String,
        value: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    #[serde(flatten)]
    pub atom: Atom,
    #[serde(default)]
    pub negate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDef {
    pub id: String,
    /// `{field}` placeholders are replaced with rendered field values.
    pub message: String,
    /// Free-text probability estimate shown with the message.
    pub likelihood: String,
    pub when: Vec<Condition>,
    #[serde(default)]
    pub interruptive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossibleError {
    pub rule: String,
    pub message: String,
    pub likelihood: String,
    pub interruptive: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    #[serde(rename = "rule", default)]
    pub rules: Vec<RuleDef>,
}

fn first_of<'a>(record: &'a RegistryRecord, set: &KindSet) -> Option<&'a ClinicalEvent> {
    record
        .events
        .iter()
        .filter(|e| set.matches(&e.kind))
        .min_by_key(|e| e.date)
}

fn first_after<'a>(record: &'a RegistryRecord, set: &KindSet, after: NaiveDate) -> Option<&'a ClinicalEvent> {
    record
        .events
        .iter()
        .filter(|e| set.matches(&e.kind) && e.date > after)
        .min_by_key(|e| e.date)
}

fn compare_field(value: &FieldValue, op: CmpOp, target: &serde_json::Value) -> bool {
    let ord = match (value, target) {
        (FieldValue::Number(a), serde_json::Value::Number(b)) => b.as_f64().and_then(|b| a.partial_cmp(&b)),
        (FieldValue::Bool(a), serde_json::Value::Bool(b)) => Some(a.cmp(b)),
        (FieldValue::Text(a) | FieldValue::Category(a), serde_json::Value::String(b)) => Some(a.as_str().cmp(b)),
        (FieldValue::Date(a), serde_json::Value::String(b)) => {
            NaiveDate::parse_from_str(b, "%Y-%m-%d").ok().map(|b| a.cmp(&b))
        }
        _ => None,
    };
    ord.is_some_and(|o| op.holds(o))
}

impl Atom {
    pub fn holds(&self, record: &RegistryRecord) -> bool {
        match self {
            Atom::Field { field, op, value } => record.field(field).is_some_and(|v| compare_field(v, *op, value)),
            Atom::FieldPresent { field } => record.field(field).is_some(),
            Atom::EventExists { kind } => record.events.iter().any(|e| kind.matches(&e.kind)),
            Atom::EventOrder { first, then } => record.events.iter().any(|a| {
                first.matches(&a.kind)
                    && record.events.iter().any(|b| then.matches(&b.kind) && a.date < b.date)
            }),
            Atom::EventGap { from, to, op, days } => {
                let Some(f) = first_of(record, from) else {
                    return false;
                };
                let Some(t) = first_after(record, to, f.date) else {
                    return false;
                };
                let gap = (t.date - f.date).num_days() as f64;
                gap.partial_cmp(days).is_some_and(|o| op.holds(o))
            }
            Atom::EventBetween { kind, after, before } => {
                let Some(a) = first_of(record, after) else {
                    return false;
                };
                let Some(b) = first_after(record, before, a.date) else {
                    return false;
                };
                record
                    .events
                    .iter()
                    .any(|e| kind.matches(&e.kind) && e.date > a.date && e.date < b.date)
            }
            Atom::EventAttr { kind, attribute, value } => record
                .events
                .iter()
                .any(|e| kind.matches(&e.kind) && e.attributes.get(attribute) == Some(value)),
        }
    }

    fn fields(&self) -> Vec<&str> {
        match self {
            Atom::Field { field, .. } | Atom::FieldPresent { field } => vec![field],
            _ => vec![],
        }
    }

    fn kinds(&self) -> Vec<String> {
        match self {
            Atom::Field { .. } | Atom::FieldPresent { .. } => vec![],
            Atom::EventExists { kind } | Atom::EventAttr { kind, .. } => kind.kinds(),
            Atom::EventOrder { first, then } => [first.kinds(), then.kinds()].concat(),
            Atom::EventGap { from, to, .. } => [from.kinds(), to.kinds()].concat(),
            Atom::EventBetween { kind, after, before } => [kind.kinds(), after.kinds(), before.kinds()].concat(),
        }
    }
}

impl RuleDef {
    pub fn fires(&self, record: &RegistryRecord) -> bool {
        self.when.iter().all(|c| c.atom.holds(record) != c.negate)
    }

    pub fn referenced_fields(&self) -> BTreeSet<String> {
        self.when
            .iter()
            .flat_map(|c| c.atom.fields())
            .map(String::from)
            .collect()
    }

    pub fn referenced_kinds(&self) -> BTreeSet<String> {
        self.when.iter().flat_map(|c| c.atom.kinds()).collect()
    }

    fn render(&self, record: &RegistryRecord) -> String {
        let mut msg = self.message.clone();
        for (id, v) in &record.fields {
            msg = msg.replace(&format!("{{{id}}}"), &v.to_string());
        }
        msg
    }

    fn validate(&self, schema: &RegistrySchema) -> Result<()> {
        let ctx = |e: Error| Error::Config(format!("rule `{}`: {e}", self.id));
        if self.interruptive {
            return Err(Error::Config(format!(
                "rule `{}`: possible-error rules cannot be interruptive",
                self.id
            )));
        }
        if self.when.is_empty() {
            return Err(Error::Config(format!("rule `{}` has no conditions", self.id)));
        }
        for f in self.referenced_fields() {
            schema.field(&f).map_err(ctx)?;
        }
        for k in self.referenced_kinds() {
            schema.event_kind(&k).map_err(ctx)?;
        }
        for c in &self.when {
            if let Atom::Field { field, op, value } = &c.atom {
                let def = schema.field(field).map_err(ctx)?;
                let ok = match &def.kind {
                    FieldType::Number { .. } => value.is_number(),
                    FieldType::Boolean => value.is_boolean() && matches!(op, CmpOp::Eq | CmpOp::Ne),
                    FieldType::Category { values } => value.as_str().is_some_and(|s| values.iter().any(|v| v == s)),
                    FieldType::Text => value.is_string(),
                    FieldType::Date => value
                        .as_str()
                        .is_some_and(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()),
                };
                if !ok {
                    return Err(Error::Config(format!(
                        "rule `{}`: {value} cannot be compared with field `{field}`",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

impl RuleSet {
    /// Parses and checks every field and event reference.
    pub fn from_toml(text: &str, schema: &RegistrySchema) -> Result<Self> {
        let set: Self = toml::from_str(text)?;
        set.validate(schema)?;
        Ok(set)
    }

    pub fn validate(&self, schema: &RegistrySchema) -> Result<()> {
        let mut ids = BTreeSet::new();
        for r in &self.rules {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::Config(format!("duplicate rule id `{}`", r.id)));
            }
            r.validate(schema)?;
        }
        Ok(())
    }

    pub fn fired<'a>(&'a self, record: &'a RegistryRecord) -> impl Iterator<Item = &'a RuleDef> + 'a {
        self.rules.iter().filter(move |r| r.fires(record))
    }
}

/// Every fired rule as a non-interruptive possible error, in rule order.
pub fn evaluate_rules(record: &RegistryRecord, rules: &RuleSet) -> Vec<PossibleError> {
    rules
        .fired(record)
        .map(|r| PossibleError {
            rule: r.id.clone(),
            message: r.render(record),
            likelihood: r.likelihood.clone(),
            interruptive: false,
        })
        .collect()
}
