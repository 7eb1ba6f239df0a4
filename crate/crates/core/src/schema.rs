//! Parameter schemas and the feature vectors built over them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalization::{NormalizedValue, ThresholdSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterKind {
    Quantitative,
    Qualitative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationSign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl CorrelationSign {
    pub fn as_f64(self) -> f64 {
        match self {
            CorrelationSign::Positive => 1.0,
            CorrelationSign::Negative => -1.0,
        }
    }
}

/// Declared co-movement with another parameter ("HR rises with temperature").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub with: String,
    pub sign: CorrelationSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub kind: ParameterKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    /// Position of each category on the normalized scale, aligned with
    /// `categories`. Without it every category reads as normal (2.5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_norms: Option<Vec<f64>>,
    #[serde(default)]
    pub organ_system: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_correlations: Vec<Correlation>,
}

impl ParameterSpec {
    pub fn quantitative(id: &str, unit: &str) -> Self {
        Self {
            id: id.to_string(),
            name: id.to_string(),
            kind: ParameterKind::Quantitative,
            unit: Some(unit.to_string()),
            thresholds: None,
            categories: Vec::new(),
            category_norms: None,
            organ_system: String::new(),
            expected_correlations: Vec::new(),
        }
    }

    pub fn qualitative(id: &str, categories: &[&str]) -> Self {
        Self {
            id: id.to_string(),
            name: id.to_string(),
            kind: ParameterKind::Qualitative,
            unit: None,
            thresholds: None,
            categories: categories.iter().map(|c| c.to_string()).collect(),
            category_norms: None,
            organ_system: String::new(),
            expected_correlations: Vec::new(),
        }
    }

    pub fn with_thresholds(mut self, t: ThresholdSet) -> Self {
        self.thresholds = Some(t);
        self
    }

    pub fn with_organ(mut self, organ: &str) -> Self {
        self.organ_system = organ.to_string();
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn with_correlation(mut self, other: &str, sign: CorrelationSign) -> Self {
        self.expected_correlations.push(Correlation {
            with: other.to_string(),
            sign,
        });
        self
    }

    pub fn display_name(&self) -> &str {
        if self.name.is_empty() {
            &self.id
        } else {
            &self.name
        }
    }

    pub fn is_quantitative(&self) -> bool {
        self.kind == ParameterKind::Quantitative
    }

    pub fn category_index(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Schema(format!("parameter `{}`: {msg}", self.id)));
        if self.id.is_empty() {
            return Err(Error::Schema("parameter with empty id".into()));
        }
        match self.kind {
            ParameterKind::Quantitative => {
                if self.unit.as_deref().unwrap_or("").is_empty() {
                    return fail("quantitative parameters need a unit".into());
                }
                if !self.categories.is_empty() {
                    return fail("quantitative parameters cannot list categories".into());
                }
            }
            ParameterKind::Qualitative => {
                if self.categories.len() < 2 {
                    return fail("qualitative parameters need at least two categories".into());
                }
                if self.thresholds.is_some() {
                    return fail("qualitative parameters cannot carry thresholds".into());
                }
                let mut seen = std::collections::HashSet::new();
                if let Some(dup) = self.categories.iter().find(|c| !seen.insert(c.as_str())) {
                    return fail(format!("duplicate category `{dup}`"));
                }
                if let Some(norms) = &self.category_norms {
                    if norms.len() != self.categories.len() {
                        return fail("category_norms must align with categories".into());
                    }
                    if norms.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return fail("category_norms must be finite and non-negative".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses a textual cell into a value of this parameter's kind.
    pub fn parse_value(&self, raw: &str) -> Result<Value> {
        let raw = raw.trim();
        match self.kind {
            ParameterKind::Quantitative => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Value::Number(v)),
                _ => Err(Error::TypeMismatch {
                    parameter: self.id.clone(),
                    detail: format!("`{raw}` is not a finite number"),
                }),
            },
            ParameterKind::Qualitative => {
                let v = Value::Category(raw.to_string());
                self.check_value(&v)?;
                Ok(v)
            }
        }
    }

    pub fn check_value(&self, value: &Value) -> Result<()> {
        let mismatch = |detail: String| {
            Err(Error::TypeMismatch {
                parameter: self.id.clone(),
                detail,
            })
        };
        match (self.kind, value) {
            (ParameterKind::Quantitative, Value::Number(v)) if v.is_finite() => Ok(()),
            (ParameterKind::Quantitative, Value::Number(v)) => mismatch(format!("{v} is not finite")),
            (ParameterKind::Quantitative, Value::Category(c)) => {
                mismatch(format!("expected a number, got category `{c}`"))
            }
            (ParameterKind::Qualitative, Value::Category(c)) => {
                if self.category_index(c).is_some() {
                    Ok(())
                } else {
                    mismatch(format!(
                        "`{c}` is not one of {:?}",
                        self.categories
                    ))
                }
            }
            (ParameterKind::Qualitative, Value::Number(v)) => {
                mismatch(format!("expected a category, got number {v}"))
            }
        }
    }

    /// Position of `value` on the normalized scale, when one is defined.
    pub fn normalized(&self, value: &Value) -> Option<NormalizedValue> {
        match (self.kind, value) {
            (ParameterKind::Quantitative, Value::Number(v)) => {
                self.thresholds.as_ref().map(|t| t.normalize(*v))
            }
            (ParameterKind::Qualitative, Value::Category(c)) => {
                let idx = self.category_index(c)?;
                let v = match &self.category_norms {
                    Some(norms) => norms[idx],
                    None => 2.5,
                };
                Some(NormalizedValue::new(v))
            }
            _ => None,
        }
    }
}

/// A raw observed value: a real for quantitative parameters, a category
/// label for qualitative ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Category(String),
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            Value::Category(_) => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            Value::Category(c) => Some(c),
            Value::Number(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(v) => write!(f, "{v}"),
            Value::Category(c) => f.write_str(c),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Number(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Category(v.to_string())
    }
}

/// Ordered list of parameters; positions in it are the coordinate indices of
/// every [`FeatureVector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParameterSpec>", into = "Vec<ParameterSpec>")]
pub struct ParameterSchema {
    parameters: Vec<ParameterSpec>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<ParameterSpec>> for ParameterSchema {
    type Error = Error;

    fn try_from(parameters: Vec<ParameterSpec>) -> Result<Self> {
        ParameterSchema::new(parameters)
    }
}

impl From<ParameterSchema> for Vec<ParameterSpec> {
    fn from(s: ParameterSchema) -> Self {
        s.parameters
    }
}

impl ParameterSchema {
    pub fn new(parameters: Vec<ParameterSpec>) -> Result<Self> {
        if parameters.is_empty() {
            return Err(Error::Schema("schema needs at least one parameter".into()));
        }
        let mut index = HashMap::new();
        for (i, p) in parameters.iter().enumerate() {
            p.validate()?;
            if p.id == crate::dataset::LABEL_COLUMN {
                return Err(Error::Schema(format!(
                    "`{}` is reserved for the decision column",
                    p.id
                )));
            }
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate parameter id `{}`", p.id)));
            }
        }
        for p in &parameters {
            for c in &p.expected_correlations {
                if !index.contains_key(&c.with) {
                    return Err(Error::Schema(format!(
                        "parameter `{}` declares a correlation with unknown `{}`",
                        p.id, c.with
                    )));
                }
            }
        }
        Ok(Self { parameters, index })
    }

    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn parameters(&self) -> &[ParameterSpec] {
        &self.parameters
    }

    pub fn get(&self, index: usize) -> &ParameterSpec {
        &self.parameters[index]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownParameter(id.to_string()))
    }

    pub fn spec(&self, id: &str) -> Result<&ParameterSpec> {
        Ok(&self.parameters[self.index_of(id)?])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.parameters.iter().map(|p| p.id.as_str())
    }
}

/// One slot per schema parameter, each present or missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<Option<Value>>);

impl FeatureVector {
    pub fn missing(n: usize) -> Self {
        FeatureVector(vec![None; n])
    }

    pub fn complete(values: Vec<Value>) -> Self {
        FeatureVector(values.into_iter().map(Some).collect())
    }

    pub fn from_slots(slots: Vec<Option<Value>>) -> Self {
        FeatureVector(slots)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Value> {
        self.0.get(i).and_then(Option::as_ref)
    }

    pub fn set(&mut self, i: usize, value: Option<Value>) {
        self.0[i] = value;
    }

    pub fn slots(&self) -> &[Option<Value>] {
        &self.0
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn first_missing(&self) -> Option<usize> {
        self.0.iter().position(Option::is_none)
    }

    /// Checks slot count and value kinds against `schema`.
    pub fn check(&self, schema: &ParameterSchema) -> Result<()> {
        if self.len() != schema.len() {
            return Err(Error::Schema(format!(
                "vector has {} slots, schema has {} parameters",
                self.len(),
                schema.len()
            )));
        }
        for (spec, slot) in schema.parameters().iter().zip(&self.0) {
            if let Some(v) = slot {
                spec.check_value(v)?;
            }
        }
        Ok(())
    }
}

/// The known part of an observation: parameter id to value, any subset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialObservation(BTreeMap<String, Value>);

impl PartialObservation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an observation, rejecting unknown ids and ill-typed values.
    pub fn from_map(schema: &ParameterSchema, known: BTreeMap<String, Value>) -> Result<Self> {
        for (id, v) in &known {
            schema.spec(id)?.check_value(v)?;
        }
        Ok(PartialObservation(known))
    }

    pub fn insert(&mut self, schema: &ParameterSchema, id: &str, value: Value) -> Result<()> {
        schema.spec(id)?.check_value(&value)?;
        self.0.insert(id.to_string(), value);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Value> {
        self.0.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn to_vector(&self, schema: &ParameterSchema) -> Result<FeatureVector> {
        let mut v = FeatureVector::missing(schema.len());
        for (id, value) in &self.0 {
            v.set(schema.index_of(id)?, Some(value.clone()));
        }
        Ok(v)
    }

    /// Per-coordinate known flags in schema order.
    pub fn known_mask(&self, schema: &ParameterSchema) -> Vec<bool> {
        schema.ids().map(|id| self.0.contains_key(id)).collect()
    }
}
