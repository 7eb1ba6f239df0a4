//! Typical representatives: one prototype complete vector per decision.
//!
//! Builders are strategies registered by name (`centroid`, `medianwise`,
//! `expert`) so the method can be chosen from config.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{DecisionLabel, LabeledDataset};
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};
use crate::schema::{FeatureVector, ParameterKind, ParameterSchema, PartialObservation, Value};

pub trait RepresentativeBuilder: Named + Send + Sync {
    fn build(&self, dataset: &LabeledDataset, label: &DecisionLabel) -> Result<FeatureVector>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalRepresentative {
    pub label: DecisionLabel,
    pub vector: FeatureVector,
    pub method: String,
}

pub fn typical_representative(
    dataset: &LabeledDataset,
    label: &DecisionLabel,
    builder: &dyn RepresentativeBuilder,
) -> Result<TypicalRepresentative> {
    let vector = builder.build(dataset, label)?;
    if let Some(j) = vector.first_missing() {
        return Err(Error::MissingValue(dataset.schema().get(j).id.clone()));
    }
    Ok(TypicalRepresentative {
        label: label.clone(),
        vector,
        method: builder.name().to_string(),
    })
}

/// Representatives for every decision in the dataset.
pub fn representatives_for_all(
    dataset: &LabeledDataset,
    builder: &dyn RepresentativeBuilder,
) -> Result<BTreeMap<DecisionLabel, TypicalRepresentative>> {
    dataset
        .labels()
        .iter()
        .map(|l| Ok((l.clone(), typical_representative(dataset, l, builder)?)))
        .collect()
}

fn column<'a>(rows: &'a [&'a FeatureVector], p: usize) -> impl Iterator<Item = &'a Value> + 'a {
    rows.iter().map(move |x| x.get(p).expect("complete"))
}

fn label_rows<'a>(dataset: &'a LabeledDataset, label: &DecisionLabel) -> Result<Vec<&'a FeatureVector>> {
    let idx = dataset.label_index(label.as_str())?;
    Ok(dataset.rows_with_label(idx).collect())
}

/// Most frequent category; earlier categories win ties.
fn mode(schema: &ParameterSchema, p: usize, values: impl Iterator<Item = Value>) -> Value {
    let spec = schema.get(p);
    let mut counts = vec![0usize; spec.categories.len()];
    for v in values {
        if let Some(i) = v.as_category().and_then(|c| spec.category_index(c)) {
            counts[i] += 1;
        }
    }
    let mut best = 0;
    for i in 1..counts.len() {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    Value::Category(spec.categories[best].clone())
}

fn summarize(
    dataset: &LabeledDataset,
    label: &DecisionLabel,
    numeric: impl Fn(&mut Vec<f64>) -> f64,
) -> Result<FeatureVector> {
    let rows = label_rows(dataset, label)?;
    let schema = dataset.schema();
    let values = (0..schema.len())
        .map(|p| match schema.get(p).kind {
            ParameterKind::Quantitative => {
                let mut xs: Vec<f64> = column(&rows, p).filter_map(Value::as_number).collect();
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // Rounding in the mean can step one ulp outside the range.
                Value::Number(numeric(&mut xs).clamp(lo, hi))
            }
            ParameterKind::Qualitative => mode(schema, p, column(&rows, p).cloned()),
        })
        .collect();
    Ok(FeatureVector::complete(values))
}

/// Per-coordinate mean; mode for qualitative coordinates.
pub struct Centroid;

impl Named for Centroid {
    fn name(&self) -> &str {
        "centroid"
    }
}

impl RepresentativeBuilder for Centroid {
    fn build(&self, dataset: &LabeledDataset, label: &DecisionLabel) -> Result<FeatureVector> {
        summarize(dataset, label, |xs| xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Per-coordinate median; mode for qualitative coordinates.
pub struct Medianwise;

impl Named for Medianwise {
    fn name(&self) -> &str {
        "medianwise"
    }
}

impl RepresentativeBuilder for Medianwise {
    fn build(&self, dataset: &LabeledDataset, label: &DecisionLabel) -> Result<FeatureVector> {
        summarize(dataset, label, |xs| {
            xs.sort_by(f64::total_cmp);
            let n = xs.len();
            if n % 2 == 1 {
                xs[n / 2]
            } else {
                (xs[n / 2 - 1] + xs[n / 2]) / 2.0
            }
        })
    }
}

/// Vectors supplied by experts in config, used when no training sample
/// exists for a decision.
#[derive(Debug, Clone, Default)]
pub struct Expert {
    vectors: BTreeMap<DecisionLabel, FeatureVector>,
}

impl Expert {
    pub fn from_config(
        schema: &ParameterSchema,
        entries: &BTreeMap<String, BTreeMap<String, Value>>,
    ) -> Result<Self> {
        let mut vectors = BTreeMap::new();
        for (label, values) in entries {
            let obs = PartialObservation::from_map(schema, values.clone())?;
            let v = obs.to_vector(schema)?;
            if let Some(j) = v.first_missing() {
                return Err(Error::Config(format!(
                    "expert representative for `{label}` lacks `{}`",
                    schema.get(j).id
                )));
            }
            vectors.insert(DecisionLabel::new(label.clone()), v);
        }
        Ok(Self { vectors })
    }
}

impl Named for Expert {
    fn name(&self) -> &str {
        "expert"
    }
}

impl RepresentativeBuilder for Expert {
    fn build(&self, _dataset: &LabeledDataset, label: &DecisionLabel) -> Result<FeatureVector> {
        self.vectors
            .get(label)
            .cloned()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }
}

pub fn representative_registry(expert: Option<Expert>) -> Registry<dyn RepresentativeBuilder> {
    let mut reg: Registry<dyn RepresentativeBuilder> = Registry::new("representative method");
    reg.register(Arc::new(Centroid)).register(Arc::new(Medianwise));
    reg.register(Arc::new(expert.unwrap_or_default()));
    reg
}
