//! Labeled training data and the empirical marginals drawn from it.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{FeatureVector, ParameterKind, ParameterSchema, Value};

/// Header of the decision column in tabular files.
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionLabel(pub String);

impl DecisionLabel {
    pub fn new(s: impl Into<String>) -> Self {
        DecisionLabel(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DecisionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DecisionLabel {
    fn from(s: &str) -> Self {
        DecisionLabel(s.to_string())
    }
}

/// Complete feature vectors with decision labels. The decision set keeps
/// first-appearance order, which is the tie-break order used everywhere.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    schema: Arc<ParameterSchema>,
    records: Vec<(FeatureVector, usize)>,
    labels: Vec<DecisionLabel>,
}

impl LabeledDataset {
    pub fn new(
        schema: Arc<ParameterSchema>,
        rows: Vec<(FeatureVector, DecisionLabel)>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dataset("dataset has no records".into()));
        }
        let mut labels: Vec<DecisionLabel> = Vec::new();
        let mut lookup: HashMap<DecisionLabel, usize> = HashMap::new();
        let mut records = Vec::with_capacity(rows.len());
        for (i, (x, label)) in rows.into_iter().enumerate() {
            x.check(&schema)?;
            if let Some(j) = x.first_missing() {
                return Err(Error::Cell {
                    row: i + 1,
                    column: schema.get(j).id.clone(),
                    detail: "missing value".into(),
                });
            }
            let idx = *lookup.entry(label.clone()).or_insert_with(|| {
                labels.push(label);
                labels.len() - 1
            });
            records.push((x, idx));
        }
        Ok(Self {
            schema,
            records,
            labels,
        })
    }

    pub fn schema(&self) -> &Arc<ParameterSchema> {
        &self.schema
    }

    /// The decision set `D`, in first-appearance order.
    pub fn labels(&self) -> &[DecisionLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(FeatureVector, usize)] {
        &self.records
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l.as_str() == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn rows_with_label(&self, label_idx: usize) -> impl Iterator<Item = &FeatureVector> {
        self.records
            .iter()
            .filter(move |(_, l)| *l == label_idx)
            .map(|(x, _)| x)
    }
}

/// Reads a delimited text file with a header row of parameter ids plus
/// [`LABEL_COLUMN`], in any column order.
pub fn load_dataset<R: Read>(
    source: R,
    schema: Arc<ParameterSchema>,
    delimiter: u8,
) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Dataset("empty file".into()));
    }
    let label_col = headers
        .iter()
        .position(|h| h == LABEL_COLUMN)
        .ok_or_else(|| Error::Dataset(format!("missing `{LABEL_COLUMN}` column")))?;
    let mut column_of = vec![None; schema.len()];
    for (col, h) in headers.iter().enumerate() {
        if col == label_col {
            continue;
        }
        let idx = schema
            .index_of(h)
            .map_err(|_| Error::Dataset(format!("column `{h}` is not a schema parameter")))?;
        if column_of[idx].replace(col).is_some() {
            return Err(Error::Dataset(format!("column `{h}` appears twice")));
        }
    }
    if let Some(missing) = column_of.iter().position(Option::is_none) {
        return Err(Error::Dataset(format!(
            "no column for parameter `{}`",
            schema.get(missing).id
        )));
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let mut values = Vec::with_capacity(schema.len());
        for (p, col) in column_of.iter().enumerate() {
            let spec = schema.get(p);
            let cell = record.get(col.unwrap()).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Cell {
                    row,
                    column: spec.id.clone(),
                    detail: "empty cell".into(),
                });
            }
            let v = spec.parse_value(cell).map_err(|e| Error::Cell {
                row,
                column: spec.id.clone(),
                detail: e.to_string(),
            })?;
            values.push(v);
        }
        let label = record.get(label_col).unwrap_or("");
        if label.is_empty() {
            return Err(Error::Cell {
                row,
                column: LABEL_COLUMN.into(),
                detail: "empty label".into(),
            });
        }
        rows.push((FeatureVector::complete(values), DecisionLabel::new(label)));
    }
    if rows.is_empty() {
        return Err(Error::Dataset("empty file".into()));
    }
    LabeledDataset::new(schema, rows)
}

/// Sampling distribution of one parameter as observed in the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmpiricalMarginal {
    /// The observed multiset, sorted ascending.
    Quantitative { values: Vec<f64> },
    /// Category counts aligned with the parameter's category list.
    Qualitative {
        categories: Vec<String>,
        counts: Vec<usize>,
    },
}

impl EmpiricalMarginal {
    pub fn total(&self) -> usize {
        match self {
            EmpiricalMarginal::Quantitative { values } => values.len(),
            EmpiricalMarginal::Qualitative { counts, .. } => counts.iter().sum(),
        }
    }

    /// Uniform draw from the observed records' values.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            EmpiricalMarginal::Quantitative { values } => {
                Value::Number(values[rng.gen_range(0..values.len())])
            }
            EmpiricalMarginal::Qualitative { categories, counts } => {
                let mut r = rng.gen_range(0..self.total());
                for (c, &n) in categories.iter().zip(counts) {
                    if r < n {
                        return Value::Category(c.clone());
                    }
                    r -= n;
                }
                unreachable!("draw exceeds total count")
            }
        }
    }

    /// Distinct observed values with their probabilities, ascending for
    /// numbers and in category order for categories.
    pub fn support(&self) -> Vec<(Value, f64)> {
        let total = self.total() as f64;
        match self {
            EmpiricalMarginal::Quantitative { values } => {
                let mut out: Vec<(Value, f64)> = Vec::new();
                let mut i = 0;
                while i < values.len() {
                    let v = values[i];
                    let j = values[i..].iter().take_while(|&&w| w == v).count();
                    out.push((Value::Number(v), j as f64 / total));
                    i += j;
                }
                out
            }
            EmpiricalMarginal::Qualitative { categories, counts } => categories
                .iter()
                .zip(counts)
                .filter(|(_, &n)| n > 0)
                .map(|(c, &n)| (Value::Category(c.clone()), n as f64 / total))
                .collect(),
        }
    }

    pub fn probability(&self, value: &Value) -> f64 {
        let total = self.total() as f64;
        match (self, value) {
            (EmpiricalMarginal::Quantitative { values }, Value::Number(v)) => {
                values.iter().filter(|w| *w == v).count() as f64 / total
            }
            (EmpiricalMarginal::Qualitative { categories, counts }, Value::Category(c)) => {
                categories
                    .iter()
                    .position(|k| k == c)
                    .map_or(0.0, |i| counts[i] as f64 / total)
            }
            _ => 0.0,
        }
    }

    /// Membership in the observed support: within min..=max for numbers, an
    /// observed category otherwise.
    pub fn in_support(&self, value: &Value) -> bool {
        match (self, value) {
            (EmpiricalMarginal::Quantitative { values }, Value::Number(v)) => {
                values.first().is_some_and(|lo| lo <= v) && values.last().is_some_and(|hi| v <= hi)
            }
            (EmpiricalMarginal::Qualitative { .. }, Value::Category(_)) => {
                self.probability(value) > 0.0
            }
            _ => false,
        }
    }
}

pub fn empirical_marginal(dataset: &LabeledDataset, parameter: &str) -> Result<EmpiricalMarginal> {
    let idx = dataset.schema().index_of(parameter)?;
    Ok(marginal_at(dataset, idx))
}

fn marginal_at(dataset: &LabeledDataset, idx: usize) -> EmpiricalMarginal {
    let spec = dataset.schema().get(idx);
    let column = dataset.records().iter().map(|(x, _)| x.get(idx).expect("complete"));
    match spec.kind {
        ParameterKind::Quantitative => {
            let mut values: Vec<f64> = column.filter_map(Value::as_number).collect();
            values.sort_by(f64::total_cmp);
            EmpiricalMarginal::Quantitative { values }
        }
        ParameterKind::Qualitative => {
            let mut counts = vec![0; spec.categories.len()];
            for v in column {
                if let Some(i) = v.as_category().and_then(|c| spec.category_index(c)) {
                    counts[i] += 1;
                }
            }
            EmpiricalMarginal::Qualitative {
                categories: spec.categories.clone(),
                counts,
            }
        }
    }
}

/// One marginal per schema parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Marginals(Vec<EmpiricalMarginal>);

impl Marginals {
    pub fn from_dataset(dataset: &LabeledDataset) -> Self {
        Marginals((0..dataset.schema().len()).map(|i| marginal_at(dataset, i)).collect())
    }

    pub fn new(marginals: Vec<EmpiricalMarginal>) -> Self {
        Marginals(marginals)
    }

    pub fn get(&self, idx: usize) -> &EmpiricalMarginal {
        &self.0[idx]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether every present coordinate of `x` lies in the observed support.
    pub fn contains(&self, x: &FeatureVector) -> bool {
        x.slots()
            .iter()
            .zip(&self.0)
            .all(|(slot, m)| slot.as_ref().is_none_or(|v| m.in_support(v)))
    }
}
