//! Alternative detection, typical-value imputation and question selection.

use serde::{Deserialize, Serialize};

use super::attribution::AttributionVector;
use super::sampler::Completion;
use crate::classifier::Classifier;
use crate::dataset::DecisionLabel;
use crate::error::Result;
use crate::normalization::Band;
use crate::schema::{FeatureVector, ParameterSchema, ParameterSpec, Value};

const WEIGHT_EPS: f64 = 1e-12;

/// A plausible conclusion other than the user's, with one completion that
/// the model assigns to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub label: DecisionLabel,
    pub label_index: usize,
    pub exemplar: FeatureVector,
    /// Total completion weight that voted for this label.
    pub weight: f64,
}

/// Predicts every completion and returns the heaviest label that differs
/// from `holmes`; earlier labels in the decision set win ties. The exemplar
/// is the first completion predicted as that label.
pub fn detect_alternative(
    model: &dyn Classifier,
    holmes: usize,
    completions: &[Completion],
) -> Result<Option<Alternative>> {
    let k = model.labels().len();
    let mut weight = vec![0.0; k];
    let mut exemplar: Vec<Option<&FeatureVector>> = vec![None; k];
    for c in completions {
        let p = model.predict(&c.vector)?.label_index;
        weight[p] += c.weight;
        exemplar[p].get_or_insert(&c.vector);
    }
    let mut best: Option<usize> = None;
    for j in (0..k).filter(|&j| j != holmes && exemplar[j].is_some()) {
        if best.is_none_or(|b| weight[j] > weight[b] + WEIGHT_EPS) {
            best = Some(j);
        }
    }
    Ok(best.map(|j| Alternative {
        label: model.labels()[j].clone(),
        label_index: j,
        exemplar: exemplar[j].expect("voted").clone(),
        weight: weight[j],
    }))
}

/// Keeps the known coordinates of `partial` and fills the rest from the
/// typical representative.
pub fn impute_with_typical(partial: &FeatureVector, typical: &FeatureVector) -> FeatureVector {
    FeatureVector::from_slots(
        partial
            .slots()
            .iter()
            .zip(typical.slots())
            .map(|(k, s)| k.clone().or_else(|| s.clone()))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionBranch {
    /// The model disagrees with the user even on the typical-value
    /// imputation; any parameter may be asked about.
    ImputedDisagrees,
    /// Some completion of the unknown parameters leads elsewhere; only
    /// unknown parameters are asked about.
    UnknownCouldChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub parameter: String,
    /// Known parameters whose band disagrees with the typical profile of the
    /// user's decision.
    pub mismatching: Vec<String>,
    pub prompt: String,
    pub branch: QuestionBranch,
}

/// Prompt templates; `{name}`, `{belief}`, `{unit}` and `{direction}` are
/// substituted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuestionTemplates {
    pub quantitative: String,
    pub qualitative: String,
}

impl Default for QuestionTemplates {
    fn default() -> Self {
        Self {
            quantitative: "Are you expecting {name} to remain {direction} ({belief}{unit})?".into(),
            qualitative: "Are you confident that {name} is \"{belief}\"?".into(),
        }
    }
}

/// Up to two decimals, trailing zeros dropped.
fn format_number(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

impl QuestionTemplates {
    pub fn render(&self, spec: &ParameterSpec, belief: Option<&Value>) -> String {
        let belief_text = match belief {
            Some(Value::Number(v)) => format_number(*v),
            Some(v) => v.to_string(),
            None => "unknown".to_string(),
        };
        let template = if spec.is_quantitative() {
            &self.quantitative
        } else {
            &self.qualitative
        };
        let direction = match belief.and_then(|v| spec.normalized(v)).map(|v| v.band()) {
            Some(Band::StrongHigh | Band::AbnormalHigh) => "this high",
            Some(Band::StrongLow | Band::AbnormalLow) => "this low",
            Some(Band::Normal) => "within its normal range",
            None => "at this level",
        };
        let unit = spec.unit.as_deref().map(|u| format!(" {u}")).unwrap_or_default();
        template
            .replace("{name}", spec.display_name())
            .replace("{belief}", &belief_text)
            .replace("{unit}", &unit)
            .replace("{direction}", direction)
    }
}

/// Known parameters that conflict with the user's typical profile: a
/// different band for quantitative parameters (when thresholds exist), a
/// different category for qualitative ones.
pub fn mismatching_parameters(
    schema: &ParameterSchema,
    partial: &FeatureVector,
    typical: &FeatureVector,
) -> Vec<String> {
    (0..schema.len())
        .filter(|&i| {
            let (Some(v), Some(s)) = (partial.get(i), typical.get(i)) else {
                return false;
            };
            let spec = schema.get(i);
            if spec.is_quantitative() {
                match (spec.normalized(v), spec.normalized(s)) {
                    (Some(a), Some(b)) => a.band() != b.band(),
                    _ => false,
                }
            } else {
                v != s
            }
        })
        .map(|i| schema.get(i).id.clone())
        .collect()
}

fn argmax_where(scores: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Everything question selection looks at for one step.
pub struct SelectionInput<'a> {
    pub schema: &'a ParameterSchema,
    pub partial: &'a FeatureVector,
    pub holmes: &'a DecisionLabel,
    pub holmes_typical: &'a FeatureVector,
    pub imputed: &'a FeatureVector,
    pub imputed_prediction: &'a DecisionLabel,
    pub attr_user: &'a AttributionVector,
    pub attr_watson: Option<&'a AttributionVector>,
    /// Parameters already asked about in this session.
    pub asked: &'a [String],
}

/// Picks the parameter to ask about, or `None` when the model agrees with
/// the user and no completion suggests otherwise.
///
/// When the imputed vector is already predicted differently, the question
/// targets the strongest attribution for that conclusion over all
/// parameters. Otherwise, if an alternative exists, it targets the unknown
/// parameter with the largest `|attr_user| + |attr_watson|`. Ties go to the
/// lowest parameter index. Parameters already asked about are skipped
/// while any other candidate remains.
pub fn select_question(input: &SelectionInput<'_>, templates: &QuestionTemplates) -> Option<QuestionSpec> {
    let n = input.schema.len();
    let fresh = |i: &usize| !input.asked.contains(&input.schema.get(*i).id);
    let (index, branch) = if input.imputed_prediction != input.holmes {
        let w = input.attr_watson?;
        let score = |i: usize| (i, w.scores[i]);
        (
            argmax_where((0..n).filter(fresh).map(score)).or_else(|| argmax_where((0..n).map(score)))?,
            QuestionBranch::ImputedDisagrees,
        )
    } else {
        let w = input.attr_watson?;
        let combined = |i: usize| (i, input.attr_user.scores[i].abs() + w.scores[i].abs());
        let unknown = |i: &usize| input.partial.get(*i).is_none();
        let pick = argmax_where((0..n).filter(unknown).filter(fresh).map(combined))
            .or_else(|| argmax_where((0..n).filter(fresh).map(combined)))
            .or_else(|| argmax_where((0..n).map(combined)))?;
        (pick, QuestionBranch::UnknownCouldChange)
    };
    let spec = input.schema.get(index);
    let belief = input.partial.get(index).or_else(|| input.imputed.get(index));
    Some(QuestionSpec {
        parameter: spec.id.clone(),
        mismatching: mismatching_parameters(input.schema, input.partial, input.holmes_typical),
        prompt: templates.render(spec, belief),
        branch,
    })
}
