//! Ward-level assessment: physiological severity, the controllability (N1),
//! unfavorable-dynamics (N2) and invasiveness (N3) indexes, and the leader
//! board that orders patients by them.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{ParameterSchema, PartialObservation};

/// `I = 1 + sum of severity distances`, so `ln I >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityScore {
    pub value: f64,
    pub at: DateTime<Utc>,
}

pub fn severity(schema: &ParameterSchema, snapshot: &PartialObservation, at: DateTime<Utc>) -> Result<SeverityScore> {
    if snapshot.is_empty() {
        return Err(Error::MissingValue("severity needs at least one parameter value".into()));
    }
    let mut value = 1.0;
    for (id, v) in snapshot.iter() {
        if let Some(n) = schema.spec(id)?.normalized(v) {
            value += n.severity_distance();
        }
    }
    Ok(SeverityScore { value, at })
}

/// `(I_t - I_prev) * ln I_prev`.
pub fn n2(i_t: f64, i_prev: f64) -> Result<f64> {
    if !(i_t >= 1.0 && i_prev >= 1.0) {
        return Err(Error::Config(format!(
            "severity scores must be at least 1, got {i_t} and {i_prev}"
        )));
    }
    Ok((i_t - i_prev) * i_prev.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Improve,
    Stable,
    Worsen,
}

impl Direction {
    /// Direction of a severity change; changes within `tolerance` are stable.
    pub fn of_change(delta: f64, tolerance: f64) -> Self {
        if delta < -tolerance {
            Direction::Improve
        } else if delta > tolerance {
            Direction::Worsen
        } else {
            Direction::Stable
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrognosisRecord {
    pub author: String,
    pub made_at: DateTime<Utc>,
    pub horizon: DateTime<Utc>,
    pub predicted: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leading_syndrome: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

impl PrognosisRecord {
    pub fn new(author: &str, made_at: DateTime<Utc>, horizon: DateTime<Utc>, predicted: Direction) -> Result<Self> {
        if horizon <= made_at {
            return Err(Error::Config("prognosis horizon must follow its creation time".into()));
        }
        Ok(Self {
            author: author.to_string(),
            made_at,
            horizon,
            predicted,
            leading_syndrome: None,
            explanation: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub id: String,
    pub start: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<DateTime<Utc>>,
}

impl Intervention {
    pub fn active_at(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && self.end.is_none_or(|e| e > t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentRecord {
    pub patient: String,
    pub interventions: Vec<Intervention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for CompositeWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WardConfig {
    /// Invasiveness weight per intervention id.
    pub interventions: BTreeMap<String, f64>,
    pub weights: CompositeWeights,
    /// |change in I| at or below which the realized course counts as stable.
    pub stable_tolerance: f64,
}

impl Default for WardConfig {
    fn default() -> Self {
        Self {
            interventions: BTreeMap::new(),
            weights: CompositeWeights::default(),
            stable_tolerance: 0.25,
        }
    }
}

impl WardConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some((id, _)) = self.interventions.iter().find(|(_, w)| !(**w >= 0.0)) {
            return Err(Error::Config(format!("intervention `{id}` has a negative weight")));
        }
        let w = self.weights;
        if [w.w1, w.w2, w.w3].iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Config("composite weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// A timed snapshot of one patient's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub at: DateTime<Utc>,
    pub values: PartialObservation,
}

/// Subscores of N1, each in 0..=3.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub f1: u8,
    pub f2: u8,
    pub f3: u8,
}

/// F1: discrepancy between the latest prognosis due in `(t-1, t]` and the
/// realized course. F2: parameters newly in a strong band. F3: active
/// treatment-contradiction flags.
pub fn f_components(
    schema: &ParameterSchema,
    prognoses: &[PrognosisRecord],
    prev: &Snapshot,
    cur: &Snapshot,
    coordination_flags: usize,
    cfg: &WardConfig,
) -> Result<Components> {
    let i_prev = severity(schema, &prev.values, prev.at)?.value;
    let i_cur = severity(schema, &cur.values, cur.at)?.value;
    let delta = i_cur - i_prev;
    let due = prognoses
        .iter()
        .filter(|p| p.horizon > prev.at && p.horizon <= cur.at)
        .max_by_key(|p| (p.made_at, p.horizon));
    let f1 = match due {
        Some(p) if p.predicted != Direction::of_change(delta, cfg.stable_tolerance) => {
            (1 + delta.abs().floor() as u64).min(3) as u8
        }
        _ => 0,
    };

    let strong = |snap: &Snapshot, id: &str| -> Result<bool> {
        Ok(match snap.values.get(id) {
            Some(v) => schema.spec(id)?.normalized(v).is_some_and(|n| n.band().is_strong()),
            None => false,
        })
    };
    let mut entered = 0usize;
    for (id, _) in cur.values.iter() {
        if strong(cur, id)? && !strong(prev, id)? {
            entered += 1;
        }
    }
    Ok(Components {
        f1,
        f2: entered.min(3) as u8,
        f3: coordination_flags.min(3) as u8,
    })
}

pub fn n1(c: Components) -> f64 {
    f64::from(c.f1.min(3) + c.f2.min(3) + c.f3.min(3))
}

/// Sum of invasiveness weights of the interventions active at `t`.
pub fn n3(treatment: &TreatmentRecord, weights: &BTreeMap<String, f64>, t: DateTime<Utc>) -> Result<f64> {
    let mut total = 0.0;
    for i in &treatment.interventions {
        let w = weights
            .get(&i.id)
            .ok_or_else(|| Error::UnknownIntervention(i.id.clone()))?;
        if i.active_at(t) {
            total += w;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardIndices {
    pub patient: String,
    pub t: DateTime<Utc>,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub components: Components,
}

/// Everything needed to score one patient at `cur.at`.
pub struct PatientState<'a> {
    pub patient: &'a str,
    pub prev: &'a Snapshot,
    pub cur: &'a Snapshot,
    pub prognoses: &'a [PrognosisRecord],
    pub treatment: &'a TreatmentRecord,
    pub coordination_flags: usize,
}

pub fn ward_indices(schema: &ParameterSchema, state: &PatientState<'_>, cfg: &WardConfig) -> Result<WardIndices> {
    let i_prev = severity(schema, &state.prev.values, state.prev.at)?.value;
    let i_cur = severity(schema, &state.cur.values, state.cur.at)?.value;
    let components = f_components(
        schema,
        state.prognoses,
        state.prev,
        state.cur,
        state.coordination_flags,
        cfg,
    )?;
    Ok(WardIndices {
        patient: state.patient.to_string(),
        t: state.cur.at,
        n1: n1(components),
        n2: n2(i_cur, i_prev)?,
        n3: n3(state.treatment, &cfg.interventions, state.cur.at)?,
        components,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderEntry {
    pub patient: String,
    pub composite: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

/// Orders patients by `w1*N1 + w2*N2 + w3*N3`, highest first. `indices` must
/// be in admission order, which breaks ties.
pub fn rank_ward(indices: &[WardIndices], weights: CompositeWeights) -> Result<Vec<LeaderEntry>> {
    if [weights.w1, weights.w2, weights.w3].iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Config("composite weights must be non-negative".into()));
    }
    let mut board: Vec<LeaderEntry> = indices
        .iter()
        .map(|w| LeaderEntry {
            patient: w.patient.clone(),
            composite: weights.w1 * w.n1 + weights.w2 * w.n2 + weights.w3 * w.n3,
            n1: w.n1,
            n2: w.n2,
            n3: w.n3,
        })
        .collect();
    board.sort_by(|a, b| b.composite.total_cmp(&a.composite));
    Ok(board)
}
