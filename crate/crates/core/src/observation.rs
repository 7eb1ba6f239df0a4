//! Per-patient observation plans and validation of incoming entries.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalization::Band;
use crate::schema::{ParameterSchema, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub parameter: String,
    /// Planned time between measurements.
    pub interval_minutes: f64,
}

/// Which parameters are measured for a patient, and how often.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPlan {
    pub patient: String,
    pub entries: Vec<PlanEntry>,
}

impl ObservationPlan {
    pub fn new(patient: &str, entries: Vec<PlanEntry>, schema: &ParameterSchema) -> Result<Self> {
        for e in &entries {
            schema.index_of(&e.parameter)?;
            if !(e.interval_minutes.is_finite() && e.interval_minutes > 0.0) {
                return Err(Error::Config(format!(
                    "plan interval for `{}` must be positive",
                    e.parameter
                )));
            }
        }
        Ok(Self {
            patient: patient.to_string(),
            entries,
        })
    }

    pub fn entry(&self, parameter: &str) -> Option<&PlanEntry> {
        self.entries.iter().find(|e| e.parameter == parameter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum EntryWarning {
    /// The value falls in a strong-deviation band; it is kept but should be
    /// double-checked.
    ExtremeValue { band: Band },
    /// More than twice the planned interval passed since the previous entry.
    Stale {
        gap_minutes: f64,
        planned_minutes: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryCheck {
    pub accepted: bool,
    pub warnings: Vec<EntryWarning>,
}

/// Type- and range-checks one entry against the plan. Ill-typed values are
/// rejected with an error; everything else is accepted, possibly with
/// warnings.
pub fn validate_entry(
    plan: &ObservationPlan,
    schema: &ParameterSchema,
    parameter: &str,
    value: &Value,
    timestamp: DateTime<Utc>,
    previous: Option<DateTime<Utc>>,
) -> Result<EntryCheck> {
    let entry = plan.entry(parameter).ok_or_else(|| {
        Error::Config(format!(
            "`{parameter}` is not in the observation plan of `{}`",
            plan.patient
        ))
    })?;
    let spec = schema.spec(parameter)?;
    spec.check_value(value)?;
    let mut warnings = Vec::new();
    if let Some(band) = spec.normalized(value).map(|v| v.band()) {
        if band.is_strong() {
            warnings.push(EntryWarning::ExtremeValue { band });
        }
    }
    if let Some(prev) = previous {
        let gap_minutes = (timestamp - prev).num_milliseconds() as f64 / 60_000.0;
        if gap_minutes > 2.0 * entry.interval_minutes {
            warnings.push(EntryWarning::Stale {
                gap_minutes,
                planned_minutes: entry.interval_minutes,
            });
        }
    }
    Ok(EntryCheck {
        accepted: true,
        warnings,
    })
}
