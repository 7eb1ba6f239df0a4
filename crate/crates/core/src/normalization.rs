//! Piecewise-linear normalization of raw parameter values onto a common
//! five-band scale.
//!
//! Four expert thresholds `a1 < a2 < a3 < a4` cut the raw axis into five
//! pieces. Each piece is mapped linearly so that the normalized value lands
//! in `[0,1)`, `[1,2)`, `[2,3)`, `[3,4)` or `[4, inf)`, with the normal range
//! of the parameter always occupying `[2,3)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four strictly increasing, strictly positive thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSet {
    a1: f64,
    a2: f64,
    a3: f64,
    a4: f64,
}

impl ThresholdSet {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self> {
        let all = [a1, a2, a3, a4];
        if all.iter().any(|a| !a.is_finite()) {
            return Err(Error::Thresholds(format!("non-finite threshold in {all:?}")));
        }
        if !(0.0 < a1 && a1 < a2 && a2 < a3 && a3 < a4) {
            return Err(Error::Thresholds(format!(
                "thresholds must satisfy 0 < a1 < a2 < a3 < a4, got {all:?}"
            )));
        }
        Ok(Self { a1, a2, a3, a4 })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match values {
            [a1, a2, a3, a4] => Self::new(*a1, *a2, *a3, *a4),
            _ => Err(Error::Thresholds(format!(
                "expected exactly four thresholds, got {}",
                values.len()
            ))),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    /// Maps a raw value onto the normalized scale. Negative results (only
    /// reachable for `x < 0`) are clamped to zero.
    pub fn normalize(&self, x: f64) -> NormalizedValue {
        let ThresholdSet { a1, a2, a3, a4 } = *self;
        let v = if x < a1 {
            x / a1
        } else if x < a2 {
            1.0 + (x - a1) / (a2 - a1)
        } else if x < a3 {
            2.0 + (x - a2) / (a3 - a2)
        } else if x < a4 {
            3.0 + (x - a3) / (a4 - a3)
        } else {
            3.0 + x / a4
        };
        NormalizedValue(v.max(0.0))
    }
}

impl<'de> Deserialize<'de> for ThresholdSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            List(Vec<f64>),
            Named { a1: f64, a2: f64, a3: f64, a4: f64 },
        }
        let set = match Repr::deserialize(d)? {
            Repr::List(values) => ThresholdSet::from_slice(&values),
            Repr::Named { a1, a2, a3, a4 } => ThresholdSet::new(a1, a2, a3, a4),
        };
        set.map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for ThresholdSet {
    type Err = Error;

    /// Parses `a1,a2,a3,a4`.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Thresholds(format!("`{p}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_slice(&values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedValue(f64);

impl NormalizedValue {
    /// Values below zero are clamped.
    pub fn new(v: f64) -> Self {
        NormalizedValue(v.max(0.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn band(self) -> Band {
        band_of(self)
    }

    /// Distance to the normal band `[2, 3]`.
    pub fn severity_distance(self) -> f64 {
        severity_distance(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    StrongLow,
    AbnormalLow,
    Normal,
    AbnormalHigh,
    StrongHigh,
}

impl Band {
    pub const ALL: [Band; 5] = [
        Band::StrongLow,
        Band::AbnormalLow,
        Band::Normal,
        Band::AbnormalHigh,
        Band::StrongHigh,
    ];

    pub fn is_strong(self) -> bool {
        matches!(self, Band::StrongLow | Band::StrongHigh)
    }

    pub fn is_abnormal(self) -> bool {
        self != Band::Normal
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::StrongLow => "StrongLow",
            Band::AbnormalLow => "AbnormalLow",
            Band::Normal => "Normal",
            Band::AbnormalHigh => "AbnormalHigh",
            Band::StrongHigh => "StrongHigh",
        }
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn normalize(x: f64, thresholds: &ThresholdSet) -> NormalizedValue {
    thresholds.normalize(x)
}

pub fn band_of(v: NormalizedValue) -> Band {
    match v.0 {
        x if x < 1.0 => Band::StrongLow,
        x if x < 2.0 => Band::AbnormalLow,
        x if x < 3.0 => Band::Normal,
        x if x < 4.0 => Band::AbnormalHigh,
        _ => Band::StrongHigh,
    }
}

pub fn severity_distance(v: NormalizedValue) -> f64 {
    let x = v.0;
    (2.0 - x).max(x - 3.0).max(0.0)
}
