//! Attention groups, importance ranks and the compact display selection for
//! a patient's monitored parameters, plus detection of unusual co-movement.
//!
//! Groups:
//! 1. abnormal value in an organ system outside the affected set;
//! 2. trend opposite to the overall severity trend;
//! 3. large jump from baseline within the window;
//! 4. strong-band value, or a run of `consecutive_abnormal` abnormal samples;
//! 5. viewed by the user in past cases with the same leading label.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalization::{Band, NormalizedValue};
use crate::schema::{ParameterSchema, ParameterSpec, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionConfig {
    pub window_hours: f64,
    /// Minimum |slope| (normalized units per hour) for a trend to count.
    pub trend_slope: f64,
    /// Minimum |change from baseline| for group 3.
    pub jump: f64,
    pub consecutive_abnormal: usize,
    /// |slope| above which a parameter earns the extreme-dynamics point.
    pub extreme_slope: f64,
    /// Minimum |change| of both parameters before a pair can be unusual.
    pub pair_delta: f64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            window_hours: 24.0,
            trend_slope: 0.05,
            jump: 1.0,
            consecutive_abnormal: 3,
            extreme_slope: 0.5,
            pair_delta: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSeries {
    pub parameter: String,
    pub samples: Vec<(DateTime<Utc>, Value)>,
}

impl ParameterSeries {
    pub fn new(parameter: &str, samples: Vec<(DateTime<Utc>, Value)>) -> Result<Self> {
        if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config(format!(
                "samples of `{parameter}` must have strictly increasing timestamps"
            )));
        }
        Ok(Self {
            parameter: parameter.to_string(),
            samples,
        })
    }
}

/// Window statistics of one series on the normalized scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub parameter: String,
    pub current: Option<NormalizedValue>,
    /// Least-squares slope per hour over the window; 0 with fewer than two
    /// samples.
    pub slope: f64,
    /// Last minus first normalized value in the window.
    pub delta: f64,
    pub window_len: usize,
    pub max_jump: f64,
    pub longest_abnormal_run: usize,
}

impl SeriesStats {
    pub fn band(&self) -> Option<Band> {
        self.current.map(NormalizedValue::band)
    }

    pub fn severity_distance(&self) -> f64 {
        self.current.map_or(0.0, NormalizedValue::severity_distance)
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
}

/// Normalizes the samples inside the window ending at the latest sample.
/// `baseline` defaults to the first sample in the window.
pub fn series_stats(
    spec: &ParameterSpec,
    series: &ParameterSeries,
    baseline: Option<&Value>,
    cfg: &AttentionConfig,
) -> SeriesStats {
    let mut stats = SeriesStats {
        parameter: series.parameter.clone(),
        current: None,
        slope: 0.0,
        delta: 0.0,
        window_len: 0,
        max_jump: 0.0,
        longest_abnormal_run: 0,
    };
    let Some(&(latest, _)) = series.samples.last() else {
        return stats;
    };
    let start = latest - Duration::milliseconds((cfg.window_hours * 3_600_000.0) as i64);
    let window: Vec<(f64, NormalizedValue)> = series
        .samples
        .iter()
        .filter(|(t, _)| *t >= start)
        .filter_map(|(t, v)| {
            let hours = (*t - start).num_milliseconds() as f64 / 3_600_000.0;
            spec.normalized(v).map(|n| (hours, n))
        })
        .collect();
    let Some(&(_, first)) = window.first() else {
        return stats;
    };
    let last = window.last().expect("non-empty").1;
    let base = baseline.and_then(|b| spec.normalized(b)).unwrap_or(first);
    let points: Vec<(f64, f64)> = window.iter().map(|(h, n)| (*h, n.get())).collect();

    let mut run = 0;
    for (_, n) in &window {
        run = if n.band().is_abnormal() { run + 1 } else { 0 };
        stats.longest_abnormal_run = stats.longest_abnormal_run.max(run);
    }
    stats.current = Some(last);
    stats.slope = least_squares_slope(&points);
    stats.delta = last.get() - first.get();
    stats.window_len = window.len();
    stats.max_jump = window
        .iter()
        .map(|(_, n)| (n.get() - base.get()).abs())
        .fold(0.0, f64::max);
    stats
}

/// A past screen the user opened, tagged with the leading label of its case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub context: String,
    pub parameters: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupContext {
    pub affected_organs: BTreeSet<String>,
    /// Signed slope of the overall severity; positive means worsening.
    pub severity_trend: f64,
    pub baseline: BTreeMap<String, Value>,
    pub view_history: Vec<ViewRecord>,
    pub current_context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMembership {
    pub parameter: String,
    pub groups: BTreeSet<u8>,
}

fn groups_for(spec: &ParameterSpec, s: &SeriesStats, ctx: &GroupContext, cfg: &AttentionConfig) -> BTreeSet<u8> {
    let mut g = BTreeSet::new();
    let band = s.band();
    if band.is_some_and(Band::is_abnormal) && !ctx.affected_organs.contains(&spec.organ_system) {
        g.insert(1);
    }
    if s.slope.abs() > cfg.trend_slope
        && ctx.severity_trend.abs() > cfg.trend_slope
        && s.slope.signum() != ctx.severity_trend.signum()
    {
        g.insert(2);
    }
    if s.max_jump > cfg.jump {
        g.insert(3);
    }
    if band.is_some_and(Band::is_strong) || s.longest_abnormal_run >= cfg.consecutive_abnormal {
        g.insert(4);
    }
    if let Some(current) = &ctx.current_context {
        if ctx
            .view_history
            .iter()
            .any(|v| &v.context == current && v.parameters.contains(&spec.id))
        {
            g.insert(5);
        }
    }
    g
}

/// Group memberships and window statistics for every series, in input order.
pub fn assign_groups(
    schema: &ParameterSchema,
    series: &[ParameterSeries],
    ctx: &GroupContext,
    cfg: &AttentionConfig,
) -> Result<Vec<(GroupMembership, SeriesStats)>> {
    series
        .iter()
        .map(|s| {
            let spec = schema.spec(&s.parameter)?;
            let stats = series_stats(spec, s, ctx.baseline.get(&s.parameter), cfg);
            let groups = groups_for(spec, &stats, ctx, cfg);
            Ok((
                GroupMembership {
                    parameter: s.parameter.clone(),
                    groups,
                },
                stats,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionRank {
    pub parameter: String,
    /// 1 to 7, 7 most important.
    pub rank: u8,
    pub groups: BTreeSet<u8>,
}

/// What the rank score looks at besides group membership.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Magnitude {
    pub severity_distance: f64,
    pub strong: bool,
    pub slope: f64,
}

impl From<&SeriesStats> for Magnitude {
    fn from(s: &SeriesStats) -> Self {
        Self {
            severity_distance: s.severity_distance(),
            strong: s.band().is_some_and(Band::is_strong),
            slope: s.slope,
        }
    }
}

/// `1 + #groups + [outside normal band] + [strong band] + [|slope| > extreme]`,
/// clamped to 1..=7.
pub fn rank_score(groups: &BTreeSet<u8>, m: &Magnitude, cfg: &AttentionConfig) -> u8 {
    let score = 1
        + groups.len()
        + usize::from(m.severity_distance > 0.0)
        + usize::from(m.strong)
        + usize::from(m.slope.abs() > cfg.extreme_slope);
    score.clamp(1, 7) as u8
}

pub fn rank_attention(
    memberships: &[GroupMembership],
    magnitudes: &[Magnitude],
    cfg: &AttentionConfig,
) -> Vec<AttentionRank> {
    memberships
        .iter()
        .zip(magnitudes)
        .map(|(m, mag)| AttentionRank {
            parameter: m.parameter.clone(),
            rank: rank_score(&m.groups, mag, cfg),
            groups: m.groups.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplaySet {
    pub quantitative: Vec<String>,
    pub qualitative: Vec<String>,
}

pub const DISPLAY_QUANTITATIVE: usize = 4;
pub const DISPLAY_QUALITATIVE: usize = 2;

/// Top four quantitative and top two qualitative parameters. Equal ranks go
/// to the smallest group number held, then to the schema order.
pub fn select_display(ranks: &[AttentionRank], schema: &ParameterSchema) -> Result<DisplaySet> {
    let mut keyed = ranks
        .iter()
        .map(|r| {
            let idx = schema.index_of(&r.parameter)?;
            let first_group = r.groups.iter().next().copied().unwrap_or(u8::MAX);
            Ok((std::cmp::Reverse(r.rank), first_group, idx, r))
        })
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by_key(|k| (k.0, k.1, k.2));
    let mut out = DisplaySet::default();
    for (_, _, idx, r) in keyed {
        let (list, cap) = if schema.get(idx).is_quantitative() {
            (&mut out.quantitative, DISPLAY_QUANTITATIVE)
        } else {
            (&mut out.qualitative, DISPLAY_QUALITATIVE)
        };
        if list.len() < cap {
            list.push(r.parameter.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnusualPair {
    pub first: String,
    pub second: String,
    pub first_delta: f64,
    pub second_delta: f64,
    /// +1 for expected co-movement, -1 for expected opposition.
    pub expected_sign: f64,
}

/// Flags declared correlations whose observed co-movement over the window
/// has the wrong sign while both changes exceed `pair_delta`.
pub fn detect_unusual_pairs(
    schema: &ParameterSchema,
    series: &[ParameterSeries],
    cfg: &AttentionConfig,
) -> Result<Vec<UnusualPair>> {
    let mut stats = BTreeMap::new();
    for s in series {
        let spec = schema.spec(&s.parameter)?;
        stats.insert(s.parameter.as_str(), series_stats(spec, s, None, cfg));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for spec in schema.parameters() {
        for c in &spec.expected_correlations {
            let key = if spec.id <= c.with {
                (spec.id.clone(), c.with.clone())
            } else {
                (c.with.clone(), spec.id.clone())
            };
            if !seen.insert(key) {
                continue;
            }
            let (Some(p), Some(q)) = (stats.get(spec.id.as_str()), stats.get(c.with.as_str())) else {
                continue;
            };
            if p.window_len < 2 || q.window_len < 2 {
                continue;
            }
            if p.delta.abs() <= cfg.pair_delta || q.delta.abs() <= cfg.pair_delta {
                continue;
            }
            let expected = c.sign.as_f64();
            if p.delta.signum() * q.delta.signum() != expected {
                out.push(UnusualPair {
                    first: spec.id.clone(),
                    second: c.with.clone(),
                    first_delta: p.delta,
                    second_delta: q.delta,
                    expected_sign: expected,
                });
            }
        }
    }
    Ok(out)
}
