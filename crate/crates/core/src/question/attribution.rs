//! Model-agnostic local attribution.
//!
//! The default `occlusion` method scores coordinate `j` as the drop in the
//! target score when `j` is replaced by a draw from its marginal:
//! `score(x) - E[score(x with x_j ~ marginal_j)]`. For marginals with a small
//! support the expectation is computed exactly; otherwise it is estimated
//! from `resamples` seeded draws. `occlusion-sampled` always resamples.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sampler::SamplerConfig;
use crate::classifier::Classifier;
use crate::dataset::{DecisionLabel, EmpiricalMarginal, Marginals};
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};
use crate::schema::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub target: DecisionLabel,
    pub base: FeatureVector,
    /// One significance per schema parameter.
    pub scores: Vec<f64>,
}

pub trait Attributor: Named + Send + Sync {
    fn attribute(
        &self,
        model: &dyn Classifier,
        x: &FeatureVector,
        target: usize,
        marginals: &Marginals,
        cfg: &SamplerConfig,
    ) -> Result<AttributionVector>;
}

fn target_score(model: &dyn Classifier, x: &FeatureVector, target: usize) -> Result<f64> {
    Ok(model.scores(x)?[target])
}

fn exact_expectation(
    model: &dyn Classifier,
    x: &FeatureVector,
    j: usize,
    target: usize,
    marginal: &EmpiricalMarginal,
) -> Result<f64> {
    let mut probe = x.clone();
    let mut acc = 0.0;
    for (v, p) in marginal.support() {
        probe.set(j, Some(v));
        acc += p * target_score(model, &probe, target)?;
    }
    Ok(acc)
}

fn sampled_expectation(
    model: &dyn Classifier,
    x: &FeatureVector,
    j: usize,
    target: usize,
    marginal: &EmpiricalMarginal,
    cfg: &SamplerConfig,
) -> Result<f64> {
    let mut rng = cfg.rng(1 + j as u64);
    let draws = cfg.resamples.max(1);
    let mut probe = x.clone();
    let mut acc = 0.0;
    for _ in 0..draws {
        probe.set(j, Some(marginal.sample(&mut rng)));
        acc += target_score(model, &probe, target)?;
    }
    Ok(acc / draws as f64)
}

fn occlude(
    model: &dyn Classifier,
    x: &FeatureVector,
    target: usize,
    marginals: &Marginals,
    mut expectation: impl FnMut(usize, &EmpiricalMarginal) -> Result<f64>,
) -> Result<AttributionVector> {
    if let Some(j) = x.first_missing() {
        return Err(Error::MissingValue(format!("coordinate {j}")));
    }
    let labels = model.labels();
    if target >= labels.len() {
        return Err(Error::UnknownLabel(format!("index {target}")));
    }
    let base = target_score(model, x, target)?;
    let scores = (0..x.len())
        .map(|j| Ok(base - expectation(j, marginals.get(j))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(AttributionVector {
        target: labels[target].clone(),
        base: x.clone(),
        scores,
    })
}

pub struct Occlusion;

impl Named for Occlusion {
    fn name(&self) -> &str {
        "occlusion"
    }
}

impl Attributor for Occlusion {
    fn attribute(
        &self,
        model: &dyn Classifier,
        x: &FeatureVector,
        target: usize,
        marginals: &Marginals,
        cfg: &SamplerConfig,
    ) -> Result<AttributionVector> {
        occlude(model, x, target, marginals, |j, m| {
            if m.support().len() <= cfg.exact_support_limit {
                exact_expectation(model, x, j, target, m)
            } else {
                sampled_expectation(model, x, j, target, m, cfg)
            }
        })
    }
}

pub struct SampledOcclusion;

impl Named for SampledOcclusion {
    fn name(&self) -> &str {
        "occlusion-sampled"
    }
}

impl Attributor for SampledOcclusion {
    fn attribute(
        &self,
        model: &dyn Classifier,
        x: &FeatureVector,
        target: usize,
        marginals: &Marginals,
        cfg: &SamplerConfig,
    ) -> Result<AttributionVector> {
        occlude(model, x, target, marginals, |j, m| {
            sampled_expectation(model, x, j, target, m, cfg)
        })
    }
}

pub fn attribution_registry() -> Registry<dyn Attributor> {
    let mut reg: Registry<dyn Attributor> = Registry::new("attribution method");
    reg.register(Arc::new(Occlusion)).register(Arc::new(SampledOcclusion));
    reg
}
