//! Completion of partial observations: random draws from the empirical
//! marginals, or the full weighted product of their supports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Marginals;
use crate::schema::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Number of sampled completions `M`.
    pub samples: usize,
    pub seed: u64,
    /// Draws per coordinate for Monte-Carlo occlusion.
    pub resamples: usize,
    /// Marginals with at most this many distinct values are occluded by
    /// exact expectation instead of resampling.
    pub exact_support_limit: usize,
    /// Enumerate the full product of unknown supports instead of sampling.
    pub exhaustive: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            resamples: 64,
            exact_support_limit: 32,
            exhaustive: false,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// A completed vector and its weight in the alternative vote.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub vector: FeatureVector,
    pub weight: f64,
}

/// `M` completions of `partial`; known coordinates are kept and each
/// unknown one is drawn independently from its marginal.
pub fn sample_completions(
    partial: &FeatureVector,
    marginals: &Marginals,
    cfg: &SamplerConfig,
) -> Vec<FeatureVector> {
    let mut rng = cfg.rng(0);
    let unknown: Vec<usize> = (0..partial.len()).filter(|&i| partial.get(i).is_none()).collect();
    (0..cfg.samples.max(1))
        .map(|_| {
            let mut x = partial.clone();
            for &i in &unknown {
                x.set(i, Some(marginals.get(i).sample(&mut rng)));
            }
            x
        })
        .collect()
}

/// Every combination of observed values for the unknown coordinates,
/// weighted by the product of their marginal probabilities. The last
/// unknown coordinate varies fastest.
pub fn enumerate_completions(partial: &FeatureVector, marginals: &Marginals) -> Vec<Completion> {
    let unknown: Vec<usize> = (0..partial.len()).filter(|&i| partial.get(i).is_none()).collect();
    let supports: Vec<_> = unknown.iter().map(|&i| marginals.get(i).support()).collect();
    let mut out = Vec::new();
    let mut cursor = vec![0usize; unknown.len()];
    loop {
        let mut x = partial.clone();
        let mut weight = 1.0;
        for (k, &i) in unknown.iter().enumerate() {
            let (v, p) = &supports[k][cursor[k]];
            x.set(i, Some(v.clone()));
            weight *= p;
        }
        out.push(Completion { vector: x, weight });

        let mut k = unknown.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            cursor[k] += 1;
            if cursor[k] < supports[k].len() {
                break;
            }
            cursor[k] = 0;
        }
    }
}

/// Completions according to `cfg`: exhaustive enumeration or `M` unit-weight
/// samples.
pub fn completions(partial: &FeatureVector, marginals: &Marginals, cfg: &SamplerConfig) -> Vec<Completion> {
    if cfg.exhaustive {
        enumerate_completions(partial, marginals)
    } else {
        sample_completions(partial, marginals, cfg)
            .into_iter()
            .map(|vector| Completion { vector, weight: 1.0 })
            .collect()
    }
}
