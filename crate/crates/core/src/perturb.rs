//! Local perturbation neighborhoods: Gaussian noise plus block masking.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Serializable knobs; the baseline comes from the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbSettings {
    pub k: usize,
    pub sigma: f64,
    pub mask_prob: f64,
    /// Apply noise on top of the baseline for masked coordinates too.
    pub noisy_mask: bool,
}

impl Default for PerturbSettings {
    fn default() -> Self {
        PerturbSettings {
            k: 25,
            sigma: 0.1,
            mask_prob: 0.1,
            noisy_mask: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbConfig {
    pub k: usize,
    pub sigma: f64,
    pub mask_prob: f64,
    pub noisy_mask: bool,
    pub baseline: Vec<f64>,
    /// Feature groups masked jointly (one-hot blocks).
    pub blocks: Vec<Vec<usize>>,
}

impl PerturbConfig {
    /// One block per feature.
    pub fn new(settings: PerturbSettings, baseline: Vec<f64>) -> Self {
        let blocks = (0..baseline.len()).map(|j| vec![j]).collect();
        Self::with_blocks(settings, baseline, blocks)
    }

    pub fn with_blocks(settings: PerturbSettings, baseline: Vec<f64>, blocks: Vec<Vec<usize>>) -> Self {
        PerturbConfig {
            k: settings.k,
            sigma: settings.sigma,
            mask_prob: settings.mask_prob,
            noisy_mask: settings.noisy_mask,
            baseline,
            blocks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("neighborhood size K must be ≥ 1".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config("sigma must be ≥ 0".into()));
        }
        if !(0.0..=1.0).contains(&self.mask_prob) {
            return Err(Error::Config("mask probability must lie in [0,1]".into()));
        }
        let mut covered = vec![false; self.baseline.len()];
        for &j in self.blocks.iter().flatten() {
            match covered.get_mut(j) {
                Some(c) if !*c => *c = true,
                _ => return Err(Error::Config("mask blocks must partition the features".into())),
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::Config("mask blocks must cover every feature".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    /// K × d perturbed variants.
    pub variants: DMatrix<f64>,
    /// Per variant, per feature: whether the coordinate was masked.
    pub masks: Vec<Vec<bool>>,
}

/// Draw K variants of `x`. Each block is masked with probability
/// `mask_prob`; masked coordinates take the baseline value exactly (unless
/// `noisy_mask`), the rest receive N(0, σ²) noise.
pub fn neighborhood(x: &[f64], cfg: &PerturbConfig, seed: u64) -> Result<Neighborhood> {
    cfg.validate()?;
    let d = cfg.baseline.len();
    if x.len() != d {
        return Err(Error::Shape {
            expected: d,
            actual: x.len(),
        });
    }
    let noise = Normal::new(0.0, cfg.sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = seed::rng(seed);
    let mut variants = DMatrix::zeros(cfg.k, d);
    let mut masks = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let mut mask = vec![false; d];
        for block in &cfg.blocks {
            if rng.random::<f64>() < cfg.mask_prob {
                for &j in block {
                    mask[j] = true;
                }
            }
        }
        for j in 0..d {
            // Always draw so the stream does not depend on the mask pattern.
            let eta: f64 = noise.sample(&mut rng);
            variants[(k, j)] = match (mask[j], cfg.noisy_mask) {
                (true, false) => cfg.baseline[j],
                (true, true) => cfg.baseline[j] + eta,
                (false, _) => x[j] + eta,
            };
        }
        masks.push(mask);
    }
    Ok(Neighborhood { variants, masks })
}
