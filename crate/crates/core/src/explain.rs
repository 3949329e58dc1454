//! Per-instance feature attributions and their convex ensemble.
//!
//! Two post-hoc explainers are provided, both targeting the positive-class
//! probability: Monte-Carlo permutation Shapley values against a single
//! baseline vector, and a locally weighted ridge surrogate. Each output is
//! signed-L1 normalized before the ensemble combines them.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::seed;

pub const SHAPLEY_ID: &str = "shapley";
pub const SURROGATE_ID: &str = "surrogate";
pub const ENSEMBLE_ID: &str = "ensemble";

/// Anything that maps a batch of rows to scores.
pub trait ProbabilityModel: Sync {
    fn n_features(&self) -> usize;
    fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>>;
}

impl ProbabilityModel for Classifier {
    fn n_features(&self) -> usize {
        Classifier::n_features(self)
    }

    fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.predict_proba(x)
    }
}

/// Wrap a row function as a model; handy for analytic test models.
pub struct FnModel<F> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ProbabilityModel for FnModel<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                actual: x.ncols(),
            });
        }
        let mut row = vec![0.0; x.ncols()];
        Ok((0..x.nrows())
            .map(|i| {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = x[(i, j)];
                }
                (self.f)(&row)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub values: Vec<f64>,
    pub explainer_id: String,
    pub normalized: bool,
}

impl Attribution {
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}

/// Permutations evaluated per model call.
const PERMUTATION_CHUNK: usize = 64;

/// Monte-Carlo permutation Shapley values with a single baseline vector.
///
/// For each sampled ordering, features are revealed one at a time (all
/// others held at `baseline`) and each feature is credited with the change
/// in model output when it is revealed. Every ordering telescopes to
/// `f(x) - f(baseline)`, so efficiency holds per sample.
pub fn explain_shapley(
    model: &dyn ProbabilityModel,
    x: &[f64],
    baseline: &[f64],
    n_permutations: usize,
    seed: u64,
) -> Result<Attribution> {
    let d = model.n_features();
    check_len(d, x.len())?;
    check_len(d, baseline.len())?;
    if n_permutations == 0 {
        return Err(Error::Config("n_permutations must be ≥ 1".into()));
    }
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..d).collect();
    let mut phi = vec![0.0; d];
    let mut remaining = n_permutations;
    while remaining > 0 {
        let chunk = remaining.min(PERMUTATION_CHUNK);
        remaining -= chunk;
        let mut orders = Vec::with_capacity(chunk);
        let mut batch = DMatrix::zeros(chunk * (d + 1), d);
        for p in 0..chunk {
            order.shuffle(&mut rng);
            let base = p * (d + 1);
            let mut current = baseline.to_vec();
            for (j, &v) in current.iter().enumerate() {
                batch[(base, j)] = v;
            }
            for (step, &feature) in order.iter().enumerate() {
                current[feature] = x[feature];
                for (j, &v) in current.iter().enumerate() {
                    batch[(base + step + 1, j)] = v;
                }
            }
            orders.push(order.clone());
        }
        let out = model.predict(&batch)?;
        for (p, ord) in orders.iter().enumerate() {
            let base = p * (d + 1);
            for (step, &feature) in ord.iter().enumerate() {
                phi[feature] += out[base + step + 1] - out[base + step];
            }
        }
    }
    let n = n_permutations as f64;
    Ok(Attribution {
        values: phi.into_iter().map(|v| v / n).collect(),
        explainer_id: SHAPLEY_ID.into(),
        normalized: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub n_samples: usize,
    /// Kernel width; `None` means `0.75·sqrt(d)`.
    pub kernel_width: Option<f64>,
    pub ridge: f64,
    /// Standard deviation of the sampling cloud around the instance.
    pub sample_scale: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_samples: 64,
            kernel_width: None,
            ridge: 1e-3,
            sample_scale: 1.0,
        }
    }
}

impl SurrogateConfig {
    pub fn width(&self, d: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (d as f64).sqrt())
    }
}

/// Local linear surrogate: Gaussian samples around `x`, weighted by
/// `exp(-dist²/width²)`, fitted by weighted ridge regression (with an
/// unpenalized intercept) of model output on feature deltas.
pub fn explain_surrogate(
    model: &dyn ProbabilityModel,
    x: &[f64],
    cfg: &SurrogateConfig,
    seed: u64,
) -> Result<Attribution> {
    let d = model.n_features();
    check_len(d, x.len())?;
    if cfg.n_samples < d + 2 {
        return Err(Error::Config(format!("surrogate needs at least {} samples", d + 2)));
    }
    let width = cfg.width(d);
    if !(width > 0.0) || !(cfg.ridge >= 0.0) || !(cfg.sample_scale > 0.0) {
        return Err(Error::Config("surrogate width, ridge and scale must be positive".into()));
    }
    let mut rng = seed::rng(seed);
    let n = cfg.n_samples;
    let mut deltas = DMatrix::zeros(n, d);
    let mut points = DMatrix::zeros(n, d);
    let mut weights = DVector::zeros(n);
    for i in 0..n {
        let mut dist2 = 0.0;
        for j in 0..d {
            let e: f64 = StandardNormal.sample(&mut rng);
            let delta = cfg.sample_scale * e;
            deltas[(i, j)] = delta;
            points[(i, j)] = x[j] + delta;
            dist2 += delta * delta;
        }
        weights[i] = (-dist2 / (width * width)).exp();
    }
    let response = DVector::from_vec(model.predict(&points)?);

    let total_w = weights.sum();
    if !(total_w > 0.0) {
        return Err(Error::Numeric("surrogate kernel weights vanished".into()));
    }
    let mean_delta = deltas.tr_mul(&weights) / total_w;
    let mean_resp = weights.dot(&response) / total_w;
    let mut centered = deltas;
    for mut row in centered.row_iter_mut() {
        row -= mean_delta.transpose();
    }
    let weighted = DMatrix::from_fn(n, d, |i, j| centered[(i, j)] * weights[i]);
    let mut gram = weighted.tr_mul(&centered);
    for j in 0..d {
        gram[(j, j)] += cfg.ridge;
    }
    let rhs = weighted.tr_mul(&response.map(|r| r - mean_resp));
    let coef = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("weighted design is singular".into()))?
        .solve(&rhs);
    Ok(Attribution {
        values: coef.iter().copied().collect(),
        explainer_id: SURROGATE_ID.into(),
        normalized: false,
    })
}

/// Divide by the L1 norm, keeping signs; the zero vector stays zero.
pub fn normalize_l1(a: &Attribution) -> Attribution {
    let norm = a.l1();
    let values = if norm > 0.0 {
        a.values.iter().map(|v| v / norm).collect()
    } else {
        vec![0.0; a.values.len()]
    };
    Attribution {
        values,
        explainer_id: a.explainer_id.clone(),
        normalized: true,
    }
}

/// Non-negative explainer weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnsembleWeights {
    pub w: BTreeMap<String, f64>,
}

impl EnsembleWeights {
    pub fn new(w: BTreeMap<String, f64>) -> Result<Self> {
        let weights = EnsembleWeights { w };
        weights.validate()?;
        Ok(weights)
    }

    pub fn uniform(ids: &[&str]) -> Self {
        let share = 1.0 / ids.len() as f64;
        EnsembleWeights {
            w: ids.iter().map(|id| (id.to_string(), share)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.is_empty() {
            return Err(Error::Config("ensemble weights are empty".into()));
        }
        if self.w.values().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("ensemble weights must be non-negative".into()));
        }
        let total: f64 = self.w.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("ensemble weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

impl Default for EnsembleWeights {
    fn default() -> Self {
        EnsembleWeights::uniform(&[SHAPLEY_ID, SURROGATE_ID])
    }
}

/// `Σ_e w_e φ_e` over normalized attributions; the result is not renormalized.
pub fn ensemble(attrs: &[Attribution], w: &EnsembleWeights) -> Result<Attribution> {
    w.validate()?;
    let Some(first) = attrs.first() else {
        return Err(Error::EmptyInput("no attributions to combine".into()));
    };
    if let Some(a) = attrs.iter().find(|a| !a.normalized) {
        return Err(Error::Contract(format!("attribution '{}' is not normalized", a.explainer_id)));
    }
    let mut ids: Vec<&str> = attrs.iter().map(|a| a.explainer_id.as_str()).collect();
    ids.sort_unstable();
    let keys: Vec<&str> = w.w.keys().map(String::as_str).collect();
    if ids != keys {
        return Err(Error::Config(format!("explainers {ids:?} do not match weights {keys:?}")));
    }
    let d = first.values.len();
    let mut out = vec![0.0; d];
    for a in attrs {
        check_len(d, a.values.len())?;
        let we = w.w[&a.explainer_id];
        for (o, v) in out.iter_mut().zip(&a.values) {
            *o += we * v;
        }
    }
    Ok(Attribution {
        values: out,
        explainer_id: ENSEMBLE_ID.into(),
        normalized: false,
    })
}

/// Explainer settings shared by every instance of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub shapley_permutations: usize,
    pub surrogate: SurrogateConfig,
    pub weights: EnsembleWeights,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            shapley_permutations: 32,
            surrogate: SurrogateConfig::default(),
            weights: EnsembleWeights::default(),
        }
    }
}

/// Seed for one explainer on one row: independent of scheduling order.
pub fn explainer_seed(master: u64, row_index: usize, explainer_id: &str) -> u64 {
    seed::derive_labeled(master, row_index as u64, explainer_id)
}

/// Normalized per-explainer attributions combined into the ensemble.
/// Explainers with zero weight are skipped.
pub fn ensemble_attribution(
    model: &dyn ProbabilityModel,
    x: &[f64],
    baseline: &[f64],
    cfg: &ExplainConfig,
    master_seed: u64,
    row_index: usize,
) -> Result<Attribution> {
    cfg.weights.validate()?;
    let mut attrs = Vec::new();
    let mut active = BTreeMap::new();
    for (id, &weight) in &cfg.weights.w {
        if weight == 0.0 {
            continue;
        }
        let s = explainer_seed(master_seed, row_index, id);
        let raw = match id.as_str() {
            SHAPLEY_ID => explain_shapley(model, x, baseline, cfg.shapley_permutations, s)?,
            SURROGATE_ID => explain_surrogate(model, x, &cfg.surrogate, s)?,
            other => return Err(Error::Config(format!("unknown explainer '{other}'"))),
        };
        attrs.push(normalize_l1(&raw));
        active.insert(id.clone(), weight);
    }
    let total: f64 = active.values().sum();
    for v in active.values_mut() {
        *v /= total;
    }
    ensemble(&attrs, &EnsembleWeights { w: active })
}
