//! Multi-category explanation stability disparity.
//!
//! Every unordered pair of subgroups contributes a disparity `D = |S_i - S_j|`
//! and a risk `R = 1 - min(S_i, S_j)`. MESD weights disparities by how far
//! their risk lies beyond the `(1 - α)` risk quantile, so the score tracks the
//! worst-case tail rather than the average gap.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SubgroupKey;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MesdConfig {
    /// Tail mass α in (0, 1).
    pub alpha: f64,
    /// Stabilizer ε > 0 in the weight denominator.
    pub epsilon: f64,
}

impl Default for MesdConfig {
    fn default() -> Self {
        MesdConfig {
            alpha: 0.2,
            epsilon: 1e-9,
        }
    }
}

impl MesdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// One unordered subgroup pair, `gi < gj`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseDisparity {
    pub gi: SubgroupKey,
    pub gj: SubgroupKey,
    pub d: f64,
    pub r: f64,
}

/// All `C(|G|, 2)` pairs in canonical order.
pub fn pairwise(scores: &BTreeMap<SubgroupKey, f64>) -> Result<Vec<PairwiseDisparity>> {
    if scores.len() < 2 {
        return Err(Error::Degenerate(format!(
            "MESD needs at least 2 groups, got {}",
            scores.len()
        )));
    }
    let entries: Vec<(&SubgroupKey, f64)> = scores.iter().map(|(k, &v)| (k, v)).collect();
    let mut out = Vec::with_capacity(entries.len() * (entries.len() - 1) / 2);
    for (a, &(gi, si)) in entries.iter().enumerate() {
        for &(gj, sj) in &entries[a + 1..] {
            out.push(PairwiseDisparity {
                gi: gi.clone(),
                gj: gj.clone(),
                d: (si - sj).abs(),
                r: 1.0 - si.min(sj),
            });
        }
    }
    Ok(out)
}

/// Linear-interpolation quantile: position `q·(n-1)` in the sorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPair {
    pub gi: SubgroupKey,
    pub gj: SubgroupKey,
    pub d: f64,
    pub r: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MesdResult {
    pub alpha: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub pairs: Vec<WeightedPair>,
    pub mesd_cvar: f64,
    pub mesd_max: f64,
    pub mesd_var: f64,
    pub fallback_used: bool,
    /// Fewer than two groups: every score is reported as 0.
    pub degenerate: bool,
}

impl MesdResult {
    pub fn degenerate(cfg: &MesdConfig) -> MesdResult {
        MesdResult {
            alpha: cfg.alpha,
            epsilon: cfg.epsilon,
            tau: 0.0,
            pairs: Vec::new(),
            mesd_cvar: 0.0,
            mesd_max: 0.0,
            mesd_var: 0.0,
            fallback_used: false,
            degenerate: true,
        }
    }

    pub fn weights(&self) -> BTreeMap<(SubgroupKey, SubgroupKey), f64> {
        self.pairs
            .iter()
            .map(|p| ((p.gi.clone(), p.gj.clone()), p.weight))
            .collect()
    }

    /// Pair table as CSV: `gi,gj,d,r,weight`, keys rendered by `name`.
    pub fn write_pairs_csv(&self, path: &Path, name: impl Fn(&SubgroupKey) -> String) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["gi", "gj", "d", "r", "weight"])?;
        for p in &self.pairs {
            w.write_record([
                name(&p.gi),
                name(&p.gj),
                format!("{:.17e}", p.d),
                format!("{:.17e}", p.r),
                format!("{:.17e}", p.weight),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Maximum and population variance of the pair disparities.
pub fn mesd_variants(pairs: &[PairwiseDisparity]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no subgroup pairs".into()));
    }
    let n = pairs.len() as f64;
    let max = pairs.iter().map(|p| p.d).fold(0.0, f64::max);
    let mean = pairs.iter().map(|p| p.d).sum::<f64>() / n;
    let var = pairs.iter().map(|p| (p.d - mean).powi(2)).sum::<f64>() / n;
    Ok((max, var))
}

/// CVaR-weighted disparity. Weights are the risk excess over `τ`, normalized
/// by `Σ excess + ε`. When no pair exceeds `τ`, pairs at or above `τ` share
/// uniform weight instead.
pub fn mesd_cvar(pairs: &[PairwiseDisparity], alpha: f64, epsilon: f64) -> Result<MesdResult> {
    let cfg = MesdConfig { alpha, epsilon };
    cfg.validate()?;
    let (mesd_max, mesd_var) = mesd_variants(pairs)?;
    let risks: Vec<f64> = pairs.iter().map(|p| p.r).collect();
    let tau = quantile(&risks, 1.0 - alpha);
    let excess: Vec<f64> = risks.iter().map(|&r| (r - tau).max(0.0)).collect();
    let total: f64 = excess.iter().sum();
    let fallback_used = total == 0.0;
    let weights: Vec<f64> = if fallback_used {
        let tail = risks.iter().filter(|&&r| r >= tau).count() as f64;
        risks.iter().map(|&r| if r >= tau { 1.0 / tail } else { 0.0 }).collect()
    } else {
        excess.iter().map(|e| e / (total + epsilon)).collect()
    };
    let raw: f64 = weights.iter().zip(pairs).map(|(w, p)| w * p.d).sum();
    // A uniform mean of equal values can round one ulp above their max.
    let mesd_cvar = raw.min(mesd_max);
    Ok(MesdResult {
        alpha,
        epsilon,
        tau,
        pairs: pairs
            .iter()
            .zip(weights)
            .map(|(p, weight)| WeightedPair {
                gi: p.gi.clone(),
                gj: p.gj.clone(),
                d: p.d,
                r: p.r,
                weight,
            })
            .collect(),
        mesd_cvar,
        mesd_max,
        mesd_var,
        fallback_used,
        degenerate: false,
    })
}

/// MESD from subgroup scores; fewer than two groups give the degenerate result.
pub fn mesd_from_scores(scores: &BTreeMap<SubgroupKey, f64>, cfg: &MesdConfig) -> Result<MesdResult> {
    cfg.validate()?;
    match pairwise(scores) {
        Ok(pairs) => mesd_cvar(&pairs, cfg.alpha, cfg.epsilon),
        Err(Error::Degenerate(_)) => Ok(MesdResult::degenerate(cfg)),
        Err(e) => Err(e),
    }
}
