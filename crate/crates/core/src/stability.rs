//! Explanation stability, per instance and per intersectional subgroup.
//!
//! Instance instability is the mean Euclidean distance between the ensemble
//! attribution of a row and those of its perturbed neighbors; it is inverted
//! into a score in (0, 1]. Subgroup scores are computed per (group, label)
//! cell, shrunk toward the pooled label mean with weight `n / (n + λ)`, and
//! recombined with label-prevalence weights.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Split, SubgroupKey, TabularDataset};
use crate::error::{Error, Result};
use crate::explain::{ensemble_attribution, ExplainConfig, ProbabilityModel};
use crate::perturb::{neighborhood, PerturbConfig, PerturbSettings};
use crate::seed;

pub const PERTURB_STREAM: &str = "perturb";

/// Map from mean attribution distance to a stability score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inversion {
    /// `1 / (1 + d)`
    #[default]
    Reciprocal,
    /// `exp(-d)`
    Exponential,
}

impl Inversion {
    pub fn apply(self, instability: f64) -> f64 {
        match self {
            Inversion::Reciprocal => 1.0 / (1.0 + instability),
            Inversion::Exponential => (-instability).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityConfig {
    /// Shrinkage strength λ > 0.
    pub lambda: f64,
    /// Stability sample budget.
    pub n_max: usize,
    pub inversion: Inversion,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            lambda: 10.0,
            n_max: 200,
            inversion: Inversion::Reciprocal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceStability {
    pub row_index: usize,
    pub instability: f64,
    pub stability: f64,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Stability of one row. The explainer seeds are shared between the row and
/// all of its variants, so identical inputs always yield identical
/// attributions and distance zero.
pub fn instance_stability(
    model: &dyn ProbabilityModel,
    x: &[f64],
    row_index: usize,
    explain: &ExplainConfig,
    perturb: &PerturbConfig,
    inversion: Inversion,
    master_seed: u64,
) -> Result<InstanceStability> {
    let baseline = &perturb.baseline;
    let reference = ensemble_attribution(model, x, baseline, explain, master_seed, row_index)?;
    let hood = neighborhood(
        x,
        perturb,
        seed::derive_labeled(master_seed, row_index as u64, PERTURB_STREAM),
    )?;
    let mut total = 0.0;
    for k in 0..hood.variants.nrows() {
        let variant: Vec<f64> = hood.variants.row(k).iter().copied().collect();
        let phi = ensemble_attribution(model, &variant, baseline, explain, master_seed, row_index)?;
        total += euclidean(&reference.values, &phi.values);
    }
    let instability = total / hood.variants.nrows() as f64;
    Ok(InstanceStability {
        row_index,
        instability,
        stability: inversion.apply(instability),
    })
}

/// Mean that does not depend on input order: sort, then Neumaier-sum.
fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values.iter() {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    (sum + comp) / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    pub group: SubgroupKey,
    pub label: u8,
    pub count: usize,
    /// Cell mean; absent for empty cells.
    pub raw: Option<f64>,
    pub alpha: f64,
    pub shrunk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub label: u8,
    pub count: usize,
    /// Pooled mean stability over every instance with this label.
    pub mean: f64,
    pub prevalence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub group: SubgroupKey,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTable {
    pub lambda: f64,
    pub cells: Vec<StabilityCell>,
    pub labels: Vec<LabelSummary>,
    pub groups: Vec<GroupScore>,
}

impl StabilityTable {
    pub fn scores(&self) -> BTreeMap<SubgroupKey, f64> {
        self.groups.iter().map(|g| (g.group.clone(), g.score)).collect()
    }

    pub fn cell(&self, group: &SubgroupKey, label: u8) -> Option<&StabilityCell> {
        self.cells.iter().find(|c| &c.group == group && c.label == label)
    }

    pub fn label(&self, label: u8) -> Option<&LabelSummary> {
        self.labels.iter().find(|l| l.label == label)
    }
}

/// Label-aware, shrinkage-stabilized subgroup stability.
pub fn aggregate(per_instance: &[(SubgroupKey, u8, f64)], lambda: f64) -> Result<StabilityTable> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("shrinkage strength must be > 0, got {lambda}")));
    }
    if per_instance.is_empty() {
        return Err(Error::EmptyInput("no instance stabilities to aggregate".into()));
    }
    if let Some((_, y, _)) = per_instance.iter().find(|(_, y, _)| *y > 1) {
        return Err(Error::Data(format!("label {y} is not binary")));
    }
    if per_instance.iter().any(|(_, _, s)| !s.is_finite()) {
        return Err(Error::Numeric("non-finite instance stability".into()));
    }

    let mut by_cell: BTreeMap<(SubgroupKey, u8), Vec<f64>> = BTreeMap::new();
    let mut by_label: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for (g, y, s) in per_instance {
        by_cell.entry((g.clone(), *y)).or_default().push(*s);
        by_label.entry(*y).or_default().push(*s);
    }
    let n_total = per_instance.len() as f64;
    let labels: Vec<LabelSummary> = by_label
        .iter_mut()
        .map(|(&label, values)| LabelSummary {
            label,
            count: values.len(),
            mean: order_free_mean(values),
            prevalence: values.len() as f64 / n_total,
        })
        .collect();

    let groups_present: Vec<SubgroupKey> = {
        let mut g: Vec<SubgroupKey> = by_cell.keys().map(|(g, _)| g.clone()).collect();
        g.dedup();
        g
    };
    let mut cells = Vec::new();
    let mut groups = Vec::new();
    for g in &groups_present {
        let mut score = 0.0;
        for l in &labels {
            let cell = match by_cell.get_mut(&(g.clone(), l.label)) {
                Some(values) => {
                    let n = values.len();
                    let raw = order_free_mean(values);
                    let alpha = n as f64 / (n as f64 + lambda);
                    StabilityCell {
                        group: g.clone(),
                        label: l.label,
                        count: n,
                        raw: Some(raw),
                        alpha,
                        shrunk: alpha * raw + (1.0 - alpha) * l.mean,
                    }
                }
                None => StabilityCell {
                    group: g.clone(),
                    label: l.label,
                    count: 0,
                    raw: None,
                    alpha: 0.0,
                    shrunk: l.mean,
                },
            };
            score += l.prevalence * cell.shrunk;
            cells.push(cell);
        }
        groups.push(GroupScore {
            group: g.clone(),
            score,
        });
    }
    Ok(StabilityTable {
        lambda,
        cells,
        labels,
        groups,
    })
}

/// Stratified sample of up to `n_max` rows of `split`, proportional per
/// (subgroup, label) cell with at least one row per non-empty cell when the
/// budget allows. Returned indices are sorted.
pub fn sample_for_stability(ds: &TabularDataset, split: Split, n_max: usize, seed: u64) -> Vec<usize> {
    let pool = ds.indices(split);
    if n_max >= pool.len() {
        return pool;
    }
    let mut cells: BTreeMap<(SubgroupKey, u8), Vec<usize>> = BTreeMap::new();
    for &i in &pool {
        cells.entry((ds.subgroup(i), ds.y[i])).or_default().push(i);
    }
    let sizes: Vec<usize> = cells.values().map(Vec::len).collect();
    let alloc = allocate(&sizes, n_max);
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(n_max);
    for (members, take) in cells.into_values().zip(alloc) {
        let mut members = members;
        members.shuffle(&mut rng);
        out.extend_from_slice(&members[..take]);
    }
    out.sort_unstable();
    out
}

/// Proportional integer allocation of `budget` over cells of `sizes`
/// (budget < Σ sizes), with a floor of one per cell when affordable.
fn allocate(sizes: &[usize], budget: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let floor_one = budget >= sizes.len();
    let quota: Vec<f64> = sizes.iter().map(|&n| budget as f64 * n as f64 / total as f64).collect();
    let mut alloc: Vec<usize> = quota
        .iter()
        .zip(sizes)
        .map(|(&q, &n)| {
            let base = q.floor() as usize;
            if floor_one { base.max(1) } else { base }.min(n)
        })
        .collect();
    let min_take = usize::from(floor_one);
    loop {
        let assigned: usize = alloc.iter().sum();
        if assigned == budget {
            return alloc;
        }
        if assigned > budget {
            // Take back from the most over-served cell.
            let (c, _) = alloc
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > min_take)
                .map(|(c, &a)| (c, a as f64 - quota[c]))
                .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            alloc[c] -= 1;
        } else {
            // Largest remaining shortfall first; ties go to the earlier cell.
            let (c, _) = alloc
                .iter()
                .enumerate()
                .filter(|(c, &a)| a < sizes[*c])
                .map(|(c, &a)| (c, quota[c] - a as f64))
                .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            alloc[c] += 1;
        }
    }
}

/// Everything the stability stage produced for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRun {
    pub rows: Vec<usize>,
    pub instances: Vec<InstanceStability>,
    pub table: StabilityTable,
}

/// Compute instance stabilities for `rows` in parallel, then aggregate.
pub fn group_stability(
    model: &dyn ProbabilityModel,
    ds: &TabularDataset,
    rows: &[usize],
    explain: &ExplainConfig,
    perturb: &PerturbSettings,
    cfg: &StabilityConfig,
    master_seed: u64,
) -> Result<StabilityRun> {
    let perturb_cfg = PerturbConfig::with_blocks(*perturb, ds.schema.baseline_values.clone(), ds.schema.mask_blocks());
    perturb_cfg.validate()?;
    let instances: Vec<InstanceStability> = rows
        .par_iter()
        .map(|&i| instance_stability(model, &ds.row(i), i, explain, &perturb_cfg, cfg.inversion, master_seed))
        .collect::<Result<_>>()?;
    let records: Vec<(SubgroupKey, u8, f64)> = instances
        .iter()
        .map(|s| (ds.subgroup(s.row_index), ds.y[s.row_index], s.stability))
        .collect();
    let table = aggregate(&records, cfg.lambda)?;
    Ok(StabilityRun {
        rows: rows.to_vec(),
        instances,
        table,
    })
}
