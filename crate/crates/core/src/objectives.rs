//! The three optimization objectives and the utility and fairness metrics
//! reported alongside them.
//!
//! All objectives are minimized: `f_perf = -AUC`, `f_out` is the largest
//! pairwise demographic-parity gap across intersectional subgroups, and
//! `f_proc` is MESD over subgroup explanation stabilities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Split, SubgroupKey, TabularDataset};
use crate::error::{Error, Result};
use crate::explain::{ExplainConfig, ProbabilityModel};
use crate::mesd::{mesd_from_scores, MesdConfig, MesdResult};
use crate::model::{threshold_labels, train, Classifier, HyperParams, ModelKind};
use crate::perturb::PerturbSettings;
use crate::seed;
use crate::stability::{group_stability, sample_for_stability, StabilityConfig, StabilityRun};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f_perf: f64,
    pub f_out: f64,
    pub f_proc: f64,
}

impl ObjectiveVector {
    /// Worst-case value assigned to configurations that fail to train.
    pub const INFEASIBLE: ObjectiveVector = ObjectiveVector {
        f_perf: 0.0,
        f_out: 1.0,
        f_proc: 1.0,
    };

    pub fn as_array(&self) -> [f64; 3] {
        [self.f_perf, self.f_out, self.f_proc]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        ObjectiveVector {
            f_perf: a[0],
            f_out: a[1],
            f_proc: a[2],
        }
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Data(format!("length mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Area under the ROC curve as the Mann-Whitney statistic, ties counted as
/// one half. The count `2U` is accumulated in integers, so the only rounding
/// is the final division.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut twice_u: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let pos = order[start..end].iter().filter(|&&i| labels[i] == 1).count() as u64;
        let neg = (end - start) as u64 - pos;
        twice_u += pos * (2 * neg_below + neg);
        neg_below += neg;
        start = end;
    }
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// Harmonic mean of precision and recall for the positive class; 0 when
/// there are neither predicted nor true positives.
pub fn f1(pred: &[u8], truth: &[u8]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, _) => fp += 1,
            (_, 1) => fneg += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    Ok(if denom == 0 { 0.0 } else { (2 * tp) as f64 / denom as f64 })
}

/// A max-pairwise gap plus the flags explaining how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub value: f64,
    /// Fewer than two realized groups; `value` is 0.
    pub degenerate: bool,
    /// `(group, label)` cells left out for lack of members.
    pub skipped_cells: Vec<(SubgroupKey, u8)>,
    /// Labels skipped because fewer than two groups had members with them.
    pub skipped_labels: Vec<u8>,
}

fn spread(rates: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = rates.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
    (hi >= lo).then_some(hi - lo)
}

/// Largest pairwise difference in positive-prediction rate between groups.
pub fn dp_gap(pred: &[u8], groups: &[SubgroupKey]) -> Result<Gap> {
    check_lengths(pred.len(), groups.len())?;
    let mut counts: BTreeMap<&SubgroupKey, (usize, usize)> = BTreeMap::new();
    for (p, g) in pred.iter().zip(groups) {
        let c = counts.entry(g).or_default();
        c.0 += 1;
        c.1 += usize::from(*p == 1);
    }
    let degenerate = counts.len() < 2;
    let value = if degenerate {
        0.0
    } else {
        spread(counts.values().map(|&(n, k)| k as f64 / n as f64)).unwrap_or(0.0)
    };
    Ok(Gap {
        value,
        degenerate,
        skipped_cells: Vec::new(),
        skipped_labels: Vec::new(),
    })
}

/// Largest pairwise gap in `P(Ŷ=1 | g, Y=y)` over both labels.
pub fn eod_gap(pred: &[u8], truth: &[u8], groups: &[SubgroupKey]) -> Result<Gap> {
    check_lengths(pred.len(), truth.len())?;
    check_lengths(pred.len(), groups.len())?;
    let mut cells: BTreeMap<(&SubgroupKey, u8), (usize, usize)> = BTreeMap::new();
    let mut realized: BTreeMap<&SubgroupKey, ()> = BTreeMap::new();
    for ((&p, &t), g) in pred.iter().zip(truth).zip(groups) {
        realized.insert(g, ());
        let c = cells.entry((g, t)).or_default();
        c.0 += 1;
        c.1 += usize::from(p == 1);
    }
    let mut gap = Gap {
        value: 0.0,
        degenerate: realized.len() < 2,
        skipped_cells: Vec::new(),
        skipped_labels: Vec::new(),
    };
    if gap.degenerate {
        return Ok(gap);
    }
    for y in [0u8, 1] {
        let mut rates = Vec::new();
        for g in realized.keys() {
            match cells.get(&(*g, y)) {
                Some(&(n, k)) => rates.push(k as f64 / n as f64),
                None => gap.skipped_cells.push(((*g).clone(), y)),
            }
        }
        if rates.len() < 2 {
            gap.skipped_labels.push(y);
            continue;
        }
        gap.value = gap.value.max(spread(rates.into_iter()).unwrap_or(0.0));
    }
    Ok(gap)
}

/// Outcome rates of one subgroup; `None` marks an empty denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub group: String,
    pub codes: Vec<u32>,
    pub count: usize,
    pub count_y0: usize,
    pub count_y1: usize,
    pub positive_rate: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

pub fn group_rates(ds: &TabularDataset, rows: &[usize], pred: &[u8]) -> Vec<GroupRates> {
    #[derive(Default)]
    struct Acc {
        n: [usize; 2],
        hits: [usize; 2],
    }
    let mut acc: BTreeMap<SubgroupKey, Acc> = BTreeMap::new();
    for (&i, &p) in rows.iter().zip(pred) {
        let a = acc.entry(ds.subgroup(i)).or_default();
        let y = usize::from(ds.y[i]);
        a.n[y] += 1;
        a.hits[y] += usize::from(p == 1);
    }
    let rate = |k: usize, n: usize| (n > 0).then(|| k as f64 / n as f64);
    acc.into_iter()
        .map(|(g, a)| GroupRates {
            group: ds.subgroup_name(&g),
            codes: g.codes.clone(),
            count: a.n[0] + a.n[1],
            count_y0: a.n[0],
            count_y1: a.n[1],
            positive_rate: (a.hits[0] + a.hits[1]) as f64 / (a.n[0] + a.n[1]) as f64,
            tpr: rate(a.hits[1], a.n[1]),
            fpr: rate(a.hits[0], a.n[0]),
        })
        .collect()
}

/// Everything needed to score one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub model_kind: ModelKind,
    pub explain: ExplainConfig,
    pub perturb: PerturbSettings,
    pub stability: StabilityConfig,
    pub mesd: MesdConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            model_kind: ModelKind::Mlp2,
            explain: ExplainConfig::default(),
            perturb: PerturbSettings::default(),
            stability: StabilityConfig::default(),
            mesd: MesdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub split: Split,
    pub n_rows: usize,
    pub threshold: f64,
    pub auc: f64,
    pub f1: f64,
    pub dp_gap: Gap,
    pub eod_gap: Gap,
    pub mesd: MesdResult,
    pub per_group_rates: Vec<GroupRates>,
}

/// A report together with the stability detail behind its MESD value.
#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    pub report: FairnessReport,
    pub stability: StabilityRun,
}

/// Score a trained model on one split. Utility and outcome metrics use every
/// row of the split; stability uses a stratified sample of it.
pub fn audit_model(
    model: &dyn ProbabilityModel,
    threshold: f64,
    ds: &TabularDataset,
    split: Split,
    cfg: &EvalConfig,
    master_seed: u64,
) -> Result<Audit> {
    let rows = ds.indices(split);
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("split {split:?} has no rows")));
    }
    let proba = model.predict(&ds.rows(&rows))?;
    let truth = ds.labels(&rows);
    let pred = threshold_labels(&proba, threshold);
    let groups: Vec<SubgroupKey> = rows.iter().map(|&i| ds.subgroup(i)).collect();

    let sample = sample_for_stability(
        ds,
        split,
        cfg.stability.n_max,
        seed::derive_labeled(master_seed, 0, "stability-sample"),
    );
    let stability = group_stability(
        model,
        ds,
        &sample,
        &cfg.explain,
        &cfg.perturb,
        &cfg.stability,
        seed::derive_labeled(master_seed, 0, "stability"),
    )?;
    let mesd = mesd_from_scores(&stability.table.scores(), &cfg.mesd)?;
    Ok(Audit {
        report: FairnessReport {
            split,
            n_rows: rows.len(),
            threshold,
            auc: auc(&proba, &truth)?,
            f1: f1(&pred, &truth)?,
            dp_gap: dp_gap(&pred, &groups)?,
            eod_gap: eod_gap(&pred, &truth, &groups)?,
            mesd,
            per_group_rates: group_rates(ds, &rows, &pred),
        },
        stability,
    })
}

/// Seed used to train the model of one configuration.
pub fn training_seed(master_seed: u64) -> u64 {
    seed::derive_labeled(master_seed, 0, "train")
}

/// Outcome of [`evaluate_config`]. `model` and `audit` are absent when
/// training diverged and the configuration was marked infeasible.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    pub feasible: bool,
    pub model: Option<Classifier>,
    pub audit: Option<Audit>,
}

/// Train on the train split and score on the validation split.
pub fn evaluate_config(hp: &HyperParams, ds: &TabularDataset, cfg: &EvalConfig, master_seed: u64) -> Result<Evaluation> {
    hp.validate()?;
    let train_rows = ds.indices(Split::Train);
    if train_rows.is_empty() {
        return Err(Error::EmptyInput("train split has no rows".into()));
    }
    let model = match train(
        &ds.rows(&train_rows),
        &ds.labels(&train_rows),
        cfg.model_kind,
        hp,
        training_seed(master_seed),
    ) {
        Ok(m) => m,
        Err(Error::Diverged { .. }) => {
            return Ok(Evaluation {
                objectives: ObjectiveVector::INFEASIBLE,
                feasible: false,
                model: None,
                audit: None,
            })
        }
        Err(e) => return Err(e),
    };
    let audit = audit_model(&model, hp.threshold, ds, Split::Val, cfg, master_seed)?;
    let objectives = ObjectiveVector {
        f_perf: -audit.report.auc,
        f_out: audit.report.dp_gap.value,
        f_proc: audit.report.mesd.mesd_cvar,
    };
    Ok(Evaluation {
        objectives,
        feasible: true,
        model: Some(model),
        audit: Some(audit),
    })
}
