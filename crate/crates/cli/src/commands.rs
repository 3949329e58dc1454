//! Subcommand implementations. Each writes only inside its output directory
//! and returns the lines to print on success.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mesd_core::data::{census_entries, split_census, subgroup_census, CensusEntry, CsvSchema, RejectReport, Split, TabularDataset};
use mesd_core::model::{train, Classifier, HyperParams};
use mesd_core::objectives::{audit_model, evaluate_config, training_seed, Audit, FairnessReport};
use mesd_core::optimize::{chebyshev_select, evolve, hypervolume, ArchiveEntry, ChebyshevPick, ParetoFront};
use mesd_core::seed;
use mesd_core::stability::{InstanceStability, StabilityTable};
use mesd_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::{DatasetSource, RunConfig};

/// Reference point for reported hypervolumes: worst AUC, DP and MESD.
pub const HV_REFERENCE: [f64; 3] = [0.0, 1.0, 1.0];

pub const REPORT_FILE: &str = "report.json";
pub const ARCHIVE_FILE: &str = "archive.jsonl";
pub const FRONT_FILE: &str = "front.json";
pub const CONFIG_FILE: &str = "config.json";

/// What a command prints: result lines on stdout, warnings on stderr.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: Vec<String>,
    pub warnings: Vec<String>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

/// The output location is not part of a run's identity, so it is left out
/// and reruns into another directory reproduce the file byte for byte.
fn write_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let stored = RunConfig {
        output_dir: None,
        ..cfg.clone()
    };
    write_text(&dir.join(CONFIG_FILE), &stored.to_json())
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Serialize)]
struct CensusDocument {
    total: Vec<CensusEntry>,
    train: Vec<CensusEntry>,
    val: Vec<CensusEntry>,
    test: Vec<CensusEntry>,
    rejected: RejectReport,
}

fn write_census(dir: &Path, ds: &TabularDataset) -> Result<()> {
    let doc = CensusDocument {
        total: census_entries(ds, &subgroup_census(ds)),
        train: census_entries(ds, &split_census(ds, Split::Train)),
        val: census_entries(ds, &split_census(ds, Split::Val)),
        test: census_entries(ds, &split_census(ds, Split::Test)),
        rejected: ds.rejected.clone(),
    };
    write_json(&dir.join("census.json"), &doc)
}

#[derive(Debug, Serialize)]
struct NamedScore {
    group: String,
    codes: Vec<u32>,
    score: f64,
}

#[derive(Debug, Serialize)]
struct StabilityDocument<'a> {
    split: Split,
    groups: Vec<NamedScore>,
    table: &'a StabilityTable,
    instances: &'a [InstanceStability],
}

fn write_audit_files(dir: &Path, ds: &TabularDataset, audit: &Audit, doc: &ReportDocument) -> Result<()> {
    write_json(&dir.join(REPORT_FILE), doc)?;
    let table = &audit.stability.table;
    let stability = StabilityDocument {
        split: audit.report.split,
        groups: table
            .groups
            .iter()
            .map(|g| NamedScore {
                group: ds.subgroup_name(&g.group),
                codes: g.group.codes.clone(),
                score: g.score,
            })
            .collect(),
        table,
        instances: &audit.stability.instances,
    };
    write_json(&dir.join("stability.json"), &stability)?;
    audit
        .report
        .mesd
        .write_pairs_csv(&dir.join("mesd_pairs.csv"), |k| ds.subgroup_name(k))?;
    write_census(dir, ds)
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    pub model_file: String,
    pub hyperparams: HyperParams,
    pub group_names: BTreeMap<String, String>,
    pub report: FairnessReport,
}

fn group_names(ds: &TabularDataset) -> BTreeMap<String, String> {
    subgroup_census(ds)
        .keys()
        .map(|k| (k.to_string(), ds.subgroup_name(k)))
        .collect()
}

fn mesd_warnings(report: &FairnessReport) -> Vec<String> {
    let mut w = Vec::new();
    if report.mesd.degenerate {
        w.push("fewer than two subgroups realized in the stability sample; MESD reported as 0 (degenerate)".into());
    }
    if report.dp_gap.degenerate {
        w.push("fewer than two subgroups realized; DP gap reported as 0 (degenerate)".into());
    }
    if !report.eod_gap.skipped_labels.is_empty() {
        w.push(format!("EOD skipped labels {:?} for lack of comparable groups", report.eod_gap.skipped_labels));
    }
    w
}

fn metric_line(prefix: &str, r: &FairnessReport) -> String {
    format!(
        "{prefix} auc={:.4} f1={:.4} dp={:.4} eod={:.4} mesd={:.4} (max {:.4}, var {:.6})",
        r.auc, r.f1, r.dp_gap.value, r.eod_gap.value, r.mesd.mesd_cvar, r.mesd.mesd_max, r.mesd.mesd_var
    )
}

/// Write a synthetic dataset as CSV plus the schema needed to load it back.
pub fn synth(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = match &cfg.dataset {
        DatasetSource::Synthetic { spec } => spec.clone(),
        _ => return Err(Error::Config("synth needs a synthetic dataset source".into())),
    };
    prepare_out(out)?;
    let ds = cfg.dataset.load()?;
    ds.write_csv(&out.join("dataset.csv"))?;
    let schema = CsvSchema {
        label_column: ds.schema.label_column.clone(),
        protected_columns: ds.schema.protected_columns.clone(),
        ..CsvSchema::default()
    };
    write_json(&out.join("schema.json"), &schema)?;
    write_json(&out.join("spec.json"), &spec)?;
    write_census(out, &ds)?;
    Ok(Outcome {
        stdout: vec![format!("wrote {} rows to {}", ds.n_rows(), out.join("dataset.csv").display())],
        warnings: Vec::new(),
    })
}

/// Train (or load) one model and audit it on the test split.
pub fn audit(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let ds = cfg.dataset.load()?;
    let model = match &cfg.model.path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Classifier::from_json(&text)?
        }
        None => {
            let rows = ds.indices(Split::Train);
            train(
                &ds.rows(&rows),
                &ds.labels(&rows),
                cfg.model.kind,
                &cfg.model.hp,
                training_seed(cfg.master_seed),
            )?
        }
    };
    if model.n_features() != ds.n_features() {
        return Err(Error::Shape {
            expected: ds.n_features(),
            actual: model.n_features(),
        });
    }
    let threshold = model.hp.threshold;
    let eval = cfg.eval_config();
    let audit = audit_model(&model, threshold, &ds, Split::Test, &eval, cfg.master_seed)?;

    prepare_out(out)?;
    write_config(out, cfg)?;
    write_text(&out.join("model.json"), &model.to_json())?;
    let doc = ReportDocument {
        command: "audit".into(),
        model_file: "model.json".into(),
        hyperparams: model.hp,
        group_names: group_names(&ds),
        report: audit.report.clone(),
    };
    write_audit_files(out, &ds, &audit, &doc)?;
    Ok(Outcome {
        stdout: vec![metric_line("audit:", &audit.report)],
        warnings: mesd_warnings(&audit.report),
    })
}

/// Contents of `front.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontDocument {
    pub front: ParetoFront,
    pub pick: ChebyshevPick,
    /// Hypervolume of the population's rank-0 set after each generation.
    pub hypervolume: Vec<f64>,
    pub hv_reference: [f64; 3],
}

/// Seed shared by every configuration evaluated in one search.
pub fn evaluation_seed(master_seed: u64) -> u64 {
    seed::derive_labeled(master_seed, 0, "evaluate")
}

/// NSGA-II search, Chebyshev pick, and a test-split audit of the pick.
pub fn optimize(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let ds = cfg.dataset.load()?;
    let eval = cfg.eval_config();
    let eval_seed = evaluation_seed(cfg.master_seed);
    let result = evolve(&cfg.search, cfg.master_seed, |g| {
        Ok(evaluate_config(&g.hyperparams(), &ds, &eval, eval_seed)?.objectives)
    })?;
    let pick = chebyshev_select(&result.front, None, cfg.ideal)?;
    let hp = pick.chosen.hyperparams();
    let chosen = evaluate_config(&hp, &ds, &eval, eval_seed)?;
    let model = chosen
        .model
        .ok_or_else(|| Error::Numeric("the selected configuration failed to train".into()))?;
    let audit = audit_model(&model, hp.threshold, &ds, Split::Test, &eval, eval_seed)?;

    prepare_out(out)?;
    write_config(out, cfg)?;
    let mut archive = String::new();
    for entry in &result.archive {
        archive.push_str(&serde_json::to_string(entry)?);
        archive.push('\n');
    }
    write_text(&out.join(ARCHIVE_FILE), &archive)?;
    let front_doc = FrontDocument {
        front: result.front.clone(),
        pick: pick.clone(),
        hypervolume: result.history.iter().map(|h| hypervolume(h, HV_REFERENCE)).collect(),
        hv_reference: HV_REFERENCE,
    };
    write_json(&out.join(FRONT_FILE), &front_doc)?;
    let model_file = format!("model_{:016x}.json", pick.chosen.hash64());
    write_text(&out.join(&model_file), &model.to_json())?;
    let doc = ReportDocument {
        command: "optimize".into(),
        model_file,
        hyperparams: hp,
        group_names: group_names(&ds),
        report: audit.report.clone(),
    };
    write_audit_files(out, &ds, &audit, &doc)?;

    let g = pick.chosen;
    let o = pick.objectives;
    Ok(Outcome {
        stdout: vec![
            format!(
                "chebyshev pick: threshold={:.4} l2={:.3e} lr={:.3e} epochs={} dropout={:.4} | val f_perf={:.4} f_out={:.4} f_proc={:.4} | front size {}",
                g.threshold,
                hp.l2,
                hp.learning_rate,
                g.epochs,
                g.dropout,
                o.f_perf,
                o.f_out,
                o.f_proc,
                result.front.members.len()
            ),
            metric_line("test:", &audit.report),
        ],
        warnings: mesd_warnings(&audit.report),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Metrics of one run directory as shown by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: String,
    pub auc: f64,
    pub f1: f64,
    pub dp: f64,
    pub eod: f64,
    pub mesd: f64,
    pub mesd_max: f64,
    pub mesd_var: f64,
    pub mesd_degenerate: bool,
}

const METRICS: [&str; 5] = ["AUC", "F1", "DP", "EOD", "MESD"];

impl RunMetrics {
    fn values(&self) -> [f64; 5] {
        [self.auc, self.f1, self.dp, self.eod, self.mesd]
    }
}

fn artifact(dir: &Path, what: &str, detail: impl std::fmt::Display) -> Error {
    Error::Artifact(format!("{}: {what}: {detail}", dir.display()))
}

fn read_report(dir: &Path) -> Result<RunMetrics> {
    let path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| artifact(dir, REPORT_FILE, e))?;
    let doc: ReportDocument = serde_json::from_str(&text).map_err(|e| artifact(dir, REPORT_FILE, e))?;
    let r = doc.report;
    Ok(RunMetrics {
        run: dir.display().to_string(),
        auc: r.auc,
        f1: r.f1,
        dp: r.dp_gap.value,
        eod: r.eod_gap.value,
        mesd: r.mesd.mesd_cvar,
        mesd_max: r.mesd.mesd_max,
        mesd_var: r.mesd.mesd_var,
        mesd_degenerate: r.mesd.degenerate,
    })
}

fn read_archive(dir: &Path) -> Result<Option<Vec<ArchiveEntry>>> {
    let path = dir.join(ARCHIVE_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| artifact(dir, ARCHIVE_FILE, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| serde_json::from_str(line).map_err(|e| artifact(dir, ARCHIVE_FILE, format!("line {}: {e}", i + 1))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Values are printed with `{}` everywhere so every format carries the same
/// numbers.
fn render(runs: &[RunMetrics], format: Format) -> Result<String> {
    let mut s = String::new();
    match format {
        Format::Table => {
            let names: Vec<String> = runs.iter().map(|r| r.run.clone()).collect();
            let cells: Vec<Vec<String>> = METRICS
                .iter()
                .enumerate()
                .map(|(m, _)| runs.iter().map(|r| r.values()[m].to_string()).collect())
                .collect();
            let mut widths: Vec<usize> = names.iter().map(String::len).collect();
            for row in &cells {
                for (w, c) in widths.iter_mut().zip(row) {
                    *w = (*w).max(c.len());
                }
            }
            let _ = write!(s, "{:<6}", "metric");
            for (n, w) in names.iter().zip(&widths) {
                let _ = write!(s, "  {n:>w$}");
            }
            s.push('\n');
            for (metric, row) in METRICS.iter().zip(&cells) {
                let _ = write!(s, "{metric:<6}");
                for (c, w) in row.iter().zip(&widths) {
                    let _ = write!(s, "  {c:>w$}");
                }
                s.push('\n');
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["run".to_string()];
            header.extend(METRICS.iter().map(|m| m.to_lowercase()));
            w.write_record(&header)?;
            for r in runs {
                let mut rec = vec![r.run.clone()];
                rec.extend(r.values().iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Artifact(e.to_string()))?;
            s = String::from_utf8(bytes).map_err(|e| Error::Artifact(e.to_string()))?;
        }
        Format::Json => {
            s = serde_json::to_string_pretty(runs)?;
            s.push('\n');
        }
    }
    Ok(s)
}

/// Compare run directories; with `out`, also write plot-ready CSVs.
pub fn report(dirs: &[PathBuf], format: Format, out: Option<&Path>) -> Result<Outcome> {
    if dirs.is_empty() {
        return Err(Error::Config("report needs at least one run directory".into()));
    }
    let runs: Vec<RunMetrics> = dirs.iter().map(|d| read_report(d)).collect::<Result<_>>()?;
    let archives: Vec<Option<Vec<ArchiveEntry>>> = dirs.iter().map(|d| read_archive(d)).collect::<Result<_>>()?;
    if let Some(out) = out {
        prepare_out(out)?;
        let path = out.join("pareto_points.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["run", "generation", "index", "f_perf", "f_out", "f_proc"])?;
        for (run, archive) in runs.iter().zip(&archives) {
            for e in archive.iter().flatten() {
                w.write_record([
                    run.run.clone(),
                    e.generation.to_string(),
                    e.index.to_string(),
                    e.objectives.f_perf.to_string(),
                    e.objectives.f_out.to_string(),
                    e.objectives.f_proc.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let path = out.join("mesd_variants.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["run", "mesd_cvar", "mesd_max", "mesd_var", "degenerate"])?;
        for r in &runs {
            w.write_record([
                r.run.clone(),
                r.mesd.to_string(),
                r.mesd_max.to_string(),
                r.mesd_var.to_string(),
                r.mesd_degenerate.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(Outcome {
        stdout: vec![render(&runs, format)?.trim_end().to_string()],
        warnings: Vec::new(),
    })
}
