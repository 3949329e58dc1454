//! Tabular ingestion, protected-attribute binding and intersectional
//! subgroup assignment.
//!
//! Every row carries one categorical code per protected attribute; the
//! ordered tuple of codes is the row's [`SubgroupKey`]. Features are
//! standardized with train-split statistics so that perturbation scales are
//! expressed in standard-deviation units.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    /// One dummy column of a one-hot encoded categorical column.
    OneHot { source: String, level: String },
}

/// Resolved description of the model-facing feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    pub protected_columns: Vec<String>,
    pub label_column: String,
    /// Masking baseline per feature, in standardized units.
    pub baseline_values: Vec<f64>,
}

impl FeatureSchema {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Feature index blocks that must be masked together: each numeric
    /// feature on its own, each one-hot source column as a single block.
    pub fn mask_blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut by_source: BTreeMap<&str, usize> = BTreeMap::new();
        for (j, kind) in self.feature_kinds.iter().enumerate() {
            match kind {
                FeatureKind::Numeric => blocks.push(vec![j]),
                FeatureKind::OneHot { source, .. } => match by_source.get(source.as_str()) {
                    Some(&b) => blocks[b].push(j),
                    None => {
                        by_source.insert(source, blocks.len());
                        blocks.push(vec![j]);
                    }
                },
            }
        }
        blocks
    }

    fn validate(&self) -> Result<()> {
        if self.protected_columns.is_empty() {
            return Err(Error::Schema("at least one protected column is required".into()));
        }
        if self.protected_columns.contains(&self.label_column) {
            return Err(Error::Schema(format!(
                "label column '{}' cannot also be protected",
                self.label_column
            )));
        }
        if self.baseline_values.len() != self.feature_names.len()
            || self.feature_kinds.len() != self.feature_names.len()
        {
            return Err(Error::Schema("one baseline and one kind per feature required".into()));
        }
        Ok(())
    }
}

/// Intersectional subgroup: one code per protected attribute, in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubgroupKey {
    pub codes: Vec<u32>,
}

impl fmt::Display for SubgroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.codes.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Map a row's protected codes to its subgroup.
pub fn subgroup_of(codes: &[u32]) -> SubgroupKey {
    SubgroupKey {
        codes: codes.to_vec(),
    }
}

/// Per-feature affine map used to standardize; identity for one-hot dummies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn destandardize(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * self.std[j] + self.mean[j])
    }

    pub fn standardize_value(&self, j: usize, v: f64) -> f64 {
        (v - self.mean[j]) / self.std[j]
    }
}

/// Rows excluded at load time, by reason (1-based data line numbers).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RejectReport {
    pub missing_protected: Vec<usize>,
    pub missing_feature: Vec<usize>,
}

impl RejectReport {
    pub fn total(&self) -> usize {
        self.missing_protected.len() + self.missing_feature.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub schema: FeatureSchema,
    /// n × d standardized features.
    pub x: DMatrix<f64>,
    pub y: Vec<u8>,
    /// n rows of m protected codes.
    pub protected: Vec<Vec<u32>>,
    /// Level names per protected attribute, indexed by code.
    pub protected_levels: Vec<Vec<String>>,
    pub split: Vec<Split>,
    pub standardization: Standardization,
    pub rejected: RejectReport,
}

impl TabularDataset {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn subgroup(&self, row: usize) -> SubgroupKey {
        subgroup_of(&self.protected[row])
    }

    pub fn subgroups(&self) -> Vec<SubgroupKey> {
        (0..self.n_rows()).map(|i| self.subgroup(i)).collect()
    }

    /// Human-readable subgroup name, e.g. `white_female`.
    pub fn subgroup_name(&self, key: &SubgroupKey) -> String {
        key.codes
            .iter()
            .enumerate()
            .map(|(a, &c)| {
                self.protected_levels
                    .get(a)
                    .and_then(|levels| levels.get(c as usize))
                    .cloned()
                    .unwrap_or_else(|| c.to_string())
            })
            .collect::<Vec<_>>()
            .join("_")
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn rows(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), self.n_features(), |r, c| self.x[(idx[r], c)])
    }

    pub fn labels(&self, idx: &[usize]) -> Vec<u8> {
        idx.iter().map(|&i| self.y[i]).collect()
    }

    /// Restrict to a set of rows (keeps schema and statistics).
    pub fn subset(&self, idx: &[usize]) -> TabularDataset {
        TabularDataset {
            schema: self.schema.clone(),
            x: self.rows(idx),
            y: self.labels(idx),
            protected: idx.iter().map(|&i| self.protected[i].clone()).collect(),
            protected_levels: self.protected_levels.clone(),
            split: idx.iter().map(|&i| self.split[i]).collect(),
            standardization: self.standardization.clone(),
            rejected: RejectReport::default(),
        }
    }

    /// Write the dataset back out in original units: features, then protected
    /// columns as level names, then the label.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Data(format!("{other:?}")),
        })?;
        let mut header = self.schema.feature_names.clone();
        header.extend(self.schema.protected_columns.iter().cloned());
        header.push(self.schema.label_column.clone());
        w.write_record(&header)?;
        let raw = self.standardization.destandardize(&self.x);
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = (0..self.n_features())
                .map(|j| format!("{:.17e}", raw[(i, j)]))
                .collect();
            for (a, &c) in self.protected[i].iter().enumerate() {
                rec.push(self.protected_levels[a][c as usize].clone());
            }
            rec.push(self.y[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.6,
            val: 0.2,
            test: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) || self.train <= 0.0 {
            return Err(Error::Config("split fractions must be non-negative with train > 0".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split fractions must sum to 1".into()));
        }
        Ok(())
    }

    /// Seeded shuffle, then train/val/test by rounded fractions.
    pub fn assign(&self, n: usize) -> Result<Vec<Split>> {
        self.validate()?;
        let n_train = ((self.train * n as f64).round() as usize).min(n);
        let n_val = ((self.val * n as f64).round() as usize).min(n - n_train);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(self.seed));
        let mut split = vec![Split::Test; n];
        for (pos, &i) in order.iter().enumerate() {
            split[i] = if pos < n_train {
                Split::Train
            } else if pos < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
        Ok(split)
    }
}

/// How to read a user-supplied CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub label_column: String,
    /// Label value mapped to 1; when absent the column must already be 0/1.
    pub positive_label: Option<String>,
    pub protected_columns: Vec<String>,
    /// Non-protected columns to one-hot encode. Columns holding any
    /// non-numeric value are encoded even when not listed.
    pub categorical_columns: Vec<String>,
    pub ignore_columns: Vec<String>,
    /// Also feed protected columns (one-hot) to the model.
    pub include_protected_features: bool,
    /// Baseline overrides in original feature units, by feature name.
    pub baseline_overrides: BTreeMap<String, f64>,
    pub missing_markers: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label_column: "label".into(),
            positive_label: None,
            protected_columns: Vec::new(),
            categorical_columns: Vec::new(),
            ignore_columns: Vec::new(),
            include_protected_features: false,
            baseline_overrides: BTreeMap::new(),
            missing_markers: vec!["".into(), "?".into(), "NA".into()],
        }
    }
}

fn map_csv_open(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{other:?}")),
    }
}

/// Load a CSV, encode categoricals, split and standardize.
pub fn load_csv(path: &Path, schema: &CsvSchema, split: &SplitSpec) -> Result<TabularDataset> {
    split.validate()?;
    if schema.protected_columns.is_empty() {
        return Err(Error::Schema("at least one protected column is required".into()));
    }
    if schema.protected_columns.contains(&schema.label_column) {
        return Err(Error::Schema("label column cannot be protected".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| map_csv_open(path, e))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    };
    let label_idx = find(&schema.label_column)?;
    let protected_idx: Vec<usize> = schema
        .protected_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;
    for c in schema.ignore_columns.iter().chain(&schema.categorical_columns) {
        find(c)?;
    }
    let mut feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| {
            j != label_idx
                && !schema.ignore_columns.contains(&headers[j])
                && (schema.include_protected_features || !protected_idx.contains(&j))
        })
        .collect();
    feature_cols.sort_unstable();

    let is_missing = |v: &str| schema.missing_markers.iter().any(|m| m == v);
    let mut rejected = RejectReport::default();
    let mut records: Vec<csv::StringRecord> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = line + 1;
        if protected_idx.iter().any(|&j| is_missing(rec.get(j).unwrap_or(""))) {
            rejected.missing_protected.push(line);
            continue;
        }
        if is_missing(rec.get(label_idx).unwrap_or(""))
            || feature_cols.iter().any(|&j| is_missing(rec.get(j).unwrap_or("")))
        {
            rejected.missing_feature.push(line);
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::EmptyInput(format!("no usable rows in {}", path.display())));
    }

    let y = map_labels(&records, label_idx, schema)?;

    let mut protected_levels: Vec<Vec<String>> = Vec::new();
    let mut protected_codes: Vec<Vec<u32>> = vec![Vec::with_capacity(protected_idx.len()); records.len()];
    for &j in &protected_idx {
        let levels: BTreeSet<&str> = records.iter().map(|r| &r[j]).collect();
        let levels: Vec<String> = levels.into_iter().map(str::to_string).collect();
        for (row, rec) in records.iter().enumerate() {
            let code = levels.binary_search_by(|l| l.as_str().cmp(&rec[j])).expect("level present");
            protected_codes[row].push(code as u32);
        }
        protected_levels.push(levels);
    }

    // Resolve each feature column as numeric or categorical.
    let mut names = Vec::new();
    let mut kinds = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for &j in &feature_cols {
        let header = &headers[j];
        let parsed: Option<Vec<f64>> = records.iter().map(|r| r[j].parse::<f64>().ok()).collect();
        let forced = schema.categorical_columns.contains(header) || protected_idx.contains(&j);
        match parsed {
            Some(values) if !forced => {
                names.push(header.clone());
                kinds.push(FeatureKind::Numeric);
                columns.push(values);
            }
            _ => {
                let levels: BTreeSet<&str> = records.iter().map(|r| &r[j]).collect();
                for level in levels {
                    names.push(format!("{header}={level}"));
                    kinds.push(FeatureKind::OneHot {
                        source: header.clone(),
                        level: level.to_string(),
                    });
                    columns.push(records.iter().map(|r| f64::from(u8::from(&r[j] == level))).collect());
                }
            }
        }
    }

    let n = records.len();
    let split_tags = split.assign(n)?;
    let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let schema_out = FeatureSchema {
        feature_names: names,
        feature_kinds: kinds,
        protected_columns: schema.protected_columns.clone(),
        label_column: schema.label_column.clone(),
        baseline_values: Vec::new(),
    };
    finalize(x, y, protected_codes, protected_levels, split_tags, schema_out, rejected, &schema.baseline_overrides)
}

fn map_labels(records: &[csv::StringRecord], label_idx: usize, schema: &CsvSchema) -> Result<Vec<u8>> {
    match &schema.positive_label {
        Some(pos) => {
            let distinct: BTreeSet<&str> = records.iter().map(|r| &r[label_idx]).collect();
            if distinct.len() > 2 {
                return Err(Error::Data(format!(
                    "label column '{}' has {} distinct values; expected a binary label",
                    schema.label_column,
                    distinct.len()
                )));
            }
            Ok(records.iter().map(|r| u8::from(&r[label_idx] == pos)).collect())
        }
        None => records
            .iter()
            .enumerate()
            .map(|(i, r)| match &r[label_idx] {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::Data(format!(
                    "row {}: label '{other}' is not 0/1 (set positive_label to map it)",
                    i + 1
                ))),
            })
            .collect(),
    }
}

/// Standardize numeric features on the train split and fix baselines.
#[allow(clippy::too_many_arguments)]
fn finalize(
    mut x: DMatrix<f64>,
    y: Vec<u8>,
    protected: Vec<Vec<u32>>,
    protected_levels: Vec<Vec<String>>,
    split: Vec<Split>,
    mut schema: FeatureSchema,
    rejected: RejectReport,
    baseline_overrides: &BTreeMap<String, f64>,
) -> Result<TabularDataset> {
    let d = x.ncols();
    let train: Vec<usize> = (0..split.len()).filter(|&i| split[i] == Split::Train).collect();
    if train.is_empty() {
        return Err(Error::EmptyInput("train split is empty".into()));
    }
    let mut mean = vec![0.0; d];
    let mut std = vec![1.0; d];
    for j in 0..d {
        if schema.feature_kinds[j] != FeatureKind::Numeric {
            continue;
        }
        let m = train.iter().map(|&i| x[(i, j)]).sum::<f64>() / train.len() as f64;
        let var = train.iter().map(|&i| (x[(i, j)] - m).powi(2)).sum::<f64>() / train.len() as f64;
        mean[j] = m;
        std[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        for i in 0..x.nrows() {
            x[(i, j)] = (x[(i, j)] - m) / std[j];
        }
    }
    let standardization = Standardization { mean, std };
    let mut baseline: Vec<f64> = (0..d)
        .map(|j| train.iter().map(|&i| x[(i, j)]).sum::<f64>() / train.len() as f64)
        .collect();
    for (name, value) in baseline_overrides {
        let j = schema
            .feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::Config(format!("baseline override for unknown feature '{name}'")))?;
        baseline[j] = standardization.standardize_value(j, *value);
    }
    schema.baseline_values = baseline;
    schema.validate()?;
    Ok(TabularDataset {
        schema,
        x,
        y,
        protected,
        protected_levels,
        split,
        standardization,
        rejected,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCount {
    pub count: usize,
    pub count_y0: usize,
    pub count_y1: usize,
}

/// Realized subgroups with total and per-label counts.
pub fn subgroup_census(ds: &TabularDataset) -> BTreeMap<SubgroupKey, GroupCount> {
    census_of(ds, None)
}

/// Census restricted to one split.
pub fn split_census(ds: &TabularDataset, split: Split) -> BTreeMap<SubgroupKey, GroupCount> {
    census_of(ds, Some(split))
}

fn census_of(ds: &TabularDataset, split: Option<Split>) -> BTreeMap<SubgroupKey, GroupCount> {
    let mut out: BTreeMap<SubgroupKey, GroupCount> = BTreeMap::new();
    for i in 0..ds.n_rows() {
        if split.is_some_and(|s| ds.split[i] != s) {
            continue;
        }
        let c = out.entry(ds.subgroup(i)).or_default();
        c.count += 1;
        if ds.y[i] == 1 {
            c.count_y1 += 1;
        } else {
            c.count_y0 += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub group: String,
    pub codes: Vec<u32>,
    #[serde(flatten)]
    pub counts: GroupCount,
}

pub fn census_entries(ds: &TabularDataset, census: &BTreeMap<SubgroupKey, GroupCount>) -> Vec<CensusEntry> {
    census
        .iter()
        .map(|(k, c)| CensusEntry {
            group: ds.subgroup_name(k),
            codes: k.codes.clone(),
            counts: *c,
        })
        .collect()
}

/// One intersectional cell of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    /// One level name per protected attribute.
    pub levels: Vec<String>,
    pub size: usize,
    /// Fraction of positive labels; the positive count is `round(rate·size)`.
    pub positive_rate: f64,
    /// Fraction of rows whose features are drawn from the opposite class.
    #[serde(default)]
    pub label_noise: f64,
    /// Multiplier on the isotropic feature noise for this group.
    #[serde(default = "one")]
    pub noise_scale: f64,
    /// Multiplier on the class separation for this group.
    #[serde(default = "one")]
    pub separation_scale: f64,
    /// Group center in feature space; seeded random direction when absent.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub attributes: Vec<String>,
    pub groups: Vec<GroupSpec>,
    pub n_features: usize,
    /// Distance between the two class means.
    pub class_separation: f64,
    /// Isotropic feature noise standard deviation.
    pub noise: f64,
    /// Norm of generated group centers.
    pub group_spread: f64,
    #[serde(default)]
    pub split: SplitSpec,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Two protected attributes (race × gender), four cells whose sizes
    /// decay geometrically with `skew` (0 = equal sizes).
    pub fn census_like(n: usize, skew: f64, seed: u64) -> SyntheticSpec {
        let cells = [
            ["other", "male"],
            ["white", "male"],
            ["other", "female"],
            ["white", "female"],
        ];
        let ratio = 1.0 - skew.clamp(0.0, 0.999_999);
        let weights: Vec<f64> = (0..cells.len()).map(|i| ratio.powi(i as i32)).collect();
        let total: f64 = weights.iter().sum();
        let groups = cells
            .iter()
            .zip(&weights)
            .map(|(levels, w)| GroupSpec {
                levels: levels.iter().map(|s| s.to_string()).collect(),
                size: ((n as f64 * w / total).round() as usize).max(1),
                positive_rate: 0.5,
                label_noise: 0.0,
                noise_scale: 1.0,
                separation_scale: 1.0,
                center: None,
            })
            .collect();
        SyntheticSpec {
            attributes: vec!["race".into(), "gender".into()],
            groups,
            n_features: 6,
            class_separation: 2.0,
            noise: 1.0,
            group_spread: 1.0,
            split: SplitSpec {
                seed,
                ..SplitSpec::default()
            },
            seed,
        }
    }

    /// Census-like data with planted instability in the smallest cell
    /// (`white_female`, 5 % of rows). That cell sits tightly around the
    /// population mean, which is also the masking baseline, with heavy label
    /// noise and a weak class signal; the other centers are shifted so the
    /// population mean is the origin.
    pub fn planted_instability(n: usize, seed: u64) -> SyntheticSpec {
        let mut spec = SyntheticSpec::census_like(n, 0.0, seed);
        let shares = [0.40, 0.30, 0.25, 0.05];
        for (g, share) in spec.groups.iter_mut().zip(shares) {
            g.size = ((n as f64 * share).round() as usize).max(1);
        }
        let d = spec.n_features;
        let mut rng = seed::rng(seed::derive_labeled(seed, 0, "planted-centers"));
        let raw: Vec<Vec<f64>> = (0..3)
            .map(|_| unit_vector(&mut rng, d).into_iter().map(|v| v * spec.group_spread).collect())
            .collect();
        let mass: f64 = shares[..3].iter().sum();
        let mean: Vec<f64> = (0..d)
            .map(|j| raw.iter().zip(shares).map(|(c, s)| s * c[j]).sum::<f64>() / mass)
            .collect();
        for (g, c) in spec.groups.iter_mut().zip(&raw) {
            g.center = Some(c.iter().zip(&mean).map(|(a, m)| a - m).collect());
        }
        let planted = spec.groups.last_mut().expect("four cells");
        planted.label_noise = 0.4;
        planted.noise_scale = 0.3;
        planted.separation_scale = 0.25;
        planted.center = Some(vec![0.0; d]);
        spec
    }

    fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Config("synthetic spec has no groups".into()));
        }
        if self.attributes.is_empty() {
            return Err(Error::Config("synthetic spec needs at least one protected attribute".into()));
        }
        if self.n_features == 0 {
            return Err(Error::Config("n_features must be positive".into()));
        }
        for g in &self.groups {
            if g.size == 0 {
                return Err(Error::Config("group sizes must be ≥ 1".into()));
            }
            if g.levels.len() != self.attributes.len() {
                return Err(Error::Config("each group needs one level per attribute".into()));
            }
            if !(0.0..=1.0).contains(&g.positive_rate) || !(0.0..=1.0).contains(&g.label_noise) {
                return Err(Error::Config("rates must lie in [0,1]".into()));
            }
            if g.center.as_ref().is_some_and(|c| c.len() != self.n_features) {
                return Err(Error::Config("group center length must equal n_features".into()));
            }
        }
        Ok(())
    }
}

fn unit_vector(rng: &mut seed::Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Generate a seeded synthetic dataset whose per-group class counts match
/// `spec` exactly.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<TabularDataset> {
    spec.validate()?;
    let d = spec.n_features;
    let mut rng = seed::rng(spec.seed);
    let class_dir = unit_vector(&mut rng, d);

    let mut protected_levels: Vec<Vec<String>> = vec![Vec::new(); spec.attributes.len()];
    for g in &spec.groups {
        for (a, level) in g.levels.iter().enumerate() {
            if !protected_levels[a].contains(level) {
                protected_levels[a].push(level.clone());
            }
        }
    }
    for levels in &mut protected_levels {
        levels.sort();
    }

    let n: usize = spec.groups.iter().map(|g| g.size).sum();
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    let mut protected = Vec::with_capacity(n);
    for g in &spec.groups {
        let center = match &g.center {
            Some(c) => c.clone(),
            None => unit_vector(&mut rng, d).into_iter().map(|v| v * spec.group_spread).collect(),
        };
        let codes: Vec<u32> = g
            .levels
            .iter()
            .enumerate()
            .map(|(a, l)| protected_levels[a].iter().position(|x| x == l).expect("level") as u32)
            .collect();
        let n_pos = (g.positive_rate * g.size as f64).round() as usize;
        for i in 0..g.size {
            let label = u8::from(i < n_pos);
            let flipped = rng.random::<f64>() < g.label_noise;
            let side = if (label == 1) != flipped { 0.5 } else { -0.5 };
            for j in 0..d {
                let eps: f64 = StandardNormal.sample(&mut rng);
                data.push(center[j] + side * spec.class_separation * g.separation_scale * class_dir[j] + spec.noise * g.noise_scale * eps);
            }
            y.push(label);
            protected.push(codes.clone());
        }
    }
    let x = DMatrix::from_row_slice(n, d, &data);
    let split = spec.split.assign(n)?;
    let schema = FeatureSchema {
        feature_names: (0..d).map(|j| format!("x{j}")).collect(),
        feature_kinds: vec![FeatureKind::Numeric; d],
        protected_columns: spec.attributes.clone(),
        label_column: "label".into(),
        baseline_values: Vec::new(),
    };
    finalize(x, y, protected, protected_levels, split, schema, RejectReport::default(), &BTreeMap::new())
}
