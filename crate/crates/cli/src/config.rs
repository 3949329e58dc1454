//! The run configuration document.

use std::path::{Path, PathBuf};

use mesd_core::data::{generate_synthetic, load_csv, CsvSchema, SplitSpec, SyntheticSpec, TabularDataset};
use mesd_core::explain::ExplainConfig;
use mesd_core::mesd::MesdConfig;
use mesd_core::model::{HyperParams, ModelKind};
use mesd_core::objectives::EvalConfig;
use mesd_core::optimize::{IdealPoint, SearchConfig};
use mesd_core::perturb::PerturbSettings;
use mesd_core::stability::StabilityConfig;
use mesd_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Named synthetic generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    CensusLike,
    PlantedInstability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        schema: CsvSchema,
        #[serde(default)]
        split: SplitSpec,
    },
    Synthetic {
        spec: SyntheticSpec,
    },
    /// Shorthand expanded into `Synthetic` when the config is resolved.
    Preset {
        name: Preset,
        n: usize,
        #[serde(default)]
        skew: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl DatasetSource {
    pub fn resolve(self) -> DatasetSource {
        match self {
            DatasetSource::Preset { name, n, skew, seed } => DatasetSource::Synthetic {
                spec: match name {
                    Preset::CensusLike => SyntheticSpec::census_like(n, skew, seed),
                    Preset::PlantedInstability => SyntheticSpec::planted_instability(n, seed),
                },
            },
            other => other,
        }
    }

    pub fn load(&self) -> Result<TabularDataset> {
        match self {
            DatasetSource::Csv { path, schema, split } => load_csv(path, schema, split),
            DatasetSource::Synthetic { spec } => generate_synthetic(spec),
            DatasetSource::Preset { .. } => self.clone().resolve().load(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub hp: HyperParams,
    /// Audit a saved model instead of training one.
    pub path: Option<PathBuf>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            kind: ModelKind::Mlp2,
            hp: HyperParams::default(),
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub version: u32,
    pub dataset: DatasetSource,
    pub model: ModelSection,
    pub explain: ExplainConfig,
    pub perturb: PerturbSettings,
    pub stability: StabilityConfig,
    pub mesd: MesdConfig,
    pub search: SearchConfig,
    pub ideal: IdealPoint,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            dataset: DatasetSource::Preset {
                name: Preset::PlantedInstability,
                n: 2000,
                skew: 0.0,
                seed: 0,
            },
            model: ModelSection::default(),
            explain: ExplainConfig::default(),
            perturb: PerturbSettings::default(),
            stability: StabilityConfig::default(),
            mesd: MesdConfig::default(),
            search: SearchConfig::default(),
            ideal: IdealPoint::default(),
            master_seed: 0,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text)
    }

    /// Expand shorthands and check every section, so the serialized form
    /// reproduces the run on its own.
    pub fn resolve(mut self) -> Result<RunConfig> {
        self.dataset = self.dataset.resolve();
        self.explain.weights.validate()?;
        self.mesd.validate()?;
        self.search.validate()?;
        if !(self.stability.lambda > 0.0) || self.stability.n_max == 0 {
            return Err(Error::Config("stability needs lambda > 0 and n_max ≥ 1".into()));
        }
        Ok(self)
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            model_kind: self.model.kind,
            explain: self.explain.clone(),
            perturb: self.perturb,
            stability: self.stability,
            mesd: self.mesd,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
