//! Experiment configuration file (TOML).
//!
//! ```toml
//! definitions = ["region:SA3", "intersect(region:SA3, station:4000)"]
//! benchmark = "MTL-L21"
//!
//! [data]
//! path = "sales.csv"          # or a [data.synthetic] table
//!
//! [plan]
//! k = 3
//!
//! [[methods]]
//! model = "mtl_group_l21"
//! theta1 = [0.1, 1.0, 10.0]
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hpmtl::data::{FeatureSchema, SyntheticConfig};
use hpmtl::eval::MethodSpec;
use hpmtl::solver::SolverParams;
use hpmtl::tasks::TaskDefinition;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Delimited transaction file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Schema file (TOML list of entries); the reference schema when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_h")]
    pub h: usize,
}

fn default_k() -> usize {
    3
}

fn default_h() -> usize {
    1
}

fn default_alpha() -> f64 {
    0.05
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig { k: 3, h: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    /// Task definitions in compact form.
    pub definitions: Vec<String>,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub plan: PlanConfig,
    /// Label of the comparison benchmark; the first method when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Overrides the synthetic generator seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub solver: SolverParams,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data.path, &self.data.synthetic) {
            (Some(_), Some(_)) => bail!("data: give either path or synthetic, not both"),
            (None, None) => bail!("data: a path or a synthetic table is required"),
            (None, Some(s)) => s.validate()?,
            (Some(_), None) => {}
        }
        if self.definitions.is_empty() {
            bail!("at least one task definition is required");
        }
        self.task_definitions()?;
        if self.methods.is_empty() {
            bail!("at least one method is required");
        }
        for m in &self.methods {
            m.validate()?;
        }
        if self.plan.k == 0 {
            bail!("plan.k must be at least 1");
        }
        if self.plan.h != 1 {
            bail!("plan.h must be 1; only one-month-ahead prediction is evaluated");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha must lie in (0, 1)");
        }
        if let Some(b) = &self.benchmark {
            if !self.methods.iter().any(|m| &m.label() == b) {
                bail!("benchmark {b} is not one of the configured methods");
            }
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        self.solver.validate()?;
        Ok(())
    }

    /// Parsed task definitions; errors name the entry and the column.
    pub fn task_definitions(&self) -> Result<Vec<TaskDefinition>> {
        self.definitions
            .iter()
            .enumerate()
            .map(|(i, text)| {
                text.parse::<TaskDefinition>()
                    .with_context(|| format!("definitions[{i}] {text:?}"))
            })
            .collect()
    }

    pub fn benchmark_label(&self) -> String {
        self.benchmark
            .clone()
            .unwrap_or_else(|| self.methods[0].label())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        match &self.data.schema {
            Some(p) => {
                let path = self.resolve(p);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("cannot read schema {}", path.display()))?;
                Ok(toml::from_str(&text).with_context(|| format!("invalid schema {}", path.display()))?)
            }
            None => Ok(FeatureSchema::melbourne()),
        }
    }

    /// Synthetic settings with the seed override applied.
    pub fn synthetic(&self, seed: Option<u64>) -> Option<SyntheticConfig> {
        self.data.synthetic.clone().map(|mut s| {
            if let Some(seed) = seed.or(self.seed) {
                s.seed = seed;
            }
            s
        })
    }
}
