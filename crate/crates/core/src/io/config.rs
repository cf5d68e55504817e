use crate::experiments::abc::AbcConfig;
use crate::experiments::irf::IrfConfig;
use crate::experiments::sobol::SobolSpec;
use crate::io::data::SeriesKind;
use crate::network::{Placement, Topology, TopologyConfig};
use crate::params::{ModelParams, DEFAULT_BURN_IN};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    SmallWorld,
    StochasticBlock,
    ScaleFree,
}

/// Flat form of [`TopologyConfig`]: every knob of every topology, of which
/// only those of `kind` are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologySection {
    pub kind: TopologyKind,
    /// Defaults to `block_split` for the block model and `random` otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
    pub density: f64,
    pub p_rewire: f64,
    pub partitions: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Edge list used for every seed instead of a generated graph.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network_file: Option<PathBuf>,
}

impl Default for TopologySection {
    fn default() -> Self {
        Self {
            kind: TopologyKind::SmallWorld,
            placement: None,
            density: 0.1,
            p_rewire: 0.01,
            partitions: 2,
            p_intra: 0.1,
            p_inter: 0.001,
            alpha: 0.41,
            beta: 0.54,
            gamma: 0.05,
            network_file: None,
        }
    }
}

impl TopologySection {
    pub fn to_config(&self) -> TopologyConfig {
        let variant = match self.kind {
            TopologyKind::SmallWorld => Topology::SmallWorld {
                density: self.density,
                p_rewire: self.p_rewire,
            },
            TopologyKind::StochasticBlock => Topology::StochasticBlock {
                partitions: self.partitions,
                p_intra: self.p_intra,
                p_inter: self.p_inter,
            },
            TopologyKind::ScaleFree => Topology::ScaleFree {
                alpha: self.alpha,
                beta: self.beta,
                gamma: self.gamma,
            },
        };
        let placement = self.placement.unwrap_or(match self.kind {
            TopologyKind::StochasticBlock => Placement::BlockSplit,
            _ => Placement::Random,
        });
        TopologyConfig { variant, placement }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub burn_in: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seeds: (0..30).collect(),
            out: PathBuf::from("out"),
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateSection {
    pub prior_lo: [f64; 2],
    pub prior_hi: [f64; 2],
    pub n_draws: usize,
    pub accept_q: f64,
    pub seeds_per_draw: usize,
    pub sampling_seed: u64,
    /// Target `(skewness, kurtosis)`, used when no data file is given.
    pub target: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub data_kind: SeriesKind,
}

impl CalibrateSection {
    pub fn abc(&self) -> AbcConfig {
        AbcConfig {
            prior_lo: self.prior_lo,
            prior_hi: self.prior_hi,
            n_draws: self.n_draws,
            accept_q: self.accept_q,
            seeds_per_draw: self.seeds_per_draw,
            sampling_seed: self.sampling_seed,
        }
    }
}

impl Default for CalibrateSection {
    fn default() -> Self {
        let abc = AbcConfig::default();
        Self {
            prior_lo: abc.prior_lo,
            prior_hi: abc.prior_hi,
            n_draws: abc.n_draws,
            accept_q: abc.accept_q,
            seeds_per_draw: abc.seeds_per_draw,
            sampling_seed: abc.sampling_seed,
            target: [0.25, 5.54],
            data: None,
            data_kind: SeriesKind::Prices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelParams,
    pub topology: TopologySection,
    pub run: RunSection,
    pub irf: IrfConfig,
    pub sobol: SobolSpec,
    pub calibrate: CalibrateSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Every problem in the configuration, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if let Err(e) = self.model.check() {
            problems.extend(
                e.violations
                    .iter()
                    .map(|v| format!("model.{}: {}", v.field, v.message)),
            );
        }
        if let Err(e) = self.topology.to_config().validate() {
            problems.push(format!("topology: {e}"));
        }
        if let Some(path) = &self.topology.network_file {
            if !path.exists() {
                problems.push(format!(
                    "topology.network_file: {} does not exist",
                    path.display()
                ));
            }
        }
        if self.run.seeds.is_empty() {
            problems.push("run.seeds: at least one seed is required".into());
        }
        if self.run.burn_in + 2 > self.model.steps {
            problems.push(format!(
                "run.burn_in: {} leaves fewer than two prices out of {} steps",
                self.run.burn_in, self.model.steps
            ));
        }
        if let Err(e) = self.irf.validate() {
            problems.push(format!("irf: {e}"));
        }
        if self.irf.warmup_steps < self.run.burn_in {
            problems.push("irf.warmup_steps: must be at least run.burn_in".into());
        }
        if let Err(e) = self.sobol.validate() {
            problems.push(format!("sobol: {e}"));
        }
        if let Err(e) = self.calibrate.abc().validate() {
            problems.push(format!("calibrate: {e}"));
        }
        if let Some(path) = &self.calibrate.data {
            if !path.exists() {
                problems.push(format!("calibrate.data: {} does not exist", path.display()));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml(&text)
}

pub fn save_config(config: &RunConfig, path: &Path) -> Result<(), ConfigError> {
    std::fs::write(path, config.to_toml()).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}
