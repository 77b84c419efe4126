//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! master_seed = 7
//! gates_db = [2.0, 4.0, 6.0, 8.0]
//! output_dir = "out"
//!
//! [noise]
//! ancilla_pure_db = 10.0
//! ancilla_efficiency = 0.75
//! detection_efficiency = 0.77
//!
//! [sampling]
//! n_per_angle = 10000
//! bootstrap_resamples = 200
//!
//! [generators]
//! moons_noise = 0.15
//!
//! [protocol]
//! kinds = ["moons", "circles", "blobs"]
//! n_datasets = 10
//! ```
//!
//! Every key is optional and falls back to the defaults shown by
//! `ExperimentConfig::default()`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{DatasetKind, GeneratorParams, ProtocolConfig};
use crate::error::{Error, Result};
use crate::kernel::GateLevel;
use crate::processor::{NoiseModel, SweepConfig, DEFAULT_SAMPLES_PER_ANGLE};
use crate::seeding::derive_seed;
use crate::sources::SourceRegistry;
use crate::svm::{SolverOptions, DEFAULT_C, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_per_angle: usize,
    pub bootstrap_resamples: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { n_per_angle: DEFAULT_SAMPLES_PER_ANGLE, bootstrap_resamples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub kinds: Vec<DatasetKind>,
    pub sources: Vec<String>,
    pub n_points: usize,
    pub n_datasets: usize,
    pub n_shuffles: usize,
    pub k: usize,
    pub rbf_gamma: f64,
    pub rbf_baseline: bool,
    pub c: f64,
    pub tol: f64,
    pub max_passes: Option<usize>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        Self {
            kinds: p.kinds,
            sources: p.sources,
            n_points: p.n_points,
            n_datasets: p.n_datasets,
            n_shuffles: p.n_shuffles,
            k: p.k,
            rbf_gamma: p.rbf_gamma.unwrap_or(3.0),
            rbf_baseline: true,
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_passes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub gates_db: Vec<f64>,
    pub output_dir: PathBuf,
    pub noise: NoiseModel,
    pub sampling: SamplingConfig,
    pub generators: GeneratorParams,
    pub protocol: ProtocolSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            gates_db: vec![2.0, 4.0, 6.0, 8.0],
            output_dir: PathBuf::from("out"),
            noise: NoiseModel::default(),
            sampling: SamplingConfig::default(),
            generators: GeneratorParams::default(),
            protocol: ProtocolSection::default(),
        }
    }
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

impl ExperimentConfig {
    /// Parses and validates; errors name the line or field at fault.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.gates_db.is_empty() {
            return Err(field_error("gates_db", "at least one gate level is required"));
        }
        for (i, &g) in self.gates_db.iter().enumerate() {
            GateLevel::from_db(g).map_err(|e| field_error(&format!("gates_db[{i}]"), e))?;
        }
        self.noise.validate().map_err(|e| field_error("noise", e))?;
        if self.sampling.n_per_angle < 2 {
            return Err(field_error("sampling.n_per_angle", "must be at least 2"));
        }
        if self.sampling.bootstrap_resamples == 1 {
            return Err(field_error("sampling.bootstrap_resamples", "must be 0 or at least 2"));
        }
        self.generators.validate().map_err(|e| field_error("generators", e))?;
        let p = &self.protocol;
        if p.kinds.is_empty() {
            return Err(field_error("protocol.kinds", "at least one dataset kind is required"));
        }
        let known = SourceRegistry::with_defaults(self.noise, self.sampling.n_per_angle, 0).names();
        if let Some(s) = p.sources.iter().find(|s| !known.contains(s)) {
            return Err(field_error("protocol.sources", format!("unknown source '{s}' (known: {})", known.join(", "))));
        }
        if p.n_points < 4 || !p.n_points.is_multiple_of(2) {
            return Err(field_error("protocol.n_points", "must be even and at least 4"));
        }
        if p.n_datasets == 0 {
            return Err(field_error("protocol.n_datasets", "must be at least 1"));
        }
        if p.n_shuffles == 0 {
            return Err(field_error("protocol.n_shuffles", "must be at least 1"));
        }
        if p.k < 2 || p.k > p.n_points {
            return Err(field_error("protocol.k", "must lie in 2..=n_points"));
        }
        if !(p.rbf_gamma > 0.0 && p.rbf_gamma.is_finite()) {
            return Err(field_error("protocol.rbf_gamma", "must be positive"));
        }
        if !(p.c > 0.0 && p.c.is_finite()) {
            return Err(field_error("protocol.c", "must be positive"));
        }
        if !(p.tol > 0.0) {
            return Err(field_error("protocol.tol", "must be positive"));
        }
        Ok(())
    }

    pub fn gates(&self) -> Result<Vec<GateLevel>> {
        self.gates_db.iter().map(|&g| GateLevel::from_db(g)).collect()
    }

    /// Seed for Monte Carlo kernel tables used inside the protocol.
    pub fn simulation_seed(&self) -> u64 {
        derive_seed(self.master_seed, 0x51A7)
    }

    pub fn sources(&self) -> SourceRegistry {
        SourceRegistry::with_defaults(self.noise, self.sampling.n_per_angle, self.simulation_seed())
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { tol: self.protocol.tol, max_passes: self.protocol.max_passes }
    }

    pub fn protocol(&self) -> Result<ProtocolConfig> {
        let p = &self.protocol;
        Ok(ProtocolConfig {
            kinds: p.kinds.clone(),
            gates: self.gates()?,
            sources: p.sources.clone(),
            rbf_gamma: p.rbf_baseline.then_some(p.rbf_gamma),
            c: p.c,
            n_points: p.n_points,
            n_datasets: p.n_datasets,
            n_shuffles: p.n_shuffles,
            k: p.k,
            master_seed: self.master_seed,
            generators: self.generators,
            solver: self.solver(),
        })
    }

    pub fn sweep(&self, noise: NoiseModel) -> Result<SweepConfig> {
        Ok(SweepConfig {
            gates: self.gates()?,
            noise,
            n_per_angle: self.sampling.n_per_angle,
            seed: derive_seed(self.master_seed, 0xF162),
            bootstrap_resamples: self.sampling.bootstrap_resamples,
        })
    }
}
