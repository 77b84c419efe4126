//! Named providers of kernel tables.
//!
//! Each source turns a gate level into a 26-entry [`KernelTable`]. The
//! registry maps the names used on the command line and in config files onto
//! boxed sources, so experiments pick their kernel at runtime.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{total_squeeze, vacuum_fidelity};
use crate::kernel::{build_table, GateLevel, KernelTable, Provenance, SamplingRecord, LATTICE_POINTS, LATTICE_STEP};
use crate::processor::{kappa_from_gate, output_state_analytic, NoiseModel};
use crate::seeding::derive_seed;

/// Smallest value a sampled table entry is clamped to.
const SAMPLED_FLOOR: f64 = 1e-300;

pub trait KernelSource: Send + Sync {
    fn name(&self) -> &str;
    fn provenance(&self) -> Provenance;
    fn table(&self, gate: GateLevel) -> Result<KernelTable>;
}

fn r_total_at(gate: GateLevel, m: usize) -> Result<f64> {
    total_squeeze(gate.nats(), 0.5 * m as f64 * LATTICE_STEP)
}

pub struct ClosedForm;

impl KernelSource for ClosedForm {
    fn name(&self) -> &str {
        "closed-form"
    }

    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }

    fn table(&self, gate: GateLevel) -> Result<KernelTable> {
        Ok(build_table(gate))
    }
}

/// Vacuum overlap of the analytic gate output under a noise model.
pub struct NoisyAnalytic {
    pub noise: NoiseModel,
}

impl KernelSource for NoisyAnalytic {
    fn name(&self) -> &str {
        "noisy-analytic"
    }

    fn provenance(&self) -> Provenance {
        Provenance::NoisyAnalytic
    }

    fn table(&self, gate: GateLevel) -> Result<KernelTable> {
        let mut values = [0.0; LATTICE_POINTS];
        for (m, v) in values.iter_mut().enumerate() {
            *v = vacuum_fidelity(&output_state_analytic(r_total_at(gate, m)?, &self.noise)?);
        }
        KernelTable::new(gate, values, Provenance::NoisyAnalytic, None)
    }
}

/// Monte Carlo homodyne estimate at every lattice difference. Estimates
/// above 1 are clamped to 1.
pub struct Simulated {
    name: String,
    pub noise: NoiseModel,
    pub n_per_angle: usize,
    pub seed: u64,
}

impl Simulated {
    pub fn noisy(noise: NoiseModel, n_per_angle: usize, seed: u64) -> Self {
        Self { name: "simulated".into(), noise, n_per_angle, seed }
    }

    pub fn ideal(n_per_angle: usize, seed: u64) -> Self {
        Self { name: "simulated-ideal".into(), noise: NoiseModel::ideal(), n_per_angle, seed }
    }

    /// Stream seed used for `gate`; the table itself records `self.seed`,
    /// which reproduces it.
    pub fn table_seed(&self, gate: GateLevel) -> u64 {
        derive_seed(self.seed, gate.db().to_bits())
    }
}

impl KernelSource for Simulated {
    fn name(&self) -> &str {
        &self.name
    }

    fn provenance(&self) -> Provenance {
        if self.noise == NoiseModel::ideal() {
            Provenance::SimulatedIdeal
        } else {
            Provenance::SimulatedNoisy
        }
    }

    fn table(&self, gate: GateLevel) -> Result<KernelTable> {
        if self.n_per_angle < 2 {
            return invalid("sampling needs at least two shots per angle");
        }
        let seed = self.table_seed(gate);
        let raw: Vec<f64> = (0..LATTICE_POINTS)
            .into_par_iter()
            .map(|m| kappa_from_gate(r_total_at(gate, m)?, &self.noise, self.n_per_angle, derive_seed(seed, m as u64)))
            .collect::<Result<_>>()?;
        let mut values = [0.0; LATTICE_POINTS];
        for (v, k) in values.iter_mut().zip(raw) {
            if !k.is_finite() {
                return Err(Error::Degenerate(format!("sampled kernel value {k} is not finite")));
            }
            *v = k.clamp(SAMPLED_FLOOR, 1.0);
        }
        let sampling = SamplingRecord { n_per_angle: self.n_per_angle, seed: self.seed };
        KernelTable::new(gate, values, self.provenance(), Some(sampling))
    }
}

/// A table read from CSV, e.g. measured on hardware. The file's gate level
/// is taken to be whatever gate is requested.
pub struct MeasuredImport {
    pub path: PathBuf,
}

impl KernelSource for MeasuredImport {
    fn name(&self) -> &str {
        "measured-import"
    }

    fn provenance(&self) -> Provenance {
        Provenance::MeasuredImport
    }

    fn table(&self, gate: GateLevel) -> Result<KernelTable> {
        let f = File::open(&self.path)?;
        KernelTable::read_csv(f, gate, Provenance::MeasuredImport)
    }
}

#[derive(Default)]
pub struct SourceRegistry {
    sources: BTreeMap<String, Box<dyn KernelSource>>,
}

impl SourceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Closed-form, noisy-analytic, simulated and simulated-ideal sources.
    pub fn with_defaults(noise: NoiseModel, n_per_angle: usize, seed: u64) -> Self {
        let mut r = Self::new();
        r.register(Box::new(ClosedForm));
        r.register(Box::new(NoisyAnalytic { noise }));
        r.register(Box::new(Simulated::noisy(noise, n_per_angle, seed)));
        r.register(Box::new(Simulated::ideal(n_per_angle, seed)));
        r
    }

    /// Replaces any source already registered under the same name.
    pub fn register(&mut self, source: Box<dyn KernelSource>) {
        self.sources.insert(source.name().to_string(), source);
    }

    pub fn get(&self, name: &str) -> Result<&dyn KernelSource> {
        self.sources.get(name).map(|s| s.as_ref()).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown kernel source '{name}' (known: {})", self.names().join(", ")))
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.sources.keys().cloned().collect()
    }
}
