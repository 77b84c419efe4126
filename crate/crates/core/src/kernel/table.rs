use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{kappa_at_difference, GateLevel, LATTICE_POINTS, LATTICE_STEP};
use crate::csvio;
use crate::error::{invalid, Error, Result};

/// Where a set of kernel values came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    NoisyAnalytic,
    SimulatedIdeal,
    SimulatedNoisy,
    MeasuredImport,
    Rbf,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::NoisyAnalytic => "noisy-analytic",
            Provenance::SimulatedIdeal => "simulated-ideal",
            Provenance::SimulatedNoisy => "simulated-noisy",
            Provenance::MeasuredImport => "measured-import",
            Provenance::Rbf => "rbf",
        }
    }

    fn is_analytic(&self) -> bool {
        matches!(self, Provenance::ClosedForm | Provenance::NoisyAnalytic)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "closed-form" => Provenance::ClosedForm,
            "noisy-analytic" => Provenance::NoisyAnalytic,
            "simulated-ideal" => Provenance::SimulatedIdeal,
            "simulated-noisy" => Provenance::SimulatedNoisy,
            "measured-import" => Provenance::MeasuredImport,
            "rbf" => Provenance::Rbf,
            other => return invalid(format!("unknown provenance '{other}'")),
        })
    }
}

/// Sampling parameters behind a Monte Carlo table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingRecord {
    pub n_per_angle: usize,
    pub seed: u64,
}

/// Kernel values `κ_m` at lattice differences `m·π/25`, `m = 0..=25`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    gate: GateLevel,
    values: [f64; LATTICE_POINTS],
    provenance: Provenance,
    sampling: Option<SamplingRecord>,
}

impl KernelTable {
    /// Validates `0 < κ <= 1`; analytic tables must also start at 1 (closed
    /// form only) and be non-increasing.
    pub fn new(
        gate: GateLevel,
        values: [f64; LATTICE_POINTS],
        provenance: Provenance,
        sampling: Option<SamplingRecord>,
    ) -> Result<Self> {
        if let Some(m) = values.iter().position(|v| !(*v > 0.0 && *v <= 1.0)) {
            return invalid(format!("kernel value {} at index {m} outside (0, 1]", values[m]));
        }
        if provenance == Provenance::ClosedForm && values[0] != 1.0 {
            return invalid("closed-form table must start at 1");
        }
        if provenance.is_analytic() {
            if let Some(m) = values.windows(2).position(|w| w[1] > w[0] + 1e-15) {
                return invalid(format!("analytic table increases at index {}", m + 1));
            }
        }
        Ok(Self { gate, values, provenance, sampling })
    }

    pub fn gate(&self) -> GateLevel {
        self.gate
    }

    pub fn values(&self) -> &[f64; LATTICE_POINTS] {
        &self.values
    }

    pub fn get(&self, diff_index: usize) -> Option<f64> {
        self.values.get(diff_index).copied()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn sampling(&self) -> Option<SamplingRecord> {
        self.sampling
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let schema = if self.sampling.is_some() { "kernel_table_sampled" } else { "kernel_table" };
        let mut out = out;
        csvio::write_schema_line(&mut out, schema)?;
        writeln!(out, "# gate_db={} source={}", self.gate.db(), self.provenance)?;
        let mut w = csv::Writer::from_writer(out);
        match self.sampling {
            None => w.write_record(["difference_index", "difference_rad", "kappa"])?,
            Some(_) => w.write_record(["difference_index", "difference_rad", "kappa", "n_per_angle", "seed"])?,
        }
        for (m, v) in self.values.iter().enumerate() {
            let mut row = vec![m.to_string(), (m as f64 * LATTICE_STEP).to_string(), v.to_string()];
            if let Some(s) = self.sampling {
                row.push(s.n_per_angle.to_string());
                row.push(s.seed.to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`KernelTable::write_csv`] (or any file with
    /// the same three leading columns). Comment lines starting with `#` are
    /// skipped.
    pub fn read_csv<R: Read>(input: R, gate: GateLevel, provenance: Provenance) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let headers = r.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let (Some(ci), Some(ck)) = (col("difference_index"), col("kappa")) else {
            return invalid("kernel table CSV needs difference_index and kappa columns");
        };
        let mut values = [f64::NAN; LATTICE_POINTS];
        for rec in r.records() {
            let rec = rec?;
            let m: usize = rec[ci]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad difference_index '{}'", &rec[ci])))?;
            let v: f64 = rec[ck]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad kappa '{}'", &rec[ck])))?;
            if m >= LATTICE_POINTS {
                return invalid(format!("difference_index {m} out of range 0..=25"));
            }
            values[m] = v;
        }
        if let Some(m) = values.iter().position(|v| v.is_nan()) {
            return invalid(format!("kernel table CSV is missing difference_index {m}"));
        }
        Self::new(gate, values, provenance, None)
    }
}

/// Closed-form table at the 26 lattice differences.
pub fn build_table(gate: GateLevel) -> KernelTable {
    let mut values = [0.0; LATTICE_POINTS];
    for (m, v) in values.iter_mut().enumerate() {
        *v = kappa_at_difference(gate, m as f64 * LATTICE_STEP);
    }
    KernelTable { gate, values, provenance: Provenance::ClosedForm, sampling: None }
}
