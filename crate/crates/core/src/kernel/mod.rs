//! Squeezing-phase kernel and the classical RBF baseline.
//!
//! Each data coordinate is encoded as the phase of a squeezed vacuum
//! `S(r_g, x)|0⟩`. The per-coordinate similarity is the vacuum return
//! probability of `S†(r_g, a) S(r_g, b)`, which collapses to a single
//! squeezer of strength `r_total(r_g, (a-b)/2)`, so
//! `κ(a, b) = 1 / cosh(r_total)`.

mod matrix;
mod table;

pub use matrix::{
    kernel_matrix_from_table, KernelMatrix, LatticeKernel, RbfKernel, TableKernel,
};
pub use table::{build_table, KernelTable, Provenance, SamplingRecord};

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::gaussian::total_squeeze;
use crate::units::db_to_nats;

/// Number of lattice points per coordinate (and kernel table entries).
pub const LATTICE_POINTS: usize = 26;

/// Spacing of the coordinate lattice, `π/25`.
pub const LATTICE_STEP: f64 = PI / 25.0;

/// Gate-squeezing hyperparameter `r_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateLevel {
    db: f64,
    nats: f64,
}

impl GateLevel {
    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() || db < 0.0 {
            return invalid(format!("gate level must be a non-negative dB value, got {db}"));
        }
        Ok(Self { db, nats: db_to_nats(db) })
    }

    pub fn db(&self) -> f64 {
        self.db
    }

    pub fn nats(&self) -> f64 {
        self.nats
    }
}

/// Per-coordinate kernel `κ_{r_g}(a, b)`.
pub fn kappa(gate: GateLevel, a: f64, b: f64) -> f64 {
    kappa_at_difference(gate, (a - b).abs())
}

/// `κ` as a function of the absolute coordinate difference.
pub fn kappa_at_difference(gate: GateLevel, diff: f64) -> f64 {
    // r_g >= 0 by construction of GateLevel; non-finite diff propagates NaN
    let r_total = total_squeeze(gate.nats(), 0.5 * diff).unwrap_or(f64::NAN);
    1.0 / r_total.cosh()
}

/// Product kernel over the two coordinates.
pub fn kernel(gate: GateLevel, x: [f64; 2], y: [f64; 2]) -> f64 {
    kappa(gate, x[0], y[0]) * kappa(gate, x[1], y[1])
}

/// Gaussian RBF kernel `exp(-γ ||x - y||²)`.
pub fn rbf_kernel(x: [f64; 2], y: [f64; 2], gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return invalid(format!("rbf gamma must be positive, got {gamma}"));
    }
    let d0 = x[0] - y[0];
    let d1 = x[1] - y[1];
    Ok((-gamma * (d0 * d0 + d1 * d1)).exp())
}

/// Coordinate value of lattice index `m`, in `[-π/2, π/2]`.
pub fn lattice_coordinate(m: usize) -> f64 {
    -0.5 * PI + m as f64 * LATTICE_STEP
}
