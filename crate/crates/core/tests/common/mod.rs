#![allow(dead_code)]

pub mod fock;
pub mod qp;

use cvq_kernel::kernel::{GateLevel, KernelMatrix, Provenance};

pub fn gate(db: f64) -> GateLevel {
    GateLevel::from_db(db).unwrap()
}

pub const STANDARD_GATES: [f64; 4] = [2.0, 4.0, 6.0, 8.0];

pub fn matrix(n: usize, data: Vec<f64>) -> KernelMatrix {
    KernelMatrix::from_rows(n, data, Provenance::ClosedForm).unwrap()
}
