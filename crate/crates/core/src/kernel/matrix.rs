use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{lattice_coordinate, rbf_kernel, KernelTable, Provenance, LATTICE_POINTS};
use crate::error::{invalid, Result};

/// A kernel over lattice points, the common interface behind every kernel
/// source used for training.
pub trait LatticeKernel: Send + Sync {
    fn name(&self) -> String;
    fn provenance(&self) -> Provenance;
    fn eval(&self, a: [usize; 2], b: [usize; 2]) -> f64;

    /// Gram matrix over `points`.
    fn gram(&self, points: &[[usize; 2]]) -> Result<KernelMatrix> {
        check_coords(points)?;
        let n = points.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| self.eval(points[i], points[j])).collect())
            .collect();
        Ok(KernelMatrix { n, data: rows.concat(), provenance: self.provenance() })
    }

    /// Kernel values between every training point and one query.
    fn column(&self, train: &[[usize; 2]], query: [usize; 2]) -> Result<Vec<f64>> {
        check_coords(train)?;
        check_coords(&[query])?;
        Ok(train.iter().map(|&t| self.eval(t, query)).collect())
    }
}

fn check_coords(points: &[[usize; 2]]) -> Result<()> {
    if let Some(p) = points.iter().find(|p| p[0] >= LATTICE_POINTS || p[1] >= LATTICE_POINTS) {
        return invalid(format!("lattice coordinate {p:?} outside 0..=25"));
    }
    Ok(())
}

/// Product kernel read from a 26-entry table.
#[derive(Debug, Clone)]
pub struct TableKernel {
    table: KernelTable,
}

impl TableKernel {
    pub fn new(table: KernelTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }
}

impl LatticeKernel for TableKernel {
    fn name(&self) -> String {
        format!("{}@{}dB", self.table.provenance(), self.table.gate().db())
    }

    fn provenance(&self) -> Provenance {
        self.table.provenance()
    }

    fn eval(&self, a: [usize; 2], b: [usize; 2]) -> f64 {
        let v = self.table.values();
        v[a[0].abs_diff(b[0])] * v[a[1].abs_diff(b[1])]
    }
}

/// Gaussian RBF evaluated at the lattice coordinates in radians.
#[derive(Debug, Clone, Copy)]
pub struct RbfKernel {
    gamma: f64,
}

impl RbfKernel {
    pub fn new(gamma: f64) -> Result<Self> {
        rbf_kernel([0.0; 2], [0.0; 2], gamma)?;
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl LatticeKernel for RbfKernel {
    fn name(&self) -> String {
        format!("rbf(gamma={})", self.gamma)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Rbf
    }

    fn eval(&self, a: [usize; 2], b: [usize; 2]) -> f64 {
        let x = [lattice_coordinate(a[0]), lattice_coordinate(a[1])];
        let y = [lattice_coordinate(b[0]), lattice_coordinate(b[1])];
        let d0 = x[0] - y[0];
        let d1 = x[1] - y[1];
        (-self.gamma * (d0 * d0 + d1 * d1)).exp()
    }
}

/// Dense row-major square kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
    provenance: Provenance,
}

impl KernelMatrix {
    /// Wraps a row-major matrix, checking it is square and symmetric
    /// within 1e-12.
    pub fn from_rows(n: usize, data: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if data.len() != n * n {
            return invalid(format!("expected {} entries for a {n}x{n} matrix, got {}", n * n, data.len()));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !(a - b).abs().le(&1e-12) {
                    return invalid(format!("kernel matrix not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { n, data, provenance })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * s).collect(), provenance: self.provenance }
    }

    /// Restriction to the given index subset, in order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let data = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Self { n: idx.len(), data, provenance: self.provenance }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let m = DMatrix::from_row_slice(self.n, self.n, &self.data);
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Gram matrix of lattice points under a table kernel:
/// `K_ij = κ[|m_i1 - m_j1|] · κ[|m_i2 - m_j2|]`.
pub fn kernel_matrix_from_table(coords: &[[usize; 2]], table: &KernelTable) -> Result<KernelMatrix> {
    TableKernel::new(table.clone()).gram(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_table, kernel, GateLevel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point() {
        let t = build_table(GateLevel::from_db(8.0).unwrap());
        let k = kernel_matrix_from_table(&[[3, 7]], &t).unwrap();
        assert_eq!(k.n(), 1);
        assert_eq!(k.get(0, 0), 1.0);
    }

    #[test]
    fn full_difference_off_diagonal() {
        let t = build_table(GateLevel::from_db(8.0).unwrap());
        let k = kernel_matrix_from_table(&[[0, 4], [25, 4]], &t).unwrap();
        assert!((k.get(0, 1) - 0.309_211_594_407_642_6).abs() < 1e-12);
        assert_eq!(k.get(0, 1), k.get(1, 0));
    }

    #[test]
    fn out_of_range_rejected() {
        let t = build_table(GateLevel::from_db(8.0).unwrap());
        assert!(kernel_matrix_from_table(&[[0, 26]], &t).is_err());
    }

    #[test]
    fn lookup_matches_closed_form() {
        let g = GateLevel::from_db(6.0).unwrap();
        let tk = TableKernel::new(build_table(g));
        for &(a, b) in &[([0, 0], [25, 25]), ([3, 17], [11, 2]), ([12, 13], [13, 12])] {
            let x = [lattice_coordinate(a[0]), lattice_coordinate(a[1])];
            let y = [lattice_coordinate(b[0]), lattice_coordinate(b[1])];
            assert!((tk.eval(a, b) - kernel(g, x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_lattice_psd() {
        let t = build_table(GateLevel::from_db(4.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<[usize; 2]> = (0..20).map(|_| [rng.random_range(0..26), rng.random_range(0..26)]).collect();
        let k = kernel_matrix_from_table(&pts, &t).unwrap();
        assert!(k.min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn rbf_kernel_matrix() {
        let k = RbfKernel::new(3.0).unwrap();
        assert_eq!(k.eval([4, 4], [4, 4]), 1.0);
        let step = std::f64::consts::PI / 25.0;
        assert!((k.eval([0, 0], [1, 0]) - (-3.0 * step * step).exp()).abs() < 1e-15);
        assert!(RbfKernel::new(0.0).is_err());
    }

    #[test]
    fn from_rows_checks_shape_and_symmetry() {
        assert!(KernelMatrix::from_rows(2, vec![1.0, 0.5, 0.5], Provenance::Rbf).is_err());
        assert!(KernelMatrix::from_rows(2, vec![1.0, 0.5, 0.4, 1.0], Provenance::Rbf).is_err());
        let k = KernelMatrix::from_rows(2, vec![1.0, 0.5, 0.5, 1.0], Provenance::Rbf).unwrap();
        assert!((k.min_eigenvalue() - 0.5).abs() < 1e-12);
        assert_eq!(k.submatrix(&[1]).get(0, 0), 1.0);
    }
}
