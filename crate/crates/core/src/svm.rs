//! Kernel SVM: the box-constrained dual
//!
//! ```text
//! min_α  ½ αᵀQα − Σα_i   s.t.  yᵀα = 0,  0 ≤ α_i ≤ C,   Q_ij = y_i y_j K_ij
//! ```
//!
//! solved by sequential minimal optimisation with second-order working-set
//! selection, plus the bias and sign prediction on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{KernelMatrix, LatticeKernel, Provenance};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
/// `α_i` above this counts as a support vector.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
/// Floor on the pairwise curvature `K_ii + K_jj − 2K_ij`.
const CURVATURE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DualProblem {
    k: KernelMatrix,
    y: Vec<i8>,
    c: f64,
}

impl DualProblem {
    pub fn new(k: KernelMatrix, y: Vec<i8>, c: f64) -> Result<Self> {
        if k.n() != y.len() {
            return invalid(format!("kernel is {}x{} but there are {} labels", k.n(), k.n(), y.len()));
        }
        if y.iter().any(|&l| l != 1 && l != -1) {
            return invalid("labels must be +1 or -1");
        }
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("box bound C must be positive, got {c}"));
        }
        Ok(Self { k, y, c })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.k
    }

    pub fn labels(&self) -> &[i8] {
        &self.y
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    fn yf(&self, i: usize) -> f64 {
        f64::from(self.y[i])
    }

    fn q(&self, i: usize, j: usize) -> f64 {
        self.yf(i) * self.yf(j) * self.k.get(i, j)
    }

    /// `½ αᵀQα − Σα`.
    pub fn objective(&self, alpha: &[f64]) -> f64 {
        let n = self.n();
        let mut quad = 0.0;
        for i in 0..n {
            if alpha[i] == 0.0 {
                continue;
            }
            let row: f64 = (0..n).map(|j| self.q(i, j) * alpha[j]).sum();
            quad += alpha[i] * row;
        }
        0.5 * quad - alpha.iter().sum::<f64>()
    }

    /// `f_i = Σ_j y_j α_j K_ji` (decision values without bias).
    pub fn margins(&self, alpha: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.yf(j) * alpha[j] * self.k.get(j, i)).sum())
            .collect()
    }

    /// Largest violation of the KKT conditions for `(α, b)`:
    /// `α_i = 0 ⇒ y_i(f_i+b) ≥ 1`, `0 < α_i < C ⇒ y_i(f_i+b) = 1`,
    /// `α_i = C ⇒ y_i(f_i+b) ≤ 1`.
    pub fn kkt_violation(&self, alpha: &[f64], b: f64) -> f64 {
        let f = self.margins(alpha);
        (0..self.n())
            .map(|i| {
                let m = self.yf(i) * (f[i] + b);
                if alpha[i] <= 0.0 {
                    (1.0 - m).max(0.0)
                } else if alpha[i] >= self.c {
                    (m - 1.0).max(0.0)
                } else {
                    (m - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Iteration budget is `max_passes · n`; `None` means `10 · n` passes.
    pub max_passes: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_passes: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub iterations: usize,
    /// Final maximal KKT gap `max_{I_up} −y∇ − min_{I_low} −y∇`.
    pub gap: f64,
}

fn in_up(y: i8, a: f64, c: f64) -> bool {
    (y > 0 && a < c) || (y < 0 && a > 0.0)
}

fn in_low(y: i8, a: f64, c: f64) -> bool {
    (y > 0 && a > 0.0) || (y < 0 && a < c)
}

/// SMO on the dual. Returns feasible `α` with maximal KKT gap `≤ tol`.
pub fn solve_dual(p: &DualProblem, opts: &SolverOptions) -> Result<DualSolution> {
    let n = p.n();
    if n < 2 {
        return invalid("the dual needs at least two training points");
    }
    if !p.y.iter().any(|&l| l > 0) || !p.y.iter().any(|&l| l < 0) {
        return invalid("both classes must be present");
    }
    if !(opts.tol > 0.0) {
        return invalid("solver tolerance must be positive");
    }
    let c = p.c;
    let max_iter = opts.max_passes.unwrap_or(10 * n).saturating_mul(n).max(1);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;

    loop {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(p.y[t], alpha[t], c) {
                let v = -p.yf(t) * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        // j: second-order choice in I_low; also track min over I_low for the gap
        let mut gmin = f64::INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(p.y[t], alpha[t], c) {
                    continue;
                }
                let v = -p.yf(t) * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let a = (p.k.get(i, i) + p.k.get(t, t) - 2.0 * p.k.get(i, t)).max(CURVATURE_FLOOR);
                    let obj = -b * b / a;
                    if obj < best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let gap = gmax - gmin;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            return Ok(DualSolution { alpha, iterations, gap: gap.max(0.0) });
        };
        if gap <= opts.tol {
            return Ok(DualSolution { alpha, iterations, gap });
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, gap, best_alpha: alpha });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        update_pair(p, &mut alpha, &grad, i, j);
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += p.q(t, i) * di + p.q(t, j) * dj;
        }
    }
}

/// Analytic two-variable step, clipped to the box along the equality line.
fn update_pair(p: &DualProblem, alpha: &mut [f64], grad: &[f64], i: usize, j: usize) {
    let c = p.c;
    let quad = (p.k.get(i, i) + p.k.get(j, j) - 2.0 * p.k.get(i, j)).max(CURVATURE_FLOOR);
    if p.y[i] != p.y[j] {
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if diff > 0.0 {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = -diff;
        }
        if diff > 0.0 {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            }
        } else if alpha[j] > c {
            alpha[j] = c;
            alpha[i] = c + diff;
        }
    } else {
        let delta = (grad[i] - grad[j]) / quad;
        let sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if sum > c {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            }
        } else if alpha[j] < 0.0 {
            alpha[j] = 0.0;
            alpha[i] = sum;
        }
        if sum > c {
            if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = sum;
        }
    }
}

/// Bias from a feasible `α`: the mean of `y_i − f_i` over free support
/// vectors, or the midpoint of the interval allowed by the bound vectors.
pub fn compute_bias(alpha: &[f64], p: &DualProblem) -> Result<f64> {
    if alpha.is_empty() || alpha.len() != p.n() {
        return invalid("bias needs one alpha per training point");
    }
    let f = p.margins(alpha);
    let c = p.c;
    let free: Vec<f64> = (0..p.n())
        .filter(|&i| alpha[i] > SUPPORT_THRESHOLD && alpha[i] < c - SUPPORT_THRESHOLD)
        .map(|i| p.yf(i) - f[i])
        .collect();
    if !free.is_empty() {
        return Ok(free.iter().sum::<f64>() / free.len() as f64);
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..p.n() {
        let e = p.yf(i) - f[i];
        let at_upper = alpha[i] >= c - SUPPORT_THRESHOLD;
        // α_i = 0: y_i(f_i + b) ≥ 1;  α_i = C: y_i(f_i + b) ≤ 1
        match (p.y[i] > 0, at_upper) {
            (true, false) | (false, true) => lo = lo.max(e),
            (false, false) | (true, true) => hi = hi.min(e),
        }
    }
    Ok(match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    })
}

/// A trained classifier over lattice points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub support: Vec<usize>,
    pub labels: Vec<i8>,
    pub coords: Vec<[usize; 2]>,
    pub provenance: Provenance,
    pub kernel: String,
    pub c: f64,
}

impl SvmModel {
    pub fn from_solution(
        p: &DualProblem,
        alpha: Vec<f64>,
        coords: Vec<[usize; 2]>,
        kernel: String,
    ) -> Result<Self> {
        let bias = compute_bias(&alpha, p)?;
        let support = (0..alpha.len()).filter(|&i| alpha[i] > SUPPORT_THRESHOLD).collect();
        Ok(Self {
            alpha,
            bias,
            support,
            labels: p.y.clone(),
            coords,
            provenance: p.k.provenance(),
            kernel,
            c: p.c,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `Σ y_i α_i k_i + b`.
pub fn decision_value(model: &SvmModel, k_col: &[f64]) -> Result<f64> {
    if k_col.len() != model.alpha.len() {
        return invalid(format!("kernel column has {} entries, model has {}", k_col.len(), model.alpha.len()));
    }
    let s: f64 = model
        .support
        .iter()
        .map(|&i| f64::from(model.labels[i]) * model.alpha[i] * k_col[i])
        .sum();
    Ok(s + model.bias)
}

/// Sign of the decision value; exactly zero maps to `+1`.
pub fn predict(model: &SvmModel, k_col: &[f64]) -> Result<i8> {
    Ok(sign(decision_value(model, k_col)?))
}

pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Builds the Gram matrix, solves the dual and wraps the model.
pub fn train(
    kernel: &dyn LatticeKernel,
    coords: &[[usize; 2]],
    labels: &[i8],
    c: f64,
    opts: &SolverOptions,
) -> Result<SvmModel> {
    let k = kernel.gram(coords)?;
    let p = DualProblem::new(k, labels.to_vec(), c)?;
    let sol = solve_dual(&p, opts)?;
    SvmModel::from_solution(&p, sol.alpha, coords.to_vec(), kernel.name())
}

/// Predicted labels for query points.
pub fn predict_points(model: &SvmModel, kernel: &dyn LatticeKernel, queries: &[[usize; 2]]) -> Result<Vec<i8>> {
    queries
        .iter()
        .map(|&q| predict(model, &kernel.column(&model.coords, q)?))
        .collect()
}
