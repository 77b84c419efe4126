//! Exhaustive solver for small SVM duals: every index is placed at its lower
//! bound, its upper bound or in the free set, and the equality-constrained
//! stationarity system is solved on each face.

use nalgebra::{DMatrix, DVector};

use cvq_kernel::svm::DualProblem;

pub fn solve(p: &DualProblem) -> (Vec<f64>, f64) {
    let n = p.n();
    assert!(n <= 10, "enumeration is exponential");
    let y: Vec<f64> = p.labels().iter().map(|&l| f64::from(l)).collect();
    let k = p.kernel();
    let q = |i: usize, j: usize| y[i] * y[j] * k.get(i, j);
    let c = p.c();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut state = vec![0u8; n];
    loop {
        if let Some(alpha) = face_solution(n, &state, &y, c, &q) {
            let obj = p.objective(&alpha);
            if best.as_ref().is_none_or(|(_, b)| obj < *b) {
                best = Some((alpha, obj));
            }
        }
        // next assignment in base 3
        let mut i = 0;
        while i < n && state[i] == 2 {
            state[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        state[i] += 1;
    }
    best.expect("alpha = 0 is always feasible")
}

/// 0: α = 0, 1: α = C, 2: free.
fn face_solution(n: usize, state: &[u8], y: &[f64], c: f64, q: &dyn Fn(usize, usize) -> f64) -> Option<Vec<f64>> {
    let mut alpha = vec![0.0; n];
    let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
    for i in 0..n {
        if state[i] == 1 {
            alpha[i] = c;
        }
    }
    let fixed_sum: f64 = (0..n).filter(|&i| state[i] != 2).map(|i| y[i] * alpha[i]).sum();
    if free.is_empty() {
        return (fixed_sum.abs() < 1e-12).then_some(alpha);
    }
    // [Q_FF y_F; y_Fᵀ 0] [α_F; ν] = [1 − Q_FB α_B; −y_Bᵀα_B]
    let m = free.len();
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    let mut b = DVector::<f64>::zeros(m + 1);
    for (r, &i) in free.iter().enumerate() {
        for (s, &j) in free.iter().enumerate() {
            a[(r, s)] = q(i, j);
        }
        a[(r, m)] = y[i];
        a[(m, r)] = y[i];
        b[r] = 1.0 - (0..n).filter(|&j| state[j] == 1).map(|j| q(i, j) * c).sum::<f64>();
    }
    b[m] = -fixed_sum;
    let lu = a.clone().lu();
    let x = lu.solve(&b)?;
    if (&a * &x - &b).norm() > 1e-9 * (1.0 + b.norm()) {
        return None;
    }
    for (r, &i) in free.iter().enumerate() {
        let v = x[r];
        if !(-1e-12..=c + 1e-12).contains(&v) {
            return None;
        }
        alpha[i] = v.clamp(0.0, c);
    }
    Some(alpha)
}
