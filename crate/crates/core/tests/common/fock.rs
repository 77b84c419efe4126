//! Squeezed vacua in a truncated number basis, built by exponentiating the
//! squeeze generator numerically.

use num_complex::Complex64;

/// `G v` for `G = (ξ* a² − ξ a†²)/2`.
fn generator(xi: Complex64, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let mut s = Complex64::new(0.0, 0.0);
            if k + 2 < n {
                s += xi.conj() * (((k + 1) * (k + 2)) as f64).sqrt() * v[k + 2];
            }
            if k >= 2 {
                s -= xi * ((k * (k - 1)) as f64).sqrt() * v[k - 2];
            }
            0.5 * s
        })
        .collect()
}

/// `exp(G)|0⟩` with `ξ = r e^{iθ}`, truncated to `dim` levels.
pub fn squeezed_vacuum(r: f64, theta: f64, dim: usize) -> Vec<Complex64> {
    let xi = Complex64::from_polar(r, theta);
    let steps = (4.0 * r * dim as f64).ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[0] = Complex64::new(1.0, 0.0);
    for _ in 0..steps {
        let mut term = v.clone();
        let mut sum = v.clone();
        for j in 1..60 {
            term = generator(xi, &term).into_iter().map(|t| t * (h / j as f64)).collect();
            let size: f64 = term.iter().map(|t| t.norm_sqr()).sum();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
            if size < 1e-36 {
                break;
            }
        }
        v = sum;
    }
    v
}

/// `|⟨0|S†(r, a) S(r, b)|0⟩|²` with data encoded in the squeezing phase.
pub fn phase_overlap(r: f64, a: f64, b: f64, dim: usize) -> f64 {
    let u = squeezed_vacuum(r, a, dim);
    let w = squeezed_vacuum(r, b, dim);
    let amp: Complex64 = u.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
    amp.norm_sqr()
}

/// Overlap at truncation `dim` and the change when the basis grows by half.
pub fn converged_overlap(r: f64, a: f64, b: f64, dim: usize) -> (f64, f64) {
    let v = phase_overlap(r, a, b, dim);
    let bigger = phase_overlap(r, a, b, dim + dim / 2);
    (v, (v - bigger).abs())
}
