//! Single-mode Gaussian states in shot-noise units (vacuum covariance = I).
//!
//! Symplectic transforms act on the quadrature vector `(q, p)`. The squeezer
//! `S(r) = diag(e^{-r}, e^{r})` reduces the q variance for `r > 0` and the
//! rotation is `[[cos φ, sin φ], [-sin φ, cos φ]]`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Mul;

use crate::error::{invalid, Error, Result};

/// Largest squeezing magnitude accepted by [`squeezer`].
pub const MAX_SQUEEZE_NATS: f64 = 25.0;

const UNCERTAINTY_SLACK: f64 = 1e-9;
const SYMPLECTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    mean: [f64; 2],
    vqq: f64,
    vpp: f64,
    vqp: f64,
}

impl GaussianState {
    /// Builds a state, checking positivity and the uncertainty relation
    /// `det V >= 1`.
    pub fn new(mean: [f64; 2], vqq: f64, vpp: f64, vqp: f64) -> Result<Self> {
        if !(mean.iter().all(|m| m.is_finite()) && vqq.is_finite() && vpp.is_finite() && vqp.is_finite()) {
            return invalid("non-finite Gaussian state entry");
        }
        if vqq <= 0.0 || vpp <= 0.0 {
            return invalid(format!("variances must be positive (vqq={vqq}, vpp={vpp})"));
        }
        let det = vqq * vpp - vqp * vqp;
        if det < 1.0 - UNCERTAINTY_SLACK {
            return invalid(format!("covariance violates the uncertainty relation (det={det})"));
        }
        Ok(Self { mean, vqq, vpp, vqp })
    }

    pub fn vacuum() -> Self {
        Self { mean: [0.0, 0.0], vqq: 1.0, vpp: 1.0, vqp: 0.0 }
    }

    /// `S(r)|0⟩`, covariance `diag(e^{-2r}, e^{2r})`.
    pub fn squeezed_vacuum(r: f64) -> Result<Self> {
        Ok(Self::vacuum().apply(&squeezer(r)?))
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn vqq(&self) -> f64 {
        self.vqq
    }

    pub fn vpp(&self) -> f64 {
        self.vpp
    }

    pub fn vqp(&self) -> f64 {
        self.vqp
    }

    pub fn det(&self) -> f64 {
        self.vqq * self.vpp - self.vqp * self.vqp
    }

    /// Variance of the rotated quadrature `q cos φ + p sin φ`.
    pub fn quadrature_variance(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        self.vqq * c * c + self.vpp * s * s + 2.0 * self.vqp * s * c
    }

    /// `mean -> S·mean`, `V -> S·V·Sᵀ`.
    pub fn apply(&self, s: &Symplectic2) -> Self {
        let [a, b, c, d] = s.entries();
        let (x, y, z) = (self.vqq, self.vpp, self.vqp);
        let r0 = [a * x + b * z, a * z + b * y];
        let r1 = [c * x + d * z, c * z + d * y];
        Self {
            mean: [a * self.mean[0] + b * self.mean[1], c * self.mean[0] + d * self.mean[1]],
            vqq: r0[0] * a + r0[1] * b,
            vpp: r1[0] * c + r1[1] * d,
            vqp: r0[0] * c + r0[1] * d,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.mean == [0.0, 0.0] && self.vqq == 1.0 && self.vpp == 1.0 && self.vqp == 0.0
    }
}

/// Pure-loss channel: `V -> η V + (1-η) I`, `mean -> √η mean`.
pub fn loss_channel(state: &GaussianState, eta: f64) -> Result<GaussianState> {
    if !(0.0..=1.0).contains(&eta) {
        return invalid(format!("efficiency {eta} outside [0, 1]"));
    }
    let root = eta.sqrt();
    Ok(GaussianState {
        mean: [root * state.mean[0], root * state.mean[1]],
        vqq: eta * state.vqq + (1.0 - eta),
        vpp: eta * state.vpp + (1.0 - eta),
        vqp: eta * state.vqp,
    })
}

/// Overlap `Tr(ρ |0⟩⟨0|)` of a Gaussian state with the vacuum.
pub fn vacuum_fidelity(state: &GaussianState) -> f64 {
    vacuum_overlap(state.mean, [state.vqq, state.vpp, state.vqp])
}

/// Vacuum overlap formula evaluated on raw moments `[vqq, vpp, vqp]` without
/// enforcing the state invariants. Used on sampled covariance estimates,
/// which can fall marginally outside the physical set.
pub fn vacuum_overlap(mean: [f64; 2], cov: [f64; 3]) -> f64 {
    let [vqq, vpp, vqp] = cov;
    let (aq, ap) = (vqq + 1.0, vpp + 1.0);
    let det = aq * ap - vqp * vqp;
    let quad = (ap * mean[0] * mean[0] - 2.0 * vqp * mean[0] * mean[1] + aq * mean[1] * mean[1]) / det;
    2.0 / det.sqrt() * (-0.5 * quad).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symplectic2 {
    m: [f64; 4],
}

impl Symplectic2 {
    /// Checks `|det - 1| <= 1e-9`.
    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Result<Self> {
        let m = [m11, m12, m21, m22];
        if m.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite matrix entry");
        }
        let det = m11 * m22 - m12 * m21;
        if (det - 1.0).abs() > SYMPLECTIC_TOL {
            return invalid(format!("matrix is not symplectic (det={det})"));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self { m: [1.0, 0.0, 0.0, 1.0] }
    }

    /// Row-major `[m11, m12, m21, m22]`.
    pub fn entries(&self) -> [f64; 4] {
        self.m
    }

    pub fn det(&self) -> f64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = self.m;
        Self { m: [d, -b, -c, a] }
    }

    pub fn transpose(&self) -> Self {
        let [a, b, c, d] = self.m;
        Self { m: [a, c, b, d] }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Mul for Symplectic2 {
    type Output = Symplectic2;

    fn mul(self, rhs: Symplectic2) -> Symplectic2 {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = rhs.m;
        Symplectic2 { m: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h] }
    }
}

pub fn rotation(phi: f64) -> Result<Symplectic2> {
    if !phi.is_finite() {
        return invalid("rotation angle must be finite");
    }
    let (s, c) = phi.sin_cos();
    Ok(Symplectic2 { m: [c, s, -s, c] })
}

pub fn squeezer(r: f64) -> Result<Symplectic2> {
    if !r.is_finite() {
        return invalid("squeezing parameter must be finite");
    }
    if r.abs() > MAX_SQUEEZE_NATS {
        return Err(Error::Overflow(r));
    }
    Ok(Symplectic2 { m: [(-r).exp(), 0.0, 0.0, r.exp()] })
}

/// Quadrature map of `S(-r_g) R(Δ) S(r_g)`, the two-squeezer circuit whose
/// vacuum return probability is the per-coordinate kernel.
pub fn kernel_circuit(r_g: f64, delta: f64) -> Result<Symplectic2> {
    Ok(squeezer(-r_g)? * rotation(delta)? * squeezer(r_g)?)
}

/// Net squeezing of the two-squeezer circuit, `ln(λ₊)/2` with
///
/// `λ₊ = cos²Δ + cosh(4r_g) sin²Δ + sqrt(sinh²(4r_g) sin⁴Δ + 4 sinh²(2r_g) sin²Δ cos²Δ)`.
pub fn total_squeeze(r_g: f64, delta: f64) -> Result<f64> {
    if !(r_g.is_finite() && delta.is_finite()) {
        return invalid("total_squeeze needs finite inputs");
    }
    if r_g < 0.0 {
        return invalid(format!("gate squeezing must be non-negative, got {r_g}"));
    }
    Ok(0.5 * lambda_plus_minus_one(r_g, delta).ln_1p())
}

/// `λ₊ - 1`, rearranged so every term is non-negative:
/// `2 sinh²(2r) sin²Δ + sqrt(sinh²(4r) sin⁴Δ + 4 sinh²(2r) sin²Δ cos²Δ)`.
fn lambda_plus_minus_one(r_g: f64, delta: f64) -> f64 {
    let (s, c) = delta.sin_cos();
    let (s2, c2) = (s * s, c * c);
    let sh2 = (2.0 * r_g).sinh();
    let sh4 = (4.0 * r_g).sinh();
    2.0 * sh2 * sh2 * s2 + (sh4 * sh4 * s2 * s2 + 4.0 * sh2 * sh2 * s2 * c2).sqrt()
}

/// Closed-form eigenvalues `(λ₊, λ₋)` of `M Mᵀ` for the kernel circuit.
pub fn kernel_circuit_eigenvalues(r_g: f64, delta: f64) -> (f64, f64) {
    let (s, c) = delta.sin_cos();
    let (s2, c2) = (s * s, c * c);
    let sh2 = (2.0 * r_g).sinh();
    let sh4 = (4.0 * r_g).sinh();
    let centre = c2 + (4.0 * r_g).cosh() * s2;
    let rad = (sh4 * sh4 * s2 * s2 + 4.0 * sh2 * sh2 * s2 * c2).sqrt();
    (centre + rad, centre - rad)
}

/// `M = R(phi1) · S(r) · R(phi2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMessiahFactors {
    pub phi1: f64,
    pub r: f64,
    pub phi2: f64,
}

impl BlochMessiahFactors {
    pub fn lambda_plus(&self) -> f64 {
        (2.0 * self.r).exp()
    }

    pub fn lambda_minus(&self) -> f64 {
        (-2.0 * self.r).exp()
    }

    pub fn reconstruct(&self) -> Result<Symplectic2> {
        Ok(rotation(self.phi1)? * squeezer(self.r)? * rotation(self.phi2)?)
    }
}

/// Rotation–squeezer–rotation factorisation of a single-mode symplectic map.
///
/// The larger eigenvalue `λ₊` of `M Mᵀ` fixes `r = ln(λ₊)/2`; its eigenvector
/// fixes `phi1` and `phi2` follows from `S(r)⁻¹ R(phi1)ᵀ M`. A pure rotation
/// returns `r = 0, phi2 = 0` with `phi1` equal to the rotation angle.
pub fn bloch_messiah(m: &Symplectic2) -> Result<BlochMessiahFactors> {
    let [m11, m12, m21, m22] = m.entries();
    let det = m.det();
    if !det.is_finite() || (det - 1.0).abs() > SYMPLECTIC_TOL {
        return invalid(format!("matrix is not symplectic (det={det})"));
    }
    let p = m11 * m11 + m12 * m12;
    let q = m21 * m21 + m22 * m22;
    let s = m11 * m21 + m12 * m22;
    let rad = (0.5 * (p - q)).hypot(s);

    if rad <= 1e-14 * (p + q) {
        return Ok(BlochMessiahFactors { phi1: normalize_angle(m12.atan2(m11)), r: 0.0, phi2: 0.0 });
    }

    let lambda_plus = 0.5 * (p + q) + rad;
    let r = 0.5 * lambda_plus.ln();
    // eigenvector of λ₊ is (cos ψ, sin ψ), the second column of R(phi1)
    let psi = 0.5 * (2.0 * s).atan2(p - q);
    let phi1 = normalize_angle(FRAC_PI_2 - psi);

    let back = squeezer(-r)? * rotation(-phi1)? * *m;
    let [x11, x12, x21, x22] = back.entries();
    let phi2 = normalize_angle((x12 - x21).atan2(x11 + x22));
    Ok(BlochMessiahFactors { phi1, r, phi2 })
}

/// Maps an angle into `(-π, π]`.
pub fn normalize_angle(phi: f64) -> f64 {
    let mut a = phi.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation(0.0).unwrap(), Symplectic2::identity());
        let quarter = rotation(FRAC_PI_2).unwrap();
        let want = Symplectic2 { m: [0.0, 1.0, -1.0, 0.0] };
        assert!(quarter.max_abs_diff(&want) < 1e-15);
        let composed = rotation(0.3).unwrap() * rotation(0.7).unwrap();
        assert!(composed.max_abs_diff(&rotation(1.0).unwrap()) < 1e-15);
        assert!(rotation(f64::NAN).is_err());
        assert!(rotation(f64::INFINITY).is_err());
    }

    #[test]
    fn squeezer_examples() {
        assert_eq!(squeezer(0.0).unwrap(), Symplectic2::identity());
        let s = squeezer(2f64.ln()).unwrap().entries();
        assert!(close(s[0], 0.5, 1e-15) && close(s[3], 2.0, 1e-15));
        let composed = squeezer(0.2).unwrap() * squeezer(0.5).unwrap();
        assert!(composed.max_abs_diff(&squeezer(0.7).unwrap()) < 1e-15);
        assert!(matches!(squeezer(25.5), Err(Error::Overflow(_))));
        assert!(matches!(squeezer(-26.0), Err(Error::Overflow(_))));
        assert!(squeezer(25.0).is_ok());
    }

    #[test]
    fn symplectic_new_rejects_bad_det() {
        assert!(Symplectic2::new(1.0, 0.0, 0.0, 2.0).is_err());
        assert!(Symplectic2::new(2.0, 0.0, 0.0, 0.5).is_ok());
    }

    #[test]
    fn apply_examples() {
        let r = 0.5;
        let sq = GaussianState::vacuum().apply(&squeezer(r).unwrap());
        assert!(close(sq.vqq(), (-2.0 * r).exp(), 1e-15));
        assert!(close(sq.vpp(), (2.0 * r).exp(), 1e-15));
        assert_eq!(sq.vqp(), 0.0);

        let st = GaussianState::new([0.3, -0.2], 2.0, 1.5, 0.4).unwrap();
        assert_eq!(st.apply(&Symplectic2::identity()), st);

        let rotated = GaussianState::vacuum().apply(&rotation(0.83).unwrap());
        assert!(close(rotated.vqq(), 1.0, 1e-15) && close(rotated.vpp(), 1.0, 1e-15));
        assert!(rotated.vqp().abs() < 1e-15);
    }

    #[test]
    fn state_validation() {
        assert!(GaussianState::new([0.0; 2], 0.5, 1.0, 0.0).is_err());
        assert!(GaussianState::new([0.0; 2], -1.0, -1.0, 0.0).is_err());
        assert!(GaussianState::new([0.0; 2], 0.5, 2.0, 0.0).is_ok());
    }

    #[test]
    fn loss_examples() {
        let st = GaussianState::new([0.0; 2], 0.1, 10.0, 0.0).unwrap();
        let out = loss_channel(&st, 0.75).unwrap();
        assert!(close(out.vqq(), 0.325, 1e-15));
        assert!(close(out.vpp(), 7.75, 1e-14));
        assert_eq!(loss_channel(&st, 1.0).unwrap(), st);
        assert!(loss_channel(&st, 0.0).unwrap().is_vacuum());
        assert!(loss_channel(&st, 1.1).is_err());
        assert!(loss_channel(&st, -0.1).is_err());
    }

    #[test]
    fn total_squeeze_examples() {
        assert_eq!(total_squeeze(0.7, 0.0).unwrap(), 0.0);
        for &r_g in &[0.0, 0.1, 0.46, 1.2] {
            assert!(close(total_squeeze(r_g, FRAC_PI_2).unwrap(), 2.0 * r_g, 1e-12));
        }
        let r8 = crate::units::db_to_nats(8.0);
        assert!(close(total_squeeze(r8, FRAC_PI_2).unwrap(), 1.842_068_074_395_237, 1e-12));
        assert!(total_squeeze(-0.1, 1.0).is_err());
    }

    #[test]
    fn total_squeeze_symmetries() {
        let r_g = 0.6;
        for &d in &[0.1, 0.7, 1.3, 2.9] {
            let base = total_squeeze(r_g, d).unwrap();
            assert!(close(base, total_squeeze(r_g, -d).unwrap(), 1e-14));
            assert!(close(base, total_squeeze(r_g, d + PI).unwrap(), 1e-12));
        }
    }

    #[test]
    fn bloch_messiah_identity() {
        let f = bloch_messiah(&Symplectic2::identity()).unwrap();
        assert_eq!(f, BlochMessiahFactors { phi1: 0.0, r: 0.0, phi2: 0.0 });
        let f = bloch_messiah(&rotation(0.9).unwrap()).unwrap();
        assert!(close(f.phi1, 0.9, 1e-15) && f.r == 0.0 && f.phi2 == 0.0);
    }

    #[test]
    fn bloch_messiah_quarter_turn_circuit() {
        // r_g for 2 dB, Δ = π/2: M = [[0, e^{2r}], [-e^{-2r}, 0]], M Mᵀ = diag(e^{4r}, e^{-4r})
        let r_g = crate::units::db_to_nats(2.0);
        let m = Symplectic2::new(0.0, (2.0 * r_g).exp(), -(-2.0 * r_g).exp(), 0.0).unwrap();
        let f = bloch_messiah(&m).unwrap();
        assert!(close(f.r, 0.460_517_018_598_809_2, 1e-12));
        assert!(f.reconstruct().unwrap().max_abs_diff(&m) < 1e-12);
        let circuit = kernel_circuit(r_g, FRAC_PI_2).unwrap();
        assert!(circuit.max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn bloch_messiah_round_trip_example() {
        let m = rotation(0.4).unwrap() * squeezer(0.7).unwrap() * rotation(-1.1).unwrap();
        let f = bloch_messiah(&m).unwrap();
        assert!(close(f.r, 0.7, 1e-12));
        assert!(f.reconstruct().unwrap().max_abs_diff(&m) < 1e-12);
        assert!(f.phi1 > -PI && f.phi1 <= PI && f.phi2 > -PI && f.phi2 <= PI);
    }

    #[test]
    fn bloch_messiah_rejects_non_symplectic() {
        let m = Symplectic2 { m: [1.0, 0.0, 0.0, 1.1] };
        assert!(bloch_messiah(&m).is_err());
    }

    #[test]
    fn kernel_circuit_closed_form_entries() {
        let (r, d) = (0.37, 0.81);
        let m = kernel_circuit(r, d).unwrap().entries();
        let want = [d.cos(), (2.0 * r).exp() * d.sin(), -(-2.0 * r).exp() * d.sin(), d.cos()];
        for (a, b) in m.iter().zip(want.iter()) {
            assert!(close(*a, *b, 1e-14));
        }
    }

    #[test]
    fn vacuum_fidelity_examples() {
        assert_eq!(vacuum_fidelity(&GaussianState::vacuum()), 1.0);
        let sq = GaussianState::squeezed_vacuum(1.842_068_074_395_237).unwrap();
        // number-basis value |<0|S(r)|0>|^2 = 1/cosh r
        assert!(close(vacuum_fidelity(&sq), 0.309_211_594_407_642_6, 1e-12));
        let st = GaussianState::new([0.0; 2], 0.5, 2.0, 0.0).unwrap();
        assert!(close(vacuum_fidelity(&st), 0.942_809_041_582_063_4, 1e-12));
    }

    #[test]
    fn coherent_state_overlap() {
        // |<0|α>|^2 = exp(-|α|^2) with mean = 2(Re α, Im α)
        let st = GaussianState::new([0.6, -0.8], 1.0, 1.0, 0.0).unwrap();
        assert!(close(vacuum_fidelity(&st), (-0.25f64).exp(), 1e-14));
    }

    #[test]
    fn normalize_angle_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert!(close(normalize_angle(-PI), PI, 1e-15));
        assert!(close(normalize_angle(3.0 * PI / 2.0), -FRAC_PI_2, 1e-15));
        assert!(close(normalize_angle(0.3 + 4.0 * PI), 0.3, 1e-14));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn symplectic_closure(a in -PI..PI, r in -3.0..3.0f64, b in -PI..PI, r2 in -2.0..2.0f64) {
            let m = rotation(a).unwrap() * squeezer(r).unwrap() * rotation(b).unwrap() * squeezer(r2).unwrap();
            prop_assert!((m.det() - 1.0).abs() < 1e-12);
            prop_assert!((m.inverse().det() - 1.0).abs() < 1e-12);
            prop_assert!((m * m.inverse()).max_abs_diff(&Symplectic2::identity()) < 1e-9);
        }

        #[test]
        fn bloch_messiah_round_trip(p1 in -PI..PI, r in 0.0..3.0f64, p2 in -PI..PI) {
            let m = rotation(p1).unwrap() * squeezer(r).unwrap() * rotation(p2).unwrap();
            let f = bloch_messiah(&m).unwrap();
            prop_assert!(f.r >= 0.0);
            prop_assert!(f.reconstruct().unwrap().max_abs_diff(&m) < 1e-9);
            prop_assert!((f.r - r).abs() < 1e-7);
            prop_assert!((f.lambda_plus() * f.lambda_minus() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn fidelity_of_squeezed_vacuum(r in 0.0..5.0f64) {
            let st = GaussianState::squeezed_vacuum(r).unwrap();
            prop_assert!((vacuum_fidelity(&st) - 1.0 / r.cosh()).abs() < 1e-10);
        }

        #[test]
        fn loss_semigroup(vqq in 0.05..5.0f64, squeeze in 0.0..1.0f64, vqp in -0.5..0.5f64, eta in 0.0..1.0f64, q in -2.0..2.0f64) {
            // vpp chosen so the state is physical
            let vpp = (1.0 + vqp * vqp) / vqq + squeeze;
            let st = GaussianState::new([q, -q], vqq, vpp, vqp).unwrap();
            let twice = loss_channel(&loss_channel(&st, eta).unwrap(), eta).unwrap();
            let once = loss_channel(&st, eta * eta).unwrap();
            prop_assert!((twice.vqq() - once.vqq()).abs() < 1e-12);
            prop_assert!((twice.vpp() - once.vpp()).abs() < 1e-12);
            prop_assert!((twice.vqp() - once.vqp()).abs() < 1e-12);
            prop_assert!((twice.mean()[0] - once.mean()[0]).abs() < 1e-12);
            prop_assert!(once.det() >= 1.0 - 1e-9);
        }
    }
}
