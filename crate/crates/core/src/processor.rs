//! Simulation of the measurement-induced squeezing gate.
//!
//! An input vacuum and an x-squeezed ancilla meet on a beam splitter of
//! transmissivity `T = e^{-2 r_total}`. Mode 1 is measured in `p` and its
//! outcome is added to the homodyne record of mode 2 with gain
//! `g = sqrt((1-T)/T)`, which cancels the ancilla's anti-squeezed quadrature.
//! Records at the three homodyne angles `0, π/4, π/2` give the output
//! covariance, and its vacuum overlap is the kernel value.
//!
//! Loss model: the ancilla passes an efficiency `η_a` before the beam
//! splitter and mode 2 passes `η_d` before its detector. The feedforward gain
//! applied in post-processing is scaled by `√η_d` to match the attenuated
//! record, which makes the detector loss act as a pure-loss channel on the
//! gate output.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{invalid, Result};
use crate::exact::Dyadic;
use crate::gaussian::{loss_channel, total_squeeze, vacuum_fidelity, vacuum_overlap, GaussianState, MAX_SQUEEZE_NATS};
use crate::kernel::{GateLevel, LATTICE_POINTS, LATTICE_STEP};
use crate::seeding::{derive_seed, rng};
use crate::units::{db_to_nats, variance_to_db};

/// Default noise: 10 dB pure ancilla squeezing, 25 % loss on the
/// ancilla path, 23 % loss before the output detector.
pub const DEFAULT_ANCILLA_DB: f64 = 10.0;
pub const DEFAULT_ANCILLA_EFFICIENCY: f64 = 0.75;
pub const DEFAULT_DETECTION_EFFICIENCY: f64 = 0.77;

pub const DEFAULT_SAMPLES_PER_ANGLE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Pure ancilla squeezing in dB; `inf` is a perfect ancilla.
    pub ancilla_pure_db: f64,
    pub ancilla_efficiency: f64,
    pub detection_efficiency: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            ancilla_pure_db: DEFAULT_ANCILLA_DB,
            ancilla_efficiency: DEFAULT_ANCILLA_EFFICIENCY,
            detection_efficiency: DEFAULT_DETECTION_EFFICIENCY,
        }
    }
}

impl NoiseModel {
    pub fn new(ancilla_pure_db: f64, ancilla_efficiency: f64, detection_efficiency: f64) -> Result<Self> {
        let m = Self { ancilla_pure_db, ancilla_efficiency, detection_efficiency };
        m.validate()?;
        Ok(m)
    }

    pub fn ideal() -> Self {
        Self { ancilla_pure_db: f64::INFINITY, ancilla_efficiency: 1.0, detection_efficiency: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ancilla_pure_db.is_nan() || self.ancilla_pure_db < 0.0 {
            return invalid(format!("ancilla squeezing must be >= 0 dB, got {}", self.ancilla_pure_db));
        }
        for (name, eta) in [("ancilla", self.ancilla_efficiency), ("detection", self.detection_efficiency)] {
            if !(0.0..=1.0).contains(&eta) {
                return invalid(format!("{name} efficiency {eta} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Ancilla `(v_qq, v_pp)` as seen at the beam splitter.
    pub fn ancilla_variances(&self) -> (f64, f64) {
        let r_a = db_to_nats(self.ancilla_pure_db);
        let eta = self.ancilla_efficiency;
        let pure_q = (-2.0 * r_a).exp();
        let pure_p = (2.0 * r_a).exp();
        (eta * pure_q + (1.0 - eta), eta * pure_p + (1.0 - eta))
    }

    /// Lower bound on the analytic output q variance as `r_total -> ∞`.
    pub fn squeezing_floor(&self) -> f64 {
        let eta_d = self.detection_efficiency;
        eta_d * self.ancilla_variances().0 + (1.0 - eta_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSetting {
    pub transmissivity: f64,
    pub gain: f64,
    pub r_total: f64,
}

pub fn gate_setting(r_total: f64) -> Result<GateSetting> {
    if !(0.0..=MAX_SQUEEZE_NATS).contains(&r_total) {
        return invalid(format!("r_total must lie in [0, 25], got {r_total}"));
    }
    let t = (-2.0 * r_total).exp();
    Ok(GateSetting { transmissivity: t, gain: ((1.0 - t) / t).sqrt(), r_total })
}

/// Output state of the gate for vacuum input:
/// `V_qq = T + (1-T) v_a,qq`, `V_pp = 1/T`, then detector loss.
pub fn output_state_analytic(r_total: f64, noise: &NoiseModel) -> Result<GaussianState> {
    noise.validate()?;
    let t = gate_setting(r_total)?.transmissivity;
    let (va_q, _) = noise.ancilla_variances();
    let vqq = t + (1.0 - t) * va_q;
    let st = GaussianState::new([0.0, 0.0], vqq, 1.0 / t, 0.0)?;
    loss_channel(&st, noise.detection_efficiency)
}

/// Homodyne angles used for covariance reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HomodyneAngle {
    Q,
    Diagonal,
    P,
}

impl HomodyneAngle {
    pub const ALL: [HomodyneAngle; 3] = [HomodyneAngle::Q, HomodyneAngle::Diagonal, HomodyneAngle::P];

    pub fn from_radians(phi: f64) -> Result<Self> {
        const TOL: f64 = 1e-12;
        if (phi - 0.0).abs() < TOL {
            Ok(HomodyneAngle::Q)
        } else if (phi - FRAC_PI_4).abs() < TOL {
            Ok(HomodyneAngle::Diagonal)
        } else if (phi - FRAC_PI_2).abs() < TOL {
            Ok(HomodyneAngle::P)
        } else {
            invalid(format!("unsupported homodyne angle {phi}; expected 0, π/4 or π/2"))
        }
    }

    pub fn radians(&self) -> f64 {
        match self {
            HomodyneAngle::Q => 0.0,
            HomodyneAngle::Diagonal => FRAC_PI_4,
            HomodyneAngle::P => FRAC_PI_2,
        }
    }

    /// `(cos φ, sin φ)`, exact at the endpoints.
    pub fn cos_sin(&self) -> (f64, f64) {
        match self {
            HomodyneAngle::Q => (1.0, 0.0),
            HomodyneAngle::Diagonal => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            HomodyneAngle::P => (0.0, 1.0),
        }
    }

    fn index(&self) -> u64 {
        match self {
            HomodyneAngle::Q => 0,
            HomodyneAngle::Diagonal => 1,
            HomodyneAngle::P => 2,
        }
    }
}

/// Raw quadrature values of one shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotQuadratures {
    /// Mode 2 after detector loss.
    pub q2: f64,
    pub p2: f64,
    /// Mode 1 `p` measurement outcome.
    pub p1: f64,
}

/// Record with the feedforward applied optically: `q2 cos φ + (p2 + g p1) sin φ`.
pub fn optical_record(shot: &ShotQuadratures, gain: f64, cos: f64, sin: f64) -> f64 {
    let p_out = Dyadic::from(shot.p2) + Dyadic::from(gain) * shot.p1;
    (Dyadic::from(shot.q2) * cos + p_out * sin).to_f64()
}

/// Record with the feedforward applied in post-processing:
/// `q_{2,φ} + g sin φ · p1`.
pub fn postprocessed_record(shot: &ShotQuadratures, gain: f64, cos: f64, sin: f64) -> f64 {
    let q2_phi = Dyadic::from(shot.q2) * cos + Dyadic::from(shot.p2) * sin;
    (q2_phi + Dyadic::from(gain) * sin * shot.p1).to_f64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneBatch {
    pub angle: HomodyneAngle,
    pub samples: Vec<f64>,
    pub seed: u64,
}

/// Draws `n` shots of the gate and returns their raw quadratures together
/// with the gain applied in post-processing.
pub fn sample_shots(r_total: f64, noise: &NoiseModel, n: usize, seed: u64) -> Result<(Vec<ShotQuadratures>, f64)> {
    noise.validate()?;
    if n == 0 {
        return invalid("sample count must be at least 1");
    }
    let setting = gate_setting(r_total)?;
    let t = setting.transmissivity;
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    let r_a = db_to_nats(noise.ancilla_pure_db);
    // an infinitely squeezed ancilla has no q noise; its p quadrature drops
    // out of the output exactly, so it is represented by zero
    let (sd_qa, sd_pa) = if r_a.is_finite() { ((-r_a).exp(), r_a.exp()) } else { (0.0, 0.0) };
    let (ea, ed) = (noise.ancilla_efficiency, noise.detection_efficiency);
    let (ea_s, ea_r) = (ea.sqrt(), (1.0 - ea).sqrt());
    let (ed_s, ed_r) = (ed.sqrt(), (1.0 - ed).sqrt());

    let mut g = rng(seed);
    let mut normal = move || -> f64 { g.sample(StandardNormal) };
    let shots = (0..n)
        .map(|_| {
            let q_in = normal();
            let p_in = normal();
            let q_a = ea_s * sd_qa * normal() + ea_r * normal();
            let p_a = ea_s * sd_pa * normal() + ea_r * normal();
            let p1 = sr * p_in + st * p_a;
            let q2 = st * q_in - sr * q_a;
            let p2 = st * p_in - sr * p_a;
            ShotQuadratures {
                q2: ed_s * q2 + ed_r * normal(),
                p2: ed_s * p2 + ed_r * normal(),
                p1,
            }
        })
        .collect();
    Ok((shots, ed_s * setting.gain))
}

/// Post-processed homodyne record at one angle.
pub fn sample_gate(r_total: f64, noise: &NoiseModel, phi: f64, n: usize, seed: u64) -> Result<HomodyneBatch> {
    let angle = HomodyneAngle::from_radians(phi)?;
    let (shots, gain) = sample_shots(r_total, noise, n, seed)?;
    let (c, s) = angle.cos_sin();
    let samples = shots.iter().map(|shot| postprocessed_record(shot, gain, c, s)).collect();
    Ok(HomodyneBatch { angle, samples, seed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovEstimate {
    pub vqq: f64,
    pub vpp: f64,
    pub vqp: f64,
    pub mean: [f64; 2],
    pub n_per_angle: usize,
}

impl CovEstimate {
    pub fn vacuum_overlap(&self) -> f64 {
        vacuum_overlap(self.mean, [self.vqq, self.vpp, self.vqp])
    }

    pub fn levels(&self) -> Result<(f64, f64)> {
        output_levels(self.vqq, self.vpp)
    }
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, if xs.len() > 1 { ss / (n - 1.0) } else { 0.0 })
}

/// Covariance from records at `0, π/4, π/2`, using
/// `V(φ) = V_qq cos²φ + V_pp sin²φ + 2 V_qp sin φ cos φ`.
pub fn estimate_covariance(batches: &[HomodyneBatch]) -> Result<CovEstimate> {
    let mut found: [Option<&HomodyneBatch>; 3] = [None; 3];
    for b in batches {
        let slot = &mut found[b.angle.index() as usize];
        if slot.is_some() {
            return invalid(format!("duplicate homodyne angle {:?}", b.angle));
        }
        *slot = Some(b);
    }
    let [Some(bq), Some(bd), Some(bp)] = found else {
        return invalid("covariance estimation needs batches at 0, π/4 and π/2");
    };
    if bq.samples.len() < 2 || bd.samples.len() < 2 || bp.samples.len() < 2 {
        return invalid("each homodyne batch needs at least two samples");
    }
    let (mq, vq) = mean_and_var(&bq.samples);
    let (_, vd) = mean_and_var(&bd.samples);
    let (mp, vp) = mean_and_var(&bp.samples);
    Ok(CovEstimate {
        vqq: vq,
        vpp: vp,
        vqp: vd - 0.5 * (vq + vp),
        mean: [mq, mp],
        n_per_angle: bq.samples.len().min(bd.samples.len()).min(bp.samples.len()),
    })
}

/// Records at all three angles for one gate setting.
pub fn measure_gate(r_total: f64, noise: &NoiseModel, n: usize, seed: u64) -> Result<Vec<HomodyneBatch>> {
    HomodyneAngle::ALL
        .iter()
        .map(|a| sample_gate(r_total, noise, a.radians(), n, derive_seed(seed, a.index())))
        .collect()
}

/// Sampled kernel value: three-angle measurement, covariance reconstruction,
/// vacuum overlap. This is the raw estimator, which can exceed 1 by
/// sampling error when the output is close to vacuum.
pub fn kappa_from_gate(r_total: f64, noise: &NoiseModel, n: usize, seed: u64) -> Result<f64> {
    let batches = measure_gate(r_total, noise, n, seed)?;
    Ok(estimate_covariance(&batches)?.vacuum_overlap())
}

/// `(10 log10 V_qq, 10 log10 V_pp)`.
pub fn output_levels(vqq: f64, vpp: f64) -> Result<(f64, f64)> {
    if !(vqq > 0.0 && vpp > 0.0) {
        return invalid(format!("variances must be positive (vqq={vqq}, vpp={vpp})"));
    }
    Ok((variance_to_db(vqq), variance_to_db(vpp)))
}

pub fn state_levels(state: &GaussianState) -> (f64, f64) {
    (variance_to_db(state.vqq()), variance_to_db(state.vpp()))
}

/// Bootstrap standard errors of the sampled quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapErrors {
    pub kappa: f64,
    pub sq_db: f64,
    pub antisq_db: f64,
}

pub fn bootstrap_errors(batches: &[HomodyneBatch], resamples: usize, seed: u64) -> Result<BootstrapErrors> {
    if resamples < 2 {
        return invalid("bootstrap needs at least two resamples");
    }
    estimate_covariance(batches)?;
    let mut g = rng(seed);
    let mut draws = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let resampled: Vec<HomodyneBatch> = batches
            .iter()
            .map(|b| {
                let n = b.samples.len();
                let samples = (0..n).map(|_| b.samples[g.random_range(0..n)]).collect();
                HomodyneBatch { angle: b.angle, samples, seed: b.seed }
            })
            .collect();
        let est = estimate_covariance(&resampled)?;
        let (sq, anti) = est.levels()?;
        draws.push([est.vacuum_overlap(), sq, anti]);
    }
    let sd = |k: usize| {
        let col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        mean_and_var(&col).1.sqrt()
    };
    Ok(BootstrapErrors { kappa: sd(0), sq_db: sd(1), antisq_db: sd(2) })
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub gates: Vec<GateLevel>,
    pub noise: NoiseModel,
    pub n_per_angle: usize,
    pub seed: u64,
    /// Bootstrap resamples per cell; 0 skips error estimation.
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gate_db: f64,
    pub diff_index: usize,
    pub diff_rad: f64,
    pub kappa_analytic: f64,
    pub kappa_sampled: f64,
    pub sq_db_analytic: f64,
    pub sq_db_sampled: f64,
    pub antisq_db_analytic: f64,
    pub antisq_db_sampled: f64,
    pub n_per_angle: usize,
    pub seed: u64,
    pub errors: Option<BootstrapErrors>,
}

/// Output levels and kernel values over every gate level and lattice
/// difference, analytic and sampled. Each cell draws from its own stream
/// derived from `(seed, cell index)`.
pub fn sweep_fig2(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.noise.validate()?;
    let cells: Vec<(usize, GateLevel, usize)> = cfg
        .gates
        .iter()
        .enumerate()
        .flat_map(|(gi, &g)| (0..LATTICE_POINTS).map(move |m| (gi, g, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(gi, gate, m)| {
            let diff = m as f64 * LATTICE_STEP;
            let r_total = total_squeeze(gate.nats(), 0.5 * diff)?;
            let analytic = output_state_analytic(r_total, &cfg.noise)?;
            let cell_seed = derive_seed(cfg.seed, (gi * LATTICE_POINTS + m) as u64);
            let batches = measure_gate(r_total, &cfg.noise, cfg.n_per_angle, cell_seed)?;
            let est = estimate_covariance(&batches)?;
            let (sq_a, anti_a) = state_levels(&analytic);
            let (sq_s, anti_s) = est.levels()?;
            let errors = if cfg.bootstrap_resamples > 0 {
                Some(bootstrap_errors(&batches, cfg.bootstrap_resamples, derive_seed(cell_seed, 3))?)
            } else {
                None
            };
            Ok(SweepRow {
                gate_db: gate.db(),
                diff_index: m,
                diff_rad: diff,
                kappa_analytic: vacuum_fidelity(&analytic),
                kappa_sampled: est.vacuum_overlap(),
                sq_db_analytic: sq_a,
                sq_db_sampled: sq_s,
                antisq_db_analytic: anti_a,
                antisq_db_sampled: anti_s,
                n_per_angle: est.n_per_angle,
                seed: cell_seed,
                errors,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 14] = [
    "gate_db",
    "diff_index",
    "diff_rad",
    "kappa_analytic",
    "kappa_sampled",
    "sq_db_analytic",
    "sq_db_sampled",
    "antisq_db_analytic",
    "antisq_db_sampled",
    "n_per_angle",
    "seed",
    "kappa_se",
    "sq_db_se",
    "antisq_db_se",
];

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow], noise: &NoiseModel) -> Result<()> {
    csvio::write_schema_line(&mut out, "gate_sweep")?;
    writeln!(
        out,
        "# ancilla_pure_db={} ancilla_efficiency={} detection_efficiency={}",
        noise.ancilla_pure_db, noise.ancilla_efficiency, noise.detection_efficiency
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let se = |f: fn(&BootstrapErrors) -> f64| r.errors.as_ref().map_or_else(|| "NA".to_string(), |e| f(e).to_string());
        w.write_record([
            r.gate_db.to_string(),
            r.diff_index.to_string(),
            r.diff_rad.to_string(),
            r.kappa_analytic.to_string(),
            r.kappa_sampled.to_string(),
            r.sq_db_analytic.to_string(),
            r.sq_db_sampled.to_string(),
            r.antisq_db_analytic.to_string(),
            r.antisq_db_sampled.to_string(),
            r.n_per_angle.to_string(),
            r.seed.to_string(),
            se(|e| e.kappa),
            se(|e| e.sq_db),
            se(|e| e.antisq_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}
