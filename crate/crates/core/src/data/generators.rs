use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DatasetMeta, LabeledDataset};
use crate::error::{invalid, Error, Result};
use crate::seeding::rng;

pub const DEFAULT_MOONS_NOISE: f64 = 0.15;
pub const DEFAULT_CIRCLES_FACTOR: f64 = 0.5;
pub const DEFAULT_CIRCLES_NOISE: f64 = 0.08;
pub const DEFAULT_BLOBS_SD: f64 = 0.8;
pub const DEFAULT_BLOBS_BOX: f64 = 5.0;

/// Blob centers closer than this many cluster standard deviations are redrawn.
pub const BLOBS_MIN_SEPARATION_SD: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Moons,
    Circles,
    Blobs,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 3] = [DatasetKind::Moons, DatasetKind::Circles, DatasetKind::Blobs];

    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetKind::Moons => "moons",
            DatasetKind::Circles => "circles",
            DatasetKind::Blobs => "blobs",
        }
    }

    pub(crate) fn code(&self) -> u64 {
        match self {
            DatasetKind::Moons => 0,
            DatasetKind::Circles => 1,
            DatasetKind::Blobs => 2,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moons" | "moon" => Ok(DatasetKind::Moons),
            "circles" | "circle" => Ok(DatasetKind::Circles),
            "blobs" | "blob" => Ok(DatasetKind::Blobs),
            other => invalid(format!("unknown dataset kind '{other}' (expected moons, circles or blobs)")),
        }
    }
}

/// Shape parameters for all three generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub moons_noise: f64,
    pub circles_factor: f64,
    pub circles_noise: f64,
    pub blobs_sd: f64,
    /// Blob centers are drawn uniformly from `[-box, box]²`.
    pub blobs_box: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            moons_noise: DEFAULT_MOONS_NOISE,
            circles_factor: DEFAULT_CIRCLES_FACTOR,
            circles_noise: DEFAULT_CIRCLES_NOISE,
            blobs_sd: DEFAULT_BLOBS_SD,
            blobs_box: DEFAULT_BLOBS_BOX,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("moons_noise", self.moons_noise),
            ("circles_noise", self.circles_noise),
            ("blobs_sd", self.blobs_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        if !(self.circles_factor > 0.0 && self.circles_factor < 1.0) {
            return invalid(format!("circles_factor must lie in (0, 1), got {}", self.circles_factor));
        }
        if !(self.blobs_box > 0.0 && self.blobs_box.is_finite()) {
            return invalid(format!("blobs_box must be positive, got {}", self.blobs_box));
        }
        Ok(())
    }
}

/// A named dataset family.
pub trait DatasetGenerator: Send + Sync {
    fn kind(&self) -> DatasetKind;
    fn generate(&self, n: usize, seed: u64) -> Result<LabeledDataset>;
}

fn check_size(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return invalid(format!("dataset size must be even and >= 4, got {n}"));
    }
    Ok(())
}

fn noisy(g: &mut impl Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        0.0
    } else {
        sd * g.sample::<f64, _>(StandardNormal)
    }
}

/// Two interleaving half circles; the lower-right arc is class `+1`.
pub struct Moons {
    pub noise: f64,
}

impl DatasetGenerator for Moons {
    fn kind(&self) -> DatasetKind {
        DatasetKind::Moons
    }

    fn generate(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        gen_moons(n, self.noise, seed)
    }
}

pub fn gen_moons(n: usize, noise_sd: f64, seed: u64) -> Result<LabeledDataset> {
    check_size(n)?;
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return invalid("moons noise must be >= 0");
    }
    let half = n / 2;
    let mut g = rng(seed);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for class in [-1i8, 1] {
        for i in 0..half {
            let t = PI * i as f64 / (half - 1) as f64;
            let (x, y) = if class < 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
            points.push([x + noisy(&mut g, noise_sd), y + noisy(&mut g, noise_sd)]);
            labels.push(class);
        }
    }
    LabeledDataset::new(points, labels, DatasetMeta { kind: DatasetKind::Moons, noise: noise_sd, seed })
}

/// Concentric circles; the inner circle (radius `factor`) is class `+1`.
pub struct Circles {
    pub factor: f64,
    pub noise: f64,
}

impl DatasetGenerator for Circles {
    fn kind(&self) -> DatasetKind {
        DatasetKind::Circles
    }

    fn generate(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        gen_circles(n, self.factor, self.noise, seed)
    }
}

pub fn gen_circles(n: usize, factor: f64, noise_sd: f64, seed: u64) -> Result<LabeledDataset> {
    check_size(n)?;
    if !(factor > 0.0 && factor < 1.0) {
        return invalid(format!("circle factor must lie in (0, 1), got {factor}"));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return invalid("circles noise must be >= 0");
    }
    let half = n / 2;
    let mut g = rng(seed);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (class, radius) in [(-1i8, 1.0), (1, factor)] {
        for i in 0..half {
            let t = 2.0 * PI * i as f64 / half as f64;
            let (x, y) = (radius * t.cos(), radius * t.sin());
            points.push([x + noisy(&mut g, noise_sd), y + noisy(&mut g, noise_sd)]);
            labels.push(class);
        }
    }
    LabeledDataset::new(points, labels, DatasetMeta { kind: DatasetKind::Circles, noise: noise_sd, seed })
}

/// Two isotropic Gaussian clusters with seed-chosen centers.
pub struct Blobs {
    pub cluster_sd: f64,
    pub center_box: f64,
}

impl DatasetGenerator for Blobs {
    fn kind(&self) -> DatasetKind {
        DatasetKind::Blobs
    }

    fn generate(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        let centers = blob_centers(self.center_box, self.cluster_sd, seed);
        gen_blobs(n, centers, self.cluster_sd, seed)
    }
}

/// Uniform centers in `[-box, box]²`, redrawn while they are closer than
/// [`BLOBS_MIN_SEPARATION_SD`] cluster deviations (or `box/2` for zero spread).
pub fn blob_centers(center_box: f64, cluster_sd: f64, seed: u64) -> [[f64; 2]; 2] {
    let mut g = rng(seed ^ 0xB10B);
    let min_sep = (BLOBS_MIN_SEPARATION_SD * cluster_sd).max(0.5 * center_box).min(2.0 * center_box);
    loop {
        let mut c = [[0.0; 2]; 2];
        for p in c.iter_mut() {
            for v in p.iter_mut() {
                *v = g.random_range(-center_box..=center_box);
            }
        }
        let d = ((c[0][0] - c[1][0]).powi(2) + (c[0][1] - c[1][1]).powi(2)).sqrt();
        if d >= min_sep {
            return c;
        }
    }
}

/// First center is class `-1`, second is `+1`.
pub fn gen_blobs(n: usize, centers: [[f64; 2]; 2], cluster_sd: f64, seed: u64) -> Result<LabeledDataset> {
    check_size(n)?;
    if !(cluster_sd >= 0.0 && cluster_sd.is_finite()) {
        return invalid("cluster spread must be >= 0");
    }
    if centers == [centers[0]; 2] {
        return invalid("blob centers must differ");
    }
    let half = n / 2;
    let mut g = rng(seed);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (class, c) in [(-1i8, centers[0]), (1, centers[1])] {
        for _ in 0..half {
            points.push([c[0] + noisy(&mut g, cluster_sd), c[1] + noisy(&mut g, cluster_sd)]);
            labels.push(class);
        }
    }
    LabeledDataset::new(points, labels, DatasetMeta { kind: DatasetKind::Blobs, noise: cluster_sd, seed })
}

/// Generators keyed by dataset kind.
pub struct GeneratorRegistry {
    generators: BTreeMap<DatasetKind, Box<dyn DatasetGenerator>>,
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        Self { generators: BTreeMap::new() }
    }

    pub fn with_params(params: &GeneratorParams) -> Result<Self> {
        params.validate()?;
        let mut r = Self::empty();
        r.register(Box::new(Moons { noise: params.moons_noise }));
        r.register(Box::new(Circles { factor: params.circles_factor, noise: params.circles_noise }));
        r.register(Box::new(Blobs { cluster_sd: params.blobs_sd, center_box: params.blobs_box }));
        Ok(r)
    }

    /// Replaces any generator already registered for the same kind.
    pub fn register(&mut self, g: Box<dyn DatasetGenerator>) {
        self.generators.insert(g.kind(), g);
    }

    pub fn get(&self, kind: DatasetKind) -> Result<&dyn DatasetGenerator> {
        self.generators
            .get(&kind)
            .map(|g| g.as_ref())
            .ok_or_else(|| Error::InvalidArgument(format!("no generator registered for '{kind}'")))
    }

    pub fn kinds(&self) -> Vec<DatasetKind> {
        self.generators.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_without_noise_sit_on_centers() {
        let c = [[-2.0, 1.0], [3.0, -1.5]];
        let ds = gen_blobs(300, c, 0.0, 9).unwrap();
        for (p, &l) in ds.points().iter().zip(ds.labels()) {
            assert_eq!(*p, if l < 0 { c[0] } else { c[1] });
        }
    }

    #[test]
    fn circle_radii_ratio() {
        let ds = gen_circles(300, 0.5, 0.0, 1).unwrap();
        for (p, &l) in ds.points().iter().zip(ds.labels()) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let want = if l > 0 { 0.5 } else { 1.0 };
            assert!((r - want).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let reg = GeneratorRegistry::with_params(&GeneratorParams::default()).unwrap();
        for kind in DatasetKind::ALL {
            let g = reg.get(kind).unwrap();
            assert_eq!(g.generate(300, 5).unwrap(), g.generate(300, 5).unwrap());
            assert_ne!(g.generate(300, 5).unwrap().points(), g.generate(300, 6).unwrap().points());
        }
    }

    #[test]
    fn balanced_classes() {
        let ds = gen_moons(300, 0.15, 3).unwrap();
        assert_eq!(ds.labels().iter().filter(|&&l| l > 0).count(), 150);
    }

    #[test]
    fn invalid_sizes() {
        assert!(gen_moons(3, 0.1, 0).is_err());
        assert!(gen_moons(301, 0.1, 0).is_err());
        assert!(gen_circles(300, 1.5, 0.1, 0).is_err());
        assert!(gen_blobs(300, [[0.0, 0.0]; 2], 0.1, 0).is_err());
    }

    #[test]
    fn blob_centers_separated() {
        for seed in 0..50 {
            let c = blob_centers(5.0, 0.8, seed);
            let d = ((c[0][0] - c[1][0]).powi(2) + (c[0][1] - c[1][1]).powi(2)).sqrt();
            assert!(d >= 4.8);
            assert!(c.iter().flatten().all(|v| v.abs() <= 5.0));
        }
    }

    #[test]
    fn kind_names() {
        assert_eq!("circle".parse::<DatasetKind>().unwrap(), DatasetKind::Circles);
        assert!("spiral".parse::<DatasetKind>().is_err());
        assert_eq!(DatasetKind::Blobs.to_string(), "blobs");
    }
}
