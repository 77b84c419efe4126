//! Synthetic datasets, standardization onto `[-π/2, π/2]²`, the 26×26
//! lattice, train/test splits and K-fold plans.

mod generators;
mod protocol;

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use generators::{
    blob_centers, gen_blobs, gen_circles, gen_moons, Blobs, Circles, DatasetGenerator, DatasetKind, GeneratorParams,
    GeneratorRegistry, Moons, BLOBS_MIN_SEPARATION_SD, DEFAULT_BLOBS_BOX, DEFAULT_BLOBS_SD, DEFAULT_CIRCLES_FACTOR,
    DEFAULT_CIRCLES_NOISE, DEFAULT_MOONS_NOISE,
};
pub use protocol::{
    accuracy, dataset_seed, run_protocol, write_report_csv, AccuracyRow, KernelCell, ProtocolConfig, REPORT_HEADER,
};

use crate::csvio;
use crate::error::{invalid, Error, Result};
use crate::kernel::{LATTICE_POINTS, LATTICE_STEP};
use crate::seeding::rng;

const STANDARD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kind: DatasetKind,
    pub noise: f64,
    pub seed: u64,
}

fn check_labels(n: usize, labels: &[i8]) -> Result<()> {
    if labels.len() != n {
        return invalid(format!("{n} points but {} labels", labels.len()));
    }
    if n < 2 {
        return invalid("a dataset needs at least two points");
    }
    if labels.iter().any(|&l| l != 1 && l != -1) {
        return invalid("labels must be +1 or -1");
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return invalid("both classes must be present");
    }
    Ok(())
}

/// Subsetting by index, shared by both dataset representations.
pub trait Subset: Sized {
    fn len(&self) -> usize;
    fn subset(&self, idx: &[usize]) -> Result<Self>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<[f64; 2]>,
    labels: Vec<i8>,
    meta: DatasetMeta,
}

impl LabeledDataset {
    pub fn new(points: Vec<[f64; 2]>, labels: Vec<i8>, meta: DatasetMeta) -> Result<Self> {
        check_labels(points.len(), &labels)?;
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("dataset coordinates must be finite");
        }
        Ok(Self { points, labels, meta })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn meta(&self) -> DatasetMeta {
        self.meta
    }

    pub fn is_standardized(&self) -> bool {
        self.points.iter().flatten().all(|v| v.abs() <= FRAC_PI_2 + STANDARD_SLACK)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        csvio::write_schema_line(&mut out, "dataset")?;
        writeln!(out, "# kind={} noise={} seed={}", self.meta.kind, self.meta.noise, self.meta.seed)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x1", "x2", "label"])?;
        for (p, l) in self.points.iter().zip(&self.labels) {
            w.write_record([p[0].to_string(), p[1].to_string(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, meta: DatasetMeta) -> Result<Self> {
        let rows = read_rows(input, ["x1", "x2", "label"])?;
        let mut points = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for r in rows {
            points.push([parse_field::<f64>(&r[0], "x1")?, parse_field::<f64>(&r[1], "x2")?]);
            labels.push(parse_field::<i8>(&r[2], "label")?);
        }
        Self::new(points, labels, meta)
    }
}

impl Subset for LabeledDataset {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn subset(&self, idx: &[usize]) -> Result<Self> {
        check_indices(idx, self.len())?;
        Self::new(
            idx.iter().map(|&i| self.points[i]).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.meta,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDataset {
    coords: Vec<[usize; 2]>,
    labels: Vec<i8>,
    meta: DatasetMeta,
}

impl LatticeDataset {
    pub fn new(coords: Vec<[usize; 2]>, labels: Vec<i8>, meta: DatasetMeta) -> Result<Self> {
        check_labels(coords.len(), &labels)?;
        if let Some(c) = coords.iter().find(|c| c[0] >= LATTICE_POINTS || c[1] >= LATTICE_POINTS) {
            return invalid(format!("lattice coordinate {c:?} outside 0..=25"));
        }
        Ok(Self { coords, labels, meta })
    }

    pub fn coords(&self) -> &[[usize; 2]] {
        &self.coords
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn meta(&self) -> DatasetMeta {
        self.meta
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        csvio::write_schema_line(&mut out, "lattice_dataset")?;
        writeln!(out, "# kind={} noise={} seed={}", self.meta.kind, self.meta.noise, self.meta.seed)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["m1", "m2", "label"])?;
        for (c, l) in self.coords.iter().zip(&self.labels) {
            w.write_record([c[0].to_string(), c[1].to_string(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, meta: DatasetMeta) -> Result<Self> {
        let rows = read_rows(input, ["m1", "m2", "label"])?;
        let mut coords = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for r in rows {
            coords.push([parse_field::<usize>(&r[0], "m1")?, parse_field::<usize>(&r[1], "m2")?]);
            labels.push(parse_field::<i8>(&r[2], "label")?);
        }
        Self::new(coords, labels, meta)
    }
}

impl Subset for LatticeDataset {
    fn len(&self) -> usize {
        self.coords.len()
    }

    fn subset(&self, idx: &[usize]) -> Result<Self> {
        check_indices(idx, self.len())?;
        Self::new(
            idx.iter().map(|&i| self.coords[i]).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.meta,
        )
    }
}

fn check_indices(idx: &[usize], n: usize) -> Result<()> {
    if let Some(i) = idx.iter().find(|&&i| i >= n) {
        return invalid(format!("index {i} out of range for {n} points"));
    }
    Ok(())
}

fn read_rows<R: Read>(input: R, columns: [&str; 3]) -> Result<Vec<[String; 3]>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = r.headers()?.clone();
    let mut pos = [0; 3];
    for (k, name) in columns.iter().enumerate() {
        pos[k] = headers
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| Error::InvalidArgument(format!("CSV is missing column '{name}'")))?;
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(pos.map(|p| rec[p].trim().to_string()))
        })
        .collect()
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::InvalidArgument(format!("bad {name} value '{s}'")))
}

/// Per-coordinate min-max map onto `[-π/2, π/2]`.
pub fn standardize(ds: &LabeledDataset) -> Result<LabeledDataset> {
    let mut points = ds.points.clone();
    for k in 0..2 {
        let (lo, hi) = ds
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
        if !(hi > lo) {
            return Err(Error::Degenerate(format!("coordinate {} has zero spread", k + 1)));
        }
        if lo == -FRAC_PI_2 && hi == FRAC_PI_2 {
            continue;
        }
        for p in points.iter_mut() {
            let t = (p[k] - lo) / (hi - lo);
            p[k] = (-FRAC_PI_2 + t * PI).clamp(-FRAC_PI_2, FRAC_PI_2);
        }
    }
    LabeledDataset::new(points, ds.labels.clone(), ds.meta)
}

/// Nearest lattice index for a standardized coordinate, halves rounded away
/// from zero: `x = 0` maps to 13.
pub fn lattice_index(x: f64) -> usize {
    (x / LATTICE_STEP + 12.5).round().clamp(0.0, (LATTICE_POINTS - 1) as f64) as usize
}

pub fn discretize(ds: &LabeledDataset) -> Result<LatticeDataset> {
    if !ds.is_standardized() {
        return invalid("discretize expects coordinates within [-pi/2, pi/2]");
    }
    let coords = ds.points.iter().map(|p| [lattice_index(p[0]), lattice_index(p[1])]).collect();
    LatticeDataset::new(coords, ds.labels.clone(), ds.meta)
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng(seed));
    idx
}

/// Seeded shuffle into disjoint train and test parts.
pub fn split_train_test<D: Subset>(ds: &D, n_train: usize, n_test: usize, seed: u64) -> Result<(D, D)> {
    if n_train + n_test != ds.len() {
        return invalid(format!("split {n_train}+{n_test} does not match {} points", ds.len()));
    }
    let idx = shuffled(ds.len(), seed);
    Ok((ds.subset(&idx[..n_train])?, ds.subset(&idx[n_train..])?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub shuffle_seed: u64,
    pub repetition: usize,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// `(train, test)` indices with fold `i` held out.
    pub fn fold(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        let train = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        (train, self.folds[i].clone())
    }
}

/// Shuffled partition of `0..n` into `k` folds whose sizes differ by at most 1.
pub fn kfold_plan(n: usize, k: usize, shuffle_seed: u64, repetition: usize) -> Result<FoldPlan> {
    if k < 2 {
        return invalid(format!("K-fold needs K >= 2, got {k}"));
    }
    if n < k {
        return invalid(format!("cannot split {n} points into {k} folds"));
    }
    let idx = shuffled(n, shuffle_seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(FoldPlan { folds, shuffle_seed, repetition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::lattice_coordinate;

    fn meta() -> DatasetMeta {
        DatasetMeta { kind: DatasetKind::Moons, noise: 0.0, seed: 0 }
    }

    #[test]
    fn standardize_endpoints() {
        let ds = LabeledDataset::new(vec![[0.0, 1.0], [1.0, 0.0], [0.5, 0.25]], vec![1, -1, 1], meta()).unwrap();
        let s = standardize(&ds).unwrap();
        assert_eq!(s.points()[0], [-FRAC_PI_2, FRAC_PI_2]);
        assert_eq!(s.points()[1], [FRAC_PI_2, -FRAC_PI_2]);
        assert_eq!(s.points()[2][0], 0.0);
    }

    #[test]
    fn standardize_idempotent_and_unchanged_when_spanning() {
        let ds = standardize(&gen_moons(300, 0.15, 2).unwrap()).unwrap();
        assert_eq!(standardize(&ds).unwrap(), ds);
        let mut max_diff = [0.0f64; 2];
        for a in ds.points() {
            for b in ds.points() {
                for k in 0..2 {
                    max_diff[k] = max_diff[k].max((a[k] - b[k]).abs());
                }
            }
        }
        assert_eq!(max_diff, [PI, PI]);
    }

    #[test]
    fn zero_spread_is_degenerate() {
        let ds = LabeledDataset::new(vec![[0.0, 1.0], [0.0, 2.0]], vec![1, -1], meta()).unwrap();
        assert!(matches!(standardize(&ds), Err(Error::Degenerate(_))));
    }

    #[test]
    fn lattice_rounding() {
        assert_eq!(lattice_index(-FRAC_PI_2), 0);
        assert_eq!(lattice_index(FRAC_PI_2), 25);
        assert_eq!(lattice_index(0.0), 13);
        for m in 0..LATTICE_POINTS {
            assert_eq!(lattice_index(lattice_coordinate(m)), m);
        }
    }

    #[test]
    fn quantization_error_bounded() {
        let ds = standardize(&gen_circles(300, 0.5, 0.08, 4).unwrap()).unwrap();
        let lat = discretize(&ds).unwrap();
        for (p, c) in ds.points().iter().zip(lat.coords()) {
            for k in 0..2 {
                let err = (p[k] - lattice_coordinate(c[k])).abs();
                // x = 0 rounds to 13, half a step away
                assert!(err <= PI / 50.0 + 1e-12);
            }
        }
        assert_eq!(lat.labels(), ds.labels());
    }

    #[test]
    fn discretize_rejects_raw_coordinates() {
        let ds = gen_moons(20, 0.0, 1).unwrap();
        assert!(discretize(&ds).is_err());
    }

    #[test]
    fn split_sizes() {
        let ds = discretize(&standardize(&gen_moons(300, 0.15, 1).unwrap()).unwrap()).unwrap();
        let (tr, te) = split_train_test(&ds, 225, 75, 11).unwrap();
        assert_eq!((tr.len(), te.len()), (225, 75));
        assert_eq!(split_train_test(&ds, 225, 75, 11).unwrap(), (tr, te));
        assert!(split_train_test(&ds, 200, 75, 11).is_err());
        let idx = shuffled(300, 11);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..300).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_partition() {
        let plan = kfold_plan(300, 4, 3, 0).unwrap();
        assert!(plan.folds.iter().all(|f| f.len() == 75));
        let mut all: Vec<usize> = plan.folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..300).collect::<Vec<_>>());
        let (train, test) = plan.fold(2);
        assert_eq!((train.len(), test.len()), (225, 75));
        assert!(train.iter().all(|i| !test.contains(i)));
        let uneven = kfold_plan(10, 4, 0, 0).unwrap();
        let sizes: Vec<usize> = uneven.folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2]);
        assert!(kfold_plan(300, 1, 0, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ds = standardize(&gen_blobs(8, [[0.0, 0.0], [1.0, 1.0]], 0.1, 3).unwrap()).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# cvq-kernel v"));
        assert!(text.contains("x1,x2,label"));
        assert_eq!(LabeledDataset::read_csv(&buf[..], ds.meta()).unwrap(), ds);

        let lat = discretize(&ds).unwrap();
        let mut buf = Vec::new();
        lat.write_csv(&mut buf).unwrap();
        assert_eq!(LatticeDataset::read_csv(&buf[..], lat.meta()).unwrap(), lat);
    }
}
