use std::io::Write;

use rayon::prelude::*;

use super::{discretize, kfold_plan, standardize, DatasetKind, GeneratorParams, GeneratorRegistry, LatticeDataset};
use crate::csvio;
use crate::error::{invalid, Result};
use crate::kernel::{GateLevel, KernelMatrix, LatticeKernel, RbfKernel, TableKernel};
use crate::seeding::derive_seed;
use crate::sources::SourceRegistry;
use crate::svm::{compute_bias, sign, solve_dual, DualProblem, SolverOptions};

pub const DEFAULT_RBF_GAMMA: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub kinds: Vec<DatasetKind>,
    pub gates: Vec<GateLevel>,
    pub sources: Vec<String>,
    /// RBF baseline width; `None` skips the baseline.
    pub rbf_gamma: Option<f64>,
    pub c: f64,
    pub n_points: usize,
    pub n_datasets: usize,
    pub n_shuffles: usize,
    pub k: usize,
    pub master_seed: u64,
    pub generators: GeneratorParams,
    pub solver: SolverOptions,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            kinds: DatasetKind::ALL.to_vec(),
            gates: [2.0, 4.0, 6.0, 8.0].iter().map(|&db| GateLevel::from_db(db).expect("valid gate")).collect(),
            sources: vec!["closed-form".into(), "noisy-analytic".into(), "simulated".into()],
            rbf_gamma: Some(DEFAULT_RBF_GAMMA),
            c: 1.0,
            n_points: 300,
            n_datasets: 10,
            n_shuffles: 10,
            k: 4,
            master_seed: 0,
            generators: GeneratorParams::default(),
            solver: SolverOptions::default(),
        }
    }
}

/// One kernel evaluated across the protocol.
pub struct KernelCell {
    pub gate: Option<GateLevel>,
    pub source: String,
    pub kernel: Box<dyn LatticeKernel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub dataset_kind: DatasetKind,
    pub gate_db: Option<f64>,
    pub kernel_source: String,
    pub mean_acc: f64,
    pub sd_acc: f64,
    pub n_evals: usize,
    /// Each dataset's accuracy averaged over its shuffles and folds.
    pub per_dataset: Vec<f64>,
}

pub fn dataset_seed(master: u64, kind: DatasetKind, index: usize) -> u64 {
    derive_seed(derive_seed(master, 0x5EED_0000 + kind.code()), index as u64)
}

fn shuffle_seed(dataset_seed: u64, shuffle: usize) -> u64 {
    derive_seed(dataset_seed, 0x5_0000 + shuffle as u64)
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[i8], truth: &[i8]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

fn build_cells(cfg: &ProtocolConfig, sources: &SourceRegistry) -> Result<Vec<KernelCell>> {
    let pairs: Vec<(GateLevel, &str)> =
        cfg.gates.iter().flat_map(|&g| cfg.sources.iter().map(move |s| (g, s.as_str()))).collect();
    let tables = pairs
        .par_iter()
        .map(|&(g, s)| sources.get(s)?.table(g))
        .collect::<Result<Vec<_>>>()?;
    let mut cells: Vec<KernelCell> = pairs
        .iter()
        .zip(tables)
        .map(|(&(g, s), t)| KernelCell { gate: Some(g), source: s.to_string(), kernel: Box::new(TableKernel::new(t)) })
        .collect();
    if let Some(gamma) = cfg.rbf_gamma {
        cells.push(KernelCell { gate: None, source: "rbf".into(), kernel: Box::new(RbfKernel::new(gamma)?) });
    }
    Ok(cells)
}

fn fold_accuracies(cfg: &ProtocolConfig, data: &LatticeDataset, seed: u64, gram: &KernelMatrix) -> Result<Vec<f64>> {
    let y = data.labels();
    let mut out = Vec::with_capacity(cfg.n_shuffles * cfg.k);
    for s in 0..cfg.n_shuffles {
        let plan = kfold_plan(data.coords().len(), cfg.k, shuffle_seed(seed, s), s)?;
        for f in 0..plan.k() {
            let (train, test) = plan.fold(f);
            let y_train: Vec<i8> = train.iter().map(|&i| y[i]).collect();
            let p = DualProblem::new(gram.submatrix(&train), y_train, cfg.c)?;
            let alpha = solve_dual(&p, &cfg.solver)?.alpha;
            let b = compute_bias(&alpha, &p)?;
            let predicted: Vec<i8> = test
                .iter()
                .map(|&t| {
                    let d: f64 = train
                        .iter()
                        .zip(&alpha)
                        .filter(|(_, a)| **a > 0.0)
                        .map(|(&j, a)| f64::from(y[j]) * a * gram.get(j, t))
                        .sum();
                    sign(d + b)
                })
                .collect();
            let truth: Vec<i8> = test.iter().map(|&t| y[t]).collect();
            out.push(accuracy(&predicted, &truth));
        }
    }
    Ok(out)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// K-fold accuracy for every dataset kind and kernel cell. Each dataset's
/// fold accuracies are averaged first; the row reports the mean and sample
/// standard deviation of those per-dataset values.
pub fn run_protocol(cfg: &ProtocolConfig, sources: &SourceRegistry) -> Result<Vec<AccuracyRow>> {
    if cfg.n_datasets == 0 || cfg.n_shuffles == 0 {
        return invalid("protocol needs at least one dataset and one shuffle");
    }
    let generators = GeneratorRegistry::with_params(&cfg.generators)?;
    let cells = build_cells(cfg, sources)?;

    let datasets: Vec<(usize, usize, u64, LatticeDataset)> = cfg
        .kinds
        .iter()
        .enumerate()
        .flat_map(|(ki, &kind)| (0..cfg.n_datasets).map(move |d| (ki, kind, d)))
        .map(|(ki, kind, d)| {
            let seed = dataset_seed(cfg.master_seed, kind, d);
            let raw = generators.get(kind)?.generate(cfg.n_points, seed)?;
            Ok((ki, d, seed, discretize(&standardize(&raw)?)?))
        })
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> =
        (0..datasets.len()).flat_map(|di| (0..cells.len()).map(move |ci| (di, ci))).collect();
    let results: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(di, ci)| {
            let (_, _, seed, data) = &datasets[di];
            let gram = cells[ci].kernel.gram(data.coords())?;
            fold_accuracies(cfg, data, *seed, &gram)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cfg.kinds.len() * cells.len());
    for (ki, &kind) in cfg.kinds.iter().enumerate() {
        for (ci, cell) in cells.iter().enumerate() {
            let mut per_dataset = Vec::with_capacity(cfg.n_datasets);
            let mut n_evals = 0;
            for (ti, &(di, c)) in tasks.iter().enumerate() {
                if c == ci && datasets[di].0 == ki {
                    let accs = &results[ti];
                    n_evals += accs.len();
                    per_dataset.push(accs.iter().sum::<f64>() / accs.len() as f64);
                }
            }
            let (mean_acc, sd_acc) = mean_sd(&per_dataset);
            rows.push(AccuracyRow {
                dataset_kind: kind,
                gate_db: cell.gate.map(|g| g.db()),
                kernel_source: cell.source.clone(),
                mean_acc,
                sd_acc,
                n_evals,
                per_dataset,
            });
        }
    }
    Ok(rows)
}

pub const REPORT_HEADER: [&str; 6] = ["dataset_kind", "gate_db", "kernel_source", "mean_acc", "sd_acc", "n_evals"];

pub fn write_report_csv<W: Write>(mut out: W, rows: &[AccuracyRow]) -> Result<()> {
    csvio::write_schema_line(&mut out, "accuracy_report")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.dataset_kind.to_string(),
            r.gate_db.map_or_else(|| "NA".to_string(), |g| g.to_string()),
            r.kernel_source.clone(),
            r.mean_acc.to_string(),
            r.sd_acc.to_string(),
            r.n_evals.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
