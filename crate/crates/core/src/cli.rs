//! The `cvq` command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::csvio;
use crate::data::{
    dataset_seed, discretize, split_train_test, standardize, write_report_csv, DatasetKind, GeneratorRegistry, Subset,
};
use crate::error::{invalid, Error, Result};
use crate::kernel::{GateLevel, LatticeKernel, RbfKernel, TableKernel, LATTICE_POINTS};
use crate::processor::{sweep_fig2, write_sweep_csv, NoiseModel};
use crate::seeding::derive_seed;
use crate::sources::{MeasuredImport, SourceRegistry};
use crate::svm::{self, SvmModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cvq", version, about = "Squeezing-phase kernel experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the 26-entry kernel table for one gate level
    KernelTable(KernelTableArgs),
    /// Output squeezing and kernel values of the simulated gate, analytic and sampled
    GateSweep(SweepArgs),
    /// Train on one dataset and write the model, test predictions and decision grid
    Classify(ClassifyArgs),
    /// K-fold accuracy report over datasets, gates and kernel sources
    Kfold(KfoldArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML experiment config; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed
    #[arg(long, env = "CVQ_SEED")]
    pub seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct KernelTableArgs {
    #[arg(long)]
    pub gate_db: f64,
    /// closed-form, noisy-analytic, simulated, simulated-ideal or measured-import
    #[arg(long, default_value = "closed-form")]
    pub source: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Samples per homodyne angle for simulated sources
    #[arg(long)]
    pub n_per_angle: Option<usize>,
    /// Table to read for the measured-import source
    #[arg(long)]
    pub import: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_per_angle: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, default_value = "moons")]
    pub dataset_kind: String,
    #[arg(long, default_value_t = 8.0)]
    pub gate_db: f64,
    /// A kernel source name, or rbf for the classical baseline
    #[arg(long, default_value = "closed-form")]
    pub source: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct KfoldArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Number of dataset seeds per kind
    #[arg(long)]
    pub datasets: Option<usize>,
    /// Number of shuffles per dataset
    #[arg(long)]
    pub shuffles: Option<usize>,
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

/// Files written by one command; removed again if the command fails.
#[derive(Default)]
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn write<F>(&mut self, path: PathBuf, render: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        csvio::write_file(&path, render)?;
        self.written.push(path);
        Ok(())
    }

    fn discard(self) {
        for p in self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}

fn guarded<F>(f: F) -> Result<Vec<PathBuf>>
where
    F: FnOnce(&mut Outputs) -> Result<()>,
{
    let mut out = Outputs::default();
    match f(&mut out) {
        Ok(()) => Ok(out.written),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

/// Runs a parsed command and returns the files it wrote.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::KernelTable(a) => kernel_table(a),
        Command::GateSweep(a) => gate_sweep(a),
        Command::Classify(a) => classify(a),
        Command::Kfold(a) => kfold(a),
    }
}

fn kernel_table(a: KernelTableArgs) -> Result<Vec<PathBuf>> {
    let cfg = a.common.load()?;
    let gate = GateLevel::from_db(a.gate_db)?;
    let n = a.n_per_angle.unwrap_or(cfg.sampling.n_per_angle);
    let mut reg = SourceRegistry::with_defaults(cfg.noise, n, cfg.master_seed);
    match (a.source.as_str(), a.import) {
        ("measured-import", Some(path)) => reg.register(Box::new(MeasuredImport { path })),
        ("measured-import", None) => return invalid("measured-import needs --import <csv>"),
        ("rbf", _) => return invalid("rbf has no kernel table; use classify or kfold"),
        _ => {}
    }
    let table = reg.get(&a.source)?.table(gate)?;
    guarded(|out| out.write(a.out, |buf| table.write_csv(buf)))
}

fn gate_sweep(a: SweepArgs) -> Result<Vec<PathBuf>> {
    let mut cfg = a.common.load()?;
    if let Some(n) = a.n_per_angle {
        cfg.sampling.n_per_angle = n;
    }
    let dir = a.out_dir.unwrap_or_else(|| cfg.output_dir.clone());
    let noisy = sweep_fig2(&cfg.sweep(cfg.noise)?)?;
    let ideal = sweep_fig2(&cfg.sweep(NoiseModel::ideal())?)?;
    guarded(|out| {
        out.write(dir.join("gate_sweep_noisy.csv"), |buf| write_sweep_csv(buf, &noisy, &cfg.noise))?;
        out.write(dir.join("gate_sweep_ideal.csv"), |buf| write_sweep_csv(buf, &ideal, &NoiseModel::ideal()))
    })
}

#[derive(Serialize)]
struct ConvergenceReport<'a> {
    command: &'a str,
    dataset_kind: &'a str,
    gate_db: f64,
    source: &'a str,
    seed: u64,
    iterations: usize,
    gap: f64,
    best_alpha: &'a [f64],
}

fn classify(a: ClassifyArgs) -> Result<Vec<PathBuf>> {
    let cfg = a.common.load()?;
    let kind: DatasetKind = a.dataset_kind.parse()?;
    let gate = GateLevel::from_db(a.gate_db)?;
    let seed = cfg.master_seed;
    let kernel: Box<dyn LatticeKernel> = if a.source == "rbf" {
        Box::new(RbfKernel::new(cfg.protocol.rbf_gamma)?)
    } else {
        let reg = SourceRegistry::with_defaults(cfg.noise, cfg.sampling.n_per_angle, cfg.simulation_seed());
        Box::new(TableKernel::new(reg.get(&a.source)?.table(gate)?))
    };

    let n = cfg.protocol.n_points;
    let raw = GeneratorRegistry::with_params(&cfg.generators)?.get(kind)?.generate(n, dataset_seed(seed, kind, 0))?;
    let data = discretize(&standardize(&raw)?)?;
    let n_train = n * 3 / 4;
    let (train, test) = split_train_test(&data, n_train, n - n_train, derive_seed(seed, 0x7E57))?;

    let model = match svm::train(kernel.as_ref(), train.coords(), train.labels(), cfg.protocol.c, &cfg.solver()) {
        Ok(m) => m,
        Err(Error::NotConverged { iterations, gap, best_alpha }) => {
            let report = ConvergenceReport {
                command: "classify",
                dataset_kind: kind.as_str(),
                gate_db: gate.db(),
                source: &a.source,
                seed,
                iterations,
                gap,
                best_alpha: &best_alpha,
            };
            let path = a.out.join("convergence_report.json");
            csvio::write_file(&path, |buf| {
                serde_json::to_writer_pretty(&mut *buf, &report)?;
                buf.push(b'\n');
                Ok(())
            })?;
            eprintln!("report written to {}", path.display());
            return Err(Error::NotConverged { iterations, gap, best_alpha });
        }
        Err(e) => return Err(e),
    };

    let test_rows = predictions(&model, kernel.as_ref(), test.coords(), test.labels())?;
    let grid = decision_grid(&model, kernel.as_ref())?;
    let acc = test_rows.iter().filter(|r| r.2 == r.3).count() as f64 / test.len() as f64;
    let written = guarded(|out| {
        out.write(a.out.join("model.json"), |buf| {
            buf.extend_from_slice(model.to_json()?.as_bytes());
            buf.push(b'\n');
            Ok(())
        })?;
        out.write(a.out.join("predictions.csv"), |buf| {
            csvio::write_schema_line(buf, "predictions")?;
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["m1", "m2", "label", "predicted", "decision_value"])?;
            for (c, d, l, p) in &test_rows {
                w.write_record([c[0].to_string(), c[1].to_string(), l.to_string(), p.to_string(), d.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
        out.write(a.out.join("decision_grid.csv"), |buf| {
            csvio::write_schema_line(buf, "decision_grid")?;
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["m1", "m2", "decision_value"])?;
            for (c, d) in &grid {
                w.write_record([c[0].to_string(), c[1].to_string(), d.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })
    })?;
    println!("{kind} gate {} dB source {}: test accuracy {acc}", gate.db(), a.source);
    Ok(written)
}

type PredictionRow = ([usize; 2], f64, i8, i8);

fn predictions(
    model: &SvmModel,
    kernel: &dyn LatticeKernel,
    coords: &[[usize; 2]],
    labels: &[i8],
) -> Result<Vec<PredictionRow>> {
    coords
        .iter()
        .zip(labels)
        .map(|(&c, &l)| {
            let d = svm::decision_value(model, &kernel.column(&model.coords, c)?)?;
            Ok((c, d, l, svm::sign(d)))
        })
        .collect()
}

/// Decision values at all 26×26 lattice points, `m1` major.
pub fn decision_grid(model: &SvmModel, kernel: &dyn LatticeKernel) -> Result<Vec<([usize; 2], f64)>> {
    let mut out = Vec::with_capacity(LATTICE_POINTS * LATTICE_POINTS);
    for m1 in 0..LATTICE_POINTS {
        for m2 in 0..LATTICE_POINTS {
            let d = svm::decision_value(model, &kernel.column(&model.coords, [m1, m2])?)?;
            out.push(([m1, m2], d));
        }
    }
    Ok(out)
}

fn kfold(a: KfoldArgs) -> Result<Vec<PathBuf>> {
    let mut cfg = a.common.load()?;
    if let Some(d) = a.datasets {
        cfg.protocol.n_datasets = d;
    }
    if let Some(s) = a.shuffles {
        cfg.protocol.n_shuffles = s;
    }
    cfg.validate()?;
    let dir = a.out_dir.unwrap_or_else(|| cfg.output_dir.clone());
    let rows = crate::data::run_protocol(&cfg.protocol()?, &cfg.sources())?;
    for r in &rows {
        let gate = r.gate_db.map_or_else(|| "NA".to_string(), |g| g.to_string());
        println!("{:<8} {:>4} {:<15} {:.4} ± {:.4}", r.dataset_kind, gate, r.kernel_source, r.mean_acc, r.sd_acc);
    }
    guarded(|out| out.write(dir.join("accuracy_report.csv"), |buf| write_report_csv(buf, &rows)))
}
