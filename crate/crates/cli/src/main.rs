use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use divsbl_cli::config::{Algorithm, ExperimentConfig};
use divsbl_cli::emit::{emit, Format};
use divsbl_cli::error::{Error, Result};
use divsbl_cli::harness::{
    generate_instance, initial_beta, run_solver, run_sweep, DataSeeds, SweepResult,
};
use divsbl_cli::presets;
use divsbl_core::{io, MeasurementModel};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "divsbl", version, about = "Block-sparse recovery experiments")]
struct Cli {
    /// Worker threads for running trials (default: one per core).
    #[arg(long, global = true, env = "DIVSBL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one synthetic instance (phi.csv, y.csv, x_true.csv, meta.json) into a directory.
    Gen {
        /// Signal family: hetero, homo, theorem1 or dct.
        #[arg(default_value = "hetero")]
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Recover a signal from a design matrix and measurements stored as CSV.
    Solve(SolveArgs),
    /// Monte Carlo run of a named preset: hetero, homo, theorem1 or dct.
    Bench {
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Named parameter sweep: block-size, sample-rate, snr, init or phase.
    Sweep {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    /// Base seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Flat `key = value` file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(a) = self.algorithm {
            cfg.algorithm = a;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        for kv in &self.overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                divsbl_core::Error::Config(format!("--set expects key=value, got {kv:?}"))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(())
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value_t = 6)]
    block_size: usize,
    #[arg(long, value_enum, default_value_t = Algorithm::Divsbl)]
    algorithm: Algorithm,
    /// Solver keys (`max_iters`, `learn_beta`, ...) in `key = value` form.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Estimate as a CSV column, or the full result with `--format json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen { preset, common } => {
            let mut cfg = presets::bench(&preset)?;
            common.apply(&mut cfg)?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            write_instance(&cfg, &dir)
        }
        Command::Solve(args) => solve_files(&args),
        Command::Bench { preset, common } => {
            let mut cfg = presets::bench(&preset)?;
            cfg.sweep.clear();
            common.apply(&mut cfg)?;
            report(&run_sweep(&cfg)?, &common)
        }
        Command::Sweep { name, common } => {
            let mut cfg = presets::sweep(&name)?;
            common.apply(&mut cfg)?;
            report(&run_sweep(&cfg)?, &common)
        }
    }
}

fn report(result: &SweepResult, common: &Common) -> Result<()> {
    println!(
        "algorithm {}  trials/cell {}  base seed {}",
        result.config.algorithm, result.config.trials, result.config.base_seed
    );
    for cell in &result.cells {
        let label: Vec<String> = cell
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let s = &cell.summary;
        println!(
            "{:<28} nmse {:.4e} ± {:.2e}  corr {:.4} ± {:.4}  success {:.2}  converged {:.2}  iters {:.0}",
            if label.is_empty() { "-".to_owned() } else { label.join(" ") },
            s.nmse.mean,
            s.nmse.std,
            s.corr.mean,
            s.corr.std,
            s.success_rate,
            s.converged_rate,
            s.iterations.mean,
        );
    }
    if let Some(path) = &common.out {
        emit(result, common.format, path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct InstanceMeta<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    data_seeds: DataSeeds,
    /// `phi.csv` already includes the DCT basis when the domain is dct, so
    /// `x_true.csv` is always the block-sparse vector it multiplies.
    support_blocks: &'a [(usize, usize)],
    per_block_variance: &'a [f64],
    snr_db: Option<f64>,
    beta_true: Option<f64>,
}

fn write_instance(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let seeds = DataSeeds::derive(cfg.base_seed);
    let inst = generate_instance(cfg, &seeds)?;
    io::write_matrix(&dir.join("phi.csv"), &inst.dictionary())?;
    io::write_vector(&dir.join("y.csv"), &inst.y)?;
    io::write_vector(&dir.join("x_true.csv"), &inst.truth.x())?;
    let meta = InstanceMeta {
        config: cfg,
        seed: cfg.base_seed,
        data_seeds: seeds,
        support_blocks: &inst.truth.support_blocks,
        per_block_variance: &inst.truth.per_block_variance,
        snr_db: inst.snr_db,
        beta_true: inst.beta_true,
    };
    write_json_file(&dir.join("meta.json"), &meta)?;
    eprintln!("wrote instance to {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    algorithm: Algorithm,
    block_size: usize,
    x_hat: Vec<f64>,
    gammas: Vec<f64>,
    beta: f64,
    iterations: usize,
    converged: bool,
    support_size: usize,
    cost_trace: Vec<f64>,
}

fn solve_files(args: &SolveArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            divsbl_core::Error::Config(format!("--set expects key=value, got {kv:?}"))
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.solver.validate()?;
    let phi = io::read_matrix(&args.phi)?;
    let y = io::read_vector(&args.y)?;
    let beta0 = cfg
        .solver
        .beta_init
        .unwrap_or_else(|| initial_beta(&y, cfg.solver.beta_max));
    let model = MeasurementModel::new(phi, y, beta0)?;
    let result = run_solver(args.algorithm, &model, args.block_size, &cfg.solver)?;
    println!(
        "iterations {}  converged {}  support {}  beta {:.4e}",
        result.iterations,
        result.converged,
        result.support_size(),
        result.beta
    );
    match args.format {
        Format::Csv => io::write_vector(&args.out, &result.x_hat)?,
        Format::Json => write_json_file(
            &args.out,
            &SolveOutput {
                algorithm: args.algorithm,
                block_size: args.block_size,
                x_hat: result.x_hat.iter().copied().collect(),
                gammas: result.prior.gammas().iter().copied().collect(),
                beta: result.beta,
                iterations: result.iterations,
                converged: result.converged,
                support_size: result.support_size(),
                cost_trace: result.cost_trace.clone(),
            },
        )?,
    }
    Ok(())
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
