use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use symrc::harness::data::bits_from_tsv;
use symrc::harness::experiment::RunOptions;
use symrc::harness::stats::{fit_scaling, ScalingModel};
use symrc::harness::sweep::run_sweep;
use symrc::harness::{run_experiment, ExperimentConfig, SweepSpec, Task};
use symrc::tasks::{coupon_expectation, coverage_check, random_bits};

#[derive(Parser)]
#[command(name = "symrc", version, about = "Symmetry-aware reservoir computing benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for records, traces and tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "SYMRC_WORKERS")]
    workers: Option<usize>,
    /// Optimizer evaluations per instance (0 runs the fixed parameters).
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Linear,
    Exponential,
}

#[derive(Clone, Copy, ValueEnum)]
enum Threshold {
    /// Smallest N at which some instance reaches zero error.
    Any,
    /// Smallest N at which every instance reaches zero error.
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Parity with serial input.
    ParitySerial(RunArgs),
    /// Parity with tapped-delay parallel input.
    ParityParallel(RunArgs),
    /// Lorenz '63 z inference from x and y.
    Infer(RunArgs),
    /// Grid sweep with the zero-error stop rule.
    Sweep(RunArgs),
    /// Fit N against n from a two-column table or a sweep table.
    FitScaling {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "linear")]
        model: Model,
        /// Treat the input as a sweep table and extract per-n thresholds.
        #[arg(long, value_enum)]
        threshold: Option<Threshold>,
    },
    /// Check that a bit series contains every n-bit pattern.
    CheckCoverage {
        #[arg(long)]
        n: usize,
        /// Bit series file (index, bit columns).
        #[arg(long, conflicts_with_all = ["length", "seed"])]
        bits: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_experiment(args: &RunArgs, task: Task) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    match cfg.experiment.task {
        Some(t) if t != task => bail!("config task `{t}` does not match subcommand `{task}`"),
        _ => cfg.experiment.task = Some(task),
    }
    if let Some(s) = args.seed {
        cfg.experiment.master_seed = s;
    }
    if let Some(b) = args.budget {
        cfg.experiment.budget = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(args: &RunArgs, task: Task) -> anyhow::Result<()> {
    let cfg = load_experiment(args, task)?;
    let opts = RunOptions {
        out_dir: Some(args.out.clone()),
        workers: args.workers,
        write_raw: true,
    };
    let results = run_experiment(&cfg, &opts)?;
    for r in &results {
        let rec = &r.record;
        match rec.value {
            Some(v) => println!("instance {}: {} = {v}", rec.instance, rec.metric),
            None => println!("instance {}: failed ({:?})", rec.instance, rec.status),
        }
    }
    println!("records written to {}", args.out.join("records.jsonl").display());
    Ok(())
}

fn sweep(args: &RunArgs) -> anyhow::Result<()> {
    let mut spec = SweepSpec::from_file(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(s) = args.seed {
        spec.sweep.master_seed = s;
    }
    if let Some(b) = args.budget {
        spec.sweep.budget = b;
    }
    spec.validate()?;
    let report = run_sweep(&spec, Some(&args.out), args.workers)?;
    print!("{}", report.to_tsv(spec.task()?.name()));
    Ok(())
}

fn read_points(path: &Path, threshold: Option<Threshold>) -> anyhow::Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines.next().context("empty table")?.split('\t').collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    let num = |s: &str| -> anyhow::Result<f64> { s.parse().with_context(|| format!("bad number `{s}`")) };

    let Some(threshold) = threshold else {
        if header.len() != 2 {
            bail!("expected two columns (n, N) or --threshold with a sweep table");
        }
        return rows.iter().map(|r| Ok((num(r[0])?, num(r[1])?))).collect();
    };
    let (Some(cn), Some(cnodes), Some(cz)) = (col("n"), col("N"), col("zero_fraction")) else {
        bail!("sweep table needs n, N and zero_fraction columns");
    };
    let ci = col("incomplete");
    let mut points: Vec<(f64, f64)> = Vec::new();
    for r in &rows {
        let (n, nodes, z) = (num(r[cn])?, num(r[cnodes])?, num(r[cz])?);
        let complete = ci.is_none_or(|c| r[c] == "false");
        let hit = match threshold {
            Threshold::Any => z > 0.0,
            Threshold::All => z == 1.0 && complete,
        };
        if hit && !points.iter().any(|p| p.0 == n) {
            points.push((n, nodes));
        }
    }
    Ok(points)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::ParitySerial(a) => experiment(&a, Task::ParitySerial)?,
        Command::ParityParallel(a) => experiment(&a, Task::ParityParallel)?,
        Command::Infer(a) => experiment(&a, Task::Inference)?,
        Command::Sweep(a) => sweep(&a)?,
        Command::FitScaling { input, model, threshold } => {
            let points = read_points(&input, threshold)?;
            let model = match model {
                Model::Linear => ScalingModel::Linear,
                Model::Exponential => ScalingModel::Exponential,
            };
            let fit = fit_scaling(&points, model)?;
            println!("points\t{}", points.len());
            println!("slope\t{}", fit.slope);
            println!("intercept\t{}", fit.intercept);
            println!("r_squared\t{}", fit.r_squared);
        }
        Command::CheckCoverage { n, bits, length, seed } => {
            let series = match bits {
                Some(p) => bits_from_tsv(&std::fs::read_to_string(&p)?)?,
                None => random_bits(length, seed),
            };
            let cov = coverage_check(&series, n)?;
            let missing = cov.counts.iter().filter(|c| **c == 0).count();
            println!("patterns\t{}", cov.counts.len());
            println!("missing\t{missing}");
            println!("expected_draws\t{}", coupon_expectation(n as u32));
            println!("complete\t{}", cov.complete);
            return Ok(cov.complete);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
