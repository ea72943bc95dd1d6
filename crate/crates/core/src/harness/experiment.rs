//! Single experiments: datasets, per-instance optimization, records and
//! exact re-runs.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Task, TestKind, TrainKind};
use super::data::{derive_seed, stream, write_text};
use crate::error::{Error, Result};
use crate::hyperopt::{optimize, OptimizationTrace, OptimizerSettings, Penalty};
use crate::pipelines::{
    run_inference, run_parity, InferencePipelineConfig, ParityPipelineConfig, ParityTest,
};
use crate::reservoir::HyperParams;
use crate::tasks::{
    coverage_check, make_inference_dataset, minimal_training_bits, random_bits, BitSeries,
    LorenzDataset,
};

/// Attempts at drawing a random series that covers every pattern.
const COVERAGE_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BitsSpec {
    Minimal,
    Random { length: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestSpec {
    Exhaustive,
    Random { length: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzSpec {
    pub duration: f64,
    pub sample_dt: f64,
    pub seed: u64,
}

/// Everything needed to regenerate the data of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSpec {
    Parity {
        n: usize,
        train: BitsSpec,
        test: TestSpec,
    },
    Inference {
        train: LorenzSpec,
        test: LorenzSpec,
        washout: f64,
        #[serde(default)]
        normalize_input: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Symmetry {
    pub eta_r: f64,
    pub eta_f: f64,
    pub bias: f64,
    pub square_input: bool,
    pub constant_feature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "message", rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    Failed(String),
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub task: Task,
    pub instance: usize,
    pub n: Option<usize>,
    pub train_duration: Option<f64>,
    pub n_nodes: usize,
    pub instance_seed: u64,
    pub optimizer_seed: u64,
    pub data: DataSpec,
    /// Hyperparameters of the reported run (optimizer best, or the fixed set).
    pub params: HyperParams,
    pub symmetry: Symmetry,
    pub metric: String,
    pub value: Option<f64>,
    pub status: RunStatus,
    pub wall_time_s: f64,
    pub budget: usize,
    pub evaluations: usize,
    pub version: String,
}

impl ExperimentRecord {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Raw per-word or per-sample outputs of the reported run.
#[derive(Debug, Clone, PartialEq)]
pub enum RawOutput {
    /// `(index, truth, predicted, margin)`.
    Words(Vec<(usize, i8, i8, f64)>),
    /// `(time, truth, inferred)`.
    Samples(Vec<(f64, f64, f64)>),
}

impl RawOutput {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        match self {
            RawOutput::Words(w) => {
                out.push_str("index\ttruth\tpredicted\tmargin\n");
                for (i, t, p, m) in w {
                    let _ = writeln!(out, "{i}\t{t}\t{p}\t{m}");
                }
            }
            RawOutput::Samples(s) => {
                out.push_str("time\ttruth\tinferred\n");
                for (t, z, zh) in s {
                    let _ = writeln!(out, "{t}\t{z}\t{zh}");
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct InstanceResult {
    pub record: ExperimentRecord,
    pub trace: Option<OptimizationTrace>,
    pub raw: Option<RawOutput>,
}

/// Trace line of `traces.jsonl`, keyed like its record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub experiment_id: String,
    pub n: Option<usize>,
    pub train_duration: Option<f64>,
    pub n_nodes: usize,
    pub eta_r: f64,
    pub instance: usize,
    pub param_names: Vec<String>,
    pub trace: OptimizationTrace,
}

enum Data {
    Parity {
        train: BitSeries,
        test: ParityTest,
    },
    Inference {
        train: LorenzDataset,
        test: LorenzDataset,
    },
}

/// Datasets generated once and shared by every instance of an experiment.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub task: Task,
    pub n_nodes: usize,
    pub spec: DataSpec,
    data: Data,
}

fn covered_bits(n: usize, length: usize, master: u64, label: u64, need: bool) -> Result<u64> {
    for attempt in 0..COVERAGE_ATTEMPTS {
        let seed = derive_seed(master, &[label, attempt]);
        if !need || coverage_check(&random_bits(length, seed), n)?.complete {
            return Ok(seed);
        }
    }
    Err(Error::Config(format!(
        "no {length}-bit random series covering all {n}-bit patterns after {COVERAGE_ATTEMPTS} draws"
    )))
}

fn build_data(spec: &DataSpec, square_input: bool) -> Result<Data> {
    Ok(match *spec {
        DataSpec::Parity { n, train, test } => Data::Parity {
            train: match train {
                BitsSpec::Minimal => minimal_training_bits(n),
                BitsSpec::Random { length, seed } => random_bits(length, seed),
            },
            test: match test {
                TestSpec::Exhaustive => ParityTest::Exhaustive,
                TestSpec::Random { length, seed } => ParityTest::Series(random_bits(length, seed)),
            },
        },
        DataSpec::Inference { train, test, .. } => Data::Inference {
            train: make_inference_dataset(train.duration, train.sample_dt, square_input, train.seed)?,
            test: make_inference_dataset(test.duration, test.sample_dt, square_input, test.seed)?,
        },
    })
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let task = config.task()?;
        let master = config.experiment.master_seed;
        let spec = if task.is_parity() {
            let n = config.order()?;
            let p = config.parity_section();
            let train = match p.train {
                TrainKind::Minimal => BitsSpec::Minimal,
                TrainKind::Random => BitsSpec::Random {
                    length: p.train_bits,
                    seed: covered_bits(
                        n,
                        p.train_bits,
                        master,
                        stream::TRAIN_DATA,
                        p.require_coverage,
                    )?,
                },
            };
            let test = match p.test {
                TestKind::Exhaustive => TestSpec::Exhaustive,
                TestKind::Random => TestSpec::Random {
                    length: p.test_bits,
                    seed: covered_bits(
                        n,
                        p.test_bits,
                        master,
                        stream::TEST_DATA,
                        p.require_coverage,
                    )?,
                },
            };
            DataSpec::Parity { n, train, test }
        } else {
            let i = config.inference_section();
            DataSpec::Inference {
                train: LorenzSpec {
                    duration: i.train_duration,
                    sample_dt: i.sample_dt,
                    seed: derive_seed(master, &[stream::TRAIN_DATA]),
                },
                test: LorenzSpec {
                    duration: i.test_duration,
                    sample_dt: i.sample_dt,
                    seed: derive_seed(master, &[stream::TEST_DATA]),
                },
                washout: i.washout,
                normalize_input: i.normalize_input,
            }
        };
        let data = build_data(&spec, config.symmetry.square_input)?;
        Ok(Self {
            config: config.clone(),
            task,
            n_nodes: config.n_nodes()?,
            spec,
            data,
        })
    }

    fn symmetry(&self) -> Symmetry {
        let s = &self.config.symmetry;
        Symmetry {
            eta_r: s.eta_r,
            eta_f: s.eta_f,
            bias: s.bias,
            square_input: s.square_input,
            constant_feature: s.constant_feature(),
        }
    }

    /// Reservoir and optimizer seeds of one instance.
    pub fn instance_seeds(&self, instance: usize) -> (u64, u64) {
        let master = self.config.experiment.master_seed;
        let path = |label| [label, self.n_nodes as u64, instance as u64];
        (
            derive_seed(master, &path(stream::RESERVOIR)),
            derive_seed(master, &path(stream::OPTIMIZER)),
        )
    }

    /// Metric and raw outputs for one hyperparameter set.
    pub fn evaluate(&self, params: &HyperParams, seed: u64) -> Result<(f64, RawOutput)> {
        evaluate(
            self.task,
            &self.data,
            &self.spec,
            self.n_nodes,
            params,
            seed,
            &self.symmetry(),
        )
    }

    /// Hyperparameters the pipeline actually runs with (`k` filled in).
    fn effective_params(&self, params: &HyperParams) -> HyperParams {
        let mut p = *params;
        p.k = match self.task {
            Task::ParitySerial => crate::pipelines::serial_k(self.n_nodes),
            Task::ParityParallel => crate::pipelines::parallel_k(self.n_nodes),
            Task::Inference => crate::pipelines::inference_k(self.n_nodes),
        };
        p
    }

    /// Optimizes (or runs the fixed parameters of) one instance.
    pub fn run_instance(&self, instance: usize) -> InstanceResult {
        let start = Instant::now();
        let (seed, opt_seed) = self.instance_seeds(instance);
        let base = self.config.base_params();
        let budget = self.config.experiment.budget;

        let mut trace = None;
        let mut evaluations = 1;
        let chosen: Result<HyperParams> = if budget == 0 {
            Ok(base)
        } else {
            let space = self.task.search_space();
            let settings = OptimizerSettings {
                budget,
                seed: opt_seed,
                stop_at: self.task.is_parity().then_some(0.0),
                penalty: if self.task.is_parity() {
                    Penalty::Fixed(1.0)
                } else {
                    Penalty::WorstTimes(10.0)
                },
                log_objective: !self.task.is_parity(),
                ..Default::default()
            };
            optimize(
                |p| {
                    self.evaluate(&space.apply(p, &base), seed)
                        .map(|r| r.0)
                        .unwrap_or(f64::NAN)
                },
                &space,
                &settings,
            )
            .map(|res| {
                evaluations = res.trace.budget_used + 1;
                trace = Some(res.trace);
                space.apply(&res.best_point, &base)
            })
        };

        let params = self.effective_params(&chosen.as_ref().copied().unwrap_or(base));
        let outcome = chosen.and_then(|p| self.evaluate(&p, seed));
        let (value, status, raw) = match outcome {
            Ok((v, raw)) => (Some(v), RunStatus::Ok, Some(raw)),
            Err(e) => (None, RunStatus::Failed(e.to_string()), None),
        };
        let (n, train_duration) = match self.spec {
            DataSpec::Parity { n, .. } => (Some(n), None),
            DataSpec::Inference { train, .. } => (None, Some(train.duration)),
        };
        InstanceResult {
            record: ExperimentRecord {
                experiment_id: self.config.experiment.id.clone(),
                task: self.task,
                instance,
                n,
                train_duration,
                n_nodes: self.n_nodes,
                instance_seed: seed,
                optimizer_seed: opt_seed,
                data: self.spec,
                params,
                symmetry: self.symmetry(),
                metric: self.task.metric().to_string(),
                value,
                status,
                wall_time_s: start.elapsed().as_secs_f64(),
                budget,
                evaluations,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            trace,
            raw,
        }
    }
}

fn evaluate(
    task: Task,
    data: &Data,
    spec: &DataSpec,
    n_nodes: usize,
    params: &HyperParams,
    seed: u64,
    sym: &Symmetry,
) -> Result<(f64, RawOutput)> {
    let mut params = *params;
    params.eta_r = sym.eta_r;
    params.eta_f = sym.eta_f;
    params.bias = sym.bias;
    match (data, spec) {
        (Data::Parity { train, test }, DataSpec::Parity { n, .. }) => {
            let mut cfg = match (task, test) {
                (Task::ParitySerial, ParityTest::Series(bits)) => ParityPipelineConfig::serial(
                    *n,
                    n_nodes,
                    params,
                    train.clone(),
                    bits.clone(),
                    seed,
                ),
                (Task::ParityParallel, t) => {
                    ParityPipelineConfig::parallel(*n, n_nodes, params, train.clone(), t.clone(), seed)
                }
                _ => return Err(Error::Config(format!("test set does not fit task {task}"))),
            };
            cfg.constant_feature = sym.constant_feature;
            let out = run_parity(&cfg)?;
            let words = out
                .words
                .iter()
                .map(|w| (w.index, w.truth, w.predicted, w.margin))
                .collect();
            Ok((out.ber, RawOutput::Words(words)))
        }
        (
            Data::Inference { train, test },
            DataSpec::Inference { washout, normalize_input, .. },
        ) => {
            let mut cfg =
                InferencePipelineConfig::new(n_nodes, params, train.clone(), test.clone(), seed);
            cfg.washout = *washout;
            cfg.normalize_input = *normalize_input;
            cfg.constant_feature = sym.constant_feature;
            let out = run_inference(&cfg)?;
            let skip = test.len() - out.truth.len();
            let samples = out
                .truth
                .iter()
                .zip(&out.inferred)
                .enumerate()
                .map(|(i, (z, zh))| (test.times[skip + i], *z, *zh))
                .collect();
            Ok((out.nrmse, RawOutput::Samples(samples)))
        }
        _ => Err(Error::Config("dataset does not match the task".into())),
    }
}

/// Re-executes a record from its own contents.
pub fn rerun(record: &ExperimentRecord) -> Result<f64> {
    let data = build_data(&record.data, record.symmetry.square_input)?;
    evaluate(
        record.task,
        &data,
        &record.data,
        record.n_nodes,
        &record.params,
        record.instance_seed,
        &record.symmetry,
    )
    .map(|r| r.0)
}

/// Worker pool with `workers` threads (all cores when `None`).
pub fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    b.build().map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Runs every instance of one prepared experiment on `pool`.
pub fn run_instances(prepared: &Prepared, pool: &rayon::ThreadPool) -> Vec<InstanceResult> {
    let count = prepared.config.experiment.instances;
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| prepared.run_instance(i))
            .collect()
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Write per-word / per-sample outputs under `raw/`.
    pub write_raw: bool,
}

/// Single collector for records and traces.
pub struct ResultWriter {
    records: std::io::BufWriter<std::fs::File>,
    traces: std::io::BufWriter<std::fs::File>,
    dir: PathBuf,
}

impl ResultWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<_> {
            Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
        };
        Ok(Self {
            records: open("records.jsonl")?,
            traces: open("traces.jsonl")?,
            dir: dir.to_path_buf(),
        })
    }

    pub fn write(&mut self, result: &InstanceResult, raw: bool) -> Result<()> {
        let r = &result.record;
        writeln!(self.records, "{}", r.to_json()?)?;
        if let Some(trace) = &result.trace {
            let line = TraceRecord {
                experiment_id: r.experiment_id.clone(),
                n: r.n,
                train_duration: r.train_duration,
                n_nodes: r.n_nodes,
                eta_r: r.symmetry.eta_r,
                instance: r.instance,
                param_names: r
                    .task
                    .search_space()
                    .bounds()
                    .iter()
                    .map(|b| b.param.name().to_string())
                    .collect(),
                trace: trace.clone(),
            };
            let json = serde_json::to_string(&line).map_err(|e| Error::Config(e.to_string()))?;
            writeln!(self.traces, "{json}")?;
        }
        if let (true, Some(out)) = (raw, &result.raw) {
            let mut name = format!("{}-N{}", r.task, r.n_nodes);
            if let Some(n) = r.n {
                let _ = write!(name, "-n{n}");
            }
            if let Some(d) = r.train_duration {
                let _ = write!(name, "-T{d}");
            }
            let _ = write!(name, "-eta{}-i{}.tsv", r.symmetry.eta_r, r.instance);
            write_text(&self.dir.join("raw").join(name), &out.to_tsv())?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.records.flush()?;
        self.traces.flush()?;
        Ok(())
    }
}

/// Validates, runs all instances in parallel and writes the results.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<InstanceResult>> {
    let prepared = Prepared::new(config)?;
    let pool = worker_pool(opts.workers.or(config.experiment.workers))?;
    let results = run_instances(&prepared, &pool);
    if let Some(dir) = &opts.out_dir {
        let mut w = ResultWriter::create(dir)?;
        for r in &results {
            w.write(r, opts.write_raw)?;
        }
        w.flush()?;
    }
    Ok(results)
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    std::fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(ExperimentRecord::from_json)
        .collect()
}
