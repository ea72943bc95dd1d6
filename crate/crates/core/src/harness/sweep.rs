//! Grid sweeps over (n or training duration, eta_r, N) with the stop rule.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SweepSpec;
use super::data::write_text;
use super::experiment::{
    run_instances, worker_pool, ExperimentRecord, InstanceResult, Prepared, ResultWriter,
};
use super::stats::Summary;
use crate::error::Result;

/// Aggregate of one (n or duration, eta_r, N) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: Option<usize>,
    pub train_duration: Option<f64>,
    pub eta_r: f64,
    pub n_nodes: usize,
    pub instances: usize,
    pub summary: Summary,
    /// Some instances failed and carry no metric.
    pub incomplete: bool,
}

impl SweepRow {
    pub fn from_records(records: &[&ExperimentRecord]) -> Option<Self> {
        let first = records.first()?;
        let values: Vec<f64> = records.iter().filter_map(|r| r.value).collect();
        Some(Self {
            n: first.n,
            train_duration: first.train_duration,
            eta_r: first.symmetry.eta_r,
            n_nodes: first.n_nodes,
            instances: records.len(),
            incomplete: values.len() < records.len(),
            summary: Summary::of(&values),
        })
    }

    /// Every instance reached exactly zero error.
    pub fn all_zero(&self) -> bool {
        !self.incomplete && self.summary.zero_fraction == 1.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub records: Vec<ExperimentRecord>,
}

pub const TABLE_HEADER: &str = "task\tn\ttrain_duration\teta_r\tN\tinstances\tcompleted\tmean\tmin\tq1\tmedian\tq3\tmax\tzero_fraction\tincomplete";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl SweepReport {
    /// Plot-ready tab-separated table, one line per cell.
    pub fn to_tsv(&self, task: &str) -> String {
        let mut out = format!("{TABLE_HEADER}\n");
        for r in &self.rows {
            let s = &r.summary;
            let _ = writeln!(
                out,
                "{task}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                opt(r.n),
                opt(r.train_duration),
                r.eta_r,
                r.n_nodes,
                r.instances,
                s.count,
                s.mean,
                s.min,
                s.q1,
                s.median,
                s.q3,
                s.max,
                s.zero_fraction,
                r.incomplete
            );
        }
        out
    }

    /// Per order `n`: smallest N where any instance reached zero error.
    pub fn first_any_zero(&self) -> Vec<(usize, usize)> {
        self.threshold(|r| r.summary.zero_fraction > 0.0)
    }

    /// Per order `n`: smallest N where every instance reached zero error.
    pub fn first_all_zero(&self) -> Vec<(usize, usize)> {
        self.threshold(SweepRow::all_zero)
    }

    fn threshold(&self, hit: impl Fn(&SweepRow) -> bool) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for r in &self.rows {
            if let (Some(n), true) = (r.n, hit(r)) {
                if !out.iter().any(|(m, _)| *m == n) {
                    out.push((n, r.n_nodes));
                }
            }
        }
        out
    }
}

/// Runs the grid. Cells run one after another (the stop rule needs the
/// previous N); the instances of each cell run in parallel.
pub fn run_sweep(
    spec: &SweepSpec,
    out_dir: Option<&Path>,
    workers: Option<usize>,
) -> Result<SweepReport> {
    spec.validate()?;
    let task = spec.task()?;
    let pool = worker_pool(workers.or(spec.sweep.workers))?;
    let mut writer = out_dir.map(ResultWriter::create).transpose()?;
    let mut report = SweepReport::default();

    for n in spec.orders() {
        for duration in spec.durations() {
            for eta in spec.etas(n) {
                for &nodes in &spec.sweep.node_counts {
                    let prepared = Prepared::new(&spec.cell(n, duration, eta, nodes))?;
                    let results: Vec<InstanceResult> = run_instances(&prepared, &pool);
                    if let Some(w) = writer.as_mut() {
                        for r in &results {
                            w.write(r, false)?;
                        }
                        w.flush()?;
                    }
                    let records: Vec<&ExperimentRecord> = results.iter().map(|r| &r.record).collect();
                    let row = SweepRow::from_records(&records).expect("instances >= 1");
                    report.rows.push(row);
                    report.records.extend(results.into_iter().map(|r| r.record));
                    if spec.sweep.stop_rule && row.all_zero() {
                        break;
                    }
                }
            }
        }
    }
    if let Some(dir) = out_dir {
        write_text(&dir.join("sweep.tsv"), &report.to_tsv(task.name()))?;
    }
    Ok(report)
}
