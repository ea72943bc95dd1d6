//! TOML experiment and sweep configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperopt::{Param, SearchSpace};
use crate::pipelines::{default_constant_feature, InferencePipelineConfig};
use crate::reservoir::HyperParams;
use crate::tasks::SAMPLE_DT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    ParitySerial,
    ParityParallel,
    Inference,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::ParitySerial => "parity-serial",
            Task::ParityParallel => "parity-parallel",
            Task::Inference => "inference",
        }
    }

    pub fn metric(self) -> &'static str {
        match self {
            Task::Inference => "nrmse",
            _ => "ber",
        }
    }

    pub fn is_parity(self) -> bool {
        self != Task::Inference
    }

    /// Search-space preset for the task.
    pub fn search_space(self) -> SearchSpace {
        match self {
            Task::ParitySerial => SearchSpace::serial_parity(),
            Task::ParityParallel => SearchSpace::parallel_parity(),
            Task::Inference => SearchSpace::inference(),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_instances() -> usize {
    1
}
fn default_budget() -> usize {
    60
}
fn default_bits() -> usize {
    1000
}
fn default_true() -> bool {
    true
}
fn default_duration() -> f64 {
    100.0
}
fn default_sample_dt() -> f64 {
    SAMPLE_DT
}
fn default_washout() -> f64 {
    InferencePipelineConfig::DEFAULT_WASHOUT
}
fn default_alpha() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub id: String,
    pub task: Option<Task>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// Optimizer evaluations per instance; 0 runs `[params]` as given.
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub n_nodes: Option<usize>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainKind {
    #[default]
    Random,
    /// `n` copies of -1 then `s_max` copies of +1.
    Minimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    #[default]
    Random,
    /// All `2^n` words (parallel scheme).
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParitySection {
    pub n: Option<usize>,
    #[serde(default)]
    pub train: TrainKind,
    #[serde(default = "default_bits")]
    pub train_bits: usize,
    #[serde(default)]
    pub test: TestKind,
    #[serde(default = "default_bits")]
    pub test_bits: usize,
    /// Redraw random series until every `n`-bit pattern occurs.
    #[serde(default = "default_true")]
    pub require_coverage: bool,
}

impl Default for ParitySection {
    fn default() -> Self {
        Self {
            n: None,
            train: TrainKind::Random,
            train_bits: default_bits(),
            test: TestKind::Random,
            test_bits: default_bits(),
            require_coverage: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSection {
    #[serde(default = "default_duration")]
    pub train_duration: f64,
    #[serde(default = "default_duration")]
    pub test_duration: f64,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    #[serde(default = "default_washout")]
    pub washout: f64,
    #[serde(default = "default_normalize_input")]
    pub normalize_input: bool,
}

fn default_normalize_input() -> bool {
    true
}

impl Default for InferenceSection {
    fn default() -> Self {
        Self {
            train_duration: default_duration(),
            test_duration: default_duration(),
            sample_dt: default_sample_dt(),
            washout: default_washout(),
            normalize_input: default_normalize_input(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySection {
    #[serde(default)]
    pub eta_r: f64,
    #[serde(default)]
    pub eta_f: f64,
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub square_input: bool,
    /// Append a constant readout feature; unset picks the library default.
    pub constant_feature: Option<bool>,
}

impl SymmetrySection {
    pub fn constant_feature(&self) -> bool {
        self.constant_feature
            .unwrap_or_else(|| default_constant_feature(self.eta_r, self.square_input))
    }
}

/// Fixed hyperparameters. With a nonzero budget the searched ones are
/// overwritten by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub gamma: Option<f64>,
    pub rho_r: Option<f64>,
    pub rho_in: Option<f64>,
    pub sigma: Option<f64>,
    pub t0: Option<f64>,
    pub delta_t: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            gamma: None,
            rho_r: None,
            rho_in: None,
            sigma: None,
            t0: None,
            delta_t: None,
            alpha: default_alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub parity: Option<ParitySection>,
    pub inference: Option<InferenceSection>,
    #[serde(default)]
    pub symmetry: SymmetrySection,
    #[serde(default)]
    pub params: ParamsSection,
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing required key `{key}`"))
}

fn check_unit(key: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("`{key}` = {v} must lie in [0, 1]")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn task(&self) -> Result<Task> {
        self.experiment.task.ok_or_else(|| missing("experiment.task"))
    }

    pub fn n_nodes(&self) -> Result<usize> {
        self.experiment.n_nodes.ok_or_else(|| missing("experiment.n_nodes"))
    }

    /// Parity order; errors name the missing `n`.
    pub fn order(&self) -> Result<usize> {
        self.parity
            .as_ref()
            .and_then(|p| p.n)
            .ok_or_else(|| missing("parity.n"))
    }

    pub fn parity_section(&self) -> ParitySection {
        self.parity.clone().unwrap_or_default()
    }

    pub fn inference_section(&self) -> InferenceSection {
        self.inference.clone().unwrap_or_default()
    }

    /// Base hyperparameters before the optimizer fills in searched values.
    pub fn base_params(&self) -> HyperParams {
        let d = HyperParams::default();
        let p = &self.params;
        HyperParams {
            gamma: p.gamma.unwrap_or(d.gamma),
            rho_r: p.rho_r.unwrap_or(d.rho_r),
            rho_in: p.rho_in.unwrap_or(d.rho_in),
            sigma: p.sigma.unwrap_or(d.sigma),
            t0: p.t0.unwrap_or(d.t0),
            delta_t: p.delta_t.unwrap_or(d.delta_t),
            alpha: p.alpha,
            eta_r: self.symmetry.eta_r,
            eta_f: self.symmetry.eta_f,
            bias: self.symmetry.bias,
            ..d
        }
    }

    /// Checks everything that can be checked before running a pipeline.
    pub fn validate(&self) -> Result<()> {
        let task = self.task()?;
        let e = &self.experiment;
        if self.n_nodes()? == 0 {
            return Err(Error::Config("`experiment.n_nodes` must be at least 1".into()));
        }
        if e.instances == 0 {
            return Err(Error::Config("`experiment.instances` must be at least 1".into()));
        }
        if e.budget != 0 && e.budget < 10 {
            return Err(Error::Config(format!(
                "`experiment.budget` = {} must be 0 or at least 10",
                e.budget
            )));
        }
        if e.workers == Some(0) {
            return Err(Error::Config("`experiment.workers` must be at least 1".into()));
        }
        let s = &self.symmetry;
        check_unit("symmetry.eta_r", s.eta_r)?;
        check_unit("symmetry.eta_f", s.eta_f)?;
        if !s.bias.is_finite() {
            return Err(Error::Config("`symmetry.bias` must be finite".into()));
        }
        if !(self.params.alpha >= 0.0 && self.params.alpha.is_finite()) {
            return Err(Error::Config("`params.alpha` must be nonnegative".into()));
        }
        if e.budget == 0 {
            for b in task.search_space().bounds() {
                let given = match b.param {
                    Param::Gamma => self.params.gamma,
                    Param::RhoR => self.params.rho_r,
                    Param::RhoIn => self.params.rho_in,
                    Param::Sigma => self.params.sigma,
                    Param::T0 => self.params.t0,
                    Param::DeltaT => self.params.delta_t,
                };
                if given.is_none() {
                    return Err(missing(&format!("params.{}", b.param.name())));
                }
            }
        }
        if task.is_parity() {
            let n = self.order()?;
            let p = self.parity_section();
            if n == 0 {
                return Err(Error::Config("`parity.n` must be at least 1".into()));
            }
            if task == Task::ParitySerial && p.test == TestKind::Exhaustive {
                return Err(Error::Config(
                    "`parity.test` = \"exhaustive\" needs the parallel scheme".into(),
                ));
            }
            if (p.test == TestKind::Exhaustive || p.require_coverage) && n > 24 {
                return Err(Error::Config(format!(
                    "`parity.n` = {n} too large to enumerate all words"
                )));
            }
            if p.train == TrainKind::Random && p.train_bits < n {
                return Err(Error::Config("`parity.train_bits` is shorter than n".into()));
            }
            if p.test == TestKind::Random && p.test_bits < n {
                return Err(Error::Config("`parity.test_bits` is shorter than n".into()));
            }
            if s.square_input {
                return Err(Error::Config(
                    "`symmetry.square_input` only applies to inference".into(),
                ));
            }
        } else {
            if self.parity.is_some() {
                return Err(Error::Config("`[parity]` section given for inference".into()));
            }
            let i = self.inference_section();
            if !(i.sample_dt > 0.0) {
                return Err(Error::Config("`inference.sample_dt` must be positive".into()));
            }
            for (key, d) in [
                ("inference.train_duration", i.train_duration),
                ("inference.test_duration", i.test_duration),
            ] {
                if !(d > i.washout + i.sample_dt) || !d.is_finite() {
                    return Err(Error::Config(format!(
                        "`{key}` = {d} must exceed the washout {}",
                        i.washout
                    )));
                }
            }
            if i.washout < 0.0 {
                return Err(Error::Config("`inference.washout` must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// `eta_r` values for a sweep column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaGrid {
    Values(Vec<f64>),
    Rule(EtaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaRule {
    /// 1 for even `n`, 0 for odd `n`.
    Parity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub id: String,
    pub task: Option<Task>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub node_counts: Vec<usize>,
    /// Parity orders (parity tasks only).
    #[serde(default)]
    pub orders: Vec<usize>,
    /// Training durations (inference only); defaults to `[inference]`.
    #[serde(default)]
    pub durations: Vec<f64>,
    pub eta_r: Option<EtaGrid>,
    /// Stop increasing N once every instance of a cell reaches zero error.
    #[serde(default = "default_true")]
    pub stop_rule: bool,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub sweep: SweepSection,
    pub parity: Option<ParitySection>,
    pub inference: Option<InferenceSection>,
    #[serde(default)]
    pub symmetry: SymmetrySection,
    #[serde(default)]
    pub params: ParamsSection,
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn task(&self) -> Result<Task> {
        self.sweep.task.ok_or_else(|| missing("sweep.task"))
    }

    /// `eta_r` values used for order `n`.
    pub fn etas(&self, n: Option<usize>) -> Vec<f64> {
        match &self.sweep.eta_r {
            None => vec![self.symmetry.eta_r],
            Some(EtaGrid::Values(v)) => v.clone(),
            Some(EtaGrid::Rule(EtaRule::Parity)) => {
                vec![if n.is_some_and(|n| n % 2 == 0) { 1.0 } else { 0.0 }]
            }
        }
    }

    /// Single-cell experiment configuration.
    pub fn cell(
        &self,
        n: Option<usize>,
        duration: Option<f64>,
        eta_r: f64,
        n_nodes: usize,
    ) -> ExperimentConfig {
        let s = &self.sweep;
        let parity = self.parity.clone().map(|p| ParitySection { n, ..p }).or_else(|| {
            n.map(|n| ParitySection {
                n: Some(n),
                ..Default::default()
            })
        });
        let inference = match (self.inference.clone(), duration) {
            (i, Some(d)) => Some(InferenceSection {
                train_duration: d,
                ..i.unwrap_or_default()
            }),
            (i, None) => i,
        };
        ExperimentConfig {
            experiment: ExperimentSection {
                id: s.id.clone(),
                task: s.task,
                master_seed: s.master_seed,
                instances: s.instances,
                budget: s.budget,
                n_nodes: Some(n_nodes),
                workers: s.workers,
            },
            parity,
            inference,
            symmetry: SymmetrySection {
                eta_r,
                ..self.symmetry
            },
            params: self.params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let task = self.task()?;
        let s = &self.sweep;
        if s.node_counts.is_empty() {
            return Err(Error::Config("`sweep.node_counts` must not be empty".into()));
        }
        if s.node_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("`sweep.node_counts` must be increasing".into()));
        }
        if task.is_parity() && s.orders.is_empty() {
            return Err(missing("sweep.orders"));
        }
        if !task.is_parity() && !s.orders.is_empty() {
            return Err(Error::Config("`sweep.orders` given for inference".into()));
        }
        if task.is_parity() && !s.durations.is_empty() {
            return Err(Error::Config("`sweep.durations` given for a parity task".into()));
        }
        if let Some(EtaGrid::Values(v)) = &s.eta_r {
            if v.is_empty() {
                return Err(Error::Config("`sweep.eta_r` must not be empty".into()));
            }
        }
        for n in self.orders() {
            for d in self.durations() {
                for eta in self.etas(n) {
                    self.cell(n, d, eta, s.node_counts[0]).validate()?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn orders(&self) -> Vec<Option<usize>> {
        if self.sweep.orders.is_empty() {
            vec![None]
        } else {
            self.sweep.orders.iter().map(|n| Some(*n)).collect()
        }
    }

    pub(crate) fn durations(&self) -> Vec<Option<f64>> {
        if self.sweep.durations.is_empty() {
            vec![None]
        } else {
            self.sweep.durations.iter().map(|d| Some(*d)).collect()
        }
    }
}
