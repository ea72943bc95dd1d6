//! End-to-end experiments: serial parity, parallel (tapped-delay) parity and
//! Lorenz '63 `z` inference.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::{feature_map_in_place, predict, train_ridge, ReadoutWeights};
use crate::reservoir::{HyperParams, ReservoirMachine};
use crate::tasks::{parity, BitSeries, LorenzDataset};

/// Slack for comparing saved-sample times against the measurement window.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputScheme {
    Serial,
    Parallel,
}

/// In-degree used by the serial scheme: 10, or every other node when N < 11.
pub fn serial_k(n_nodes: usize) -> usize {
    10.min(n_nodes.saturating_sub(1))
}

/// In-degree used by the parallel scheme.
pub fn parallel_k(n_nodes: usize) -> usize {
    1.min(n_nodes.saturating_sub(1))
}

/// In-degree used for inference.
pub fn inference_k(n_nodes: usize) -> usize {
    5.min(n_nodes.saturating_sub(1))
}

/// Whether a constant readout feature is appended by default.
///
/// A constant is an even function of the reservoir state, so it is only added
/// when the readout is already even-leaning (`eta_r > 0`) or the input has been
/// made even (`square_input`). The purely odd configuration stays odd.
pub fn default_constant_feature(eta_r: f64, square_input: bool) -> bool {
    eta_r > 0.0 || square_input
}

/// Which words are classified in the test phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityTest {
    /// Every sliding `n`-bit window of a series (after the warm-up words).
    Series(BitSeries),
    /// An explicit list of words, oldest bit first (parallel scheme only).
    Words(Vec<Vec<i8>>),
    /// All `2^n` words (parallel scheme only).
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityPipelineConfig {
    pub n: usize,
    pub scheme: InputScheme,
    pub n_nodes: usize,
    pub params: HyperParams,
    pub train_bits: BitSeries,
    pub test: ParityTest,
    /// Integration step in units of the bit period.
    pub dt: f64,
    pub save_every: usize,
    /// Reservoir instance seed.
    pub seed: u64,
    pub constant_feature: bool,
}

impl ParityPipelineConfig {
    pub fn serial(
        n: usize,
        n_nodes: usize,
        params: HyperParams,
        train_bits: BitSeries,
        test_bits: BitSeries,
        seed: u64,
    ) -> Self {
        Self {
            n,
            scheme: InputScheme::Serial,
            n_nodes,
            params: HyperParams {
                k: serial_k(n_nodes),
                ..params
            },
            train_bits,
            test: ParityTest::Series(test_bits),
            dt: 0.01,
            save_every: 5,
            seed,
            constant_feature: default_constant_feature(params.eta_r, false),
        }
    }

    pub fn parallel(
        n: usize,
        n_nodes: usize,
        params: HyperParams,
        train_bits: BitSeries,
        test: ParityTest,
        seed: u64,
    ) -> Self {
        Self {
            n,
            scheme: InputScheme::Parallel,
            n_nodes,
            params: HyperParams {
                k: parallel_k(n_nodes),
                ..params
            },
            train_bits,
            test,
            dt: 0.001,
            save_every: 50,
            seed,
            constant_feature: default_constant_feature(params.eta_r, false),
        }
    }

    fn steps_per_bit(&self) -> usize {
        (1.0 / self.dt).round() as usize
    }

    /// Local (1-based) step numbers inside one bit period whose saved states
    /// fall in `[t0, t0 + delta_t]`.
    fn window_steps(&self) -> Vec<usize> {
        let (lo, hi) = (self.params.t0, self.params.t0 + self.params.delta_t);
        (1..=self.steps_per_bit())
            .filter(|s| s % self.save_every == 0)
            .filter(|s| {
                let t = *s as f64 * self.dt;
                t >= lo - TIME_EPS && t <= hi + TIME_EPS
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("parity order n must be at least 1".into()));
        }
        if self.train_bits.len() < self.n {
            return Err(Error::Config(format!(
                "training series of {} bits is shorter than n = {}",
                self.train_bits.len(),
                self.n
            )));
        }
        let steps = self.steps_per_bit();
        if !(self.dt > 0.0) || ((steps as f64) * self.dt - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("dt = {} must divide the bit period", self.dt)));
        }
        if self.save_every == 0 || steps % self.save_every != 0 {
            return Err(Error::Config(format!(
                "save_every = {} must divide the {steps} steps of a bit period",
                self.save_every
            )));
        }
        if self.params.t0 + self.params.delta_t > 1.0 + TIME_EPS {
            return Err(Error::Config(format!(
                "measurement window t0 + delta_t = {} exceeds the bit period",
                self.params.t0 + self.params.delta_t
            )));
        }
        self.params.validate(self.n_nodes)?;
        if self.window_steps().is_empty() {
            return Err(Error::Config(format!(
                "no saved samples inside the measurement window [{}, {}]",
                self.params.t0,
                self.params.t0 + self.params.delta_t
            )));
        }
        match (&self.test, self.scheme) {
            (ParityTest::Series(s), _) if s.len() < self.n => Err(Error::Config(format!(
                "test series of {} bits is shorter than n = {}",
                s.len(),
                self.n
            ))),
            (ParityTest::Words(_) | ParityTest::Exhaustive, InputScheme::Serial) => Err(
                Error::Config("the serial scheme only classifies a test series".into()),
            ),
            (ParityTest::Words(w), _) if w.iter().any(|w| w.len() != self.n) => Err(
                Error::Config(format!("every test word must have {} bits", self.n)),
            ),
            _ => Ok(()),
        }
    }
}

/// Classification of one test word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordPrediction {
    /// Bit index of the newest bit (series) or position in the word list.
    pub index: usize,
    pub predicted: i8,
    pub truth: i8,
    /// Window-averaged `v1 - v2`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityOutcome {
    pub ber: f64,
    pub words: Vec<WordPrediction>,
    pub readout: ReadoutWeights,
}

fn target_row(p: i8) -> [f64; 2] {
    if p == 1 {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

/// `+1` when `v1 >= v2` (ties go to +1), else `-1`.
pub fn classify(margin: f64) -> i8 {
    if margin >= 0.0 {
        1
    } else {
        -1
    }
}

/// Reservoir state to readout features, with the optional constant appended.
fn features_of(state: &[f64], eta_r: f64, constant: bool, out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(state);
    feature_map_in_place(out, eta_r);
    if constant {
        out.push(1.0);
    }
}

fn fit(rows: Vec<f64>, targets: Vec<f64>, width: usize, alpha: f64) -> Result<ReadoutWeights> {
    let s = targets.len() / 2;
    if s == 0 {
        return Err(Error::Config("no training samples inside the measurement window".into()));
    }
    let g = DMatrix::from_row_slice(s, width, &rows);
    let y = DMatrix::from_row_slice(s, 2, &targets);
    train_ridge(&g, &y, alpha)
}

fn margin(w: &ReadoutWeights, mean_g: &[f64]) -> f64 {
    let v = w.apply(mean_g);
    v[0] - v[1]
}

/// Serial input: each bit is held at the single input for one bit period;
/// the reservoir runs continuously without resets.
pub fn run_parity_serial(config: &ParityPipelineConfig) -> Result<ParityOutcome> {
    if config.scheme != InputScheme::Serial {
        return Err(Error::Config("run_parity_serial needs the serial scheme".into()));
    }
    config.validate()?;
    let ParityTest::Series(test_bits) = &config.test else {
        unreachable!("validated above");
    };
    let n = config.n;
    let steps = config.steps_per_bit();
    let window = config.window_steps();
    let width = config.n_nodes + usize::from(config.constant_feature);
    let eta_r = config.params.eta_r;
    let dt = config.dt * config.train_bits.bit_period;
    let mut machine = ReservoirMachine::instantiate(config.n_nodes, 1, &config.params, config.seed)?;

    let drive = |bits: &[i8]| -> Vec<[f64; 1]> {
        bits.iter()
            .flat_map(|b| std::iter::repeat_n([*b as f64], steps))
            .collect()
    };

    // training: every in-window sample of every word past the warm-up
    let labels: Vec<i8> = (0..config.train_bits.len())
        .map(|t| {
            if t + 1 >= n {
                parity(config.train_bits.window(n, t)?)
            } else {
                Ok(0)
            }
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut g = Vec::with_capacity(width);
    machine.run_with(drive(&config.train_bits.bits), dt, config.save_every, |step, r| {
        let bit = (step - 1) / steps;
        let local = step - bit * steps;
        if bit + 1 >= n && window.binary_search(&local).is_ok() {
            features_of(r, eta_r, config.constant_feature, &mut g);
            rows.extend_from_slice(&g);
            targets.extend_from_slice(&target_row(labels[bit]));
        }
    })?;
    let readout = fit(rows, targets, width, config.params.alpha)?;

    // testing from a fresh zero state
    machine.reset();
    let mut sums = vec![0.0; width * test_bits.len()];
    machine.run_with(drive(&test_bits.bits), dt, config.save_every, |step, r| {
        let bit = (step - 1) / steps;
        let local = step - bit * steps;
        if bit + 1 >= n && window.binary_search(&local).is_ok() {
            features_of(r, eta_r, config.constant_feature, &mut g);
            for (acc, v) in sums[bit * width..(bit + 1) * width].iter_mut().zip(&g) {
                *acc += v;
            }
        }
    })?;
    let count = window.len() as f64;
    let mut words = Vec::with_capacity(test_bits.len().saturating_sub(n - 1));
    for t in n - 1..test_bits.len() {
        let mean: Vec<f64> = sums[t * width..(t + 1) * width].iter().map(|v| v / count).collect();
        let m = margin(&readout, &mean);
        words.push(WordPrediction {
            index: t,
            predicted: classify(m),
            truth: parity(test_bits.window(n, t)?)?,
            margin: m,
        });
    }
    finish(words, readout)
}

fn finish(words: Vec<WordPrediction>, readout: ReadoutWeights) -> Result<ParityOutcome> {
    let predicted: Vec<i8> = words.iter().map(|w| w.predicted).collect();
    let truth: Vec<i8> = words.iter().map(|w| w.truth).collect();
    Ok(ParityOutcome {
        ber: ber(&predicted, &truth)?,
        words,
        readout,
    })
}

/// In-window feature rows for one word in the parallel scheme, keyed by the
/// summed input it reduces to.
struct ParallelRig {
    machine: ReservoirMachine,
    window: Vec<usize>,
    steps: usize,
    dt: f64,
    save_every: usize,
    eta_r: f64,
    constant: bool,
    cache: HashMap<i32, Vec<Vec<f64>>>,
}

impl ParallelRig {
    fn new(config: &ParityPipelineConfig) -> Result<Self> {
        Ok(Self {
            machine: ReservoirMachine::instantiate(config.n_nodes, 1, &config.params, config.seed)?,
            window: config.window_steps(),
            steps: config.steps_per_bit(),
            dt: config.dt * config.train_bits.bit_period,
            save_every: config.save_every,
            eta_r: config.params.eta_r,
            constant: config.constant_feature,
            cache: HashMap::new(),
        })
    }

    /// Resets the reservoir and integrates one bit period under the constant
    /// drive `w_in * sum(word)`.
    fn rows(&mut self, sum: i32) -> Result<&[Vec<f64>]> {
        if !self.cache.contains_key(&sum) {
            self.machine.reset();
            let mut rows = Vec::with_capacity(self.window.len());
            let window = &self.window;
            let (eta_r, constant) = (self.eta_r, self.constant);
            let input = [sum as f64];
            self.machine.run_with(
                std::iter::repeat_n(input, self.steps),
                self.dt,
                self.save_every,
                |step, r| {
                    if window.binary_search(&step).is_ok() {
                        let mut g = Vec::new();
                        features_of(r, eta_r, constant, &mut g);
                        rows.push(g);
                    }
                },
            )?;
            self.cache.insert(sum, rows);
        }
        Ok(&self.cache[&sum])
    }

    fn mean(&mut self, sum: i32) -> Result<Vec<f64>> {
        let rows = self.rows(sum)?;
        let mut mean = vec![0.0; rows[0].len()];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let count = rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= count);
        Ok(mean)
    }
}

fn word_sum(word: &[i8]) -> i32 {
    word.iter().map(|b| *b as i32).sum()
}

/// Window-averaged feature vector of a single word in the parallel scheme.
pub fn parallel_word_features(config: &ParityPipelineConfig, word: &[i8]) -> Result<Vec<f64>> {
    config.validate()?;
    ParallelRig::new(config)?.mean(word_sum(word))
}

/// Distinct summed inputs seen by the readout while training in the
/// parallel scheme.
pub fn parallel_training_sums(config: &ParityPipelineConfig) -> Result<Vec<i32>> {
    let mut sums: Vec<i32> = (config.n - 1..config.train_bits.len())
        .map(|t| config.train_bits.window(config.n, t).map(word_sum))
        .collect::<Result<_>>()?;
    sums.sort_unstable();
    sums.dedup();
    Ok(sums)
}

/// Parallel input: the tapped-delay word is broadcast to every node with one
/// shared weight (so node `j` sees `w_j * sum(word)`), and the reservoir is
/// reset to zero before each word.
pub fn run_parity_parallel(config: &ParityPipelineConfig) -> Result<ParityOutcome> {
    if config.scheme != InputScheme::Parallel {
        return Err(Error::Config("run_parity_parallel needs the parallel scheme".into()));
    }
    config.validate()?;
    let n = config.n;
    let mut rig = ParallelRig::new(config)?;
    let width = config.n_nodes + usize::from(config.constant_feature);

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for t in n - 1..config.train_bits.len() {
        let word = config.train_bits.window(n, t)?;
        let label = target_row(parity(word)?);
        for g in rig.rows(word_sum(word))? {
            rows.extend_from_slice(g);
            targets.extend_from_slice(&label);
        }
    }
    let readout = fit(rows, targets, width, config.params.alpha)?;

    let mut classify_word = |index: usize, word: &[i8]| -> Result<WordPrediction> {
        let m = margin(&readout, &rig.mean(word_sum(word))?);
        Ok(WordPrediction {
            index,
            predicted: classify(m),
            truth: parity(word)?,
            margin: m,
        })
    };
    let words = match &config.test {
        ParityTest::Series(bits) => (n - 1..bits.len())
            .map(|t| classify_word(t, bits.window(n, t)?))
            .collect::<Result<Vec<_>>>()?,
        ParityTest::Words(list) => list
            .iter()
            .enumerate()
            .map(|(i, w)| classify_word(i, w))
            .collect::<Result<Vec<_>>>()?,
        ParityTest::Exhaustive => {
            if n > 24 {
                return Err(Error::Config(format!("cannot enumerate words of order {n}")));
            }
            // Words are enumerated by pattern index; only the sum matters.
            let mut margins: HashMap<i32, f64> = HashMap::new();
            let mut out = Vec::with_capacity(1 << n);
            for p in 0..1usize << n {
                let ones = p.count_ones() as i32;
                let sum = 2 * ones - n as i32;
                let m = match margins.get(&sum) {
                    Some(m) => *m,
                    None => {
                        let m = margin(&readout, &rig.mean(sum)?);
                        margins.insert(sum, m);
                        m
                    }
                };
                out.push(WordPrediction {
                    index: p,
                    predicted: classify(m),
                    truth: if (n as i32 - ones) % 2 == 0 { 1 } else { -1 },
                    margin: m,
                });
            }
            out
        }
    };
    finish(words, readout)
}

/// Dispatches on the configured scheme.
pub fn run_parity(config: &ParityPipelineConfig) -> Result<ParityOutcome> {
    match config.scheme {
        InputScheme::Serial => run_parity_serial(config),
        InputScheme::Parallel => run_parity_parallel(config),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferencePipelineConfig {
    pub n_nodes: usize,
    pub params: HyperParams,
    pub train: LorenzDataset,
    pub test: LorenzDataset,
    pub reservoir_dt: f64,
    pub square_input: bool,
    /// Time discarded at the start of both feature collections.
    pub washout: f64,
    pub seed: u64,
    pub constant_feature: bool,
    /// Divide each input component by its RMS over the training inputs.
    /// No centering, so odd and even symmetries are kept exactly.
    #[serde(default)]
    pub normalize_input: bool,
}

impl InferencePipelineConfig {
    pub const DEFAULT_WASHOUT: f64 = 1.0;

    pub fn new(
        n_nodes: usize,
        params: HyperParams,
        train: LorenzDataset,
        test: LorenzDataset,
        seed: u64,
    ) -> Self {
        let square_input = train.square_input;
        Self {
            n_nodes,
            params: HyperParams {
                k: inference_k(n_nodes),
                ..params
            },
            reservoir_dt: train.sample_dt,
            square_input,
            washout: Self::DEFAULT_WASHOUT,
            seed,
            constant_feature: default_constant_feature(params.eta_r, square_input),
            normalize_input: false,
            train,
            test,
        }
    }

    /// Per-component input divisors.
    pub fn input_scale(&self) -> [f64; 2] {
        if !self.normalize_input || self.train.input.is_empty() {
            return [1.0, 1.0];
        }
        let len = self.train.input.len() as f64;
        let rms = |c: usize| (self.train.input.iter().map(|u| u[c] * u[c]).sum::<f64>() / len).sqrt();
        [rms(0), rms(1)].map(|v| if v > 0.0 { v } else { 1.0 })
    }

    fn washout_samples(&self) -> usize {
        (self.washout / self.reservoir_dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("train", &self.train), ("test", &self.test)] {
            if (d.sample_dt - self.reservoir_dt).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "{name} sample_dt {} differs from reservoir_dt {}",
                    d.sample_dt, self.reservoir_dt
                )));
            }
            if d.square_input != self.square_input {
                return Err(Error::Config(format!(
                    "{name} dataset input encoding does not match square_input = {}",
                    self.square_input
                )));
            }
            if self.washout < 0.0 || self.washout >= d.duration() {
                return Err(Error::Config(format!(
                    "washout {} must be shorter than the {name} duration {}",
                    self.washout,
                    d.duration()
                )));
            }
        }
        self.params.validate(self.n_nodes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceOutcome {
    pub nrmse: f64,
    pub inferred: Vec<f64>,
    pub truth: Vec<f64>,
    pub readout: ReadoutWeights,
}

/// Post-washout feature matrix for one dataset, driven from the zero state.
pub fn inference_features(
    machine: &mut ReservoirMachine,
    data: &LorenzDataset,
    config: &InferencePipelineConfig,
) -> Result<DMatrix<f64>> {
    let skip = config.washout_samples();
    let width = config.n_nodes + usize::from(config.constant_feature);
    let kept = data.len().saturating_sub(skip);
    let mut flat = Vec::with_capacity(kept * width);
    let mut g = Vec::with_capacity(width);
    let scale = config.input_scale();
    let scaled: Vec<[f64; 2]>;
    let input = if scale == [1.0, 1.0] {
        &data.input
    } else {
        scaled = data.input.iter().map(|u| [u[0] / scale[0], u[1] / scale[1]]).collect();
        &scaled
    };
    machine.reset();
    machine.run_with(input, config.reservoir_dt, 1, |step, r| {
        if step > skip {
            features_of(r, config.params.eta_r, config.constant_feature, &mut g);
            flat.extend_from_slice(&g);
        }
    })?;
    Ok(DMatrix::from_row_slice(kept, width, &flat))
}

/// Trains on `[x, y]` (or squared) inputs with `z` targets, then infers `z`
/// on the test trajectory from a fresh zero state.
pub fn run_inference(config: &InferencePipelineConfig) -> Result<InferenceOutcome> {
    config.validate()?;
    let skip = config.washout_samples();
    let mut machine =
        ReservoirMachine::instantiate(config.n_nodes, 2, &config.params, config.seed)?;

    let g_train = inference_features(&mut machine, &config.train, config)?;
    let y_train = DMatrix::from_column_slice(g_train.nrows(), 1, &config.train.target[skip..]);
    let readout = train_ridge(&g_train, &y_train, config.params.alpha)?;
    drop(g_train);

    let g_test = inference_features(&mut machine, &config.test, config)?;
    let inferred: Vec<f64> = predict(&readout, &g_test)?.iter().copied().collect();
    let truth = config.test.target[skip..].to_vec();
    Ok(InferenceOutcome {
        nrmse: nrmse(&inferred, &truth)?,
        inferred,
        truth,
        readout,
    })
}

/// Fraction of mismatched entries.
pub fn ber(predicted: &[i8], truth: &[i8]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Shape("no words to score".into()));
    }
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Root-mean-square error divided by the (population) standard deviation of
/// the truth.
pub fn nrmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            predicted.len(),
            truth.len()
        )));
    }
    let len = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / len;
    let var = truth.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / len;
    if !(var > 0.0) {
        return Err(Error::Normalization("truth series is constant".into()));
    }
    let mse = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / len;
    Ok((mse / var).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{minimal_training_bits, random_bits};

    #[test]
    fn ber_examples() {
        assert_eq!(ber(&[1, -1, 1], &[1, -1, 1]).unwrap(), 0.0);
        assert_eq!(ber(&[1, -1], &[-1, 1]).unwrap(), 1.0);
        assert_eq!(ber(&[1, 1, 1, 1], &[1, 1, -1, 1]).unwrap(), 0.25);
        assert!(ber(&[1], &[1, 1]).is_err());
        assert!(ber(&[], &[]).is_err());
    }

    #[test]
    fn nrmse_examples() {
        let truth = [1.0, 3.0, 2.0, 6.0];
        assert_eq!(nrmse(&truth, &truth).unwrap(), 0.0);
        assert!((nrmse(&[3.0; 4], &truth).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(nrmse(&[1.0, 1.0], &[2.0, 2.0]), Err(Error::Normalization(_))));
    }

    #[test]
    fn in_degree_rules() {
        assert_eq!(serial_k(100), 10);
        assert_eq!(serial_k(5), 4);
        assert_eq!(serial_k(1), 0);
        assert_eq!(parallel_k(1), 0);
        assert_eq!(parallel_k(7), 1);
        assert_eq!(inference_k(100), 5);
    }

    fn serial_params() -> HyperParams {
        HyperParams {
            gamma: 4.0,
            rho_r: 0.5,
            rho_in: 0.5,
            sigma: 1.0,
            t0: 0.5,
            delta_t: 0.4,
            alpha: 1e-6,
            ..HyperParams::default()
        }
    }

    #[test]
    fn serial_window_selection() {
        let cfg = ParityPipelineConfig::serial(
            2,
            10,
            serial_params(),
            random_bits(50, 1),
            random_bits(50, 2),
            0,
        );
        assert_eq!(cfg.window_steps(), vec![50, 55, 60, 65, 70, 75, 80, 85, 90]);
        assert_eq!(cfg.params.k, 9);
    }

    #[test]
    fn empty_window_and_overlong_window_are_config_errors() {
        let mut cfg = ParityPipelineConfig::serial(
            2,
            10,
            serial_params(),
            random_bits(50, 1),
            random_bits(50, 2),
            0,
        );
        cfg.params.t0 = 0.71;
        cfg.params.delta_t = 0.02;
        assert!(matches!(run_parity_serial(&cfg), Err(Error::Config(_))));
        cfg.params.t0 = 0.7;
        cfg.params.delta_t = 0.5;
        assert!(matches!(run_parity_serial(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn serial_identity_task_is_solved() {
        let cfg = ParityPipelineConfig::serial(
            1,
            10,
            serial_params(),
            random_bits(200, 1),
            random_bits(200, 2),
            3,
        );
        let out = run_parity_serial(&cfg).unwrap();
        assert_eq!(out.words.len(), 200);
        assert_eq!(out.ber, 0.0);
    }

    #[test]
    fn parallel_training_sees_one_sum_per_class() {
        for n in 1..=9 {
            let cfg = ParityPipelineConfig::parallel(
                n,
                3,
                serial_params(),
                minimal_training_bits(n),
                ParityTest::Exhaustive,
                0,
            );
            let sums = parallel_training_sums(&cfg).unwrap();
            assert_eq!(sums.len(), n / 2 + 1);
        }
    }

    #[test]
    fn parallel_rejects_serial_only_and_vice_versa() {
        let cfg = ParityPipelineConfig::parallel(
            2,
            3,
            serial_params(),
            minimal_training_bits(2),
            ParityTest::Exhaustive,
            0,
        );
        assert!(run_parity_serial(&cfg).is_err());
        let mut bad = cfg.clone();
        bad.scheme = InputScheme::Serial;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = cfg;
        bad.test = ParityTest::Words(vec![vec![1, 1, 1]]);
        assert!(run_parity_parallel(&bad).is_err());
    }
}
