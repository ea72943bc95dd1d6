//! Benchmark data: parity bit streams and Lorenz '63 trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Internal Lorenz integration step.
pub const LORENZ_DT: f64 = 1e-4;
/// Time discarded before sampling so the data lies on the attractor.
pub const LORENZ_TRANSIENT: f64 = 10.0;
/// Default sample spacing of inference datasets.
pub const SAMPLE_DT: f64 = 0.005;

/// A serial stream of +1/-1 bits, each lasting `bit_period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitSeries {
    pub bits: Vec<i8>,
    pub bit_period: f64,
}

impl BitSeries {
    pub fn new(bits: Vec<i8>, bit_period: f64) -> Result<Self> {
        check_bits(&bits)?;
        if !(bit_period > 0.0) {
            return Err(Error::Parameter(format!("bit period {bit_period} must be positive")));
        }
        Ok(Self { bits, bit_period })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The `n`-bit window ending at `index` (oldest bit first).
    pub fn window(&self, n: usize, index: usize) -> Result<&[i8]> {
        if n == 0 || index + 1 < n {
            return Err(Error::InsufficientHistory { index, needed: n.saturating_sub(1) });
        }
        if index >= self.bits.len() {
            return Err(Error::Parameter(format!(
                "word index {index} past the end of a {}-bit series",
                self.bits.len()
            )));
        }
        Ok(&self.bits[index + 1 - n..=index])
    }
}

fn check_bits(bits: &[i8]) -> Result<()> {
    match bits.iter().find(|b| **b != 1 && **b != -1) {
        Some(b) => Err(Error::Domain(format!("bit value {b} is not +1 or -1"))),
        None => Ok(()),
    }
}

/// Product of the bits in the window.
pub fn parity(window: &[i8]) -> Result<i8> {
    if window.is_empty() {
        return Err(Error::Parameter("parity of an empty window".into()));
    }
    check_bits(window)?;
    Ok(window.iter().product())
}

/// Number of +1 entries (the index `l` of the equivalence set `L_n(l)`).
pub fn equivalence_class(window: &[i8]) -> usize {
    window.iter().filter(|b| **b == 1).count()
}

pub fn random_bits(length: usize, seed: u64) -> BitSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..length)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    BitSeries { bits, bit_period: 1.0 }
}

/// Which of the `2^n` patterns occur in a series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    pub complete: bool,
    /// Occurrences per pattern; bit `j` of the index is set when the
    /// `j`-th (oldest-first) bit of the window is +1.
    pub counts: Vec<usize>,
}

pub fn pattern_index(window: &[i8]) -> usize {
    window
        .iter()
        .enumerate()
        .filter(|(_, b)| **b == 1)
        .fold(0, |acc, (j, _)| acc | (1 << j))
}

/// Slides an `n`-bit window with stride 1 and counts every pattern.
pub fn coverage_check(series: &BitSeries, n: usize) -> Result<Coverage> {
    if n == 0 || n > series.len() {
        return Err(Error::Parameter(format!(
            "order {n} invalid for a series of length {}",
            series.len()
        )));
    }
    if n > 24 {
        return Err(Error::Parameter(format!("order {n} too large to enumerate")));
    }
    let mut counts = vec![0usize; 1 << n];
    for w in series.bits.windows(n) {
        counts[pattern_index(w)] += 1;
    }
    Ok(Coverage {
        complete: counts.iter().all(|c| *c > 0),
        counts,
    })
}

/// Expected number of draws to collect all `2^n` patterns, `2^n H_{2^n}`.
pub fn coupon_expectation(n: u32) -> f64 {
    assert!(n >= 1, "order must be at least 1");
    if n <= 24 {
        let m = 1u64 << n;
        // smallest terms first
        let h: f64 = (1..=m).rev().map(|i| 1.0 / i as f64).sum();
        m as f64 * h
    } else {
        let m = 2f64.powi(n as i32);
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let h = m.ln() + EULER_GAMMA + 0.5 / m - 1.0 / (12.0 * m * m);
        m * h
    }
}

/// Largest minority-bit count of an `n`-bit word.
pub fn s_max(n: usize) -> usize {
    n / 2
}

/// `n` copies of -1 followed by `s_max(n)` copies of +1.
pub fn minimal_training_bits(n: usize) -> BitSeries {
    let mut bits = vec![-1i8; n];
    bits.extend(std::iter::repeat_n(1i8, s_max(n)));
    BitSeries { bits, bit_period: 1.0 }
}

/// The `n` most recent bits ending at `word_index`, newest first.
pub fn tapped_delay(series: &BitSeries, n: usize, word_index: usize) -> Result<Vec<f64>> {
    let w = series.window(n, word_index)?;
    Ok(w.iter().rev().map(|b| *b as f64).collect())
}

/// Every `n`-bit word, enumerated by pattern index.
pub fn all_words(n: usize) -> Result<Vec<Vec<i8>>> {
    if n == 0 || n > 24 {
        return Err(Error::Parameter(format!("cannot enumerate words of order {n}")));
    }
    Ok((0..1usize << n)
        .map(|p| (0..n).map(|j| if p >> j & 1 == 1 { 1 } else { -1 }).collect())
        .collect())
}

pub fn lorenz_derivative(s: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = s;
    [10.0 * (y - x), x * (28.0 - z) - y, x * y - 8.0 / 3.0 * z]
}

fn rk4_step(s: [f64; 3], dt: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
    let k1 = lorenz_derivative(s);
    let k2 = lorenz_derivative(add(s, k1, dt / 2.0));
    let k3 = lorenz_derivative(add(s, k2, dt / 2.0));
    let k4 = lorenz_derivative(add(s, k3, dt));
    let mut out = s;
    for i in 0..3 {
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Fourth-order Runge-Kutta integration; returns `n_steps + 1` states
/// starting with `x0`.
pub fn integrate_lorenz(x0: [f64; 3], dt: f64, n_steps: usize) -> Result<Vec<[f64; 3]>> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt = {dt} must be positive")));
    }
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut s = x0;
    out.push(s);
    for step in 0..n_steps {
        s = rk4_step(s, dt);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: step as u64 + 1 });
        }
        out.push(s);
    }
    Ok(out)
}

fn advance(mut s: [f64; 3], dt: f64, n_steps: usize, offset: u64) -> Result<[f64; 3]> {
    for step in 0..n_steps {
        s = rk4_step(s, dt);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: offset + step as u64 + 1 });
        }
    }
    Ok(s)
}

/// Uniformly sampled Lorenz '63 trajectory with reservoir inputs and the
/// `z` target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzDataset {
    pub times: Vec<f64>,
    pub xyz: Vec<[f64; 3]>,
    /// `[x, y]` or `[x^2, y^2]`.
    pub input: Vec<[f64; 2]>,
    pub target: Vec<f64>,
    pub sample_dt: f64,
    pub square_input: bool,
}

impl LorenzDataset {
    pub fn from_xyz(xyz: Vec<[f64; 3]>, sample_dt: f64, square_input: bool) -> Self {
        let times = (0..xyz.len()).map(|i| i as f64 * sample_dt).collect();
        let input = xyz
            .iter()
            .map(|s| if square_input { [s[0] * s[0], s[1] * s[1]] } else { [s[0], s[1]] })
            .collect();
        let target = xyz.iter().map(|s| s[2]).collect();
        Self {
            times,
            xyz,
            input,
            target,
            sample_dt,
            square_input,
        }
    }

    pub fn len(&self) -> usize {
        self.xyz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xyz.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.sample_dt
    }

    /// The mirror-image trajectory `(-x, -y, z)`.
    pub fn mirrored(&self) -> Self {
        let xyz = self.xyz.iter().map(|s| [-s[0], -s[1], s[2]]).collect();
        Self::from_xyz(xyz, self.sample_dt, self.square_input)
    }

    /// Same trajectory with the other input encoding.
    pub fn with_square_input(&self, square_input: bool) -> Self {
        Self::from_xyz(self.xyz.clone(), self.sample_dt, square_input)
    }
}

/// Integrates Lorenz '63 from a seeded initial condition in `[-10, 10]^3`,
/// drops a transient and samples every `sample_dt`.
pub fn make_inference_dataset(
    duration: f64,
    sample_dt: f64,
    square_input: bool,
    seed: u64,
) -> Result<LorenzDataset> {
    if !(duration > 0.0) || !(sample_dt > 0.0) {
        return Err(Error::Parameter(format!(
            "duration {duration} and sample_dt {sample_dt} must be positive"
        )));
    }
    let ratio = (sample_dt / LORENZ_DT).round();
    if ratio < 1.0 || (ratio * LORENZ_DT - sample_dt).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "sample_dt {sample_dt} is not a multiple of the integration step {LORENZ_DT}"
        )));
    }
    let ratio = ratio as usize;
    let samples = (duration / sample_dt).round() as usize;
    if samples == 0 {
        return Err(Error::Parameter(format!("duration {duration} shorter than one sample")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = [
        rng.random_range(-10.0..=10.0),
        rng.random_range(-10.0..=10.0),
        rng.random_range(-10.0..=10.0),
    ];
    let transient = (LORENZ_TRANSIENT / LORENZ_DT).round() as usize;
    let mut s = advance(x0, LORENZ_DT, transient, 0)?;
    let mut xyz = Vec::with_capacity(samples);
    for i in 0..samples {
        xyz.push(s);
        if i + 1 < samples {
            s = advance(s, LORENZ_DT, ratio, (transient + i * ratio) as u64)?;
        }
    }
    Ok(LorenzDataset::from_xyz(xyz, sample_dt, square_input))
}
