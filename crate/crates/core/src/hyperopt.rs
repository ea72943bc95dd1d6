//! Sequential model-based hyperparameter search.
//!
//! A Gaussian process with an ARD Matern-5/2 kernel models the objective over
//! the unit cube; new points maximize expected improvement. The first points
//! come from a seeded Latin hypercube.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::reservoir::HyperParams;

/// A searchable hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    T0,
    DeltaT,
    Gamma,
    RhoR,
    RhoIn,
    Sigma,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::T0 => "t0",
            Param::DeltaT => "delta_t",
            Param::Gamma => "gamma",
            Param::RhoR => "rho_r",
            Param::RhoIn => "rho_in",
            Param::Sigma => "sigma",
        }
    }

    pub fn set(self, p: &mut HyperParams, v: f64) {
        match self {
            Param::T0 => p.t0 = v,
            Param::DeltaT => p.delta_t = v,
            Param::Gamma => p.gamma = v,
            Param::RhoR => p.rho_r = v,
            Param::RhoIn => p.rho_in = v,
            Param::Sigma => p.sigma = v,
        }
    }

    pub fn get(self, p: &HyperParams) -> f64 {
        match self {
            Param::T0 => p.t0,
            Param::DeltaT => p.delta_t,
            Param::Gamma => p.gamma,
            Param::RhoR => p.rho_r,
            Param::RhoIn => p.rho_in,
            Param::Sigma => p.sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub param: Param,
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub fn new(param: Param, lower: f64, upper: f64) -> Self {
        Self { param, lower, upper }
    }
}

/// Box of searched parameters on a linear scale. When both `t0` and
/// `delta_t` are searched, points must also satisfy `t0 + delta_t <= period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    bounds: Vec<Bound>,
    period: f64,
}

impl SearchSpace {
    pub fn new(bounds: Vec<Bound>, period: f64) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Parameter("search space has no dimensions".into()));
        }
        for (i, b) in bounds.iter().enumerate() {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.lower < b.upper) {
                return Err(Error::Parameter(format!(
                    "bad bounds [{}, {}] for {}",
                    b.lower,
                    b.upper,
                    b.param.name()
                )));
            }
            if bounds[..i].iter().any(|o| o.param == b.param) {
                return Err(Error::Parameter(format!("{} listed twice", b.param.name())));
            }
        }
        Ok(Self { bounds, period })
    }

    /// Serial-input parity ranges.
    pub fn serial_parity() -> Self {
        use Param::*;
        Self::new(
            vec![
                Bound::new(T0, 0.0, 0.5),
                Bound::new(DeltaT, 0.05, 0.5),
                Bound::new(Gamma, 0.1, 5.0),
                Bound::new(RhoR, 0.1, 2.0),
                Bound::new(RhoIn, 0.1, 1.0),
                Bound::new(Sigma, 0.1, 1.0),
            ],
            1.0,
        )
        .expect("static bounds")
    }

    /// Parallel-input parity ranges.
    pub fn parallel_parity() -> Self {
        use Param::*;
        Self::new(
            vec![
                Bound::new(T0, 0.0, 1.0),
                Bound::new(DeltaT, 0.05, 1.0),
                Bound::new(Gamma, 0.1, 10.0),
                Bound::new(RhoR, 0.1, 10.0),
                Bound::new(RhoIn, 0.1, 1.0),
                Bound::new(Sigma, 0.1, 1.0),
            ],
            1.0,
        )
        .expect("static bounds")
    }

    /// Lorenz inference ranges (no measurement window).
    pub fn inference() -> Self {
        use Param::*;
        Self::new(
            vec![
                Bound::new(Gamma, 0.01, 20.0),
                Bound::new(RhoR, 0.001, 5.0),
                Bound::new(RhoIn, 0.001, 1.0),
                Bound::new(Sigma, 0.01, 1.0),
            ],
            1.0,
        )
        .expect("static bounds")
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(u)
            .map(|(b, x)| b.lower + x.clamp(0.0, 1.0) * (b.upper - b.lower))
            .collect()
    }

    pub fn to_unit(&self, p: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(p)
            .map(|(b, x)| (x - b.lower) / (b.upper - b.lower))
            .collect()
    }

    fn position(&self, param: Param) -> Option<usize> {
        self.bounds.iter().position(|b| b.param == param)
    }

    /// Inside the box and, when applicable, `t0 + delta_t <= period`.
    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        let in_box = self
            .bounds
            .iter()
            .zip(p)
            .all(|(b, x)| *x >= b.lower && *x <= b.upper);
        in_box && self.window_fits(p)
    }

    fn window_fits(&self, p: &[f64]) -> bool {
        match (self.position(Param::T0), self.position(Param::DeltaT)) {
            (Some(a), Some(b)) => p[a] + p[b] <= self.period + 1e-12,
            _ => true,
        }
    }

    /// Copies the searched values into `base`.
    pub fn apply(&self, p: &[f64], base: &HyperParams) -> HyperParams {
        let mut out = *base;
        for (b, v) in self.bounds.iter().zip(p) {
            b.param.set(&mut out, *v);
        }
        out
    }

    fn unit_feasible(&self, u: &[f64]) -> bool {
        self.window_fits(&self.from_unit(u))
    }

    fn sample_unit(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        for _ in 0..100_000 {
            let u: Vec<f64> = (0..self.dim()).map(|_| rng.random()).collect();
            if self.unit_feasible(&u) {
                return Ok(u);
            }
        }
        Err(Error::Parameter("search space has no feasible region".into()))
    }
}

/// Value recorded for a point whose objective was not finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penalty {
    Fixed(f64),
    /// Multiple of the worst finite value seen so far.
    WorstTimes(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub budget: usize,
    pub initial_points: usize,
    pub candidates: usize,
    pub seed: u64,
    /// Stop as soon as the best value is at or below this.
    pub stop_at: Option<f64>,
    pub penalty: Penalty,
    /// Model `ln(objective)` instead of the raw value (positive objectives
    /// spanning decades, like NRMSE).
    pub log_objective: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            budget: 60,
            initial_points: 10,
            candidates: 1000,
            seed: 0,
            stop_at: None,
            penalty: Penalty::Fixed(1.0),
            log_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    /// Evaluated points in parameter units.
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub penalized: Vec<bool>,
    pub best_so_far: Vec<f64>,
    pub best_index: usize,
    pub seed: u64,
    pub budget: usize,
    pub budget_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub trace: OptimizationTrace,
}

/// Minimizes `objective` over `space`.
pub fn optimize<F>(
    mut objective: F,
    space: &SearchSpace,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult>
where
    F: FnMut(&[f64]) -> f64,
{
    if settings.initial_points == 0 || settings.budget < settings.initial_points {
        return Err(Error::Parameter(format!(
            "budget {} smaller than the {} initial points",
            settings.budget, settings.initial_points
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let dim = space.dim();
    let mut trace = OptimizationTrace {
        points: Vec::new(),
        values: Vec::new(),
        penalized: Vec::new(),
        best_so_far: Vec::new(),
        best_index: 0,
        seed: settings.seed,
        budget: settings.budget,
        budget_used: 0,
    };
    let mut units: Vec<Vec<f64>> = Vec::new();
    let mut worst = f64::NEG_INFINITY;

    let design = latin_hypercube(&mut rng, settings.initial_points, dim)
        .into_iter()
        .map(|u| if space.unit_feasible(&u) { Ok(u) } else { space.sample_unit(&mut rng) })
        .collect::<Result<Vec<_>>>()?;

    let mut evaluate = |u: Vec<f64>, trace: &mut OptimizationTrace, units: &mut Vec<Vec<f64>>| {
        let p = space.from_unit(&u);
        let raw = objective(&p);
        let (value, penalized) = if raw.is_finite() {
            worst = worst.max(raw);
            (raw, false)
        } else {
            let v = match settings.penalty {
                Penalty::Fixed(v) => v,
                Penalty::WorstTimes(f) if worst.is_finite() => f * worst.abs().max(f64::MIN_POSITIVE),
                Penalty::WorstTimes(f) => f,
            };
            (v, true)
        };
        let best = trace.best_so_far.last().copied().unwrap_or(f64::INFINITY);
        if value < best {
            trace.best_index = trace.values.len();
        }
        trace.best_so_far.push(best.min(value));
        trace.points.push(p);
        trace.values.push(value);
        trace.penalized.push(penalized);
        trace.budget_used += 1;
        units.push(u);
    };
    let done = |trace: &OptimizationTrace| match (settings.stop_at, trace.best_so_far.last()) {
        (Some(target), Some(best)) => *best <= target,
        _ => false,
    };

    for u in design {
        evaluate(u, &mut trace, &mut units);
        if done(&trace) {
            return Ok(finish(trace));
        }
    }

    let mut theta: Option<Vec<f64>> = None;
    while trace.budget_used < settings.budget && !done(&trace) {
        let y: Vec<f64> = trace
            .values
            .iter()
            .map(|v| if settings.log_objective { v.max(1e-300).ln() } else { *v })
            .collect();
        let next = match GaussianProcess::fit(&units, &y, theta.as_deref(), &mut rng) {
            Ok(gp) => {
                theta = Some(gp.theta());
                propose(&gp, space, &units, settings.candidates, &mut rng)?
            }
            Err(_) => space.sample_unit(&mut rng)?,
        };
        evaluate(next, &mut trace, &mut units);
    }
    Ok(finish(trace))
}

fn finish(trace: OptimizationTrace) -> OptimizationResult {
    OptimizationResult {
        best_point: trace.points[trace.best_index].clone(),
        best_value: trace.values[trace.best_index],
        trace,
    }
}

fn latin_hypercube(rng: &mut ChaCha8Rng, m: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]; m];
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..m).collect();
        // Fisher-Yates
        for i in (1..m).rev() {
            let j = rng.random_range(0..=i);
            strata.swap(i, j);
        }
        for (p, s) in pts.iter_mut().zip(strata) {
            p[d] = (s as f64 + rng.random::<f64>()) / m as f64;
        }
    }
    pts
}

/// Candidate with the largest expected improvement: best of `candidates`
/// random feasible points, then a shrinking random local search around it.
fn propose(
    gp: &GaussianProcess,
    space: &SearchSpace,
    seen: &[Vec<f64>],
    candidates: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let best_y = gp.best_observed();
    let mut best_u = space.sample_unit(rng)?;
    let mut best_ei = gp.expected_improvement(&best_u, best_y);
    for _ in 1..candidates.max(1) {
        let u = space.sample_unit(rng)?;
        let ei = gp.expected_improvement(&u, best_y);
        if ei > best_ei {
            best_ei = ei;
            best_u = u;
        }
    }
    let mut scale = 0.1;
    for _ in 0..100 {
        let u: Vec<f64> = best_u
            .iter()
            .map(|x| (x + scale * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0))
            .collect();
        if space.unit_feasible(&u) {
            let ei = gp.expected_improvement(&u, best_y);
            if ei > best_ei {
                best_ei = ei;
                best_u = u;
                continue;
            }
        }
        scale = (scale * 0.95).max(1e-3);
    }
    let repeated = seen.iter().any(|s| {
        s.iter().zip(&best_u).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < 1e-18
    });
    if repeated {
        return space.sample_unit(rng);
    }
    Ok(best_u)
}

/// Relative nugget added to the kernel diagonal.
pub const NUGGET: f64 = 1e-6;
/// Exploration margin in expected improvement (standardized units).
const EI_XI: f64 = 0.01;
const LOG_LENGTH_RANGE: (f64, f64) = (-4.6, 3.0);
const LOG_SIGNAL_RANGE: (f64, f64) = (-4.6, 4.6);

fn matern52(r: f64) -> f64 {
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Gaussian-process regression on standardized targets.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    x: Vec<Vec<f64>>,
    y_mean: f64,
    y_scale: f64,
    length_scales: Vec<f64>,
    signal_var: f64,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    y_min_std: f64,
}

impl GaussianProcess {
    /// Conditions on `(x, y)` with fixed kernel hyperparameters.
    pub fn with_hyperparameters(
        x: &[Vec<f64>],
        y: &[f64],
        length_scales: &[f64],
        signal_var: f64,
    ) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Shape(format!("{} points for {} values", x.len(), y.len())));
        }
        if length_scales.len() != x[0].len() {
            return Err(Error::Shape("one length scale per dimension".into()));
        }
        let (y_mean, y_scale) = standardize(y);
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));
        let k = kernel_matrix(x, length_scales, signal_var);
        let chol = Cholesky::new(k)
            .ok_or_else(|| Error::Solver("kernel matrix is not positive definite".into()))?;
        let weights = chol.solve(&ys);
        Ok(Self {
            x: x.to_vec(),
            y_mean,
            y_scale,
            length_scales: length_scales.to_vec(),
            signal_var,
            chol,
            weights,
            y_min_std: ys.min(),
        })
    }

    /// Fits length scales and signal variance by maximizing the marginal
    /// likelihood with multi-start Nelder-Mead in log space.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        warm_start: Option<&[f64]>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Shape(format!("{} points for {} values", x.len(), y.len())));
        }
        let dim = x[0].len();
        let (y_mean, y_scale) = standardize(y);
        let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();
        let nll = |theta: &[f64]| -> f64 {
            let (ls, sv) = unpack(theta);
            if theta[..dim].iter().any(|t| *t < LOG_LENGTH_RANGE.0 || *t > LOG_LENGTH_RANGE.1)
                || theta[dim] < LOG_SIGNAL_RANGE.0
                || theta[dim] > LOG_SIGNAL_RANGE.1
            {
                return f64::INFINITY;
            }
            neg_log_likelihood(x, &ys, &ls, sv)
        };

        let mut starts: Vec<Vec<f64>> = Vec::new();
        if let Some(w) = warm_start.filter(|w| w.len() == dim + 1) {
            starts.push(w.to_vec());
        }
        let mut default = vec![(0.3f64).ln(); dim];
        default.push(0.0);
        starts.push(default);
        for _ in 0..2 {
            let mut t: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.5..1.0)).collect();
            t.push(rng.random_range(-1.0..1.0));
            starts.push(t);
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in starts {
            let (t, f) = nelder_mead(&nll, &s, 0.5, 60 * (dim + 1));
            if f.is_finite() && best.as_ref().is_none_or(|(_, bf)| f < *bf) {
                best = Some((t, f));
            }
        }
        let (theta, _) =
            best.ok_or_else(|| Error::Solver("no finite marginal likelihood".into()))?;
        let (ls, sv) = unpack(&theta);
        Self::with_hyperparameters(x, y, &ls, sv)
    }

    /// Log length scales followed by log signal variance.
    pub fn theta(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.length_scales.iter().map(|l| l.ln()).collect();
        t.push(self.signal_var.ln());
        t
    }

    pub fn length_scales(&self) -> &[f64] {
        &self.length_scales
    }

    fn kernel_vector(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .map(|xi| self.signal_var * matern52(scaled_dist(xi, u, &self.length_scales))),
        )
    }

    fn predict_std(&self, u: &[f64]) -> (f64, f64) {
        let kv = self.kernel_vector(u);
        let mean = kv.dot(&self.weights);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kv)
            .expect("Cholesky factor is nonsingular");
        let var = (self.signal_var - v.norm_squared()).max(0.0);
        (mean, var.sqrt())
    }

    /// Posterior mean and standard deviation in the original units.
    pub fn predict(&self, u: &[f64]) -> (f64, f64) {
        let (m, s) = self.predict_std(u);
        (self.y_mean + self.y_scale * m, self.y_scale * s)
    }

    fn best_observed(&self) -> f64 {
        self.y_min_std
    }

    /// Expected improvement below `best` (standardized units).
    fn expected_improvement(&self, u: &[f64], best: f64) -> f64 {
        let (mu, s) = self.predict_std(u);
        let gain = best - mu - EI_XI;
        if s < 1e-12 {
            return gain.max(0.0);
        }
        let z = gain / s;
        let n = Normal::standard();
        gain * n.cdf(z) + s * n.pdf(z)
    }
}

fn standardize(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = var.sqrt();
    (mean, if scale > 1e-12 { scale } else { 1.0 })
}

fn unpack(theta: &[f64]) -> (Vec<f64>, f64) {
    let d = theta.len() - 1;
    (theta[..d].iter().map(|t| t.exp()).collect(), theta[d].exp())
}

fn scaled_dist(a: &[f64], b: &[f64], ls: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(ls)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn kernel_matrix(x: &[Vec<f64>], ls: &[f64], signal_var: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = signal_var * (1.0 + NUGGET);
        for j in 0..i {
            let v = signal_var * matern52(scaled_dist(&x[i], &x[j], ls));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn neg_log_likelihood(x: &[Vec<f64>], ys: &[f64], ls: &[f64], signal_var: f64) -> f64 {
    let k = kernel_matrix(x, ls, signal_var);
    let Some(chol) = Cholesky::new(k) else {
        return f64::INFINITY;
    };
    let y = DVector::from_column_slice(ys);
    let alpha = chol.solve(&y);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    0.5 * y.dot(&alpha) + log_det + 0.5 * ys.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Plain Nelder-Mead minimizer.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut evals = n + 1;
    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    };
    while evals < max_evals {
        order(&mut simplex);
        let spread = simplex[n].1 - simplex[0].1;
        if spread.is_finite() && spread.abs() < 1e-10 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = if fr < simplex[n].1 { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    *fx = f(x);
                }
                evals += n;
            }
        }
    }
    order(&mut simplex);
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_table() {
        let s = SearchSpace::serial_parity();
        assert_eq!(s.dim(), 6);
        assert_eq!(s.bounds()[2], Bound::new(Param::Gamma, 0.1, 5.0));
        let p = SearchSpace::parallel_parity();
        assert_eq!(p.bounds()[3], Bound::new(Param::RhoR, 0.1, 10.0));
        let i = SearchSpace::inference();
        assert_eq!(i.dim(), 4);
        assert_eq!(i.bounds()[1], Bound::new(Param::RhoR, 0.001, 5.0));
    }

    #[test]
    fn invalid_spaces() {
        assert!(SearchSpace::new(vec![], 1.0).is_err());
        assert!(SearchSpace::new(vec![Bound::new(Param::Gamma, 1.0, 1.0)], 1.0).is_err());
        assert!(SearchSpace::new(
            vec![Bound::new(Param::Gamma, 0.0, 1.0), Bound::new(Param::Gamma, 0.0, 2.0)],
            1.0
        )
        .is_err());
    }

    #[test]
    fn window_constraint() {
        let s = SearchSpace::parallel_parity();
        assert!(s.contains(&[0.5, 0.5, 1.0, 1.0, 0.5, 0.5]));
        assert!(!s.contains(&[0.6, 0.5, 1.0, 1.0, 0.5, 0.5]));
        let p = s.apply(&[0.1, 0.2, 3.0, 4.0, 0.5, 0.6], &HyperParams::default());
        assert_eq!((p.t0, p.delta_t, p.gamma, p.rho_r, p.rho_in, p.sigma), (0.1, 0.2, 3.0, 4.0, 0.5, 0.6));
    }

    #[test]
    fn budget_below_initial_design_is_rejected() {
        let s = SearchSpace::inference();
        let settings = OptimizerSettings { budget: 5, ..Default::default() };
        assert!(optimize(|_| 0.0, &s, &settings).is_err());
    }

    #[test]
    fn pure_random_search_when_budget_equals_design() {
        let s = SearchSpace::inference();
        let settings = OptimizerSettings { budget: 10, seed: 3, ..Default::default() };
        let r = optimize(|p| p.iter().sum(), &s, &settings).unwrap();
        assert_eq!(r.trace.budget_used, 10);
        let min = r.trace.values.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_value, min);
        assert_eq!(*r.trace.best_so_far.last().unwrap(), min);
    }

    #[test]
    fn constant_objective_is_flat() {
        let s = SearchSpace::serial_parity();
        let settings = OptimizerSettings { budget: 15, seed: 1, ..Default::default() };
        let r = optimize(|_| 0.25, &s, &settings).unwrap();
        assert_eq!(r.best_value, 0.25);
        assert!(r.trace.best_so_far.iter().all(|v| *v == 0.25));
        assert!(s.contains(&r.best_point));
    }

    #[test]
    fn non_finite_values_are_penalized() {
        let s = SearchSpace::inference();
        let settings = OptimizerSettings { budget: 14, seed: 2, ..Default::default() };
        let mut calls = 0;
        let r = optimize(
            |p| {
                calls += 1;
                if calls % 3 == 0 { f64::NAN } else { p[0] / 20.0 }
            },
            &s,
            &settings,
        )
        .unwrap();
        assert_eq!(r.trace.budget_used, 14);
        for (v, pen) in r.trace.values.iter().zip(&r.trace.penalized) {
            assert!(v.is_finite());
            if *pen {
                assert_eq!(*v, 1.0);
            }
        }
        let settings = OptimizerSettings {
            penalty: Penalty::WorstTimes(10.0),
            ..settings
        };
        let r = optimize(|p| if p[0] > 10.0 { f64::INFINITY } else { p[0] }, &s, &settings).unwrap();
        for (i, pen) in r.trace.penalized.iter().enumerate() {
            if *pen {
                let worst = r.trace.values[..i]
                    .iter()
                    .zip(&r.trace.penalized)
                    .filter(|(_, p)| !**p)
                    .map(|(v, _)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                if worst.is_finite() {
                    assert_eq!(r.trace.values[i], 10.0 * worst);
                }
            }
        }
    }

    #[test]
    fn early_stop_at_target() {
        let s = SearchSpace::inference();
        let settings = OptimizerSettings { stop_at: Some(0.0), seed: 4, ..Default::default() };
        let mut n = 0;
        let r = optimize(
            |_| {
                n += 1;
                if n >= 3 { 0.0 } else { 1.0 }
            },
            &s,
            &settings,
        )
        .unwrap();
        assert_eq!(r.trace.budget_used, 3);
        assert_eq!(r.best_value, 0.0);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let (x, fx) = nelder_mead(&f, &[0.0, 0.0], 0.5, 2000);
        assert!(fx < 1e-8 && (x[0] - 1.0).abs() < 1e-4 && (x[1] + 2.0).abs() < 1e-4);
    }

    #[test]
    fn latin_hypercube_strata() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = latin_hypercube(&mut rng, 10, 3);
        for d in 0..3 {
            let mut bins: Vec<usize> = pts.iter().map(|p| (p[d] * 10.0) as usize).collect();
            bins.sort_unstable();
            assert_eq!(bins, (0..10).collect::<Vec<_>>());
        }
    }
}
