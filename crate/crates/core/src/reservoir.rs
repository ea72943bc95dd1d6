//! Continuous-time echo state reservoir.
//!
//! Node dynamics are the leaky-integrator equation
//!
//! ```text
//! dr/dt = -gamma * r + gamma * f(W_r r + W_in u + b)
//! ```
//!
//! integrated with forward Euler. `f` is `tanh` on most nodes and `tanh^2`
//! on the lowest `ceil(eta_f * N)` indices.

use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts at drawing a recurrent matrix with nonzero spectral radius.
const MAX_REDRAWS: usize = 16;

/// Tunable scalars for one reservoir instance.
///
/// `t0` and `delta_t` are in units of the bit period and only matter for the
/// parity pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub gamma: f64,
    pub rho_r: f64,
    pub rho_in: f64,
    pub sigma: f64,
    pub k: usize,
    pub bias: f64,
    pub eta_f: f64,
    pub eta_r: f64,
    pub alpha: f64,
    pub t0: f64,
    pub delta_t: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            rho_r: 0.9,
            rho_in: 0.5,
            sigma: 1.0,
            k: 1,
            bias: 0.0,
            eta_f: 0.0,
            eta_r: 0.0,
            alpha: 1e-6,
            t0: 0.0,
            delta_t: 1.0,
        }
    }
}

impl HyperParams {
    /// Checks the scalar ranges and the in-degree against a reservoir of
    /// `n_nodes` nodes. A single node ignores `k`.
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        fn unit(name: &str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} = {v} outside [0, 1]")))
            }
        }
        unit("sigma", self.sigma)?;
        unit("eta_f", self.eta_f)?;
        unit("eta_r", self.eta_r)?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Parameter(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(self.rho_r > 0.0 && self.rho_r.is_finite()) {
            return Err(Error::Parameter(format!("rho_r = {} must be positive", self.rho_r)));
        }
        if !(self.rho_in >= 0.0 && self.rho_in.is_finite()) {
            return Err(Error::Parameter(format!("rho_in = {} must be nonnegative", self.rho_in)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha = {} must be nonnegative", self.alpha)));
        }
        if !self.bias.is_finite() {
            return Err(Error::Parameter("bias must be finite".into()));
        }
        if self.t0 < 0.0 || self.delta_t <= 0.0 {
            return Err(Error::Parameter(format!(
                "measurement window [{}, {}+{}] is empty or negative",
                self.t0, self.t0, self.delta_t
            )));
        }
        if n_nodes > 1 && (self.k == 0 || self.k >= n_nodes) {
            return Err(Error::Parameter(format!(
                "k = {} must lie in 1..={} for N = {}",
                self.k,
                n_nodes - 1,
                n_nodes
            )));
        }
        Ok(())
    }
}

/// Number of nodes in the low-index block selected by a fraction `eta`.
///
/// `ceil(eta * n)`, with a small tolerance so that e.g. `0.1 * 30` does not
/// round up to 4.
pub fn block_len(eta: f64, n: usize) -> usize {
    let raw = (eta * n as f64 - 1e-9).ceil();
    raw.clamp(0.0, n as f64) as usize
}

/// Row-compressed square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.iter().filter(|v| **v != 0.0).count()
    }

    /// Column indices and values stored for row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for (c, v) in self.cols[a..b].iter().zip(&self.vals[a..b]) {
                acc += v * x[*c];
            }
            *o = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c)] = *v;
            }
        }
        m
    }

    fn scale(&mut self, factor: f64) {
        self.vals.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Largest eigenvalue magnitude of a square matrix, from a dense real Schur
/// decomposition.
pub fn spectral_radius(matrix: &DMatrix<f64>) -> Result<f64> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::Shape(format!(
            "spectral radius needs a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let n = matrix.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    // The QR iteration can stall on the exact zero patterns of sparse
    // matrices; an orthogonal similarity keeps the spectrum and removes them.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for attempt in 0..8 {
        let candidate = if attempt == 0 {
            matrix.clone()
        } else {
            let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let q = g.qr().q();
            &q * matrix * q.transpose()
        };
        if let Some(schur) = Schur::try_new(candidate, f64::EPSILON, 1000 * n.max(10)) {
            return Ok(schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max));
        }
    }
    Err(Error::Solver("Schur decomposition did not converge".into()))
}

/// Node nonlinearity in place: `tanh^2(x + b)` on the first
/// `ceil(eta_f * N)` entries, `tanh(x + b)` on the rest.
pub fn activation_in_place(pre: &mut [f64], eta_f: f64, bias: f64) {
    let squared = block_len(eta_f, pre.len());
    for (i, x) in pre.iter_mut().enumerate() {
        let t = (*x + bias).tanh();
        *x = if i < squared { t * t } else { t };
    }
}

pub fn activation(pre_activation: &[f64], eta_f: f64, bias: f64) -> Vec<f64> {
    let mut out = pre_activation.to_vec();
    activation_in_place(&mut out, eta_f, bias);
    out
}

/// Saved reservoir states, one row per record.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub states: DMatrix<f64>,
    /// 1-based step index (within the run) at which each row was saved.
    pub step_indices: Vec<usize>,
}

/// An instantiated reservoir: fixed random weights plus the mutable state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReservoirMachine {
    n_nodes: usize,
    input_dim: usize,
    /// N x d input weights.
    w_in: DMatrix<f64>,
    w_r: SparseMatrix,
    state: Vec<f64>,
    params: HyperParams,
    seed: u64,
    steps: u64,
    #[serde(skip)]
    scratch: Vec<f64>,
}

impl ReservoirMachine {
    /// Draws the input and recurrent weights from `seed`.
    ///
    /// The random stream is consumed in a fixed order (input mask and normal
    /// per input entry, then recurrent topology and values), so the same seed
    /// under different `sigma`, `rho_in` or `rho_r` gives the same underlying
    /// topology with different scales and masks.
    pub fn instantiate(
        n_nodes: usize,
        input_dim: usize,
        params: &HyperParams,
        seed: u64,
    ) -> Result<Self> {
        if n_nodes == 0 || input_dim == 0 {
            return Err(Error::Parameter(format!(
                "need n_nodes >= 1 and input_dim >= 1, got {n_nodes} and {input_dim}"
            )));
        }
        params.validate(n_nodes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let std_in = params.rho_in.sqrt();
        let mut w_in = DMatrix::zeros(n_nodes, input_dim);
        for i in 0..n_nodes {
            for j in 0..input_dim {
                let mask: f64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                if mask < params.sigma {
                    w_in[(i, j)] = std_in * z;
                }
            }
        }

        let w_r = if n_nodes == 1 {
            SparseMatrix::zeros(1)
        } else {
            draw_recurrent(&mut rng, n_nodes, params.k, params.rho_r)?
        };

        Ok(Self {
            n_nodes,
            input_dim,
            w_in,
            w_r,
            state: vec![0.0; n_nodes],
            params: *params,
            seed,
            steps: 0,
            scratch: vec![0.0; n_nodes],
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn w_in(&self) -> &DMatrix<f64> {
        &self.w_in
    }

    pub fn w_r(&self) -> &SparseMatrix {
        &self.w_r
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_state(&mut self, r: &[f64]) -> Result<()> {
        if r.len() != self.n_nodes {
            return Err(Error::Shape(format!(
                "state of length {} for {} nodes",
                r.len(),
                self.n_nodes
            )));
        }
        self.state.copy_from_slice(r);
        Ok(())
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
        self.steps = 0;
    }

    /// One forward-Euler step of the node equation under input `u`.
    pub fn euler_step(&mut self, u: &[f64], dt: f64) -> Result<&[f64]> {
        if u.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "input of length {} for input dimension {}",
                u.len(),
                self.input_dim
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("dt = {dt} must be positive")));
        }
        self.scratch.resize(self.n_nodes, 0.0);
        self.w_r.mul_vec_into(&self.state, &mut self.scratch);
        for (j, &uj) in u.iter().enumerate() {
            for (p, w) in self.scratch.iter_mut().zip(self.w_in.column(j).iter()) {
                *p += w * uj;
            }
        }
        activation_in_place(&mut self.scratch, self.params.eta_f, self.params.bias);
        let rate = dt * self.params.gamma;
        for (r, f) in self.state.iter_mut().zip(&self.scratch) {
            *r += rate * (f - *r);
        }
        self.steps += 1;
        if self.state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: self.steps });
        }
        Ok(&self.state)
    }

    /// Drives the reservoir with one Euler step per input sample and hands
    /// every `save_every`-th state to `visit` together with its 1-based step
    /// index within this run.
    pub fn run_with<I, U, F>(
        &mut self,
        inputs: I,
        dt: f64,
        save_every: usize,
        mut visit: F,
    ) -> Result<usize>
    where
        I: IntoIterator<Item = U>,
        U: AsRef<[f64]>,
        F: FnMut(usize, &[f64]),
    {
        if save_every == 0 {
            return Err(Error::Parameter("save_every must be at least 1".into()));
        }
        let mut count = 0;
        for u in inputs {
            self.euler_step(u.as_ref(), dt)?;
            count += 1;
            if count % save_every == 0 {
                visit(count, &self.state);
            }
        }
        if count == 0 {
            return Err(Error::Parameter("input sequence is empty".into()));
        }
        Ok(count)
    }

    /// Like [`run_with`](Self::run_with), collecting the saved states.
    pub fn run<I, U>(&mut self, inputs: I, dt: f64, save_every: usize) -> Result<StateTrajectory>
    where
        I: IntoIterator<Item = U>,
        U: AsRef<[f64]>,
    {
        let n = self.n_nodes;
        let mut flat = Vec::new();
        let mut step_indices = Vec::new();
        self.run_with(inputs, dt, save_every, |step, r| {
            flat.extend_from_slice(r);
            step_indices.push(step);
        })?;
        Ok(StateTrajectory {
            states: DMatrix::from_row_slice(step_indices.len(), n, &flat),
            step_indices,
        })
    }
}

fn draw_recurrent(rng: &mut ChaCha8Rng, n: usize, k: usize, rho_r: f64) -> Result<SparseMatrix> {
    for _ in 0..MAX_REDRAWS {
        let mut m = SparseMatrix {
            n,
            row_ptr: Vec::with_capacity(n + 1),
            cols: Vec::with_capacity(n * k),
            vals: Vec::with_capacity(n * k),
        };
        m.row_ptr.push(0);
        for i in 0..n {
            // k distinct sources among the other n - 1 nodes
            let mut sources: Vec<usize> = rand::seq::index::sample(rng, n - 1, k)
                .into_iter()
                .map(|j| if j >= i { j + 1 } else { j })
                .collect();
            sources.sort_unstable();
            for c in sources {
                m.cols.push(c);
                m.vals.push(rng.random_range(-1.0..=1.0));
            }
            m.row_ptr.push(m.cols.len());
        }
        let radius = spectral_radius(&m.to_dense())?;
        if radius > f64::MIN_POSITIVE && radius.is_finite() {
            m.scale(rho_r / radius);
            return Ok(m);
        }
    }
    Err(Error::Parameter(format!(
        "recurrent matrix had zero spectral radius after {MAX_REDRAWS} draws"
    )))
}
