//! Output layer: the partially squared feature map, ridge training and
//! linear prediction.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::block_len;

/// Squares the first `ceil(eta_r * N)` entries in place.
pub fn feature_map_in_place(state: &mut [f64], eta_r: f64) {
    let squared = block_len(eta_r, state.len());
    for r in &mut state[..squared] {
        *r *= *r;
    }
}

pub fn feature_map(state: &[f64], eta_r: f64) -> Vec<f64> {
    let mut g = state.to_vec();
    feature_map_in_place(&mut g, eta_r);
    g
}

/// Feature map applied to every row of an `S x N` state matrix.
pub fn feature_rows(states: &DMatrix<f64>, eta_r: f64) -> DMatrix<f64> {
    let mut g = states.clone();
    let squared = block_len(eta_r, states.ncols());
    for j in 0..squared {
        g.column_mut(j).iter_mut().for_each(|v| *v *= *v);
    }
    g
}

/// Saved feature vectors aligned to the integration steps they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrajectory {
    pub features: DMatrix<f64>,
    pub step_indices: Vec<usize>,
    pub word_ids: Option<Vec<usize>>,
}

impl FeatureTrajectory {
    pub fn new(
        features: DMatrix<f64>,
        step_indices: Vec<usize>,
        word_ids: Option<Vec<usize>>,
    ) -> Result<Self> {
        let s = features.nrows();
        if s == 0 {
            return Err(Error::Shape("feature trajectory has no samples".into()));
        }
        if step_indices.len() != s || word_ids.as_ref().is_some_and(|w| w.len() != s) {
            return Err(Error::Shape(format!(
                "{s} feature rows but {} step indices",
                step_indices.len()
            )));
        }
        if step_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("step indices must be strictly increasing".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite feature value".into()));
        }
        Ok(Self {
            features,
            step_indices,
            word_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }
}

/// Trained output matrix (`m x N`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights {
    pub w_out: DMatrix<f64>,
    pub alpha_used: f64,
    pub training_sample_count: usize,
}

impl ReadoutWeights {
    pub fn outputs(&self) -> usize {
        self.w_out.nrows()
    }

    pub fn features(&self) -> usize {
        self.w_out.ncols()
    }

    /// `W_out g` for a single feature vector.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        self.w_out
            .row_iter()
            .map(|row| row.iter().zip(g).map(|(w, x)| w * x).sum())
            .collect()
    }
}

/// Ridge regression without intercept:
/// minimizes `|Y - G W^T|^2 + alpha |W|^2` through the regularized normal
/// equations `(G^T G + alpha I) W^T = G^T Y` and a Cholesky factorization.
pub fn train_ridge(
    features: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    alpha: f64,
) -> Result<ReadoutWeights> {
    let (s, n) = features.shape();
    if s == 0 || n == 0 {
        return Err(Error::Shape("ridge regression needs at least one sample and feature".into()));
    }
    if targets.nrows() != s {
        return Err(Error::Shape(format!(
            "{s} feature rows but {} target rows",
            targets.nrows()
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha = {alpha} must be nonnegative")));
    }
    let gt = features.transpose();
    let mut gram = &gt * features;
    for i in 0..n {
        gram[(i, i)] += alpha;
    }
    let rhs = &gt * targets;

    let chol = Cholesky::new(gram).ok_or_else(|| {
        Error::Solver("normal equations are not positive definite; use alpha > 0".into())
    })?;
    if alpha == 0.0 {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
        if lo * lo <= hi * hi * n as f64 * f64::EPSILON {
            return Err(Error::Solver(
                "normal equations are numerically singular; use alpha > 0".into(),
            ));
        }
    }
    let w = chol.solve(&rhs);
    Ok(ReadoutWeights {
        w_out: w.transpose(),
        alpha_used: alpha,
        training_sample_count: s,
    })
}

/// Row-wise `v = W_out g`.
pub fn predict(weights: &ReadoutWeights, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if features.ncols() != weights.features() {
        return Err(Error::Shape(format!(
            "{} feature columns for weights expecting {}",
            features.ncols(),
            weights.features()
        )));
    }
    Ok(features * weights.w_out.transpose())
}
