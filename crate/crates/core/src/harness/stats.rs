//! Summary statistics, rank correlation and scaling fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Linearly interpolated quantile of sorted data (type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Fraction of values exactly equal to zero.
    pub zero_fraction: f64,
}

impl Summary {
    /// NaN statistics for an empty slice.
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let count = v.len();
        let nan_if_empty = |x: f64| if count == 0 { f64::NAN } else { x };
        Self {
            count,
            mean: nan_if_empty(v.iter().sum::<f64>() / count as f64),
            min: nan_if_empty(v.first().copied().unwrap_or(f64::NAN)),
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: nan_if_empty(v.last().copied().unwrap_or(f64::NAN)),
            zero_fraction: nan_if_empty(
                v.iter().filter(|x| **x == 0.0).count() as f64 / count as f64,
            ),
        }
    }
}

/// Average (1-based) ranks, ties sharing the mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[order[k]] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spearman {
    pub rho: f64,
    pub n: usize,
    pub p_two_sided: f64,
    /// One-sided p-value against a decreasing trend.
    pub p_decreasing: f64,
}

/// Spearman rank correlation with the t approximation for the p-values.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} x values for {} y values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Parameter("rank correlation needs at least 3 points".into()));
    }
    let rho = pearson(&ranks(x), &ranks(y));
    if !rho.is_finite() {
        return Err(Error::Domain("rank correlation undefined for constant data".into()));
    }
    let n = x.len();
    let df = (n - 2) as f64;
    let (p_two_sided, p_decreasing) = if rho.abs() >= 1.0 {
        (0.0, if rho < 0.0 { 0.0 } else { 1.0 })
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Domain(e.to_string()))?;
        (2.0 * dist.cdf(-t.abs()), dist.cdf(t))
    };
    Ok(Spearman {
        rho,
        n,
        p_two_sided,
        p_decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingModel {
    /// `N = slope * n + intercept`.
    Linear,
    /// `ln N = slope * n + intercept`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination on the fitted scale.
    pub r_squared: f64,
}

/// Least-squares fit of `N` (or `ln N`) against `n`.
pub fn fit_scaling(points: &[(f64, f64)], model: ScalingModel) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Parameter(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = match model {
        ScalingModel::Linear => points.iter().map(|p| p.1).collect(),
        ScalingModel::Exponential => {
            if points.iter().any(|p| !(p.1 > 0.0)) {
                return Err(Error::Domain("exponential fit needs positive N".into()));
            }
            points.iter().map(|p| p.1.ln()).collect()
        }
    };
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("scaling fit needs at least two distinct n".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScalingFit {
        model,
        slope,
        intercept,
        r_squared,
    })
}
