//! Per-weight importance scores.
//!
//! All three criteria share the form `S_ij = |W_ij| · a_j · c_j`:
//!
//! | criterion | `a_j`                  | `c_j`                      |
//! |-----------|------------------------|----------------------------|
//! | magnitude | 1                      | 1                          |
//! | wanda     | `√E[x_j²]`             | 1                          |
//! | cvr       | `(Var(x_j) + ε)^{1/4}` | `(Var_i(W_ij) + ε)^{−α/2}` |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calib_stats::ChannelStats;
use crate::error::{Error, Result};
use crate::matrix::{Matrix, WeightMatrix};

/// Default reweighting strength for CVR. Not validated against published
/// results; callers tuning CVR should treat it as a required knob.
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Magnitude,
    Wanda,
    Cvr,
}

impl Criterion {
    pub fn needs_stats(self) -> bool {
        !matches!(self, Criterion::Magnitude)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Magnitude => "magnitude",
            Criterion::Wanda => "wanda",
            Criterion::Cvr => "cvr",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude" => Ok(Criterion::Magnitude),
            "wanda" => Ok(Criterion::Wanda),
            "cvr" => Ok(Criterion::Cvr),
            other => Err(Error::Config(format!(
                "unknown criterion `{other}` (expected magnitude, wanda or cvr)"
            ))),
        }
    }
}

/// Which activation statistic feeds `a_j` under the CVR criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationMode {
    /// `(Var(x_j) + ε)^{1/4}`
    #[default]
    Variance,
    /// `√E[x_j²]`, the Wanda statistic.
    SecondMoment,
}

impl FromStr for ActivationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(ActivationMode::Variance),
            "second-moment" => Ok(ActivationMode::SecondMoment),
            other => Err(Error::Config(format!(
                "unknown activation factor `{other}` (expected variance or second-moment)"
            ))),
        }
    }
}

impl fmt::Display for ActivationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationMode::Variance => "variance",
            ActivationMode::SecondMoment => "second-moment",
        })
    }
}

/// Nonnegative importance values congruent to the scored weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub values: Matrix,
    pub criterion: Criterion,
    /// Reweighting strength; zero for criteria other than CVR.
    pub alpha: f64,
    pub eps: f64,
}

impl ScoreMatrix {
    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }
}

/// Population variance of each input column over the output dimension.
pub fn column_variance(weights: &WeightMatrix) -> Result<Vec<f64>> {
    let (d_out, d_in) = weights.shape();
    if d_out == 0 || d_in == 0 {
        return Err(Error::Shape("column variance of an empty matrix".into()));
    }
    let n = d_out as f64;
    let mut mean = vec![0.0; d_in];
    for i in 0..d_out {
        for (m, &w) in mean.iter_mut().zip(weights.row(i)) {
            *m += w;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d_in];
    for i in 0..d_out {
        for ((v, &w), &m) in var.iter_mut().zip(weights.row(i)).zip(&mean) {
            let d = w - m;
            *v += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    Ok(var)
}

/// `c_j = (v_j + eps)^{−alpha/2}`.
pub fn weight_calibration(variance: &[f64], alpha: f64, eps: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("eps must be finite and > 0, got {eps}")));
    }
    if alpha == 0.0 {
        return Ok(vec![1.0; variance.len()]);
    }
    let exponent = -alpha / 2.0;
    Ok(variance.iter().map(|&v| (v + eps).powf(exponent)).collect())
}

/// `S_ij = |W_ij| · a_j · c_j`.
pub fn score(
    weights: &WeightMatrix,
    activation: &[f64],
    calibration: &[f64],
    criterion: Criterion,
    alpha: f64,
    eps: f64,
) -> Result<ScoreMatrix> {
    let d_in = weights.cols();
    if activation.len() != d_in || calibration.len() != d_in {
        return Err(Error::Shape(format!(
            "factor lengths {} and {} do not match d_in {d_in}",
            activation.len(),
            calibration.len()
        )));
    }
    let column: Vec<f64> = activation.iter().zip(calibration).map(|(a, c)| a * c).collect();
    let mut values = Matrix::zeros(weights.rows(), d_in);
    for i in 0..weights.rows() {
        for ((s, &w), &k) in values.row_mut(i).iter_mut().zip(weights.row(i)).zip(&column) {
            *s = w.abs() * k;
        }
    }
    if let Some(p) = values.first_non_finite() {
        return Err(Error::NonFinite(p));
    }
    Ok(ScoreMatrix {
        values,
        criterion,
        alpha,
        eps,
    })
}

pub fn score_magnitude(weights: &WeightMatrix) -> ScoreMatrix {
    ScoreMatrix {
        values: weights.map(f64::abs),
        criterion: Criterion::Magnitude,
        alpha: 0.0,
        eps: 0.0,
    }
}

pub fn score_wanda(weights: &WeightMatrix, stats: &ChannelStats) -> Result<ScoreMatrix> {
    ensure_stats_width(weights, stats)?;
    let a = stats.wanda_factor()?;
    let ones = vec![1.0; weights.cols()];
    score(weights, &a, &ones, Criterion::Wanda, 0.0, 0.0)
}

pub fn score_cvr(
    weights: &WeightMatrix,
    stats: &ChannelStats,
    alpha: f64,
    eps: f64,
    mode: ActivationMode,
) -> Result<ScoreMatrix> {
    ensure_stats_width(weights, stats)?;
    let a = match mode {
        ActivationMode::Variance => stats.activation_factor(eps)?,
        ActivationMode::SecondMoment => stats.wanda_factor()?,
    };
    let c = weight_calibration(&column_variance(weights)?, alpha, eps)?;
    score(weights, &a, &c, Criterion::Cvr, alpha, eps)
}

fn ensure_stats_width(weights: &WeightMatrix, stats: &ChannelStats) -> Result<()> {
    if stats.d_in() != weights.cols() {
        return Err(Error::Shape(format!(
            "stats cover {} channels, weights have d_in {}",
            stats.d_in(),
            weights.cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_of_simple_columns() {
        let w = Matrix::from_rows(&[[2.0, 1.0], [2.0, 3.0], [2.0, 2.0]]);
        let v = column_variance(&w).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 2.0 / 3.0).abs() < 1e-15);
        let w = Matrix::from_rows(&[[1.0], [3.0]]);
        assert_eq!(column_variance(&w).unwrap(), vec![1.0]);
        assert!(column_variance(&Matrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn calibration_values() {
        assert_eq!(
            weight_calibration(&[0.0, 5.0, 1e6], 0.0, 1e-8).unwrap(),
            vec![1.0; 3]
        );
        assert_eq!(weight_calibration(&[3.0], 2.0, 1.0).unwrap(), vec![0.25]);
        assert!(weight_calibration(&[1.0], -1.0, 1e-8).is_err());
        assert!(weight_calibration(&[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn score_products() {
        let w = Matrix::from_rows(&[[-2.0, 1.0]]);
        let s = score(&w, &[1.0, 3.0], &[1.0, 1.0], Criterion::Cvr, 0.0, 1e-8).unwrap();
        assert_eq!(s.values.row(0), &[2.0, 3.0]);
        let s = score(&w, &[1.0, 1.0], &[1.0, 1.0], Criterion::Magnitude, 0.0, 0.0).unwrap();
        assert_eq!(s.values, score_magnitude(&w).values);
        assert!(score(&w, &[1.0], &[1.0, 1.0], Criterion::Cvr, 0.0, 0.0).is_err());
    }

    #[test]
    fn magnitude_scores() {
        let w = Matrix::from_rows(&[[-1.0, 0.5]]);
        assert_eq!(score_magnitude(&w).values.row(0), &[1.0, 0.5]);
        assert_eq!(score_magnitude(&Matrix::zeros(3, 4)).values, Matrix::zeros(3, 4));
    }

    #[test]
    fn stats_width_is_checked() {
        let w = Matrix::zeros(2, 3);
        let stats = ChannelStats::from_batch(&Matrix::zeros(4, 2)).unwrap();
        assert!(matches!(score_wanda(&w, &stats), Err(Error::Shape(_))));
        assert!(score_cvr(&w, &stats, 0.5, 1e-8, ActivationMode::Variance).is_err());
    }

    #[test]
    fn criterion_parsing() {
        for c in [Criterion::Magnitude, Criterion::Wanda, Criterion::Cvr] {
            assert_eq!(c.to_string().parse::<Criterion>().unwrap(), c);
        }
        assert!("sparsegpt".parse::<Criterion>().is_err());
        assert!(!Criterion::Magnitude.needs_stats());
        assert!(Criterion::Cvr.needs_stats());
    }
}
