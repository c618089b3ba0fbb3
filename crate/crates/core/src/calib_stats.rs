//! Streaming per-channel moments of calibration activations.
//!
//! Each row of an activation batch is one sample; each column is one input
//! channel. Batches are folded in with the pairwise (Chan et al.) combination
//! of count, mean and sum of squared deviations, which avoids the
//! cancellation of the naive `E[x²] − E[x]²` form on long streams.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default floor added to activation variances before the fourth root.
pub const DEFAULT_ACT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl ChannelStats {
    /// Empty statistics for `d_in` channels.
    pub fn new(d_in: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; d_in],
            m2: vec![0.0; d_in],
        }
    }

    /// Rebuilds statistics from stored moments. `m2` is the per-channel sum of
    /// squared deviations from the mean.
    pub fn from_parts(count: u64, mean: Vec<f64>, m2: Vec<f64>) -> Result<Self> {
        if mean.len() != m2.len() {
            return Err(Error::Shape(format!(
                "mean has {} channels, m2 has {}",
                mean.len(),
                m2.len()
            )));
        }
        if let Some(p) = mean.iter().chain(&m2).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        if m2.iter().any(|&v| v < 0.0) {
            return Err(Error::Shape("negative sum of squared deviations".into()));
        }
        Ok(Self { count, mean, m2 })
    }

    pub fn from_batch(batch: &Matrix) -> Result<Self> {
        let mut s = Self::new(batch.cols());
        s.update(batch)?;
        Ok(s)
    }

    pub fn d_in(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Per-channel sum of squared deviations from the running mean.
    pub fn m2(&self) -> &[f64] {
        &self.m2
    }

    /// Population variance per channel, or an error when no samples were seen.
    pub fn variance(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::EmptyStats);
        }
        let n = self.count as f64;
        Ok(self.m2.iter().map(|&m2| m2 / n).collect())
    }

    /// Folds a batch of samples `(rows = samples, cols = d_in)` into the stats.
    pub fn update(&mut self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.d_in() {
            return Err(Error::Shape(format!(
                "batch has {} channels, stats track {}",
                batch.cols(),
                self.d_in()
            )));
        }
        if let Some(p) = batch.first_non_finite() {
            return Err(Error::NonFinite(p));
        }
        if batch.rows() == 0 {
            return Ok(());
        }
        let part = batch_moments(batch);
        self.merge_in(&part);
        Ok(())
    }

    /// Combines two independent accumulations into the stats of the
    /// concatenated stream.
    pub fn merge(&self, other: &ChannelStats) -> Result<ChannelStats> {
        if self.d_in() != other.d_in() {
            return Err(Error::Shape(format!(
                "cannot merge stats over {} and {} channels",
                self.d_in(),
                other.d_in()
            )));
        }
        let mut out = self.clone();
        out.merge_in(other);
        Ok(out)
    }

    fn merge_in(&mut self, other: &ChannelStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for j in 0..self.mean.len() {
            let delta = other.mean[j] - self.mean[j];
            self.mean[j] += delta * (nb / n);
            self.m2[j] += other.m2[j] + delta * delta * (na * nb / n);
        }
        self.count += other.count;
    }

    /// `a_j = (Var(x_j) + eps)^{1/4}`, the variance-based activation factor.
    pub fn activation_factor(&self, eps: f64) -> Result<Vec<f64>> {
        Ok(self
            .variance()?
            .into_iter()
            .map(|v| (v + eps).sqrt().sqrt())
            .collect())
    }

    /// `√E[x_j²]`, the second-moment activation statistic used by Wanda.
    pub fn wanda_factor(&self) -> Result<Vec<f64>> {
        Ok(self
            .variance()?
            .into_iter()
            .zip(&self.mean)
            .map(|(v, m)| (m * m + v).sqrt())
            .collect())
    }
}

/// Two-pass count/mean/m2 for a single batch. Rows are visited in order so
/// the result is independent of how the caller splits its stream into
/// batches of a fixed layout.
fn batch_moments(batch: &Matrix) -> ChannelStats {
    let d = batch.cols();
    let n = batch.rows() as f64;
    let mut mean = vec![0.0; d];
    for i in 0..batch.rows() {
        for (m, &x) in mean.iter_mut().zip(batch.row(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut m2 = vec![0.0; d];
    for i in 0..batch.rows() {
        for ((acc, &x), &m) in m2.iter_mut().zip(batch.row(i)).zip(&mean) {
            let dx = x - m;
            *acc += dx * dx;
        }
    }
    ChannelStats {
        count: batch.rows() as u64,
        mean,
        m2,
    }
}
