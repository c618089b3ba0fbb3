//! Closed-form post-pruning energy compensation.
//!
//! For each column `j` the original mean `μ_j` anchors a rescaling of the
//! pruned column so that its centered energy about `μ_j` matches the original
//! one:
//!
//! ```text
//! E_orig(j)   = Σ_i (W_ij − μ_j)²
//! E_pruned(j) = Σ_i (W̃_ij − μ_j)²
//! s_j         = clamp(√(E_orig(j) / (E_pruned(j) + ε)), lo, hi)
//! W̃_ij       ← (W̃_ij − μ_j)·s_j + μ_j,  then re-masked
//! ```
//!
//! The row step repeats this along the output dimension on the
//! column-corrected matrix, with `μ` and `E_orig` still taken from the
//! original weights. Column sums run top to bottom and row sums in eight
//! fixed lanes, so results are bit-reproducible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::mask_in_place;
use crate::matrix::{PruneMask, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    pub eps: f64,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            clamp_lo: 0.25,
            clamp_hi: 4.0,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("ec eps must be > 0, got {}", self.eps)));
        }
        if !(self.clamp_lo > 0.0 && self.clamp_lo <= 1.0 && self.clamp_hi >= 1.0 && self.clamp_hi.is_finite())
        {
            return Err(Error::Config(format!(
                "clamp range needs 0 < lo <= 1 <= hi, got [{}, {}]",
                self.clamp_lo, self.clamp_hi
            )));
        }
        Ok(())
    }

    fn scale(&self, e_orig: f64, e_pruned: f64) -> (f64, bool) {
        let s = (e_orig / (e_pruned + self.eps)).sqrt();
        if s < self.clamp_lo {
            (self.clamp_lo, true)
        } else if s > self.clamp_hi {
            (self.clamp_hi, true)
        } else {
            (s, false)
        }
    }
}

/// Which correction steps to run after masking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EcMode {
    #[default]
    Off,
    /// Column step only.
    Col,
    /// Column step followed by the row step.
    On,
}

impl FromStr for EcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" | "false" | "0" => Ok(EcMode::Off),
            "col" | "column" => Ok(EcMode::Col),
            "on" | "true" | "1" | "full" => Ok(EcMode::On),
            other => Err(Error::Config(format!(
                "unknown ec mode `{other}` (off, col or on)"
            ))),
        }
    }
}

impl fmt::Display for EcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EcMode::Off => "off",
            EcMode::Col => "col",
            EcMode::On => "on",
        })
    }
}

/// Scales and fidelity figures from one compensation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub col_scales: Vec<f64>,
    /// Empty when the row step did not run.
    pub row_scales: Vec<f64>,
    pub clamped_cols: usize,
    pub clamped_rows: usize,
    /// Mean relative column-energy deviation of `M ⊙ W` from `W`.
    pub col_energy_dev_before: f64,
    /// Same, measured on the compensated output.
    pub col_energy_dev_after: f64,
    pub row_energy_dev_before: f64,
    pub row_energy_dev_after: f64,
}

impl CorrectionReport {
    pub fn clamped(&self) -> usize {
        self.clamped_cols + self.clamped_rows
    }
}

pub fn column_means(w: &WeightMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; w.cols()];
    for i in 0..w.rows() {
        for (m, &v) in mean.iter_mut().zip(w.row(i)) {
            *m += v;
        }
    }
    let n = w.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// `Σ_i (W_ij − center_j)²` for each column.
pub fn column_energies(w: &WeightMatrix, center: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; w.cols()];
    for i in 0..w.rows() {
        for ((acc, &v), &c) in e.iter_mut().zip(w.row(i)).zip(center) {
            let d = v - c;
            *acc += d * d;
        }
    }
    e
}

const LANES: usize = 8;

/// Sums `f(x)` in a fixed order: eight strided partial sums combined
/// pairwise, then the tail. Deterministic, and free of the single serial
/// dependency chain that makes a plain left-to-right sum latency bound.
fn lane_sum(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = [0.0; LANES];
    let chunks = xs.chunks_exact(LANES);
    let tail = chunks.remainder();
    for c in chunks {
        for (a, &x) in acc.iter_mut().zip(c) {
            *a += f(x);
        }
    }
    let mut total = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for &x in tail {
        total += f(x);
    }
    total
}

fn row_mean(row: &[f64]) -> f64 {
    lane_sum(row, |v| v) / row.len() as f64
}

fn row_energy(row: &[f64], center: f64) -> f64 {
    lane_sum(row, |v| (v - center) * (v - center))
}

pub fn row_means(w: &WeightMatrix) -> Vec<f64> {
    (0..w.rows()).map(|i| row_mean(w.row(i))).collect()
}

/// `Σ_j (W_ij − center_i)²` for each row.
pub fn row_energies(w: &WeightMatrix, center: &[f64]) -> Vec<f64> {
    (0..w.rows()).map(|i| row_energy(w.row(i), center[i])).collect()
}

/// Mean of `|E(k) − E_orig(k)| / E_orig(k)` over columns (`by_columns`) or rows,
/// with energies centered on the original means. Lines whose original energy
/// is zero are skipped.
pub fn relative_energy_deviation(original: &WeightMatrix, candidate: &WeightMatrix, by_columns: bool) -> f64 {
    let (orig, cand) = if by_columns {
        let mu = column_means(original);
        (column_energies(original, &mu), column_energies(candidate, &mu))
    } else {
        let mu = row_means(original);
        (row_energies(original, &mu), row_energies(candidate, &mu))
    };
    mean_relative_dev(&orig, &cand)
}

fn check_shapes(original: &WeightMatrix, pruned: &WeightMatrix, mask: Option<&PruneMask>) -> Result<()> {
    original.ensure_same_shape(pruned.shape(), "pruned weights")?;
    if let Some(mask) = mask {
        original.ensure_same_shape(mask.shape(), "mask")?;
    }
    if original.rows() == 0 || original.cols() == 0 {
        return Err(Error::Shape("energy compensation of an empty matrix".into()));
    }
    Ok(())
}

/// Column transform without re-masking. Returns the transformed matrix, the
/// clamped scales and the number of clamped columns.
pub fn rescale_columns(
    original: &WeightMatrix,
    pruned: &WeightMatrix,
    cfg: &EnergyConfig,
) -> Result<(WeightMatrix, Vec<f64>, usize)> {
    check_shapes(original, pruned, None)?;
    cfg.validate()?;
    let mu = column_means(original);
    let e_orig = column_energies(original, &mu);
    let e_pruned = column_energies(pruned, &mu);
    let mut clamped = 0;
    let scales: Vec<f64> = e_orig
        .iter()
        .zip(&e_pruned)
        .map(|(&o, &p)| {
            let (s, c) = cfg.scale(o, p);
            clamped += c as usize;
            s
        })
        .collect();
    let mut out = pruned.clone();
    for i in 0..out.rows() {
        for ((w, &m), &s) in out.row_mut(i).iter_mut().zip(&mu).zip(&scales) {
            *w = (*w - m) * s + m;
        }
    }
    Ok((out, scales, clamped))
}

/// Row transform without re-masking; the row analogue of [`rescale_columns`].
pub fn rescale_rows(
    original: &WeightMatrix,
    pruned: &WeightMatrix,
    cfg: &EnergyConfig,
) -> Result<(WeightMatrix, Vec<f64>, usize)> {
    check_shapes(original, pruned, None)?;
    cfg.validate()?;
    let mu = row_means(original);
    let e_orig = row_energies(original, &mu);
    let e_pruned = row_energies(pruned, &mu);
    let mut clamped = 0;
    let mut out = pruned.clone();
    let mut scales = Vec::with_capacity(out.rows());
    for i in 0..out.rows() {
        let (s, c) = cfg.scale(e_orig[i], e_pruned[i]);
        clamped += c as usize;
        scales.push(s);
        let m = mu[i];
        for w in out.row_mut(i) {
            *w = (*w - m) * s + m;
        }
    }
    Ok((out, scales, clamped))
}

/// Column correction followed by mask re-application.
pub fn correct_columns(
    original: &WeightMatrix,
    pruned: &WeightMatrix,
    mask: &PruneMask,
    cfg: &EnergyConfig,
) -> Result<(WeightMatrix, Vec<f64>)> {
    check_shapes(original, pruned, Some(mask))?;
    let (mut out, scales, _) = rescale_columns(original, pruned, cfg)?;
    mask_in_place(&mut out, mask);
    Ok((out, scales))
}

/// Row correction followed by mask re-application.
pub fn correct_rows(
    original: &WeightMatrix,
    pruned: &WeightMatrix,
    mask: &PruneMask,
    cfg: &EnergyConfig,
) -> Result<(WeightMatrix, Vec<f64>)> {
    check_shapes(original, pruned, Some(mask))?;
    let (mut out, scales, _) = rescale_rows(original, pruned, cfg)?;
    mask_in_place(&mut out, mask);
    Ok((out, scales))
}

/// Masks `original`, then applies the column step and the row step.
pub fn energy_compensate(
    original: &WeightMatrix,
    mask: &PruneMask,
    cfg: &EnergyConfig,
) -> Result<(WeightMatrix, CorrectionReport)> {
    compensate(original, mask, cfg, EcMode::On)
}

/// Masks `original` and runs the steps selected by `mode`. With
/// [`EcMode::Off`] this is plain masking with an all-ones scale report.
///
/// Fused equivalent of [`apply_mask`](crate::masking::apply_mask), [`correct_columns`] and
/// [`correct_rows`]: the original's means and energies are computed once and
/// every later pass works in place on a single output buffer while
/// accumulating the energies the next step (or the report) needs. Arithmetic
/// and summation order match the unfused functions exactly.
pub fn compensate(
    original: &WeightMatrix,
    mask: &PruneMask,
    cfg: &EnergyConfig,
    mode: EcMode,
) -> Result<(WeightMatrix, CorrectionReport)> {
    let (rows, cols) = original.shape();
    compensate_into(original, mask, cfg, mode, WeightMatrix::zeros(rows, cols))
}

/// [`compensate`] writing into `buffer`, whose contents are ignored. Lets a
/// caller recycle a dead matrix of the same shape (such as the score matrix)
/// instead of faulting in a fresh allocation.
pub fn compensate_into(
    original: &WeightMatrix,
    mask: &PruneMask,
    cfg: &EnergyConfig,
    mode: EcMode,
    buffer: WeightMatrix,
) -> Result<(WeightMatrix, CorrectionReport)> {
    cfg.validate()?;
    check_shapes(original, original, Some(mask))?;
    original.ensure_same_shape(buffer.shape(), "output buffer")?;
    let (rows, cols) = original.shape();

    // Pass 1: row statistics while each row is hot, column sums alongside.
    let mut mu_c = vec![0.0; cols];
    let mut mu_r = Vec::with_capacity(rows);
    let mut eo_r = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = original.row(i);
        for (m, &v) in mu_c.iter_mut().zip(row) {
            *m += v;
        }
        let m = row_mean(row);
        mu_r.push(m);
        eo_r.push(row_energy(row, m));
    }
    mu_c.iter_mut().for_each(|m| *m /= rows as f64);

    // Pass 2: masking, with original and masked energies.
    let mut out = buffer;
    let mut eo_c = vec![0.0; cols];
    let mut ec = vec![0.0; cols];
    let mut er = vec![0.0; rows];
    for i in 0..rows {
        let src = original.row(i);
        for (((&v, &m), e), (w, &b)) in src
            .iter()
            .zip(&mu_c)
            .zip(eo_c.iter_mut())
            .zip(out.row_mut(i).iter_mut().zip(mask.row(i)))
        {
            let d = v - m;
            *e += d * d;
            *w = if b != 0 { v } else { 0.0 };
        }
        accumulate(out.row(i), &mu_c, mu_r[i], &mut ec, &mut er[i]);
    }
    let col_before = mean_relative_dev(&eo_c, &ec);
    let row_before = mean_relative_dev(&eo_r, &er);

    let mut col_scales = vec![1.0; cols];
    let mut clamped_cols = 0;
    let mut row_scales = Vec::new();
    let mut clamped_rows = 0;
    if mode != EcMode::Off {
        for ((s, &o), &p) in col_scales.iter_mut().zip(&eo_c).zip(&ec) {
            let (v, c) = cfg.scale(o, p);
            *s = v;
            clamped_cols += c as usize;
        }
        if mode == EcMode::On {
            row_scales.reserve(rows);
        }
        // Pass 3: both steps row by row. The row step of row `i` depends only
        // on that row after the column step.
        ec.iter_mut().for_each(|e| *e = 0.0);
        for i in 0..rows {
            let row = out.row_mut(i);
            for (((w, &m), &s), &b) in row.iter_mut().zip(&mu_c).zip(&col_scales).zip(mask.row(i)) {
                let v = (*w - m) * s + m;
                *w = if b == 0 { 0.0 } else { v };
            }
            let m = mu_r[i];
            if mode == EcMode::On {
                let (s, c) = cfg.scale(eo_r[i], row_energy(row, m));
                clamped_rows += c as usize;
                row_scales.push(s);
                for (w, &b) in row.iter_mut().zip(mask.row(i)) {
                    let v = (*w - m) * s + m;
                    *w = if b == 0 { 0.0 } else { v };
                }
            }
            accumulate(row, &mu_c, m, &mut ec, &mut er[i]);
        }
    }

    let report = CorrectionReport {
        col_scales,
        row_scales,
        clamped_cols,
        clamped_rows,
        col_energy_dev_before: col_before,
        col_energy_dev_after: mean_relative_dev(&eo_c, &ec),
        row_energy_dev_before: row_before,
        row_energy_dev_after: mean_relative_dev(&eo_r, &er),
    };
    Ok((out, report))
}

/// Adds one row's contribution to the column energies about `mu_c` and sets
/// its row energy about `mu_r`.
fn accumulate(row: &[f64], mu_c: &[f64], mu_r: f64, col_e: &mut [f64], row_e: &mut f64) {
    for ((&v, &m), e) in row.iter().zip(mu_c).zip(col_e.iter_mut()) {
        let d = v - m;
        *e += d * d;
    }
    *row_e = row_energy(row, mu_r);
}

fn mean_relative_dev(orig: &[f64], cand: &[f64]) -> f64 {
    let (sum, n) = orig
        .iter()
        .zip(cand)
        .filter(|(o, _)| **o > 0.0)
        .fold((0.0, 0usize), |(s, n), (o, c)| (s + (c - o).abs() / o, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
