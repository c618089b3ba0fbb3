//! Brute-force reference implementations.
//!
//! Nothing here calls into the optimized paths: every routine works on plain
//! slices and nested `Vec`s with literal loops and full sorts.

#![allow(dead_code, clippy::needless_range_loop)]

use varprune::{EnergyConfig, Matrix, PruneMask};

/// An oracle value and its deviation from the optimized path.
#[derive(Debug, Clone)]
pub struct OracleResult<T> {
    pub value: T,
    pub max_abs_dev: f64,
}

pub fn compare(oracle: Vec<f64>, optimized: &[f64]) -> OracleResult<Vec<f64>> {
    assert_eq!(oracle.len(), optimized.len(), "length mismatch");
    let max_abs_dev = oracle
        .iter()
        .zip(optimized)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    OracleResult {
        value: oracle,
        max_abs_dev,
    }
}

/// Mean first, then the mean of squared deviations.
pub fn oracle_variance(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len() as f64;
    let mut mean = 0.0;
    for &x in samples {
        mean += x;
    }
    mean /= n;
    let mut acc = 0.0;
    for &x in samples {
        acc += (x - mean) * (x - mean);
    }
    Some(acc / n)
}

pub fn oracle_mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// `√(mean of squares)`.
pub fn oracle_rms(samples: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &x in samples {
        acc += x * x;
    }
    (acc / samples.len() as f64).sqrt()
}

/// Stable descending sort, keep the first `keep` (lower index wins ties).
pub fn oracle_topk_mask(scores: &[f64], keep: usize) -> Vec<u8> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut out = vec![0u8; scores.len()];
    for &i in idx.iter().take(keep) {
        out[i] = 1;
    }
    out
}

/// Stable ascending sort, prune the first `prune` (lower index pruned first
/// among ties).
pub fn oracle_prune_lowest(scores: &[f64], prune: usize) -> Vec<u8> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut out = vec![1u8; scores.len()];
    for &i in idx.iter().take(prune) {
        out[i] = 0;
    }
    out
}

/// Every ordering of `items`, duplicates included when values repeat.
pub fn permutations(items: &[f64]) -> Vec<Vec<f64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
    Matrix::from_rows(rows)
}

fn clamp(s: f64, cfg: &EnergyConfig) -> f64 {
    if s < cfg.clamp_lo {
        cfg.clamp_lo
    } else if s > cfg.clamp_hi {
        cfg.clamp_hi
    } else {
        s
    }
}

/// Column step evaluated term by term. Returns `(pre_remask, scales)`.
pub fn oracle_column_step(w: &[Vec<f64>], wt: &[Vec<f64>], cfg: &EnergyConfig) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d_out = w.len();
    let d_in = w[0].len();
    let mut out = wt.to_vec();
    let mut scales = Vec::new();
    for j in 0..d_in {
        let mut mu = 0.0;
        for row in w.iter() {
            mu += row[j];
        }
        mu /= d_out as f64;
        let mut e_orig = 0.0;
        let mut e_pruned = 0.0;
        for i in 0..d_out {
            e_orig += (w[i][j] - mu) * (w[i][j] - mu);
            e_pruned += (wt[i][j] - mu) * (wt[i][j] - mu);
        }
        let s = clamp((e_orig / (e_pruned + cfg.eps)).sqrt(), cfg);
        scales.push(s);
        for row in out.iter_mut() {
            row[j] = (row[j] - mu) * s + mu;
        }
    }
    (out, scales)
}

/// Row step evaluated term by term. Returns `(pre_remask, scales)`.
pub fn oracle_row_step(w: &[Vec<f64>], wt: &[Vec<f64>], cfg: &EnergyConfig) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d_in = w[0].len();
    let mut out = wt.to_vec();
    let mut scales = Vec::new();
    for i in 0..w.len() {
        let mut mu = 0.0;
        for j in 0..d_in {
            mu += w[i][j];
        }
        mu /= d_in as f64;
        let mut e_orig = 0.0;
        let mut e_pruned = 0.0;
        for j in 0..d_in {
            e_orig += (w[i][j] - mu) * (w[i][j] - mu);
            e_pruned += (wt[i][j] - mu) * (wt[i][j] - mu);
        }
        let s = clamp((e_orig / (e_pruned + cfg.eps)).sqrt(), cfg);
        scales.push(s);
        for j in 0..d_in {
            out[i][j] = (out[i][j] - mu) * s + mu;
        }
    }
    (out, scales)
}

fn remask(w: &mut [Vec<f64>], mask: &PruneMask) {
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if !mask.keep(i, j) {
                *v = 0.0;
            }
        }
    }
}

/// Mask, column step, re-mask, row step, re-mask.
pub fn oracle_energy_correct(original: &Matrix, mask: &PruneMask, cfg: &EnergyConfig) -> Matrix {
    assert_eq!(original.shape(), mask.shape(), "shape mismatch");
    let w = to_rows(original);
    let mut wt = w.clone();
    remask(&mut wt, mask);
    let (mut wt, _) = oracle_column_step(&w, &wt, cfg);
    remask(&mut wt, mask);
    let (mut wt, _) = oracle_row_step(&w, &wt, cfg);
    remask(&mut wt, mask);
    from_rows(&wt)
}

/// Centered energy of column `j` of `m` about `center`.
pub fn column_energy(m: &[Vec<f64>], j: usize, center: f64) -> f64 {
    m.iter().map(|r| (r[j] - center) * (r[j] - center)).sum()
}

pub fn row_energy(row: &[f64], center: f64) -> f64 {
    row.iter().map(|v| (v - center) * (v - center)).sum()
}

pub fn column_mean(m: &[Vec<f64>], j: usize) -> f64 {
    m.iter().map(|r| r[j]).sum::<f64>() / m.len() as f64
}

/// Mean over columns of `|E_cand(j) − E_orig(j)| / E_orig(j)`, energies about
/// the original column means.
pub fn mean_relative_column_energy_dev(original: &Matrix, candidate: &Matrix) -> f64 {
    let w = to_rows(original);
    let c = to_rows(candidate);
    let mut total = 0.0;
    let mut n = 0;
    for j in 0..original.cols() {
        let mu = column_mean(&w, j);
        let eo = column_energy(&w, j, mu);
        if eo > 0.0 {
            total += (column_energy(&c, j, mu) - eo).abs() / eo;
            n += 1;
        }
    }
    total / n as f64
}
