//! Mask construction from score matrices and mask application.
//!
//! Tie-breaks are fixed so masks are reproducible: under unstructured
//! selection the lower column index is pruned first among equal scores, under
//! n:m selection the lower column index is kept first.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{PruneMask, WeightMatrix};
use crate::scoring::ScoreMatrix;

/// Target sparsity pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SparsitySpec {
    /// Fraction of weights pruned per comparison group, in `[0, 1)`.
    Unstructured { ratio: f64 },
    /// Keep `n` of every aligned group of `m` consecutive input weights.
    Structured { n: usize, m: usize },
}

impl SparsitySpec {
    pub fn unstructured(ratio: f64) -> Result<Self> {
        let s = SparsitySpec::Unstructured { ratio };
        s.validate()?;
        Ok(s)
    }

    pub fn structured(n: usize, m: usize) -> Result<Self> {
        let s = SparsitySpec::Structured { n, m };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SparsitySpec::Unstructured { ratio } if !(0.0..1.0).contains(&ratio) => Err(Error::Config(
                format!("sparsity ratio must lie in [0, 1), got {ratio}"),
            )),
            SparsitySpec::Structured { n, m } if n == 0 || n > m => Err(Error::Config(format!(
                "n:m pattern needs 1 <= n <= m, got {n}:{m}"
            ))),
            _ => Ok(()),
        }
    }

    /// Nominal fraction of pruned weights.
    pub fn target(&self) -> f64 {
        match *self {
            SparsitySpec::Unstructured { ratio } => ratio,
            SparsitySpec::Structured { n, m } => 1.0 - n as f64 / m as f64,
        }
    }
}

impl fmt::Display for SparsitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparsitySpec::Unstructured { ratio } => write!(f, "{ratio}"),
            SparsitySpec::Structured { n, m } => write!(f, "{n}:{m}"),
        }
    }
}

/// Parses `0.5` as an unstructured ratio and `2:4` as an n:m pattern.
impl FromStr for SparsitySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse sparsity `{s}`"));
        match s.split_once(':') {
            Some((n, m)) => {
                let n = n.trim().parse().map_err(|_| bad())?;
                let m = m.trim().parse().map_err(|_| bad())?;
                SparsitySpec::structured(n, m)
            }
            None => SparsitySpec::unstructured(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

/// Comparison group for unstructured selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskGroup {
    /// Rank scores within each output row.
    #[default]
    Row,
    /// Rank all scores of the layer against a single threshold.
    Layer,
}

impl FromStr for MaskGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" => Ok(MaskGroup::Row),
            "layer" => Ok(MaskGroup::Layer),
            other => Err(Error::Config(format!(
                "unknown mask group `{other}` (row or layer)"
            ))),
        }
    }
}

impl fmt::Display for MaskGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskGroup::Row => "row",
            MaskGroup::Layer => "layer",
        })
    }
}

/// Number of weights pruned from a group of `len` at `ratio`: `⌊ratio·len⌋`.
///
/// The product is nudged by 1e-9 before flooring so that ratios such as 0.29
/// at `len = 100` count 29 rather than falling to 28 through rounding.
pub fn pruned_count(ratio: f64, len: usize) -> usize {
    let k = (ratio * len as f64 + 1e-9).floor() as usize;
    k.min(len)
}

/// Number of entries kept in an n:m group of actual size `len` (tail groups
/// are shorter than `m`): `⌈n·len/m⌉`.
pub fn kept_in_group(n: usize, m: usize, len: usize) -> usize {
    if len == m {
        n
    } else {
        (n * len).div_ceil(m)
    }
}

#[inline]
fn prune_order(scores: &[f64], a: u32, b: u32) -> Ordering {
    scores[a as usize].total_cmp(&scores[b as usize]).then(a.cmp(&b))
}

/// Zeroes the `⌊ratio·d_in⌋` lowest-scoring entries of every row.
pub fn build_mask_unstructured(scores: &ScoreMatrix, ratio: f64) -> Result<PruneMask> {
    SparsitySpec::unstructured(ratio)?;
    let (rows, cols) = scores.shape();
    let k = pruned_count(ratio, cols);
    let mut mask = PruneMask::ones(rows, cols);
    if k == 0 {
        return Ok(mask);
    }
    let mut order: Vec<u32> = Vec::with_capacity(cols);
    for i in 0..rows {
        let row = scores.row(i);
        order.clear();
        order.extend(0..cols as u32);
        if k < cols {
            order.select_nth_unstable_by(k, |&a, &b| prune_order(row, a, b));
        }
        let bits = mask.row_mut(i);
        for &j in &order[..k] {
            bits[j as usize] = 0;
        }
    }
    Ok(mask)
}

/// Zeroes the `⌊ratio·d_out·d_in⌋` lowest-scoring entries of the whole layer,
/// ties pruned in row-major order.
pub fn build_mask_unstructured_layer(scores: &ScoreMatrix, ratio: f64) -> Result<PruneMask> {
    SparsitySpec::unstructured(ratio)?;
    let (rows, cols) = scores.shape();
    let values = scores.values.as_slice();
    let total = values.len();
    let k = pruned_count(ratio, total);
    let mut mask = PruneMask::ones(rows, cols);
    if k == 0 {
        return Ok(mask);
    }
    let mut order: Vec<usize> = (0..total).collect();
    if k < total {
        order.select_nth_unstable_by(k, |&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    }
    for &p in &order[..k] {
        mask.set(p / cols, p % cols, false);
    }
    Ok(mask)
}

/// Groups up to this size are ranked by pairwise counting instead of sorted.
const SMALL_GROUP: usize = 16;

/// Keeps the `n` highest scores in every aligned group of `m` consecutive
/// input entries; a tail group of `t < m` entries keeps `⌈n·t/m⌉`.
pub fn build_mask_nm(scores: &ScoreMatrix, n: usize, m: usize) -> Result<PruneMask> {
    SparsitySpec::structured(n, m)?;
    let (rows, cols) = scores.shape();
    let mut mask = PruneMask::zeros(rows, cols);
    if n == m {
        return Ok(PruneMask::ones(rows, cols));
    }
    let mut order: Vec<u32> = Vec::with_capacity(m);
    for i in 0..rows {
        let row = scores.row(i);
        let bits = mask.row_mut(i);
        for start in (0..cols).step_by(m) {
            let end = (start + m).min(cols);
            let keep = kept_in_group(n, m, end - start);
            if end - start <= SMALL_GROUP {
                // Rank by counting the entries that beat each one; cheaper
                // than a sort call for the usual 2:4 or 4:8 groups.
                let g = &row[start..end];
                for (a, &sa) in g.iter().enumerate() {
                    let beaten_by = g
                        .iter()
                        .enumerate()
                        .filter(|&(b, &sb)| sb.total_cmp(&sa).then(a.cmp(&b)).is_gt())
                        .count();
                    if beaten_by < keep {
                        bits[start + a] = 1;
                    }
                }
                continue;
            }
            order.clear();
            order.extend(start as u32..end as u32);
            // descending score, lower index first on ties
            order.sort_unstable_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
            for &j in &order[..keep] {
                bits[j as usize] = 1;
            }
        }
    }
    Ok(mask)
}

/// Builds the mask for any [`SparsitySpec`]. `group` only affects
/// unstructured selection.
pub fn build_mask(scores: &ScoreMatrix, spec: SparsitySpec, group: MaskGroup) -> Result<PruneMask> {
    match (spec, group) {
        (SparsitySpec::Unstructured { ratio }, MaskGroup::Row) => build_mask_unstructured(scores, ratio),
        (SparsitySpec::Unstructured { ratio }, MaskGroup::Layer) => {
            build_mask_unstructured_layer(scores, ratio)
        }
        (SparsitySpec::Structured { n, m }, _) => build_mask_nm(scores, n, m),
    }
}

/// `M ⊙ W`, with pruned positions set to exactly `+0.0`.
pub fn apply_mask(weights: &WeightMatrix, mask: &PruneMask) -> Result<WeightMatrix> {
    weights.ensure_same_shape(mask.shape(), "mask shape")?;
    let mut out = weights.clone();
    mask_in_place(&mut out, mask);
    Ok(out)
}

pub(crate) fn mask_in_place(weights: &mut WeightMatrix, mask: &PruneMask) {
    for (w, &b) in weights.as_mut_slice().iter_mut().zip(mask.as_bytes()) {
        if b == 0 {
            *w = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::scoring::score_magnitude;

    fn scores(rows: &[&[f64]]) -> ScoreMatrix {
        score_magnitude(&Matrix::from_rows(rows))
    }

    #[test]
    fn unstructured_prunes_two_smallest() {
        let s = scores(&[&[4.0, 1.0, 3.0, 2.0]]);
        let m = build_mask_unstructured(&s, 0.5).unwrap();
        assert_eq!(m.row(0), &[1, 0, 1, 0]);
    }

    #[test]
    fn ratio_zero_keeps_everything() {
        let s = scores(&[&[4.0, 1.0, 3.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(build_mask_unstructured(&s, 0.0).unwrap(), PruneMask::ones(2, 3));
        assert_eq!(
            build_mask_unstructured_layer(&s, 0.0).unwrap(),
            PruneMask::ones(2, 3)
        );
    }

    #[test]
    fn unstructured_ties_prune_lower_index() {
        let s = scores(&[&[1.0, 1.0, 1.0, 1.0]]);
        assert_eq!(build_mask_unstructured(&s, 0.5).unwrap().row(0), &[0, 0, 1, 1]);
    }

    #[test]
    fn invalid_ratio() {
        let s = scores(&[&[1.0]]);
        assert!(build_mask_unstructured(&s, 1.0).is_err());
        assert!(build_mask_unstructured(&s, -0.1).is_err());
    }

    #[test]
    fn layer_group_uses_global_threshold() {
        let s = scores(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let m = build_mask_unstructured_layer(&s, 0.5).unwrap();
        assert_eq!(m.row(0), &[0, 0]);
        assert_eq!(m.row(1), &[1, 1]);
    }

    #[test]
    fn nm_keeps_top_n() {
        let s = scores(&[&[5.0, 1.0, 4.0, 2.0]]);
        assert_eq!(build_mask_nm(&s, 2, 4).unwrap().row(0), &[1, 0, 1, 0]);
        let s = scores(&[&[2.0, 2.0, 2.0, 2.0]]);
        assert_eq!(build_mask_nm(&s, 2, 4).unwrap().row(0), &[1, 1, 0, 0]);
    }

    #[test]
    fn nm_full_keep() {
        let s = scores(&[&[5.0, 1.0, 4.0], &[0.0, 2.0, 1.0]]);
        assert_eq!(build_mask_nm(&s, 3, 3).unwrap(), PruneMask::ones(2, 3));
    }

    #[test]
    fn nm_tail_policy() {
        // 6 columns with 2:4 => full group [0,4) keeps 2, tail of 2 keeps ceil(2*2/4) = 1
        let s = scores(&[&[1.0, 2.0, 3.0, 4.0, 9.0, 8.0]]);
        assert_eq!(build_mask_nm(&s, 2, 4).unwrap().row(0), &[0, 0, 1, 1, 1, 0]);
        // 3:8 tail of 3 keeps ceil(9/8) = 2
        assert_eq!(kept_in_group(3, 8, 3), 2);
        assert_eq!(kept_in_group(4, 8, 8), 4);
    }

    #[test]
    fn invalid_nm() {
        let s = scores(&[&[1.0]]);
        assert!(build_mask_nm(&s, 0, 4).is_err());
        assert!(build_mask_nm(&s, 5, 4).is_err());
    }

    #[test]
    fn sparsity_spec_parsing() {
        assert_eq!(
            "0.5".parse::<SparsitySpec>().unwrap(),
            SparsitySpec::Unstructured { ratio: 0.5 }
        );
        assert_eq!(
            "2:4".parse::<SparsitySpec>().unwrap(),
            SparsitySpec::Structured { n: 2, m: 4 }
        );
        assert!("1.0".parse::<SparsitySpec>().is_err());
        assert!("4:2".parse::<SparsitySpec>().is_err());
        assert!("x".parse::<SparsitySpec>().is_err());
        assert_eq!(SparsitySpec::Structured { n: 4, m: 8 }.target(), 0.5);
    }

    #[test]
    fn pruned_count_floors() {
        assert_eq!(pruned_count(0.5, 7), 3);
        assert_eq!(pruned_count(0.29, 100), 29);
        assert_eq!(pruned_count(0.999, 10), 9);
    }

    #[test]
    fn apply_mask_zeroes_exactly() {
        let w = Matrix::from_rows(&[[1.0, -2.0], [3.0, 4.0]]);
        assert_eq!(apply_mask(&w, &PruneMask::ones(2, 2)).unwrap(), w);
        let mask = PruneMask::from_fn(2, 2, |i, _| i != 0);
        let out = apply_mask(&w, &mask).unwrap();
        assert_eq!(out.row(0), &[0.0, 0.0]);
        assert!(out.row(0).iter().all(|v| v.is_sign_positive()));
        assert_eq!(out.row(1), &[3.0, 4.0]);
        assert!(apply_mask(&w, &PruneMask::ones(1, 2)).is_err());
    }
}
