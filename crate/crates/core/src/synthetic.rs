//! Seeded synthetic layers for tests, benchmarks and the ablation harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Weights and activations of one linear layer.
#[derive(Debug, Clone)]
pub struct SyntheticLayer {
    /// `(d_out, d_in)`
    pub weights: Matrix,
    /// `(samples, d_in)`
    pub activations: Matrix,
}

/// Shape of a layer whose input channels come in redundant groups.
#[derive(Debug, Clone, Copy)]
pub struct RedundantLayerSpec {
    pub d_out: usize,
    pub d_in: usize,
    pub samples: usize,
    /// Consecutive input channels sharing one latent signal.
    pub group: usize,
    /// Std-dev of per-weight noise around the group's shared weight.
    pub weight_noise: f64,
    /// Std-dev of per-channel noise around the group's latent activation.
    pub activation_noise: f64,
}

impl Default for RedundantLayerSpec {
    fn default() -> Self {
        Self {
            d_out: 64,
            d_in: 64,
            samples: 640,
            group: 8,
            weight_noise: 0.5,
            activation_noise: 0.2,
        }
    }
}

/// A layer with correlated input channels.
///
/// Channels `[g·k, g·(k+1))` all carry latent signal `z_k` plus independent
/// noise, and each output row weights them with a shared value `v_ik` plus
/// noise. Pruned weights then have surviving neighbours carrying the same
/// signal, the regime where restoring the energy of kept weights also restores
/// layer outputs. On isotropic Gaussian layers, by contrast, pruned and kept
/// contributions are uncorrelated and any upscaling of kept weights increases
/// output error.
pub fn redundant_layer(seed: u64, spec: &RedundantLayerSpec) -> SyntheticLayer {
    let mut rng = rng(seed);
    let group = spec.group.max(1);
    let latent = spec.d_in.div_ceil(group);
    let shared = gaussian(&mut rng, spec.d_out, latent);
    let weights = Matrix::from_fn(spec.d_out, spec.d_in, |i, j| {
        shared.get(i, j / group) + spec.weight_noise * rng.sample::<f64, _>(StandardNormal)
    });
    let z = gaussian(&mut rng, spec.samples, latent);
    let activations = Matrix::from_fn(spec.samples, spec.d_in, |s, j| {
        z.get(s, j / group) + spec.activation_noise * rng.sample::<f64, _>(StandardNormal)
    });
    SyntheticLayer { weights, activations }
}
