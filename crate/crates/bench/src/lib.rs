//! Seeded inputs shared by the stage benchmarks.

use varprune::synthetic::{gaussian, rng};
use varprune::{ChannelStats, Matrix, PruneMask, PruneSettings, ScoreMatrix};

/// Layer sizes the benches sweep over.
pub const SIZES: [usize; 3] = [256, 1024, 4096];

/// Calibration rows behind the activation statistics.
pub const CALIB_ROWS: usize = 256;

pub struct Layer {
    pub weights: Matrix,
    pub stats: ChannelStats,
}

/// A square Gaussian layer with Gaussian activation statistics.
pub fn layer(n: usize, seed: u64) -> Layer {
    let mut r = rng(seed);
    let weights = gaussian(&mut r, n, n);
    let stats = ChannelStats::from_batch(&gaussian(&mut r, CALIB_ROWS, n)).expect("finite activations");
    Layer { weights, stats }
}

impl Layer {
    pub fn scores(&self, settings: &PruneSettings) -> ScoreMatrix {
        settings
            .score(&self.weights, Some(&self.stats))
            .expect("valid settings")
    }

    pub fn mask(&self, settings: &PruneSettings) -> PruneMask {
        varprune::build_mask(&self.scores(settings), settings.sparsity, settings.group)
            .expect("valid sparsity")
    }
}
