//! Post-training weight pruning for linear layers.
//!
//! Importance scores combine weight magnitude with per-channel activation
//! statistics and a column weight-variance calibration; masks follow
//! unstructured or n:m patterns; a closed-form energy compensation rescales
//! surviving weights about the original column and row means.
//!
//! ```
//! use varprune::{build_mask_nm, energy_compensate, score_magnitude, EnergyConfig, Matrix};
//!
//! let w = Matrix::from_rows(&[[0.9, -0.1, 0.4, -0.7], [0.2, 0.8, -0.3, 0.05]]);
//! let mask = build_mask_nm(&score_magnitude(&w), 2, 4).unwrap();
//! let (pruned, report) = energy_compensate(&w, &mask, &EnergyConfig::default()).unwrap();
//! assert_eq!(pruned.count_zeros(), 4);
//! assert_eq!(report.col_scales.len(), 4);
//! ```

pub mod calib_stats;
pub mod energy_comp;
pub mod error;
pub mod masking;
pub mod matrix;
pub mod pipeline;
pub mod scoring;
pub mod synthetic;
pub mod tensor_store;

pub use calib_stats::ChannelStats;
pub use energy_comp::{
    compensate, compensate_into, correct_columns, correct_rows, energy_compensate, rescale_columns,
    rescale_rows, CorrectionReport, EcMode, EnergyConfig,
};
pub use error::{Error, Result};
pub use masking::{
    apply_mask, build_mask, build_mask_nm, build_mask_unstructured, build_mask_unstructured_layer, MaskGroup,
    SparsitySpec,
};
pub use matrix::{Matrix, PruneMask, WeightMatrix};
pub use pipeline::{
    ablate_layer, benchmark, prune_layer, run_job, time_layer, AblationReport, JobReport, LayerReport,
    PruneJobConfig, PruneSettings, StageTimings, TimingTable,
};
pub use scoring::{
    column_variance, score, score_cvr, score_magnitude, score_wanda, weight_calibration, ActivationMode,
    Criterion, ScoreMatrix, DEFAULT_ALPHA, DEFAULT_EPS,
};
pub use tensor_store::{read_tensor, write_tensor, DType, StatsFile, Tensor, TensorFile};
