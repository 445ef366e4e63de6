//! Learning a rejector from target samples alone, in `R^d`.

pub mod classifier;
pub mod grid;
pub mod quantile;
pub mod scc;

pub use classifier::{
    fit_baseline_classifier, ClassifierConfig, KernelLogistic, SoftClassifier, TrainingMeta,
};
pub use grid::{
    cell_counts, covered_cells, default_pitch, grid_key, sample_synthetic, select_grid_pitch,
    singleton_cells, CellKey, GridSpec,
};
pub use quantile::{umvufb_index, umvufb_quantile, umvufb_unbiased};
pub use scc::{
    calibrate_thresholds, jitter_scale, train_scc, MarginRule, Margins, PitchRule, QuantileSource,
    SccConfig, SccModel, Thresholds,
};
