//! Reproduction harness: ensembles of estimation runs over detuning grids,
//! sensitivity-versus-time studies, bootstrap intervals, the room-temperature
//! readout model, unit conversion and result files.

pub mod field;
pub mod output;
pub mod roomtemp;
pub mod scaling;
pub mod stats;
pub mod sweep;

pub use field::{field_sensitivity, FieldConversion};
pub use output::{write_rt_csv, write_scaling_csv, write_sweep_csv, Manifest, SCALING_COLUMNS};
pub use roomtemp::{rt_compare, rt_contrast, rt_model, RoomTempModel, RtCompareConfig, RtRow};
pub use scaling::{
    min_eta, scaling_slope, sensitivity_scaling, IncrementSource, ScalingConfig, ScalingPoint,
    TimeMode,
};
pub use stats::{bootstrap_ci, bootstrap_mean_holevo_ci, ensemble_holevo_variance, fit_slope};
pub use sweep::{detuning_grid, detuning_sweep, GRID_OFFSET, BootstrapSettings, EnsembleStats};
