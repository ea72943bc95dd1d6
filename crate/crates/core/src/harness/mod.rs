//! Configuration, seeding, parallel execution and result persistence.

pub mod config;
pub mod data;
pub mod experiment;
pub mod stats;
pub mod sweep;

pub use config::{ExperimentConfig, SweepSpec, Task};
pub use data::derive_seed;
pub use experiment::{rerun, run_experiment, ExperimentRecord, Prepared, RunOptions};
pub use stats::{fit_scaling, spearman, ScalingFit, ScalingModel, Summary};
pub use sweep::{run_sweep, SweepReport, SweepRow};
