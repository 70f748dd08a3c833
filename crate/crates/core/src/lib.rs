//! Kernel density estimation with bandwidth selection by pairwise comparison
//! of estimators (Goldenshluger–Lepski), minimal-penalty calibration of the
//! penalty constant, and a Monte Carlo harness around both.
//!
//! L² distances between estimators are computed exactly from pair sums of
//! kernel cross-correlations, so selection does not depend on an evaluation
//! grid.

pub mod calibration;
pub mod densities;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod kernels;
pub mod quad;
pub mod selection;

pub use calibration::{bandwidth_path, calibrate, detect_jump, Calibration, Jump, PenaltyPath};
pub use densities::{make_density, TestDensity};
pub use error::{Error, Result};
pub use estimator::{pairwise_l2_sq, EvaluationGrid, Sample};
pub use experiments::{
    emit, oracle_constant, run_replicates, theorem_check, BRule, BandwidthSet, ExperimentConfig,
    ExperimentRecord, OutputFormat,
};
pub use kernels::{check_assumptions, AssumptionConfig, AssumptionReport, Kernel};
pub use selection::{
    compute_b, penalty, select, select_two, BandwidthGrid, DistanceCache, SelectionResult,
};
