//! Measurements on maps: Lipschitz constants, Jacobian integrals, image
//! measure by box counting, coverage, and the experiment drivers.

pub mod boxcount;
pub mod coverage;
pub mod experiments;
pub mod jacobian;
pub mod lipschitz;
pub mod report;

pub use boxcount::{boxcount_image_measure, calibrate, CalibrationReport};
pub use coverage::coverage_check;
pub use experiments::{
    negative_csv, positive_csv, run_negative_experiment, run_positive_experiment, NegativeConfig, NegativeReport,
    PositiveConfig, PositiveReport,
};
pub use jacobian::{jacobian_integral, superlevel_fraction};
pub use lipschitz::{estimate_lipschitz, estimate_lipschitz_piecewise, sup_distance};
pub use report::{MeasureReport, Quantity, Resolution};
