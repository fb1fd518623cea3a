//! Explicit maps with large Jacobian and small Lipschitz constant.

pub mod glue;
pub mod inflate;
pub mod margins;
pub mod piecewise;
pub mod zigzag;

pub use glue::{glue_patches, GluedMap, Patch, PatchSet, PatchSpec};
pub use inflate::{
    inflate_affine, inflate_on_set, InflateMode, InflateOutcome, InflateParams, InflateReport, InflatedMap,
};
pub use margins::{balls_epsilon, lsc_margin};
pub use piecewise::{CellRecord, PiecewiseAffineMap};
pub use zigzag::{zigzag_curve, AxisCurve, ZigzagCurve};
