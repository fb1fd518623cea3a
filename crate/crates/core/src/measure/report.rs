use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    LipschitzEstimate,
    JacobianIntegral,
    HausdorffBoxcount,
    SuperlevelFraction,
    CoverageRatio,
}

/// Sampling parameters behind a measurement.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<f64>,
    /// Lattice spacing in the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub quantity: Quantity,
    pub value: f64,
    pub resolution: Resolution,
    pub seed: Option<u64>,
    pub error_bound: Option<f64>,
    /// Exact value where one is available alongside the estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}
