use crate::constructions::PiecewiseAffineMap;
use crate::error::Result;
use crate::measure::report::{MeasureReport, Quantity, Resolution};
use crate::region::Region;

/// `∫_E vol g′`, exact.
pub fn jacobian_integral(g: &PiecewiseAffineMap, region: &Region) -> Result<MeasureReport> {
    Ok(MeasureReport {
        quantity: Quantity::JacobianIntegral,
        value: g.jacobian_integral(region)?,
        resolution: Resolution::default(),
        seed: None,
        error_bound: Some(0.0),
        exact: None,
    })
}

/// `H^n({vol g′ ≥ r} ∩ E) / H^n(E)`, exact; 0 for a null `E`.
pub fn superlevel_fraction(g: &PiecewiseAffineMap, region: &Region, r: f64) -> Result<MeasureReport> {
    let total = region.measure();
    let value = if total > 0.0 {
        g.superlevel_measure(region, r)? / total
    } else {
        0.0
    };
    Ok(MeasureReport {
        quantity: Quantity::SuperlevelFraction,
        value,
        resolution: Resolution::default(),
        seed: None,
        error_bound: Some(0.0),
        exact: None,
    })
}
