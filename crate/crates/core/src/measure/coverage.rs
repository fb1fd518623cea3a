use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::map::VectorMap;
use crate::measure::lipschitz::estimate_lipschitz;
use crate::measure::report::{MeasureReport, Quantity, Resolution};
use crate::norm::Norm;
use crate::par::map_indexed;
use crate::region::{BoxRegion, Region};

const MAX_SAMPLES: f64 = 1e8;

/// Fraction of the grid points of `B(0, target_radius)` lying within one
/// grid cell of `g(B(0, radius))`, for planar `g`.
///
/// The disc is sampled on a lattice fine enough that consecutive images are
/// less than half a cell apart; image samples are binned at resolution `grid`
/// and a target point counts as covered when a bin in its 3×3 neighbourhood
/// is occupied.
pub fn coverage_check(g: &dyn VectorMap, radius: f64, target_radius: f64, grid: f64) -> Result<MeasureReport> {
    if g.domain_dim() != 2 || g.codomain_dim() != 2 {
        return Err(Error::UnsupportedDimension(format!(
            "coverage needs n = m = 2, got n = {}, m = {}",
            g.domain_dim(),
            g.codomain_dim()
        )));
    }
    if !(radius > 0.0 && target_radius >= 0.0 && grid > 0.0) {
        return Err(Error::precondition("radii and grid must be positive"));
    }
    let e2 = Norm::euclidean(2)?;
    let disc = BoxRegion::cube(2, -radius, radius)?;
    let lip = match g.lipschitz_bound(&e2, &e2) {
        Some(l) => l,
        None => 1.25 * estimate_lipschitz(g, &Region::Box(disc.clone()), &e2, &e2, 4096, 0xc0fe)?.value,
    };
    let spacing = (grid / (2.0 * lip.max(1e-12))).min(radius);
    let per_axis = (2.0 * radius / spacing).ceil() as usize + 1;
    if (per_axis as f64).powi(2) > MAX_SAMPLES {
        return Err(Error::precondition(format!("grid {grid} needs too many samples")));
    }
    let step = 2.0 * radius / (per_axis - 1) as f64;
    let bin = |y: &Vector| ((y[0] / grid).floor() as i64, (y[1] / grid).floor() as i64);
    let rows = map_indexed(per_axis, |i| {
        let x0 = -radius + i as f64 * step;
        (0..per_axis)
            .filter_map(|j| {
                let x = Vector::from_vec(vec![x0, -radius + j as f64 * step]);
                (x.norm() <= radius).then(|| bin(&g.eval(&x)))
            })
            .collect::<Vec<_>>()
    });
    let occupied: HashSet<(i64, i64)> = rows.into_iter().flatten().collect();
    let k = (target_radius / grid).floor() as i64;
    let mut total = 0usize;
    let mut covered = 0usize;
    for i in -k..=k {
        for j in -k..=k {
            let p = Vector::from_vec(vec![i as f64 * grid, j as f64 * grid]);
            if p.norm() > target_radius {
                continue;
            }
            total += 1;
            let (bi, bj) = bin(&p);
            if (-1..=1).any(|di| (-1..=1).any(|dj| occupied.contains(&(bi + di, bj + dj)))) {
                covered += 1;
            }
        }
    }
    Ok(MeasureReport {
        quantity: Quantity::CoverageRatio,
        value: if total == 0 { 1.0 } else { covered as f64 / total as f64 },
        resolution: Resolution {
            samples: Some(per_axis * per_axis),
            grid: Some(grid),
            spacing: Some(step),
            ..Resolution::default()
        },
        seed: None,
        error_bound: None,
        exact: None,
    })
}
