use crate::constructions::PiecewiseAffineMap;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::map::VectorMap;
use crate::measure::report::{MeasureReport, Quantity, Resolution};
use crate::norm::Norm;
use crate::par::map_indexed;
use crate::region::Region;
use crate::rng::{derive_seed, gaussian_vector, seeded, uniform};

/// Largest sampled quotient `|f(x) − f(y)|_b / |x − y|_a`, a lower bound on
/// `Lip(f)`. Odd-numbered pairs are near-diagonal, with `|x − y|` log-uniform
/// between `1e−4·diam` and `diam`.
pub fn estimate_lipschitz(
    f: &dyn VectorMap,
    domain: &Region,
    a: &Norm,
    b: &Norm,
    pairs: usize,
    seed: u64,
) -> Result<MeasureReport> {
    let n = domain.dim();
    if f.domain_dim() != n || a.dim() != n || b.dim() != f.codomain_dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.domain_dim(),
        });
    }
    if domain.boxes().is_empty() {
        return Err(Error::precondition("empty domain"));
    }
    let diam = 2.0 * domain.bounding_box().circumradius();
    let quotients = map_indexed(pairs, |k| {
        let mut rng = seeded(derive_seed(seed, k as u64));
        let x = domain.sample(&mut rng);
        let y = if k % 2 == 0 {
            domain.sample(&mut rng)
        } else {
            let step = diam * 10f64.powf(-4.0 * uniform(&mut rng, 0.0, 1.0));
            let dir = gaussian_vector(&mut rng, n);
            let len = dir.norm().max(1e-300);
            let y = &x + dir * (step / len);
            let y = domain.bounding_box().clamp(&y);
            if domain.contains(&y) {
                y
            } else {
                domain.sample(&mut rng)
            }
        };
        let dx = a.eval(&(&x - &y));
        if dx > 0.0 {
            b.eval(&(f.eval(&x) - f.eval(&y))) / dx
        } else {
            0.0
        }
    });
    Ok(MeasureReport {
        quantity: Quantity::LipschitzEstimate,
        value: quotients.into_iter().fold(0.0, f64::max),
        resolution: Resolution {
            samples: Some(pairs),
            ..Resolution::default()
        },
        seed: Some(seed),
        error_bound: None,
        exact: None,
    })
}

/// [`estimate_lipschitz`] plus the exact constant: the largest operator norm
/// over the linear parts of `g`.
pub fn estimate_lipschitz_piecewise(
    g: &PiecewiseAffineMap,
    domain: &Region,
    pairs: usize,
    seed: u64,
) -> Result<MeasureReport> {
    let mut report = estimate_lipschitz(g, domain, g.domain_norm(), g.codomain_norm(), pairs, seed)?;
    report.exact = Some(g.lipschitz_exact());
    Ok(report)
}

/// Sampled `sup |f − g|_b` over `domain`.
pub fn sup_distance(f: &dyn VectorMap, g: &dyn VectorMap, domain: &Region, b: &Norm, samples: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let points: Vec<Vector> = (0..samples).map(|_| domain.sample(&mut rng)).collect();
    map_indexed(points.len(), |i| b.eval(&(f.eval(&points[i]) - g.eval(&points[i]))))
        .into_iter()
        .fold(0.0, f64::max)
}
