//! Browser views over `inflate-lab`: a zigzag curve, an inflated map of the
//! square and a maximal-volume profile. Each export returns JSON for the page
//! in `www/` to draw.

use inflate_lab::constructions::{inflate_affine, zigzag_curve};
use inflate_lab::error::Error;
use inflate_lab::linalg::{Matrix, Vector};
use inflate_lab::linear_map::{euclidean_inflation, LinearMap};
use inflate_lab::map::{AffineMap, VectorMap};
use inflate_lab::maximal_volume::{max_volume, MvOptions};
use inflate_lab::norm::Norm;
use inflate_lab::region::{BoxRegion, Region};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct ZigzagView {
    pub breakpoints: usize,
    /// `(t, γ(t))` samples.
    pub curve: Vec<[f64; 2]>,
    /// `(t, a·t)`.
    pub line: Vec<[f64; 2]>,
    pub max_deviation: f64,
}

/// Zigzag with slopes `±κa` that follows `t ↦ a·t` on `[0, 1]`.
pub fn zigzag(a: f64, kappa: f64, eps: f64) -> Result<ZigzagView, Error> {
    let e1 = Norm::euclidean(1)?;
    let z = zigzag_curve(
        &Vector::from_element(1, a),
        &Vector::from_element(1, kappa * a),
        eps,
        0.0,
        1.0,
        &e1,
    )?;
    let samples = 800;
    let mut curve = Vec::with_capacity(samples + 1);
    let mut line = Vec::with_capacity(samples + 1);
    let mut worst: f64 = 0.0;
    for k in 0..=samples {
        let t = k as f64 / samples as f64;
        let y = z.eval(t)[0];
        worst = worst.max((y - a * t).abs());
        curve.push([t, y]);
        line.push([t, a * t]);
    }
    Ok(ZigzagView {
        breakpoints: z.breakpoints.len(),
        curve,
        line,
        max_deviation: worst,
    })
}

#[derive(Debug, Serialize)]
pub struct InflationView {
    /// Rescaling applied so that `‖A‖ ≤ 1`.
    pub scale: f64,
    pub eigenvalues: Vec<f64>,
    pub vol_a: f64,
    pub cells: usize,
    pub lip_exact: f64,
    pub min_cell_vol: f64,
    pub max_deviation: f64,
    /// Images of the lines `x₁ = const` and `x₂ = const`, as polylines.
    pub grid: Vec<Vec<[f64; 2]>>,
    /// Image of the square's boundary under `A`.
    pub outline: Vec<[f64; 2]>,
}

/// Inflate `A = [[a11, a12], [a21, a22]]` on `[−1, 1]²` with Euclidean norms.
pub fn inflation(a11: f64, a12: f64, a21: f64, a22: f64, eps: f64) -> Result<InflationView, Error> {
    let e2 = Norm::euclidean(2)?;
    let raw = Matrix::from_row_slice(2, 2, &[a11, a12, a21, a22]);
    let op = LinearMap::new(raw.clone(), e2.clone(), e2.clone())?.op_norm();
    let scale = if op > 1.0 { 1.0 / op } else { 1.0 };
    let a = raw * scale;
    let map = LinearMap::new(a.clone(), e2.clone(), e2.clone())?;
    let cert = euclidean_inflation(&map)?;
    let f = AffineMap::linear(a);
    let square = Region::Box(BoxRegion::cube(2, -1.0, 1.0)?);
    let g = inflate_affine(&f, &cert, 1.0, &square, &e2, &e2, eps)?;

    let lines = 16;
    let along = 300;
    let point = |s: f64, t: f64, swap: bool| {
        let x = if swap { [t, s] } else { [s, t] };
        Vector::from_column_slice(&x)
    };
    let mut grid = Vec::with_capacity(2 * (lines + 1));
    let mut worst: f64 = 0.0;
    for swap in [false, true] {
        for i in 0..=lines {
            let s = -1.0 + 2.0 * i as f64 / lines as f64;
            let poly = (0..=along)
                .map(|k| {
                    let x = point(s, -1.0 + 2.0 * k as f64 / along as f64, swap);
                    let y = g.eval(&x);
                    worst = worst.max((&y - f.eval(&x)).norm());
                    [y[0], y[1]]
                })
                .collect();
            grid.push(poly);
        }
    }
    let outline = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]]
        .iter()
        .map(|c| {
            let y = f.eval(&Vector::from_column_slice(c));
            [y[0], y[1]]
        })
        .collect();
    Ok(InflationView {
        scale,
        eigenvalues: cert.eigenvalues.clone(),
        vol_a: map.vol()?,
        cells: g.cell_count(),
        lip_exact: g.lipschitz_exact(),
        min_cell_vol: g.min_cell_vol(&square)?,
        max_deviation: worst,
        grid,
        outline,
    })
}

#[derive(Debug, Serialize)]
pub struct MvPoint {
    /// Exponent of the domain norm; `None` for ℓ∞.
    pub p: Option<f64>,
    pub value: f64,
    pub analytic: bool,
}

/// `mv(u)` for `u = (cos θ, sin θ)` from `ℓᵖ(ℝ²)` to `ℓ²(ℝ²)` over a range of
/// exponents, ending with `p = ∞`.
pub fn mv_profile(theta: f64, points: usize, restarts: usize, seed: u64) -> Result<Vec<MvPoint>, Error> {
    let u = Vector::from_column_slice(&[theta.cos(), theta.sin()]);
    let e2 = Norm::euclidean(2)?;
    let options = MvOptions {
        restarts: restarts.max(1),
        steps: 120,
        allow_analytic: true,
    };
    let points = points.max(2);
    let mut out = Vec::with_capacity(points + 1);
    for k in 0..points {
        // Exponents spread evenly in 1/p over (0, 1].
        let p = 1.0 / (1.0 - k as f64 / points as f64);
        let r = max_volume(&u, &Norm::lp(2, p)?, &e2, options, seed)?;
        out.push(MvPoint {
            p: Some(p),
            value: r.value,
            analytic: r.analytic,
        });
    }
    let r = max_volume(&u, &Norm::linf(2)?, &e2, options, seed)?;
    out.push(MvPoint {
        p: None,
        value: r.value,
        analytic: r.analytic,
    });
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T, Error>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = zigzagView)]
pub fn zigzag_view(a: f64, kappa: f64, eps: f64) -> Result<String, JsError> {
    to_js(zigzag(a, kappa, eps))
}

#[wasm_bindgen(js_name = inflationView)]
pub fn inflation_view(a11: f64, a12: f64, a21: f64, a22: f64, eps: f64) -> Result<String, JsError> {
    to_js(inflation(a11, a12, a21, a22, eps))
}

#[wasm_bindgen(js_name = mvProfile)]
pub fn mv_profile_view(theta: f64, points: usize, restarts: usize, seed: u64) -> Result<String, JsError> {
    to_js(mv_profile(theta, points, restarts, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_stays_close() {
        let v = zigzag(0.5, 2.0, 0.05).unwrap();
        assert!(v.max_deviation < 0.05);
        assert!(v.breakpoints > 2);
        assert_eq!(v.curve.len(), v.line.len());
    }

    #[test]
    fn zigzag_rejects_shrinking_slopes() {
        assert!(zigzag(0.5, 0.5, 0.05).is_err());
    }

    #[test]
    fn inflation_rescales_and_inflates() {
        let v = inflation(1.5, 0.3, -0.2, 0.6, 0.1).unwrap();
        assert!(v.scale < 1.0);
        assert!(v.lip_exact <= 1.0 + 1e-9);
        assert!(v.min_cell_vol >= 1.0 - 1e-9);
        assert!(v.max_deviation < 0.1);
        assert_eq!(v.grid.len(), 34);
    }

    #[test]
    fn degenerate_map_is_an_error() {
        assert!(inflation(1.0, 0.0, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn profile_ends_at_zero() {
        let prof = mv_profile(0.0, 4, 4, 1).unwrap();
        assert_eq!(prof.len(), 5);
        let last = prof.last().unwrap();
        assert!(last.p.is_none() && last.analytic && last.value == 0.0);
        // p = 1 and p = 2 both reach 1 at u = e₁.
        assert!(prof[0].value > 0.99 && prof[0].value <= 1.0 + 1e-9);
    }
}
