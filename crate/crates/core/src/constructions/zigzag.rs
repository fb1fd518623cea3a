//! Zigzag curves: piecewise-affine curves with velocity `±u` that stay
//! uniformly close to a slower line `t ↦ t·a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::norm::Norm;

/// Segments beyond this count are refused rather than allocated.
const MAX_SEGMENTS: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZigzagCurve {
    pub breakpoints: Vec<f64>,
    /// `+1` or `−1` per segment; the derivative on segment `k` is `signs[k]·u`.
    pub segment_directions: Vec<i8>,
    pub direction_vector: Vec<f64>,
    /// Value at the first breakpoint.
    pub anchor: Vec<f64>,
}

/// Continuous curve in ℝᵐ, affine between knots, extended affinely past
/// both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisCurve {
    pub knots: Vec<f64>,
    /// Value at each knot.
    pub values: Vec<Vector>,
    /// Derivative on each of the `knots.len() − 1` segments.
    pub slopes: Vec<Vector>,
}

impl AxisCurve {
    /// Interpolate `values` at `knots`.
    pub fn from_nodes(knots: Vec<f64>, values: Vec<Vector>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::precondition("curve needs ≥ 2 knots, one value each"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::precondition("knots must be strictly increasing"));
        }
        let slopes = (0..knots.len() - 1)
            .map(|k| (&values[k + 1] - &values[k]) / (knots[k + 1] - knots[k]))
            .collect();
        Ok(AxisCurve { knots, values, slopes })
    }

    /// Integrate `slopes` from `start` at `knots[0]`.
    pub fn from_slopes(knots: Vec<f64>, start: Vector, slopes: Vec<Vector>) -> Result<Self> {
        if knots.len() < 2 || slopes.len() + 1 != knots.len() {
            return Err(Error::precondition("curve needs ≥ 2 knots and one slope per segment"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::precondition("knots must be strictly increasing"));
        }
        let mut values = Vec::with_capacity(knots.len());
        values.push(start);
        for k in 0..slopes.len() {
            let next = &values[k] + &slopes[k] * (knots[k + 1] - knots[k]);
            values.push(next);
        }
        Ok(AxisCurve { knots, values, slopes })
    }

    pub fn segments(&self) -> usize {
        self.slopes.len()
    }

    pub fn codomain_dim(&self) -> usize {
        self.values[0].len()
    }

    /// Segment containing `t`, with the end segments absorbing the tails.
    pub fn segment(&self, t: f64) -> usize {
        let k = self.knots.partition_point(|&s| s <= t);
        k.saturating_sub(1).min(self.segments() - 1)
    }

    pub fn eval(&self, t: f64) -> Vector {
        let k = self.segment(t);
        &self.values[k] + &self.slopes[k] * (t - self.knots[k])
    }
}

impl ZigzagCurve {
    pub fn direction(&self) -> Vector {
        Vector::from_column_slice(&self.direction_vector)
    }

    pub fn eval(&self, t: f64) -> Vector {
        self.to_axis_curve().eval(t)
    }

    pub fn to_axis_curve(&self) -> AxisCurve {
        let u = self.direction();
        let slopes = self.segment_directions.iter().map(|&s| &u * f64::from(s)).collect();
        AxisCurve::from_slopes(
            self.breakpoints.clone(),
            Vector::from_column_slice(&self.anchor),
            slopes,
        )
        .expect("zigzag breakpoints are valid")
    }
}

/// A curve `γ` on `[lo, hi]` with `γ′ = ±u` off the breakpoints and
/// `|γ(t) − t·a| ≤ eps/2` in `norm`.
///
/// Requires `u = κ·a` with `|κ| ≥ 1`, or `a = 0`. Writing `γ = ψ·a`, the
/// deviation `ψ(t) − t` grows at rate `|κ| − 1` on rising segments and falls
/// at rate `|κ| + 1` on falling ones; the curve turns whenever `|γ − t·a|`
/// reaches `eps/2`, so segment lengths scale like
/// `eps / (|a|(|κ| ∓ 1))`. For `a = 0` the curve is a triangle wave along `u`.
pub fn zigzag_curve(a: &Vector, u: &Vector, eps: f64, lo: f64, hi: f64, norm: &Norm) -> Result<ZigzagCurve> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::precondition(format!("eps must be positive, got {eps}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::precondition(format!("interval [{lo}, {hi}] is empty")));
    }
    if a.len() != u.len() || norm.dim() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: u.len(),
        });
    }
    let u_len = norm.eval(u);
    let a_len = norm.eval(a);
    let single = |anchor: Vector| ZigzagCurve {
        breakpoints: vec![lo, hi],
        segment_directions: vec![1],
        direction_vector: u.iter().copied().collect(),
        anchor: anchor.iter().copied().collect(),
    };

    // Scalar picture: γ = ψ·base, target line c·t, ψ′ = ±rate.
    let (base_len, c, rate, orientation) = if a.amax() == 0.0 {
        if u.amax() == 0.0 {
            return Ok(single(Vector::zeros(a.len())));
        }
        (u_len, 0.0, 1.0, 1.0)
    } else {
        let kappa = u.dot(a) / a.dot(a);
        let residual = (u - a * kappa).amax();
        if residual > 1e-9 * u.amax().max(a.amax()) {
            return Err(Error::DirectionNotAdmissible("u is not parallel to A(1)".into()));
        }
        if kappa.abs() < 1.0 - 1e-12 {
            return Err(Error::DirectionNotAdmissible(format!("|u| < |A(1)|: κ = {kappa}")));
        }
        if (kappa.abs() - 1.0).abs() <= 1e-12 {
            let mut z = single(a * lo);
            z.segment_directions = vec![kappa.signum() as i8];
            return Ok(z);
        }
        (a_len, 1.0, kappa.abs(), kappa.signum())
    };

    let h = 0.5 * eps / base_len;
    let up = rate - c;
    let down = rate + c;
    let mut breakpoints = vec![lo];
    let mut signs: Vec<i8> = Vec::new();
    // Deviation ψ − c·t starts at 0, rises to h, then alternates between ±h.
    let mut t = lo;
    let mut rising = true;
    let mut first = true;
    while t < hi {
        let span = if first { h } else { 2.0 * h };
        first = false;
        let len = span / if rising { up } else { down };
        t = (t + len).min(hi);
        breakpoints.push(t);
        let s = if rising { 1.0 } else { -1.0 } * orientation;
        signs.push(s as i8);
        rising = !rising;
        if signs.len() > MAX_SEGMENTS {
            return Err(Error::precondition(format!(
                "zigzag needs more than {MAX_SEGMENTS} segments; eps too small"
            )));
        }
    }
    let anchor = if a.amax() == 0.0 {
        Vector::zeros(a.len())
    } else {
        a * lo
    };
    Ok(ZigzagCurve {
        breakpoints,
        segment_directions: signs,
        direction_vector: u.iter().copied().collect(),
        anchor: anchor.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn max_deviation(z: &ZigzagCurve, a: &Vector, lo: f64, hi: f64, norm: &Norm) -> f64 {
        let c = z.to_axis_curve();
        (0..=10_000)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / 10_000.0;
                norm.eval(&(c.eval(t) - a * t))
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_line_gives_triangle_wave() {
        let e2 = Norm::euclidean(2).unwrap();
        let a = v(&[0.0, 0.0]);
        let z = zigzag_curve(&a, &v(&[1.0, 0.0]), 0.1, 0.0, 1.0, &e2).unwrap();
        assert!(z.segment_directions.len() > 2);
        assert!(max_deviation(&z, &a, 0.0, 1.0, &e2) < 0.1);
        let c = z.to_axis_curve();
        for t in [0.1, 0.33, 0.77] {
            assert_eq!(c.eval(t)[1], 0.0);
        }
    }

    #[test]
    fn kappa_one_is_a_single_segment() {
        let e2 = Norm::euclidean(2).unwrap();
        let a = v(&[0.3, 0.4]);
        let z = zigzag_curve(&a, &a, 0.01, -1.0, 1.0, &e2).unwrap();
        assert_eq!(z.segment_directions, vec![1]);
        assert!(max_deviation(&z, &a, -1.0, 1.0, &e2) < 1e-15);
    }

    #[test]
    fn half_speed_line() {
        let e2 = Norm::euclidean(2).unwrap();
        let a = v(&[0.5, 0.0]);
        let u = v(&[1.0, 0.0]);
        let z = zigzag_curve(&a, &u, 0.05, 0.0, 1.0, &e2).unwrap();
        assert!(max_deviation(&z, &a, 0.0, 1.0, &e2) < 0.05);
        let c = z.to_axis_curve();
        for s in &c.slopes {
            assert!(*s == u || *s == -&u);
        }
        assert_eq!(z.breakpoints[0], 0.0);
        assert_eq!(*z.breakpoints.last().unwrap(), 1.0);
    }

    #[test]
    fn negative_kappa_and_rejections() {
        let e2 = Norm::euclidean(2).unwrap();
        let a = v(&[0.5, 0.5]);
        let z = zigzag_curve(&a, &(&a * -3.0), 0.02, -2.0, 2.0, &e2).unwrap();
        assert!(max_deviation(&z, &a, -2.0, 2.0, &e2) < 0.02);
        assert!(matches!(
            zigzag_curve(&a, &v(&[1.0, 0.0]), 0.1, 0.0, 1.0, &e2),
            Err(Error::DirectionNotAdmissible(_))
        ));
        assert!(matches!(
            zigzag_curve(&a, &(&a * 0.5), 0.1, 0.0, 1.0, &e2),
            Err(Error::DirectionNotAdmissible(_))
        ));
        assert!(zigzag_curve(&a, &a, 0.0, 0.0, 1.0, &e2).is_err());
    }

    #[test]
    fn axis_curve_is_continuous() {
        let c = AxisCurve::from_nodes(vec![0.0, 0.5, 2.0], vec![v(&[0.0]), v(&[1.0]), v(&[-2.0])]).unwrap();
        assert!((c.eval(0.5 - 1e-12)[0] - c.eval(0.5 + 1e-12)[0]).abs() < 1e-10);
        assert_eq!(c.eval(-1.0)[0], -2.0);
        assert_eq!(c.eval(3.0)[0], -4.0);
    }
}
