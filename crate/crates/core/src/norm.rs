//! Norms on ℝⁿ and their unit-ball geometry.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{determinant, inverse, matrix_from_rows, matrix_to_rows, Matrix, Vector};
use crate::polytope::{ConvexPolytope, Halfspace};
use crate::rng::{derive_seed, seeded, uniform};

/// Relative tolerance for "on the unit sphere" and for vertex matching.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Exponent of an ℓp norm; serializes `∞` as the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(Exponent(p)),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "Infinity" | "infinity") => Ok(Exponent(f64::INFINITY)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", found {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum KindRepr {
    Euclidean,
    Lp(Exponent),
    Polytopal(Vec<Vec<f64>>),
    Transformed { base: Box<NormRepr>, w: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct NormRepr {
    dim: usize,
    kind: KindRepr,
}

#[derive(Clone, Debug)]
pub enum NormKind {
    Euclidean,
    Lp(f64),
    Polytopal {
        vertices: Vec<Vector>,
        hull: ConvexPolytope,
    },
    Transformed {
        base: Box<Norm>,
        w: Matrix,
        w_inv: Matrix,
    },
}

/// A norm on ℝⁿ. Immutable after construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "NormRepr", into = "NormRepr")]
pub struct Norm {
    dim: usize,
    kind: NormKind,
}

impl PartialEq for Norm {
    fn eq(&self, other: &Self) -> bool {
        NormRepr::from(self.clone()) == NormRepr::from(other.clone())
    }
}

impl From<Norm> for NormRepr {
    fn from(n: Norm) -> Self {
        let kind = match n.kind {
            NormKind::Euclidean => KindRepr::Euclidean,
            NormKind::Lp(p) => KindRepr::Lp(Exponent(p)),
            NormKind::Polytopal { vertices, .. } => {
                KindRepr::Polytopal(vertices.iter().map(|v| v.iter().copied().collect()).collect())
            }
            NormKind::Transformed { base, w, .. } => KindRepr::Transformed {
                base: Box::new(NormRepr::from(*base)),
                w: matrix_to_rows(&w),
            },
        };
        NormRepr { dim: n.dim, kind }
    }
}

impl TryFrom<NormRepr> for Norm {
    type Error = Error;

    fn try_from(r: NormRepr) -> Result<Self> {
        let norm = match r.kind {
            KindRepr::Euclidean => Norm::euclidean(r.dim)?,
            KindRepr::Lp(Exponent(p)) => Norm::lp(r.dim, p)?,
            KindRepr::Polytopal(rows) => Norm::polytopal(rows.iter().map(|v| Vector::from_column_slice(v)).collect())?,
            KindRepr::Transformed { base, w } => Norm::transformed(Norm::try_from(*base)?, matrix_from_rows(&w)?)?,
        };
        if norm.dim != r.dim {
            return Err(Error::DimensionMismatch {
                expected: r.dim,
                found: norm.dim,
            });
        }
        Ok(norm)
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NormKind::Euclidean => write!(f, "euclidean(ℝ^{})", self.dim),
            NormKind::Lp(p) if p.is_infinite() => write!(f, "ℓ∞(ℝ^{})", self.dim),
            NormKind::Lp(p) => write!(f, "ℓ{p}(ℝ^{})", self.dim),
            NormKind::Polytopal { vertices, .. } => {
                write!(f, "polytopal(ℝ^{}, {} vertices)", self.dim, vertices.len())
            }
            NormKind::Transformed { base, .. } => write!(f, "W({base})"),
        }
    }
}

/// Lebesgue volume of a unit ball, with an error radius (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallVolume {
    pub value: f64,
    pub error_bound: f64,
}

impl BallVolume {
    fn exact(value: f64) -> Self {
        BallVolume {
            value,
            error_bound: 0.0,
        }
    }
}

/// Outcome of [`Norm::analyze_extremal`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremalReport {
    pub point: Vec<f64>,
    pub is_boundary: bool,
    pub is_extremal: bool,
    pub is_strongly_extremal: bool,
    /// `u·x*ᵀ` for a functional `x*` exposing `u`; present iff strongly extremal.
    pub witness_projection: Option<Vec<Vec<f64>>>,
}

fn euclidean_ball_volume(n: usize) -> f64 {
    // V_n = V_{n−2}·2π/n with V_0 = 1, V_1 = 2.
    let mut v = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn sign_vectors(n: usize) -> Vec<Vector> {
    (0..1usize << n)
        .map(|mask| Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }))
        .collect()
}

fn signed_units(n: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        out.push(e.clone());
        out.push(-e);
    }
    out
}

/// Radical inverse of `index` in `base`.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

const HALTON_BASES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
const QMC_SHIFTS: usize = 16;
const QMC_POINTS_PER_SHIFT: u64 = 4096;
/// Two-sided 99% Student-t quantile with 15 degrees of freedom.
const T_99_DF15: f64 = 2.946_712_883;

impl Norm {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Norm {
            dim,
            kind: NormKind::Euclidean,
        })
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        check_dim(dim)?;
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(format!("ℓp needs p ∈ [1, ∞], got {p}")));
        }
        Ok(Norm {
            dim,
            kind: NormKind::Lp(p),
        })
    }

    pub fn l1(dim: usize) -> Result<Self> {
        Norm::lp(dim, 1.0)
    }

    pub fn linf(dim: usize) -> Result<Self> {
        Norm::lp(dim, f64::INFINITY)
    }

    /// Norm whose unit ball is the convex hull of `vertices`. The list must be
    /// symmetric and span ℝⁿ.
    pub fn polytopal(vertices: Vec<Vector>) -> Result<Self> {
        let dim = vertices
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::InvalidNorm("polytopal norm with no vertices".into()))?;
        check_dim(dim)?;
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidNorm("vertices have inconsistent dimension".into()));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidNorm("vertices must be finite".into()));
        }
        let scale = vertices.iter().map(|v| v.amax()).fold(0.0_f64, f64::max);
        let tol = BOUNDARY_TOL * scale.max(1e-300);
        for v in &vertices {
            if !vertices.iter().any(|w| (w + v).amax() <= tol) {
                return Err(Error::InvalidNorm(format!(
                    "vertex list is not symmetric: −{:?} missing",
                    v.as_slice()
                )));
            }
        }
        let hull = ConvexPolytope::hull(&vertices).map_err(|_| Error::InvalidNorm("vertices do not span ℝⁿ".into()))?;
        if hull.facets().iter().any(|f| f.offset <= tol) {
            return Err(Error::InvalidNorm("origin is not interior to the hull".into()));
        }
        Ok(Norm {
            dim,
            kind: NormKind::Polytopal { vertices, hull },
        })
    }

    /// `|x|_{W(a)} = |W⁻¹x|_a`, the norm with unit ball `W(B_a)`.
    pub fn transformed(base: Norm, w: Matrix) -> Result<Self> {
        if w.nrows() != base.dim || w.ncols() != base.dim {
            return Err(Error::DimensionMismatch {
                expected: base.dim,
                found: w.nrows().max(w.ncols()),
            });
        }
        let w_inv = inverse(&w).map_err(|_| Error::InvalidNorm("W is not invertible".into()))?;
        Ok(Norm {
            dim: base.dim,
            kind: NormKind::Transformed {
                base: Box::new(base),
                w,
                w_inv,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// Euclidean, or ℓ² under another name.
    pub fn is_euclidean(&self) -> bool {
        match self.kind {
            NormKind::Euclidean => true,
            NormKind::Lp(p) => p == 2.0,
            _ => false,
        }
    }

    pub fn is_linf(&self) -> bool {
        matches!(self.kind, NormKind::Lp(p) if p.is_infinite())
    }

    /// Smooth and strictly convex: every boundary point is strongly extremal.
    pub fn is_smooth(&self) -> bool {
        match &self.kind {
            NormKind::Euclidean => true,
            NormKind::Lp(p) => *p > 1.0 && p.is_finite(),
            NormKind::Polytopal { .. } => false,
            NormKind::Transformed { base, .. } => base.is_smooth(),
        }
    }

    /// True when the unit ball is a polytope.
    pub fn is_polyhedral(&self) -> bool {
        match &self.kind {
            NormKind::Euclidean => false,
            NormKind::Lp(p) => *p == 1.0 || p.is_infinite(),
            NormKind::Polytopal { .. } => true,
            NormKind::Transformed { base, .. } => base.is_polyhedral(),
        }
    }

    /// Invariant under coordinate sign flips, hence monotone in `|xᵢ|`. For
    /// such norms the nearest point of a box is the coordinatewise clamp.
    pub fn is_absolute(&self) -> bool {
        match &self.kind {
            NormKind::Euclidean | NormKind::Lp(_) => true,
            NormKind::Polytopal { vertices, .. } => vertices.iter().all(|v| {
                (0..self.dim).all(|i| {
                    let mut w = v.clone();
                    w[i] = -w[i];
                    vertices.iter().any(|u| (u - &w).amax() <= 1e-12 * (1.0 + v.amax()))
                })
            }),
            NormKind::Transformed { .. } => false,
        }
    }

    /// |x|. Panics if `x` has the wrong length; see [`Norm::try_eval`].
    pub fn eval(&self, x: &Vector) -> f64 {
        assert_eq!(x.len(), self.dim, "norm evaluated on a vector of the wrong length");
        match &self.kind {
            NormKind::Euclidean => x.norm(),
            NormKind::Lp(p) => lp_norm(x, *p),
            NormKind::Polytopal { hull, .. } => hull
                .facets()
                .iter()
                .map(|f| f.normal.dot(x) / f.offset)
                .fold(0.0, f64::max),
            NormKind::Transformed { base, w_inv, .. } => base.eval(&(w_inv * x)),
        }
    }

    pub fn try_eval(&self, x: &Vector) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Dual norm `sup { y·x : |x| ≤ 1 }`.
    pub fn dual(&self, y: &Vector) -> f64 {
        assert_eq!(y.len(), self.dim, "dual norm evaluated on a vector of the wrong length");
        match &self.kind {
            NormKind::Euclidean => y.norm(),
            NormKind::Lp(p) => lp_norm(y, conjugate_exponent(*p)),
            NormKind::Polytopal { hull, .. } => hull.vertices().iter().map(|v| v.dot(y).abs()).fold(0.0, f64::max),
            NormKind::Transformed { base, w, .. } => base.dual(&(w.transpose() * y)),
        }
    }

    /// Extreme points of the unit ball, when it is a polytope.
    pub fn vertices(&self) -> Option<Vec<Vector>> {
        match &self.kind {
            NormKind::Euclidean => None,
            NormKind::Lp(p) if p.is_infinite() => Some(sign_vectors(self.dim)),
            NormKind::Lp(p) if *p == 1.0 => Some(signed_units(self.dim)),
            NormKind::Lp(_) => None,
            NormKind::Polytopal { hull, .. } => Some(hull.vertices().to_vec()),
            NormKind::Transformed { base, w, .. } => base.vertices().map(|vs| vs.iter().map(|v| w * v).collect()),
        }
    }

    /// Functionals `φ` with `|x| = max_φ φ·x`, when the unit ball is a polytope.
    pub fn facet_functionals(&self) -> Option<Vec<Vector>> {
        match &self.kind {
            NormKind::Euclidean => None,
            NormKind::Lp(p) if p.is_infinite() => Some(signed_units(self.dim)),
            NormKind::Lp(p) if *p == 1.0 => Some(sign_vectors(self.dim)),
            NormKind::Lp(_) => None,
            NormKind::Polytopal { hull, .. } => Some(hull.facets().iter().map(|f| &f.normal / f.offset).collect()),
            NormKind::Transformed { base, w_inv, .. } => base
                .facet_functionals()
                .map(|fs| fs.iter().map(|phi| w_inv.transpose() * phi).collect()),
        }
    }

    /// A norming functional for `u ≠ 0`: `x*·u = |u|` and `dual(x*) = 1`.
    /// For polyhedral norms this is the barycenter of the facets active at `u`,
    /// which exposes the smallest face containing `u / |u|`.
    pub fn supporting_functional(&self, u: &Vector) -> Vector {
        let r = self.eval(u);
        match &self.kind {
            NormKind::Euclidean => u / r,
            NormKind::Lp(p) if p.is_finite() && *p > 1.0 => {
                let p = *p;
                let x = u / r;
                Vector::from_fn(self.dim, |i, _| x[i].signum() * x[i].abs().powf(p - 1.0))
            }
            NormKind::Transformed { base, w_inv, .. } => {
                let phi = base.supporting_functional(&(w_inv * u));
                w_inv.transpose() * phi
            }
            _ => {
                let fs = self.facet_functionals().expect("polyhedral norm");
                let x = u / r;
                let active: Vec<&Vector> = fs.iter().filter(|phi| (phi.dot(&x) - 1.0).abs() <= 1e-9).collect();
                let mut sum = Vector::zeros(self.dim);
                for phi in &active {
                    sum += *phi;
                }
                sum / active.len().max(1) as f64
            }
        }
    }

    /// A unit vector `x` with `z·x = dual(z)`.
    pub fn dual_maximizer(&self, z: &Vector) -> Vector {
        assert_eq!(z.len(), self.dim, "dual maximizer of a vector of the wrong length");
        let n = self.dim;
        if z.amax() == 0.0 {
            let mut e = Vector::zeros(n);
            e[0] = 1.0;
            return self.normalize(&e).expect("nonzero");
        }
        match &self.kind {
            NormKind::Euclidean => z / z.norm(),
            NormKind::Lp(p) if p.is_infinite() => Vector::from_fn(n, |i, _| if z[i] < 0.0 { -1.0 } else { 1.0 }),
            NormKind::Lp(p) if *p == 1.0 => {
                let i = z.iamax();
                let mut e = Vector::zeros(n);
                e[i] = z[i].signum();
                e
            }
            NormKind::Lp(p) => {
                let q = conjugate_exponent(*p);
                let m = z.amax();
                let x = Vector::from_fn(n, |i, _| z[i].signum() * (z[i].abs() / m).powf(q - 1.0));
                self.normalize(&x).expect("nonzero")
            }
            NormKind::Polytopal { hull, .. } => {
                let mut best = &hull.vertices()[0];
                for v in hull.vertices() {
                    if v.dot(z) > best.dot(z) {
                        best = v;
                    }
                }
                best.clone()
            }
            NormKind::Transformed { base, w, .. } => w * base.dual_maximizer(&(w.transpose() * z)),
        }
    }

    /// Lebesgue volume of the unit ball.
    pub fn ball_volume(&self) -> BallVolume {
        let n = self.dim;
        match &self.kind {
            NormKind::Euclidean => BallVolume::exact(euclidean_ball_volume(n)),
            NormKind::Lp(p) if *p == 2.0 => BallVolume::exact(euclidean_ball_volume(n)),
            NormKind::Lp(p) if *p == 1.0 => BallVolume::exact(2f64.powi(n as i32) / factorial(n)),
            NormKind::Lp(p) if p.is_infinite() => BallVolume::exact(2f64.powi(n as i32)),
            NormKind::Lp(_) => self.qmc_ball_volume(),
            NormKind::Polytopal { hull, .. } => BallVolume::exact(hull.volume()),
            NormKind::Transformed { base, w, .. } => {
                let det = determinant(w).abs();
                let b = base.ball_volume();
                BallVolume {
                    value: det * b.value,
                    error_bound: det * b.error_bound,
                }
            }
        }
    }

    /// Randomly shifted Halton points in the bounding box of the ball.
    fn qmc_ball_volume(&self) -> BallVolume {
        let n = self.dim;
        let half_widths: Vec<f64> = (0..n)
            .map(|i| {
                let mut e = Vector::zeros(n);
                e[i] = 1.0;
                self.dual(&e)
            })
            .collect();
        let box_volume: f64 = half_widths.iter().map(|h| 2.0 * h).product();
        let mut rng = seeded(derive_seed(0x0ba1_1501, n as u64));
        let mut estimates = Vec::with_capacity(QMC_SHIFTS);
        let mut x = Vector::zeros(n);
        for _ in 0..QMC_SHIFTS {
            let shift: Vec<f64> = (0..n).map(|_| uniform(&mut rng, 0.0, 1.0)).collect();
            let mut hits = 0u64;
            for k in 1..=QMC_POINTS_PER_SHIFT {
                for i in 0..n {
                    let t = (radical_inverse(k, HALTON_BASES[i]) + shift[i]).fract();
                    x[i] = (2.0 * t - 1.0) * half_widths[i];
                }
                if self.eval(&x) <= 1.0 {
                    hits += 1;
                }
            }
            estimates.push(box_volume * hits as f64 / QMC_POINTS_PER_SHIFT as f64);
        }
        let k = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / k;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
        BallVolume {
            value: mean,
            error_bound: T_99_DF15 * (var / k).sqrt(),
        }
    }

    /// `2ⁿ / H^n(B)`, the density of the norm's Hausdorff measure against
    /// Lebesgue measure.
    pub fn vol_of_norm(&self) -> f64 {
        2f64.powi(self.dim as i32) / self.ball_volume().value
    }

    /// Classify a boundary point as extremal / strongly extremal.
    pub fn analyze_extremal(&self, u: &Vector) -> Result<ExtremalReport> {
        let r = self.try_eval(u)?;
        if (r - 1.0).abs() > BOUNDARY_TOL {
            return Err(Error::NotOnBoundary { norm: r });
        }
        let (extremal, strong) = self.classify(u);
        let witness = strong.then(|| {
            let phi = self.supporting_functional(u);
            let p = u * phi.transpose() / phi.dot(u);
            matrix_to_rows(&p)
        });
        Ok(ExtremalReport {
            point: u.iter().copied().collect(),
            is_boundary: true,
            is_extremal: extremal,
            is_strongly_extremal: strong,
            witness_projection: witness,
        })
    }

    fn classify(&self, u: &Vector) -> (bool, bool) {
        if self.is_smooth() {
            return (true, true);
        }
        match &self.kind {
            NormKind::Transformed { base, w_inv, .. } => base.classify(&(w_inv * u)),
            _ => {
                let vs = self.vertices().expect("polyhedral norm");
                let scale = u.amax().max(1.0);
                let is_vertex = vs.iter().any(|v| (v - u).amax() <= BOUNDARY_TOL * scale);
                // Every vertex of a polytope is exposed.
                (is_vertex, is_vertex)
            }
        }
    }

    /// Point `x / |x|` on the unit sphere.
    pub fn normalize(&self, x: &Vector) -> Option<Vector> {
        let r = self.eval(x);
        (r > 0.0 && r.is_finite()).then(|| x / r)
    }

    /// Gauge of the hull of the polytopal vertex list by bisection along the
    /// ray, against a halfspace membership test. Slow; kept as a reference.
    pub fn gauge_by_bisection(&self, x: &Vector, iterations: usize) -> Option<f64> {
        let NormKind::Polytopal { hull, .. } = &self.kind else {
            return None;
        };
        if x.amax() == 0.0 {
            return Some(0.0);
        }
        let inside = |t: f64| hull.contains(&(x / t));
        let mut hi = 1.0;
        while !inside(hi) {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..iterations {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    /// Halfspace description `{x : φ·x ≤ 1}` of a polyhedral unit ball.
    pub fn ball_halfspaces(&self) -> Option<Vec<Halfspace>> {
        self.facet_functionals()
            .map(|fs| fs.into_iter().map(|phi| Halfspace::new(phi, 1.0)).collect())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidNorm("dimension must be positive".into()));
    }
    Ok(())
}

fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp_norm(x: &Vector, p: f64) -> f64 {
    if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p.is_infinite() {
        x.amax()
    } else if p == 2.0 {
        x.norm()
    } else {
        let m = x.amax();
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}
