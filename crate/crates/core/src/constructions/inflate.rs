//! Inflating approximations: replace a map by a nearby one whose derivative
//! is, almost everywhere, a sign permutation of an inflation of the original.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constructions::glue::{glue_patches, GluedMap, Patch, PatchSet, PatchSpec};
use crate::constructions::piecewise::PiecewiseAffineMap;
use crate::constructions::zigzag::zigzag_curve;
use crate::error::{Error, Result};
use crate::linalg::{self, cayley_rotation, Matrix, Vector};
use crate::linear_map::{
    euclidean_inflation, inflation_search, operator_norm, verify_certificate, InflationCertificate, LinearMap,
    SearchBudget, VERIFY_TOL,
};
use crate::map::{AffineMap, VectorMap};
use crate::measure::lipschitz::sup_distance;
use crate::norm::Norm;
use crate::par::map_indexed;
use crate::region::{BoxRegion, Region};
use crate::rng::{derive_seed, gaussian_matrix, seeded};

/// Maps with `Lip(f) ∈ [1, 1 + PRESCALE_WINDOW]` are shrunk by
/// `1 − PRESCALE_FACTOR` instead of being rejected.
const PRESCALE_WINDOW: f64 = 1e-9;
const PRESCALE_FACTOR: f64 = 1e-6;
/// Largest rotation angle of the generic-position perturbation.
const MAX_ROTATION: f64 = 1e-3;
const FIT_STENCIL: usize = 5;
const CHECK_STENCIL: usize = 9;
const PERTURBATION_ATTEMPTS: u64 = 16;

/// `g(x) = A(o) + Σᵢ γᵢ(tᵢ(x))` where `t = X⁻¹(x − o)`, `X` holds the
/// certificate preimages and `γᵢ` zigzags around `t ↦ t·A(xᵢ)` with velocity
/// `±μᵢ·A(xᵢ)`.
///
/// `cert` must verify for `A_lin/scale`. Each cell's derivative is then
/// `A_lin·X·diag(±μ)·X⁻¹`, one sign permutation of `I∘A_lin`, with operator
/// norm at most `scale` and volume at least `scaleⁿ·λ`. The sup distance to
/// `f` over `region` is at most `eps/2`.
pub fn inflate_affine(
    f: &AffineMap,
    cert: &InflationCertificate,
    scale: f64,
    region: &Region,
    a: &Norm,
    b: &Norm,
    eps: f64,
) -> Result<PiecewiseAffineMap> {
    let (n, m) = (f.domain_dim(), f.codomain_dim());
    if a.dim() != n || b.dim() != m || region.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.dim(),
        });
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::precondition(format!("eps must be positive, got {eps}")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::precondition(format!("scale must be positive, got {scale}")));
    }
    let scaled = LinearMap::new(&f.linear / scale, a.clone(), b.clone())?;
    let report = verify_certificate(&scaled, cert, VERIFY_TOL)?;
    if !report.verified {
        return Err(Error::UnverifiedCertificate(
            report.reason.unwrap_or_else(|| "certificate does not verify".into()),
        ));
    }
    let x = cert.basis();
    let x_inv = linalg::inverse(&x)?;
    let bbox = region.bounding_box();
    let origin = bbox.center();
    let corners = bbox.corners();
    let mut axes = Vec::with_capacity(n);
    for i in 0..n {
        let row = x_inv.row(i);
        let ts = corners.iter().map(|c| row.dot(&(c - &origin).transpose()));
        let (mut lo, mut hi) = ts.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), t| (l.min(t), h.max(t)));
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let dir = &f.linear * x.column(i);
        let velocity = &dir * cert.eigenvalues[i];
        axes.push(zigzag_curve(&dir, &velocity, eps / n as f64, lo, hi, b)?.to_axis_curve());
    }
    PiecewiseAffineMap::new(
        origin.clone(),
        x,
        f.eval(&origin),
        axes,
        region.clone(),
        a.clone(),
        b.clone(),
    )
}

fn default_depth() -> usize {
    7
}

fn default_sup_samples() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflateParams {
    pub lambda: f64,
    pub eps: f64,
    pub eta: f64,
    /// Core shrink factor for non-affine maps; chosen from `η` when absent.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub budget: SearchBudget,
    /// Finest dyadic level tried when fitting local affine pieces.
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default = "default_sup_samples")]
    pub sup_samples: usize,
}

impl InflateParams {
    pub fn new(lambda: f64, eps: f64, eta: f64) -> Self {
        InflateParams {
            lambda,
            eps,
            eta,
            sigma: None,
            budget: SearchBudget::default(),
            max_depth: default_depth(),
            sup_samples: default_sup_samples(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InflateMode {
    /// `f` is affine: one inflated piecewise-affine map.
    Single,
    /// Local affine fits on dyadic cores, glued over `f`.
    Patched,
    /// `E` is null; `g = f`.
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflateReport {
    pub mode: InflateMode,
    pub lipschitz_f: f64,
    /// Whether `f` was replaced by `(1 − 1e−6)·f` to get `Lip(f) < 1`.
    pub prescaled: bool,
    /// Operator-norm budget of the local affine pieces.
    pub l0: f64,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub depth: Option<usize>,
    pub region_measure: f64,
    /// `η·λ·H^n(E)`.
    pub target: f64,
    /// `∫_E vol g′`: exact in single mode, a lower bound from the cores in
    /// patched mode.
    pub achieved_integral: f64,
    pub integral_is_exact: bool,
    pub target_met: bool,
    pub sup_distance: f64,
    pub sup_samples: usize,
    /// Exact Lipschitz constant (single mode).
    pub lip_exact: Option<f64>,
    /// Proven Lipschitz bound.
    pub lip_bound: f64,
    pub patches: usize,
    pub cells: usize,
    pub min_cell_vol: f64,
    pub seed: u64,
}

#[derive(Clone)]
pub enum InflatedMap {
    Single(PiecewiseAffineMap),
    Patched(GluedMap),
    Trivial(Arc<dyn VectorMap>),
}

impl VectorMap for InflatedMap {
    fn domain_dim(&self) -> usize {
        match self {
            InflatedMap::Single(g) => g.domain_dim(),
            InflatedMap::Patched(g) => g.domain_dim(),
            InflatedMap::Trivial(g) => g.domain_dim(),
        }
    }
    fn codomain_dim(&self) -> usize {
        match self {
            InflatedMap::Single(g) => g.codomain_dim(),
            InflatedMap::Patched(g) => g.codomain_dim(),
            InflatedMap::Trivial(g) => g.codomain_dim(),
        }
    }
    fn eval(&self, x: &Vector) -> Vector {
        match self {
            InflatedMap::Single(g) => g.eval(x),
            InflatedMap::Patched(g) => g.eval(x),
            InflatedMap::Trivial(g) => g.eval(x),
        }
    }
    fn affine_parts(&self) -> Option<(Matrix, Vector)> {
        match self {
            InflatedMap::Single(g) => VectorMap::affine_parts(g),
            InflatedMap::Patched(_) => None,
            InflatedMap::Trivial(g) => g.affine_parts(),
        }
    }
    fn lipschitz_bound(&self, a: &Norm, b: &Norm) -> Option<f64> {
        match self {
            InflatedMap::Single(g) => VectorMap::lipschitz_bound(g, a, b),
            InflatedMap::Patched(g) => VectorMap::lipschitz_bound(g, a, b),
            InflatedMap::Trivial(g) => g.lipschitz_bound(a, b),
        }
    }
}

pub struct InflateOutcome {
    pub map: InflatedMap,
    pub report: InflateReport,
}

struct Scaled {
    inner: Arc<dyn VectorMap>,
    factor: f64,
}

impl VectorMap for Scaled {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn codomain_dim(&self) -> usize {
        self.inner.codomain_dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        self.inner.eval(x) * self.factor
    }
    fn affine_parts(&self) -> Option<(Matrix, Vector)> {
        self.inner
            .affine_parts()
            .map(|(l, c)| (l * self.factor, c * self.factor))
    }
    fn lipschitz_bound(&self, a: &Norm, b: &Norm) -> Option<f64> {
        self.inner.lipschitz_bound(a, b).map(|l| l * self.factor)
    }
}

/// `max |x − c|_a` over the box, attained at a corner.
fn radius_in(b: &BoxRegion, a: &Norm) -> f64 {
    let c = b.center();
    b.corners().iter().map(|x| a.eval(&(x - &c))).fold(0.0, f64::max)
}

/// A full-rank map within `budget` of `l` in `a→b` norm with norm ≤ `l0`,
/// in generic position: a small random full-rank term followed by a small
/// random rotation of the codomain.
fn generic_perturbation(l: &Matrix, lip: f64, l0: f64, budget: f64, a: &Norm, b: &Norm, seed: u64) -> Option<Matrix> {
    let (m, n) = l.shape();
    for attempt in 0..PERTURBATION_ATTEMPTS {
        let mut rng = seeded(derive_seed(seed, attempt));
        let p = gaussian_matrix(&mut rng, m, n);
        let p_norm = operator_norm(&p, a, b).value;
        if p_norm <= 0.0 {
            continue;
        }
        let tau = ((1.0 - lip) / 4.0).min(budget / 2.0);
        let base = l + p * (tau / p_norm);
        let skew = gaussian_matrix(&mut rng, m, m);
        let mut angle = MAX_ROTATION;
        for _ in 0..40 {
            let candidate = cayley_rotation(&skew, angle) * &base;
            let close = operator_norm(&(&candidate - l), a, b).value <= budget;
            let small = operator_norm(&candidate, a, b).value <= l0;
            if close && small && linalg::is_full_rank(&candidate) {
                return Some(candidate);
            }
            angle *= 0.5;
        }
        if linalg::is_full_rank(&base) && operator_norm(&base, a, b).value <= l0 {
            return Some(base);
        }
    }
    None
}

fn certify_local(
    map: &LinearMap,
    lambda: f64,
    budget: SearchBudget,
    seed: u64,
    cell: usize,
) -> Result<InflationCertificate> {
    if map.domain_norm().is_euclidean() && map.codomain_norm().is_euclidean() {
        return euclidean_inflation(map);
    }
    inflation_search(map, lambda, budget, seed)?.ok_or_else(|| Error::LocalSearchFailed {
        cell,
        reason: format!("no {lambda}-inflation found within budget"),
    })
}

/// Build `g` with `|g − f| < eps` on `E`, `Lip(g) ≤ 1` and
/// `∫_E vol g′ ≥ η·λ·H^n(E)` as the target.
///
/// Affine `f` is handled in one piece: perturb to a full-rank map in generic
/// position, certify, inflate. Otherwise `E`'s bounding box is cut into
/// dyadic cells; each cell's shrunk core gets a least-squares affine fit of
/// `f` that is inflated and glued back over `f`. The dyadic level is refined
/// until every fit is within tolerance or `max_depth` is reached.
pub fn inflate_on_set(
    f: Arc<dyn VectorMap>,
    region: &Region,
    a: &Norm,
    b: &Norm,
    params: &InflateParams,
    seed: u64,
) -> Result<InflateOutcome> {
    let (n, m) = (a.dim(), b.dim());
    if f.domain_dim() != n || f.codomain_dim() != m || region.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.domain_dim(),
        });
    }
    if n > m {
        return Err(Error::precondition(format!("need n ≤ m, got n = {n}, m = {m}")));
    }
    let InflateParams { lambda, eps, eta, .. } = *params;
    if !(eps > 0.0) || !(lambda >= 0.0) || !(0.0..1.0).contains(&eta) {
        return Err(Error::precondition(format!(
            "need eps > 0, λ ≥ 0 and η ∈ [0, 1); got eps = {eps}, λ = {lambda}, η = {eta}"
        )));
    }
    let declared = f
        .lipschitz_bound(a, b)
        .ok_or_else(|| Error::precondition("f has no known Lipschitz bound for these norms"))?;
    let (f, lip, prescaled) = if declared < 1.0 {
        (f, declared, false)
    } else if declared <= 1.0 + PRESCALE_WINDOW {
        let factor = 1.0 - PRESCALE_FACTOR;
        let scaled: Arc<dyn VectorMap> = Arc::new(Scaled { inner: f, factor });
        (scaled, declared * factor, true)
    } else {
        return Err(Error::precondition(format!("Lip(f) = {declared} ≥ 1")));
    };
    let measure = region.measure();
    let target = eta * lambda * measure;
    let l0 = 0.5 * (1.0 + lip);
    let mut report = InflateReport {
        mode: InflateMode::Trivial,
        lipschitz_f: lip,
        prescaled,
        l0,
        delta: None,
        sigma: None,
        depth: None,
        region_measure: measure,
        target,
        achieved_integral: 0.0,
        integral_is_exact: true,
        target_met: true,
        sup_distance: 0.0,
        sup_samples: 0,
        lip_exact: None,
        lip_bound: lip,
        patches: 0,
        cells: 0,
        min_cell_vol: f64::NAN,
        seed,
    };
    if measure <= 0.0 {
        return Ok(InflateOutcome {
            map: InflatedMap::Trivial(f),
            report,
        });
    }
    let map = if let Some((l, c)) = f.affine_parts() {
        let radius = radius_in(region.bounding_box(), a).max(1e-300);
        let linear = generic_perturbation(&l, lip, l0, eps / (4.0 * radius), a, b, derive_seed(seed, 1))
            .ok_or_else(|| Error::Numerical("no full-rank perturbation found".into()))?;
        let lin_map = LinearMap::new(linear.clone(), a.clone(), b.clone())?;
        let cert = certify_local(&lin_map, eta * lambda, params.budget, derive_seed(seed, 2), 0)?;
        let origin = region.bounding_box().center();
        let centred = AffineMap::new(linear.clone(), &l * &origin + c - &linear * &origin)?;
        let g = inflate_affine(&centred, &cert, 1.0, region, a, b, eps / 2.0)?;
        report.mode = InflateMode::Single;
        report.achieved_integral = g.jacobian_integral(region)?;
        report.min_cell_vol = g.min_cell_vol(region)?;
        let lip_exact = g.lipschitz_exact();
        report.lip_exact = Some(lip_exact);
        report.lip_bound = lip_exact;
        report.patches = 1;
        report.cells = g.cell_measures(region)?.len();
        InflatedMap::Single(g)
    } else {
        let glued = patched(f.clone(), region, a, b, params, lip, l0, seed, &mut report)?;
        InflatedMap::Patched(glued)
    };
    report.sup_samples = params.sup_samples;
    report.sup_distance = sup_distance(&map, &*f, region, b, params.sup_samples, derive_seed(seed, 3));
    report.target_met = report.achieved_integral >= target;
    Ok(InflateOutcome { map, report })
}

/// Least-squares affine fit `(L, c)` of `f` on `points`.
fn fit_affine(f: &dyn VectorMap, points: &[Vector]) -> Option<(Matrix, Vector)> {
    let n = points[0].len();
    let m = f.codomain_dim();
    let design = Matrix::from_fn(points.len(), n + 1, |r, j| if j < n { points[r][j] } else { 1.0 });
    let values: Vec<Vector> = points.iter().map(|p| f.eval(p)).collect();
    let rhs = Matrix::from_fn(points.len(), m, |r, k| values[r][k]);
    let coef = design.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let l = Matrix::from_fn(m, n, |k, j| coef[(j, k)]);
    let c = Vector::from_fn(m, |k, _| coef[(n, k)]);
    Some((l, c))
}

struct LocalPiece {
    core: BoxRegion,
    map: PiecewiseAffineMap,
    vol: f64,
}

#[allow(clippy::too_many_arguments)]
fn patched(
    f: Arc<dyn VectorMap>,
    region: &Region,
    a: &Norm,
    b: &Norm,
    params: &InflateParams,
    lip: f64,
    l0: f64,
    seed: u64,
    report: &mut InflateReport,
) -> Result<GluedMap> {
    let n = a.dim();
    let InflateParams { lambda, eps, eta, .. } = *params;
    let sigma = params
        .sigma
        .unwrap_or_else(|| (eta.powf(0.5 / n as f64) * (1.0 + 5e-4)).clamp(0.9, 1.0 - 1e-6));
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::precondition(format!("σ = {sigma} not in (0, 1)")));
    }
    let local_lambda = if eta * lambda > 0.0 {
        eta * lambda / sigma.powi(n as i32)
    } else {
        0.0
    };
    let delta = 0.99 * (eps / 2.0).min((1.0 - l0) / 4.0);
    let unit: Vec<Vector> = (0..n)
        .map(|j| {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            e
        })
        .collect();
    // |v|_a ≥ |v|_∞ / reach for every v.
    let reach = unit.iter().map(|e| a.dual(e)).fold(0.0, f64::max);
    let bbox = region.bounding_box();
    let mut last_failure = String::new();
    for depth in 0..=params.max_depth {
        let per_axis = 1usize << depth;
        let total = per_axis.pow(n as u32);
        let h: Vec<f64> = (0..n).map(|j| bbox.width(j) / per_axis as f64).collect();
        let rho = ((1.0 - sigma) * h.iter().copied().fold(f64::INFINITY, f64::min) / (2.0 * reach)).min(1.0);
        if !(rho > 0.0) {
            return Err(Error::precondition("E has an empty side; nothing to inflate"));
        }
        let cell_box = |k: usize| {
            let mut rest = k;
            let lo: Vec<f64> = (0..n)
                .map(|j| {
                    let i = rest % per_axis;
                    rest /= per_axis;
                    bbox.lo()[j] + i as f64 * h[j]
                })
                .collect();
            let hi = lo.iter().zip(&h).map(|(l, w)| l + w).collect();
            BoxRegion::new(lo, hi).expect("ordered")
        };
        let active: Vec<usize> = (0..total)
            .filter(|&k| region.intersection_measure(&cell_box(k)) > 0.0)
            .collect();
        let pieces = map_indexed(active.len(), |i| -> Result<Option<LocalPiece>> {
            let k = active[i];
            let core = cell_box(k).scaled_about_center(sigma);
            let patch_box = core.expanded(rho * reach);
            let stencil = patch_box.lattice(FIT_STENCIL);
            let Some((l, c)) = fit_affine(&*f, &stencil) else {
                return Ok(None);
            };
            let radius = radius_in(&patch_box, a);
            let cell_seed = derive_seed(seed, 1000 + k as u64);
            let Some(linear) = generic_perturbation(&l, lip, l0, delta * rho / (8.0 * radius), a, b, cell_seed) else {
                return Ok(None);
            };
            let affine = AffineMap::new(
                linear.clone(),
                &l * patch_box.center() + c - &linear * patch_box.center(),
            )?;
            let fine = patch_box.lattice(CHECK_STENCIL);
            let residual = fine
                .iter()
                .map(|x| b.eval(&(affine.eval(x) - f.eval(x))))
                .fold(0.0, f64::max);
            if residual > 0.25 * delta * rho {
                return Ok(None);
            }
            let lin_map = LinearMap::new(linear, a.clone(), b.clone())?;
            let cert = certify_local(&lin_map, local_lambda, params.budget, derive_seed(cell_seed, 7), k)?;
            let map = inflate_affine(&affine, &cert, 1.0, &Region::Box(patch_box), a, b, delta * rho)?;
            Ok(Some(LocalPiece {
                core,
                map,
                vol: cert.min_sign_vol,
            }))
        });
        let mut built = Vec::with_capacity(pieces.len());
        let mut refine = false;
        for (i, p) in pieces.into_iter().enumerate() {
            match p? {
                Some(piece) => built.push(piece),
                None => {
                    refine = true;
                    last_failure = format!("cell {} at depth {depth}", active[i]);
                    break;
                }
            }
        }
        if refine {
            continue;
        }
        report.mode = InflateMode::Patched;
        report.delta = Some(delta);
        report.sigma = Some(sigma);
        report.depth = Some(depth);
        report.integral_is_exact = false;
        report.achieved_integral = built.iter().map(|p| p.vol * region.intersection_measure(&p.core)).sum();
        report.min_cell_vol = built.iter().map(|p| p.vol).fold(f64::INFINITY, f64::min);
        report.patches = built.len();
        report.cells = built.iter().map(|p| p.map.cell_count()).sum();
        let spec = PatchSpec {
            base: f,
            patches: built
                .into_iter()
                .map(|p| Patch {
                    set: PatchSet::Box(p.core),
                    rho,
                    map: Arc::new(p.map),
                })
                .collect(),
            delta,
            domain_norm: a.clone(),
            codomain_norm: b.clone(),
        };
        let glued = glue_patches(spec, l0, derive_seed(seed, 4))?;
        report.lip_bound = glued.lipschitz_bound();
        return Ok(glued);
    }
    Err(Error::LocalSearchFailed {
        cell: 0,
        reason: format!(
            "affine fit not within tolerance up to depth {}: {last_failure}",
            params.max_depth
        ),
    })
}
