//! Gluing local modifications into a global map with a bump function per
//! patch: `g = f + Σᵢ χᵢ·(gᵢ − f)`, `χᵢ = max(ρᵢ/2 − dist(x, Sᵢ), 0)/(ρᵢ/2)`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::map::VectorMap;
use crate::norm::Norm;
use crate::region::BoxRegion;
use crate::rng::{derive_seed, seeded, uniform};

/// Relative slack on the deviation hypothesis and the disjointness check.
const HYPOTHESIS_TOL: f64 = 1e-9;
/// Samples per patch when checking `|gᵢ − f| ≤ δρᵢ`.
const DEVIATION_SAMPLES: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub enum PatchSet {
    Box(BoxRegion),
    Points(Vec<Vector>),
}

impl PatchSet {
    fn bounds(&self) -> BoxRegion {
        match self {
            PatchSet::Box(b) => b.clone(),
            PatchSet::Points(ps) => {
                let n = ps[0].len();
                let lo = (0..n)
                    .map(|j| ps.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
                    .collect();
                let hi = (0..n)
                    .map(|j| ps.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max))
                    .collect();
                BoxRegion::new(lo, hi).expect("point bounds are ordered")
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            PatchSet::Box(b) => b.dim(),
            PatchSet::Points(ps) => ps.first().map_or(0, Vector::len),
        }
    }

    /// `dist_a(x, S)`; boxes need an absolute norm, checked by the caller.
    pub fn distance(&self, x: &Vector, a: &Norm) -> f64 {
        match self {
            PatchSet::Box(b) => a.eval(&(x - b.clamp(x))),
            PatchSet::Points(ps) => ps.iter().map(|p| a.eval(&(x - p))).fold(f64::INFINITY, f64::min),
        }
    }

    fn distance_to(&self, other: &PatchSet, a: &Norm) -> f64 {
        match (self, other) {
            (PatchSet::Box(p), PatchSet::Box(q)) => {
                let gap = Vector::from_fn(p.dim(), |j, _| {
                    (q.lo()[j] - p.hi()[j]).max(p.lo()[j] - q.hi()[j]).max(0.0)
                });
                a.eval(&gap)
            }
            (PatchSet::Points(ps), s) | (s, PatchSet::Points(ps)) => {
                ps.iter().map(|p| s.distance(p, a)).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[derive(Clone)]
pub struct Patch {
    pub set: PatchSet,
    pub rho: f64,
    pub map: Arc<dyn VectorMap>,
}

#[derive(Clone)]
pub struct PatchSpec {
    pub base: Arc<dyn VectorMap>,
    pub patches: Vec<Patch>,
    pub delta: f64,
    pub domain_norm: Norm,
    pub codomain_norm: Norm,
}

/// Uniform buckets over the patch neighbourhoods, so evaluation only looks
/// at nearby patches.
#[derive(Clone, Debug)]
struct BucketIndex {
    origin: Vec<f64>,
    size: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl BucketIndex {
    fn build(reach: &[BoxRegion]) -> Self {
        let n = reach.first().map_or(0, BoxRegion::dim);
        let size = reach
            .iter()
            .flat_map(|b| (0..n).map(move |j| b.width(j)))
            .fold(0.0, f64::max)
            .max(1e-12);
        let origin: Vec<f64> = (0..n)
            .map(|j| reach.iter().map(|b| b.lo()[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let mut index = BucketIndex {
            origin,
            size,
            buckets: HashMap::new(),
        };
        for (i, b) in reach.iter().enumerate() {
            let lo = index.key(b.lo());
            let hi = index.key(b.hi());
            let span: Vec<usize> = (0..n).map(|j| (hi[j] - lo[j] + 1) as usize).collect();
            let total: usize = span.iter().product();
            for mut k in 0..total {
                let mut key = lo.clone();
                for j in 0..n {
                    key[j] += (k % span[j]) as i64;
                    k /= span[j];
                }
                index.buckets.entry(key).or_default().push(i);
            }
        }
        index
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .zip(&self.origin)
            .map(|(v, o)| ((v - o) / self.size).floor() as i64)
            .collect()
    }

    fn candidates(&self, x: &Vector) -> &[usize] {
        let key = self.key(x.as_slice());
        self.buckets.get(&key).map_or(&[], Vec::as_slice)
    }
}

/// The glued map. Evaluates to `gᵢ(x)` exactly on `Sᵢ` and to `f(x)` exactly
/// where no bump is active.
#[derive(Clone)]
pub struct GluedMap {
    spec: PatchSpec,
    index: BucketIndex,
    lipschitz_bound: f64,
}

impl GluedMap {
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn patches(&self) -> &[Patch] {
        &self.spec.patches
    }

    pub fn base(&self) -> &Arc<dyn VectorMap> {
        &self.spec.base
    }

    /// Index of the patch whose bump is active at `x`, with its weight.
    pub fn active_patch(&self, x: &Vector) -> Option<(usize, f64)> {
        let a = &self.spec.domain_norm;
        self.index.candidates(x).iter().find_map(|&i| {
            let p = &self.spec.patches[i];
            let d = p.set.distance(x, a);
            let half = 0.5 * p.rho;
            (d < half).then(|| (i, if d == 0.0 { 1.0 } else { (half - d) / half }))
        })
    }
}

impl VectorMap for GluedMap {
    fn domain_dim(&self) -> usize {
        self.spec.base.domain_dim()
    }
    fn codomain_dim(&self) -> usize {
        self.spec.base.codomain_dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        match self.active_patch(x) {
            None => self.spec.base.eval(x),
            Some((i, 1.0)) => self.spec.patches[i].map.eval(x),
            Some((i, chi)) => {
                let f = self.spec.base.eval(x);
                let g = self.spec.patches[i].map.eval(x);
                &f + (g - &f) * chi
            }
        }
    }
    fn lipschitz_bound(&self, a: &Norm, b: &Norm) -> Option<f64> {
        (a == &self.spec.domain_norm && b == &self.spec.codomain_norm).then_some(self.lipschitz_bound)
    }
}

/// Glue `spec` over a base map that is `lip`-Lipschitz (as are the patch
/// maps). Checks disjointness of the neighbourhoods `B(Sᵢ, ρᵢ)` exactly and
/// the deviation `|gᵢ − f| ≤ δρᵢ` on seeded samples; the result satisfies
/// `|g − f| < δ` and is `(lip + 4δ)`-Lipschitz.
pub fn glue_patches(spec: PatchSpec, lip: f64, seed: u64) -> Result<GluedMap> {
    let a = &spec.domain_norm;
    let b = &spec.codomain_norm;
    let n = spec.base.domain_dim();
    if a.dim() != n || b.dim() != spec.base.codomain_dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.dim(),
        });
    }
    if !(spec.delta > 0.0) || !(lip >= 0.0) {
        return Err(Error::precondition("δ must be positive and L nonnegative"));
    }
    // `‖id‖_{a→∞}`: B_a(S, ρ) lies in S grown by ρ times this in every axis.
    let reach_factor = (0..n)
        .map(|j| {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            a.dual(&e)
        })
        .fold(0.0, f64::max);
    for (i, p) in spec.patches.iter().enumerate() {
        if !(p.rho > 0.0 && p.rho <= 1.0) {
            return Err(Error::precondition(format!("patch {i}: ρ = {} not in (0, 1]", p.rho)));
        }
        if p.set.dim() != n || p.map.domain_dim() != n || p.map.codomain_dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.set.dim(),
            });
        }
        if matches!(p.set, PatchSet::Box(_)) && !a.is_absolute() {
            return Err(Error::precondition(
                "box patches need a domain norm invariant under coordinate sign flips",
            ));
        }
        if let PatchSet::Points(ps) = &p.set {
            if ps.is_empty() {
                return Err(Error::precondition(format!("patch {i} has no points")));
            }
        }
    }
    let reach: Vec<BoxRegion> = spec
        .patches
        .iter()
        .map(|p| p.set.bounds().expanded(p.rho * reach_factor))
        .collect();
    let index = BucketIndex::build(&reach);
    for (i, p) in spec.patches.iter().enumerate() {
        let mut seen: Vec<usize> = Vec::new();
        for corner in reach[i].corners() {
            seen.extend(index.candidates(&corner).iter().copied().filter(|&j| j > i));
        }
        seen.sort_unstable();
        seen.dedup();
        for j in seen {
            let q = &spec.patches[j];
            let d = p.set.distance_to(&q.set, a);
            if d < (p.rho + q.rho) * (1.0 - HYPOTHESIS_TOL) {
                return Err(Error::precondition(format!(
                    "neighbourhoods of patches {i} and {j} overlap: distance {d} < ρ sum {}",
                    p.rho + q.rho
                )));
            }
        }
    }
    for (i, p) in spec.patches.iter().enumerate() {
        let mut rng = seeded(derive_seed(seed, i as u64));
        let bound = spec.delta * p.rho * (1.0 + HYPOTHESIS_TOL);
        let mut checked = 0;
        let mut attempts = 0;
        while checked < DEVIATION_SAMPLES && attempts < 8 * DEVIATION_SAMPLES {
            attempts += 1;
            let x = Vector::from_fn(n, |j, _| uniform(&mut rng, reach[i].lo()[j], reach[i].hi()[j]));
            if p.set.distance(&x, a) > p.rho {
                continue;
            }
            checked += 1;
            let dev = b.eval(&(p.map.eval(&x) - spec.base.eval(&x)));
            if dev > bound {
                return Err(Error::precondition(format!(
                    "patch {i}: |gᵢ − f| = {dev} exceeds δρ = {}",
                    spec.delta * p.rho
                )));
            }
        }
    }
    let lipschitz_bound = lip + 4.0 * spec.delta;
    Ok(GluedMap {
        spec,
        index,
        lipschitz_bound,
    })
}
