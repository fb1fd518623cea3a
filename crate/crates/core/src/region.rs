//! Bounded measurable subsets of ℝⁿ: boxes and finite unions of grid cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::rng::{uniform, SeededRng};

/// Closed box `∏ [loᵢ, hiᵢ]`. Zero-width sides are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct BoxRegion {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRepr {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<BoxRepr> for BoxRegion {
    type Error = Error;
    fn try_from(r: BoxRepr) -> Result<Self> {
        BoxRegion::new(r.lo, r.hi)
    }
}

impl From<BoxRegion> for BoxRepr {
    fn from(b: BoxRegion) -> Self {
        BoxRepr { lo: b.lo, hi: b.hi }
    }
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::precondition("box must have positive dimension"));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) || lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::precondition("box needs finite bounds with lo ≤ hi"));
        }
        Ok(BoxRegion { lo, hi })
    }

    /// `[lo, hi]ⁿ`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        BoxRegion::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn center(&self) -> Vector {
        Vector::from_fn(self.dim(), |i, _| 0.5 * (self.lo[i] + self.hi[i]))
    }

    /// Largest Euclidean distance from the center to a corner.
    pub fn circumradius(&self) -> f64 {
        0.5 * (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    pub fn clamp(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.dim(), |i, _| x[i].clamp(self.lo[i], self.hi[i]))
    }

    pub fn intersection(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        lo.iter().zip(&hi).all(|(l, h)| l <= h).then_some(BoxRegion { lo, hi })
    }

    /// Box grown by `r` on every side.
    pub fn expanded(&self, r: f64) -> BoxRegion {
        BoxRegion {
            lo: self.lo.iter().map(|v| v - r).collect(),
            hi: self.hi.iter().map(|v| v + r).collect(),
        }
    }

    /// Box shrunk about its center by `factor ∈ [0, 1]`.
    pub fn scaled_about_center(&self, factor: f64) -> BoxRegion {
        let c = self.center();
        BoxRegion {
            lo: (0..self.dim()).map(|i| c[i] - 0.5 * factor * self.width(i)).collect(),
            hi: (0..self.dim()).map(|i| c[i] + 0.5 * factor * self.width(i)).collect(),
        }
    }

    pub fn corners(&self) -> Vec<Vector> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] }))
            .collect()
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vector {
        Vector::from_fn(self.dim(), |i, _| uniform(rng, self.lo[i], self.hi[i]))
    }

    /// Regular grid with `per_axis` points per side, endpoints included.
    pub fn lattice(&self, per_axis: usize) -> Vec<Vector> {
        let n = self.dim();
        let k = per_axis.max(1);
        let coord = |i: usize, j: usize| {
            let t = if k == 1 { 0.5 } else { j as f64 / (k - 1) as f64 };
            self.lo[i] + t * self.width(i)
        };
        (0..k.pow(n as u32))
            .map(|idx| {
                let mut rest = idx;
                Vector::from_fn(n, |i, _| {
                    let j = rest % k;
                    rest /= k;
                    coord(i, j)
                })
            })
            .collect()
    }
}

/// Union of cells of a uniform grid over a bounding box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSet {
    bounds: BoxRegion,
    counts: Vec<usize>,
    mask: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
    /// Multi-indices of the included cells.
    cells: Vec<Vec<usize>>,
}

impl TryFrom<GridRepr> for GridSet {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        let bounds = BoxRegion::new(r.lo, r.hi)?;
        let mut g = GridSet::empty(bounds, r.counts)?;
        for c in &r.cells {
            g.insert(c)?;
        }
        Ok(g)
    }
}

impl From<GridSet> for GridRepr {
    fn from(g: GridSet) -> Self {
        let cells = (0..g.mask.len())
            .filter(|&k| g.mask[k])
            .map(|k| g.multi_index(k))
            .collect();
        GridRepr {
            lo: g.bounds.lo,
            hi: g.bounds.hi,
            counts: g.counts,
            cells,
        }
    }
}

impl GridSet {
    pub fn empty(bounds: BoxRegion, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != bounds.dim() {
            return Err(Error::DimensionMismatch {
                expected: bounds.dim(),
                found: counts.len(),
            });
        }
        if counts.contains(&0) {
            return Err(Error::precondition("grid counts must be positive"));
        }
        let total = counts.iter().product();
        Ok(GridSet {
            bounds,
            counts,
            mask: vec![false; total],
        })
    }

    /// Cells whose center satisfies `keep`.
    pub fn from_predicate(bounds: BoxRegion, counts: Vec<usize>, keep: impl Fn(&Vector) -> bool) -> Result<Self> {
        let mut g = GridSet::empty(bounds, counts)?;
        for k in 0..g.mask.len() {
            g.mask[k] = keep(&g.cell(k).center());
        }
        Ok(g)
    }

    pub fn insert(&mut self, index: &[usize]) -> Result<()> {
        if index.len() != self.counts.len() || index.iter().zip(&self.counts).any(|(i, c)| i >= c) {
            return Err(Error::precondition(format!("grid cell {index:?} out of range")));
        }
        let k = self.linear_index(index);
        self.mask[k] = true;
        Ok(())
    }

    fn linear_index(&self, index: &[usize]) -> usize {
        let mut k = 0;
        for i in (0..index.len()).rev() {
            k = k * self.counts[i] + index[i];
        }
        k
    }

    fn multi_index(&self, mut k: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let i = k % c;
                k /= c;
                i
            })
            .collect()
    }

    fn cell(&self, k: usize) -> BoxRegion {
        let idx = self.multi_index(k);
        let lo = (0..self.counts.len())
            .map(|i| self.bounds.lo[i] + self.bounds.width(i) * idx[i] as f64 / self.counts[i] as f64)
            .collect();
        let hi = (0..self.counts.len())
            .map(|i| self.bounds.lo[i] + self.bounds.width(i) * (idx[i] + 1) as f64 / self.counts[i] as f64)
            .collect();
        BoxRegion { lo, hi }
    }

    pub fn bounds(&self) -> &BoxRegion {
        &self.bounds
    }

    pub fn cells(&self) -> Vec<BoxRegion> {
        (0..self.mask.len())
            .filter(|&k| self.mask[k])
            .map(|k| self.cell(k))
            .collect()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        if !self.bounds.contains(x) {
            return false;
        }
        let idx: Vec<usize> = (0..self.counts.len())
            .map(|i| {
                let w = self.bounds.width(i);
                if w == 0.0 {
                    return 0;
                }
                let t = ((x[i] - self.bounds.lo[i]) / w * self.counts[i] as f64).floor();
                (t.max(0.0) as usize).min(self.counts[i] - 1)
            })
            .collect();
        self.mask[self.linear_index(&idx)]
    }
}

/// Domain of a construction or measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Box(BoxRegion),
    Grid(GridSet),
}

impl From<BoxRegion> for Region {
    fn from(b: BoxRegion) -> Self {
        Region::Box(b)
    }
}

impl From<GridSet> for Region {
    fn from(g: GridSet) -> Self {
        Region::Grid(g)
    }
}

impl Region {
    pub fn dim(&self) -> usize {
        self.bounding_box().dim()
    }

    pub fn bounding_box(&self) -> &BoxRegion {
        match self {
            Region::Box(b) => b,
            Region::Grid(g) => g.bounds(),
        }
    }

    /// Disjoint (up to null sets) boxes whose union is the region.
    pub fn boxes(&self) -> Vec<BoxRegion> {
        match self {
            Region::Box(b) => vec![b.clone()],
            Region::Grid(g) => g.cells(),
        }
    }

    pub fn measure(&self) -> f64 {
        self.boxes().iter().map(BoxRegion::volume).sum()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        match self {
            Region::Box(b) => b.contains(x),
            Region::Grid(g) => g.contains(x),
        }
    }

    /// Lebesgue measure of `self ∩ other`.
    pub fn intersection_measure(&self, other: &BoxRegion) -> f64 {
        self.boxes()
            .iter()
            .filter_map(|b| b.intersection(other))
            .map(|b| b.volume())
            .sum()
    }

    /// Uniform sample from the region; falls back to the bounding box when
    /// the region is null.
    pub fn sample(&self, rng: &mut SeededRng) -> Vector {
        let boxes = self.boxes();
        let total: f64 = boxes.iter().map(BoxRegion::volume).sum();
        if total <= 0.0 {
            return self.bounding_box().sample(rng);
        }
        let mut pick = uniform(rng, 0.0, total);
        for b in &boxes {
            let v = b.volume();
            if pick <= v {
                return b.sample(rng);
            }
            pick -= v;
        }
        boxes.last().expect("nonempty").sample(rng)
    }

    /// Lattice points of the bounding box that lie in the region.
    pub fn lattice(&self, per_axis: usize) -> Vec<Vector> {
        self.bounding_box()
            .lattice(per_axis)
            .into_iter()
            .filter(|x| self.contains(x))
            .collect()
    }
}
