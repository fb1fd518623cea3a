//! Piecewise-affine maps on a product grid: `g(x) = c + Σᵢ γᵢ(tᵢ(x))` with
//! `t(x) = X⁻¹(x − o)` and each `γᵢ` a polygonal curve in ℝᵐ.
//!
//! Cells are products of curve segments, i.e. parallelepipeds in the frame
//! `(o, X)`. On a cell with segment indices `(k₁, …, kₙ)` the derivative is
//! `Σᵢ γᵢ′(kᵢ)·(X⁻¹)ᵢ`, so the set of linear parts is the product of the
//! per-axis slope sets and every cell quantity is computed exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constructions::zigzag::AxisCurve;
use crate::error::{Error, Result};
use crate::linalg::{self, matrix_from_rows, matrix_to_rows, Matrix, Vector};
use crate::linear_map::operator_norm;
use crate::map::{AffineMap, VectorMap};
use crate::norm::Norm;
use crate::polytope::{ConvexPolytope, Halfspace};
use crate::region::{BoxRegion, Region};

/// Relative slack when checking that the grid covers a region.
const COVER_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PiecewiseRepr {
    origin: Vec<f64>,
    /// Rows of the frame matrix `X`; its columns are the grid directions.
    basis: Vec<Vec<f64>>,
    offset: Vec<f64>,
    axes: Vec<AxisCurve>,
    domain: Region,
    domain_norm: Norm,
    codomain_norm: Norm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseRepr", into = "PiecewiseRepr")]
pub struct PiecewiseAffineMap {
    origin: Vector,
    basis: Matrix,
    basis_inv: Matrix,
    offset: Vector,
    axes: Vec<AxisCurve>,
    domain: Region,
    domain_norm: Norm,
    codomain_norm: Norm,
    /// Per axis: distinct slopes and the class of each segment.
    classes: Vec<(Vec<Vector>, Vec<usize>)>,
}

impl TryFrom<PiecewiseRepr> for PiecewiseAffineMap {
    type Error = Error;
    fn try_from(r: PiecewiseRepr) -> Result<Self> {
        PiecewiseAffineMap::new(
            Vector::from_vec(r.origin),
            matrix_from_rows(&r.basis)?,
            Vector::from_vec(r.offset),
            r.axes,
            r.domain,
            r.domain_norm,
            r.codomain_norm,
        )
    }
}

impl From<PiecewiseAffineMap> for PiecewiseRepr {
    fn from(g: PiecewiseAffineMap) -> Self {
        PiecewiseRepr {
            origin: g.origin.iter().copied().collect(),
            basis: matrix_to_rows(&g.basis),
            offset: g.offset.iter().copied().collect(),
            axes: g.axes,
            domain: g.domain,
            domain_norm: g.domain_norm,
            codomain_norm: g.codomain_norm,
        }
    }
}

/// One cell of the grid restricted to a region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub index: Vec<usize>,
    pub t_lo: Vec<f64>,
    pub t_hi: Vec<f64>,
    /// Lebesgue measure of the cell inside the region.
    pub measure: f64,
    pub vol: f64,
    pub op_norm: f64,
    /// Rows of the linear part.
    pub linear: Vec<Vec<f64>>,
    /// `b` in `g(x) = Jx + b` on this cell.
    pub offset: Vec<f64>,
}

fn slope_classes(curve: &AxisCurve) -> (Vec<Vector>, Vec<usize>) {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut slopes = Vec::new();
    let mut of_segment = Vec::with_capacity(curve.segments());
    for s in &curve.slopes {
        let key: Vec<u64> = s.iter().map(|v| (v + 0.0).to_bits()).collect();
        let id = *index.entry(key).or_insert_with(|| {
            slopes.push(s.clone());
            slopes.len() - 1
        });
        of_segment.push(id);
    }
    (slopes, of_segment)
}

fn unflatten(mut k: usize, counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .map(|&c| {
            let i = k % c;
            k /= c;
            i
        })
        .collect()
}

fn flatten(index: &[usize], counts: &[usize]) -> usize {
    let mut k = 0;
    for i in (0..index.len()).rev() {
        k = k * counts[i] + index[i];
    }
    k
}

/// Indices of segments of `knots` meeting `[lo, hi]`, with overlap lengths.
fn overlaps(knots: &[f64], lo: f64, hi: f64) -> Vec<(usize, f64)> {
    let start = knots.partition_point(|&s| s <= lo).saturating_sub(1);
    let mut out = Vec::new();
    for k in start..knots.len() - 1 {
        if knots[k] >= hi {
            break;
        }
        let len = knots[k + 1].min(hi) - knots[k].max(lo);
        if len > 0.0 {
            out.push((k, len));
        }
    }
    out
}

impl PiecewiseAffineMap {
    pub fn new(
        origin: Vector,
        basis: Matrix,
        offset: Vector,
        axes: Vec<AxisCurve>,
        domain: Region,
        domain_norm: Norm,
        codomain_norm: Norm,
    ) -> Result<Self> {
        let n = domain_norm.dim();
        let m = codomain_norm.dim();
        if origin.len() != n || basis.nrows() != n || basis.ncols() != n || axes.len() != n || domain.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: axes.len(),
            });
        }
        if offset.len() != m || axes.iter().any(|c| c.codomain_dim() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: offset.len(),
            });
        }
        let basis_inv = linalg::inverse(&basis).map_err(|_| Error::precondition("grid frame is not invertible"))?;
        let classes = axes.iter().map(slope_classes).collect();
        let g = PiecewiseAffineMap {
            origin,
            basis,
            basis_inv,
            offset,
            axes,
            domain,
            domain_norm,
            codomain_norm,
            classes,
        };
        g.check_covers(g.domain.bounding_box())?;
        Ok(g)
    }

    /// The affine map itself, as a one-cell grid over `domain`.
    pub fn from_affine(f: &AffineMap, domain: Region, a: Norm, b: Norm) -> Result<Self> {
        let bbox = domain.bounding_box().clone();
        let n = bbox.dim();
        let origin = bbox.center();
        let axes = (0..n)
            .map(|i| {
                let half = (0.5 * bbox.width(i)).max(0.5);
                let slope: Vector = f.linear.column(i).into();
                AxisCurve::from_slopes(vec![-half, half], &slope * -half, vec![slope.clone()])
            })
            .collect::<Result<Vec<_>>>()?;
        PiecewiseAffineMap::new(
            origin.clone(),
            Matrix::identity(n, n),
            f.eval(&origin),
            axes,
            domain,
            a,
            b,
        )
    }

    fn check_covers(&self, bbox: &BoxRegion) -> Result<()> {
        for i in 0..self.domain_dim() {
            let (lo, hi) = self.t_range(bbox, i);
            let knots = &self.axes[i].knots;
            let slack = COVER_TOL * (1.0 + lo.abs().max(hi.abs()));
            if knots[0] > lo + slack || knots[knots.len() - 1] < hi - slack {
                return Err(Error::precondition(format!(
                    "grid axis {i} spans [{}, {}] but the region needs [{lo}, {hi}]",
                    knots[0],
                    knots[knots.len() - 1]
                )));
            }
        }
        Ok(())
    }

    /// Range of `tᵢ` over a box.
    fn t_range(&self, b: &BoxRegion, i: usize) -> (f64, f64) {
        let row = self.basis_inv.row(i);
        let mut lo = -row.dot(&self.origin.transpose());
        let mut hi = lo;
        for j in 0..b.dim() {
            let (p, q) = (row[j] * b.lo()[j], row[j] * b.hi()[j]);
            lo += p.min(q);
            hi += p.max(q);
        }
        (lo, hi)
    }

    pub fn domain_dim(&self) -> usize {
        self.origin.len()
    }

    pub fn codomain_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn domain_norm(&self) -> &Norm {
        &self.domain_norm
    }

    pub fn codomain_norm(&self) -> &Norm {
        &self.codomain_norm
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn origin(&self) -> &Vector {
        &self.origin
    }

    pub fn axes(&self) -> &[AxisCurve] {
        &self.axes
    }

    pub fn coords(&self, x: &Vector) -> Vector {
        &self.basis_inv * (x - &self.origin)
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        let t = self.coords(x);
        let mut y = self.offset.clone();
        for (i, c) in self.axes.iter().enumerate() {
            y += c.eval(t[i]);
        }
        y
    }

    pub fn cell_counts(&self) -> Vec<usize> {
        self.axes.iter().map(AxisCurve::segments).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.cell_counts().iter().product()
    }

    pub fn cell_of(&self, x: &Vector) -> Vec<usize> {
        let t = self.coords(x);
        self.axes.iter().enumerate().map(|(i, c)| c.segment(t[i])).collect()
    }

    fn linear_from_slopes(&self, slopes: &[&Vector]) -> Matrix {
        let (n, m) = (self.domain_dim(), self.codomain_dim());
        let mut j = Matrix::zeros(m, n);
        for (i, s) in slopes.iter().enumerate() {
            j += *s * self.basis_inv.row(i);
        }
        j
    }

    /// Derivative on the cell with segment indices `index`.
    pub fn linear_part(&self, index: &[usize]) -> Matrix {
        let slopes: Vec<&Vector> = index
            .iter()
            .enumerate()
            .map(|(i, &k)| &self.axes[i].slopes[k])
            .collect();
        self.linear_from_slopes(&slopes)
    }

    fn cell_lower_corner(&self, index: &[usize]) -> Vector {
        let t = Vector::from_fn(self.domain_dim(), |i, _| self.axes[i].knots[index[i]]);
        &self.origin + &self.basis * t
    }

    /// `(J, b)` with `g(x) = Jx + b` on the cell.
    pub fn cell_affine(&self, index: &[usize]) -> (Matrix, Vector) {
        let j = self.linear_part(index);
        let x0 = self.cell_lower_corner(index);
        let mut y0 = self.offset.clone();
        for (i, c) in self.axes.iter().enumerate() {
            y0 += &c.values[index[i]];
        }
        let b = y0 - &j * x0;
        (j, b)
    }

    fn class_counts(&self) -> Vec<usize> {
        self.classes.iter().map(|(s, _)| s.len()).collect()
    }

    fn class_key(&self, index: &[usize]) -> usize {
        let classes: Vec<usize> = index.iter().enumerate().map(|(i, &k)| self.classes[i].1[k]).collect();
        flatten(&classes, &self.class_counts())
    }

    /// Every distinct linear part, keyed by class combination.
    pub fn distinct_linear_parts(&self) -> Vec<Matrix> {
        let counts = self.class_counts();
        let total: usize = counts.iter().product();
        (0..total)
            .map(|k| {
                let combo = unflatten(k, &counts);
                let slopes: Vec<&Vector> = combo.iter().enumerate().map(|(i, &c)| &self.classes[i].0[c]).collect();
                self.linear_from_slopes(&slopes)
            })
            .collect()
    }

    /// `(vol, operator norm)` of each distinct linear part.
    fn class_metrics(&self) -> Vec<(f64, f64)> {
        self.distinct_linear_parts()
            .iter()
            .map(|j| {
                let vol = if j.ncols() <= j.nrows() {
                    linalg::vol(j).unwrap_or(0.0)
                } else {
                    0.0
                };
                (vol, operator_norm(j, &self.domain_norm, &self.codomain_norm).value)
            })
            .collect()
    }

    /// Exact Lipschitz constant of `g` on ℝⁿ: the largest cell operator norm.
    pub fn lipschitz_exact(&self) -> f64 {
        self.class_metrics().iter().map(|m| m.1).fold(0.0, f64::max)
    }

    /// Measure of `cell ∩ region` for every cell that meets `region`, sorted
    /// by flattened cell index.
    pub fn cell_measures(&self, region: &Region) -> Result<Vec<(Vec<usize>, f64)>> {
        if region.dim() != self.domain_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim(),
                found: region.dim(),
            });
        }
        self.check_covers(region.bounding_box())?;
        let counts = self.cell_counts();
        let mut acc: HashMap<usize, f64> = HashMap::new();
        let diagonal = self.is_diagonal();
        for b in region.boxes() {
            if b.volume() <= 0.0 {
                continue;
            }
            if diagonal {
                self.box_cells_diagonal(&b, &counts, &mut acc);
            } else {
                self.box_cells_general(&b, &counts, &mut acc);
            }
        }
        let mut out: Vec<(usize, f64)> = acc.into_iter().filter(|(_, v)| *v > 0.0).collect();
        out.sort_by_key(|(k, _)| *k);
        Ok(out.into_iter().map(|(k, v)| (unflatten(k, &counts), v)).collect())
    }

    fn box_cells_diagonal(&self, b: &BoxRegion, counts: &[usize], acc: &mut HashMap<usize, f64>) {
        let n = self.domain_dim();
        let per_axis: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let (lo, hi) = self.t_range(b, i);
                let scale = self.basis[(i, i)].abs();
                overlaps(&self.axes[i].knots, lo, hi)
                    .into_iter()
                    .map(|(k, len)| (k, len * scale))
                    .collect()
            })
            .collect();
        let sizes: Vec<usize> = per_axis.iter().map(Vec::len).collect();
        if sizes.contains(&0) {
            return;
        }
        let total: usize = sizes.iter().product();
        for k in 0..total {
            let pick = unflatten(k, &sizes);
            let mut measure = 1.0;
            let mut index = Vec::with_capacity(n);
            for i in 0..n {
                let (seg, len) = per_axis[i][pick[i]];
                measure *= len;
                index.push(seg);
            }
            *acc.entry(flatten(&index, counts)).or_insert(0.0) += measure;
        }
    }

    fn box_cells_general(&self, b: &BoxRegion, counts: &[usize], acc: &mut HashMap<usize, f64>) {
        let n = self.domain_dim();
        let det = linalg::determinant(&self.basis).abs();
        let per_axis: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let (lo, hi) = self.t_range(b, i);
                overlaps(&self.axes[i].knots, lo, hi)
            })
            .collect();
        let sizes: Vec<usize> = per_axis.iter().map(Vec::len).collect();
        if sizes.contains(&0) {
            return;
        }
        let mut box_halfspaces = Vec::with_capacity(2 * n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            box_halfspaces.push(Halfspace::new(e.clone(), b.hi()[j]));
            box_halfspaces.push(Halfspace::new(-e, -b.lo()[j]));
        }
        let total: usize = sizes.iter().product();
        for k in 0..total {
            let pick = unflatten(k, &sizes);
            let index: Vec<usize> = (0..n).map(|i| per_axis[i][pick[i]].0).collect();
            let t_lo: Vec<f64> = (0..n).map(|i| self.axes[i].knots[index[i]]).collect();
            let t_hi: Vec<f64> = (0..n).map(|i| self.axes[i].knots[index[i] + 1]).collect();
            let cell_volume = det * (0..n).map(|i| t_hi[i] - t_lo[i]).product::<f64>();
            let corners: Vec<Vector> = (0..1usize << n)
                .map(|mask| {
                    let t = Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { t_hi[i] } else { t_lo[i] });
                    &self.origin + &self.basis * t
                })
                .collect();
            let measure = if corners.iter().all(|c| b.contains(c)) {
                cell_volume
            } else if (0..n)
                .any(|j| corners.iter().all(|c| c[j] >= b.hi()[j]) || corners.iter().all(|c| c[j] <= b.lo()[j]))
            {
                0.0
            } else {
                let mut hs = box_halfspaces.clone();
                for i in 0..n {
                    let row: Vector = self.basis_inv.row(i).transpose();
                    let shift = row.dot(&self.origin);
                    hs.push(Halfspace::new(row.clone(), t_hi[i] + shift));
                    hs.push(Halfspace::new(-row, -(t_lo[i] + shift)));
                }
                ConvexPolytope::from_halfspaces(&hs, n).map_or(0.0, |p| p.volume().min(cell_volume))
            };
            if measure > 0.0 {
                *acc.entry(flatten(&index, counts)).or_insert(0.0) += measure;
            }
        }
    }

    fn is_diagonal(&self) -> bool {
        let n = self.domain_dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.basis[(i, j)] == 0.0))
    }

    /// Measure of `region` on which `g′` equals each distinct linear part,
    /// indexed like [`Self::distinct_linear_parts`]. With an axis-aligned
    /// frame the per-axis overlaps are summed by slope class before taking
    /// products, so the cost does not grow with the number of cells.
    pub fn class_measures(&self, region: &Region) -> Result<Vec<f64>> {
        let counts = self.class_counts();
        let mut out = vec![0.0; counts.iter().product()];
        if !self.is_diagonal() {
            for (idx, mu) in self.cell_measures(region)? {
                out[self.class_key(&idx)] += mu;
            }
            return Ok(out);
        }
        if region.dim() != self.domain_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim(),
                found: region.dim(),
            });
        }
        self.check_covers(region.bounding_box())?;
        let n = self.domain_dim();
        for b in region.boxes() {
            if b.volume() <= 0.0 {
                continue;
            }
            let per_axis: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let (lo, hi) = self.t_range(&b, i);
                    let scale = self.basis[(i, i)].abs();
                    let mut by_class = vec![0.0; counts[i]];
                    for (k, len) in overlaps(&self.axes[i].knots, lo, hi) {
                        by_class[self.classes[i].1[k]] += len * scale;
                    }
                    by_class
                })
                .collect();
            for (key, slot) in out.iter_mut().enumerate() {
                let combo = unflatten(key, &counts);
                *slot += (0..n).map(|i| per_axis[i][combo[i]]).product::<f64>();
            }
        }
        Ok(out)
    }

    /// `∫_E vol g′`, summed exactly over cells.
    pub fn jacobian_integral(&self, region: &Region) -> Result<f64> {
        let metrics = self.class_metrics();
        Ok(self
            .class_measures(region)?
            .iter()
            .zip(&metrics)
            .map(|(mu, m)| m.0 * mu)
            .sum())
    }

    /// `H^n({x ∈ E : vol g′(x) ≥ r})`.
    pub fn superlevel_measure(&self, region: &Region, r: f64) -> Result<f64> {
        let metrics = self.class_metrics();
        Ok(self
            .class_measures(region)?
            .iter()
            .zip(&metrics)
            .filter(|(_, m)| m.0 >= r)
            .map(|(mu, _)| mu)
            .sum())
    }

    /// Smallest `vol` over linear parts used on a positive-measure part of
    /// `region`.
    pub fn min_cell_vol(&self, region: &Region) -> Result<f64> {
        let metrics = self.class_metrics();
        Ok(self
            .class_measures(region)?
            .iter()
            .zip(&metrics)
            .filter(|(mu, _)| **mu > 0.0)
            .map(|(_, m)| m.0)
            .fold(f64::INFINITY, f64::min))
    }

    /// Largest operator norm over linear parts used on a positive-measure
    /// part of `region`.
    pub fn lipschitz_on(&self, region: &Region) -> Result<f64> {
        let metrics = self.class_metrics();
        Ok(self
            .class_measures(region)?
            .iter()
            .zip(&metrics)
            .filter(|(mu, _)| **mu > 0.0)
            .map(|(_, m)| m.1)
            .fold(0.0, f64::max))
    }

    pub fn cell_records(&self, region: &Region) -> Result<Vec<CellRecord>> {
        let metrics = self.class_metrics();
        Ok(self
            .cell_measures(region)?
            .into_iter()
            .map(|(index, measure)| {
                let (j, b) = self.cell_affine(&index);
                let (vol, op_norm) = metrics[self.class_key(&index)];
                CellRecord {
                    t_lo: (0..index.len()).map(|i| self.axes[i].knots[index[i]]).collect(),
                    t_hi: (0..index.len()).map(|i| self.axes[i].knots[index[i] + 1]).collect(),
                    index,
                    measure,
                    vol,
                    op_norm,
                    linear: matrix_to_rows(&j),
                    offset: b.iter().copied().collect(),
                }
            })
            .collect())
    }

    /// One CSV row per cell meeting the domain.
    pub fn cells_csv(&self) -> Result<String> {
        let (n, m) = (self.domain_dim(), self.codomain_dim());
        let mut out = String::new();
        let mut header: Vec<String> = (0..n).map(|i| format!("k{i}")).collect();
        header.extend((0..n).map(|i| format!("t_lo{i}")));
        header.extend((0..n).map(|i| format!("t_hi{i}")));
        header.extend(["measure", "vol", "op_norm"].map(String::from));
        for r in 0..m {
            for c in 0..n {
                header.push(format!("j{r}{c}"));
            }
        }
        header.extend((0..m).map(|r| format!("b{r}")));
        writeln!(out, "{}", header.join(",")).expect("string write");
        for rec in self.cell_records(&self.domain)? {
            let mut fields: Vec<String> = rec.index.iter().map(|k| k.to_string()).collect();
            fields.extend(rec.t_lo.iter().chain(&rec.t_hi).map(|v| v.to_string()));
            fields.extend([rec.measure, rec.vol, rec.op_norm].map(|v| v.to_string()));
            fields.extend(rec.linear.iter().flatten().map(|v| v.to_string()));
            fields.extend(rec.offset.iter().map(|v| v.to_string()));
            writeln!(out, "{}", fields.join(",")).expect("string write");
        }
        Ok(out)
    }
}

impl VectorMap for PiecewiseAffineMap {
    fn domain_dim(&self) -> usize {
        self.origin.len()
    }
    fn codomain_dim(&self) -> usize {
        self.offset.len()
    }
    fn eval(&self, x: &Vector) -> Vector {
        PiecewiseAffineMap::eval(self, x)
    }
    fn affine_parts(&self) -> Option<(Matrix, Vector)> {
        (self.cell_count() == 1).then(|| self.cell_affine(&vec![0; self.domain_dim()]))
    }
    fn lipschitz_bound(&self, a: &Norm, b: &Norm) -> Option<f64> {
        (a == &self.domain_norm && b == &self.codomain_norm).then(|| self.lipschitz_exact())
    }
}
