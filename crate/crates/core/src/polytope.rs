//! Convex polytopes in low dimension.
//!
//! Everything here is brute force over vertex or halfspace subsets, which is
//! fine for the dimensions this crate works in (at most four) and keeps the
//! kernel free of an LP dependency. Volumes are exact up to floating point:
//! a polytope is split into pyramids over its facets around the vertex
//! centroid, and facet areas recurse one dimension down.

use crate::error::{Error, Result};
use crate::linalg::{combinations, determinant, orthonormal_complement, Matrix, Vector};

/// `normal · x ≤ offset`, with a unit `normal`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Self {
        let n = normal.norm();
        Halfspace {
            normal: normal / n,
            offset: offset / n,
        }
    }

    pub fn slack(&self, x: &Vector) -> f64 {
        self.offset - self.normal.dot(x)
    }
}

#[derive(Clone, Debug)]
pub struct ConvexPolytope {
    dim: usize,
    vertices: Vec<Vector>,
    facets: Vec<Halfspace>,
    facet_vertices: Vec<Vec<usize>>,
    tol: f64,
}

fn scale_of(points: &[Vector]) -> f64 {
    points.iter().map(|p| p.amax()).fold(0.0_f64, f64::max).max(1e-300)
}

fn affine_rank(points: &[Vector], tol: f64) -> usize {
    if points.is_empty() {
        return 0;
    }
    let d = points[0].len();
    let c = centroid(points);
    let m = Matrix::from_fn(points.len(), d, |i, j| points[i][j] - c[j]);
    let s = crate::linalg::singular_values(&m);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > tol.max(1e-12 * top)).count()
}

fn centroid(points: &[Vector]) -> Vector {
    let mut c = Vector::zeros(points[0].len());
    for p in points {
        c += p;
    }
    c / points.len() as f64
}

/// Generalized cross product of the `d − 1` rows of `rows` (each in ℝ^d).
fn normal_of(rows: &[Vector], d: usize) -> Vector {
    if d == 1 {
        return Vector::from_element(1, 1.0);
    }
    let mut n = Vector::zeros(d);
    for i in 0..d {
        let minor = Matrix::from_fn(d - 1, d - 1, |r, c| {
            let col = if c < i { c } else { c + 1 };
            rows[r][col]
        });
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        n[i] = sign * if d - 1 == 0 { 1.0 } else { determinant(&minor) };
    }
    n
}

impl ConvexPolytope {
    /// Convex hull of a full-dimensional point set.
    pub fn hull(points: &[Vector]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::precondition("hull of an empty point set"));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::precondition("hull points have inconsistent dimension"));
        }
        let tol = 1e-9 * scale_of(points);
        let mut pts: Vec<Vector> = Vec::new();
        for p in points {
            if !pts.iter().any(|q| (q - p).amax() <= tol) {
                pts.push(p.clone());
            }
        }
        if affine_rank(&pts, tol) < d {
            return Err(Error::precondition("point set is not full-dimensional"));
        }
        if d == 1 {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let vertices = vec![Vector::from_element(1, lo), Vector::from_element(1, hi)];
            let facets = vec![
                Halfspace::new(Vector::from_element(1, -1.0), -lo),
                Halfspace::new(Vector::from_element(1, 1.0), hi),
            ];
            return Ok(ConvexPolytope {
                dim: 1,
                vertices,
                facets,
                facet_vertices: vec![vec![0], vec![1]],
                tol,
            });
        }

        let mut facets: Vec<Halfspace> = Vec::new();
        for combo in combinations(pts.len(), d) {
            let base = &pts[combo[0]];
            let rows: Vec<Vector> = combo[1..].iter().map(|&i| &pts[i] - base).collect();
            let n = normal_of(&rows, d);
            let len = n.norm();
            if len <= 1e-12 * scale_of(&rows).powi(d as i32 - 1) {
                continue;
            }
            let n = n / len;
            let off = n.dot(base);
            let mut above = false;
            let mut below = false;
            for p in &pts {
                let s = n.dot(p) - off;
                if s > tol {
                    above = true;
                } else if s < -tol {
                    below = true;
                }
                if above && below {
                    break;
                }
            }
            let h = match (above, below) {
                (false, _) => Halfspace { normal: n, offset: off },
                (true, false) => Halfspace {
                    normal: -n,
                    offset: -off,
                },
                (true, true) => continue,
            };
            let duplicate = facets
                .iter()
                .any(|f| f.normal.dot(&h.normal) > 1.0 - 1e-9 && (f.offset - h.offset).abs() <= tol);
            if !duplicate {
                facets.push(h);
            }
        }

        let on_facet: Vec<Vec<usize>> = facets
            .iter()
            .map(|f| (0..pts.len()).filter(|&i| f.slack(&pts[i]).abs() <= tol).collect())
            .collect();

        // Extreme points lie on facets whose normals span ℝ^d.
        let mut keep = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            let normals: Vec<&Vector> = facets
                .iter()
                .zip(&on_facet)
                .filter(|(_, vs)| vs.contains(&i))
                .map(|(f, _)| &f.normal)
                .collect();
            if normals.len() >= d {
                let m = Matrix::from_fn(normals.len(), d, |r, c| normals[r][c]);
                let s = crate::linalg::singular_values(&m);
                if s.iter().filter(|&&v| v > 1e-9).count() >= d {
                    keep.push(p.clone());
                }
            }
        }
        let facet_vertices = facets
            .iter()
            .map(|f| (0..keep.len()).filter(|&i| f.slack(&keep[i]).abs() <= tol).collect())
            .collect();
        Ok(ConvexPolytope {
            dim: d,
            vertices: keep,
            facets,
            facet_vertices,
            tol,
        })
    }

    /// Polytope `{x : normal·x ≤ offset for all halfspaces}`. Returns `None`
    /// when the system is empty or not full-dimensional.
    pub fn from_halfspaces(halfspaces: &[Halfspace], dim: usize) -> Option<Self> {
        if halfspaces.len() < dim + 1 {
            return None;
        }
        let scale = halfspaces
            .iter()
            .map(|h| h.offset.abs())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let tol = 1e-9 * scale.max(1.0);
        let mut points: Vec<Vector> = Vec::new();
        for combo in combinations(halfspaces.len(), dim) {
            let a = Matrix::from_fn(dim, dim, |r, c| halfspaces[combo[r]].normal[c]);
            let b = Vector::from_fn(dim, |r, _| halfspaces[combo[r]].offset);
            if determinant(&a).abs() < 1e-12 {
                continue;
            }
            let Some(x) = a.lu().solve(&b) else { continue };
            if halfspaces.iter().all(|h| h.slack(&x) >= -tol) && !points.iter().any(|q| (q - &x).amax() <= tol) {
                points.push(x);
            }
        }
        if points.len() < dim + 1 {
            return None;
        }
        ConvexPolytope::hull(&points).ok()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Halfspace] {
        &self.facets
    }

    /// Indices into [`Self::vertices`] of the vertices on each facet.
    pub fn facet_vertices(&self) -> &[Vec<usize>] {
        &self.facet_vertices
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.facets.iter().all(|f| f.slack(x) >= -self.tol)
    }

    pub fn volume(&self) -> f64 {
        if self.dim == 1 {
            return (self.vertices[1][0] - self.vertices[0][0]).abs();
        }
        let c = centroid(&self.vertices);
        let d = self.dim as f64;
        let mut total = 0.0;
        for (f, idx) in self.facets.iter().zip(&self.facet_vertices) {
            let height = f.slack(&c);
            if height <= 0.0 || idx.len() < self.dim {
                continue;
            }
            let basis = orthonormal_complement(std::slice::from_ref(&f.normal), self.dim, self.dim - 1);
            let origin = &self.vertices[idx[0]];
            let projected: Vec<Vector> = idx
                .iter()
                .map(|&i| {
                    let rel = &self.vertices[i] - origin;
                    Vector::from_fn(self.dim - 1, |k, _| basis[k].dot(&rel))
                })
                .collect();
            total += height * hull_volume(&projected) / d;
        }
        total
    }
}

/// Volume of the convex hull of `points`; zero when they do not span.
pub fn hull_volume(points: &[Vector]) -> f64 {
    match ConvexPolytope::hull(points) {
        Ok(p) => p.volume(),
        Err(_) => 0.0,
    }
}
