//! Maps `ℝⁿ → ℝᵐ` that constructions consume and measurements evaluate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_from_rows, Matrix, Vector};
use crate::linear_map::operator_norm;
use crate::norm::Norm;

pub trait VectorMap: Send + Sync {
    fn domain_dim(&self) -> usize;
    fn codomain_dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> Vector;

    /// `(L, c)` with `f(x) = Lx + c` everywhere, when the map is affine.
    fn affine_parts(&self) -> Option<(Matrix, Vector)> {
        None
    }

    /// A known upper bound on the Lipschitz constant between the given norms.
    fn lipschitz_bound(&self, _a: &Norm, _b: &Norm) -> Option<f64> {
        None
    }
}

impl<T: VectorMap + ?Sized> VectorMap for Box<T> {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }
    fn codomain_dim(&self) -> usize {
        (**self).codomain_dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        (**self).eval(x)
    }
    fn affine_parts(&self) -> Option<(Matrix, Vector)> {
        (**self).affine_parts()
    }
    fn lipschitz_bound(&self, a: &Norm, b: &Norm) -> Option<f64> {
        (**self).lipschitz_bound(a, b)
    }
}

impl<T: VectorMap + ?Sized> VectorMap for &T {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }
    fn codomain_dim(&self) -> usize {
        (**self).codomain_dim()
    }
    fn eval(&self, x: &Vector) -> Vector {
        (**self).eval(x)
    }
    fn affine_parts(&self) -> Option<(Matrix, Vector)> {
        (**self).affine_parts()
    }
    fn lipschitz_bound(&self, a: &Norm, b: &Norm) -> Option<f64> {
        (**self).lipschitz_bound(a, b)
    }
}

/// `x ↦ Lx + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub linear: Matrix,
    pub offset: Vector,
}

impl AffineMap {
    pub fn new(linear: Matrix, offset: Vector) -> Result<Self> {
        if offset.len() != linear.nrows() {
            return Err(Error::DimensionMismatch {
                expected: linear.nrows(),
                found: offset.len(),
            });
        }
        Ok(AffineMap { linear, offset })
    }

    pub fn linear(linear: Matrix) -> Self {
        let m = linear.nrows();
        AffineMap {
            linear,
            offset: Vector::zeros(m),
        }
    }

    pub fn zero(n: usize, m: usize) -> Self {
        AffineMap::linear(Matrix::zeros(m, n))
    }
}

impl VectorMap for AffineMap {
    fn domain_dim(&self) -> usize {
        self.linear.ncols()
    }
    fn codomain_dim(&self) -> usize {
        self.linear.nrows()
    }
    fn eval(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.offset
    }
    fn affine_parts(&self) -> Option<(Matrix, Vector)> {
        Some((self.linear.clone(), self.offset.clone()))
    }
    fn lipschitz_bound(&self, a: &Norm, b: &Norm) -> Option<f64> {
        Some(operator_norm(&self.linear, a, b).value)
    }
}

/// A closure with declared dimensions.
pub struct FnMap<F> {
    n: usize,
    m: usize,
    f: F,
}

impl<F: Fn(&Vector) -> Vector + Send + Sync> FnMap<F> {
    pub fn new(n: usize, m: usize, f: F) -> Self {
        FnMap { n, m, f }
    }
}

impl<F: Fn(&Vector) -> Vector + Send + Sync> VectorMap for FnMap<F> {
    fn domain_dim(&self) -> usize {
        self.n
    }
    fn codomain_dim(&self) -> usize {
        self.m
    }
    fn eval(&self, x: &Vector) -> Vector {
        (self.f)(x)
    }
}

/// `x ↦ c + amplitude·sin(ω·x)·d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SinusoidMap {
    pub amplitude: f64,
    pub frequency: Vector,
    pub direction: Vector,
    pub offset: Vector,
}

impl VectorMap for SinusoidMap {
    fn domain_dim(&self) -> usize {
        self.frequency.len()
    }
    fn codomain_dim(&self) -> usize {
        self.direction.len()
    }
    fn eval(&self, x: &Vector) -> Vector {
        &self.offset + &self.direction * (self.amplitude * self.frequency.dot(x).sin())
    }
    fn lipschitz_bound(&self, a: &Norm, b: &Norm) -> Option<f64> {
        Some(self.amplitude.abs() * a.dual(&self.frequency) * b.eval(&self.direction))
    }
}

/// JSON description of a map, as used in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    /// The zero map into ℝᵐ.
    Zero { m: usize },
    /// `x ↦ Lx + c`; `linear` holds the `m` rows of `L`.
    Affine {
        linear: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
    Sinusoid {
        amplitude: f64,
        frequency: Vec<f64>,
        direction: Vec<f64>,
    },
}

impl FieldSpec {
    pub fn build(&self, n: usize) -> Result<Box<dyn VectorMap>> {
        match self {
            FieldSpec::Zero { m } => {
                if *m == 0 {
                    return Err(Error::precondition("codomain dimension must be positive"));
                }
                Ok(Box::new(AffineMap::zero(n, *m)))
            }
            FieldSpec::Affine { linear, offset } => {
                let l = matrix_from_rows(linear)?;
                if l.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: l.ncols(),
                    });
                }
                let c = match offset {
                    Some(c) => Vector::from_column_slice(c),
                    None => Vector::zeros(l.nrows()),
                };
                Ok(Box::new(AffineMap::new(l, c)?))
            }
            FieldSpec::Sinusoid {
                amplitude,
                frequency,
                direction,
            } => {
                if frequency.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: frequency.len(),
                    });
                }
                if direction.is_empty() {
                    return Err(Error::precondition("direction must be nonempty"));
                }
                Ok(Box::new(SinusoidMap {
                    amplitude: *amplitude,
                    frequency: Vector::from_column_slice(frequency),
                    direction: Vector::from_column_slice(direction),
                    offset: Vector::zeros(direction.len()),
                }))
            }
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match self {
            FieldSpec::Zero { m } => *m,
            FieldSpec::Affine { linear, .. } => linear.len(),
            FieldSpec::Sinusoid { direction, .. } => direction.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_specs_build() {
        let z: FieldSpec = serde_json::from_str(r#"{"type": "zero", "m": 3}"#).unwrap();
        let f = z.build(2).unwrap();
        assert_eq!(f.eval(&Vector::from_vec(vec![1.0, 2.0])), Vector::zeros(3));
        assert!(f.affine_parts().is_some());

        let a: FieldSpec =
            serde_json::from_str(r#"{"type": "affine", "linear": [[0.5, 0], [0, 0.5], [0, 0]]}"#).unwrap();
        let f = a.build(2).unwrap();
        let e2 = Norm::euclidean(2).unwrap();
        let e3 = Norm::euclidean(3).unwrap();
        assert!((f.lipschitz_bound(&e2, &e3).unwrap() - 0.5).abs() < 1e-12);
        assert!(a.build(3).is_err());

        let s: FieldSpec = serde_json::from_str(
            r#"{"type": "sinusoid", "amplitude": 0.1, "frequency": [3, 4], "direction": [0, 0, 1]}"#,
        )
        .unwrap();
        let f = s.build(2).unwrap();
        assert!((f.lipschitz_bound(&e2, &e3).unwrap() - 0.5).abs() < 1e-12);
        assert!(f.affine_parts().is_none());
        assert!(serde_json::from_str::<FieldSpec>(r#"{"type": "zero", "m": 3, "extra": 1}"#).is_err());
    }
}
