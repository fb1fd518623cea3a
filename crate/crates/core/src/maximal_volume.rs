//! Maximal volume `mv(u) = sup { vol(u|V) : ‖(u|V)‖_{a→b} ≤ 1 }`.
//!
//! Outside the analytic cases the optimizer only produces feasible
//! completions, so every reported value is a lower bound on `mv(u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, orthonormal_complement, Matrix, Vector};
use crate::linear_map::{operator_norm, FEASIBILITY_TOL};
use crate::norm::Norm;
use crate::par::map_indexed;
use crate::rng::{derive_seed, gaussian_matrix, seeded, uniform_in_ball};

const FD_STEP: f64 = 1e-5;
const BISECTION_STEPS: usize = 60;

/// `(u|V)`: the `m × n` matrix with columns `u, v₁, …, v_{n−1}`.
pub fn column_augment(u: &Vector, v: &[Vector]) -> Result<Matrix> {
    let m = u.len();
    if let Some(bad) = v.iter().find(|c| c.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: bad.len(),
        });
    }
    let mut cols = vec![u.clone()];
    cols.extend(v.iter().cloned());
    Ok(Matrix::from_columns(&cols))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvResult {
    pub value: f64,
    /// Completion columns `v₁, …, v_{n−1}`.
    pub best_v: Vec<Vec<f64>>,
    /// `‖(u|V)‖ − 1` for the returned completion.
    pub feasibility_gap: f64,
    pub restarts_used: usize,
    /// True when the value came from a closed form rather than the optimizer.
    pub analytic: bool,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MvOptions {
    pub restarts: usize,
    pub steps: usize,
    /// Allow closed-form answers where they are known.
    pub allow_analytic: bool,
}

impl Default for MvOptions {
    fn default() -> Self {
        MvOptions {
            restarts: 32,
            steps: 200,
            allow_analytic: true,
        }
    }
}

struct Problem<'a> {
    u: &'a Vector,
    a: &'a Norm,
    b: &'a Norm,
    n: usize,
}

impl Problem<'_> {
    fn matrix(&self, v: &Matrix) -> Matrix {
        let mut full = Matrix::zeros(self.u.len(), self.n);
        full.set_column(0, self.u);
        full.columns_mut(1, self.n - 1).copy_from(v);
        full
    }

    fn norm(&self, v: &Matrix) -> f64 {
        operator_norm(&self.matrix(v), self.a, self.b).value
    }

    /// Scale `v` to the boundary of the feasible set along its own ray. The
    /// set `{t : ‖(u|tV)‖ ≤ 1}` is an interval containing 0.
    fn project(&self, v: &Matrix) -> Matrix {
        if v.amax() == 0.0 {
            return v.clone();
        }
        let feasible = |t: f64| self.norm(&(v * t)) <= 1.0;
        let mut lo = 0.0;
        let mut hi = 1.0;
        if feasible(1.0) {
            lo = 1.0;
            hi = 2.0;
            while feasible(hi) {
                lo = hi;
                hi *= 2.0;
                if hi > 1e12 {
                    return v * lo;
                }
            }
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        v * lo
    }

    fn objective(&self, v: &Matrix) -> f64 {
        linalg::vol(&self.matrix(&self.project(v))).unwrap_or(0.0)
    }

    fn gradient(&self, v: &Matrix) -> Matrix {
        let mut g = Matrix::zeros(v.nrows(), v.ncols());
        let mut w = v.clone();
        for idx in 0..v.len() {
            let orig = w[idx];
            w[idx] = orig + FD_STEP;
            let plus = self.objective(&w);
            w[idx] = orig - FD_STEP;
            let minus = self.objective(&w);
            w[idx] = orig;
            g[idx] = (plus - minus) / (2.0 * FD_STEP);
        }
        g
    }

    fn ascend(&self, start: Matrix, steps: usize) -> (Matrix, f64) {
        let mut v = self.project(&start);
        let mut value = self.objective(&v);
        let mut alpha = 0.1 * v.norm().max(0.1);
        for _ in 0..steps {
            let g = self.gradient(&v);
            let gn = g.norm();
            if gn < 1e-14 || alpha < 1e-12 {
                break;
            }
            let dir = g / gn;
            let mut improved = false;
            for _ in 0..20 {
                let trial = self.project(&(&v + &dir * alpha));
                let trial_value = self.objective(&trial);
                if trial_value > value {
                    v = trial;
                    value = trial_value;
                    alpha *= 2.0;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (v, value)
    }
}

fn check(u: &Vector, a: &Norm, b: &Norm) -> Result<()> {
    let (n, m) = (a.dim(), b.dim());
    if u.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: u.len(),
        });
    }
    if n < 2 {
        return Err(Error::precondition("maximal volume needs n ≥ 2"));
    }
    if n > m {
        return Err(Error::precondition(format!(
            "maximal volume needs n ≤ m, got n = {n}, m = {m}"
        )));
    }
    let mut first = Matrix::zeros(m, n);
    first.set_column(0, u);
    let norm = operator_norm(&first, a, b).value;
    if norm > 1.0 + FEASIBILITY_TOL {
        return Err(Error::precondition(format!("‖(u|0)‖ = {norm} exceeds 1")));
    }
    Ok(())
}

/// Lower bound on `mv_{a→b}(u)` by multi-start projected ascent.
///
/// Restart 0 starts from a Euclidean orthonormal completion of `u`; the others
/// from Gaussian completions. The zero vector and a Euclidean-unit `u` for an
/// ℓ∞ domain with a Euclidean codomain are answered exactly (value 0): there
/// the average of `|u ± v₁ ± … |²` over signs is `|u|² + Σ|vⱼ|²`, so
/// feasibility forces `V = 0`.
pub fn max_volume(u: &Vector, a: &Norm, b: &Norm, options: MvOptions, seed: u64) -> Result<MvResult> {
    check(u, a, b)?;
    let (n, m) = (a.dim(), b.dim());
    let zero = || vec![vec![0.0; m]; n - 1];
    let analytic = |value| MvResult {
        value,
        best_v: zero(),
        feasibility_gap: operator_norm(&column_augment(u, &vec![Vector::zeros(m); n - 1]).unwrap(), a, b).value - 1.0,
        restarts_used: 0,
        analytic: true,
        seed,
    };
    if u.amax() == 0.0 {
        return Ok(analytic(0.0));
    }
    if options.allow_analytic && a.is_linf() && b.is_euclidean() && (u.norm() - 1.0).abs() <= crate::norm::BOUNDARY_TOL
    {
        return Ok(analytic(0.0));
    }
    let problem = Problem { u, a, b, n };
    let results = map_indexed(options.restarts.max(1), |r| {
        let start = if r == 0 {
            let cols = orthonormal_complement(std::slice::from_ref(u), m, n - 1);
            Matrix::from_columns(&cols)
        } else {
            let mut rng = seeded(derive_seed(seed, r as u64));
            gaussian_matrix(&mut rng, m, n - 1) * (1.0 / (m as f64).sqrt())
        };
        problem.ascend(start, options.steps)
    });
    let mut best: Option<(Matrix, f64)> = None;
    for (v, value) in results {
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((v, value));
        }
    }
    let (v, _) = best.expect("at least one restart");
    let full = problem.matrix(&v);
    Ok(MvResult {
        value: linalg::vol(&full)?,
        best_v: (0..n - 1).map(|j| v.column(j).iter().copied().collect()).collect(),
        feasibility_gap: operator_norm(&full, a, b).value - 1.0,
        restarts_used: options.restarts.max(1),
        analytic: false,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UscLevel {
    pub eps: f64,
    pub max_vol: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UscReport {
    pub mv_u: f64,
    pub delta: f64,
    pub bound: f64,
    pub levels: Vec<UscLevel>,
    /// Largest `ε` such that it and every smaller level passed.
    pub largest_passing_eps: Option<f64>,
    /// No level passed: the estimate of `mv(u)` itself is too low.
    pub under_converged: bool,
    pub seed: u64,
}

/// Empirical upper semi-continuity of `mv` at `u`: for a decreasing schedule
/// of radii, sample `ũ ∈ B(u, ε)` (rescaled into the feasible set when needed)
/// and compare the best completions found against `mv(u) + delta`.
pub fn usc_probe(
    u: &Vector,
    a: &Norm,
    b: &Norm,
    delta: f64,
    trials: usize,
    options: MvOptions,
    seed: u64,
) -> Result<UscReport> {
    if !(delta > 0.0) {
        return Err(Error::precondition("delta must be positive"));
    }
    let mv_u = max_volume(u, a, b, options, seed)?.value;
    let bound = mv_u + delta;
    let (n, m) = (a.dim(), b.dim());
    let schedule: Vec<f64> = (0..12).map(|k| 0.5 * 0.5f64.powi(k)).collect();
    let inner = MvOptions {
        restarts: (options.restarts / 4).max(2),
        ..options
    };
    let mut levels = Vec::with_capacity(schedule.len());
    for (k, &eps) in schedule.iter().enumerate() {
        let vols = map_indexed(trials, |t| -> Result<f64> {
            let mut rng = seeded(derive_seed(seed, ((k as u64) << 32) | t as u64));
            let mut ut = u + uniform_in_ball(&mut rng, m) * eps;
            let mut first = Matrix::zeros(m, n);
            first.set_column(0, &ut);
            let norm = operator_norm(&first, a, b).value;
            if norm > 1.0 {
                ut /= norm;
            }
            Ok(max_volume(&ut, a, b, inner, derive_seed(seed, 7 + t as u64))?.value)
        });
        let mut max_vol = 0.0_f64;
        for v in vols {
            max_vol = max_vol.max(v?);
        }
        levels.push(UscLevel {
            eps,
            max_vol,
            passed: max_vol <= bound,
        });
    }
    let mut largest = None;
    for level in levels.iter().rev() {
        if level.passed {
            largest = Some(level.eps);
        } else {
            break;
        }
    }
    Ok(UscReport {
        mv_u,
        delta,
        bound,
        under_converged: levels.iter().all(|l| !l.passed),
        largest_passing_eps: largest,
        levels,
        seed,
    })
}
