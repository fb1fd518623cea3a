//! Linear maps between normed spaces: operator norms, λ-inflation
//! certificates and the search for them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, matrix_from_rows, matrix_to_rows, Matrix, Vector};
use crate::norm::{Norm, NormKind};
use crate::par::map_indexed;
use crate::rng::{derive_seed, gaussian_matrix, gaussian_vector, seeded, uniform, SeededRng};

/// Default relative tolerance of [`verify_certificate`].
pub const VERIFY_TOL: f64 = 1e-9;
/// Slack allowed on `‖A‖ ≤ 1` when a map enters a search.
pub const FEASIBILITY_TOL: f64 = 1e-7;
const MAX_SIGN_DIM: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearMapRepr {
    entries: Vec<Vec<f64>>,
    domain_norm: Norm,
    codomain_norm: Norm,
}

/// `A: (ℝⁿ, a) → (ℝᵐ, b)`, stored as an `m × n` matrix (rows index the
/// codomain). JSON `entries` are the matrix rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearMapRepr", into = "LinearMapRepr")]
pub struct LinearMap {
    matrix: Matrix,
    domain_norm: Norm,
    codomain_norm: Norm,
}

impl TryFrom<LinearMapRepr> for LinearMap {
    type Error = Error;

    fn try_from(r: LinearMapRepr) -> Result<Self> {
        LinearMap::new(matrix_from_rows(&r.entries)?, r.domain_norm, r.codomain_norm)
    }
}

impl From<LinearMap> for LinearMapRepr {
    fn from(m: LinearMap) -> Self {
        LinearMapRepr {
            entries: matrix_to_rows(&m.matrix),
            domain_norm: m.domain_norm,
            codomain_norm: m.codomain_norm,
        }
    }
}

/// Value of `‖A‖_{a→b}` and how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub value: f64,
    pub exact: bool,
    /// Spread between the best and the worst converged restart of the
    /// numerical ascent; zero for exact values.
    pub gap_estimate: f64,
}

impl LinearMap {
    pub fn new(matrix: Matrix, domain_norm: Norm, codomain_norm: Norm) -> Result<Self> {
        if matrix.ncols() != domain_norm.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain_norm.dim(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() != codomain_norm.dim() {
            return Err(Error::DimensionMismatch {
                expected: codomain_norm.dim(),
                found: matrix.nrows(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::precondition("map has non-finite entries"));
        }
        Ok(LinearMap {
            matrix,
            domain_norm,
            codomain_norm,
        })
    }

    /// Same norms, different matrix.
    pub fn with_matrix(&self, matrix: Matrix) -> Result<Self> {
        LinearMap::new(matrix, self.domain_norm.clone(), self.codomain_norm.clone())
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn domain_norm(&self) -> &Norm {
        &self.domain_norm
    }

    pub fn codomain_norm(&self) -> &Norm {
        &self.codomain_norm
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x
    }

    /// `√det(AᵀA)`.
    pub fn vol(&self) -> Result<f64> {
        linalg::vol(&self.matrix)
    }

    pub fn is_full_rank(&self) -> bool {
        self.domain_dim() <= self.codomain_dim() && linalg::is_full_rank(&self.matrix)
    }

    pub fn operator_norm(&self) -> OperatorNorm {
        operator_norm(&self.matrix, &self.domain_norm, &self.codomain_norm)
    }

    pub fn op_norm(&self) -> f64 {
        self.operator_norm().value
    }
}

/// `sup { |Mx|_b : |x|_a ≤ 1 }` for an `m × n` matrix.
///
/// Transformed norms are peeled off first. A polyhedral domain reduces to a
/// maximum over vertices and a polyhedral codomain to a maximum of dual norms
/// over facet functionals; Euclidean pairs use the top singular value. Other
/// pairs fall back to a multi-start nonlinear power iteration, which returns a
/// lower bound.
pub fn operator_norm(m: &Matrix, a: &Norm, b: &Norm) -> OperatorNorm {
    if let NormKind::Transformed { base, w, .. } = a.kind() {
        return operator_norm(&(m * w), base, b);
    }
    if let NormKind::Transformed { base, w_inv, .. } = b.kind() {
        return operator_norm(&(w_inv * m), a, base);
    }
    let exact = |value| OperatorNorm {
        value,
        exact: true,
        gap_estimate: 0.0,
    };
    if let Some(vs) = a.vertices() {
        return exact(vs.iter().map(|v| b.eval(&(m * v))).fold(0.0, f64::max));
    }
    if let Some(fs) = b.facet_functionals() {
        let mt = m.transpose();
        return exact(fs.iter().map(|phi| a.dual(&(&mt * phi))).fold(0.0, f64::max));
    }
    if a.is_euclidean() && b.is_euclidean() {
        return exact(linalg::spectral_norm(m));
    }
    power_iteration(m, a, b)
}

fn power_iteration(m: &Matrix, a: &Norm, b: &Norm) -> OperatorNorm {
    let n = m.ncols();
    let mt = m.transpose();
    let mut starts: Vec<Vector> = (0..n)
        .map(|i| {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            e
        })
        .collect();
    let svd = m.clone().svd(false, true);
    if let Some(vt) = svd.v_t {
        let top = (0..svd.singular_values.len())
            .max_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
            .unwrap_or(0);
        starts.push(vt.row(top).transpose());
    }
    let mut rng = seeded(0x0b0e_7a11);
    for _ in 0..8 {
        starts.push(gaussian_vector(&mut rng, n));
    }
    let mut values = Vec::with_capacity(starts.len());
    for s in starts {
        let Some(mut x) = a.normalize(&s) else { continue };
        let mut value = b.eval(&(m * &x));
        for _ in 0..500 {
            let y = m * &x;
            if y.amax() == 0.0 {
                break;
            }
            let phi = b.supporting_functional(&y);
            let z = &mt * phi;
            let next = a.dual_maximizer(&z);
            let next_value = b.eval(&(m * &next));
            let done = next_value <= value * (1.0 + 1e-15);
            if next_value > value {
                x = next;
                value = next_value;
            }
            if done {
                break;
            }
        }
        values.push(value);
    }
    let best = values.iter().copied().fold(0.0, f64::max);
    let worst = values.iter().copied().fold(best, f64::min);
    OperatorNorm {
        value: best,
        exact: false,
        gap_estimate: best - worst,
    }
}

/// All `2ⁿ` sign patterns of `eigenvalues`; bit `i` of the pattern index flips
/// the sign of entry `i`.
pub fn sign_permutations(eigenvalues: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = eigenvalues.len();
    if n > MAX_SIGN_DIM {
        return Err(Error::UnsupportedDimension(format!(
            "sign enumeration limited to n ≤ {MAX_SIGN_DIM}, got {n}"
        )));
    }
    Ok((0..1usize << n)
        .map(|mask| {
            eigenvalues
                .iter()
                .enumerate()
                .map(|(i, &e)| if mask >> i & 1 == 1 { -e } else { e })
                .collect()
        })
        .collect())
}

/// A diagonalizable inflation `I` on `A(ℝⁿ)` with eigenvectors `A(xᵢ)` and
/// eigenvalues `μᵢ`. Every sign permutation composes to `A·X·diag(±μ)·X⁻¹`.
///
/// The non-shrinking condition is imposed on the eigenvalues of `I` (not of
/// `A`); that is the only reading under which the condition is meaningful for
/// rectangular `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationCertificate {
    /// Preimages `xᵢ` of the eigenvectors, one per row.
    pub preimages: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub lambda: f64,
    pub verified: bool,
    pub worst_sign_norm: f64,
    pub min_sign_vol: f64,
}

impl InflationCertificate {
    /// Certificate with preimages given as the columns of `x`; fields other
    /// than the basis and eigenvalues are filled in by verification.
    pub fn unverified(x: &Matrix, eigenvalues: Vec<f64>, lambda: f64) -> Self {
        InflationCertificate {
            preimages: (0..x.ncols()).map(|j| x.column(j).iter().copied().collect()).collect(),
            eigenvalues,
            lambda,
            verified: false,
            worst_sign_norm: f64::NAN,
            min_sign_vol: f64::NAN,
        }
    }

    /// Preimages as the columns of an `n × n` matrix.
    pub fn basis(&self) -> Matrix {
        let n = self.preimages.len();
        Matrix::from_fn(n, n, |i, j| self.preimages[j].get(i).copied().unwrap_or(f64::NAN))
    }

    /// `Ĩ∘A` for one sign pattern (`signs[i] = ±1`).
    pub fn compose(&self, a: &Matrix, signs: &[f64]) -> Result<Matrix> {
        let x = self.basis();
        let x_inv = linalg::inverse(&x)
            .map_err(|_| Error::precondition("eigenbasis preimages are not linearly independent"))?;
        let d = Matrix::from_diagonal(&Vector::from_fn(self.eigenvalues.len(), |i, _| {
            signs[i] * self.eigenvalues[i]
        }));
        Ok(a * x * d * x_inv)
    }
}

/// Outcome of [`verify_certificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verified: bool,
    pub worst_sign_norm: f64,
    pub min_sign_vol: f64,
    pub non_shrinking: bool,
    /// Signs of a pattern that breaks the norm or volume bound.
    pub failing_pattern: Option<Vec<f64>>,
    pub reason: Option<String>,
}

/// Recompute every sign permutation of `cert` against `map` and decide
/// whether it is a `cert.lambda`-inflation.
pub fn verify_certificate(map: &LinearMap, cert: &InflationCertificate, tol: f64) -> Result<VerificationReport> {
    let n = map.domain_dim();
    if cert.preimages.len() != n || cert.eigenvalues.len() != n || cert.preimages.iter().any(|x| x.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cert.preimages.len(),
        });
    }
    let x = cert.basis();
    if !linalg::is_full_rank(&x) {
        return Err(Error::precondition("eigenbasis preimages are not linearly independent"));
    }
    if !map.is_full_rank() {
        return Err(Error::DegenerateMap);
    }
    let x_inv = linalg::inverse(&x)?;
    let ax = map.matrix() * &x;
    let mut worst_norm = 0.0_f64;
    let mut min_vol = f64::INFINITY;
    let mut failing = None;
    for signs in sign_permutations(&vec![1.0; n])? {
        let d = Matrix::from_diagonal(&Vector::from_fn(n, |i, _| signs[i] * cert.eigenvalues[i]));
        let composed = &ax * d * &x_inv;
        let norm = operator_norm(&composed, map.domain_norm(), map.codomain_norm()).value;
        let vol = linalg::vol(&composed)?;
        if failing.is_none() && (norm > 1.0 + tol || vol < cert.lambda - tol * cert.lambda.max(1.0)) {
            failing = Some(signs.clone());
        }
        worst_norm = worst_norm.max(norm);
        min_vol = min_vol.min(vol);
    }
    let non_shrinking = cert.eigenvalues.iter().all(|e| e.abs() >= 1.0 - tol);
    let reason = if !non_shrinking {
        Some("non-shrinking violated: an eigenvalue has |μ| < 1".to_string())
    } else if worst_norm > 1.0 + tol {
        Some(format!("sign permutation has operator norm {worst_norm} > 1"))
    } else if min_vol < cert.lambda - tol * cert.lambda.max(1.0) {
        Some(format!("sign permutation has vol {min_vol} < λ = {}", cert.lambda))
    } else {
        None
    };
    Ok(VerificationReport {
        verified: reason.is_none(),
        worst_sign_norm: worst_norm,
        min_sign_vol: min_vol,
        non_shrinking,
        failing_pattern: failing,
        reason,
    })
}

fn certify(map: &LinearMap, mut cert: InflationCertificate) -> Result<InflationCertificate> {
    let report = verify_certificate(map, &cert, VERIFY_TOL)?;
    cert.verified = report.verified;
    cert.worst_sign_norm = report.worst_sign_norm;
    cert.min_sign_vol = report.min_sign_vol;
    Ok(cert)
}

fn check_search_preconditions(map: &LinearMap) -> Result<()> {
    if map.domain_dim() > map.codomain_dim() {
        return Err(Error::precondition(format!(
            "inflation needs n ≤ m, got n = {}, m = {}",
            map.domain_dim(),
            map.codomain_dim()
        )));
    }
    if !map.is_full_rank() {
        return Err(Error::DegenerateMap);
    }
    let norm = map.op_norm();
    if norm > 1.0 + FEASIBILITY_TOL {
        return Err(Error::precondition(format!(
            "map must lie in the operator unit ball, ‖A‖ = {norm}"
        )));
    }
    Ok(())
}

/// The 1-inflation of a Euclidean contraction: with `A = U·Σ·Vᵀ`, take
/// `xᵢ = vᵢ` and `μᵢ = 1/σᵢ`, so every sign permutation of `I∘A` is
/// `U·diag(±1)·Vᵀ`.
pub fn euclidean_inflation(map: &LinearMap) -> Result<InflationCertificate> {
    if !map.domain_norm().is_euclidean() || !map.codomain_norm().is_euclidean() {
        return Err(Error::precondition("euclidean_inflation needs Euclidean norms"));
    }
    check_search_preconditions(map)?;
    let (v, sigma) = right_singular_basis(map.matrix());
    let mu = sigma.iter().map(|s| (1.0 / s).max(1.0)).collect();
    let cert = certify(map, InflationCertificate::unverified(&v, mu, 1.0))?;
    if !cert.verified {
        return Err(Error::UnverifiedCertificate(format!(
            "Euclidean certificate failed: worst sign norm {}, min vol {}",
            cert.worst_sign_norm, cert.min_sign_vol
        )));
    }
    Ok(cert)
}

/// Right singular vectors (as columns) and the matching singular values,
/// largest first.
pub fn right_singular_basis(m: &Matrix) -> (Matrix, Vec<f64>) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let v = Matrix::from_fn(n, n, |i, k| vt[(order[k], i)]);
    let s = order.iter().map(|&k| svd.singular_values[k]).collect();
    (v, s)
}

/// Restarts and ascent steps per restart for [`inflation_search`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub steps: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 64,
            steps: 200,
        }
    }
}

/// Restarts run in batches of this size; the search stops after the first
/// batch that reaches the target, so results do not depend on thread count.
const RESTART_BATCH: usize = 8;
const BISECTION_STEPS: usize = 36;
/// Round-off allowance on the search's `‖Ĩ∘A‖ ≤ 1`, far inside [`VERIFY_TOL`].
const SEARCH_SLACK: f64 = 1e-12;

/// Problem data for one fixed eigenbasis.
struct Basis {
    /// Rank-one terms `(A xⱼ)·(X⁻¹)ⱼ`, so `Ĩ∘A = Σ sⱼ μⱼ Tⱼ`.
    terms: Vec<Matrix>,
    x: Matrix,
}

impl Basis {
    fn new(a: &Matrix, x: Matrix) -> Option<Self> {
        let x_inv = linalg::inverse(&x).ok()?;
        let s = linalg::singular_values(&x);
        if s.last().copied().unwrap_or(0.0) < 1e-6 * s[0] {
            return None;
        }
        let ax = a * &x;
        let terms = (0..x.ncols()).map(|j| ax.column(j) * x_inv.row(j)).collect();
        Some(Basis { terms, x })
    }
}

struct Searcher<'a> {
    map: &'a LinearMap,
    n: usize,
    /// Sign patterns with the first sign fixed; `‖−B‖ = ‖B‖`.
    patterns: Vec<Vec<f64>>,
}

impl Searcher<'_> {
    fn worst_norm(&self, basis: &Basis, log_mu: &[f64]) -> f64 {
        let mu: Vec<f64> = log_mu.iter().map(|l| l.exp()).collect();
        let (m, n) = basis.terms[0].shape();
        let mut worst = 0.0_f64;
        let mut b = Matrix::zeros(m, n);
        for signs in &self.patterns {
            b.fill(0.0);
            for j in 0..self.n {
                b += &basis.terms[j] * (signs[j] * mu[j]);
            }
            worst = worst.max(operator_norm(&b, self.map.domain_norm(), self.map.codomain_norm()).value);
            if worst > 1.0 + SEARCH_SLACK {
                return worst;
            }
        }
        worst
    }

    fn feasible(&self, basis: &Basis, log_mu: &[f64]) -> bool {
        self.worst_norm(basis, log_mu) <= 1.0 + SEARCH_SLACK
    }

    /// Largest `t ∈ [0, 1]` with `t·log_mu` feasible.
    fn shrink_to_feasible(&self, basis: &Basis, log_mu: &[f64]) -> Option<Vec<f64>> {
        if self.feasible(basis, log_mu) {
            return Some(log_mu.to_vec());
        }
        let zero = vec![0.0; self.n];
        if !self.feasible(basis, &zero) {
            return None;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let trial: Vec<f64> = log_mu.iter().map(|l| l * mid).collect();
            if self.feasible(basis, &trial) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(log_mu.iter().map(|l| l * lo).collect())
    }

    /// Push one log-eigenvalue to the feasibility boundary. The feasible set is
    /// convex in `μ`, so it is an interval along each coordinate.
    fn expand(&self, basis: &Basis, log_mu: &mut [f64], i: usize) {
        let base = log_mu[i];
        let mut step = 0.125;
        let mut lo = base;
        let mut hi = None;
        for _ in 0..40 {
            log_mu[i] = lo + step;
            if self.feasible(basis, log_mu) {
                lo += step;
                step *= 2.0;
            } else {
                hi = Some(lo + step);
                break;
            }
        }
        let Some(mut hi) = hi else {
            log_mu[i] = lo;
            return;
        };
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            log_mu[i] = mid;
            if self.feasible(basis, log_mu) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        log_mu[i] = lo;
    }

    fn expand_all(&self, basis: &Basis, log_mu: &mut [f64]) {
        for i in 0..self.n {
            self.expand(basis, log_mu, i);
        }
    }

    fn initial_basis(&self, restart: usize, rng: &mut SeededRng) -> Matrix {
        let n = self.n;
        match restart {
            0 => right_singular_basis(self.map.matrix()).0,
            1 => Matrix::identity(n, n),
            _ => gaussian_matrix(rng, n, n),
        }
    }

    fn initial_log_mu(&self, x: &Matrix) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                let xj: Vector = x.column(j).into();
                let num = self.map.domain_norm().eval(&xj);
                let den = self.map.codomain_norm().eval(&self.map.apply(&xj));
                (num / den).max(1.0).ln()
            })
            .collect()
    }

    fn perturb(&self, x: &Matrix, scale: f64, rng: &mut SeededRng) -> Matrix {
        let mut y = x + gaussian_matrix(rng, self.n, self.n) * scale;
        for mut c in y.column_iter_mut() {
            let norm = c.norm();
            if norm > 0.0 {
                c /= norm;
            }
        }
        y
    }

    /// One restart; returns `(basis, log μ)` with the best feasible `Σ log μ`.
    fn restart(&self, restart: usize, seed: u64, steps: usize, target: f64) -> Option<(Matrix, Vec<f64>)> {
        let mut rng = seeded(derive_seed(seed, restart as u64));
        let x0 = self.perturb(&self.initial_basis(restart, &mut rng), 0.0, &mut rng);
        let mut basis = Basis::new(self.map.matrix(), x0)?;
        let guess = self.initial_log_mu(&basis.x);
        let mut log_mu = self.shrink_to_feasible(&basis, &guess)?;
        self.expand_all(&basis, &mut log_mu);
        let mut score: f64 = log_mu.iter().sum();
        let mut tau = 0.1;
        for step in 0..steps {
            if score >= target {
                break;
            }
            let mut candidate_mu;
            let candidate_basis;
            if step % 3 == 2 && self.n > 1 {
                // Trade mass between two eigenvalues on the current basis.
                let i = step / 3 % self.n;
                let j = (i + 1 + (uniform(&mut rng, 0.0, (self.n - 1) as f64) as usize)) % self.n;
                candidate_mu = log_mu.clone();
                candidate_mu[i] = (candidate_mu[i] - tau).max(0.0);
                self.expand(&basis, &mut candidate_mu, j);
                self.expand(&basis, &mut candidate_mu, i);
                candidate_basis = None;
            } else {
                let x = self.perturb(&basis.x, tau, &mut rng);
                let Some(b) = Basis::new(self.map.matrix(), x) else {
                    tau *= 0.5;
                    continue;
                };
                let Some(mut mu) = self.shrink_to_feasible(&b, &log_mu) else {
                    tau = (tau * 0.7).max(1e-6);
                    continue;
                };
                self.expand_all(&b, &mut mu);
                candidate_mu = mu;
                candidate_basis = Some(b);
            }
            let candidate_score: f64 = candidate_mu.iter().sum();
            if candidate_score > score + 1e-12 {
                score = candidate_score;
                log_mu = candidate_mu;
                if let Some(b) = candidate_basis {
                    basis = b;
                }
                tau = (tau * 1.5).min(1.0);
            } else {
                tau = (tau * 0.7).max(1e-6);
            }
        }
        Some((basis.x, log_mu))
    }
}

/// Multi-start search for a verified `lambda`-inflation of `map`.
///
/// Each restart fixes a starting eigenbasis (restart 0: right singular
/// vectors, restart 1: the identity, the rest Gaussian), pushes the
/// eigenvalues to the boundary of the feasible set by coordinate bisection and
/// then alternates basis perturbations with eigenvalue trades. Since sign flips
/// do not change `|det|`, the volume of every sign permutation equals
/// `vol(A)·∏|μᵢ|`, and only the operator-norm constraint needs the sign
/// enumeration. `None` means the budget ran out; it is not a proof that no
/// inflation exists.
pub fn inflation_search(
    map: &LinearMap,
    lambda: f64,
    budget: SearchBudget,
    seed: u64,
) -> Result<Option<InflationCertificate>> {
    check_search_preconditions(map)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::precondition(format!("λ must be finite and ≥ 0, got {lambda}")));
    }
    let n = map.domain_dim();
    let vol_a = map.vol()?;
    if lambda <= vol_a {
        let candidates = [Matrix::identity(n, n), right_singular_basis(map.matrix()).0];
        for x in candidates {
            let cert = certify(map, InflationCertificate::unverified(&x, vec![1.0; n], lambda))?;
            if cert.verified {
                return Ok(Some(achieved(cert)));
            }
        }
    }
    let searcher = Searcher {
        map,
        n,
        patterns: sign_permutations(&vec![1.0; n])?
            .into_iter()
            .filter(|s| s[0] > 0.0)
            .collect(),
    };
    let target = if lambda > 0.0 {
        (lambda / vol_a).ln()
    } else {
        f64::NEG_INFINITY
    };
    let mut best: Option<(Matrix, Vec<f64>, f64)> = None;
    let mut start = 0;
    while start < budget.restarts {
        let count = RESTART_BATCH.min(budget.restarts - start);
        let results = map_indexed(count, |k| searcher.restart(start + k, seed, budget.steps, target));
        for (x, log_mu) in results.into_iter().flatten() {
            let score: f64 = log_mu.iter().sum();
            if best.as_ref().is_none_or(|(_, _, s)| score > *s) {
                best = Some((x, log_mu, score));
            }
        }
        if best.as_ref().is_some_and(|(_, _, s)| *s >= target) {
            break;
        }
        start += count;
    }
    let Some((x, log_mu, score)) = best else {
        return Ok(None);
    };
    if score < target - 1e-12 {
        return Ok(None);
    }
    let mu: Vec<f64> = log_mu.iter().map(|l| l.exp()).collect();
    let cert = certify(map, InflationCertificate::unverified(&x, mu, lambda))?;
    Ok(cert.verified.then(|| achieved(cert)))
}

/// Raise `lambda` to the smallest verified sign-permutation volume.
fn achieved(cert: InflationCertificate) -> InflationCertificate {
    InflationCertificate {
        lambda: cert.min_sign_vol.max(cert.lambda),
        ..cert
    }
}

/// A sampled map that no certificate was found for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeFailure {
    pub index: usize,
    pub entries: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub lambda: f64,
    pub samples: usize,
    pub certified: usize,
    pub fraction_certified: f64,
    pub failures: Vec<ProbeFailure>,
    /// `vol(|·|_a)·λ`, the threshold of the normalized class.
    pub normalized_lambda: f64,
    pub normalized_certified: usize,
    pub normalized_fraction: f64,
    pub seed: u64,
}

/// Sample maps on the unit sphere of `B_{a→b}` and try to certify each.
/// Half of the samples are Gaussian; the other half are small perturbations of
/// rank-one maps `(u|0)` with `u` on the unit sphere of `b`, where inflation
/// is hardest. Failures are evidence, not proof, of non-inflation.
pub fn inflating_pair_probe(
    a: &Norm,
    b: &Norm,
    lambda: f64,
    samples: usize,
    budget: SearchBudget,
    seed: u64,
) -> Result<ProbeReport> {
    let (n, m) = (a.dim(), b.dim());
    if n > m {
        return Err(Error::precondition(format!("probe needs n ≤ m, got n = {n}, m = {m}")));
    }
    let normalized_lambda = lambda * a.vol_of_norm();
    let outcomes = map_indexed(samples, |k| -> Result<(Matrix, bool, bool)> {
        let mut rng = seeded(derive_seed(seed, k as u64));
        let matrix = loop {
            let raw = if k % 2 == 0 {
                gaussian_matrix(&mut rng, m, n)
            } else {
                let u = b.normalize(&gaussian_vector(&mut rng, m)).unwrap_or_else(|| {
                    let mut e = Vector::zeros(m);
                    e[0] = 1.0;
                    e
                });
                let mut r = gaussian_matrix(&mut rng, m, n) * 0.02;
                let first = r.column(0) + u;
                r.set_column(0, &first);
                r
            };
            let norm = operator_norm(&raw, a, b).value;
            let scaled = raw / norm;
            if linalg::is_full_rank(&scaled) {
                break scaled;
            }
        };
        let map = LinearMap::new(matrix.clone(), a.clone(), b.clone())?;
        let sub = derive_seed(seed, 1 << 32 | k as u64);
        let plain = inflation_search(&map, lambda, budget, sub)?.is_some();
        let normalized = if normalized_lambda == lambda {
            plain
        } else {
            inflation_search(&map, normalized_lambda, budget, sub)?.is_some()
        };
        Ok((matrix, plain, normalized))
    });
    let mut certified = 0;
    let mut normalized_certified = 0;
    let mut failures = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        let (matrix, plain, normalized) = outcome?;
        if plain {
            certified += 1;
        } else {
            failures.push(ProbeFailure {
                index,
                entries: matrix_to_rows(&matrix),
            });
        }
        normalized_certified += normalized as usize;
    }
    let frac = |c: usize| if samples == 0 { 1.0 } else { c as f64 / samples as f64 };
    Ok(ProbeReport {
        lambda,
        samples,
        certified,
        fraction_certified: frac(certified),
        failures,
        normalized_lambda,
        normalized_certified,
        normalized_fraction: frac(normalized_certified),
        seed,
    })
}
