//! Experiment drivers: the inflation sweep toward a fixed map, and the
//! adversarial search for large Jacobians near a map into an extreme point.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constructions::inflate::{inflate_on_set, InflateMode, InflateParams, InflatedMap};
use crate::constructions::piecewise::PiecewiseAffineMap;
use crate::constructions::zigzag::AxisCurve;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::linear_map::operator_norm;
use crate::map::{AffineMap, FieldSpec, VectorMap};
use crate::maximal_volume::{max_volume, MvOptions, MvResult};
use crate::measure::boxcount::boxcount_image_measure;
use crate::measure::lipschitz::sup_distance;
use crate::measure::report::MeasureReport;
use crate::norm::Norm;
use crate::par::map_indexed;
use crate::region::{BoxRegion, Region};
use crate::rng::{derive_seed, gaussian_vector, seeded, uniform};

fn one() -> f64 {
    1.0
}

fn one_trial() -> usize {
    1
}

fn default_box_size() -> Option<f64> {
    Some(1e-3)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositiveConfig {
    pub region: Region,
    pub field: FieldSpec,
    /// Euclidean when absent.
    #[serde(default)]
    pub domain_norm: Option<Norm>,
    #[serde(default)]
    pub codomain_norm: Option<Norm>,
    #[serde(default = "one")]
    pub lambda: f64,
    pub eta: f64,
    pub eps: Vec<f64>,
    #[serde(default = "one_trial")]
    pub trials: usize,
    /// Box side for the image measure when `m > n`; `null` skips it.
    #[serde(default = "default_box_size")]
    pub box_size: Option<f64>,
    /// Soft lower bound for the box-counted image measure.
    #[serde(default)]
    pub boxcount_min: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub sup_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositiveRecord {
    pub eps: f64,
    pub trial: usize,
    pub seed: u64,
    pub mode: InflateMode,
    pub sup_dist: f64,
    pub within_eps: bool,
    pub lip_exact: Option<f64>,
    pub lip_bound: f64,
    pub lip_ok: bool,
    pub jac_integral: f64,
    pub integral_is_exact: bool,
    pub target: f64,
    pub target_met: bool,
    /// Fraction of `E` where `vol g′ ≥ ηλ`, single mode only.
    pub superlevel_fraction: Option<f64>,
    pub boxcount: Option<MeasureReport>,
    pub boxcount_soft_pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositiveReport {
    pub config: PositiveConfig,
    pub seed: u64,
    pub records: Vec<PositiveRecord>,
    pub all_targets_met: bool,
    pub all_within_eps: bool,
    pub all_lip_ok: bool,
    pub boxcount_soft_pass: Option<bool>,
}

/// Inflate `f` at every `ε` of the schedule, `trials` seeds each, and
/// measure the results.
pub fn run_positive_experiment(config: &PositiveConfig, seed: u64) -> Result<PositiveReport> {
    let n = config.region.dim();
    let m = config.field.codomain_dim();
    let a = match &config.domain_norm {
        Some(a) => a.clone(),
        None => Norm::euclidean(n)?,
    };
    let b = match &config.codomain_norm {
        Some(b) => b.clone(),
        None => Norm::euclidean(m)?,
    };
    if config.eps.is_empty() || config.trials == 0 {
        return Err(Error::precondition("need at least one ε and one trial"));
    }
    let f: Arc<dyn VectorMap> = Arc::from(config.field.build(n)?);
    let runs = config.eps.len() * config.trials;
    let records = map_indexed(runs, |k| -> Result<PositiveRecord> {
        let (i, trial) = (k / config.trials, k % config.trials);
        let eps = config.eps[i];
        let run_seed = derive_seed(seed, k as u64);
        let mut params = InflateParams::new(config.lambda, eps, config.eta);
        params.sigma = config.sigma;
        if let Some(d) = config.max_depth {
            params.max_depth = d;
        }
        if let Some(s) = config.sup_samples {
            params.sup_samples = s;
        }
        let out = inflate_on_set(f.clone(), &config.region, &a, &b, &params, run_seed)?;
        let rep = out.report;
        let superlevel_fraction = match &out.map {
            InflatedMap::Single(g) if rep.region_measure > 0.0 => {
                Some(g.superlevel_measure(&config.region, config.eta * config.lambda)? / rep.region_measure)
            }
            _ => None,
        };
        let boxcount = match config.box_size {
            Some(h) if m > n && n <= 2 && m <= 4 && rep.region_measure > 0.0 => {
                Some(boxcount_image_measure(&out.map, &config.region, m, h)?)
            }
            _ => None,
        };
        let boxcount_soft_pass = match (&boxcount, config.boxcount_min) {
            (Some(r), Some(min)) => Some(r.value >= min),
            _ => None,
        };
        let lip = rep.lip_exact.unwrap_or(rep.lip_bound);
        Ok(PositiveRecord {
            eps,
            trial,
            seed: run_seed,
            mode: rep.mode,
            sup_dist: rep.sup_distance,
            within_eps: rep.sup_distance <= eps,
            lip_exact: rep.lip_exact,
            lip_bound: rep.lip_bound,
            lip_ok: lip <= 1.0 + 1e-9,
            jac_integral: rep.achieved_integral,
            integral_is_exact: rep.integral_is_exact,
            target: rep.target,
            target_met: rep.target_met,
            superlevel_fraction,
            boxcount,
            boxcount_soft_pass,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let soft: Vec<bool> = records.iter().filter_map(|r| r.boxcount_soft_pass).collect();
    Ok(PositiveReport {
        config: config.clone(),
        seed,
        all_targets_met: records.iter().all(|r| r.target_met),
        all_within_eps: records.iter().all(|r| r.within_eps),
        all_lip_ok: records.iter().all(|r| r.lip_ok),
        boxcount_soft_pass: (!soft.is_empty()).then(|| soft.iter().all(|&p| p)),
        records,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub const CSV_HEADER: &str = "run,trial,eps,sup_dist,lip_exact,jac_integral,boxcount,superlevel_fraction";

pub fn positive_csv(report: &PositiveReport) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in &report.records {
        let _ = writeln!(
            out,
            "positive,{},{},{},{},{},{},{}",
            r.trial,
            r.eps,
            r.sup_dist,
            opt(r.lip_exact),
            r.jac_integral,
            opt(r.boxcount.as_ref().map(|b| b.value)),
            opt(r.superlevel_fraction)
        );
    }
    out
}

fn default_restarts() -> usize {
    16
}

fn default_steps() -> usize {
    400
}

fn default_true() -> bool {
    true
}

fn default_trend_tolerance() -> f64 {
    0.02
}

fn default_final_max() -> f64 {
    0.1
}

fn default_control_min() -> f64 {
    0.8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativeConfig {
    pub domain_norm: Norm,
    pub codomain_norm: Norm,
    /// Strongly extreme point of the codomain ball; the base map is
    /// `x ↦ x₁·u`.
    pub u: Vec<f64>,
    pub r: f64,
    pub eps: Vec<f64>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Also run the Euclidean pair as a contrast.
    #[serde(default = "default_true")]
    pub control: bool,
    /// Further thresholds `r` searched with the same schedule.
    #[serde(default)]
    pub supplementary_r: Vec<f64>,
    #[serde(default = "default_trend_tolerance")]
    pub trend_tolerance: f64,
    #[serde(default = "default_final_max")]
    pub final_max: f64,
    #[serde(default = "default_control_min")]
    pub control_min: f64,
}

/// One axis of a separable two-slope map: slope `p` on a `θ` fraction of
/// each period, `q` on the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisPattern {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub theta: f64,
    pub periods: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeRecord {
    pub eps: f64,
    pub threshold: f64,
    /// Exact fraction of `Q` where `vol g′ ≥ threshold` for the best map found.
    pub fraction: f64,
    pub best_restart: usize,
    /// Mean of `min(vol g′/threshold, 1)` over `Q`.
    pub soft_score: f64,
    pub sup_dist: f64,
    pub lip_exact: f64,
    pub jac_integral: f64,
    pub axes: Vec<AxisPattern>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeRun {
    pub r: f64,
    pub threshold: f64,
    pub records: Vec<NegativeRecord>,
    pub weakly_decreasing: bool,
    pub final_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlRecord {
    pub eps: f64,
    pub threshold: f64,
    pub fraction: f64,
    pub sup_dist: f64,
    pub lip_exact: f64,
    pub jac_integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeReport {
    pub config: NegativeConfig,
    pub seed: u64,
    pub mv: MvResult,
    pub main: NegativeRun,
    pub supplementary: Vec<NegativeRun>,
    pub control: Option<Vec<ControlRecord>>,
    pub final_ok: bool,
    pub control_ok: Option<bool>,
    /// Weakly decreasing, final value small, and control high.
    pub trend_met: bool,
}

/// Parameters `(p_j, q_j, θ_j)` per axis, flattened.
#[derive(Clone, Debug, PartialEq)]
struct Family {
    n: usize,
    m: usize,
    x: Vec<f64>,
}

impl Family {
    fn stride(&self) -> usize {
        2 * self.m + 1
    }

    fn p(&self, j: usize) -> Vector {
        let s = j * self.stride();
        Vector::from_column_slice(&self.x[s..s + self.m])
    }

    fn q(&self, j: usize) -> Vector {
        let s = j * self.stride() + self.m;
        Vector::from_column_slice(&self.x[s..s + self.m])
    }

    fn theta(&self, j: usize) -> f64 {
        self.x[j * self.stride() + 2 * self.m]
    }

    fn set(&mut self, j: usize, p: &Vector, q: &Vector, theta: f64) {
        let s = j * self.stride();
        self.x[s..s + self.m].copy_from_slice(p.as_slice());
        self.x[s + self.m..s + 2 * self.m].copy_from_slice(q.as_slice());
        self.x[s + 2 * self.m] = theta;
    }

    fn drift(&self, j: usize) -> Vector {
        let t = self.theta(j);
        self.p(j) * t + self.q(j) * (1.0 - t)
    }

    fn clamp_theta(&mut self) {
        for j in 0..self.n {
            let k = j * self.stride() + 2 * self.m;
            self.x[k] = self.x[k].clamp(0.0, 1.0);
        }
    }
}

struct Searcher<'a> {
    a: &'a Norm,
    b: &'a Norm,
    base: Matrix,
    threshold: f64,
    drift_budget: f64,
    n: usize,
    m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Score {
    fraction: f64,
    soft: f64,
}

impl Score {
    fn beats(&self, other: &Score) -> bool {
        self.fraction > other.fraction + 1e-12
            || (self.fraction >= other.fraction - 1e-12 && self.soft > other.soft + 1e-12)
    }
}

impl Searcher<'_> {
    fn pattern(&self, fam: &Family, mask: usize) -> (Matrix, f64) {
        let mut j = Matrix::zeros(self.m, self.n);
        let mut weight = 1.0;
        for c in 0..self.n {
            if mask >> c & 1 == 1 {
                j.set_column(c, &fam.p(c));
                weight *= fam.theta(c);
            } else {
                j.set_column(c, &fam.q(c));
                weight *= 1.0 - fam.theta(c);
            }
        }
        (j, weight)
    }

    fn norms_ok(&self, fam: &Family) -> bool {
        (0..1usize << self.n).all(|mask| operator_norm(&self.pattern(fam, mask).0, self.a, self.b).value <= 1.0 + 1e-12)
    }

    fn feasible(&self, fam: &Family) -> bool {
        if (0..self.n).any(|j| !(0.0..=1.0).contains(&fam.theta(j))) || !self.norms_ok(fam) {
            return false;
        }
        let d: Vec<Vector> = (0..self.n).map(|j| fam.drift(j) - self.base.column(j)).collect();
        (0..1usize << self.n).all(|mask| {
            let mut s = Vector::zeros(self.m);
            for (j, dj) in d.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    s += dj;
                }
            }
            self.b.eval(&s) <= self.drift_budget
        })
    }

    fn score(&self, fam: &Family) -> Score {
        let mut fraction = 0.0;
        let mut soft = 0.0;
        for mask in 0..1usize << self.n {
            let (j, w) = self.pattern(fam, mask);
            let v = linalg::vol(&j).unwrap_or(0.0);
            if v >= self.threshold {
                fraction += w;
            }
            soft += w * (v / self.threshold).min(1.0);
        }
        Score { fraction, soft }
    }

    /// Largest step from the feasible `from` toward `to` that stays feasible.
    fn project(&self, from: &Family, to: &Family) -> Family {
        let mut to = to.clone();
        to.clamp_theta();
        if self.feasible(&to) {
            return to;
        }
        let at = |t: f64| Family {
            x: from.x.iter().zip(&to.x).map(|(a, b)| a + t * (b - a)).collect(),
            ..from.clone()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if self.feasible(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(lo)
    }

    fn base_family(&self) -> Family {
        let mut fam = Family {
            n: self.n,
            m: self.m,
            x: vec![0.0; self.n * (2 * self.m + 1)],
        };
        for j in 0..self.n {
            let c: Vector = self.base.column(j).into();
            fam.set(j, &c, &c, 0.5);
        }
        fam
    }

    /// First column `a·u`, the others `±s·vⱼ` for an orthonormal completion
    /// `vⱼ` of `u`, with `a` as large as the norm bound allows; best over `s`.
    fn structured(&self) -> Family {
        let u: Vector = self.base.column(0).into();
        let v = linalg::orthonormal_complement(std::slice::from_ref(&u), self.m, self.n - 1);
        let build = |a: f64, s: f64| {
            let mut fam = self.base_family();
            fam.set(0, &(&u * a), &(&u * a), 0.5);
            for (j, vj) in v.iter().enumerate() {
                fam.set(j + 1, &(vj * s), &(vj * -s), 0.5);
            }
            fam
        };
        let mut best = self.base_family();
        let mut best_score = self.score(&best);
        for k in 0..=240 {
            let s = 10f64.powf(-5.0 + 5.0 * k as f64 / 240.0);
            let (mut lo, mut hi) = (0.0, 1.0);
            if !self.norms_ok(&build(0.0, s)) {
                continue;
            }
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if self.norms_ok(&build(mid, s)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cand = build(lo, s);
            if !self.feasible(&cand) {
                continue;
            }
            let sc = self.score(&cand);
            if sc.beats(&best_score) {
                best = cand;
                best_score = sc;
            }
        }
        best
    }

    fn ascend(&self, start: Family, steps: usize, seed: u64) -> (Family, Score) {
        let mut rng = seeded(seed);
        let mut cur = start;
        let mut cur_score = self.score(&cur);
        let mut step = 0.05;
        let dim = cur.x.len();
        for it in 0..steps {
            let mut cand = cur.clone();
            if it % 4 == 3 {
                let g = gaussian_vector(&mut rng, dim);
                let len = g.norm().max(1e-300);
                for (x, d) in cand.x.iter_mut().zip(g.iter()) {
                    *x += step * d / len;
                }
            } else {
                let k = (uniform(&mut rng, 0.0, dim as f64) as usize).min(dim - 1);
                let sign = if uniform(&mut rng, 0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
                cand.x[k] += sign * step;
            }
            let cand = self.project(&cur, &cand);
            let sc = self.score(&cand);
            if sc.beats(&cur_score) {
                cur = cand;
                cur_score = sc;
                step = (step * 1.5).min(0.5);
            } else {
                step = (step * 0.7).max(1e-6);
            }
        }
        (cur, cur_score)
    }

    /// Period counts making the in-period oscillation at most `ε/10`.
    fn periods(&self, fam: &Family, eps: f64) -> Vec<usize> {
        (0..self.n)
            .map(|j| {
                let t = fam.theta(j);
                let osc = t * (1.0 - t) * self.b.eval(&(fam.p(j) - fam.q(j)));
                ((10.0 * self.n as f64 * osc / eps).ceil() as usize).clamp(1, 1_000_000)
            })
            .collect()
    }

    fn build(&self, fam: &Family, periods: &[usize]) -> Result<PiecewiseAffineMap> {
        let mut axes = Vec::with_capacity(self.n);
        for (j, &count) in periods.iter().enumerate().take(self.n) {
            let t = fam.theta(j);
            let mut knots = vec![0.0];
            let mut slopes = Vec::new();
            for k in 0..count {
                let start = k as f64 / count as f64;
                let mid = start + t / count as f64;
                let end = (k + 1) as f64 / count as f64;
                if mid > start && mid < end {
                    knots.push(mid);
                    slopes.push(fam.p(j));
                    knots.push(end);
                    slopes.push(fam.q(j));
                } else {
                    knots.push(end);
                    slopes.push(if mid >= end { fam.p(j) } else { fam.q(j) });
                }
            }
            axes.push(AxisCurve::from_slopes(knots, Vector::zeros(self.m), slopes)?);
        }
        PiecewiseAffineMap::new(
            Vector::zeros(self.n),
            Matrix::identity(self.n, self.n),
            Vector::zeros(self.m),
            axes,
            Region::Box(BoxRegion::cube(self.n, 0.0, 1.0)?),
            self.a.clone(),
            self.b.clone(),
        )
    }
}

fn base_map(u: &Vector, n: usize) -> Matrix {
    let mut f = Matrix::zeros(u.len(), n);
    f.set_column(0, u);
    f
}

fn search_run(config: &NegativeConfig, base: &Matrix, threshold: f64, r: f64, seed: u64) -> Result<NegativeRun> {
    let (m, n) = base.shape();
    let q = Region::Box(BoxRegion::cube(n, 0.0, 1.0)?);
    let f = AffineMap::linear(base.clone());
    let records = map_indexed(config.eps.len(), |i| -> Result<NegativeRecord> {
        let eps = config.eps[i];
        let searcher = Searcher {
            a: &config.domain_norm,
            b: &config.codomain_norm,
            base: base.clone(),
            threshold,
            drift_budget: 0.9 * eps,
            n,
            m,
        };
        let eps_seed = derive_seed(seed, i as u64);
        let results = map_indexed(config.restarts, |k| {
            let start = if k == 0 {
                searcher.structured()
            } else {
                let mut rng = seeded(derive_seed(eps_seed, k as u64));
                let base_fam = searcher.base_family();
                let scale = 10f64.powf(uniform(&mut rng, eps.log10().min(0.0) - 0.5, 0.0));
                let g = gaussian_vector(&mut rng, base_fam.x.len());
                let mut cand = base_fam.clone();
                for (x, d) in cand.x.iter_mut().zip(g.iter()) {
                    *x += scale * d;
                }
                searcher.project(&base_fam, &cand)
            };
            searcher.ascend(start, config.steps, derive_seed(eps_seed, 1000 + k as u64))
        });
        let (best_restart, (fam, score)) = results
            .into_iter()
            .enumerate()
            .reduce(|best, cur| if cur.1 .1.beats(&best.1 .1) { cur } else { best })
            .expect("restarts ≥ 1");
        let periods = searcher.periods(&fam, eps);
        let g = searcher.build(&fam, &periods)?;
        let fraction = g.superlevel_measure(&q, threshold)? + 0.0;
        Ok(NegativeRecord {
            eps,
            threshold,
            fraction,
            best_restart,
            soft_score: score.soft,
            sup_dist: sup_distance(&f, &g, &q, &config.codomain_norm, 10_000, eps_seed),
            lip_exact: g.lipschitz_exact(),
            jac_integral: g.jacobian_integral(&q)?,
            axes: (0..n)
                .map(|j| AxisPattern {
                    p: fam.p(j).as_slice().to_vec(),
                    q: fam.q(j).as_slice().to_vec(),
                    theta: fam.theta(j),
                    periods: periods[j],
                })
                .collect(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let weakly_decreasing = records
        .windows(2)
        .all(|w| w[1].fraction <= w[0].fraction + config.trend_tolerance);
    let final_value = records.last().map_or(0.0, |r| r.fraction);
    Ok(NegativeRun {
        r,
        threshold,
        records,
        weakly_decreasing,
        final_value,
    })
}

/// Euclidean contrast: inflate `x ↦ x₁·u` on `Q` and measure where
/// `vol g′ ≥ r`.
fn control_run(config: &NegativeConfig, base: &Matrix, seed: u64) -> Result<Vec<ControlRecord>> {
    let (m, n) = base.shape();
    let a = Norm::euclidean(n)?;
    let b = Norm::euclidean(m)?;
    let q = Region::Box(BoxRegion::cube(n, 0.0, 1.0)?);
    let f: Arc<dyn VectorMap> = Arc::new(AffineMap::linear(base.clone()));
    map_indexed(config.eps.len(), |i| -> Result<ControlRecord> {
        let eps = config.eps[i];
        let out = inflate_on_set(
            f.clone(),
            &q,
            &a,
            &b,
            &InflateParams::new(1.0, eps, 0.9),
            derive_seed(seed, i as u64),
        )?;
        let InflatedMap::Single(g) = &out.map else {
            return Err(Error::precondition("control expects an affine base map"));
        };
        Ok(ControlRecord {
            eps,
            threshold: config.r,
            fraction: g.superlevel_measure(&q, config.r)?,
            sup_dist: out.report.sup_distance,
            lip_exact: g.lipschitz_exact(),
            jac_integral: out.report.achieved_integral,
        })
    })
    .into_iter()
    .collect()
}

/// Search, for each `ε`, for maps within `ε` of `x ↦ x₁·u` on `[0, 1]ⁿ`
/// with Lipschitz constant 1 maximizing the measure where
/// `vol g′ ≥ mv(u) + r`.
pub fn run_negative_experiment(config: &NegativeConfig, seed: u64) -> Result<NegativeReport> {
    let (n, m) = (config.domain_norm.dim(), config.codomain_norm.dim());
    if config.u.len() != m || n > m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: config.u.len(),
        });
    }
    if !(config.r > 0.0) || config.eps.is_empty() || config.eps.iter().any(|e| !(*e > 0.0)) || config.restarts == 0 {
        return Err(Error::precondition(
            "need r > 0, positive ε values and at least one restart",
        ));
    }
    let u = Vector::from_column_slice(&config.u);
    let ext = config.codomain_norm.analyze_extremal(&u)?;
    if !ext.is_strongly_extremal {
        return Err(Error::precondition(
            "u must be a strongly extreme point of the codomain ball",
        ));
    }
    let base = base_map(&u, n);
    let norm = operator_norm(&base, &config.domain_norm, &config.codomain_norm).value;
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::precondition(format!("‖x ↦ x₁·u‖ = {norm}, expected 1")));
    }
    let mv = max_volume(
        &u,
        &config.domain_norm,
        &config.codomain_norm,
        MvOptions::default(),
        derive_seed(seed, 0),
    )?;
    let main = search_run(config, &base, mv.value + config.r, config.r, derive_seed(seed, 1))?;
    let supplementary = config
        .supplementary_r
        .iter()
        .enumerate()
        .map(|(k, &r)| search_run(config, &base, mv.value + r, r, derive_seed(seed, 100 + k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let control = if config.control {
        Some(control_run(config, &base, derive_seed(seed, 2))?)
    } else {
        None
    };
    let final_ok = main.final_value <= config.final_max;
    let control_ok = control
        .as_ref()
        .map(|c| c.iter().all(|r| r.fraction >= config.control_min));
    Ok(NegativeReport {
        config: config.clone(),
        seed,
        mv,
        trend_met: main.weakly_decreasing && final_ok && control_ok.unwrap_or(true),
        main,
        supplementary,
        control,
        final_ok,
        control_ok,
    })
}

pub fn negative_csv(report: &NegativeReport) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    let mut run = |name: &str, records: &[NegativeRecord]| {
        for r in records {
            let _ = writeln!(
                out,
                "{name},0,{},{},{},{},,{}",
                r.eps, r.sup_dist, r.lip_exact, r.jac_integral, r.fraction
            );
        }
    };
    run(&format!("search_r={}", report.main.r), &report.main.records);
    for s in &report.supplementary {
        run(&format!("search_r={}", s.r), &s.records);
    }
    if let Some(control) = &report.control {
        for r in control {
            let _ = writeln!(
                out,
                "control,0,{},{},{},{},,{}",
                r.eps, r.sup_dist, r.lip_exact, r.jac_integral, r.fraction
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linf_l2(eps: Vec<f64>, r: f64) -> NegativeConfig {
        NegativeConfig {
            domain_norm: Norm::linf(2).unwrap(),
            codomain_norm: Norm::euclidean(2).unwrap(),
            u: vec![1.0, 0.0],
            r,
            eps,
            restarts: 4,
            steps: 100,
            control: false,
            supplementary_r: vec![],
            trend_tolerance: 0.02,
            final_max: 0.1,
            control_min: 0.8,
        }
    }

    #[test]
    fn two_slope_map_matches_its_parameters() {
        let cfg = linf_l2(vec![0.1], 0.01);
        let rep = run_negative_experiment(&cfg, 3).unwrap();
        let rec = &rep.main.records[0];
        assert!(rec.lip_exact <= 1.0 + 1e-9);
        assert!(rec.sup_dist <= 0.1);
        // vol ≤ 1 for every pattern, so ∫ vol ≤ fraction·1 + (1 − fraction)·threshold.
        assert!(rec.jac_integral <= rec.fraction + rec.threshold + 1e-12);
    }

    #[test]
    fn loose_threshold_is_reached_everywhere() {
        let rep = run_negative_experiment(&linf_l2(vec![2.0], 0.01), 1).unwrap();
        assert_eq!(rep.mv.value, 0.0);
        assert!((rep.main.records[0].fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_extreme_u_is_rejected() {
        let mut cfg = linf_l2(vec![0.1], 0.01);
        cfg.codomain_norm = Norm::linf(2).unwrap();
        assert!(run_negative_experiment(&cfg, 0).is_err());
    }

    #[test]
    fn positive_zero_map() {
        let cfg: PositiveConfig = serde_json::from_value(serde_json::json!({
            "region": {"box": {"lo": [-1.0, -1.0], "hi": [1.0, 1.0]}},
            "field": {"type": "zero", "m": 3},
            "eta": 0.9,
            "eps": [0.1],
            "box_size": null
        }))
        .unwrap();
        let rep = run_positive_experiment(&cfg, 5).unwrap();
        assert!(rep.all_targets_met && rep.all_within_eps && rep.all_lip_ok);
        assert!(rep.records[0].jac_integral >= 3.6);
        assert!(positive_csv(&rep).lines().count() == 2);
    }
}
