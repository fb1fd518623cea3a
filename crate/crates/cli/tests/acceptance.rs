//! One line per acceptance criterion. Criterion 5 is reported but does not
//! fail the run; every other criterion must pass.

use std::path::PathBuf;
use std::process::Command as Process;
use std::sync::Arc;
use std::time::{Duration, Instant};

use inflate_lab::constructions::lsc_margin;
use inflate_lab::constructions::zigzag::AxisCurve;
use inflate_lab::constructions::{
    glue_patches, inflate_on_set, InflateParams, InflatedMap, Patch, PatchSet, PatchSpec, PiecewiseAffineMap,
};
use inflate_lab::linalg::{self, Matrix, Vector};
use inflate_lab::linear_map::{euclidean_inflation, verify_certificate, LinearMap, VERIFY_TOL};
use inflate_lab::map::{AffineMap, FnMap, VectorMap};
use inflate_lab::maximal_volume::{max_volume, MvOptions};
use inflate_lab::measure::{
    boxcount_image_measure, coverage_check, estimate_lipschitz, run_negative_experiment, sup_distance, NegativeConfig,
};
use inflate_lab::norm::Norm;
use inflate_lab::region::{BoxRegion, Region};
use inflate_lab::rng::{derive_seed, gaussian_matrix, gaussian_vector, seeded, uniform, SeededRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn contraction(rng: &mut SeededRng, m: usize, n: usize) -> Matrix {
    loop {
        let a = gaussian_matrix(rng, m, n);
        let s = linalg::spectral_norm(&a);
        if linalg::is_full_rank(&a) && s > 0.0 {
            return a * (uniform(rng, 0.1, 1.0) / s);
        }
    }
}

fn euclidean_inflation_criterion() -> Outcome {
    let start = Instant::now();
    let dims = [(1, 2), (2, 2), (2, 3), (3, 3), (3, 4)];
    let mut worst_norm: f64 = 0.0;
    let mut worst_vol = f64::INFINITY;
    for k in 0..200u64 {
        let (n, m) = dims[k as usize % dims.len()];
        let mut rng = seeded(derive_seed(1, k));
        let a = contraction(&mut rng, m, n);
        let map = LinearMap::new(a, Norm::euclidean(n).unwrap(), Norm::euclidean(m).unwrap()).unwrap();
        let cert = euclidean_inflation(&map).unwrap();
        let rep = verify_certificate(&map, &cert, VERIFY_TOL).unwrap();
        worst_norm = worst_norm.max(rep.worst_sign_norm);
        worst_vol = worst_vol.min(rep.min_sign_vol);
    }
    let t = start.elapsed();
    outcome(
        worst_norm <= 1.0 + 1e-9 && worst_vol >= 1.0 - 1e-9 && t < Duration::from_secs(5),
        format!("200 maps, max sign norm {worst_norm:.12}, min sign vol {worst_vol:.12}, {t:.2?}"),
    )
}

fn mv_criterion() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [2, 3] {
        let mut u = Vector::zeros(n);
        u[0] = 1.0;
        let a = Norm::linf(n).unwrap();
        let b = Norm::euclidean(n).unwrap();
        let analytic = max_volume(&u, &a, &b, MvOptions::default(), 3).unwrap();
        let opts = MvOptions {
            restarts: 32,
            allow_analytic: false,
            ..MvOptions::default()
        };
        let generic = max_volume(&u, &a, &b, opts, 3).unwrap();
        let e = Norm::euclidean(n).unwrap();
        let contrast = max_volume(&u, &e, &e, MvOptions::default(), 3).unwrap();
        ok &= analytic.analytic && analytic.value == 0.0 && generic.value <= 1e-6 && contrast.value >= 1.0 - 1e-6;
        notes.push(format!(
            "n={n}: analytic {}, optimizer {:.2e}, euclidean {:.9}",
            analytic.value, generic.value, contrast.value
        ));
    }
    outcome(ok, notes.join("; "))
}

fn positive_criterion() -> Outcome {
    let region = Region::Box(BoxRegion::cube(2, -1.0, 1.0).unwrap());
    let a = Norm::euclidean(2).unwrap();
    let b = Norm::euclidean(3).unwrap();
    let mut maps: Vec<(String, Arc<dyn VectorMap>)> = vec![("f=0".into(), Arc::new(AffineMap::zero(2, 3)))];
    for s in 0..10u64 {
        let mut rng = seeded(derive_seed(2, s));
        let mut l = gaussian_matrix(&mut rng, 3, 2);
        l /= linalg::spectral_norm(&l);
        maps.push((format!("f=0.5A seed {s}"), Arc::new(AffineMap::linear(l * 0.5))));
    }
    let params = InflateParams::new(1.0, 0.1, 0.9);
    let mut ok = true;
    let mut slowest = Duration::ZERO;
    let mut min_integral = f64::INFINITY;
    let mut max_lip: f64 = 0.0;
    let mut max_sup: f64 = 0.0;
    for (k, (name, f)) in maps.into_iter().enumerate() {
        let start = Instant::now();
        let out = inflate_on_set(f, &region, &a, &b, &params, k as u64).unwrap();
        slowest = slowest.max(start.elapsed());
        let InflatedMap::Single(g) = &out.map else {
            return outcome(false, format!("{name}: expected a single piecewise-affine map"));
        };
        let lip = g.lipschitz_exact();
        let integral = g.jacobian_integral(&region).unwrap();
        let rep = &out.report;
        ok &= lip <= 1.0 + 1e-9 && rep.sup_samples == 10_000 && rep.sup_distance <= 0.1 && integral >= 3.6;
        min_integral = min_integral.min(integral);
        max_lip = max_lip.max(lip);
        max_sup = max_sup.max(rep.sup_distance);
    }
    ok &= slowest < Duration::from_secs(30);
    outcome(
        ok,
        format!(
            "11 runs, max exact Lip {max_lip:.12}, max sup dist {max_sup:.4}, min integral {min_integral:.6}, slowest {slowest:.2?}"
        ),
    )
}

/// `x ↦ Q(x₁, x₂, h₁(t₁) + h₂(t₂))` with `t` the coordinates of `x` in a
/// rotated frame and `hᵢ` random piecewise-linear; injective because the
/// first two coordinates recover `x`.
fn graph_fixture(seed: u64) -> PiecewiseAffineMap {
    let mut rng = seeded(seed);
    let angle = if seed.is_multiple_of(2) {
        0.0
    } else {
        uniform(&mut rng, 0.1, 1.4)
    };
    let (c, s) = (angle.cos(), angle.sin());
    let x = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let q = gaussian_matrix(&mut rng, 3, 3).qr().q();
    let x_inv = linalg::inverse(&x).unwrap();
    let corners = BoxRegion::cube(2, 0.0, 1.0).unwrap().corners();
    let axes = (0..2)
        .map(|i| {
            let ts: Vec<f64> = corners.iter().map(|p| (x_inv.row(i) * p)[0]).collect();
            let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min) - 0.01;
            let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 0.01;
            let pieces = 3 + (uniform(&mut rng, 0.0, 10.0) as usize);
            let mut knots: Vec<f64> = (0..pieces - 1).map(|_| uniform(&mut rng, lo, hi)).collect();
            knots.push(lo);
            knots.push(hi);
            knots.sort_by(f64::total_cmp);
            knots.dedup();
            let slopes = (0..knots.len() - 1)
                .map(|_| {
                    let mut v = Vector::zeros(3);
                    v[0] = x[(0, i)];
                    v[1] = x[(1, i)];
                    v[2] = uniform(&mut rng, -1.0, 1.0);
                    &q * v
                })
                .collect();
            let start = knots[0];
            let mut base = Vector::zeros(3);
            base[0] = start * x[(0, i)];
            base[1] = start * x[(1, i)];
            AxisCurve::from_slopes(knots, &q * base, slopes).unwrap()
        })
        .collect();
    PiecewiseAffineMap::new(
        Vector::zeros(2),
        x,
        Vector::zeros(3),
        axes,
        Region::Box(BoxRegion::cube(2, 0.0, 1.0).unwrap()),
        Norm::euclidean(2).unwrap(),
        Norm::euclidean(3).unwrap(),
    )
    .unwrap()
}

fn area_formula_criterion() -> Outcome {
    let region = Region::Box(BoxRegion::cube(2, 0.0, 1.0).unwrap());
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let g = graph_fixture(derive_seed(4, k));
        let exact = g.jacobian_integral(&region).unwrap();
        let est = boxcount_image_measure(&g, &region, 3, 1e-3).unwrap().value;
        worst = worst.max((est / exact - 1.0).abs());
    }
    outcome(
        worst <= 0.15,
        format!("10 injective graphs, worst relative gap {worst:.4} at box size 1e-3"),
    )
}

fn negative_criterion() -> Outcome {
    let config: NegativeConfig = serde_json::from_value(serde_json::json!({
        "domain_norm": {"dim": 2, "kind": {"lp": "inf"}},
        "codomain_norm": {"dim": 2, "kind": "euclidean"},
        "u": [1.0, 0.0],
        "r": 0.01,
        "eps": (1..=8).map(|i| 0.5f64.powi(i)).collect::<Vec<_>>(),
        "supplementary_r": [0.25]
    }))
    .unwrap();
    let rep = run_negative_experiment(&config, 7).unwrap();
    let fr: Vec<String> = rep.main.records.iter().map(|r| format!("{:.3}", r.fraction)).collect();
    let sup: Vec<String> = rep.supplementary[0]
        .records
        .iter()
        .map(|r| format!("{:.3}", r.fraction))
        .collect();
    let ctl = rep
        .control
        .as_ref()
        .map(|c| c.iter().map(|r| r.fraction).fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NAN);
    outcome(
        rep.trend_met,
        format!(
            "r=0.01 maxima [{}] (decreasing {}, final ≤ 0.1 {}); control min {ctl:.3}; r=0.25 maxima [{}]",
            fr.join(", "),
            rep.main.weakly_decreasing,
            rep.final_ok,
            sup.join(", ")
        ),
    )
}

fn glue_criterion() -> Outcome {
    let mut ok = true;
    let mut worst_quotient: f64 = f64::NEG_INFINITY;
    let mut worst_gap = f64::NEG_INFINITY;
    for k in 0..100u64 {
        let mut rng = seeded(derive_seed(6, k));
        let (n, m) = (2, 2);
        let a = Norm::euclidean(n).unwrap();
        let b = Norm::euclidean(m).unwrap();
        let lip = uniform(&mut rng, 0.2, 0.9);
        let mut l = gaussian_matrix(&mut rng, m, n);
        l *= lip / linalg::spectral_norm(&l);
        let base: Arc<dyn VectorMap> = Arc::new(AffineMap::new(l.clone(), gaussian_vector(&mut rng, m)).unwrap());
        let delta = uniform(&mut rng, 0.01, 0.1);
        let mut patches: Vec<Patch> = Vec::new();
        for j in 0..4 {
            let rho = uniform(&mut rng, 0.05, 0.4);
            let cx = -3.0 + 2.0 * j as f64;
            let set = if j % 2 == 0 {
                let w = uniform(&mut rng, 0.0, 0.5);
                PatchSet::Box(BoxRegion::new(vec![cx, -0.3], vec![cx + w, 0.3]).unwrap())
            } else {
                PatchSet::Points(
                    (0..3)
                        .map(|_| Vector::from_vec(vec![cx + uniform(&mut rng, 0.0, 0.4), uniform(&mut rng, -0.3, 0.3)]))
                        .collect(),
                )
            };
            let shift = gaussian_vector(&mut rng, m);
            let shift = &shift * (uniform(&mut rng, 0.0, 0.95) * delta * rho / shift.norm());
            let map: Arc<dyn VectorMap> =
                Arc::new(AffineMap::new(l.clone(), base.eval(&Vector::zeros(n)) + shift).unwrap());
            patches.push(Patch { set, rho, map });
        }
        let spec = PatchSpec {
            base: base.clone(),
            patches: patches.clone(),
            delta,
            domain_norm: a.clone(),
            codomain_norm: b.clone(),
        };
        let g = glue_patches(spec, lip, k).unwrap();
        let domain = Region::Box(BoxRegion::new(vec![-4.0, -1.5], vec![4.5, 1.5]).unwrap());
        for p in &patches {
            let pts: Vec<Vector> = match &p.set {
                PatchSet::Box(bx) => bx.lattice(5),
                PatchSet::Points(ps) => ps.clone(),
            };
            ok &= pts.iter().all(|x| g.eval(x) == p.map.eval(x));
        }
        for _ in 0..200 {
            let x = domain.sample(&mut rng);
            if patches.iter().all(|p| p.set.distance(&x, &a) >= p.rho) {
                ok &= g.eval(&x) == base.eval(&x);
            }
        }
        let q = estimate_lipschitz(&g, &domain, &a, &b, 4000, k).unwrap().value;
        ok &= q <= lip + 4.0 * delta + 1e-9;
        worst_quotient = worst_quotient.max(q - lip - 4.0 * delta);
        let d = sup_distance(base.as_ref(), &g, &domain, &b, 4000, k);
        ok &= d < delta;
        worst_gap = worst_gap.max(d - delta);
    }
    outcome(
        ok,
        format!("100 specs, max (quotient − (L+4δ)) {worst_quotient:.3e}, max (sup dist − δ) {worst_gap:.3e}"),
    )
}

fn coverage_criterion() -> Outcome {
    let eta: f64 = 0.5;
    let r = 1.0;
    let delta = lsc_margin(&Matrix::identity(2, 2), eta).unwrap();
    let target = eta.sqrt() * r;
    let mut worst: f64 = 1.0;
    for k in 0..50u64 {
        let mut rng = seeded(derive_seed(7, k));
        let terms: Vec<(Vector, Vector, f64)> = (0..4)
            .map(|_| {
                let w = gaussian_vector(&mut rng, 2) * 2.0;
                let c = gaussian_vector(&mut rng, 2);
                (w, c, uniform(&mut rng, 0.0, std::f64::consts::TAU))
            })
            .collect();
        let total: f64 = terms.iter().map(|t| t.1.norm()).sum();
        let scale = delta * r / total;
        let g = FnMap::new(2, 2, move |x: &Vector| {
            let mut y = x.clone();
            for (w, c, phase) in &terms {
                y += c * (scale * (w.dot(x) + phase).sin());
            }
            y
        });
        let rep = coverage_check(&g, r, target, r / 200.0).unwrap();
        worst = worst.min(rep.value);
    }
    outcome(
        worst == 1.0,
        format!("50 perturbations at δ = {delta:.6}, min covered fraction {worst}"),
    )
}

fn norm_criterion() -> Outcome {
    let mut ok = true;
    for n in 1..=4 {
        ok &= Norm::linf(n).unwrap().vol_of_norm() == 1.0;
    }
    let l1 = Norm::l1(2).unwrap().vol_of_norm();
    let l2 = Norm::euclidean(2).unwrap().vol_of_norm();
    ok &= (l1 - 2.0).abs() <= 1e-9 && (l2 - 4.0 / std::f64::consts::PI).abs() <= 1e-6;
    let linf = Norm::linf(2).unwrap();
    let e1 = linf.analyze_extremal(&Vector::from_vec(vec![1.0, 0.0])).unwrap();
    let corner = linf.analyze_extremal(&Vector::from_vec(vec![1.0, 1.0])).unwrap();
    ok &= !e1.is_extremal && corner.is_strongly_extremal;
    outcome(
        ok,
        format!(
            "vol ℓ¹ {l1}, vol ℓ² {l2:.12}, (1,0) extremal {}, (1,1) strongly extremal {}",
            e1.is_extremal, corner.is_strongly_extremal
        ),
    )
}

fn determinism_criterion() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_inflate-lab");
    let dir = std::env::temp_dir().join(format!("inflate-lab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let configs = [
        (
            "check-inflation",
            r#"{"params": {"map": {"entries": [[0.5, 0.1], [0.0, 0.4], [0.2, 0.0]], "domain_norm": {"dim": 2, "kind": {"lp": "inf"}}, "codomain_norm": {"dim": 3, "kind": "euclidean"}}, "lambda": 0.05, "budget": {"restarts": 16, "steps": 100}}}"#,
        ),
        (
            "probe-pair",
            r#"{"params": {"a": {"dim": 2, "kind": {"lp": 1}}, "b": {"dim": 2, "kind": "euclidean"}, "lambda": 0.1, "samples": 6, "budget": {"restarts": 8, "steps": 50}}}"#,
        ),
        (
            "mv",
            r#"{"params": {"u": [0.6, 0.8], "a": {"dim": 2, "kind": {"lp": 3}}, "b": {"dim": 2, "kind": "euclidean"}, "allow_analytic": false, "restarts": 8, "steps": 60}}"#,
        ),
        (
            "inflate",
            r#"{"params": {"field": {"type": "sinusoid", "amplitude": 0.2, "frequency": [1.0, 0.5], "direction": [0.0, 1.0, 0.0]}, "region": {"box": {"lo": [0.0, 0.0], "hi": [1.0, 1.0]}}, "eps": 0.2, "eta": 0.5, "sup_samples": 2000}}"#,
        ),
        (
            "glue",
            r#"{"params": {"base": {"type": "affine", "linear": [[0.5, 0.0], [0.0, 0.5]]}, "region": {"box": {"lo": [-2.0, -2.0], "hi": [2.0, 2.0]}}, "lip": 0.5, "delta": 0.1, "patches": [{"set": {"points": [[0.0, 0.0]]}, "rho": 0.5, "map": {"type": "affine", "linear": [[0.5, 0.0], [0.0, 0.5]], "offset": [0.02, 0.0]}}], "samples": 2000}}"#,
        ),
        (
            "experiment-positive",
            r#"{"params": {"region": {"box": {"lo": [0.0, 0.0], "hi": [1.0, 1.0]}}, "field": {"type": "zero", "m": 3}, "eta": 0.9, "eps": [0.2, 0.1], "trials": 2, "box_size": 0.02}}"#,
        ),
        (
            "experiment-negative",
            r#"{"params": {"domain_norm": {"dim": 2, "kind": {"lp": "inf"}}, "codomain_norm": {"dim": 2, "kind": "euclidean"}, "u": [1.0, 0.0], "r": 0.25, "eps": [0.5, 0.1], "restarts": 4, "steps": 50}}"#,
        ),
        ("calibrate", r#"{"params": {"box_sizes": [0.05]}}"#),
    ];
    let mut ok = true;
    let mut failures = Vec::new();
    for (command, text) in configs {
        let path = dir.join(format!("{command}.json"));
        std::fs::write(&path, text).unwrap();
        let mut outputs: Vec<Vec<u8>> = Vec::new();
        for (threads, format) in [("1", "json"), ("4", "json"), ("1", "csv"), ("3", "csv")] {
            let out: PathBuf = dir.join(format!("{command}-{threads}.{format}"));
            let status = Process::new(bin)
                .args([command, "--config"])
                .arg(&path)
                .args(["--seed", "42", "--threads", threads, "--format", format, "--out"])
                .arg(&out)
                .output()
                .unwrap();
            if format == "csv" && status.status.code() == Some(2) {
                continue;
            }
            if !status.status.success() {
                failures.push(format!("{command} exited {:?}", status.status.code()));
                ok = false;
                continue;
            }
            outputs.push(std::fs::read(&out).unwrap());
        }
        let json_same = outputs.len() >= 2 && outputs[0] == outputs[1];
        let csv_same = outputs.len() < 4 || outputs[2] == outputs[3];
        if !(json_same && csv_same) {
            failures.push(format!("{command} differs between reruns"));
            ok = false;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        ok,
        if failures.is_empty() {
            "8 commands rerun with 1 and several threads, byte-identical".to_string()
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome, bool);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "euclidean inflation", euclidean_inflation_criterion, true),
        (2, "maximal volume", mv_criterion, true),
        (3, "positive construction at desk scale", positive_criterion, true),
        (4, "area formula consistency", area_formula_criterion, true),
        (5, "negative trend", negative_criterion, false),
        (6, "gluing bound", glue_criterion, true),
        (7, "coverage under small perturbation", coverage_criterion, true),
        (8, "norm kernel exactness", norm_criterion, true),
        (9, "determinism", determinism_criterion, true),
    ];
    let mut required_failed = 0;
    for (id, name, check, required) in criteria {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && !required {
            " (expected, see notes)"
        } else {
            ""
        };
        println!(
            "criterion {id} {verdict}{note}: {name}: {} [{:.1?}]",
            o.detail,
            start.elapsed()
        );
        if !o.pass && required {
            required_failed += 1;
        }
    }
    if required_failed > 0 {
        eprintln!("{required_failed} required criteria failed");
        std::process::exit(1);
    }
}
