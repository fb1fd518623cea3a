//! Worked examples checked against hand-computed or brute-force values.

use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use inflate_lab::constructions::{
    balls_epsilon, glue_patches, inflate_affine, inflate_on_set, lsc_margin, zigzag_curve, InflateParams, Patch,
    PatchSet, PatchSpec,
};
use inflate_lab::linalg::{Matrix, Vector};
use inflate_lab::linear_map::{
    euclidean_inflation, inflation_search, sign_permutations, verify_certificate, InflationCertificate, LinearMap,
    SearchBudget,
};
use inflate_lab::map::{AffineMap, FnMap, VectorMap};
use inflate_lab::maximal_volume::{column_augment, max_volume, usc_probe, MvOptions};
use inflate_lab::measure::boxcount::boxcount_image_measure;
use inflate_lab::measure::coverage::coverage_check;
use inflate_lab::measure::jacobian::superlevel_fraction;
use inflate_lab::norm::Norm;
use inflate_lab::region::{BoxRegion, GridSet, Region};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn rows(r: usize, c: usize, xs: &[f64]) -> Matrix {
    Matrix::from_row_slice(r, c, xs)
}

fn e(n: usize) -> Norm {
    Norm::euclidean(n).unwrap()
}

fn linf(n: usize) -> Norm {
    Norm::linf(n).unwrap()
}

fn square() -> Region {
    Region::Box(BoxRegion::cube(2, -1.0, 1.0).unwrap())
}

/// Gauge of a symmetric hull by bisection on membership in the convex hull
/// of `vertices`, membership decided by brute-force barycentric search on a
/// fine simplex lattice in 2D.
fn brute_gauge(vertices: &[[f64; 2]], x: [f64; 2]) -> f64 {
    let inside = |p: [f64; 2]| {
        let k = vertices.len();
        (0..k).all(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-15
        })
    };
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..80 {
        let t = 0.5 * (lo + hi);
        if inside([x[0] / t, x[1] / t]) {
            hi = t;
        } else {
            lo = t;
        }
    }
    hi
}

#[test]
fn norm_evaluation() {
    assert_eq!(linf(2).eval(&v(&[1.0, -1.0])), 1.0);
    assert_abs_diff_eq!(e(2).eval(&v(&[3.0, 4.0])), 5.0, epsilon = 1e-15);
    let cross = Norm::polytopal(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[-1.0, 0.0]), v(&[0.0, -1.0])]).unwrap();
    let ccw = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
    assert_abs_diff_eq!(cross.eval(&v(&[0.5, 0.5])), 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(brute_gauge(&ccw, [0.5, 0.5]), 1.0, epsilon = 1e-9);
    for x in [[0.3, -0.9], [2.0, 0.1], [-0.25, -0.25]] {
        assert_abs_diff_eq!(cross.eval(&v(&x)), brute_gauge(&ccw, x), epsilon = 1e-9);
    }
}

#[test]
fn ball_volumes_and_vol_of_norm() {
    for n in 1..=4 {
        assert_eq!(linf(n).ball_volume().value, 2f64.powi(n as i32));
        assert_eq!(linf(n).vol_of_norm(), 1.0);
    }
    assert_abs_diff_eq!(e(2).ball_volume().value, PI, epsilon = 1e-12);
    assert_abs_diff_eq!(Norm::l1(2).unwrap().ball_volume().value, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(e(2).vol_of_norm(), 4.0 / PI, epsilon = 1e-12);
    assert_abs_diff_eq!(Norm::l1(2).unwrap().vol_of_norm(), 2.0, epsilon = 1e-12);
    // Unit ball of ℓ² in ℝ³: 4π/3.
    assert_abs_diff_eq!(e(3).ball_volume().value, 4.0 * PI / 3.0, epsilon = 1e-12);
}

#[test]
fn extremal_points_of_the_square() {
    let r = linf(2).analyze_extremal(&v(&[1.0, 1.0])).unwrap();
    assert!(r.is_boundary && r.is_extremal && r.is_strongly_extremal);
    let p = rows(2, 2, &r.witness_projection.unwrap().concat());
    assert!((&p * &p - &p).amax() < 1e-12);
    let r = linf(2).analyze_extremal(&v(&[1.0, 0.0])).unwrap();
    assert!(r.is_boundary && !r.is_extremal && !r.is_strongly_extremal);
    assert!(r.witness_projection.is_none());
    let t = 0.7f64;
    let r = e(2).analyze_extremal(&v(&[t.cos(), t.sin()])).unwrap();
    assert!(r.is_strongly_extremal);
    assert!(linf(2).analyze_extremal(&v(&[0.5, 0.0])).is_err());
}

#[test]
fn volumes_of_linear_maps() {
    let vol = |m: Matrix, n: usize, k: usize| LinearMap::new(m, e(n), e(k)).unwrap().vol().unwrap();
    assert_abs_diff_eq!(vol(Matrix::identity(2, 2), 2, 2), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(vol(rows(2, 2, &[2.0, 0.0, 0.0, 3.0]), 2, 2), 6.0, epsilon = 1e-12);
    // Gram determinant by hand: diag(1, 0.25), √ = 0.5.
    assert_abs_diff_eq!(
        vol(rows(3, 2, &[1.0, 0.0, 0.0, 0.5, 0.0, 0.0]), 2, 3),
        0.5,
        epsilon = 1e-12
    );
    assert!(LinearMap::new(rows(1, 2, &[1.0, 1.0]), e(2), e(1))
        .unwrap()
        .vol()
        .is_err());
}

#[test]
fn operator_norms() {
    let u = rows(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let op = LinearMap::new(u, linf(2), e(3)).unwrap().operator_norm();
    assert!(op.exact);
    assert_abs_diff_eq!(op.value, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(
        LinearMap::new(Matrix::identity(2, 2), e(2), e(2)).unwrap().op_norm(),
        1.0,
        epsilon = 1e-12
    );
    // Vertex enumeration over {±1}²: max |x₁ + x₂| = 2.
    let sum = rows(2, 2, &[1.0, 1.0, 0.0, 0.0]);
    let brute = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
        .iter()
        .map(|x| e(2).eval(&(&sum * v(x))))
        .fold(0.0, f64::max);
    assert_abs_diff_eq!(
        LinearMap::new(sum, linf(2), e(2)).unwrap().op_norm(),
        brute,
        epsilon = 1e-12
    );
    assert_eq!(brute, 2.0);
}

#[test]
fn sign_patterns() {
    let mut got = sign_permutations(&[2.0, 3.0]).unwrap();
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut want = vec![vec![2.0, 3.0], vec![-2.0, 3.0], vec![2.0, -3.0], vec![-2.0, -3.0]];
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(got, want);
    assert_eq!(sign_permutations(&[1.0]).unwrap().len(), 2);
    assert_eq!(sign_permutations(&[5.0, 1.0, 1.0]).unwrap().len(), 8);
    assert!(sign_permutations(&[1.0; 21]).is_err());
}

#[test]
fn euclidean_inflation_examples() {
    let a = LinearMap::new(rows(3, 2, &[0.5, 0.0, 0.0, 0.25, 0.0, 0.0]), e(2), e(3)).unwrap();
    let cert = euclidean_inflation(&a).unwrap();
    assert!(cert.verified);
    let mut mu = cert.eigenvalues.clone();
    mu.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_abs_diff_eq!(mu[0], 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(mu[1], 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(cert.min_sign_vol, 1.0, epsilon = 1e-9);

    let (c, s) = ((PI / 6.0).cos(), (PI / 6.0).sin());
    let rot = rows(2, 2, &[c, -s, s, c]) * 0.5;
    let cert = euclidean_inflation(&LinearMap::new(rot, e(2), e(2)).unwrap()).unwrap();
    for mu in &cert.eigenvalues {
        assert_abs_diff_eq!(*mu, 2.0, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(cert.worst_sign_norm, 1.0, epsilon = 1e-9);

    let degenerate = LinearMap::new(rows(2, 2, &[1.0, 0.0, 0.0, 0.0]), e(2), e(2)).unwrap();
    assert!(euclidean_inflation(&degenerate).is_err());
}

#[test]
fn certificate_verification() {
    let a = LinearMap::new(rows(2, 2, &[0.5, 0.0, 0.0, 1.0]), e(2), e(2)).unwrap();
    let hand = InflationCertificate::unverified(&Matrix::identity(2, 2), vec![2.0, 1.0], 1.0);
    let report = verify_certificate(&a, &hand, 1e-9).unwrap();
    assert!(report.verified);
    assert_abs_diff_eq!(report.min_sign_vol, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(report.worst_sign_norm, 1.0, epsilon = 1e-12);

    let shrinking = InflationCertificate::unverified(&Matrix::identity(2, 2), vec![0.5, 1.0], 0.1);
    let report = verify_certificate(&a, &shrinking, 1e-9).unwrap();
    assert!(!report.verified && !report.non_shrinking);

    let singular = InflationCertificate::unverified(&rows(2, 2, &[1.0, 1.0, 1.0, 1.0]), vec![1.0, 1.0], 0.0);
    assert!(verify_certificate(&a, &singular, 1e-9).is_err());
}

#[test]
fn inflation_search_examples() {
    let a = LinearMap::new(rows(2, 2, &[0.4, 0.1, -0.2, 0.3]), e(2), e(2)).unwrap();
    let cert = inflation_search(&a, 0.999, SearchBudget::default(), 3)
        .unwrap()
        .unwrap();
    assert!(cert.verified && cert.min_sign_vol >= 0.999 - 1e-9);

    let trivial = inflation_search(&a, 0.0, SearchBudget::default(), 3).unwrap().unwrap();
    assert!(trivial.verified);

    // Zero maximal volume at e₁ leaves room only of order √(norm slack).
    let near_rank_one = LinearMap::new(rows(2, 2, &[1.0 - 2e-7, 1e-7, 1e-7, 1e-7]), linf(2), e(2)).unwrap();
    let budget = SearchBudget {
        restarts: 16,
        steps: 100,
    };
    assert!(inflation_search(&near_rank_one, 0.01, budget, 3).unwrap().is_none());
}

#[test]
fn column_augmentation() {
    let id = column_augment(&v(&[1.0, 0.0]), &[v(&[0.0, 1.0])]).unwrap();
    assert_eq!(id, Matrix::identity(2, 2));
    let m = column_augment(&v(&[1.0, 0.0, 0.0]), &[v(&[0.0, 0.0, 1.0])]).unwrap();
    assert_abs_diff_eq!(
        LinearMap::new(m, e(2), e(3)).unwrap().vol().unwrap(),
        1.0,
        epsilon = 1e-12
    );
    let m = column_augment(&v(&[2.0, 0.0]), &[v(&[0.0, 1.0])]).unwrap();
    assert_abs_diff_eq!(m.determinant().abs(), 2.0, epsilon = 1e-12);
    assert!(column_augment(&v(&[1.0, 0.0]), &[v(&[0.0, 1.0, 0.0])]).is_err());
}

#[test]
fn maximal_volume_examples() {
    for n in 2..=3 {
        let u = Vector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let r = max_volume(&u, &linf(n), &e(n), MvOptions::default(), 1).unwrap();
        assert!(r.analytic);
        assert_eq!(r.value, 0.0);
        assert!(r.best_v.iter().flatten().all(|&x| x == 0.0));
    }
    let zero = max_volume(&v(&[0.0, 0.0]), &e(2), &e(2), MvOptions::default(), 1).unwrap();
    assert_eq!(zero.value, 0.0);
    let t = 1.1f64;
    let r = max_volume(&v(&[t.cos(), t.sin(), 0.0]), &e(2), &e(3), MvOptions::default(), 1).unwrap();
    assert!(r.value >= 1.0 - 1e-6 && r.value <= 1.0 + 1e-9);
    assert!(max_volume(&v(&[2.0, 0.0]), &e(2), &e(2), MvOptions::default(), 1).is_err());
}

#[test]
fn usc_probe_examples() {
    let options = MvOptions {
        restarts: 8,
        steps: 80,
        allow_analytic: true,
    };
    let r = usc_probe(&v(&[1.0, 0.0]), &linf(2), &e(2), 0.05, 8, options, 2).unwrap();
    assert!(r.largest_passing_eps.is_some() && !r.under_converged);
    assert_abs_diff_eq!(r.bound, 0.05, epsilon = 1e-12);
    let r = usc_probe(&v(&[1.0, 0.0]), &linf(2), &e(2), 10.0, 4, options, 2).unwrap();
    assert!(r.levels.iter().all(|l| l.passed));
    let r = usc_probe(&v(&[0.0, 1.0]), &e(2), &e(2), 0.05, 8, options, 2).unwrap();
    assert!(r.largest_passing_eps.is_some());
    assert!((r.bound - 1.05).abs() < 1e-6);
}

#[test]
fn zigzag_examples() {
    let z = zigzag_curve(&v(&[0.0, 0.0]), &v(&[1.0, 0.0]), 0.1, 0.0, 1.0, &e(2)).unwrap();
    assert!(z.segment_directions.len() > 1);
    let c = z.to_axis_curve();
    for k in 0..=1000 {
        let y = z.eval(k as f64 / 1000.0);
        assert!(y[1] == 0.0 && y[0].abs() <= 0.1);
        assert!((c.eval(k as f64 / 1000.0) - &y).amax() < 1e-12);
    }

    let one = zigzag_curve(&v(&[1.0, 0.0]), &v(&[1.0, 0.0]), 0.1, 0.0, 1.0, &e(2)).unwrap();
    assert_eq!(one.segment_directions, vec![1]);

    let a = v(&[0.5, 0.0]);
    let z = zigzag_curve(&a, &v(&[1.0, 0.0]), 0.05, 0.0, 1.0, &e(2)).unwrap();
    let worst = (0..=10_000)
        .map(|k| {
            let t = k as f64 / 10_000.0;
            e(2).eval(&(z.eval(t) - &a * t))
        })
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
    for s in z.to_axis_curve().slopes {
        assert!(s == v(&[1.0, 0.0]) || s == v(&[-1.0, 0.0]));
    }

    assert!(zigzag_curve(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), 0.1, 0.0, 1.0, &e(2)).is_err());
    assert!(zigzag_curve(&v(&[1.0, 0.0]), &v(&[0.5, 0.0]), 0.1, 0.0, 1.0, &e(2)).is_err());
}

#[test]
fn inflate_affine_examples() {
    let id = AffineMap::linear(Matrix::identity(2, 2));
    let cert = InflationCertificate::unverified(&Matrix::identity(2, 2), vec![1.0, 1.0], 1.0);
    let lin = LinearMap::new(Matrix::identity(2, 2), e(2), e(2)).unwrap();
    let report = verify_certificate(&lin, &cert, 1e-9).unwrap();
    let cert = InflationCertificate {
        verified: report.verified,
        ..cert
    };
    let g = inflate_affine(&id, &cert, 1.0, &square(), &e(2), &e(2), 0.1).unwrap();
    assert_eq!(g.cell_count(), 1);
    let x = v(&[0.2, -0.6]);
    assert!((g.eval(&x) - &x).amax() < 1e-12);

    let embed = AffineMap::linear(rows(3, 2, &[0.5, 0.0, 0.0, 0.5, 0.0, 0.0]));
    let cert = euclidean_inflation(&LinearMap::new(embed.linear.clone(), e(2), e(3)).unwrap()).unwrap();
    for eps in [0.1, 10.0] {
        let g = inflate_affine(&embed, &cert, 1.0, &square(), &e(2), &e(3), eps).unwrap();
        assert!(g.lipschitz_exact() <= 1.0 + 1e-9);
        assert!(g.min_cell_vol(&square()).unwrap() >= 1.0 - 1e-9);
        for j in g.distinct_linear_parts() {
            let op = LinearMap::new(j.clone(), e(2), e(3)).unwrap().op_norm();
            assert!(op <= 1.0 + 1e-9);
        }
    }

    let doubled = cert.eigenvalues.iter().map(|mu| 2.0 * mu).collect();
    let invalid = InflationCertificate {
        eigenvalues: doubled,
        ..cert.clone()
    };
    assert!(inflate_affine(&embed, &invalid, 1.0, &square(), &e(2), &e(3), 0.1).is_err());
    assert!(inflate_affine(&embed, &cert, 1.0, &square(), &e(2), &e(3), 0.0).is_err());
}

#[test]
fn gluing_examples() {
    let f: Arc<dyn VectorMap> = Arc::new(AffineMap::zero(2, 2));
    let delta = 0.1;
    let c = v(&[delta, 0.0]);
    let cc = c.clone();
    let bump = Arc::new(FnMap::new(2, 2, move |_: &Vector| cc.clone()));
    let spec = PatchSpec {
        base: f.clone(),
        patches: vec![Patch {
            set: PatchSet::Points(vec![Vector::zeros(2)]),
            rho: 1.0,
            map: bump,
        }],
        delta,
        domain_norm: e(2),
        codomain_norm: e(2),
    };
    let g = glue_patches(spec, 0.0, 1).unwrap();
    // χ(x) = max(1/2 − |x|, 0)/(1/2), slope 2, so Lip g = 2δ.
    for x in [[0.0, 0.0], [0.1, 0.0], [0.25, 0.0], [0.6, 0.0]] {
        let chi = (0.5 - e(2).eval(&v(&x))).max(0.0) / 0.5;
        assert!((g.eval(&v(&x)) - &c * chi).amax() < 1e-15);
    }
    let quotient = e(2).eval(&(g.eval(&v(&[0.1, 0.0])) - g.eval(&v(&[0.2, 0.0])))) / 0.1;
    assert_abs_diff_eq!(quotient, 2.0 * delta, epsilon = 1e-12);
    assert!(g.lipschitz_bound() <= 4.0 * delta + 1e-12);

    let same = PatchSpec {
        base: f.clone(),
        patches: vec![Patch {
            set: PatchSet::Points(vec![Vector::zeros(2)]),
            rho: 1.0,
            map: f.clone(),
        }],
        delta,
        domain_norm: e(2),
        codomain_norm: e(2),
    };
    let g = glue_patches(same, 0.0, 1).unwrap();
    assert_eq!(g.eval(&v(&[0.1, 0.2])), Vector::zeros(2));

    let overlapping = PatchSpec {
        base: f.clone(),
        patches: vec![
            Patch {
                set: PatchSet::Points(vec![Vector::zeros(2)]),
                rho: 1.0,
                map: f.clone(),
            },
            Patch {
                set: PatchSet::Points(vec![v(&[0.5, 0.0])]),
                rho: 1.0,
                map: f.clone(),
            },
        ],
        delta,
        domain_norm: e(2),
        codomain_norm: e(2),
    };
    assert!(glue_patches(overlapping, 0.0, 1).is_err());
}

#[test]
fn inflate_on_set_examples() {
    let params = InflateParams::new(1.0, 0.1, 0.9);
    let zero: Arc<dyn VectorMap> = Arc::new(AffineMap::zero(2, 3));
    let out = inflate_on_set(zero, &square(), &e(2), &e(3), &params, 5).unwrap();
    assert!(out.report.target_met && out.report.achieved_integral >= 3.6);
    assert!(out.report.sup_distance <= 0.1);

    let contraction: Arc<dyn VectorMap> = Arc::new(AffineMap::linear(rows(3, 2, &[0.5, 0.0, 0.0, 0.25, 0.1, 0.0])));
    let out = inflate_on_set(contraction, &square(), &e(2), &e(3), &params, 5).unwrap();
    assert!(out.report.achieved_integral >= 3.6 && out.report.sup_distance <= 0.1);
    assert!(out.report.lip_exact.unwrap() <= 1.0 + 1e-9);

    let null = Region::Grid(GridSet::empty(BoxRegion::cube(2, -1.0, 1.0).unwrap(), vec![4, 4]).unwrap());
    let zero: Arc<dyn VectorMap> = Arc::new(AffineMap::zero(2, 3));
    let out = inflate_on_set(zero, &null, &e(2), &e(3), &params, 5).unwrap();
    assert_eq!(out.report.achieved_integral, 0.0);
    assert!(out.report.target_met);

    let steep: Arc<dyn VectorMap> = Arc::new(AffineMap::linear(rows(3, 2, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0])));
    assert!(inflate_on_set(steep, &square(), &e(2), &e(3), &params, 5).is_err());
}

#[test]
fn margins() {
    assert_abs_diff_eq!(
        lsc_margin(&Matrix::identity(2, 2), 0.3).unwrap(),
        (1.0 - 0.3f64.sqrt()) / 2.0,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(lsc_margin(&Matrix::identity(1, 1), 0.6).unwrap(), 0.2, epsilon = 1e-15);
    assert!(lsc_margin(&Matrix::identity(2, 2), 1.0 - 1e-12).unwrap() < 1e-11);
    assert!(lsc_margin(&Matrix::identity(2, 2), 0.2).is_err());
    assert!(lsc_margin(&rows(2, 2, &[1.0, 0.0, 0.0, 0.0]), 0.5).is_err());

    assert_abs_diff_eq!(balls_epsilon(1.0, 0.1, 10).unwrap(), 0.01, epsilon = 1e-15);
    assert_abs_diff_eq!(balls_epsilon(3.0, 0.6, 1).unwrap(), 0.2, epsilon = 1e-15);
    assert_abs_diff_eq!(balls_epsilon(2.0, 0.5, 4).unwrap(), 0.0625, epsilon = 1e-15);
    assert!(balls_epsilon(0.0, 0.5, 4).is_err());
}

#[test]
fn boxcount_examples() {
    let unit = Region::Box(BoxRegion::cube(1, 0.0, 1.0).unwrap());
    let segment = AffineMap::linear(rows(2, 1, &[0.6, 0.8]));
    let r = boxcount_image_measure(&segment, &unit, 2, 1e-3).unwrap();
    assert!((r.value - 1.0).abs() <= 0.02, "{}", r.value);

    let rot = nalgebra::Rotation3::from_scaled_axis(nalgebra::Vector3::new(0.3, -0.5, 0.2));
    let isometry = AffineMap::linear(Matrix::from_fn(3, 2, |i, j| rot[(i, j)]));
    let lin = LinearMap::new(isometry.linear.clone(), e(2), e(3)).unwrap();
    assert_abs_diff_eq!(lin.vol().unwrap(), 1.0, epsilon = 1e-12);
    let r = boxcount_image_measure(&isometry, &square(), 3, 5e-3).unwrap();
    assert!((r.value - 4.0).abs() <= 0.08, "{}", r.value);

    let constant = AffineMap::new(Matrix::zeros(3, 2), v(&[0.3, 0.3, 0.3])).unwrap();
    assert_eq!(
        boxcount_image_measure(&constant, &square(), 3, 1e-3).unwrap().value,
        0.0
    );
}

#[test]
fn superlevel_examples() {
    let id = PiecewiseFixture::halves();
    assert_eq!(superlevel_fraction(&id.unit, &square(), 0.5).unwrap().value, 1.0);
    assert_eq!(superlevel_fraction(&id.flat, &square(), 0.01).unwrap().value, 0.0);
    assert_abs_diff_eq!(
        superlevel_fraction(&id.half, &square(), 0.5).unwrap().value,
        0.5,
        epsilon = 1e-12
    );
}

struct PiecewiseFixture {
    unit: inflate_lab::constructions::PiecewiseAffineMap,
    flat: inflate_lab::constructions::PiecewiseAffineMap,
    half: inflate_lab::constructions::PiecewiseAffineMap,
}

impl PiecewiseFixture {
    fn halves() -> Self {
        use inflate_lab::constructions::{AxisCurve, PiecewiseAffineMap};
        let build = |first: Vector| {
            let x_axis = AxisCurve::from_slopes(
                vec![-1.0, 0.0, 1.0],
                Vector::zeros(2),
                vec![first.clone(), v(&[1.0, 0.0])],
            )
            .unwrap();
            let y_axis = AxisCurve::from_slopes(vec![-1.0, 1.0], Vector::zeros(2), vec![v(&[0.0, 1.0])]).unwrap();
            PiecewiseAffineMap::new(
                Vector::zeros(2),
                Matrix::identity(2, 2),
                Vector::zeros(2),
                vec![x_axis, y_axis],
                square(),
                e(2),
                e(2),
            )
            .unwrap()
        };
        let flat = PiecewiseAffineMap::from_affine(&AffineMap::zero(2, 2), square(), e(2), e(2)).unwrap();
        PiecewiseFixture {
            unit: build(v(&[1.0, 0.0])),
            flat,
            half: build(v(&[0.0, 0.0])),
        }
    }
}

#[test]
fn coverage_examples() {
    let id = AffineMap::linear(Matrix::identity(2, 2));
    assert_eq!(coverage_check(&id, 1.0, 1.0, 0.01).unwrap().value, 1.0);
    let half = AffineMap::linear(Matrix::identity(2, 2) * 0.5);
    assert!(coverage_check(&half, 1.0, 0.9, 0.01).unwrap().value < 1.0);
    let delta = lsc_margin(&Matrix::identity(2, 2), 0.5).unwrap();
    let wobble = FnMap::new(2, 2, move |x: &Vector| {
        x + v(&[(7.0 * x[1]).sin(), (5.0 * x[0]).cos()]) * (delta / 2f64.sqrt())
    });
    assert_eq!(
        coverage_check(&wobble, 1.0, 0.5f64.sqrt(), 1.0 / 200.0).unwrap().value,
        1.0
    );
    assert!(coverage_check(&AffineMap::linear(Matrix::identity(3, 3)), 1.0, 1.0, 0.1).is_err());
}
