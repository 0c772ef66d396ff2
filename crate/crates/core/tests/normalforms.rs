use kkwave::equilibria::{cusp_point, interior_equilibrium, FoldBranch, FoldCurveTrace};
use kkwave::model::ModelParams;
use kkwave::normalforms::{
    bt_nondegeneracy, critical_eigenvectors, dbt_coefficients, gh_curve, gh_point, lyapunov_l1, lyapunov_l1_via_g, omega0,
};
use num_complex::Complex64;

const Q_LINES: [f64; 10] = [0.06, 0.085, 0.11, 0.135, 0.16, 0.185, 0.21, 0.235, 0.26, 0.285];

/// Hopf point at `(q_g, v_g)`: the interior equilibrium with `theta0 = (v_c + v_g)^2`.
fn hopf_at(q_g: f64, v_g: f64) -> (ModelParams, f64) {
    let p = ModelParams::standard(1.0, q_g, v_g).unwrap();
    let e = interior_equilibrium(&p).unwrap().expect("inside the cuspidal region");
    (p.with_theta0((e.v_c + v_g).powi(2)), e.v_c)
}

/// `n` points strictly inside `[a, b]`, avoiding the ends.
fn inner(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| a + (b - a) * (0.05 + 0.9 * k as f64 / (n - 1) as f64))
}

fn trace() -> FoldCurveTrace {
    FoldCurveTrace::new(0.05).unwrap()
}

fn fold_vg(t: &FoldCurveTrace, q: f64) -> (f64, f64) {
    (
        t.at(q, FoldBranch::LowerGammaMinus).unwrap().0,
        t.at(q, FoldBranch::UpperGammaPlus).unwrap().0,
    )
}

#[test]
fn two_routes_for_ell1_agree_on_interior_hopf_points() {
    let t = trace();
    let mut n = 0;
    let mut worst = 0.0f64;
    for q in Q_LINES {
        let (lo, hi) = fold_vg(&t, q);
        for v_g in inner(lo, hi, 12) {
            let (p, v_c) = hopf_at(q, v_g);
            let a = lyapunov_l1(&p, v_c).unwrap();
            let b = lyapunov_l1_via_g(&p, v_c).unwrap().ell1;
            worst = worst.max((a - b).abs() / a.abs());
            n += 1;
        }
    }
    assert!(n >= 100);
    assert!(worst < 1e-10, "worst relative difference {worst:e}");
}

#[test]
fn ell1_is_negative_above_and_positive_below_the_gh_curve() {
    let t = trace();
    let (mut plus, mut minus) = (0, 0);
    for q in Q_LINES {
        let (lo, hi) = fold_vg(&t, q);
        let gh = gh_point(&t, q).unwrap();
        assert!(lo < gh.v_g && gh.v_g < hi);
        for v_g in inner(gh.v_g, hi, 10) {
            let (p, v_c) = hopf_at(q, v_g);
            let l = lyapunov_l1(&p, v_c).unwrap();
            assert!(l < 0.0, "Delta+ point ({q}, {v_g}) has ell1 = {l}");
            plus += 1;
        }
        for v_g in inner(lo, gh.v_g, 10) {
            let (p, v_c) = hopf_at(q, v_g);
            let l = lyapunov_l1(&p, v_c).unwrap();
            assert!(l > 0.0, "Delta- point ({q}, {v_g}) has ell1 = {l}");
            minus += 1;
        }
    }
    assert_eq!((plus, minus), (100, 100));
}

#[test]
fn ell1_changes_sign_once_on_vertical_lines() {
    let t = trace();
    for k in 0..20 {
        let q = 0.06 + 0.0125 * k as f64;
        let (lo, hi) = fold_vg(&t, q);
        let signs: Vec<f64> = inner(lo, hi, 40)
            .map(|v_g| {
                let (p, v_c) = hopf_at(q, v_g);
                lyapunov_l1(&p, v_c).unwrap().signum()
            })
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1, "q_g = {q}: {signs:?}");
        assert_eq!(signs[0], 1.0, "positive below at q_g = {q}");
        assert_eq!(*signs.last().unwrap(), -1.0, "negative above at q_g = {q}");
    }
}

#[test]
fn gh_curve_points_have_vanishing_ell1() {
    let c = gh_curve((0.05, 0.31), 60).unwrap();
    assert_eq!(c.points.len(), 60);
    for pt in &c.points {
        let r = pt.aux["ell1_residual"];
        assert!(r.abs() < 1e-10, "ell1 = {r:e} at q_g = {}", pt.q_g);
    }
}

#[test]
fn gh_curve_limits_to_the_cusp() {
    let k = cusp_point().unwrap();
    let t = trace();
    let mut last = f64::INFINITY;
    for d in [1e-2, 1e-3, 1e-4, 1e-5] {
        let g = gh_point(&t, k.q_g - d).unwrap();
        let dist = (g.q_g - k.q_g).hypot(g.v_g - k.v_g);
        assert!(dist < last, "distance {dist:e} does not shrink at offset {d:e}");
        last = dist;
    }
    assert!(last < 1e-3, "GH curve ends {last:e} from K");
}

#[test]
fn gh_curve_rejects_ranges_past_the_cusp() {
    assert!(gh_curve((0.1, 0.32), 5).is_err());
}

#[test]
fn dbt_coefficients_are_in_the_saddle_case() {
    let k = cusp_point().unwrap();
    let d = dbt_coefficients(&k).unwrap();
    let p = k.params().unwrap();
    let x = k.v_c + k.v_g;
    let a3 = -p.mu * k.q_g * k.ve3 / (6.0 * x);
    let b2 = 2.0 * p.lambda * k.q_g / x;
    assert!(d.a3 > 0.0 && d.b2 > 0.0 && d.saddle_case);
    assert!((d.a3 - a3).abs() < 1e-12 * a3);
    assert!((d.b2 - b2).abs() < 1e-12 * b2);
}

#[test]
fn bt_points_are_nondegenerate_away_from_the_cusp() {
    let t = trace();
    for q in Q_LINES {
        for (branch, sign) in [(FoldBranch::LowerGammaMinus, -1.0), (FoldBranch::UpperGammaPlus, 1.0)] {
            let (v_g, v_c, _) = t.at(q, branch).unwrap();
            let p = ModelParams::standard((v_c + v_g).powi(2), q, v_g).unwrap();
            let (ve2, mixed) = bt_nondegeneracy(&p, v_c).unwrap();
            assert_eq!(ve2.signum(), sign, "v_e'' at q_g = {q} on {branch:?}");
            assert!(mixed != 0.0);
        }
    }
}

#[test]
fn g11_is_imaginary_with_the_closed_form() {
    let (lo, hi) = fold_vg(&trace(), 0.25);
    for (q, v_g) in [(0.164212226, 0.335569670), (0.133886021, 0.204071932), (0.25, 0.5 * (lo + hi))] {
        let (p, v_c) = hopf_at(q, v_g);
        let d = lyapunov_l1_via_g(&p, v_c).unwrap();
        let w = omega0(&p, v_c).unwrap();
        assert!((d.omega0 - w).abs() < 1e-12 * w);
        let ve2 = kkwave::model::ve_derivs(&p, v_c, 2).unwrap();
        let x = v_c + v_g;
        let expected = -(2.0 * w * w - p.mu * q * ve2) / (2.0 * w * x);
        assert!(d.g11.re.abs() < 1e-12 * d.g11.im.abs());
        assert!((d.g11.im - expected).abs() < 1e-10 * expected.abs());
    }
}

#[test]
fn critical_eigenvectors_are_normalized() {
    for w in [1e-3, 0.02, 0.7, 3.0] {
        let (q, p) = critical_eigenvectors(w);
        let dot: Complex64 = p[0].conj() * q[0] + p[1].conj() * q[1];
        assert!((dot - 1.0).norm() < 1e-15);
    }
}

#[test]
fn lyapunov_refuses_non_hopf_points() {
    let p = ModelParams::standard(0.16, 0.133886021, 0.204071932).unwrap();
    assert!(lyapunov_l1(&p, 0.05).is_err());
}
