//! Hopf and degenerate Takens-Bogdanov normal-form coefficients.
//!
//! At an interior equilibrium with `theta0 = (v_c + v_g)^2` the linearization
//! has eigenvalues `+-i omega0`. The first Lyapunov coefficient is computed
//! twice: from its closed form, and from the multilinear Taylor forms `B`, `C`
//! of the vector field contracted with the critical eigenvectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::continuation::curve::{BifurcationCurve, CurveKind, CurvePoint};
use crate::equilibria::{self, CuspPoint, FoldBranch, FoldCurveTrace, EQUILIBRIUM_TOL};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams};

/// `omega0` below which normal-form coefficients are refused.
pub const MIN_OMEGA0: f64 = 1e-6;

/// Normal-form data at a Hopf point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfData {
    pub omega0: f64,
    pub ell1: f64,
    pub g20: Complex64,
    pub g11: Complex64,
    pub g21: Complex64,
}

/// Cubic and mixed quadratic coefficients at the cusp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbtData {
    pub a3: f64,
    pub b2: f64,
    pub saddle_case: bool,
}

fn require_interior(p: &ModelParams, v_c: f64) -> Result<[f64; 4]> {
    let jet = model::ve_jet(p, v_c)?;
    if (jet[0] - v_c).abs() >= EQUILIBRIUM_TOL {
        return Err(Error::Precondition(format!("v_c = {v_c} is not an equilibrium")));
    }
    if !(jet[1] > 1.0) {
        return Err(Error::Precondition(format!(
            "v_e'(v_c) = {} must exceed 1 for a Hopf point",
            jet[1]
        )));
    }
    Ok(jet)
}

/// `omega0 = sqrt(mu q_g (v_e'(v_c) - 1) / (v_c + v_g))`.
pub fn omega0(p: &ModelParams, v_c: f64) -> Result<f64> {
    let jet = require_interior(p, v_c)?;
    let x = p.shifted(v_c)?;
    Ok((p.mu * p.q_g * (jet[1] - 1.0) / x).sqrt())
}

fn checked_omega0(p: &ModelParams, v_c: f64) -> Result<f64> {
    let w = omega0(p, v_c)?;
    if w < MIN_OMEGA0 {
        Err(Error::NearBt { omega0: w })
    } else {
        Ok(w)
    }
}

/// The bracket `(v_e' - 1)/(v_c + v_g) + v_e''` whose sign is opposite to `ell1`.
pub fn ell1_bracket(p: &ModelParams, v_c: f64) -> Result<f64> {
    let x = p.shifted(v_c)?;
    let jet = model::ve_jet(p, v_c)?;
    Ok((jet[1] - 1.0) / x + jet[2])
}

/// First Lyapunov coefficient from the closed form
/// `-lambda mu q_g^2 / (2 omega0^3 (v_c+v_g)^2) ((v_e'-1)/(v_c+v_g) + v_e'')`,
/// with `theta0 = (v_c + v_g)^2` imposed.
pub fn lyapunov_l1(p: &ModelParams, v_c: f64) -> Result<f64> {
    let w = checked_omega0(p, v_c)?;
    let x = p.shifted(v_c)?;
    let bracket = ell1_bracket(p, v_c)?;
    Ok(-p.lambda * p.mu * p.q_g * p.q_g / (2.0 * w.powi(3) * x * x) * bracket)
}

/// Taylor data of the second component `f2(w1, w2)` around `(v_c, 0)`.
struct Taylor {
    a21: f64,
    a22: f64,
    f11: f64,
    f12: f64,
    f22: f64,
    f111: f64,
    f112: f64,
    f122: f64,
    f222: f64,
}

impl Taylor {
    /// Partial derivatives of
    /// `f2 = lambda q (1 - theta h^2/(1+h w1)^2) w2 - mu q (v_e - w1 - v_c)/(w1 + v_c + v_g)`
    /// at the origin, `h = 1/(v_c+v_g)`.
    fn at(p: &ModelParams, v_c: f64, theta: f64) -> Result<Self> {
        let x = p.shifted(v_c)?;
        let h = 1.0 / x;
        let [ve, ve1, ve2, ve3] = model::ve_jet(p, v_c)?;
        let n0 = ve - v_c;
        let lq = p.lambda * p.q_g;
        let mq = p.mu * p.q_g;
        Ok(Self {
            a21: -mq * (ve1 - 1.0) / x + mq * n0 / (x * x),
            a22: lq * (1.0 - theta * h * h),
            f11: mq / x * (2.0 * (ve1 - 1.0) / x - ve2 - 2.0 * n0 / (x * x)),
            f12: 2.0 * lq * h.powi(3) * theta,
            f22: 0.0,
            f111: mq / x * (3.0 * ve2 / x - ve3 - 6.0 * (ve1 - 1.0) / (x * x) + 6.0 * n0 / x.powi(3)),
            f112: -6.0 * lq * h.powi(4) * theta,
            f122: 0.0,
            f222: 0.0,
        })
    }

    /// Second component of `B(xi, eta)`; the first vanishes identically.
    fn b(&self, xi: [Complex64; 2], eta: [Complex64; 2]) -> Complex64 {
        xi[0] * eta[0] * self.f11 + (xi[0] * eta[1] + xi[1] * eta[0]) * self.f12 + xi[1] * eta[1] * self.f22
    }

    fn c(&self, xi: [Complex64; 2], eta: [Complex64; 2], zeta: [Complex64; 2]) -> Complex64 {
        xi[0] * eta[0] * zeta[0] * self.f111
            + (xi[0] * eta[0] * zeta[1] + xi[1] * eta[0] * zeta[0] + xi[0] * eta[1] * zeta[0]) * self.f112
            + (xi[0] * eta[1] * zeta[1] + xi[1] * eta[1] * zeta[0] + xi[1] * eta[0] * zeta[1]) * self.f122
            + xi[1] * eta[1] * zeta[1] * self.f222
    }
}

/// Hermitian product `<p, x> = conj(p) . x` on C^2.
fn dot(p: [Complex64; 2], x: [Complex64; 2]) -> Complex64 {
    p[0].conj() * x[0] + p[1].conj() * x[1]
}

/// Critical eigenvectors `q = (1, i omega0)`, `p = (1, i/omega0)/2`.
pub fn critical_eigenvectors(omega0: f64) -> ([Complex64; 2], [Complex64; 2]) {
    let i = Complex64::i();
    (
        [Complex64::new(1.0, 0.0), i * omega0],
        [Complex64::new(0.5, 0.0), i / (2.0 * omega0)],
    )
}

/// First Lyapunov coefficient through `g20`, `g11`, `g21`:
/// `ell1 = Re(i g20 g11 + omega0 g21) / (2 omega0^2)`.
pub fn lyapunov_l1_via_g(p: &ModelParams, v_c: f64) -> Result<HopfData> {
    require_interior(p, v_c)?;
    let x = p.shifted(v_c)?;
    let t = Taylor::at(p, v_c, x * x)?;
    // with b = 0 the linear part is [[0, 1], [a21, 0]]
    let w2 = -t.a21;
    if !(w2 > 0.0) || t.a22.abs() > 1e-12 * (p.lambda * p.q_g) {
        return Err(Error::Precondition("linearization is not a center".into()));
    }
    let w = w2.sqrt();
    if w < MIN_OMEGA0 {
        return Err(Error::NearBt { omega0: w });
    }
    let (q, pv) = critical_eigenvectors(w);
    let qbar = [q[0].conj(), q[1].conj()];
    let zero = Complex64::new(0.0, 0.0);
    let g20 = dot(pv, [zero, t.b(q, q)]);
    let g11 = dot(pv, [zero, t.b(q, qbar)]);
    let g21 = dot(pv, [zero, t.c(q, q, qbar)]);
    let ell1 = (Complex64::i() * g20 * g11 + g21 * w).re / (2.0 * w2);
    Ok(HopfData {
        omega0: w,
        ell1,
        g20,
        g11,
        g21,
    })
}

/// The Takens-Bogdanov nondegeneracy quantities `(v_e''(v_c), d^2 v_e/(dq_g dv))`
/// at a fold point.
pub fn bt_nondegeneracy(p: &ModelParams, v_c: f64) -> Result<(f64, f64)> {
    let jet = model::ve_jet(p, v_c)?;
    if (jet[0] - v_c).abs() > 1e-8 || (jet[1] - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!(
            "({}, {}, {v_c}) is not a fold point",
            p.q_g, p.v_g
        )));
    }
    Ok((jet[2], model::d2ve_dqg_dv(p, v_c)?))
}

/// `a3 = -mu q_g v_e'''(v_c) / (6 (v_c+v_g))`, `b2 = 2 lambda q_g / (v_c+v_g)`.
pub fn dbt_coefficients(cusp: &CuspPoint) -> Result<DbtData> {
    let p = cusp.params()?;
    let jet = model::ve_jet(&p, cusp.v_c)?;
    let res = (jet[0] - cusp.v_c).abs().max((jet[1] - 1.0).abs()).max(jet[2].abs());
    if res > 1e-8 {
        return Err(Error::Precondition(format!("cusp residual {res:e} too large")));
    }
    let x = cusp.v_c + cusp.v_g;
    let a3 = -p.mu * p.q_g * jet[3] / (6.0 * x);
    let b2 = 2.0 * p.lambda * p.q_g / x;
    Ok(DbtData {
        a3,
        b2,
        saddle_case: a3 > 0.0,
    })
}

/// A point of the curve `ell1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhPoint {
    pub q_g: f64,
    pub v_g: f64,
    pub v_c: f64,
    pub ell1: f64,
}

/// Bracket function along the vertical line `q_g = const`, using the fold
/// roots at the ends and the interior root in between.
fn bracket_at_vg(q_g: f64, v_g: f64) -> Result<(f64, f64)> {
    let p = ModelParams::standard(1.0, q_g, v_g)?;
    let e = equilibria::interior_equilibrium(&p)?
        .ok_or_else(|| Error::Domain(format!("({q_g}, {v_g}) is outside the cuspidal region")))?;
    Ok((ell1_bracket(&p, e.v_c)?, e.v_c))
}

/// Solve `ell1(q_g, v_g) = 0` for `v_g` between the two fold branches.
pub fn gh_point(trace: &FoldCurveTrace, q_g: f64) -> Result<GhPoint> {
    let (vg_lo, vc_lo, _) = trace.at(q_g, FoldBranch::LowerGammaMinus)?;
    let (vg_hi, vc_hi, _) = trace.at(q_g, FoldBranch::UpperGammaPlus)?;
    let g_lo = ell1_bracket(&ModelParams::standard(1.0, q_g, vg_lo)?, vc_lo)?;
    let g_hi = ell1_bracket(&ModelParams::standard(1.0, q_g, vg_hi)?, vc_hi)?;
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::Bracket(format!(
            "no sign change of ell1 between the fold branches at q_g = {q_g}"
        )));
    }
    let (mut a, mut b) = (vg_lo, vg_hi);
    let mut ga = g_lo;
    let mut best = (0.5 * (a + b), f64::NAN);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (gm, vc) = bracket_at_vg(q_g, m)?;
        best = (m, vc);
        if gm == 0.0 {
            break;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let (v_g, v_c) = best;
    let p = ModelParams::standard((v_c + v_g).powi(2), q_g, v_g)?;
    Ok(GhPoint {
        q_g,
        v_g,
        v_c,
        ell1: lyapunov_l1(&p, v_c)?,
    })
}

/// Sample the curve `ell1 = 0` at `n_points` values of `q_g` in the range.
pub fn gh_curve(q_g_range: (f64, f64), n_points: usize) -> Result<BifurcationCurve> {
    let (q_lo, q_hi) = q_g_range;
    if !(q_lo > 0.0 && q_lo <= q_hi) || n_points == 0 {
        return Err(Error::Domain(format!("invalid q_g range [{q_lo}, {q_hi}]")));
    }
    let trace = FoldCurveTrace::new(q_lo)?;
    if q_hi >= trace.cusp.q_g {
        return Err(Error::Domain(format!(
            "q_g range must stay below the cusp value {}",
            trace.cusp.q_g
        )));
    }
    gh_curve_on(&trace, q_g_range, n_points)
}

/// As [`gh_curve`], reusing a traced fold curve.
pub fn gh_curve_on(trace: &FoldCurveTrace, q_g_range: (f64, f64), n_points: usize) -> Result<BifurcationCurve> {
    let (q_lo, q_hi) = q_g_range;
    let mut curve = BifurcationCurve::new(CurveKind::GhCurve);
    for i in 0..n_points {
        let q = if n_points == 1 {
            q_lo
        } else {
            q_lo + (q_hi - q_lo) * i as f64 / (n_points - 1) as f64
        };
        match gh_point(trace, q) {
            Ok(pt) => curve.points.push(
                CurvePoint::new(pt.q_g, pt.v_g)
                    .with("v_c", pt.v_c)
                    .with("ell1_residual", pt.ell1),
            ),
            Err(e) => curve.failures.push(format!("q_g = {q}: {e}")),
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::cusp_point;

    fn family_b() -> (ModelParams, f64) {
        let p = ModelParams::standard(0.16, 0.133886021, 0.204071932).unwrap();
        let vc = equilibria::interior_equilibrium(&p).unwrap().unwrap().v_c;
        (p, vc)
    }

    #[test]
    fn eigenvectors_are_normalized() {
        let w = 0.37;
        let (q, p) = critical_eigenvectors(w);
        assert!((dot(p, q) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // A q = i w q and A^T p = -i w p for A = [[0,1],[-w^2,0]]
        let i = Complex64::i();
        let aq = [q[1], q[0] * (-w * w)];
        assert!((aq[0] - i * w * q[0]).norm() < 1e-15 && (aq[1] - i * w * q[1]).norm() < 1e-15);
        let atp = [p[1] * (-w * w), p[0]];
        assert!((atp[0] + i * w * p[0]).norm() < 1e-15 && (atp[1] + i * w * p[1]).norm() < 1e-15);
    }

    #[test]
    fn two_routes_agree_at_family_b() {
        let (p, vc) = family_b();
        let closed = lyapunov_l1(&p, vc).unwrap();
        let via_g = lyapunov_l1_via_g(&p, vc).unwrap();
        assert!(closed < 0.0);
        assert!(((closed - via_g.ell1) / closed).abs() < 1e-10);
        // g11 = -(2 w^2 - mu q v_e'') i / (2 w (v_c+v_g))
        let x = vc + p.v_g;
        let ve2 = model::ve_derivs(&p, vc, 2).unwrap();
        let w = via_g.omega0;
        let g11 = Complex64::new(0.0, -(2.0 * w * w - p.mu * p.q_g * ve2) / (2.0 * w * x));
        assert!((via_g.g11 - g11).norm() < 1e-12 * g11.norm());
        assert!(via_g.g11.re.abs() < 1e-15);
        assert!((w - omega0(&p, vc).unwrap()).abs() < 1e-14 * w);
    }

    #[test]
    fn omega_requires_interior_root() {
        let p = ModelParams::standard(0.16, 0.133886021, 0.204071932).unwrap();
        let saddle = equilibria::find_equilibria(&p, equilibria::default_interval(&p)).unwrap()[0];
        assert!(matches!(omega0(&p, saddle.v_c), Err(Error::Precondition(_))));
        assert!(lyapunov_l1(&p, saddle.v_c).is_err());
    }

    #[test]
    fn refuses_near_bt() {
        // a point on the fold curve: omega0 = 0
        let trace = FoldCurveTrace::new(0.2).unwrap();
        let (vg, vc, _) = trace.at(0.25, FoldBranch::LowerGammaMinus).unwrap();
        let p = ModelParams::standard(1.0, 0.25, vg).unwrap();
        // nudge toward the interior so v_e' > 1 by a hair
        let r = lyapunov_l1(&p, vc);
        assert!(matches!(r, Err(Error::NearBt { .. }) | Err(Error::Precondition(_))));
    }

    #[test]
    fn dbt_saddle_case_at_the_cusp() {
        let k = cusp_point().unwrap();
        let d = dbt_coefficients(&k).unwrap();
        assert!(d.a3 > 0.0 && d.b2 > 0.0 && d.saddle_case);
        let expected = -(1.0 / 700.0) * 0.316762381 * (-11.317691591) / (6.0 * 1.053402176);
        assert!(((d.a3 - expected) / expected).abs() < 1e-6);
        let (ve2, mixed) = bt_nondegeneracy(&k.params().unwrap(), k.v_c).unwrap();
        assert!(ve2.abs() < 1e-10);
        assert!(mixed != 0.0);
    }

    #[test]
    fn gh_points_have_zero_ell1() {
        let curve = gh_curve((0.08, 0.3), 5).unwrap();
        assert!(curve.failures.is_empty(), "{:?}", curve.failures);
        for pt in &curve.points {
            assert!(pt.aux["ell1_residual"].abs() < 1e-10, "{:?}", pt);
        }
    }
}
