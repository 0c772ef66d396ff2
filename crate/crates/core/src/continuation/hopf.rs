//! Continuation of the Hopf curve `b = 0` in `(q_g, v_g)` at fixed `theta0`.
//!
//! The unknowns are `(q_g, v_g, v_c)` and the equations are
//! `v_e(v_c) - v_c = 0` and `(v_c + v_g)^2 - theta0 = 0`. The curve is a Hopf
//! curve while `v_e'(v_c) > 1`; it ends at Takens-Bogdanov points on the fold
//! curve, and carries a generalized Hopf point where `ell1` changes sign.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::curve::{BifurcationCurve, CurveKind, CurvePoint, LabelKind};
use super::palc::{self, Problem, StepPolicy, Tracer};
use crate::equilibria::{self, FoldBranch, FOLD_TOL};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::normalforms;
use crate::roots;

/// `omega0` below which a Hopf point is treated as reaching a BT endpoint.
pub const BT_OMEGA0: f64 = 1e-4;

/// Tolerance on `|ell1|` at a refined generalized Hopf point.
pub const GH_ELL1_TOL: f64 = 1e-8;

/// The Hopf system at fixed `theta0`.
#[derive(Debug, Clone, Copy)]
pub struct HopfSystem {
    pub theta0: f64,
}

impl HopfSystem {
    fn params(u: &DVector<f64>, theta0: f64) -> Result<ModelParams> {
        ModelParams::standard(theta0, u[0], u[1])
    }
}

impl Problem for HopfSystem {
    fn dim(&self) -> usize {
        3
    }

    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let p = Self::params(u, self.theta0)?;
        let ve = model::ve_of_v(&p, u[2])?;
        let x = p.shifted(u[2])?;
        Ok(DVector::from_vec(vec![ve - u[2], x * x - self.theta0]))
    }

    fn residual_and_jacobian(&self, u: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let p = Self::params(u, self.theta0)?;
        let (j, dq) = equilibria::jet_and_dq(&p, u[2])?;
        let x = p.shifted(u[2])?;
        let f = DVector::from_vec(vec![j[0] - u[2], x * x - self.theta0]);
        let jac = DMatrix::from_row_slice(2, 3, &[dq[0], j[1], j[1] - 1.0, 0.0, 2.0 * x, 2.0 * x]);
        Ok((f, jac))
    }
}

/// A refined point of the Hopf curve with its normal-form data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub q_g: f64,
    pub v_g: f64,
    pub v_c: f64,
    pub theta0: f64,
    /// `v_e'(v_c)`.
    pub ve1: f64,
    pub omega0: f64,
    /// `(v_e'-1)/(v_c+v_g) + v_e''`; `ell1` has the opposite sign.
    pub bracket: f64,
    /// `None` when `omega0` is too small for a meaningful value.
    pub ell1: Option<f64>,
    /// Max norm of the defining residuals.
    pub residual: f64,
}

impl HopfPoint {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::standard(self.theta0, self.q_g, self.v_g)
    }

    fn at(theta0: f64, q_g: f64, v_g: f64, v_c: f64) -> Result<Self> {
        let p = ModelParams::standard(theta0, q_g, v_g)?;
        let j = model::ve_jet(&p, v_c)?;
        let x = p.shifted(v_c)?;
        let omega0 = if j[1] > 1.0 {
            (p.mu * q_g * (j[1] - 1.0) / x).sqrt()
        } else {
            0.0
        };
        let ell1 = if omega0 >= normalforms::MIN_OMEGA0 {
            normalforms::lyapunov_l1(&p, v_c).ok()
        } else {
            None
        };
        Ok(Self {
            q_g,
            v_g,
            v_c,
            theta0,
            ve1: j[1],
            omega0,
            bracket: (j[1] - 1.0) / x + j[2],
            ell1,
            residual: (j[0] - v_c).abs().max((x * x - theta0).abs()),
        })
    }

    fn to_curve_point(self) -> CurvePoint {
        let mut pt = CurvePoint::new(self.q_g, self.v_g)
            .with("v_c", self.v_c)
            .with("omega0", self.omega0)
            .with("ve1", self.ve1)
            .with("bracket", self.bracket);
        if let Some(l) = self.ell1 {
            pt = pt.with("ell1", l);
        }
        pt
    }
}

/// The point of the Hopf curve at `theta0` with flux `q_g`.
///
/// With `x = v_c + v_g = sqrt(theta0)` fixed, the equilibrium condition reads
/// `v_c = v_e(q_g / x)`, so the curve is explicit: `v_g = x - v_e(q_g / x)`.
pub fn hopf_point_at(theta0: f64, q_g: f64) -> Result<HopfPoint> {
    if !(theta0 > 0.0 && q_g > 0.0) {
        return Err(Error::Domain(format!("theta0 = {theta0} and q_g = {q_g} must be positive")));
    }
    let x = theta0.sqrt();
    let v_c = model::ve_of_r(q_g / x);
    let v_g = x - v_c;
    let h = HopfPoint::at(theta0, q_g, v_g, v_c)?;
    if !(h.ve1 > 1.0) {
        return Err(Error::Domain(format!(
            "q_g = {q_g} at theta0 = {theta0} is outside the Hopf curve (v_e' = {})",
            h.ve1
        )));
    }
    Ok(h)
}

/// Takens-Bogdanov endpoint of a Hopf curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtPoint {
    pub q_g: f64,
    pub v_g: f64,
    pub v_c: f64,
    pub theta0: f64,
    pub branch: FoldBranch,
    pub residual: f64,
}

/// Which fold branch a fold point belongs to: `gamma+` has `v_e'' > 0`,
/// `gamma-` has `v_e'' < 0`, and the two meet at the cusp where `v_e'' = 0`.
pub fn fold_branch_of(q_g: f64, v_g: f64, v_c: f64) -> Result<FoldBranch> {
    let p = ModelParams::standard(1.0, q_g, v_g)?;
    let ve2 = model::ve_derivs(&p, v_c, 2)?;
    Ok(if ve2 > 0.0 {
        FoldBranch::UpperGammaPlus
    } else {
        FoldBranch::LowerGammaMinus
    })
}

/// Result of a Hopf-curve continuation.
#[derive(Debug, Clone)]
pub struct HopfCurve {
    pub theta0: f64,
    pub curve: BifurcationCurve,
    /// Refined points, parallel to `curve.points`.
    pub points: Vec<HopfPoint>,
    pub bt_start: Option<BtPoint>,
    pub bt_end: Option<BtPoint>,
    pub gh: Vec<HopfPoint>,
}

/// Newton on `(q_g, v_g, v_c)` for the Hopf equations plus one extra condition
/// `g(u) = 0` given with its gradient.
fn refine3<G>(theta0: f64, guess: [f64; 3], extra: G) -> Result<([f64; 3], f64)>
where
    G: Fn(&ModelParams, f64) -> Result<(f64, [f64; 3])>,
{
    let mut u = Vector3::from(guess);
    let mut res = f64::INFINITY;
    for _ in 0..roots::MAX_ITER {
        let p = ModelParams::standard(theta0, u[0], u[1])?;
        let (j, dq) = equilibria::jet_and_dq(&p, u[2])?;
        let x = p.shifted(u[2])?;
        let (g, dg) = extra(&p, u[2])?;
        let f = Vector3::new(j[0] - u[2], x * x - theta0, g);
        res = f.amax();
        if res < FOLD_TOL {
            return Ok(([u[0], u[1], u[2]], res));
        }
        let jac = Matrix3::new(
            dq[0], j[1], j[1] - 1.0, //
            0.0, 2.0 * x, 2.0 * x, //
            dg[0], dg[1], dg[2],
        );
        let du = jac
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::Precondition("singular Jacobian in Hopf-curve refinement".into()))?;
        u += du;
        if !u.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "Hopf-curve point refinement",
        iterations: roots::MAX_ITER,
        residual: res,
    })
}

/// `v_e'(v_c) - 1` and its gradient in `(q_g, v_g, v_c)`.
fn fold_condition(p: &ModelParams, v: f64) -> Result<(f64, [f64; 3])> {
    let (j, dq) = equilibria::jet_and_dq(p, v)?;
    Ok((j[1] - 1.0, [dq[1], j[2], j[2]]))
}

/// The `ell1` bracket and its gradient in `(q_g, v_g, v_c)`.
fn gh_condition(p: &ModelParams, v: f64) -> Result<(f64, [f64; 3])> {
    let (j, dq) = equilibria::jet_and_dq(p, v)?;
    let x = p.shifted(v)?;
    let g = (j[1] - 1.0) / x + j[2];
    let dx = j[2] / x - (j[1] - 1.0) / (x * x) + j[3];
    Ok((g, [dq[1] / x + dq[2], dx, dx]))
}

fn refine_bt(theta0: f64, guess: [f64; 3]) -> Result<BtPoint> {
    let (u, residual) = refine3(theta0, guess, fold_condition)?;
    Ok(BtPoint {
        q_g: u[0],
        v_g: u[1],
        v_c: u[2],
        theta0,
        branch: fold_branch_of(u[0], u[1], u[2])?,
        residual,
    })
}

fn refine_gh(theta0: f64, guess: [f64; 3]) -> Result<HopfPoint> {
    let (u, _) = refine3(theta0, guess, gh_condition)?;
    let h = HopfPoint::at(theta0, u[0], u[1], u[2])?;
    match h.ell1 {
        Some(l) if l.abs() < GH_ELL1_TOL => Ok(h),
        other => Err(Error::NoConvergence {
            what: "generalized Hopf refinement",
            iterations: roots::MAX_ITER,
            residual: other.map_or(f64::NAN, f64::abs),
        }),
    }
}

fn lerp(a: &HopfPoint, b: &HopfPoint, s: f64) -> [f64; 3] {
    [
        a.q_g + s * (b.q_g - a.q_g),
        a.v_g + s * (b.v_g - a.v_g),
        a.v_c + s * (b.v_c - a.v_c),
    ]
}

/// One traced direction: points after the start, the BT endpoint, GH points.
struct Half {
    points: Vec<HopfPoint>,
    bt: Option<BtPoint>,
    gh: Vec<(usize, HopfPoint)>,
    error: Option<String>,
}

fn trace_half(system: &HopfSystem, start: &HopfPoint, direction: DVector<f64>, policy: StepPolicy, max_steps: usize) -> Half {
    let theta0 = system.theta0;
    let u0 = DVector::from_vec(vec![start.q_g, start.v_g, start.v_c]);
    let mut tracer = Tracer::new(system, u0, direction, policy);
    let mut half = Half {
        points: Vec::new(),
        bt: None,
        gh: Vec::new(),
        error: None,
    };
    let mut prev = *start;
    for _ in 0..max_steps {
        let step = match tracer.step() {
            Ok(s) => s,
            Err(e) => {
                half.error = Some(e.to_string());
                return half;
            }
        };
        let u = step.u;
        let cur = match HopfPoint::at(theta0, u[0], u[1], u[2]) {
            Ok(h) => h,
            Err(e) => {
                half.error = Some(e.to_string());
                return half;
            }
        };
        // BT endpoint: the Hopf condition v_e' > 1 is lost
        let leaving = cur.ve1 <= 1.0 || (cur.omega0 < BT_OMEGA0 && cur.omega0 < prev.omega0 && prev.ve1 > 1.0);
        if leaving {
            let s = if cur.ve1 <= 1.0 {
                (prev.ve1 - 1.0) / (prev.ve1 - cur.ve1)
            } else {
                1.0
            };
            match refine_bt(theta0, lerp(&prev, &cur, s)) {
                Ok(bt) => half.bt = Some(bt),
                Err(e) => half.error = Some(format!("BT endpoint refinement failed: {e}")),
            }
            return half;
        }
        if prev.ve1 > 1.0 && prev.bracket != 0.0 && prev.bracket.signum() != cur.bracket.signum() {
            let s = prev.bracket / (prev.bracket - cur.bracket);
            match refine_gh(theta0, lerp(&prev, &cur, s)) {
                Ok(gh) => half.gh.push((half.points.len(), gh)),
                Err(e) => half.error = Some(format!("GH refinement failed: {e}")),
            }
        }
        half.points.push(cur);
        prev = cur;
    }
    half.error = Some(format!("no BT endpoint within {max_steps} steps"));
    half
}

/// Trace the Hopf curve through `start` at `theta0 = (v_c + v_g)^2`.
///
/// When `start` is a BT point (`v_e'(v_c) = 1`) the curve is traced in the
/// single direction where `v_e'` increases; otherwise both directions are
/// traced and joined. GH points are inserted into the polyline and labeled.
pub fn continue_hopf(
    start: (f64, f64, f64),
    policy: StepPolicy,
    max_steps: usize,
) -> Result<HopfCurve> {
    let (q_g, v_g, v_c) = start;
    let theta0 = (v_c + v_g).powi(2);
    let system = HopfSystem { theta0 };
    let p = ModelParams::standard(theta0, q_g, v_g)?;
    let (j, _) = equilibria::jet_and_dq(&p, v_c)?;
    if (j[0] - v_c).abs() > 1e-10 {
        return Err(Error::Precondition(format!(
            "start ({q_g}, {v_g}, {v_c}) is not an equilibrium"
        )));
    }
    let at_bt = (j[1] - 1.0).abs() < 1e-9;
    if !at_bt && !(j[1] > 1.0) {
        return Err(Error::Precondition(format!(
            "start has v_e'(v_c) = {} < 1: not on a Hopf curve",
            j[1]
        )));
    }
    let u0 = DVector::from_vec(vec![q_g, v_g, v_c]);
    let (_, jac) = system.residual_and_jacobian(&u0)?;
    let (_, grad) = fold_condition(&p, v_c)?;
    let grad = DVector::from_row_slice(&grad);
    let t0 = palc::tangent(&jac, &grad)?;
    if t0.dot(&grad) <= 0.0 {
        return Err(Error::Precondition("v_e' is stationary along the Hopf curve at the start".into()));
    }

    let start_pt = HopfPoint::at(theta0, q_g, v_g, v_c)?;
    let forward = trace_half(&system, &start_pt, t0.clone(), policy, max_steps);
    let backward = if at_bt {
        None
    } else {
        Some(trace_half(&system, &start_pt, -t0, policy, max_steps))
    };

    let mut points = Vec::new();
    let mut gh_idx = Vec::new();
    let mut failures = Vec::new();
    let bt_start;
    if let Some(back) = backward {
        bt_start = back.bt;
        if let Some(e) = back.error {
            failures.push(format!("backward: {e}"));
        }
        // reversed backward half, with GH markers placed between neighbors
        let n = back.points.len();
        let mut rev: Vec<(usize, HopfPoint)> = back.gh.into_iter().map(|(i, h)| (n - i, h)).collect();
        rev.sort_by_key(|(i, _)| *i);
        let mut k = 0;
        for (idx, pt) in back.points.into_iter().rev().enumerate() {
            while k < rev.len() && rev[k].0 == idx {
                gh_idx.push(points.len());
                points.push(rev[k].1);
                k += 1;
            }
            points.push(pt);
        }
        while k < rev.len() {
            gh_idx.push(points.len());
            points.push(rev[k].1);
            k += 1;
        }
    } else {
        bt_start = Some(refine_bt(theta0, [q_g, v_g, v_c])?);
    }
    if bt_start.is_none() {
        points.insert(0, start_pt);
    }
    if !at_bt {
        points.push(start_pt);
    }
    let mut k = 0;
    for (idx, pt) in forward.points.into_iter().enumerate() {
        while k < forward.gh.len() && forward.gh[k].0 == idx {
            gh_idx.push(points.len());
            points.push(forward.gh[k].1);
            k += 1;
        }
        points.push(pt);
    }
    while k < forward.gh.len() {
        gh_idx.push(points.len());
        points.push(forward.gh[k].1);
        k += 1;
    }
    if let Some(e) = forward.error {
        failures.push(format!("forward: {e}"));
    }
    let bt_end = forward.bt;

    let mut curve = BifurcationCurve::new(CurveKind::HopfCurve);
    curve.meta.insert("theta0".into(), format!("{theta0:.16e}"));
    if let Some(bt) = bt_start {
        let i = curve.push(
            CurvePoint::new(bt.q_g, bt.v_g)
                .with("v_c", bt.v_c)
                .with("omega0", 0.0)
                .with("ve1", 1.0),
        );
        curve.label(i, LabelKind::BT);
    }
    for (n, pt) in points.iter().enumerate() {
        let i = curve.push(pt.to_curve_point());
        if gh_idx.contains(&n) {
            curve.label(i, LabelKind::GH);
        }
    }
    if let Some(bt) = bt_end {
        let i = curve.push(
            CurvePoint::new(bt.q_g, bt.v_g)
                .with("v_c", bt.v_c)
                .with("omega0", 0.0)
                .with("ve1", 1.0),
        );
        curve.label(i, LabelKind::BT);
    }
    curve.failures = failures;
    let gh = gh_idx.iter().map(|&i| points[i]).collect();
    Ok(HopfCurve {
        theta0,
        curve,
        points,
        bt_start,
        bt_end,
        gh,
    })
}

/// Default step policy for Hopf curves.
pub fn hopf_policy() -> StepPolicy {
    StepPolicy {
        initial: 1e-4,
        min: 1e-9,
        max: 4e-3,
        tol: 1e-13,
        ..StepPolicy::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::FoldCurveTrace;

    #[test]
    fn branch_sign_convention_matches_trace() {
        let trace = FoldCurveTrace::new(0.1).unwrap();
        for q in [0.12, 0.2, 0.3] {
            for b in [FoldBranch::LowerGammaMinus, FoldBranch::UpperGammaPlus] {
                let (vg, vc, _) = trace.at(q, b).unwrap();
                assert_eq!(fold_branch_of(q, vg, vc).unwrap(), b);
            }
        }
    }

    #[test]
    fn hopf_system_jacobian_matches_finite_differences() {
        let sys = HopfSystem { theta0: 0.16 };
        let u = DVector::from_vec(vec![0.14, 0.2, 0.19]);
        let (_, jac) = sys.residual_and_jacobian(&u).unwrap();
        for k in 0..3 {
            let h = 1e-6;
            let mut up = u.clone();
            let mut um = u.clone();
            up[k] += h;
            um[k] -= h;
            let fd = (sys.residual(&up).unwrap() - sys.residual(&um).unwrap()) / (2.0 * h);
            for r in 0..2 {
                assert!((fd[r] - jac[(r, k)]).abs() < 1e-7, "({r},{k}) {} vs {}", fd[r], jac[(r, k)]);
            }
        }
    }

    #[test]
    fn gh_gradient_matches_finite_differences() {
        let q = [0.14, 0.2, 0.19];
        let (_, g) = gh_condition(&ModelParams::standard(1.0, q[0], q[1]).unwrap(), q[2]).unwrap();
        let eval = |u: [f64; 3]| gh_condition(&ModelParams::standard(1.0, u[0], u[1]).unwrap(), u[2]).unwrap().0;
        for k in 0..3 {
            let h = 1e-6;
            let mut up = q;
            let mut um = q;
            up[k] += h;
            um[k] -= h;
            let fd = (eval(up) - eval(um)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-5 * g[k].abs().max(1.0), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn continuation_from_interior_hopf_point_reaches_both_folds() {
        // family-B Hopf point
        let p = ModelParams::standard(0.16, 0.133886021, 0.204071932).unwrap();
        let e = equilibria::interior_equilibrium(&p).unwrap().unwrap();
        let hc = continue_hopf((0.133886021, 0.204071932, e.v_c), hopf_policy(), 20000).unwrap();
        assert!(hc.curve.failures.is_empty(), "{:?}", hc.curve.failures);
        let a = hc.bt_start.unwrap();
        let b = hc.bt_end.unwrap();
        assert_ne!(a.branch, b.branch);
        assert_eq!(hc.gh.len(), 1);
        for pt in &hc.points {
            assert!(pt.residual < 1e-10);
            assert!(pt.ve1 > 1.0);
        }
    }
}
