//! Critical points of the traveling-wave ODE, the fold curve and the cusp.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::continuation::palc::{self, Problem, StepPolicy, Tracer};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams, VE_OFFSET};
use crate::roots;

/// Residual tolerance for refined roots of `v_e(v) - v`.
pub const ROOT_TOL: f64 = 1e-12;
/// Largest `|v_e(v_c) - v_c|` accepted as an equilibrium by [`classify`].
pub const EQUILIBRIUM_TOL: f64 = 1e-8;
/// Threshold below which `b` or `v_e' - 1` count as zero.
pub const NONHYPERBOLIC_TOL: f64 = 1e-12;
/// Residual tolerance for fold and cusp points.
pub const FOLD_TOL: f64 = 1e-12;

/// How `theta0` is chosen when a point is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ThetaPolicy {
    /// A fixed `theta0`.
    Fixed(f64),
    /// `theta0 = (v_c + v_g)^2`, which zeroes the trace `b`.
    BtConvention,
}

impl ThetaPolicy {
    pub fn theta0(&self, v_c: f64, v_g: f64) -> f64 {
        match *self {
            ThetaPolicy::Fixed(t) => t,
            ThetaPolicy::BtConvention => (v_c + v_g).powi(2),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ThetaPolicy::Fixed(t) => format!("fixed({t:.17e})"),
            ThetaPolicy::BtConvention => "bt_convention".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    NonHyperbolic,
}

/// A classified critical point `(v_c, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub v_c: f64,
    pub eigenvalues: [Complex64; 2],
    pub kind: EquilibriumKind,
    /// Trace of the linearization.
    pub b: f64,
    /// Lower-left entry of the linearization (`l^2 - b l - c = 0`).
    pub c: f64,
    /// `v_e'(v_c)`.
    pub ve1: f64,
    /// `v_e(v_c) - v_c`.
    pub residual: f64,
}

/// Default search interval for `v`: from just above `max(-v_g, -3.72e-6)` to 1.1.
pub fn default_interval(p: &ModelParams) -> (f64, f64) {
    let lo = (-p.v_g).max(-VE_OFFSET);
    (lo + 1e-12 * (1.0 + lo.abs()), 1.1)
}

fn check_interval(p: &ModelParams, range: (f64, f64)) -> Result<()> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty search interval [{lo}, {hi}]")));
    }
    if lo + p.v_g <= 0.0 {
        return Err(Error::Domain(format!(
            "search interval starts at v = {lo} with v + v_g = {} <= 0",
            lo + p.v_g
        )));
    }
    Ok(())
}

/// Inflection point of `v_e` on `[lo, hi]`: convex (v_e'' >= 0) to its left,
/// concave to its right. Returns the endpoint if no sign change exists.
fn inflection(p: &ModelParams, lo: f64, hi: f64) -> Result<f64> {
    let concave = |v: f64| -> Result<bool> { Ok(model::ve_jet(p, v)?[2] < 0.0) };
    if concave(lo)? {
        return Ok(lo);
    }
    if !concave(hi)? {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if concave(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Zero of `v_e' - 1` on an interval where `v_e'` is monotone, if any.
fn fold_in(p: &ModelParams, a: f64, b: f64) -> Result<Option<f64>> {
    let g = |v: f64| -> Result<(f64, f64)> {
        let j = model::ve_jet(p, v)?;
        Ok((j[1] - 1.0, j[2]))
    };
    let (ga, _) = g(a)?;
    let (gb, _) = g(b)?;
    if ga == 0.0 {
        return Ok(Some(a));
    }
    if gb == 0.0 {
        return Ok(Some(b));
    }
    if ga.signum() == gb.signum() {
        return Ok(None);
    }
    roots::safeguarded_newton(g, a, b, 1e-15).map(Some)
}

/// All roots of `v_e(v) = v` in `range`, sorted ascending and classified.
///
/// `v_e` is sigmoidal in `v`, so `v_e'` is unimodal: splitting the interval
/// at the inflection point and at the zeros of `v_e' - 1` leaves pieces on
/// which `v_e(v) - v` is monotone, each holding at most one root.
pub fn find_equilibria(p: &ModelParams, range: (f64, f64)) -> Result<Vec<Equilibrium>> {
    check_interval(p, range)?;
    let (lo, hi) = range;
    let infl = inflection(p, lo, hi)?;
    let mut cuts = vec![lo];
    if infl > lo {
        if let Some(a) = fold_in(p, lo, infl)? {
            cuts.push(a);
        }
    }
    if infl < hi {
        if let Some(b) = fold_in(p, infl, hi)? {
            cuts.push(b);
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let f = |v: f64| -> Result<(f64, f64)> {
        let j = model::ve_jet(p, v)?;
        Ok((j[0] - v, j[1] - 1.0))
    };
    let mut found: Vec<f64> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, _) = f(a)?;
        let (fb, _) = f(b)?;
        if fa == 0.0 || fb == 0.0 || fa.signum() != fb.signum() {
            let root = roots::safeguarded_newton(f, a, b, 0.0).map_err(|e| match e {
                Error::NoConvergence { iterations, residual, .. } => Error::NoConvergence {
                    what: "bracketed equilibrium refinement",
                    iterations,
                    residual,
                },
                other => other,
            })?;
            if found.last().is_none_or(|&last| (root - last).abs() > 1e-14) {
                found.push(root);
            }
        }
    }
    found.into_iter().map(|v| classify(p, v)).collect()
}

/// The root with `v_e'(v_c) > 1`, when the parameters lie inside the cuspidal region.
pub fn interior_equilibrium(p: &ModelParams) -> Result<Option<Equilibrium>> {
    Ok(find_equilibria(p, default_interval(p))?
        .into_iter()
        .find(|e| e.ve1 > 1.0))
}

/// Linearization and stability type at an equilibrium.
pub fn classify(p: &ModelParams, v_c: f64) -> Result<Equilibrium> {
    let x = p.shifted(v_c)?;
    let [ve, ve1, ..] = model::ve_jet(p, v_c)?;
    let residual = ve - v_c;
    if !(residual.abs() < EQUILIBRIUM_TOL) {
        return Err(Error::Precondition(format!(
            "v_c = {v_c} is not an equilibrium (|v_e(v_c) - v_c| = {:e})",
            residual.abs()
        )));
    }
    let b = p.lambda * p.q_g * (1.0 - p.theta0 / (x * x));
    let c = -p.mu * p.q_g * (ve1 - 1.0) / x;
    let disc = Complex64::new(b * b + 4.0 * c, 0.0).sqrt();
    let eigenvalues = [(b + disc) / 2.0, (b - disc) / 2.0];
    let kind = if (ve1 - 1.0).abs() <= NONHYPERBOLIC_TOL {
        EquilibriumKind::NonHyperbolic
    } else if ve1 < 1.0 {
        EquilibriumKind::Saddle
    } else if b.abs() <= NONHYPERBOLIC_TOL {
        EquilibriumKind::NonHyperbolic
    } else {
        let focus = b * b + 4.0 * c < 0.0;
        match (b < 0.0, focus) {
            (true, true) => EquilibriumKind::StableFocus,
            (true, false) => EquilibriumKind::StableNode,
            (false, true) => EquilibriumKind::UnstableFocus,
            (false, false) => EquilibriumKind::UnstableNode,
        }
    };
    Ok(Equilibrium {
        v_c,
        eigenvalues,
        kind,
        b,
        c,
        ve1,
        residual,
    })
}

/// Implicit slope `d v_c / d v_g = -v_e' / (v_e' - 1)` of the root under a change of `v_g`.
pub fn dvc_dvg(p: &ModelParams, v_c: f64) -> Result<f64> {
    let ve1 = model::ve_derivs(p, v_c, 1)?;
    if (ve1 - 1.0).abs() < NONHYPERBOLIC_TOL {
        return Err(Error::Precondition(format!("v_e'(v_c) = {ve1} is at a fold point")));
    }
    Ok(-ve1 / (ve1 - 1.0))
}

/// Branch of the fold curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldBranch {
    UpperGammaPlus,
    LowerGammaMinus,
}

impl FoldBranch {
    pub fn label(self) -> &'static str {
        match self {
            FoldBranch::UpperGammaPlus => "gamma_plus",
            FoldBranch::LowerGammaMinus => "gamma_minus",
        }
    }
}

/// A saddle-node of equilibria (`v_e(v_c) = v_c`, `v_e'(v_c) = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldPoint {
    pub q_g: f64,
    pub v_g: f64,
    pub v_c: f64,
    pub branch: FoldBranch,
    /// `theta0` under the policy used to build the curve.
    pub theta0: f64,
    /// True when `theta0 = (v_c + v_g)^2`, i.e. the point is Takens-Bogdanov.
    pub is_bt: bool,
    /// Max norm of the two fold residuals.
    pub residual: f64,
}

/// The cusp point of the fold curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspPoint {
    pub q_g: f64,
    pub v_g: f64,
    pub v_c: f64,
    /// `(v_c + v_g)^2`.
    pub theta_bt: f64,
    /// `v_e'''(v_c)`.
    pub ve3: f64,
    /// Max norm of the three defining residuals.
    pub residual: f64,
}

impl CuspPoint {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::standard(self.theta_bt, self.q_g, self.v_g)
    }
}

/// `[v_e, v_e', v_e'', v_e''', v_e'''']` needed for Jacobians in `q_g`.
pub(crate) fn jet_and_dq(p: &ModelParams, v: f64) -> Result<([f64; 4], [f64; 3])> {
    let x = p.shifted(v)?;
    let j = model::ve_jet(p, v)?;
    // v_e^(k) is homogeneous of degree -k in (q_g, x), so
    // d/dq v_e^(k) = -(x v_e^(k+1) + k v_e^(k)) / q_g
    let dq = [
        -(x * j[1]) / p.q_g,
        -(x * j[2] + j[1]) / p.q_g,
        -(x * j[3] + 2.0 * j[2]) / p.q_g,
    ];
    Ok((j, dq))
}

/// Starting guess for the cusp Newton iteration.
pub const CUSP_GUESS: [f64; 3] = [0.3, 0.75, 0.3];

/// Solve `{v_e = v_c, v_e' = 1, v_e'' = 0}` for `(q_g, v_g, v_c)`.
pub fn cusp_point() -> Result<CuspPoint> {
    cusp_point_from(CUSP_GUESS)
}

pub fn cusp_point_from(guess: [f64; 3]) -> Result<CuspPoint> {
    let mut u = Vector3::from(guess);
    let eval = |u: &Vector3<f64>| -> Result<(Vector3<f64>, Matrix3<f64>)> {
        let p = ModelParams::standard(1.0, u[0], u[1])?;
        let (j, dq) = jet_and_dq(&p, u[2])?;
        let f = Vector3::new(j[0] - u[2], j[1] - 1.0, j[2]);
        let jac = Matrix3::new(
            dq[0], j[1], j[1] - 1.0, //
            dq[1], j[2], j[2], //
            dq[2], j[3], j[3],
        );
        Ok((f, jac))
    };
    let mut res = f64::INFINITY;
    for _ in 0..roots::MAX_ITER {
        let (f, jac) = eval(&u)?;
        res = f.amax();
        if res < FOLD_TOL {
            let p = ModelParams::standard(1.0, u[0], u[1])?;
            let ve3 = model::ve_derivs(&p, u[2], 3)?;
            if !(ve3 < 0.0) {
                return Err(Error::Precondition(format!("cusp candidate has v_e''' = {ve3} >= 0")));
            }
            return Ok(CuspPoint {
                q_g: u[0],
                v_g: u[1],
                v_c: u[2],
                theta_bt: (u[1] + u[2]).powi(2),
                ve3,
                residual: res,
            });
        }
        let du = jac
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::Precondition("singular Jacobian in cusp Newton".into()))?;
        // keep v + v_g > 0 by halving steps that leave the domain
        let mut t = 1.0;
        while u[1] + u[2] + t * (du[1] + du[2]) <= 0.0 || u[0] + t * du[0] <= 0.0 {
            t *= 0.5;
            if t < 1e-6 {
                break;
            }
        }
        u += du * t;
    }
    Err(Error::NoConvergence {
        what: "cusp point Newton",
        iterations: roots::MAX_ITER,
        residual: res,
    })
}

/// `{v_e(v_c) - v_c, v_e'(v_c) - 1}` on `(q_g, v_g, v_c)`.
pub struct FoldSystem;

impl FoldSystem {
    fn eval(u: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let p = ModelParams::standard(1.0, u[0], u[1])?;
        let (j, dq) = jet_and_dq(&p, u[2])?;
        let f = DVector::from_vec(vec![j[0] - u[2], j[1] - 1.0]);
        let jac = DMatrix::from_row_slice(2, 3, &[dq[0], j[1], j[1] - 1.0, dq[1], j[2], j[2]]);
        Ok((f, jac))
    }
}

impl Problem for FoldSystem {
    fn dim(&self) -> usize {
        3
    }
    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(Self::eval(u)?.0)
    }
    fn residual_and_jacobian(&self, u: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        Self::eval(u)
    }
}

/// Newton on the fold conditions in `(v_g, v_c)` at fixed `q_g`.
pub fn solve_fold_at(q_g: f64, guess_vg: f64, guess_vc: f64) -> Result<(f64, f64, f64)> {
    let mut w = Vector2::new(guess_vg, guess_vc);
    let mut res = f64::INFINITY;
    for _ in 0..roots::MAX_ITER {
        let p = ModelParams::standard(1.0, q_g, w[0])?;
        let j = model::ve_jet(&p, w[1])?;
        let f = Vector2::new(j[0] - w[1], j[1] - 1.0);
        res = f.amax();
        if res < FOLD_TOL {
            return Ok((w[0], w[1], res));
        }
        let jac = Matrix2::new(j[1], j[1] - 1.0, j[2], j[2]);
        let dw = jac
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::Precondition(format!("singular fold Jacobian at q_g = {q_g}")))?;
        let mut t = 1.0;
        while w[0] + w[1] + t * (dw[0] + dw[1]) <= 0.0 {
            t *= 0.5;
            if t < 1e-8 {
                break;
            }
        }
        w += dw * t;
        if !w.iter().all(|x| x.is_finite()) {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "fold Newton at fixed q_g",
        iterations: roots::MAX_ITER,
        residual: res,
    })
}

/// The fold curve traced by arclength continuation from the cusp in both
/// directions. Each branch is stored from the cusp outward.
#[derive(Debug, Clone)]
pub struct FoldCurveTrace {
    pub cusp: CuspPoint,
    pub upper: Vec<[f64; 3]>,
    pub lower: Vec<[f64; 3]>,
}

impl FoldCurveTrace {
    /// Trace both branches down to `q_min`.
    pub fn new(q_min: f64) -> Result<Self> {
        let cusp = cusp_point()?;
        let u0 = DVector::from_vec(vec![cusp.q_g, cusp.v_g, cusp.v_c]);
        let (_, jac) = FoldSystem.residual_and_jacobian(&u0)?;
        // at the cusp the curve is tangent to q_g = const; orient along +v_g
        let t0 = palc::tangent(&jac, &DVector::from_vec(vec![0.0, 1.0, 0.0]))?;
        let policy = StepPolicy {
            initial: 1e-3,
            max: 2e-2,
            tol: FOLD_TOL,
            ..StepPolicy::default()
        };
        let mut branches = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let mut tracer = Tracer::new(&FoldSystem, u0.clone(), &t0 * sign, policy);
            let mut pts = vec![[cusp.q_g, cusp.v_g, cusp.v_c]];
            for _ in 0..5000 {
                let step = match tracer.step() {
                    Ok(s) => s,
                    Err(_) => break,
                };
                let u = step.u;
                pts.push([u[0], u[1], u[2]]);
                if u[0] < q_min || u[0] <= 1e-6 {
                    break;
                }
            }
            branches.push(pts);
        }
        let (a, b) = (branches.remove(0), branches.remove(0));
        // the +v_g direction leaves the cusp along the upper branch
        Ok(Self {
            cusp,
            upper: a,
            lower: b,
        })
    }

    fn branch(&self, which: FoldBranch) -> &[[f64; 3]] {
        match which {
            FoldBranch::UpperGammaPlus => &self.upper,
            FoldBranch::LowerGammaMinus => &self.lower,
        }
    }

    /// The fold point of `which` at `q_g`, polished by Newton.
    pub fn at(&self, q_g: f64, which: FoldBranch) -> Result<(f64, f64, f64)> {
        if (q_g - self.cusp.q_g).abs() <= 1e-15 {
            return Ok((self.cusp.v_g, self.cusp.v_c, self.cusp.residual));
        }
        if q_g > self.cusp.q_g {
            return Err(Error::Domain(format!(
                "q_g = {q_g} exceeds the cusp value {}",
                self.cusp.q_g
            )));
        }
        let pts = self.branch(which);
        let seg = pts
            .windows(2)
            .find(|w| (w[0][0] - q_g) * (w[1][0] - q_g) <= 0.0)
            .ok_or_else(|| Error::Domain(format!("q_g = {q_g} outside the traced fold curve")))?;
        let (a, b) = (seg[0], seg[1]);
        let s = if a[0] == b[0] { 0.5 } else { (q_g - a[0]) / (b[0] - a[0]) };
        let vg = a[1] + s * (b[1] - a[1]);
        let vc = a[2] + s * (b[2] - a[2]);
        solve_fold_at(q_g, vg, vc)
    }
}

/// Sampled fold curve with per-point failures.
#[derive(Debug, Clone, Default)]
pub struct FoldCurve {
    pub points: Vec<FoldPoint>,
    /// `(q_g, branch, reason)` for points that could not be computed.
    pub failures: Vec<(f64, FoldBranch, String)>,
}

/// Both branches of the fold curve at `n_points` equispaced values of `q_g`.
pub fn fold_curve(theta: ThetaPolicy, q_g_range: (f64, f64), n_points: usize) -> Result<FoldCurve> {
    let (q_lo, q_hi) = q_g_range;
    if !(q_lo > 0.0 && q_lo <= q_hi) || n_points == 0 {
        return Err(Error::Domain(format!("invalid q_g range [{q_lo}, {q_hi}] with {n_points} points")));
    }
    let trace = FoldCurveTrace::new(q_lo)?;
    let mut out = FoldCurve::default();
    for i in 0..n_points {
        let q = if n_points == 1 {
            q_lo
        } else {
            q_lo + (q_hi - q_lo) * i as f64 / (n_points - 1) as f64
        };
        for branch in [FoldBranch::LowerGammaMinus, FoldBranch::UpperGammaPlus] {
            match trace.at(q, branch) {
                Ok((v_g, v_c, residual)) => {
                    let theta0 = theta.theta0(v_c, v_g);
                    out.points.push(FoldPoint {
                        q_g: q,
                        v_g,
                        v_c,
                        branch,
                        theta0,
                        is_bt: ((v_c + v_g).powi(2) - theta0).abs() <= 1e-12 * theta0.max(1.0),
                        residual,
                    });
                }
                Err(e) => out.failures.push((q, branch, e.to_string())),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std(theta0: f64, q: f64, vg: f64) -> ModelParams {
        ModelParams::standard(theta0, q, vg).unwrap()
    }

    #[test]
    fn cusp_regression() {
        let k = cusp_point().unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(k.q_g, 0.316762381) < 1e-6);
        assert!(rel(k.v_g, 0.752937578) < 1e-6);
        assert!(rel(k.v_c, 0.300464598) < 1e-6);
        assert!(rel(k.theta_bt, 1.109656146) < 1e-6);
        assert!((k.ve3 + 11.317691591).abs() < 1e-6);
        assert!(((k.v_c + k.v_g).powi(2) - k.theta_bt).abs() < 1e-15);
    }

    #[test]
    fn single_root_at_cusp_parameters() {
        // v_c is a triple root at K, so a parameter error e moves it by about
        // (6 e / 11.3)^(1/3): the nine-digit tabulated values only pin it to 1e-3
        let p = std(1.109656146, 0.316762381, 0.752937578);
        let eqs = find_equilibria(&p, default_interval(&p)).unwrap();
        assert_eq!(eqs.len(), 1);
        assert!((eqs[0].v_c - 0.300464598).abs() < 1e-3);

        let k = cusp_point().unwrap();
        let eqs = find_equilibria(&k.params().unwrap(), default_interval(&p)).unwrap();
        assert_eq!(eqs.len(), 1);
        assert!((eqs[0].v_c - k.v_c).abs() < 1e-4);
    }

    #[test]
    fn three_roots_inside_the_cusp() {
        // family-B Hopf parameters lie inside the cuspidal region
        let p = std(0.16, 0.133886021, 0.204071932);
        let eqs = find_equilibria(&p, default_interval(&p)).unwrap();
        assert_eq!(eqs.len(), 3);
        assert_eq!(eqs[0].kind, EquilibriumKind::Saddle);
        assert_eq!(eqs[2].kind, EquilibriumKind::Saddle);
        assert!(eqs[1].ve1 > 1.0);
        assert!(eqs[0].v_c < eqs[1].v_c && eqs[1].v_c < eqs[2].v_c);
        for e in &eqs {
            assert!(e.residual.abs() < ROOT_TOL);
        }
    }

    #[test]
    fn imaginary_pair_on_the_hopf_condition() {
        let p0 = std(0.16, 0.133886021, 0.204071932);
        let vc = interior_equilibrium(&p0).unwrap().unwrap().v_c;
        let p = p0.with_theta0((vc + p0.v_g).powi(2));
        let e = classify(&p, vc).unwrap();
        assert_eq!(e.kind, EquilibriumKind::NonHyperbolic);
        let w2 = p.mu * p.q_g * (e.ve1 - 1.0) / (vc + p.v_g);
        assert!(e.eigenvalues[0].re.abs() < 1e-15);
        assert!((e.eigenvalues[0].im.abs() - w2.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn saddle_eigenvalues_have_opposite_signs() {
        let p = std(0.16, 0.133886021, 0.204071932);
        let eqs = find_equilibria(&p, default_interval(&p)).unwrap();
        let s = eqs[0];
        assert!(s.c > 0.0);
        assert!(s.eigenvalues[0].re * s.eigenvalues[1].re < 0.0);
        assert!(s.eigenvalues[0].im == 0.0);
    }

    #[test]
    fn classify_rejects_non_roots() {
        let p = std(0.16, 0.133886021, 0.204071932);
        assert!(matches!(classify(&p, 0.4), Err(Error::Precondition(_))));
    }

    #[test]
    fn invalid_interval() {
        let p = std(0.16, 0.1, -2.0);
        assert!(find_equilibria(&p, (0.0, 1.1)).is_err());
        let p = std(0.16, 0.1, 0.2);
        assert!(find_equilibria(&p, (-0.3, 1.1)).is_err());
    }

    #[test]
    fn implicit_slope() {
        let p = std(0.16, 0.133886021, 0.204071932);
        let e = interior_equilibrium(&p).unwrap().unwrap();
        let s = dvc_dvg(&p, e.v_c).unwrap();
        assert!(s < 0.0);
        assert!((s + e.ve1 / (e.ve1 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn q_derivatives_by_homogeneity() {
        let p = std(0.16, 0.14, 0.21);
        let v = 0.2;
        let (_, dq) = jet_and_dq(&p, v).unwrap();
        assert!((dq[0] - model::dve_dqg(&p, v).unwrap()).abs() < 1e-13);
        assert!((dq[1] - model::d2ve_dqg_dv(&p, v).unwrap()).abs() < 1e-12);
        let h = 1e-6;
        let fd = (model::ve_derivs(&p.with_qv(p.q_g + h, p.v_g), v, 2).unwrap()
            - model::ve_derivs(&p.with_qv(p.q_g - h, p.v_g), v, 2).unwrap())
            / (2.0 * h);
        assert!((fd - dq[2]).abs() < 1e-5 * (1.0 + fd.abs()));
    }

    #[test]
    fn fold_branches_meet_at_the_cusp() {
        let k = cusp_point().unwrap();
        let curve = fold_curve(ThetaPolicy::BtConvention, (0.1, k.q_g), 5).unwrap();
        assert!(curve.failures.is_empty(), "{:?}", curve.failures);
        for pt in &curve.points {
            assert!(pt.residual < 1e-10);
            assert!(pt.is_bt);
        }
        let last: Vec<_> = curve.points.iter().filter(|p| p.q_g == k.q_g).collect();
        assert_eq!(last.len(), 2);
        for pt in last {
            assert!((pt.v_g - k.v_g).abs() < 1e-12);
        }
        // upper branch has the larger wave speed
        let at = |b| curve.points.iter().find(|p| p.q_g == 0.1 && p.branch == b).unwrap().v_g;
        assert!(at(FoldBranch::UpperGammaPlus) > at(FoldBranch::LowerGammaMinus) + 1e-3);
    }

    #[test]
    fn fold_beyond_cusp_is_flagged() {
        let k = cusp_point().unwrap();
        let curve = fold_curve(ThetaPolicy::Fixed(0.16), (0.2, k.q_g + 0.01), 3).unwrap();
        assert_eq!(curve.failures.len(), 2);
        assert!(curve.points.iter().all(|p| !p.is_bt || (p.v_c + p.v_g).powi(2) == 0.16));
    }
}
