//! Fundamental diagram, nondimensionalization and the planar traveling-wave ODE.
//!
//! With `z = rho_max (x + V_g t)` the traveling-wave ansatz reduces the
//! Kerner-Konhauser system to
//!
//! ```text
//! v' = y
//! y' = lambda q_g (1 - theta0 / (v + v_g)^2) y - mu q_g (v_e(v) - v) / (v + v_g)
//! ```
//!
//! where `v_e(v) = ve_of_r(q_g / (v + v_g))`. All derivatives of `v_e` are
//! closed-form through the logistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Density at which the logistic in the fundamental diagram is centered.
pub const RHO_CENTER: f64 = 0.25;
/// Width of the logistic.
pub const RHO_WIDTH: f64 = 0.06;
/// Constant offset subtracted from the logistic.
pub const VE_OFFSET: f64 = 3.72e-6;

/// Dimensional constants of the PDE model (km, h, vehicles).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Jam density, veh/km.
    pub rho_max: f64,
    /// Free-flow speed, km/h.
    pub v_max: f64,
    /// Relaxation time, hours.
    pub tau: f64,
    /// Viscosity analogue, km/h.
    pub eta_0: f64,
    /// Traffic variance, km^2/h^2.
    pub theta_0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            rho_max: 140.0,
            v_max: 120.0,
            tau: 30.0 / 3600.0,
            eta_0: 600.0,
            theta_0: 0.16 * 120.0 * 120.0,
        }
    }
}

impl PhysicalConstants {
    /// Build from a relaxation time given in seconds.
    pub fn with_tau_seconds(mut self, seconds: f64) -> Self {
        self.tau = seconds / 3600.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho_max", self.rho_max),
            ("v_max", self.v_max),
            ("tau", self.tau),
            ("eta_0", self.eta_0),
            ("theta_0", self.theta_0),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// `lambda = V_max / eta_0`.
    pub fn lambda(&self) -> f64 {
        self.v_max / self.eta_0
    }

    /// `mu = 1 / (rho_max eta_0 tau)`.
    pub fn mu(&self) -> f64 {
        1.0 / (self.rho_max * self.eta_0 * self.tau)
    }

    /// `theta0 = Theta_0 / V_max^2`.
    pub fn theta0(&self) -> f64 {
        self.theta_0 / (self.v_max * self.v_max)
    }

    /// Dimensionless parameters for the given flux and wave speed.
    pub fn params(&self, q_g: f64, v_g: f64) -> Result<ModelParams> {
        ModelParams::new(self.lambda(), self.mu(), self.theta0(), q_g, v_g)
    }
}

/// Dimensionless parameters of the traveling-wave ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub mu: f64,
    pub theta0: f64,
    pub q_g: f64,
    pub v_g: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64, theta0: f64, q_g: f64, v_g: f64) -> Result<Self> {
        let p = Self {
            lambda,
            mu,
            theta0,
            q_g,
            v_g,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `lambda = 0.2`, `mu = 1/700` from the default constants.
    pub fn standard(theta0: f64, q_g: f64, v_g: f64) -> Result<Self> {
        let c = PhysicalConstants::default();
        Self::new(c.lambda(), c.mu(), theta0, q_g, v_g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("theta0", self.theta0),
            ("q_g", self.q_g),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {value}")));
            }
        }
        if !self.v_g.is_finite() {
            return Err(Error::Domain(format!("v_g must be finite, got {}", self.v_g)));
        }
        Ok(())
    }

    /// Check that the dimensionless ratios match a set of physical constants.
    pub fn consistent_with(&self, c: &PhysicalConstants, rel_tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * b.abs().max(f64::MIN_POSITIVE);
        close(self.lambda, c.lambda()) && close(self.mu, c.mu()) && close(self.theta0, c.theta0())
    }

    pub fn with_qv(mut self, q_g: f64, v_g: f64) -> Self {
        self.q_g = q_g;
        self.v_g = v_g;
        self
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = theta0;
        self
    }

    /// `v + v_g`, checked positive.
    #[inline]
    pub fn shifted(&self, v: f64) -> Result<f64> {
        let x = v + self.v_g;
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(Error::Domain(format!("v + v_g = {x} must be positive (v = {v}, v_g = {})", self.v_g)))
        }
    }

    /// Dimensionless density `r = q_g / (v + v_g)`.
    pub fn density(&self, v: f64) -> Result<f64> {
        Ok(self.q_g / self.shifted(v)?)
    }
}

/// State of the planar ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub v: f64,
    pub y: f64,
}

impl PhasePoint {
    pub fn new(v: f64, y: f64) -> Self {
        Self { v, y }
    }
}

/// Logistic `s(u) = 1/(1+e^u)` together with `1 - s(u)`, both without overflow.
#[inline]
fn logistic_pair(u: f64) -> (f64, f64) {
    if u > 0.0 {
        let e = (-u).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = u.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    }
}

/// Dimensionless fundamental diagram `1/(1+exp((r-0.25)/0.06)) - 3.72e-6`.
pub fn ve_of_r(r: f64) -> f64 {
    logistic_pair((r - RHO_CENTER) / RHO_WIDTH).0 - VE_OFFSET
}

/// Derivatives `[ve, ve_r, ve_rr, ve_rrr]` of the fundamental diagram in `r`.
pub fn ve_r_derivs(r: f64) -> [f64; 4] {
    let (s, sc) = logistic_pair((r - RHO_CENTER) / RHO_WIDTH);
    let g = s * sc;
    let w = RHO_WIDTH;
    // sc - s is 1 - 2s without cancellation near the center
    let one_m_2s = sc - s;
    [
        s - VE_OFFSET,
        -g / w,
        g * one_m_2s / (w * w),
        -g * (1.0 - 6.0 * g) / (w * w * w),
    ]
}

/// `v_e(q_g, v_g, v) = ve_of_r(q_g / (v + v_g))`.
pub fn ve_of_v(p: &ModelParams, v: f64) -> Result<f64> {
    Ok(ve_of_r(p.density(v)?))
}

/// All of `[v_e, v_e', v_e'', v_e''']` in `v` at once.
pub fn ve_jet(p: &ModelParams, v: f64) -> Result<[f64; 4]> {
    let x = p.shifted(v)?;
    let r = p.q_g / x;
    let [f0, f1, f2, f3] = ve_r_derivs(r);
    // r(v) = q/x: r' = -r/x, r'' = 2r/x^2, r''' = -6r/x^3
    let r1 = -r / x;
    let r2 = 2.0 * r / (x * x);
    let r3 = -6.0 * r / (x * x * x);
    Ok([
        f0,
        f1 * r1,
        f2 * r1 * r1 + f1 * r2,
        f3 * r1 * r1 * r1 + 3.0 * f2 * r1 * r2 + f1 * r3,
    ])
}

/// The `order`-th derivative of `v_e` with respect to `v` (orders 1 to 3).
pub fn ve_derivs(p: &ModelParams, v: f64, order: usize) -> Result<f64> {
    if !(1..=3).contains(&order) {
        return Err(Error::Domain(format!("derivative order must be 1..=3, got {order}")));
    }
    Ok(ve_jet(p, v)?[order])
}

/// `d v_e / d q_g` at fixed `v`, `v_g`.
pub fn dve_dqg(p: &ModelParams, v: f64) -> Result<f64> {
    let x = p.shifted(v)?;
    Ok(ve_r_derivs(p.q_g / x)[1] / x)
}

/// Mixed partial `d^2 v_e / (d q_g d v)`.
pub fn d2ve_dqg_dv(p: &ModelParams, v: f64) -> Result<f64> {
    let x = p.shifted(v)?;
    let r = p.q_g / x;
    let d = ve_r_derivs(r);
    Ok(-(d[2] * r + d[1]) / (x * x))
}

/// Right-hand side of the traveling-wave ODE.
pub fn rhs(p: &ModelParams, s: PhasePoint) -> Result<PhasePoint> {
    let x = p.shifted(s.v)?;
    let ve = ve_of_r(p.q_g / x);
    Ok(PhasePoint {
        v: s.y,
        y: p.lambda * p.q_g * (1.0 - p.theta0 / (x * x)) * s.y - p.mu * p.q_g * (ve - s.v) / x,
    })
}

/// Free parameters a continuation problem may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    QG,
    VG,
    Theta0,
}

impl Param {
    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Param::QG => p.q_g,
            Param::VG => p.v_g,
            Param::Theta0 => p.theta0,
        }
    }

    pub fn set(self, p: &mut ModelParams, value: f64) {
        match self {
            Param::QG => p.q_g = value,
            Param::VG => p.v_g = value,
            Param::Theta0 => p.theta0 = value,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::QG => "q_g",
            Param::VG => "v_g",
            Param::Theta0 => "theta0",
        }
    }
}

/// Vector field, its state Jacobian and parameter partials, evaluated together.
#[derive(Debug, Clone, Copy)]
pub struct Linearization {
    pub f: [f64; 2],
    /// Row-major `[[df1/dv, df1/dy], [df2/dv, df2/dy]]`.
    pub jac: [[f64; 2]; 2],
}

pub fn linearize(p: &ModelParams, s: PhasePoint) -> Result<Linearization> {
    let x = p.shifted(s.v)?;
    let [ve, ve1, ..] = ve_jet(p, s.v)?;
    let lq = p.lambda * p.q_g;
    let mq = p.mu * p.q_g;
    let damp = lq * (1.0 - p.theta0 / (x * x));
    let f2 = damp * s.y - mq * (ve - s.v) / x;
    let df2_dv = lq * 2.0 * p.theta0 / (x * x * x) * s.y - mq * ((ve1 - 1.0) / x - (ve - s.v) / (x * x));
    Ok(Linearization {
        f: [s.y, f2],
        jac: [[0.0, 1.0], [df2_dv, damp]],
    })
}

/// Partial derivative of the second ODE component with respect to a parameter.
pub fn df2_dparam(p: &ModelParams, s: PhasePoint, which: Param) -> Result<f64> {
    let x = p.shifted(s.v)?;
    let [ve, ve1, ..] = ve_jet(p, s.v)?;
    let out = match which {
        Param::QG => {
            let dve = dve_dqg(p, s.v)?;
            p.lambda * (1.0 - p.theta0 / (x * x)) * s.y
                - p.mu * (ve - s.v) / x
                - p.mu * p.q_g * dve / x
        }
        Param::VG => {
            p.lambda * p.q_g * 2.0 * p.theta0 / (x * x * x) * s.y
                - p.mu * p.q_g * (ve1 / x - (ve - s.v) / (x * x))
        }
        Param::Theta0 => -p.lambda * p.q_g * s.y / (x * x),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cusp_params() -> ModelParams {
        ModelParams::standard(1.109656146, 0.316762381, 0.752937578).unwrap()
    }

    #[test]
    fn symmetric_center_value() {
        assert!((ve_of_r(0.25) - (0.5 - 3.72e-6)).abs() < 1e-15);
    }

    #[test]
    fn saturates_for_large_density() {
        assert!((ve_of_r(1e6) + VE_OFFSET).abs() < 1e-15);
        assert!(ve_of_r(1e6) > -VE_OFFSET - 1e-18);
        // no overflow on the other side either
        assert!((ve_of_r(-1e6) - (1.0 - VE_OFFSET)).abs() < 1e-15);
    }

    #[test]
    fn value_at_zero_density() {
        // 1/(1+e^{-25/6}) to 30 digits (mpmath): 0.984732846119625553567415431299
        let expected = 0.984_732_846_119_625_6 - 3.72e-6;
        assert!((ve_of_r(0.0) - expected).abs() < 1e-15, "{}", ve_of_r(0.0));
    }

    #[test]
    fn ve_of_v_reduces_to_center() {
        let p = ModelParams::standard(0.16, 0.1, 0.2).unwrap();
        assert!((ve_of_v(&p, 0.2).unwrap() - ve_of_r(0.25)).abs() < 1e-15);
        let swapped = ModelParams::standard(0.16, 0.1, 0.27).unwrap();
        let a = ve_of_v(&p, 0.27).unwrap();
        let b = ve_of_v(&swapped, 0.2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cusp_is_a_fixed_point_with_known_derivatives() {
        let p = cusp_params();
        let v = 0.300464598;
        let [ve, d1, d2, d3] = ve_jet(&p, v).unwrap();
        assert!((ve - v).abs() < 1e-8);
        assert!((d1 - 1.0).abs() < 1e-8);
        assert!(d2.abs() < 1e-6);
        assert!((d3 + 11.317691591).abs() < 1e-6, "{d3}");
    }

    #[test]
    fn domain_errors() {
        let p = ModelParams::standard(0.16, 0.1, 0.2).unwrap();
        assert!(ve_of_v(&p, -0.2).is_err());
        assert!(ve_of_v(&p, -0.3).is_err());
        assert!(ve_derivs(&p, 0.1, 0).is_err());
        assert!(ve_derivs(&p, 0.1, 4).is_err());
        assert!(rhs(&p, PhasePoint::new(-0.25, 0.0)).is_err());
        assert!(ModelParams::standard(0.16, -0.1, 0.2).is_err());
    }

    #[test]
    fn rhs_without_damping() {
        // theta0 = (v+v_g)^2 removes the y-term
        let v = 0.3;
        let p = ModelParams::standard((v + 0.2f64).powi(2), 0.12, 0.2).unwrap();
        let out = rhs(&p, PhasePoint::new(v, 0.7)).unwrap();
        let expected = -p.mu * p.q_g * (ve_of_v(&p, v).unwrap() - v) / (v + 0.2);
        assert!((out.y - expected).abs() < 1e-15);
        assert_eq!(out.v, 0.7);
    }

    #[test]
    fn rhs_matches_direct_transcription() {
        let p = ModelParams::standard(0.21, 0.15, 0.31).unwrap();
        let (v, y) = (0.17, -0.004);
        // direct transcription of the ODE, independent of ve_r_derivs
        let r = p.q_g / (v + p.v_g);
        let ve = 1.0 / (1.0 + ((r - 0.25) / 0.06).exp()) - 3.72e-6;
        let f2 = p.lambda * p.q_g * (1.0 - p.theta0 / (v + p.v_g).powi(2)) * y
            - p.mu * p.q_g * (ve - v) / (v + p.v_g);
        let got = rhs(&p, PhasePoint::new(v, y)).unwrap();
        assert!((got.y - f2).abs() < 1e-14 * f2.abs().max(1e-300) + 1e-18);
        assert_eq!(got.v, y);
    }

    #[test]
    fn physical_ratios() {
        let c = PhysicalConstants::default();
        assert!((c.lambda() - 0.2).abs() < 1e-15);
        assert!((c.mu() - 1.0 / 700.0).abs() < 1e-15);
        assert!((c.theta0() - 0.16).abs() < 1e-15);
        let secs = PhysicalConstants::default().with_tau_seconds(30.0);
        assert!((secs.tau - 1.0 / 120.0).abs() < 1e-18);
        let p = c.params(0.1, 0.2).unwrap();
        assert!(p.consistent_with(&c, 1e-12));
        assert!(!p.with_theta0(0.2).consistent_with(&c, 1e-12));
    }

    fn fd_check(p: &ModelParams, v: f64) {
        let f = |v: f64| ve_of_v(p, v).unwrap();
        let d = |v: f64, k: usize| ve_derivs(p, v, k).unwrap();
        for &h in &[1e-4, 1e-5] {
            let fd1 = (f(v + h) - f(v - h)) / (2.0 * h);
            let fd2 = (d(v + h, 1) - d(v - h, 1)) / (2.0 * h);
            let fd3 = (d(v + h, 2) - d(v - h, 2)) / (2.0 * h);
            for (fd, exact, k) in [(fd1, d(v, 1), 2), (fd2, d(v, 2), 3), (fd3, d(v, 3), 3)] {
                // second-order remainder bound with a generous constant
                let scale = 1.0 + d(v, k.min(3)).abs() + exact.abs();
                assert!((fd - exact).abs() < 50.0 * h * h * scale + 1e-9 * scale, "v={v} h={h}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        fd_check(&cusp_params(), 0.3);
        fd_check(&ModelParams::standard(0.16, 0.134, 0.204).unwrap(), 0.19);
    }

    #[test]
    fn parameter_partials_match_finite_differences() {
        let p = ModelParams::standard(0.16, 0.134, 0.204).unwrap();
        let s = PhasePoint::new(0.21, 0.003);
        let h = 1e-6;
        for which in [Param::QG, Param::VG, Param::Theta0] {
            let mut a = p;
            let mut b = p;
            which.set(&mut a, which.get(&p) + h);
            which.set(&mut b, which.get(&p) - h);
            let fd = (rhs(&a, s).unwrap().y - rhs(&b, s).unwrap().y) / (2.0 * h);
            let exact = df2_dparam(&p, s, which).unwrap();
            assert!((fd - exact).abs() < 1e-8, "{which:?}: {fd} vs {exact}");
        }
        let mixed_fd = {
            let a = p.with_qv(p.q_g + h, p.v_g);
            let b = p.with_qv(p.q_g - h, p.v_g);
            (ve_derivs(&a, 0.21, 1).unwrap() - ve_derivs(&b, 0.21, 1).unwrap()) / (2.0 * h)
        };
        assert!((mixed_fd - d2ve_dqg_dv(&p, 0.21).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn state_jacobian_matches_finite_differences() {
        let p = ModelParams::standard(0.18, 0.14, 0.22).unwrap();
        let s = PhasePoint::new(0.2, -0.01);
        let lin = linearize(&p, s).unwrap();
        let h = 1e-6;
        let dv = (rhs(&p, PhasePoint::new(s.v + h, s.y)).unwrap().y
            - rhs(&p, PhasePoint::new(s.v - h, s.y)).unwrap().y)
            / (2.0 * h);
        let dy = (rhs(&p, PhasePoint::new(s.v, s.y + h)).unwrap().y
            - rhs(&p, PhasePoint::new(s.v, s.y - h)).unwrap().y)
            / (2.0 * h);
        assert!((lin.jac[1][0] - dv).abs() < 1e-8);
        assert!((lin.jac[1][1] - dy).abs() < 1e-8);
    }
}
