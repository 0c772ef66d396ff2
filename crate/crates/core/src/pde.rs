//! Method-of-lines solver for the dimensional traffic PDE on a periodic road,
//! initialized from limit cycles, with traveling-wave diagnostics.
//!
//! ```text
//! rho_t + (rho V)_x = 0
//! V_t + V V_x = -(Theta0 / rho) rho_x + (eta0 / rho) V_xx + (V_e(rho) - V) / tau
//! ```
//!
//! Space: conservative central flux for the continuity equation with
//! fourth-difference dissipation (or first-order upwinding), central
//! differences for the momentum equation. Time: by default Strang splitting of
//! a Crank-Nicolson step for the viscous term (frozen `rho`, cyclic tridiagonal
//! solve) around an RK4 step for the remaining terms, with `dt` set by the
//! advective CFL bound. Fully explicit RK4 under the additional viscous bound
//! is available through [`TimeScheme::ExplicitRk4`].

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::continuation::cycles::{LimitCycle, MeshPoint};
use crate::error::{Error, Result};
use crate::model::{self, PhysicalConstants};

/// Discretized fields on the periodic grid `x_j = j L / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeState {
    /// Road length (km).
    pub length: f64,
    /// Density (veh/km).
    pub rho: Vec<f64>,
    /// Speed (km/h).
    pub v: Vec<f64>,
    /// Time (h).
    pub t: f64,
}

impl PdeState {
    pub fn n(&self) -> usize {
        self.rho.len()
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n()).map(|j| j as f64 * dx).collect()
    }

    /// `sum rho dx` (periodic trapezoid rule).
    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.dx()
    }

    /// Homogeneous state `(rho0, V_e(rho0))`.
    pub fn homogeneous(length: f64, n: usize, rho0: f64, consts: &PhysicalConstants) -> Result<Self> {
        if !(rho0 > 0.0 && length > 0.0 && n >= 8) {
            return Err(Error::Domain(format!(
                "homogeneous state needs rho0 > 0, L > 0, N >= 8 (got {rho0}, {length}, {n})"
            )));
        }
        let v0 = equilibrium_speed(rho0, consts);
        Ok(Self {
            length,
            rho: vec![rho0; n],
            v: vec![v0; n],
            t: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.len() != self.v.len() || self.n() < 8 {
            return Err(Error::Domain("fields must have equal length >= 8".into()));
        }
        if let Some(j) = self.rho.iter().position(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Instability {
                t: self.t,
                reason: format!("rho[{j}] = {} is not positive", self.rho[j]),
            });
        }
        if let Some(j) = self.v.iter().position(|v| !v.is_finite()) {
            return Err(Error::Instability {
                t: self.t,
                reason: format!("V[{j}] is not finite"),
            });
        }
        Ok(())
    }
}

/// `V_e(rho) = V_max * ve_of_r(rho / rho_max)`.
pub fn equilibrium_speed(rho: f64, c: &PhysicalConstants) -> f64 {
    c.v_max * model::ve_of_r(rho / c.rho_max)
}

/// Cubic Hermite interpolation of a cycle at `z` (taken modulo the period),
/// using `y = dv/dz` as the node derivative.
pub fn interpolate_cycle(mesh: &[MeshPoint], period: f64, z: f64) -> (f64, f64) {
    let z = z.rem_euclid(period);
    let k = match mesh.binary_search_by(|m| m.z.total_cmp(&z)) {
        Ok(k) => return (mesh[k].v, mesh[k].y),
        Err(0) => 0,
        Err(k) => (k - 1).min(mesh.len() - 2),
    };
    let (a, b) = (mesh[k], mesh[k + 1]);
    let h = b.z - a.z;
    let s = (z - a.z) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * a.v + h10 * h * a.y + h01 * b.v + h11 * h * b.y;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let y = dh00 * a.v + dh10 * a.y + dh01 * b.v + dh11 * b.y;
    (v, y)
}

/// Initial data `V = V_max v(rho_max x)`, `rho = rho_max q_g / (v + v_g)` on a
/// road of length `m T / rho_max` with `n` grid points.
pub fn cycle_to_initial_condition(c: &LimitCycle, consts: &PhysicalConstants, m: u32, n: usize) -> Result<PdeState> {
    traveling_profile(c, consts, m, n, 0.0)
}

/// The exact traveling wave generated by `c` at time `t` (h): the initial
/// profile translated by `-V_g t`.
pub fn traveling_profile(c: &LimitCycle, consts: &PhysicalConstants, m: u32, n: usize, t: f64) -> Result<PdeState> {
    if m == 0 {
        return Err(Error::Domain("the bump count m must be at least 1".into()));
    }
    if c.mesh.len() < 2 || !(c.period > 0.0) {
        return Err(Error::Domain("cycle mesh needs at least two points and a positive period".into()));
    }
    if n < 8 {
        return Err(Error::Domain(format!("grid size {n} is too small")));
    }
    let length = m as f64 * c.period / consts.rho_max;
    let dx = length / n as f64;
    let mut rho = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for j in 0..n {
        let z = consts.rho_max * (j as f64 * dx + consts.v_max * c.params.v_g * t);
        let (vv, _) = interpolate_cycle(&c.mesh, c.period, z);
        let x = vv + c.params.v_g;
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "v + v_g = {x} <= 0 at z = {z}: the cycle cannot be mapped to a density"
            )));
        }
        rho.push(consts.rho_max * c.params.q_g / x);
        v.push(consts.v_max * vv);
    }
    Ok(PdeState { length, rho, v, t })
}

/// Discretization of the density flux `rho V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityFlux {
    /// Second-order central flux with fourth-difference dissipation.
    Central,
    /// First-order upwind flux.
    Upwind,
}

/// Time integration of the semidiscrete system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    /// Crank-Nicolson viscous half steps around an RK4 step of the other terms.
    Strang,
    /// Fully explicit RK4, with `dt` also limited by `dx^2 rho_min / (2 eta0)`.
    ExplicitRk4,
}

/// Numerical settings of the PDE solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeOptions {
    /// Courant number relative to `max(|V| + sqrt(Theta0))`.
    pub cfl: f64,
    /// Coefficient of the fourth-difference density dissipation.
    pub dissipation: f64,
    pub flux: DensityFlux,
    pub scheme: TimeScheme,
    /// Spacing of recorded snapshots (h).
    pub snapshot_every: f64,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self {
            cfl: 1.0,
            dissipation: 1.0 / 64.0,
            flux: DensityFlux::Central,
            scheme: TimeScheme::Strang,
            snapshot_every: 1.0 / 60.0,
        }
    }
}

fn advective_dt(s: &PdeState, consts: &PhysicalConstants) -> f64 {
    let c = consts.theta_0.sqrt();
    let vmax = s.v.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    s.dx() / (vmax + c)
}

fn viscous_dt(s: &PdeState, consts: &PhysicalConstants) -> f64 {
    let rho_min = s.rho.iter().copied().fold(f64::INFINITY, f64::min);
    s.dx() * s.dx() * rho_min / (2.0 * consts.eta_0)
}

/// Largest stable time step of the configured scheme.
pub fn stable_dt(s: &PdeState, consts: &PhysicalConstants, opts: &PdeOptions) -> f64 {
    let dt = opts.cfl * advective_dt(s, consts);
    match opts.scheme {
        TimeScheme::Strang => dt,
        TimeScheme::ExplicitRk4 => dt.min(viscous_dt(s, consts)),
    }
}

/// Explicit right-hand side, with the viscous term only if `viscous`.
#[allow(clippy::too_many_arguments)]
fn explicit_rhs(rho: &[f64], v: &[f64], dx: f64, consts: &PhysicalConstants, opts: &PdeOptions, viscous: bool, drho: &mut [f64], dv: &mut [f64]) {
    let n = rho.len();
    let c = consts.theta_0.sqrt();
    let idx = |j: isize| -> usize { j.rem_euclid(n as isize) as usize };
    let flux: Vec<f64> = (0..n)
        .map(|j| {
            let (jm, j1, j2) = (idx(j as isize - 1), idx(j as isize + 1), idx(j as isize + 2));
            // flux at the face j + 1/2
            match opts.flux {
                DensityFlux::Central => {
                    let central = 0.5 * (rho[j] * v[j] + rho[j1] * v[j1]);
                    let s = 0.5 * (v[j].abs() + v[j1].abs()) + c;
                    let d3 = rho[j2] - 3.0 * rho[j1] + 3.0 * rho[j] - rho[jm];
                    central + opts.dissipation * s * d3
                }
                DensityFlux::Upwind => {
                    let vf = 0.5 * (v[j] + v[j1]);
                    vf * if vf >= 0.0 { rho[j] } else { rho[j1] }
                }
            }
        })
        .collect();
    for j in 0..n {
        let (jm, j1) = (idx(j as isize - 1), idx(j as isize + 1));
        drho[j] = -(flux[j] - flux[jm]) / dx;
        let vx = (v[j1] - v[jm]) / (2.0 * dx);
        let rx = (rho[j1] - rho[jm]) / (2.0 * dx);
        dv[j] = -v[j] * vx - consts.theta_0 / rho[j] * rx + (equilibrium_speed(rho[j], consts) - v[j]) / consts.tau;
        if viscous {
            dv[j] += consts.eta_0 / rho[j] * (v[j1] - 2.0 * v[j] + v[jm]) / (dx * dx);
        }
    }
}

/// Solve the periodic tridiagonal system `a x_{i-1} + b x_i + c x_{i+1} = d`.
pub fn solve_cyclic_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    // Sherman-Morrison on the corner entries a[0] and c[n-1]
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= c[n - 1] * a[0] / gamma;
    let x = thomas(a, &bb, c, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = c[n - 1];
    let z = thomas(a, &bb, c, &u);
    let fact = (x[0] + a[0] * x[n - 1] / gamma) / (1.0 + z[0] + a[0] * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Crank-Nicolson step of `V_t = (eta0 / rho) V_xx` over `h` in delta form.
fn viscous_step(s: &mut PdeState, consts: &PhysicalConstants, h: f64) {
    let n = s.n();
    let dx2 = s.dx() * s.dx();
    let k: Vec<f64> = s.rho.iter().map(|r| consts.eta_0 / r * h / (2.0 * dx2)).collect();
    let a: Vec<f64> = k.iter().map(|k| -k).collect();
    let b: Vec<f64> = k.iter().map(|k| 1.0 + 2.0 * k).collect();
    let d: Vec<f64> = (0..n)
        .map(|j| {
            let jm = (j + n - 1) % n;
            let j1 = (j + 1) % n;
            2.0 * k[j] * (s.v[j1] - 2.0 * s.v[j] + s.v[jm])
        })
        .collect();
    if d.iter().all(|x| *x == 0.0) {
        return;
    }
    let dv = solve_cyclic_tridiagonal(&a, &b, &a, &d);
    for (v, dv) in s.v.iter_mut().zip(dv) {
        *v += dv;
    }
}

fn rk4_step(s: &mut PdeState, consts: &PhysicalConstants, dt: f64, opts: &PdeOptions, viscous: bool) {
    let n = s.n();
    let dx = s.dx();
    let mut kr = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut kv = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut rt = vec![0.0; n];
    let mut vt = vec![0.0; n];
    explicit_rhs(&s.rho, &s.v, dx, consts, opts, viscous, &mut kr[0], &mut kv[0]);
    for (stage, frac) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
        for j in 0..n {
            rt[j] = s.rho[j] + frac * dt * kr[stage - 1][j];
            vt[j] = s.v[j] + frac * dt * kv[stage - 1][j];
        }
        explicit_rhs(&rt, &vt, dx, consts, opts, viscous, &mut kr[stage], &mut kv[stage]);
    }
    for j in 0..n {
        s.rho[j] += dt / 6.0 * (kr[0][j] + 2.0 * kr[1][j] + 2.0 * kr[2][j] + kr[3][j]);
        s.v[j] += dt / 6.0 * (kv[0][j] + 2.0 * kv[1][j] + 2.0 * kv[2][j] + kv[3][j]);
    }
}

/// Advance `s` by one step of size `dt`.
pub fn step(s: &PdeState, consts: &PhysicalConstants, dt: f64, opts: &PdeOptions) -> Result<PdeState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step {dt} must be positive")));
    }
    let limit = stable_dt(s, consts, &PdeOptions { cfl: 2.0, ..*opts });
    if dt > limit {
        return Err(Error::Precondition(format!(
            "dt = {dt:e} h exceeds the stability bound {limit:e} h"
        )));
    }
    let mut out = s.clone();
    match opts.scheme {
        TimeScheme::Strang => {
            viscous_step(&mut out, consts, 0.5 * dt);
            rk4_step(&mut out, consts, dt, opts, false);
            viscous_step(&mut out, consts, 0.5 * dt);
        }
        TimeScheme::ExplicitRk4 => rk4_step(&mut out, consts, dt, opts, true),
    }
    out.t = s.t + dt;
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TravelingWave,
    EvolvedToOtherWave,
    Dispersed,
}

/// Thresholds for the traveling-wave verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictThresholds {
    /// Max shifted-profile drift, as a fraction of the amplitude per 10 minutes.
    pub drift_per_10min: f64,
    /// Max relative deviation of the measured speed from `-V_g`.
    pub speed_rel: f64,
    /// Amplitude fraction below which the wave counts as dispersed.
    pub dispersed_amplitude: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            drift_per_10min: 0.01,
            speed_rel: 0.02,
            dispersed_amplitude: 0.05,
        }
    }
}

/// Outcome of a PDE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    /// Profile speed over the final quarter (km/h).
    pub measured_speed: f64,
    /// `-V_g` (km/h).
    pub expected_speed: f64,
    /// RMS distance of optimally shifted profiles per unit time over the final quarter (km/h per h).
    pub profile_drift: f64,
    /// The same drift as a fraction of the amplitude per 10 minutes.
    pub relative_drift_per_10min: f64,
    /// Earliest snapshot time after which the relative drift stays below threshold (h).
    pub transient_time: f64,
    pub initial_amplitude: f64,
    pub final_amplitude: f64,
    /// Significant extrema of `V` at the start and the end, and the range over all snapshots.
    pub initial_extrema: usize,
    pub final_extrema: usize,
    pub min_extrema: usize,
    pub max_extrema: usize,
    /// Largest relative mass change over one step.
    pub max_mass_change_per_step: f64,
    pub steps: usize,
    pub verdict: Verdict,
}

/// One recorded snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
}

fn amplitude(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    hi - lo
}

/// Number of extrema of a periodic signal whose prominence exceeds
/// `fraction` of its amplitude (zigzag count).
pub fn significant_extrema(v: &[f64], fraction: f64) -> usize {
    let n = v.len();
    let amp = amplitude(v);
    if n < 3 || amp == 0.0 {
        return 0;
    }
    let thr = fraction * amp;
    // start from the global maximum so the cyclic walk begins at an extremum
    let start = (0..n).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
    let mut count = 0;
    let mut rising = false;
    let mut ext = v[start];
    for k in 1..=n {
        let x = v[(start + k) % n];
        if rising {
            if x > ext {
                ext = x;
            } else if ext - x > thr {
                count += 1;
                rising = false;
                ext = x;
            }
        } else if x < ext {
            ext = x;
        } else if x - ext > thr {
            count += 1;
            rising = true;
            ext = x;
        }
    }
    // the walk ends by climbing back to the starting maximum
    if rising {
        count += 1;
    }
    count
}

/// Spectral tools for shift estimation on a periodic grid.
pub struct Shifter {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Shifter {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn spectrum(&self, a: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = a.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn wavenumber(&self, k: usize) -> f64 {
        if k <= self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        }
    }

    /// RMS distance between `b` and `a` shifted right by `s` grid cells.
    fn distance(&self, a_hat: &[Complex64], b_hat: &[Complex64], s: f64) -> f64 {
        let n = self.n as f64;
        let mut acc = 0.0;
        for k in 0..self.n {
            let kk = self.wavenumber(k);
            let ph = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * kk * s / n);
            acc += (b_hat[k] - a_hat[k] * ph).norm_sqr();
        }
        (acc / (n * n)).sqrt()
    }

    /// Shift `s` (in cells, within half the domain) minimizing the RMS
    /// distance between `b` and `a` translated right by `s`, and that distance.
    pub fn best_shift(&self, a: &[f64], b: &[f64]) -> (f64, f64) {
        let a_hat = self.spectrum(a);
        let b_hat = self.spectrum(b);
        // cross-correlation c_m = sum_j a_j b_(j+m)
        let mut c: Vec<Complex64> = a_hat.iter().zip(&b_hat).map(|(x, y)| x.conj() * y).collect();
        self.inv.process(&mut c);
        let m = (0..self.n).max_by(|&i, &j| c[i].re.total_cmp(&c[j].re)).unwrap_or(0);
        let m = if m > self.n / 2 { m as f64 - self.n as f64 } else { m as f64 };
        // golden-section search of the spectral distance within one cell
        let (mut lo, mut hi) = (m - 1.0, m + 1.0);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = self.distance(&a_hat, &b_hat, x1);
        let mut f2 = self.distance(&a_hat, &b_hat, x2);
        for _ in 0..60 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = self.distance(&a_hat, &b_hat, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = self.distance(&a_hat, &b_hat, x2);
            }
        }
        let s = 0.5 * (lo + hi);
        (s, self.distance(&a_hat, &b_hat, s))
    }
}

/// Integrate from `s0` to `t_end` and assess traveling-wave persistence.
///
/// `v_g` is the dimensionless wave parameter of the generating cycle; the
/// expected profile speed is `-v_g V_max`.
pub fn run_and_report(
    s0: &PdeState,
    consts: &PhysicalConstants,
    t_end: f64,
    v_g: f64,
    opts: &PdeOptions,
    thresholds: &VerdictThresholds,
) -> Result<(PdeState, WaveReport, Vec<Snapshot>)> {
    s0.validate()?;
    if !(t_end > s0.t) {
        return Err(Error::Domain(format!("t_end = {t_end} must exceed the start time {}", s0.t)));
    }
    let mut s = s0.clone();
    let mut snaps = vec![Snapshot {
        t: s.t,
        rho: s.rho.clone(),
        v: s.v.clone(),
    }];
    let mut next_snap = s.t + opts.snapshot_every;
    let mut max_mass = 0.0f64;
    let mut steps = 0;
    while s.t < t_end {
        let target = next_snap.min(t_end);
        let mut dt = stable_dt(&s, consts, opts);
        let landing = s.t + dt >= target - 1e-12 * t_end;
        if landing {
            dt = target - s.t;
        }
        let m0 = s.mass();
        let mut next = step(&s, consts, dt, opts)?;
        if landing {
            next.t = target;
        }
        let m1 = next.mass();
        max_mass = max_mass.max(((m1 - m0) / m0).abs());
        s = next;
        steps += 1;
        if landing {
            snaps.push(Snapshot {
                t: s.t,
                rho: s.rho.clone(),
                v: s.v.clone(),
            });
            next_snap += opts.snapshot_every;
        }
    }
    let report = assess(&snaps, s.length, consts, v_g, thresholds, max_mass, steps);
    Ok((s, report, snaps))
}

/// Diagnostics from a sequence of snapshots.
pub fn assess(
    snaps: &[Snapshot],
    length: f64,
    consts: &PhysicalConstants,
    v_g: f64,
    thr: &VerdictThresholds,
    max_mass_change_per_step: f64,
    steps: usize,
) -> WaveReport {
    let n = snaps[0].v.len();
    let dx = length / n as f64;
    let shifter = Shifter::new(n);
    let t0 = snaps[0].t;
    let t_end = snaps.last().map_or(t0, |s| s.t);
    let initial_amplitude = amplitude(&snaps[0].v);
    let final_amplitude = snaps.last().map_or(0.0, |s| amplitude(&s.v));
    let ten_min = 10.0 / 60.0;

    // consecutive-pair drift, scaled per 10 minutes relative to the amplitude
    let mut rel: Vec<(f64, f64)> = Vec::with_capacity(snaps.len());
    for w in snaps.windows(2) {
        let dt = w[1].t - w[0].t;
        let (_, d) = shifter.best_shift(&w[0].v, &w[1].v);
        let amp = amplitude(&w[1].v).max(1e-300);
        rel.push((w[1].t, d / amp * ten_min / dt));
    }
    let transient_time = {
        let mut t = t0;
        for (i, (ti, r)) in rel.iter().enumerate().rev() {
            if *r >= thr.drift_per_10min {
                t = *ti;
                break;
            }
            if i == 0 {
                t = t0;
            }
        }
        t - t0
    };

    // final quarter: speed and drift between its first and last snapshots
    let q_start = t_end - 0.25 * (t_end - t0);
    let first = snaps.iter().position(|s| s.t >= q_start - 1e-12).unwrap_or(0);
    let last = snaps.len() - 1;
    let mut travelled = 0.0;
    for w in snaps[first..].windows(2) {
        let (sh, _) = shifter.best_shift(&w[0].v, &w[1].v);
        travelled += sh * dx;
    }
    let span = snaps[last].t - snaps[first].t;
    let measured_speed = if span > 0.0 { travelled / span } else { f64::NAN };
    let (_, d) = shifter.best_shift(&snaps[first].v, &snaps[last].v);
    let profile_drift = if span > 0.0 { d / span } else { f64::NAN };
    let relative_drift_per_10min = profile_drift * ten_min / final_amplitude.max(1e-300);

    let extrema: Vec<usize> = snaps.iter().map(|s| significant_extrema(&s.v, 0.01)).collect();
    let expected_speed = -v_g * consts.v_max;
    let speed_ok = (measured_speed - expected_speed).abs() <= thr.speed_rel * expected_speed.abs();
    let verdict = if final_amplitude < thr.dispersed_amplitude * initial_amplitude {
        Verdict::Dispersed
    } else if relative_drift_per_10min < thr.drift_per_10min && speed_ok {
        Verdict::TravelingWave
    } else {
        Verdict::EvolvedToOtherWave
    };
    WaveReport {
        measured_speed,
        expected_speed,
        profile_drift,
        relative_drift_per_10min,
        transient_time,
        initial_amplitude,
        final_amplitude,
        initial_extrema: extrema[0],
        final_extrema: *extrema.last().unwrap_or(&0),
        min_extrema: extrema.iter().copied().min().unwrap_or(0),
        max_extrema: extrema.iter().copied().max().unwrap_or(0),
        max_mass_change_per_step,
        steps,
        verdict,
    }
}
