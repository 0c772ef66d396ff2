//! Limit cycles of the traveling-wave ODE by multiple shooting, their
//! continuation at fixed period, and long-period proxies of homoclinic orbits.
//!
//! A cycle of period `T` is represented by `M` nodes `x_0, ..., x_{M-1}` at
//! equal time spacing `T/M`. The equations are `phi(x_i, T/M) = x_{i+1}`
//! (indices mod `M`) and the phase condition `y_0 = 0`: node 0 sits on the
//! `v`-axis, where the flow is vertical, so this section is orthogonal to the
//! flow at the first mesh point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::curve::{BifurcationCurve, CurveKind, CurvePoint, LabelKind};
use super::hopf::BtPoint;
use super::palc::{self, Problem, StepPolicy, Tracer};
use crate::equilibria;
use crate::error::{Error, Result};
use crate::model::{self, ModelParams, Param, PhasePoint};
use crate::normalforms;
use crate::ode::{self, Tolerances};

/// Default number of shooting segments.
pub const SEGMENTS: usize = 20;

/// Closure tolerance for a converged cycle (phase-space max norm).
pub const CLOSURE_TOL: f64 = 1e-8;

/// One sample of a cycle: time along the orbit and the phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshPoint {
    pub z: f64,
    pub v: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStability {
    Stable,
    Unstable,
    Neutral,
}

/// A periodic orbit with its sampled mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub params: ModelParams,
    pub period: f64,
    /// Samples at equal spacing in `z` from 0 to `period` inclusive.
    pub mesh: Vec<MeshPoint>,
    #[serde(default = "neutral")]
    pub stability: CycleStability,
    /// Nontrivial Floquet multiplier.
    #[serde(default = "nan")]
    pub floquet_multiplier: f64,
    /// Shooting nodes.
    #[serde(default)]
    pub nodes: Vec<[f64; 2]>,
    /// Max matching residual over all segments.
    #[serde(default = "nan")]
    pub closure: f64,
}

fn neutral() -> CycleStability {
    CycleStability::Neutral
}

fn nan() -> f64 {
    f64::NAN
}

impl LimitCycle {
    /// `max v - min v` over the mesh.
    pub fn amplitude(&self) -> f64 {
        let (lo, hi) = self
            .mesh
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), m| (a.min(m.v), b.max(m.v)));
        hi - lo
    }

    /// Distance between the first and last mesh points.
    pub fn mesh_closure(&self) -> f64 {
        match (self.mesh.first(), self.mesh.last()) {
            (Some(a), Some(b)) => (a.v - b.v).abs().max((a.y - b.y).abs()),
            _ => f64::NAN,
        }
    }

    /// Number of transversal crossings of the `v`-axis (`y = 0`) over one period.
    pub fn axis_crossings(&self) -> usize {
        let n = self.mesh.len().saturating_sub(1);
        sign_changes(self.mesh[..n].iter().map(|m| m.y))
    }

    /// Number of strict local extrema of `v` over one period.
    pub fn v_extrema(&self) -> usize {
        let n = self.mesh.len().saturating_sub(1);
        let v: Vec<f64> = self.mesh[..n].iter().map(|m| m.v).collect();
        sign_changes((0..n).map(|i| v[(i + 1) % n] - v[i]))
    }

    /// Fraction of the mesh within `radius` of the phase point `(v, 0)`.
    pub fn time_fraction_near(&self, v: f64, radius: f64) -> f64 {
        let n = self.mesh.len().saturating_sub(1).max(1);
        let near = self.mesh[..n]
            .iter()
            .filter(|m| (m.v - v).hypot(m.y) < radius)
            .count();
        near as f64 / n as f64
    }

    /// Smallest distance from the mesh to the phase point `(v, 0)`.
    pub fn distance_to(&self, v: f64) -> f64 {
        self.mesh
            .iter()
            .map(|m| (m.v - v).hypot(m.y))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cyclic count of sign changes, ignoring exact zeros.
pub fn sign_changes<I: Iterator<Item = f64>>(values: I) -> usize {
    let signs: Vec<bool> = values.filter(|x| *x != 0.0).map(|x| x > 0.0).collect();
    if signs.len() < 2 {
        return 0;
    }
    (0..signs.len())
        .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
        .count()
}

/// `m T / rho_max` in km: the road length on which a cycle of period `T`
/// closes with `m` bumps.
pub fn resonant_road_length(c: &LimitCycle, m: u32, rho_max: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("the bump count m must be at least 1".into()));
    }
    Ok(m as f64 * c.period / rho_max)
}

/// Numerical settings for cycle computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    pub segments: usize,
    pub samples_per_segment: usize,
    pub ode: Tolerances,
    pub step: StepPolicy,
    /// Amplitude of the seeded cycle near a Hopf point.
    pub seed_amplitude: f64,
    /// The continuation stops when the amplitude falls below this value.
    pub min_amplitude: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            segments: SEGMENTS,
            samples_per_segment: 32,
            ode: Tolerances::default(),
            step: StepPolicy {
                initial: 1e-2,
                min: 1e-7,
                max: 0.1,
                grow: 1.5,
                shrink: 0.5,
                fast_iterations: 3,
                max_iterations: 10,
                tol: 1e-10,
                min_cos: 0.9,
            },
            seed_amplitude: 1e-3,
            min_amplitude: 1e-5,
        }
    }
}

/// Free unknown beyond the mesh nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Free {
    /// `T / t_ref`.
    Period,
    Param(Param),
}

/// Multiple-shooting system with two free scalars (a one-dimensional family).
struct Shooting {
    base: ModelParams,
    m: usize,
    free: [Free; 2],
    /// Period when it is not free.
    period: f64,
    t_ref: f64,
    tol: Tolerances,
}

struct Evaluated {
    f: DVector<f64>,
    jac: DMatrix<f64>,
}

impl Shooting {
    fn split(&self, u: &DVector<f64>) -> Result<(ModelParams, f64)> {
        let mut p = self.base;
        let mut period = self.period;
        for (k, fr) in self.free.iter().enumerate() {
            let val = u[2 * self.m + k];
            match fr {
                Free::Period => period = val * self.t_ref,
                Free::Param(which) => which.set(&mut p, val),
            }
        }
        p.validate()?;
        if !(period > 0.0) {
            return Err(Error::Domain(format!("non-positive period {period}")));
        }
        Ok((p, period))
    }

    fn unknowns(&self, nodes: &[[f64; 2]], p: &ModelParams, period: f64) -> DVector<f64> {
        let mut u = DVector::zeros(2 * self.m + 2);
        for (i, x) in nodes.iter().enumerate() {
            u[2 * i] = x[0];
            u[2 * i + 1] = x[1];
        }
        for (k, fr) in self.free.iter().enumerate() {
            u[2 * self.m + k] = match fr {
                Free::Period => period / self.t_ref,
                Free::Param(which) => which.get(p),
            };
        }
        u
    }

    fn nodes(&self, u: &DVector<f64>) -> Vec<[f64; 2]> {
        (0..self.m).map(|i| [u[2 * i], u[2 * i + 1]]).collect()
    }

    fn evaluate(&self, u: &DVector<f64>) -> Result<Evaluated> {
        let (p, period) = self.split(u)?;
        let tau = period / self.m as f64;
        let nodes = self.nodes(u);
        let sens: Vec<Param> = self
            .free
            .iter()
            .filter_map(|f| match f {
                Free::Param(w) => Some(*w),
                Free::Period => None,
            })
            .collect();
        let flows = parallel_flows(&p, &nodes, tau, &sens, self.tol)?;
        let m = self.m;
        let mut f = DVector::zeros(2 * m + 1);
        let mut jac = DMatrix::zeros(2 * m + 1, 2 * m + 2);
        for (i, fl) in flows.iter().enumerate() {
            let next = (i + 1) % m;
            for r in 0..2 {
                f[2 * i + r] = fl.end[r] - nodes[next][r];
                for c in 0..2 {
                    jac[(2 * i + r, 2 * i + c)] += fl.phi[r][c];
                }
                jac[(2 * i + r, 2 * next + r)] -= 1.0;
            }
            let mut s = 0;
            for (k, fr) in self.free.iter().enumerate() {
                let col = 2 * m + k;
                match fr {
                    Free::Period => {
                        let d = model::rhs(&p, PhasePoint::new(fl.end[0], fl.end[1]))?;
                        jac[(2 * i, col)] = d.v * self.t_ref / m as f64;
                        jac[(2 * i + 1, col)] = d.y * self.t_ref / m as f64;
                    }
                    Free::Param(_) => {
                        jac[(2 * i, col)] = fl.dparam[s][0];
                        jac[(2 * i + 1, col)] = fl.dparam[s][1];
                        s += 1;
                    }
                }
            }
        }
        f[2 * m] = nodes[0][1];
        jac[(2 * m, 1)] = 1.0;
        Ok(Evaluated { f, jac })
    }

    /// The cycle represented by `u`, with a dense mesh and Floquet data.
    fn cycle(&self, u: &DVector<f64>, samples_per_segment: usize) -> Result<LimitCycle> {
        let (p, period) = self.split(u)?;
        let tau = period / self.m as f64;
        let nodes = self.nodes(u);
        let k = samples_per_segment.max(1);
        let times: Vec<f64> = (1..k).map(|j| tau * j as f64 / k as f64).collect();
        let flows = parallel_flows_sampled(&p, &nodes, tau, &times, self.tol)?;
        let mut mesh = Vec::with_capacity(self.m * k + 1);
        let mut closure: f64 = 0.0;
        let mut floquet = 1.0;
        for (i, fl) in flows.iter().enumerate() {
            let z0 = period * i as f64 / self.m as f64;
            mesh.push(MeshPoint {
                z: z0,
                v: nodes[i][0],
                y: nodes[i][1],
            });
            for (j, s) in fl.samples.iter().enumerate() {
                mesh.push(MeshPoint {
                    z: z0 + times[j],
                    v: s[0],
                    y: s[1],
                });
            }
            let next = nodes[(i + 1) % self.m];
            closure = closure.max((fl.end[0] - next[0]).abs()).max((fl.end[1] - next[1]).abs());
            floquet *= fl.phi[0][0] * fl.phi[1][1] - fl.phi[0][1] * fl.phi[1][0];
        }
        let last = flows.last().expect("at least one segment");
        mesh.push(MeshPoint {
            z: period,
            v: last.end[0],
            y: last.end[1],
        });
        let stability = if floquet < 1.0 - 1e-9 {
            CycleStability::Stable
        } else if floquet > 1.0 + 1e-9 {
            CycleStability::Unstable
        } else {
            CycleStability::Neutral
        };
        Ok(LimitCycle {
            params: p,
            period,
            mesh,
            stability,
            floquet_multiplier: floquet,
            nodes,
            closure,
        })
    }
}

impl Problem for Shooting {
    fn dim(&self) -> usize {
        2 * self.m + 2
    }

    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.evaluate(u)?.f)
    }

    fn residual_and_jacobian(&self, u: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let e = self.evaluate(u)?;
        Ok((e.f, e.jac))
    }
}

fn workers(n: usize) -> usize {
    std::thread::available_parallelism().map_or(1, |w| w.get()).min(n).max(1)
}

/// Segment flows with variational equations, computed on scoped threads.
/// Each segment is independent, so the result does not depend on scheduling.
fn parallel_flows(p: &ModelParams, nodes: &[[f64; 2]], tau: f64, sens: &[Param], tol: Tolerances) -> Result<Vec<ode::Flow>> {
    run_segments(nodes.len(), |i| ode::flow(p, nodes[i], tau, sens, &[], tol))
}

fn parallel_flows_sampled(p: &ModelParams, nodes: &[[f64; 2]], tau: f64, times: &[f64], tol: Tolerances) -> Result<Vec<ode::Flow>> {
    run_segments(nodes.len(), |i| ode::flow(p, nodes[i], tau, &[], times, tol))
}

fn run_segments<F>(n: usize, job: F) -> Result<Vec<ode::Flow>>
where
    F: Fn(usize) -> Result<ode::Flow> + Sync,
{
    let w = workers(n);
    if w == 1 {
        return (0..n).map(&job).collect();
    }
    let mut slots: Vec<Option<Result<ode::Flow>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = slots
            .chunks_mut(n.div_ceil(w))
            .enumerate()
            .map(|(c, chunk)| {
                let job = &job;
                let start = c * n.div_ceil(w);
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(job(start + k));
                    }
                })
            })
            .collect();
        for h in chunks {
            h.join().expect("segment worker panicked");
        }
    });
    slots.into_iter().map(|s| s.expect("every segment computed")).collect()
}

/// Seed a small cycle at the Hopf point `(p, v_c)` from the linear ellipse
/// `v = v_c + eps cos(omega0 z)`, `y = -eps omega0 sin(omega0 z)` and correct
/// it with the period and `free` as unknowns at fixed amplitude direction.
pub fn cycle_from_hopf(p: &ModelParams, v_c: f64, free: Param, opts: &CycleOptions) -> Result<LimitCycle> {
    let e = equilibria::classify(p, v_c)?;
    if e.b.abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "not a Hopf point: trace b = {:e} with theta0 = {}",
            e.b, p.theta0
        )));
    }
    let ell1 = normalforms::lyapunov_l1(p, v_c)?;
    if ell1 == 0.0 {
        return Err(Error::Precondition("ell1 = 0: degenerate Hopf point".into()));
    }
    let w = normalforms::omega0(p, v_c)?;
    let t_hopf = 2.0 * std::f64::consts::PI / w;
    let m = opts.segments;
    let sys = Shooting {
        base: *p,
        m,
        free: [Free::Period, Free::Param(free)],
        period: t_hopf,
        t_ref: t_hopf,
        tol: opts.ode,
    };
    let eps = opts.seed_amplitude;
    let mut nodes = Vec::with_capacity(m);
    let mut dir = DVector::zeros(2 * m + 2);
    for i in 0..m {
        let ph = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
        nodes.push([v_c + eps * ph.cos(), -eps * w * ph.sin()]);
        dir[2 * i] = ph.cos();
        dir[2 * i + 1] = -w * ph.sin();
    }
    nodes[0][1] = 0.0;
    let dir = dir.normalize();
    let pred = sys.unknowns(&nodes, p, t_hopf);
    let c = palc::correct(&sys, &pred, &pred, &dir, opts.step.tol, 2 * opts.step.max_iterations)?;
    let cyc = sys.cycle(&c.u, opts.samples_per_segment)?;
    if !(cyc.amplitude() > 0.1 * eps) {
        return Err(Error::NoConvergence {
            what: "Hopf cycle seed (collapsed onto the equilibrium)",
            iterations: c.iterations,
            residual: c.residual,
        });
    }
    Ok(cyc)
}

/// A traced family of cycles.
#[derive(Debug, Clone)]
pub struct CycleFamily {
    pub period: f64,
    pub curve: BifurcationCurve,
    pub cycles: Vec<LimitCycle>,
}

impl CycleFamily {
    pub fn last(&self) -> Option<&LimitCycle> {
        self.cycles.last()
    }
}

fn family_point(c: &LimitCycle) -> CurvePoint {
    CurvePoint::new(c.params.q_g, c.params.v_g)
        .with("period", c.period)
        .with("amplitude", c.amplitude())
        .with("floquet", c.floquet_multiplier)
        .with("closure", c.closure)
}

/// Continue `c` into the family of cycles of period `target_period` in the
/// `(q_g, v_g)` plane for at most `max_steps` steps.
///
/// The cycle is first corrected to the target period with `v_g` held fixed
/// (falling back to holding `q_g`). The branch then grows in amplitude from
/// its starting point; turning points in `q_g` are labeled LPC. The branch
/// ends if the amplitude collapses (return to a Hopf point): below
/// `min_amplitude`, or below 5% of the largest amplitude seen while shrinking.
pub fn continue_cycle_fixed_period(c: &LimitCycle, target_period: f64, max_steps: usize, opts: &CycleOptions) -> Result<CycleFamily> {
    if !(target_period > 0.0) {
        return Err(Error::Domain(format!("target period {target_period} must be positive")));
    }
    let m = c.nodes.len();
    if m < 2 {
        return Err(Error::Precondition("cycle carries no shooting nodes".into()));
    }
    let sys = Shooting {
        base: c.params,
        m,
        free: [Free::Param(Param::QG), Free::Param(Param::VG)],
        period: target_period,
        t_ref: target_period,
        tol: opts.ode,
    };
    // nodes at the target period: rescale the time grid of the given cycle
    let u_start = sys.unknowns(&c.nodes, &c.params, target_period);
    let mut corrected = None;
    for pinned in [2 * m + 1, 2 * m] {
        let mut normal = DVector::zeros(2 * m + 2);
        normal[pinned] = 1.0;
        if let Ok(r) = palc::correct(&sys, &u_start, &u_start, &normal, opts.step.tol, 3 * opts.step.max_iterations) {
            corrected = Some(r);
            break;
        }
    }
    let first = corrected.ok_or(Error::NoConvergence {
        what: "correction to the target period",
        iterations: 3 * opts.step.max_iterations,
        residual: f64::NAN,
    })?;

    let mut family = CycleFamily {
        period: target_period,
        curve: BifurcationCurve::new(CurveKind::CycleFamily),
        cycles: Vec::new(),
    };
    family.curve.meta.insert("period".into(), format!("{target_period:.16e}"));
    family.curve.meta.insert("theta0".into(), format!("{:.16e}", c.params.theta0));
    let c0 = sys.cycle(&first.u, opts.samples_per_segment)?;
    if c0.amplitude() < opts.min_amplitude {
        return Err(Error::NoConvergence {
            what: "correction to the target period (collapsed onto the equilibrium)",
            iterations: first.iterations,
            residual: first.residual,
        });
    }
    family.curve.push(family_point(&c0));
    family.cycles.push(c0);

    // orient toward growing amplitude: d/ds sum |x_i - mean|^2 > 0
    let nodes0 = sys.nodes(&first.u);
    let mean = nodes0.iter().fold([0.0, 0.0], |a, x| [a[0] + x[0] / m as f64, a[1] + x[1] / m as f64]);
    let mut dev = DVector::zeros(2 * m + 2);
    for (i, x) in nodes0.iter().enumerate() {
        dev[2 * i] = x[0] - mean[0];
        dev[2 * i + 1] = x[1] - mean[1];
    }
    let mut orient = DVector::zeros(2 * m + 2);
    orient[2 * m] = 1.0;
    let t0 = palc::tangent(&first.jacobian, &orient)?;
    let t0 = if t0.dot(&dev) < 0.0 { -t0 } else { t0 };
    let mut tracer = Tracer::new(&sys, first.u.clone(), t0.clone(), opts.step);
    let mut prev_dq = t0[2 * m];
    let mut max_amp = family.cycles[0].amplitude();
    let mut prev_amp = max_amp;
    for _ in 0..max_steps {
        let step = match tracer.step() {
            Ok(s) => s,
            Err(e) => {
                family.curve.failures.push(e.to_string());
                break;
            }
        };
        let cyc = match sys.cycle(&step.u, opts.samples_per_segment) {
            Ok(c) => c,
            Err(e) => {
                family.curve.failures.push(e.to_string());
                break;
            }
        };
        let amp = cyc.amplitude();
        let idx = family.curve.push(family_point(&cyc));
        family.cycles.push(cyc);
        let dq = step.tangent[2 * m];
        if dq != 0.0 && prev_dq != 0.0 && dq.signum() != prev_dq.signum() {
            family.curve.label(idx, LabelKind::LPC);
        }
        prev_dq = dq;
        // collapse onto a Hopf point: small and still shrinking
        if amp < opts.min_amplitude || (amp < 0.05 * max_amp && amp < prev_amp) {
            family.curve.meta.insert("end".into(), "collapsed to a Hopf point".into());
            break;
        }
        max_amp = max_amp.max(amp);
        prev_amp = amp;
    }
    Ok(family)
}

/// Hopf point on the curve through `bt` (at `theta0 = bt.theta0`) whose
/// linear period `2 pi / omega0` equals `period`, on the side nearest `bt`.
pub fn hopf_point_with_period(bt: &BtPoint, period: f64) -> Result<(ModelParams, f64)> {
    let x = bt.theta0.sqrt();
    let mu = ModelParams::standard(bt.theta0, bt.q_g, bt.v_g)?.mu;
    let omega = |r: f64| -> Result<f64> {
        let d = model::ve_r_derivs(r);
        let ve1 = -d[1] * r / x;
        Ok(if ve1 > 1.0 {
            (mu * r * (ve1 - 1.0)).sqrt()
        } else {
            0.0
        })
    };
    // along the Hopf curve, r = q_g / x parametrizes v_c = v_e(r), v_g = x - v_c
    let r_bt = bt.q_g / x;
    let target = 2.0 * std::f64::consts::PI / period;
    // scan toward the interior for the frequency maximum
    let dir = {
        let h = 1e-6;
        if omega(r_bt + h)? > omega(r_bt - h)? {
            1.0
        } else {
            -1.0
        }
    };
    let n = 400;
    let span = 0.5;
    let mut best = (r_bt, 0.0);
    let mut hit = None;
    let mut prev = (r_bt, 0.0);
    for i in 1..=n {
        let r = r_bt + dir * span * i as f64 / n as f64;
        if r <= 0.0 {
            break;
        }
        let w = omega(r)?;
        if w >= target && prev.1 < target {
            hit = Some((prev.0, r));
            break;
        }
        if w > best.1 {
            best = (r, w);
        }
        if w == 0.0 && i > 1 {
            break;
        }
        prev = (r, w);
    }
    let (a, b) = hit.ok_or_else(|| {
        Error::Domain(format!(
            "period {period} is below the minimal Hopf period {} on this curve",
            2.0 * std::f64::consts::PI / best.1
        ))
    })?;
    let r = crate::roots::bisect(|r| Ok(omega(r)? - target), a, b, 1e-15, 0.0)?;
    let v_c = model::ve_of_r(r);
    let q_g = r * x;
    let v_g = x - v_c;
    let p = ModelParams::standard(bt.theta0, q_g, v_g)?;
    // polish v_c as a root of the equilibrium equation at these parameters
    let v_c = equilibria::interior_equilibrium(&p)?
        .map(|e| e.v_c)
        .ok_or_else(|| Error::Domain("Hopf point lost its interior equilibrium".into()))?;
    Ok((p, v_c))
}

/// Long-period proxy of the homoclinic curve from `bt`: the fixed-period
/// family of period `period` (the largest the Hopf curve supports at or
/// below the cap), seeded at its Hopf point.
pub fn homoclinic_approx(bt: &BtPoint, period: f64, max_steps: usize, opts: &CycleOptions) -> Result<CycleFamily> {
    let (p, v_c) = hopf_point_with_period(bt, period)?;
    let seed = cycle_from_hopf(&p, v_c, Param::VG, opts)?;
    let mut fam = continue_cycle_fixed_period(&seed, period, max_steps, opts)?;
    fam.curve.meta.insert("homoclinic_proxy".into(), "fixed-period family".into());
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_changes_are_cyclic() {
        assert_eq!(sign_changes([1.0, -1.0, -2.0, 3.0].into_iter()), 2);
        assert_eq!(sign_changes([0.0, 1.0, 2.0, -1.0].into_iter()), 2);
        assert_eq!(sign_changes([1.0, 2.0].into_iter()), 0);
    }

    #[test]
    fn road_length_is_m_t_over_rho_max() {
        let c = LimitCycle {
            params: ModelParams::standard(0.16, 0.1, 0.3).unwrap(),
            period: 140.0,
            mesh: vec![],
            stability: CycleStability::Neutral,
            floquet_multiplier: 1.0,
            nodes: vec![],
            closure: 0.0,
        };
        assert_eq!(resonant_road_length(&c, 1, 140.0).unwrap(), 1.0);
        assert_eq!(resonant_road_length(&c, 2, 140.0).unwrap(), 2.0);
        assert!(resonant_road_length(&c, 0, 140.0).is_err());
    }

    #[test]
    fn small_cycle_at_family_b_hopf_point() {
        let p = ModelParams::standard(0.16, 0.133886021, 0.204071932).unwrap();
        let vc = 0.4 - p.v_g;
        let vc = equilibria::find_equilibria(&p, equilibria::default_interval(&p))
            .unwrap()
            .into_iter()
            .min_by(|a, b| (a.v_c - vc).abs().total_cmp(&(b.v_c - vc).abs()))
            .unwrap()
            .v_c;
        let opts = CycleOptions::default();
        let c = cycle_from_hopf(&p, vc, Param::VG, &opts).unwrap();
        let w = normalforms::omega0(&p, vc).unwrap();
        assert!(c.closure < CLOSURE_TOL);
        assert!(c.mesh_closure() < CLOSURE_TOL);
        assert!((c.period * w / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-3);
        assert_eq!(c.axis_crossings(), 2);
        // supercritical side: the small cycle is stable
        assert_eq!(c.stability, CycleStability::Stable);
    }
}
