//! Adaptive Dormand-Prince 5(4) integration of the traveling-wave ODE,
//! optionally with its variational and parameter-sensitivity equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ModelParams, Param, PhasePoint};

/// Error control for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Difference between fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1 > t0`, returning the state at
/// each time in `stops` (ascending, inside `(t0, t1]`) followed by the state
/// at `t1`. Steps are shortened to land exactly on every stop.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], t1: f64, tol: Tolerances, stops: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(t1 > t0) {
        return Err(Error::Domain(format!("integration interval [{t0}, {t1}] is empty")));
    }
    let n = y0.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut y = y0.to_vec();
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut t = t0;
    f(t, &y, &mut k[0])?;
    let mut h = initial_step(&y, &k[0], t1 - t0, tol);
    let mut out = Vec::with_capacity(stops.len() + 1);
    let mut targets = stops.iter().copied().filter(|&s| s > t0 && s < t1).peekable();
    let mut steps = 0;
    while t < t1 {
        let target = targets.peek().copied().unwrap_or(t1);
        let mut hh = h.min(target - t);
        let landing = hh >= target - t;
        if landing {
            hh = target - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                tmp[i] = y[i] + hh * acc;
            }
            f(t + C[s] * hh, &tmp, &mut k[s])?;
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            let mut e = 0.0;
            for s in 0..7 {
                acc += B5[s] * k[s][i];
                e += E[s] * k[s][i];
            }
            y5[i] = y[i] + hh * acc;
            let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            err += (hh * e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::NoConvergence {
                what: "Dormand-Prince step (non-finite state)",
                iterations: steps,
                residual: f64::NAN,
            });
        }
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::NoConvergence {
                what: "Dormand-Prince integration (step limit)",
                iterations: steps,
                residual: err,
            });
        }
        if err <= 1.0 {
            t = if landing { target } else { t + hh };
            y.copy_from_slice(&y5);
            // first-same-as-last: the last stage is f at the new point
            let last = k[6].clone();
            k[0] = last;
            if landing {
                out.push(y.clone());
                if target < t1 {
                    targets.next();
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // a step shortened to hit a stop says nothing about the natural size
            if !landing || hh >= h {
                h = hh * fac;
            }
        } else {
            h = hh * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < 1e-14 * t1.abs().max(1.0) {
                return Err(Error::NoConvergence {
                    what: "Dormand-Prince integration (step underflow)",
                    iterations: steps,
                    residual: err,
                });
            }
        }
    }
    Ok(out)
}

fn initial_step(y: &[f64], f0: &[f64], span: f64, tol: Tolerances) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = tol.atol + tol.rtol * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (fi / sc).powi(2);
    }
    let h = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * (d0 / d1).sqrt()
    };
    h.min(span)
}

/// Flow of the ODE over time `tau` from `z0`, with the state-transition
/// matrix and sensitivities to the listed parameters.
#[derive(Debug, Clone)]
pub struct Flow {
    pub end: [f64; 2],
    /// `d end / d z0`, row-major.
    pub phi: [[f64; 2]; 2],
    /// `d end / d p` for each requested parameter.
    pub dparam: Vec<[f64; 2]>,
    /// States at the requested sample times (not including `tau` unless asked).
    pub samples: Vec<[f64; 2]>,
}

/// Integrate the traveling-wave ODE with variational equations.
pub fn flow(p: &ModelParams, z0: [f64; 2], tau: f64, sens: &[Param], sample_times: &[f64], tol: Tolerances) -> Result<Flow> {
    let np = sens.len();
    let mut y0 = vec![0.0; 6 + 2 * np];
    y0[0] = z0[0];
    y0[1] = z0[1];
    y0[2] = 1.0;
    y0[5] = 1.0;
    let rhs = |_t: f64, u: &[f64], du: &mut [f64]| -> Result<()> {
        let s = PhasePoint::new(u[0], u[1]);
        let lin = model::linearize(p, s)?;
        let j = lin.jac;
        du[0] = lin.f[0];
        du[1] = lin.f[1];
        // Phi' = J Phi
        du[2] = j[0][0] * u[2] + j[0][1] * u[4];
        du[3] = j[0][0] * u[3] + j[0][1] * u[5];
        du[4] = j[1][0] * u[2] + j[1][1] * u[4];
        du[5] = j[1][0] * u[3] + j[1][1] * u[5];
        for (k, &which) in sens.iter().enumerate() {
            let (a, b) = (u[6 + 2 * k], u[7 + 2 * k]);
            du[6 + 2 * k] = j[0][0] * a + j[0][1] * b;
            du[7 + 2 * k] = j[1][0] * a + j[1][1] * b + model::df2_dparam(p, s, which)?;
        }
        Ok(())
    };
    let out = integrate(rhs, 0.0, &y0, tau, tol, sample_times)?;
    let last = out.last().expect("integrate returns the final state");
    let samples = out[..out.len() - 1].iter().map(|u| [u[0], u[1]]).collect();
    Ok(Flow {
        end: [last[0], last[1]],
        phi: [[last[2], last[3]], [last[4], last[5]]],
        dparam: (0..np).map(|k| [last[6 + 2 * k], last[7 + 2 * k]]).collect(),
        samples,
    })
}

/// Plain trajectory of the ODE sampled at `times` (ascending, positive).
pub fn trajectory(p: &ModelParams, z0: [f64; 2], times: &[f64], tol: Tolerances) -> Result<Vec<[f64; 2]>> {
    let Some(&t_end) = times.last() else {
        return Ok(Vec::new());
    };
    let rhs = |_t: f64, u: &[f64], du: &mut [f64]| -> Result<()> {
        let d = model::rhs(p, PhasePoint::new(u[0], u[1]))?;
        du[0] = d.v;
        du[1] = d.y;
        Ok(())
    };
    let out = integrate(rhs, 0.0, &z0, t_end, tol, &times[..times.len() - 1])?;
    Ok(out.into_iter().map(|u| [u[0], u[1]]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let f = |_t: f64, u: &[f64], du: &mut [f64]| -> Result<()> {
            du[0] = u[1];
            du[1] = -u[0];
            Ok(())
        };
        let stops: Vec<f64> = (1..10).map(|i| i as f64).collect();
        let out = integrate(f, 0.0, &[1.0, 0.0], 10.0, Tolerances::default(), &stops).unwrap();
        assert_eq!(out.len(), 10);
        for (i, u) in out.iter().enumerate() {
            let t = (i + 1) as f64;
            assert!((u[0] - t.cos()).abs() < 1e-9, "t = {t}");
            assert!((u[1] + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn variational_equations_match_finite_differences() {
        let p = ModelParams::standard(0.16, 0.14, 0.2).unwrap();
        let z0 = [0.25, 0.003];
        let tau = 60.0;
        let fl = flow(&p, z0, tau, &[Param::QG, Param::VG], &[], Tolerances::default()).unwrap();
        let h = 1e-6;
        for c in 0..2 {
            let mut zp = z0;
            let mut zm = z0;
            zp[c] += h;
            zm[c] -= h;
            let a = flow(&p, zp, tau, &[], &[], Tolerances::default()).unwrap().end;
            let b = flow(&p, zm, tau, &[], &[], Tolerances::default()).unwrap().end;
            for r in 0..2 {
                let fd = (a[r] - b[r]) / (2.0 * h);
                assert!((fd - fl.phi[r][c]).abs() < 1e-6 * fd.abs().max(1.0), "phi[{r}][{c}]");
            }
        }
        for (k, which) in [Param::QG, Param::VG].into_iter().enumerate() {
            let mut pp = p;
            let mut pm = p;
            which.set(&mut pp, which.get(&p) + h);
            which.set(&mut pm, which.get(&p) - h);
            let a = flow(&pp, z0, tau, &[], &[], Tolerances::default()).unwrap().end;
            let b = flow(&pm, z0, tau, &[], &[], Tolerances::default()).unwrap().end;
            for r in 0..2 {
                let fd = (a[r] - b[r]) / (2.0 * h);
                assert!((fd - fl.dparam[k][r]).abs() < 1e-5 * fd.abs().max(1.0), "{which:?} {r}");
            }
        }
    }

    #[test]
    fn equilibrium_is_stationary() {
        let p = ModelParams::standard(0.16, 0.14, 0.2).unwrap();
        let e = crate::equilibria::find_equilibria(&p, crate::equilibria::default_interval(&p)).unwrap();
        let out = trajectory(&p, [e[0].v_c, 0.0], &[10.0, 100.0], Tolerances::default()).unwrap();
        for z in out {
            assert!((z[0] - e[0].v_c).abs() < 1e-12 && z[1].abs() < 1e-12);
        }
    }
}
