//! Pseudo-arclength continuation of one-dimensional solution curves of
//! `F(u) = 0`, `F: R^n -> R^(n-1)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An underdetermined system with one more unknown than equations.
pub trait Problem {
    /// Number of unknowns.
    fn dim(&self) -> usize;

    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>>;

    /// `(n-1) x n` Jacobian together with the residual.
    fn residual_and_jacobian(&self, u: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>;
}

/// Step-size and corrector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub grow: f64,
    pub shrink: f64,
    /// Corrector iterations at or below which the step grows.
    pub fast_iterations: usize,
    pub max_iterations: usize,
    /// Residual tolerance (max norm) for the Newton corrector.
    pub tol: f64,
    /// Minimum cosine between consecutive secants; sharper turns are rejected.
    pub min_cos: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            initial: 1e-2,
            min: 1e-6,
            max: 5e-2,
            grow: 1.5,
            shrink: 0.5,
            fast_iterations: 3,
            max_iterations: 8,
            tol: 1e-11,
            min_cos: 0.8,
        }
    }
}

/// Unit tangent of the solution curve at `u`, oriented along `orient`.
pub fn tangent(jac: &DMatrix<f64>, orient: &DVector<f64>) -> Result<DVector<f64>> {
    let n = jac.ncols();
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n - 1, n)).copy_from(jac);
    a.row_mut(n - 1).copy_from(&orient.transpose());
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let t = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("singular bordered matrix in tangent computation".into()))?;
    let norm = t.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::Precondition("degenerate tangent".into()));
    }
    let t = t / norm;
    Ok(if t.dot(orient) < 0.0 { -t } else { t })
}

/// Result of a converged corrector.
#[derive(Debug, Clone)]
pub struct Corrected {
    pub u: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub jacobian: DMatrix<f64>,
}

/// Newton corrector on `F(u) = 0` augmented by the hyperplane
/// `normal . (u - anchor) = 0`.
pub fn correct<P: Problem + ?Sized>(
    problem: &P,
    start: &DVector<f64>,
    anchor: &DVector<f64>,
    normal: &DVector<f64>,
    tol: f64,
    max_iterations: usize,
) -> Result<Corrected> {
    let n = problem.dim();
    let mut u = start.clone();
    let mut last = f64::INFINITY;
    for it in 0..=max_iterations {
        let (f, jac) = problem.residual_and_jacobian(&u)?;
        let plane = normal.dot(&(&u - anchor));
        let res = f.amax().max(plane.abs());
        if !res.is_finite() {
            break;
        }
        if res < tol {
            return Ok(Corrected {
                u,
                iterations: it,
                residual: res,
                jacobian: jac,
            });
        }
        if it == max_iterations || (it > 2 && res > 2.0 * last) {
            last = res;
            break;
        }
        last = res;
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n - 1, n)).copy_from(&jac);
        a.row_mut(n - 1).copy_from(&normal.transpose());
        let mut rhs = DVector::zeros(n);
        rhs.rows_mut(0, n - 1).copy_from(&(-&f));
        rhs[n - 1] = -plane;
        let du = match a.lu().solve(&rhs) {
            Some(du) if du.iter().all(|x| x.is_finite()) => du,
            _ => break,
        };
        u += du;
    }
    Err(Error::NoConvergence {
        what: "continuation corrector",
        iterations: max_iterations,
        residual: last,
    })
}

/// One accepted continuation step.
#[derive(Debug, Clone)]
pub struct Step {
    pub u: DVector<f64>,
    pub tangent: DVector<f64>,
    pub step_size: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Secant-predictor / Newton-corrector tracer along a solution curve.
pub struct Tracer<'a, P: Problem + ?Sized> {
    problem: &'a P,
    u: DVector<f64>,
    direction: DVector<f64>,
    h: f64,
    policy: StepPolicy,
}

impl<'a, P: Problem + ?Sized> Tracer<'a, P> {
    /// `u0` must already satisfy `F(u0) = 0`; `direction` is the initial
    /// unit tangent (its sign fixes the traversal direction).
    pub fn new(problem: &'a P, u0: DVector<f64>, direction: DVector<f64>, policy: StepPolicy) -> Self {
        let direction = direction.normalize();
        Self {
            problem,
            u: u0,
            direction,
            h: policy.initial,
            policy,
        }
    }

    pub fn current(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Cap the next step (used to land close to a detected event).
    pub fn set_step_size(&mut self, h: f64) {
        self.h = h.clamp(self.policy.min, self.policy.max);
    }

    pub fn step(&mut self) -> Result<Step> {
        loop {
            let h = self.h;
            let pred = &self.u + &self.direction * h;
            let attempt = correct(
                self.problem,
                &pred,
                &pred,
                &self.direction,
                self.policy.tol,
                self.policy.max_iterations,
            );
            let accepted = match attempt {
                Ok(c) => {
                    let chord = &c.u - &self.u;
                    let len = chord.norm();
                    let secant = chord / len;
                    if len > 0.0 && secant.dot(&self.direction) >= self.policy.min_cos {
                        Some((c, secant))
                    } else {
                        None
                    }
                }
                Err(_) => None,
            };
            match accepted {
                Some((c, secant)) => {
                    self.u = c.u.clone();
                    self.direction = secant.clone();
                    if c.iterations <= self.policy.fast_iterations {
                        self.h = (h * self.policy.grow).min(self.policy.max);
                    }
                    return Ok(Step {
                        u: c.u,
                        tangent: secant,
                        step_size: h,
                        iterations: c.iterations,
                        residual: c.residual,
                    });
                }
                None => {
                    let next = h * self.policy.shrink;
                    if next < self.policy.min {
                        return Err(Error::NoConvergence {
                            what: "continuation step (step size below floor)",
                            iterations: self.policy.max_iterations,
                            residual: f64::NAN,
                        });
                    }
                    self.h = next;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit circle x^2 + y^2 = 1.
    struct Circle;

    impl Problem for Circle {
        fn dim(&self) -> usize {
            2
        }
        fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_element(1, u[0] * u[0] + u[1] * u[1] - 1.0))
        }
        fn residual_and_jacobian(&self, u: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
            Ok((
                self.residual(u)?,
                DMatrix::from_row_slice(1, 2, &[2.0 * u[0], 2.0 * u[1]]),
            ))
        }
    }

    #[test]
    fn traces_through_turning_points() {
        let u0 = DVector::from_vec(vec![1.0, 0.0]);
        let jac = Circle.residual_and_jacobian(&u0).unwrap().1;
        let t0 = tangent(&jac, &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!((t0[1] - 1.0).abs() < 1e-14);
        let policy = StepPolicy {
            initial: 0.05,
            max: 0.2,
            ..StepPolicy::default()
        };
        let mut tracer = Tracer::new(&Circle, u0, t0, policy);
        let mut arc = 0.0;
        let mut prev = tracer.current().clone();
        let mut crossed_left = false;
        while arc < 2.0 * std::f64::consts::PI - 0.3 {
            let s = tracer.step().unwrap();
            assert!(Circle.residual(&s.u).unwrap()[0].abs() < 1e-11);
            arc += (&s.u - &prev).norm();
            prev = s.u.clone();
            crossed_left |= s.u[0] < -0.99;
        }
        // passes the turning point at x = -1 in the y parameter
        assert!(crossed_left);
    }

    #[test]
    fn corrector_reports_failure() {
        let u = DVector::from_vec(vec![0.0, 0.0]);
        let n = DVector::from_vec(vec![1.0, 0.0]);
        // hyperplane x = 5 does not meet the circle
        let anchor = DVector::from_vec(vec![5.0, 0.0]);
        assert!(correct(&Circle, &u, &anchor, &n, 1e-12, 10).is_err());
    }
}
