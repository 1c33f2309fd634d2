//! Damped Newton iteration with finite-difference Jacobians.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewtonError {
    #[error("Jacobian is singular at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("line search failed after {halvings} halvings (residual {residual:e})")]
    LineSearchFailed { halvings: usize, residual: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("residual evaluation failed: {0}")]
    Evaluation(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdScheme {
    /// Central differences with step `rel · (1 + |xᵢ|)`.
    Central(f64),
    /// Forward differences with step `rel · (1 + ‖x‖)`.
    Forward(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Converged once `‖F(x)‖ < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed per iteration when the residual does not decrease.
    pub max_halvings: usize,
    pub fd: FdScheme,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            max_halvings: 30,
            fd: FdScheme::Central(1e-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Finite-difference Jacobian of `f` at `x`, where `fx = f(x)` is already known.
pub fn fd_jacobian<F, E>(f: &mut F, x: &[f64], fx: &[f64], scheme: FdScheme) -> Result<DMatrix<f64>, E>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
{
    let n = x.len();
    let m = fx.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        match scheme {
            FdScheme::Central(rel) => {
                let h = rel * (1.0 + x[j].abs());
                probe[j] = x[j] + h;
                let fp = f(&probe)?;
                probe[j] = x[j] - h;
                let fm = f(&probe)?;
                for i in 0..m {
                    jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            FdScheme::Forward(rel) => {
                let h = rel * (1.0 + norm(x));
                probe[j] = x[j] + h;
                let fp = f(&probe)?;
                for i in 0..m {
                    jac[(i, j)] = (fp[i] - fx[i]) / h;
                }
            }
        }
        probe[j] = x[j];
    }
    Ok(jac)
}

/// The residual map as handed to a Jacobian provider.
pub type Residual<'a, E> = dyn FnMut(&[f64]) -> Result<Vec<f64>, E> + 'a;

/// Damped Newton on a fallible residual map with a finite-difference Jacobian.
pub fn damped_newton<F, E>(mut f: F, x0: &[f64], settings: &NewtonSettings) -> Result<NewtonOutcome, NewtonError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    E: std::fmt::Display,
{
    let scheme = settings.fd;
    damped_newton_with(
        |x: &[f64]| f(x),
        |f: &mut Residual<E>, x: &[f64], fx: &[f64]| {
            let mut g = |y: &[f64]| f(y);
            fd_jacobian(&mut g, x, fx, scheme)
        },
        x0,
        settings,
    )
}

/// Damped Newton with a caller-supplied Jacobian `jac(f, x, f(x))`.
///
/// Each full step is halved until the residual norm decreases. After the
/// tolerance is met, up to two polishing steps are taken while they keep
/// decreasing the residual.
pub fn damped_newton_with<F, J, E>(
    mut f: F,
    mut jac: J,
    x0: &[f64],
    settings: &NewtonSettings,
) -> Result<NewtonOutcome, NewtonError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    J: FnMut(&mut Residual<E>, &[f64], &[f64]) -> Result<DMatrix<f64>, E>,
    E: std::fmt::Display,
{
    let eval_err = |e: E| NewtonError::Evaluation(e.to_string());
    let mut x = x0.to_vec();
    let mut fx = f(&x).map_err(eval_err)?;
    let mut res = norm(&fx);
    let mut polish = 0;

    for iteration in 0..settings.max_iter {
        if res < settings.tol {
            if polish >= 2 {
                return Ok(NewtonOutcome { x, residual: res, iterations: iteration });
            }
            polish += 1;
        }
        let jm = match jac(&mut f, &x, &fx) {
            Ok(j) => j,
            Err(_) if res < settings.tol => {
                return Ok(NewtonOutcome { x, residual: res, iterations: iteration });
            }
            Err(e) => return Err(eval_err(e)),
        };
        let rhs = -DVector::from_column_slice(&fx);
        let dx = match jm.lu().solve(&rhs).filter(|d| d.iter().all(|v| v.is_finite())) {
            Some(d) => d,
            None if res < settings.tol => {
                return Ok(NewtonOutcome { x, residual: res, iterations: iteration });
            }
            None => return Err(NewtonError::SingularJacobian { iteration }),
        };

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_halvings {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, di)| xi + lambda * di).collect();
            // A failed evaluation (e.g. no return to the section) counts as a rejected step.
            if let Ok(ft) = f(&trial) {
                let rt = norm(&ft);
                if rt < res {
                    accepted = Some((trial, ft, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, ft, rt)) => {
                x = xt;
                fx = ft;
                res = rt;
            }
            None if res < settings.tol => {
                return Ok(NewtonOutcome { x, residual: res, iterations: iteration });
            }
            None => {
                return Err(NewtonError::LineSearchFailed {
                    halvings: settings.max_halvings,
                    residual: res,
                })
            }
        }
    }
    if res < settings.tol {
        Ok(NewtonOutcome { x, residual: res, iterations: settings.max_iter })
    } else {
        Err(NewtonError::NotConverged { iterations: settings.max_iter, residual: res })
    }
}
