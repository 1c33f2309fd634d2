//! Periodic orbits of the full jerk system by Poincaré-section shooting.
//!
//! The section is `Σ = {z = 0, y > 0}` crossed with `ż < 0`. In Jordan
//! coordinates this is the half-plane `θ = 0`, where a root `(r, w)` of the
//! averaged function corresponds to the physical point `ε (w, r, 0)`.
//! Newton's method is applied to `R(q) = P(q) − q` on `q = (x, y) ∈ Σ`.

use log::{debug, warn};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_form::predicted_roots;
use crate::cubic::cubic_roots;
use crate::jerk_model::{jacobian_at, vector_field, State3, SystemParams};
use crate::newton::{damped_newton_with, fd_jacobian, norm, FdScheme, NewtonError, NewtonSettings, Residual};
use crate::normal_form::{unfold, NormalFormError, UnfoldingParams};
use crate::ode::{integrate_system, single_step, IntegratorSpec, OdeError, OdeSystem, Stepper, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error("trajectory did not return to the section within t = {0}")]
    NoReturn(f64),
    #[error("shooting diverged from every seed: {0}")]
    ShootingDiverged(String),
    #[error("seed radius must be positive, got {0}")]
    SeedInvalid(f64),
    #[error(transparent)]
    Params(#[from] NormalFormError),
}

/// The jerk vector field as an [`OdeSystem`].
#[derive(Debug, Clone, Copy)]
pub struct JerkFlow {
    pub params: SystemParams,
}

impl OdeSystem for JerkFlow {
    fn dim(&self) -> usize {
        3
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let v = vector_field(&self.params, &State3::new(y[0], y[1], y[2]));
        dy[0] = v.x;
        dy[1] = v.y;
        dy[2] = v.z;
    }
}

/// State plus row-major fundamental matrix `Φ' = J(x) Φ`, 12 components.
#[derive(Debug, Clone, Copy)]
pub struct JerkVariational {
    pub params: SystemParams,
}

impl OdeSystem for JerkVariational {
    fn dim(&self) -> usize {
        12
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let s = State3::new(y[0], y[1], y[2]);
        let v = vector_field(&self.params, &s);
        dy[0] = v.x;
        dy[1] = v.y;
        dy[2] = v.z;
        let j = jacobian_at(&self.params, &s);
        for row in 0..3 {
            for col in 0..3 {
                dy[3 + row * 3 + col] = (0..3).map(|k| j[row][k] * y[3 + k * 3 + col]).sum();
            }
        }
    }
}

pub fn integrate(p: &SystemParams, s0: &State3, t_end: f64, spec: &IntegratorSpec) -> Result<Trajectory, OdeError> {
    integrate_system(&JerkFlow { params: *p }, 0.0, &s0.to_array(), t_end, spec)
}

/// Source of the 2×2 Jacobian of the return-map displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShootJacobian {
    /// Forward differences with step `fd_rel · (1 + ‖q‖)`.
    FiniteDifference,
    /// Return-map derivative from the variational equations.
    Variational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootSettings {
    /// Converged once `‖P(q) − q‖ < shoot_tol`.
    pub shoot_tol: f64,
    pub max_iter: usize,
    pub fd_rel: f64,
    pub jacobian: ShootJacobian,
    /// Give up on a return after this much time.
    pub max_return_time: f64,
}

impl Default for ShootSettings {
    fn default() -> Self {
        Self {
            shoot_tol: 1e-10,
            max_iter: 40,
            fd_rel: 1e-7,
            jacobian: ShootJacobian::FiniteDifference,
            max_return_time: 100.0,
        }
    }
}

/// Where the flow meets `Σ` again.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    /// Full state at the crossing (3 or 12 components).
    pub state: Vec<f64>,
    pub time: f64,
}

/// Flows `y0` forward to the next downward crossing of `z = 0` with `y > 0`.
///
/// The crossing is refined by Newton on the step length `τ` of a single
/// Runge–Kutta step from the start of the bracketing step, using `ż` from
/// the vector field, until `|z| < 1e-13`.
pub fn next_crossing<S: OdeSystem + ?Sized>(
    sys: &S,
    y0: &[f64],
    spec: &IntegratorSpec,
    max_time: f64,
) -> Result<Crossing, OrbitError> {
    let mut stepper = Stepper::new(sys, 0.0, y0, *spec)?;
    let mut dy = vec![0.0; y0.len()];
    while stepper.t() < max_time {
        let step = stepper.step(max_time)?;
        let (z0, z1) = (step.y0[2], step.y1[2]);
        if !(z0 > 0.0 && z1 <= 0.0) {
            continue;
        }
        let h = step.t1 - step.t0;
        let mut tau = h * z0 / (z0 - z1);
        let mut state = single_step(sys, spec.method, step.t0, &step.y0, tau);
        for _ in 0..30 {
            sys.rhs(step.t0 + tau, &state, &mut dy);
            if state[2].abs() < 1e-13 || dy[2] == 0.0 {
                break;
            }
            let next = tau - state[2] / dy[2];
            let next = if next > 0.0 && next <= h { next } else { 0.5 * tau };
            if (next - tau).abs() <= 1e-16 * (1.0 + step.t0) {
                break;
            }
            tau = next;
            state = single_step(sys, spec.method, step.t0, &step.y0, tau);
        }
        if state[1] > 0.0 {
            return Ok(Crossing { state, time: step.t0 + tau });
        }
    }
    Err(OrbitError::NoReturn(max_time))
}

/// First return of `(x, y, 0)` to `Σ`: the new `(x, y)` and the flight time.
pub fn poincare_return(
    p: &SystemParams,
    q: [f64; 2],
    spec: &IntegratorSpec,
    max_time: f64,
) -> Result<([f64; 2], f64), OrbitError> {
    let c = next_crossing(&JerkFlow { params: *p }, &[q[0], q[1], 0.0], spec, max_time)?;
    Ok(([c.state[0], c.state[1]], c.time))
}

fn with_identity(s: [f64; 3]) -> Vec<f64> {
    let mut y = vec![0.0; 12];
    y[..3].copy_from_slice(&s);
    y[3] = 1.0;
    y[7] = 1.0;
    y[11] = 1.0;
    y
}

/// A first return with the derivative of the return map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnJacobian {
    pub point: [f64; 2],
    pub time: f64,
    /// `DP(q)`, row-major.
    pub dp: [[f64; 2]; 2],
}

/// First return together with its 2×2 derivative `DP(q)`.
///
/// With `Φ` the fundamental matrix at the crossing and `f` the field there,
/// `DPᵢⱼ = Φᵢⱼ − fᵢ Φ_zⱼ / f_z` for `i, j ∈ {x, y}`.
pub fn poincare_return_with_derivative(
    p: &SystemParams,
    q: [f64; 2],
    spec: &IntegratorSpec,
    max_time: f64,
) -> Result<ReturnJacobian, OrbitError> {
    let c = next_crossing(&JerkVariational { params: *p }, &with_identity([q[0], q[1], 0.0]), spec, max_time)?;
    let y = &c.state;
    let f = vector_field(p, &State3::new(y[0], y[1], y[2]));
    let fv = [f.x, f.y, f.z];
    let phi = |r: usize, col: usize| y[3 + r * 3 + col];
    let dp = [0, 1].map(|i| [0, 1].map(|j| phi(i, j) - fv[i] * phi(2, j) / fv[2]));
    Ok(ReturnJacobian { point: [y[0], y[1]], time: c.time, dp })
}

/// Fundamental matrix after integrating the variational equations for `period` from `(q, 0)`.
pub fn monodromy(p: &SystemParams, q: [f64; 2], period: f64, spec: &IntegratorSpec) -> Result<[[f64; 3]; 3], OrbitError> {
    let traj = integrate_system(&JerkVariational { params: *p }, 0.0, &with_identity([q[0], q[1], 0.0]), period, spec)?;
    let y = traj.final_state();
    let mut m = [[0.0; 3]; 3];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = y[3 + r * 3 + c];
        }
    }
    Ok(m)
}

/// Eigenvalues of a 3×3 matrix, sorted by real part then imaginary part.
pub fn eigenvalues3(m: &[[f64; 3]; 3]) -> [Complex64; 3] {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    cubic_roots(1.0, -tr, minors, -det)
}

/// Splits monodromy eigenvalues into the trivial one (closest to 1) and the other two.
pub fn floquet_multipliers(m: &[[f64; 3]; 3]) -> (Complex64, [Complex64; 2]) {
    let eig = eigenvalues3(m);
    let trivial = (0..3)
        .min_by(|&a, &b| (eig[a] - 1.0).norm().total_cmp(&(eig[b] - 1.0).norm()))
        .expect("three eigenvalues");
    let rest: Vec<Complex64> = (0..3).filter(|&i| i != trivial).map(|i| eig[i]).collect();
    (eig[trivial], [rest[0], rest[1]])
}

/// Which reading of the section seed produced a converged orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedVariant {
    /// `ε (w, r)`: the image of `(u, v, w) = (r, 0, w)` under the Jordan change.
    Jordan,
    /// `ε (w + r/δ, r)`: the alternative form `X = w + u/δ`.
    Shifted,
}

/// Both candidate section seeds for an averaged root `(r, w)`.
pub fn section_seeds(seed: [f64; 2], eps: f64, delta: f64) -> [(SeedVariant, [f64; 2]); 2] {
    let [r, w] = seed;
    [
        (SeedVariant::Jordan, [eps * w, eps * r]),
        (SeedVariant::Shifted, [eps * (w + r / delta), eps * r]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitRecord {
    pub eps: f64,
    /// `(x, y)` on `Σ`.
    pub section_point: [f64; 2],
    pub period: f64,
    /// `‖P(q) − q‖` at the reported point.
    pub residual: f64,
    /// The two nontrivial monodromy eigenvalues.
    pub floquet: [Complex64; 2],
    /// The eigenvalue closest to 1.
    pub trivial_multiplier: Complex64,
    /// Averaged root `(r, w)` the search started from.
    pub seed: [f64; 2],
    pub seed_variant: SeedVariant,
    pub newton_iterations: usize,
}

impl PeriodicOrbitRecord {
    pub fn state(&self) -> State3 {
        State3::new(self.section_point[0], self.section_point[1], 0.0)
    }
}

/// A converged fixed point of the return map before post-processing.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub point: [f64; 2],
    pub period: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton on `P(q) − q` from `q0`.
pub fn shoot_from(
    p: &SystemParams,
    q0: [f64; 2],
    spec: &IntegratorSpec,
    settings: &ShootSettings,
) -> Result<FixedPoint, OrbitError> {
    let tmax = settings.max_return_time;
    let displacement = |q: &[f64]| -> Result<Vec<f64>, OrbitError> {
        let (pq, _) = poincare_return(p, [q[0], q[1]], spec, tmax)?;
        Ok(vec![pq[0] - q[0], pq[1] - q[1]])
    };
    let newton = NewtonSettings {
        tol: settings.shoot_tol,
        max_iter: settings.max_iter,
        max_halvings: 30,
        fd: FdScheme::Forward(settings.fd_rel),
    };
    let mode = settings.jacobian;
    let fd_rel = settings.fd_rel;
    let out = damped_newton_with(
        displacement,
        |f: &mut Residual<OrbitError>, x: &[f64], fx: &[f64]| match mode {
            ShootJacobian::FiniteDifference => {
                let mut g = |y: &[f64]| f(y);
                fd_jacobian(&mut g, x, fx, FdScheme::Forward(fd_rel))
            }
            ShootJacobian::Variational => {
                let dp = poincare_return_with_derivative(p, [x[0], x[1]], spec, tmax)?.dp;
                Ok(DMatrix::from_row_slice(2, 2, &[dp[0][0] - 1.0, dp[0][1], dp[1][0], dp[1][1] - 1.0]))
            }
        },
        &q0,
        &newton,
    )
    .map_err(|e: NewtonError| OrbitError::ShootingDiverged(e.to_string()))?;
    let point = [out.x[0], out.x[1]];
    let (ret, period) = poincare_return(p, point, spec, tmax)?;
    let residual = norm(&[ret[0] - point[0], ret[1] - point[1]]);
    if !(residual < settings.shoot_tol) || !(point[1] > 0.0) {
        return Err(OrbitError::ShootingDiverged(format!("residual {residual:e} at {point:?}")));
    }
    Ok(FixedPoint { point, period, residual, iterations: out.iterations })
}

fn finish_record(
    p: &SystemParams,
    eps: f64,
    seed: [f64; 2],
    variant: SeedVariant,
    fp: FixedPoint,
    spec: &IntegratorSpec,
) -> Result<PeriodicOrbitRecord, OrbitError> {
    let m = monodromy(p, fp.point, fp.period, spec)?;
    let (trivial, floquet) = floquet_multipliers(&m);
    Ok(PeriodicOrbitRecord {
        eps,
        section_point: fp.point,
        period: fp.period,
        residual: fp.residual,
        floquet,
        trivial_multiplier: trivial,
        seed,
        seed_variant: variant,
        newton_iterations: fp.iterations,
    })
}

/// Locates the periodic orbit born from the averaged root `seed = (r, w)`.
///
/// Shoots from the [`SeedVariant::Jordan`] seed and falls back to the
/// [`SeedVariant::Shifted`] one only if that fails. A fallback result is
/// logged with its distance from the Jordan seed, since the shifted seed is
/// `O(ε)` away and may land on a neighbouring orbit.
pub fn shoot_orbit(
    u: &UnfoldingParams,
    eps: f64,
    seed: [f64; 2],
    spec: &IntegratorSpec,
    settings: &ShootSettings,
) -> Result<PeriodicOrbitRecord, OrbitError> {
    u.validate()?;
    if !(seed[0] > 0.0) {
        return Err(OrbitError::SeedInvalid(seed[0]));
    }
    let p = unfold(u, eps);
    let seeds = section_seeds(seed, eps, u.delta);
    let jordan_seed = seeds[0].1;
    let mut failures = Vec::new();
    for (variant, q0) in seeds {
        match shoot_from(&p, q0, spec, settings) {
            Ok(fp) => {
                if variant == SeedVariant::Shifted {
                    let gap = norm(&[fp.point[0] - jordan_seed[0], fp.point[1] - jordan_seed[1]]);
                    warn!("root {seed:?} at eps {eps} converged only from the shifted seed, {gap:e} from the Jordan seed");
                }
                return finish_record(&p, eps, seed, variant, fp, spec);
            }
            Err(e) => {
                debug!("seed {variant:?} {q0:?} failed: {e}");
                failures.push(format!("{variant:?}: {e}"));
            }
        }
    }
    Err(OrbitError::ShootingDiverged(failures.join("; ")))
}

/// Shoots from every root of the closed-form `g`, in [`predicted_roots`] order.
pub fn locate_orbits(
    u: &UnfoldingParams,
    eps: f64,
    spec: &IntegratorSpec,
    settings: &ShootSettings,
) -> Result<Vec<Result<PeriodicOrbitRecord, OrbitError>>, OrbitError> {
    u.validate()?;
    let roots = predicted_roots(u.a2, u.b2, u.delta).roots;
    Ok(roots.iter().map(|&seed| shoot_orbit(u, eps, seed, spec, settings)).collect())
}

/// Number of pairwise distinct section points, `tol` apart in max-norm.
pub fn count_distinct(records: &[&PeriodicOrbitRecord], tol: f64) -> usize {
    let mut kept: Vec<[f64; 2]> = Vec::new();
    for r in records {
        let q = r.section_point;
        if kept.iter().all(|k| (k[0] - q[0]).abs().max((k[1] - q[1]).abs()) > tol) {
            kept.push(q);
        }
    }
    kept.len()
}

/// Uniform samples `(t, x, y, z)` over one period, endpoints included.
pub fn orbit_trace(
    p: &SystemParams,
    record: &PeriodicOrbitRecord,
    samples: usize,
    spec: &IntegratorSpec,
) -> Result<Vec<[f64; 4]>, OrbitError> {
    let traj = integrate(p, &record.state(), record.period, spec)?;
    let n = samples.max(2);
    Ok((0..n)
        .map(|k| {
            let t = record.period * k as f64 / (n - 1) as f64;
            let y = traj.sample(t);
            [t, y[0], y[1], y[2]]
        })
        .collect())
}

/// Per-orbit scaling diagnostics across an ε-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFit {
    pub seed: [f64; 2],
    /// Log-log slope of `‖section point‖` against ε.
    pub amplitude_slope: Option<f64>,
    /// Log-log slope of `‖section point − ε (w, r)‖` against ε.
    pub seed_error_slope: Option<f64>,
    /// Same, against the shifted seed `ε (w + r/δ, r)`.
    pub shifted_seed_error_slope: Option<f64>,
    /// Max-abs coordinate of the section point strictly decreases as ε decreases.
    pub amplitude_monotone: bool,
    /// Number of ε values at which the orbit was found.
    pub converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    /// One slot per predicted root; `Err` holds the failure message.
    pub orbits: Vec<Result<PeriodicOrbitRecord, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub fits: Vec<OrbitFit>,
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two usable points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Shoots every predicted orbit for each ε in `eps_list` (positive, decreasing).
///
/// After the first ε each orbit is warm-started from its previous fixed point
/// scaled by the ε ratio, falling back to the averaged seeds. Failures are
/// recorded per entry and do not abort the sweep.
pub fn sweep_epsilon(
    u: &UnfoldingParams,
    eps_list: &[f64],
    spec: &IntegratorSpec,
    settings: &ShootSettings,
) -> Result<SweepReport, OrbitError> {
    u.validate()?;
    let roots = predicted_roots(u.a2, u.b2, u.delta).roots;
    let mut entries: Vec<SweepEntry> = Vec::with_capacity(eps_list.len());
    let mut previous: Vec<Option<(f64, [f64; 2])>> = vec![None; roots.len()];

    for &eps in eps_list {
        let p = unfold(u, eps);
        let mut orbits = Vec::with_capacity(roots.len());
        for (i, &seed) in roots.iter().enumerate() {
            let warm = previous[i].and_then(|(e0, q)| {
                let ratio = eps / e0;
                let q0 = [q[0] * ratio, q[1] * ratio];
                match shoot_from(&p, q0, spec, settings) {
                    Ok(fp) => Some(fp),
                    Err(e) => {
                        debug!("warm start for root {i} at eps {eps} failed: {e}");
                        None
                    }
                }
            });
            let result = match warm {
                Some(fp) => finish_record(&p, eps, seed, SeedVariant::Jordan, fp, spec),
                None => shoot_orbit(u, eps, seed, spec, settings),
            };
            previous[i] = result.as_ref().ok().map(|r| (eps, r.section_point));
            orbits.push(result.map_err(|e| e.to_string()));
        }
        entries.push(SweepEntry { eps, orbits });
    }

    let fits = roots
        .iter()
        .enumerate()
        .map(|(i, &seed)| {
            let hits: Vec<&PeriodicOrbitRecord> = entries.iter().filter_map(|e| e.orbits[i].as_ref().ok()).collect();
            let amp: Vec<(f64, f64)> = hits.iter().map(|r| (r.eps, norm(&r.section_point))).collect();
            let err_to = |variant: SeedVariant| -> Vec<(f64, f64)> {
                hits.iter()
                    .map(|r| {
                        let s = section_seeds(seed, r.eps, u.delta);
                        let q = if variant == SeedVariant::Jordan { s[0].1 } else { s[1].1 };
                        (r.eps, norm(&[r.section_point[0] - q[0], r.section_point[1] - q[1]]))
                    })
                    .collect()
            };
            let max_coord: Vec<f64> = hits
                .iter()
                .map(|r| r.section_point[0].abs().max(r.section_point[1].abs()))
                .collect();
            OrbitFit {
                seed,
                amplitude_slope: log_log_slope(&amp),
                seed_error_slope: log_log_slope(&err_to(SeedVariant::Jordan)),
                shifted_seed_error_slope: log_log_slope(&err_to(SeedVariant::Shifted)),
                amplitude_monotone: hits.len() == eps_list.len() && max_coord.windows(2).all(|w| w[1] < w[0]),
                converged: hits.len(),
            }
        })
        .collect();
    Ok(SweepReport { entries, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_flow_half_turn() {
        let p = SystemParams::new(0.0, 0.0, -4.0);
        let traj = integrate(&p, &State3::new(0.0, 1e-6, 0.0), 0.5 * PI, &IntegratorSpec::default()).unwrap();
        assert!((traj.final_state()[1] + 1e-6).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_stays_put() {
        let p = SystemParams::new(0.3, -1.0, 0.5);
        let traj = integrate(&p, &State3::new(1.0, 0.0, 0.0), 5.0, &IntegratorSpec::default()).unwrap();
        let y = traj.final_state();
        assert!((y[0] - 1.0).abs() < 1e-12 && y[1].abs() < 1e-12 && y[2].abs() < 1e-12);
    }

    #[test]
    fn small_amplitude_return_time() {
        let p = SystemParams::new(0.0, 0.0, -4.0);
        let (q, t) = poincare_return(&p, [0.0, 1e-4], &IntegratorSpec::default(), 100.0).unwrap();
        assert!((t - PI).abs() < 1e-6, "{t}");
        assert!((q[1] - 1e-4).abs() < 1e-10);
    }

    #[test]
    fn crossing_lands_on_section() {
        let p = unfold(&UnfoldingParams::three_orbit_example(), 0.1);
        let c = next_crossing(&JerkFlow { params: p }, &[0.2, 0.4, 0.0], &IntegratorSpec::default(), 100.0).unwrap();
        assert!(c.state[2].abs() < 1e-13);
        assert!(c.state[1] > 0.0);
        assert!((c.time - PI).abs() < 0.1 * PI);
    }

    #[test]
    fn variational_return_derivative_matches_differences() {
        let p = unfold(&UnfoldingParams::three_orbit_example(), 0.1);
        let spec = IntegratorSpec::default();
        let q = [0.05, 0.42];
        let dp = poincare_return_with_derivative(&p, q, &spec, 100.0).unwrap().dp;
        let h = 1e-6;
        for j in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[j] += h;
            qm[j] -= h;
            let (a, _) = poincare_return(&p, qp, &spec, 100.0).unwrap();
            let (b, _) = poincare_return(&p, qm, &spec, 100.0).unwrap();
            for i in 0..2 {
                let fd = (a[i] - b[i]) / (2.0 * h);
                assert!((fd - dp[i][j]).abs() < 1e-5, "DP[{i}][{j}]: {fd} vs {}", dp[i][j]);
            }
        }
    }

    #[test]
    fn log_log_slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&e| (e, 3.0 * e * e)).collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }

    #[test]
    fn seeds_for_root() {
        let s = section_seeds([4.0, 0.0], 0.1, 2.0);
        assert_eq!(s[0], (SeedVariant::Jordan, [0.0, 0.4]));
        assert!((s[1].1[0] - 0.2).abs() < 1e-16 && (s[1].1[1] - 0.4).abs() < 1e-16);
    }

    #[test]
    fn rejects_nonpositive_seed() {
        let err = shoot_orbit(
            &UnfoldingParams::three_orbit_example(),
            0.1,
            [0.0, 1.0],
            &IntegratorSpec::default(),
            &ShootSettings::default(),
        )
        .unwrap_err();
        assert_eq!(err, OrbitError::SeedInvalid(0.0));
    }

    #[test]
    fn eigenvalues_of_rotation_block() {
        let m = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]];
        let (trivial, rest) = floquet_multipliers(&m);
        assert!((trivial - 2.0).norm() < 1e-14 || (trivial - Complex64::i()).norm() < 1e-14);
        let all = [trivial, rest[0], rest[1]];
        for target in [Complex64::i(), -Complex64::i(), Complex64::new(2.0, 0.0)] {
            assert!(all.iter().any(|z| (z - target).norm() < 1e-12));
        }
    }
}
