//! Explicit Runge–Kutta integrators: adaptive Dormand–Prince 5(4) with its
//! continuous extension, and classical fixed-step RK4 with Hermite dense output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step limit of {0} exceeded")]
    StepLimitExceeded(usize),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("invalid integrator settings: {0}")]
    InvalidSpec(String),
}

/// A first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSpec {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the step; the fixed step for [`Method::Rk4Fixed`].
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            max_step: 0.1,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorSpec {
    pub fn validate(&self) -> Result<(), OdeError> {
        let ok = self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_step > 0.0 && self.max_steps > 0;
        if !ok || !self.max_step.is_finite() {
            return Err(OdeError::InvalidSpec(format!("{self:?}")));
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolant over one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Dense {
    /// Dormand–Prince continuous extension (4th order).
    Dopri { t0: f64, h: f64, r: [Vec<f64>; 5] },
    /// Cubic Hermite from endpoint values and slopes.
    Hermite { t0: f64, h: f64, y0: Vec<f64>, y1: Vec<f64>, f0: Vec<f64>, f1: Vec<f64> },
}

impl Dense {
    pub fn t0(&self) -> f64 {
        match self {
            Dense::Dopri { t0, .. } | Dense::Hermite { t0, .. } => *t0,
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            Dense::Dopri { h, .. } | Dense::Hermite { h, .. } => *h,
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self {
            Dense::Dopri { t0, h, r } => {
                let s = (t - t0) / h;
                let s1 = 1.0 - s;
                (0..r[0].len())
                    .map(|i| r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i]))))
                    .collect()
            }
            Dense::Hermite { t0, h, y0, y1, f0, f1 } => {
                let s = (t - t0) / h;
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                (0..y0.len())
                    .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
                    .collect()
            }
        }
    }
}

/// One accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub dense: Dense,
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

struct DopriStages {
    k: [Vec<f64>; 7],
    y5: Vec<f64>,
    err: Vec<f64>,
}

/// One Dormand–Prince step from `(t, y)` with size `h`; `k1 = f(t, y)`.
fn dopri_stages<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], h: f64, k1: &[f64]) -> DopriStages {
    let n = y.len();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    k[0].copy_from_slice(k1);
    let mut tmp = vec![0.0; n];

    axpy(&mut tmp, y, h, &[(A21, &k[0])]);
    sys.rhs(t + C2 * h, &tmp, &mut k[1]);
    axpy(&mut tmp, y, h, &[(A31, &k[0]), (A32, &k[1])]);
    sys.rhs(t + C3 * h, &tmp, &mut k[2]);
    axpy(&mut tmp, y, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])]);
    sys.rhs(t + C4 * h, &tmp, &mut k[3]);
    axpy(&mut tmp, y, h, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])]);
    sys.rhs(t + C5 * h, &tmp, &mut k[4]);
    axpy(&mut tmp, y, h, &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])]);
    sys.rhs(t + h, &tmp, &mut k[5]);
    let mut y5 = vec![0.0; n];
    axpy(&mut y5, y, h, &[(A71, &k[0]), (A73, &k[2]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])]);
    sys.rhs(t + h, &y5, &mut k[6]);

    let err = (0..n)
        .map(|i| h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]))
        .collect();
    DopriStages { k, y5, err }
}

fn rk4_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], h: f64, k1: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    axpy(&mut tmp, y, 0.5 * h, &[(1.0, k1)]);
    sys.rhs(t + 0.5 * h, &tmp, &mut k2);
    axpy(&mut tmp, y, 0.5 * h, &[(1.0, &k2)]);
    sys.rhs(t + 0.5 * h, &tmp, &mut k3);
    axpy(&mut tmp, y, h, &[(1.0, &k3)]);
    sys.rhs(t + h, &tmp, &mut k4);
    let mut out = vec![0.0; n];
    axpy(&mut out, y, h / 6.0, &[(1.0, k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
    out
}

/// A single untested step of the given method from `(t, y)`, used to land
/// exactly on event times.
pub fn single_step<S: OdeSystem + ?Sized>(sys: &S, method: Method, t: f64, y: &[f64], h: f64) -> Vec<f64> {
    let mut k1 = vec![0.0; y.len()];
    sys.rhs(t, y, &mut k1);
    match method {
        Method::Rk45Adaptive => dopri_stages(sys, t, y, h, &k1).y5,
        Method::Rk4Fixed => rk4_step(sys, t, y, h, &k1),
    }
}

/// Step-by-step driver. Each call to [`Stepper::step`] returns one accepted step.
pub struct Stepper<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    spec: IntegratorSpec,
    t: f64,
    y: Vec<f64>,
    f: Vec<f64>,
    h: f64,
    steps: usize,
}

impl<'a, S: OdeSystem + ?Sized> Stepper<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], spec: IntegratorSpec) -> Result<Self, OdeError> {
        spec.validate()?;
        let mut f = vec![0.0; y0.len()];
        sys.rhs(t0, y0, &mut f);
        let mut stepper = Self { sys, spec, t: t0, y: y0.to_vec(), f, h: 0.0, steps: 0 };
        stepper.h = match spec.method {
            Method::Rk4Fixed => spec.max_step,
            Method::Rk45Adaptive => stepper.initial_step(),
        };
        Ok(stepper)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn scaled_norm(&self, v: &[f64], y0: &[f64], y1: &[f64]) -> f64 {
        let n = v.len() as f64;
        let sum: f64 = (0..v.len())
            .map(|i| {
                let sc = self.spec.abs_tol + self.spec.rel_tol * y0[i].abs().max(y1[i].abs());
                (v[i] / sc).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    /// Starting step after Hairer, Nørsett & Wanner, II.4.
    fn initial_step(&self) -> f64 {
        let d0 = self.scaled_norm(&self.y, &self.y, &self.y);
        let d1 = self.scaled_norm(&self.f, &self.y, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.spec.max_step);
        let n = self.y.len();
        let mut y1 = vec![0.0; n];
        axpy(&mut y1, &self.y, h0, &[(1.0, &self.f)]);
        let mut f1 = vec![0.0; n];
        self.sys.rhs(self.t + h0, &y1, &mut f1);
        let df: Vec<f64> = f1.iter().zip(&self.f).map(|(a, b)| a - b).collect();
        let d2 = self.scaled_norm(&df, &self.y, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.spec.max_step)
    }

    /// Advances by one accepted step, never past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<Step, OdeError> {
        if self.steps >= self.spec.max_steps {
            return Err(OdeError::StepLimitExceeded(self.spec.max_steps));
        }
        let remaining = t_limit - self.t;
        match self.spec.method {
            Method::Rk4Fixed => {
                let h = self.spec.max_step.min(remaining);
                let y1 = rk4_step(self.sys, self.t, &self.y, h, &self.f);
                self.accept_hermite(h, y1)
            }
            Method::Rk45Adaptive => loop {
                let mut h = self.h.min(self.spec.max_step);
                let last = h >= remaining;
                if last {
                    h = remaining;
                }
                if h.abs() < 1e-14 * (1.0 + self.t.abs()) {
                    return Err(OdeError::StepUnderflow { t: self.t, h });
                }
                let st = dopri_stages(self.sys, self.t, &self.y, h, &self.f);
                let err = self.scaled_norm(&st.err, &self.y, &st.y5);
                if !err.is_finite() {
                    self.h = 0.25 * h;
                    continue;
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if err <= 1.0 {
                    let next_h = h * fac;
                    // Keep the proposal from the previous step when this one was clipped.
                    self.h = if last { self.h.max(next_h) } else { next_h };
                    return self.accept_dopri(h, st);
                }
                self.h = h * fac.min(1.0);
            },
        }
    }

    fn accept_dopri(&mut self, h: f64, st: DopriStages) -> Result<Step, OdeError> {
        if st.y5.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFinite(self.t + h));
        }
        let n = self.y.len();
        let k = &st.k;
        let r0 = self.y.clone();
        let r1: Vec<f64> = (0..n).map(|i| st.y5[i] - self.y[i]).collect();
        let r2: Vec<f64> = (0..n).map(|i| h * k[0][i] - r1[i]).collect();
        let r3: Vec<f64> = (0..n).map(|i| r1[i] - h * k[6][i] - r2[i]).collect();
        let r4: Vec<f64> = (0..n)
            .map(|i| h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]))
            .collect();
        let t0 = self.t;
        let step = Step {
            t0,
            t1: t0 + h,
            y0: self.y.clone(),
            y1: st.y5.clone(),
            dense: Dense::Dopri { t0, h, r: [r0, r1, r2, r3, r4] },
        };
        self.t = t0 + h;
        self.y = st.y5;
        self.f.copy_from_slice(&k[6]);
        self.steps += 1;
        Ok(step)
    }

    fn accept_hermite(&mut self, h: f64, y1: Vec<f64>) -> Result<Step, OdeError> {
        if y1.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFinite(self.t + h));
        }
        let mut f1 = vec![0.0; y1.len()];
        self.sys.rhs(self.t + h, &y1, &mut f1);
        let t0 = self.t;
        let step = Step {
            t0,
            t1: t0 + h,
            y0: self.y.clone(),
            y1: y1.clone(),
            dense: Dense::Hermite { t0, h, y0: self.y.clone(), y1: y1.clone(), f0: self.f.clone(), f1: f1.clone() },
        };
        self.t = t0 + h;
        self.y = y1;
        self.f = f1;
        self.steps += 1;
        Ok(step)
    }
}

/// Accepted steps of an integration with dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    segments: Vec<Dense>,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial point")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial point")
    }

    /// State at any `t` within the integrated range.
    pub fn sample(&self, t: f64) -> Vec<f64> {
        if self.segments.is_empty() || t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= self.t_end() {
            return self.final_state().to_vec();
        }
        let i = self.times.partition_point(|&x| x <= t).saturating_sub(1);
        self.segments[i.min(self.segments.len() - 1)].eval(t)
    }
}

/// Integrates `sys` from `(t0, y0)` to `t_end`.
pub fn integrate_system<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    spec: &IntegratorSpec,
) -> Result<Trajectory, OdeError> {
    if !(t_end > t0) {
        return Err(OdeError::InvalidSpec(format!("t_end ({t_end}) must exceed t0 ({t0})")));
    }
    let mut stepper = Stepper::new(sys, t0, y0, *spec)?;
    let mut traj = Trajectory { times: vec![t0], states: vec![y0.to_vec()], segments: Vec::new() };
    while stepper.t() < t_end {
        let step = stepper.step(t_end)?;
        traj.times.push(step.t1);
        traj.states.push(step.y1);
        traj.segments.push(step.dense);
    }
    Ok(traj)
}
