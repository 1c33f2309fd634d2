//! Coordinate pipeline from the unfolded jerk system to averaging standard form.
//!
//! The chain is
//!
//! 1. unfolding `(a, b, c) = (ε a₁ + ε² a₂, ε b₁ + ε² b₂, −δ² + ε c₁ + ε² c₂)`;
//! 2. scaling `(x, y, z) = ε (X, Y, Z)` (no change of time);
//! 3. the linear change `X = w + v/δ, Y = u, Z = −δ v` that puts the linear
//!    part into real Jordan form;
//! 4. cylindrical coordinates `u = r cos θ, v = r sin θ`;
//! 5. `θ` as the new independent variable, giving a 2π-periodic system in
//!    `(r, w)` of the form `ε F₁ + ε² F₂ + O(ε³)`.
//!
//! Every intermediate vector field is exposed so that the steps can be checked
//! against each other numerically.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jerk_model::{State3, SystemParams};

/// Smallest |ε| accepted by [`scale_state`].
pub const MIN_EPSILON: f64 = 1e-300;

/// Threshold on `|r + ε cos θ (h₁ + ε h₂)|` below which the θ-reparametrization breaks down.
pub const SINGULAR_DENOMINATOR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("epsilon {0:e} is too close to zero to scale by")]
    DegenerateEpsilon(f64),
    #[error("theta reparametrization is singular (denominator {0:e})")]
    SingularDenominator(f64),
    #[error("invalid unfolding parameters: {0}")]
    InvalidParams(String),
}

/// Unfolding coefficients of the jerk parameters around the zero-Hopf point `(0, 0, −δ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnfoldingParams {
    #[serde(default)]
    pub a1: f64,
    pub a2: f64,
    #[serde(default)]
    pub b1: f64,
    pub b2: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    pub delta: f64,
}

impl UnfoldingParams {
    /// Second-order unfolding (`a₁ = b₁ = 0`), the setting in which first-order averaging vanishes.
    pub fn second_order(a2: f64, b2: f64, c1: f64, c2: f64, delta: f64) -> Self {
        Self { a1: 0.0, a2, b1: 0.0, b2, c1, c2, delta }
    }

    /// `δ = 2, a₂ = 1, b₂ = 5, c₁ = c₂ = 0`: three orbits bifurcate from the origin.
    pub fn three_orbit_example() -> Self {
        Self::second_order(1.0, 5.0, 0.0, 0.0, 2.0)
    }

    pub fn validate(&self) -> Result<(), NormalFormError> {
        let all = [self.a1, self.a2, self.b1, self.b2, self.c1, self.c2, self.delta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(NormalFormError::InvalidParams("non-finite coefficient".into()));
        }
        if self.delta <= 0.0 {
            return Err(NormalFormError::InvalidParams(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn unfold(&self, eps: f64) -> SystemParams {
        unfold(self, eps)
    }
}

/// State after the Jordan-form linear change.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JordanState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl JordanState {
    pub fn new(u: f64, v: f64, w: f64) -> Self {
        Self { u, v, w }
    }
}

/// Cylindrical coordinates over the Jordan state. `theta` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CylState {
    pub r: f64,
    pub theta: f64,
    pub w: f64,
}

impl CylState {
    pub fn new(r: f64, theta: f64, w: f64) -> Self {
        Self { r, theta, w }
    }

    pub fn from_jordan(j: &JordanState) -> Self {
        Self {
            r: j.u.hypot(j.v),
            theta: j.v.atan2(j.u),
            w: j.w,
        }
    }

    pub fn to_jordan(&self) -> JordanState {
        let (s, c) = self.theta.sin_cos();
        JordanState::new(self.r * c, self.r * s, self.w)
    }
}

pub fn unfold(u: &UnfoldingParams, eps: f64) -> SystemParams {
    let e2 = eps * eps;
    SystemParams {
        a: eps * u.a1 + e2 * u.a2,
        b: eps * u.b1 + e2 * u.b2,
        c: -u.delta * u.delta + eps * u.c1 + e2 * u.c2,
    }
}

/// Physical state to scaled state: divides by ε.
pub fn scale_state(s: &State3, eps: f64) -> Result<State3, NormalFormError> {
    if !(eps.abs() >= MIN_EPSILON) {
        return Err(NormalFormError::DegenerateEpsilon(eps));
    }
    Ok(State3::new(s.x / eps, s.y / eps, s.z / eps))
}

/// Scaled state to physical state: multiplies by ε.
pub fn unscale_state(s: &State3, eps: f64) -> State3 {
    State3::new(s.x * eps, s.y * eps, s.z * eps)
}

pub fn jordan_to_xyz(j: &JordanState, delta: f64) -> State3 {
    State3::new(j.w + j.v / delta, j.u, -delta * j.v)
}

pub fn xyz_to_jordan(s: &State3, delta: f64) -> JordanState {
    JordanState::new(s.y, -s.z / delta, s.x + s.z / (delta * delta))
}

/// First-order perturbation term of the Jordan-form system.
pub fn h1(j: &JordanState, p: &UnfoldingParams) -> f64 {
    let d = p.delta;
    let d2 = d * d;
    p.b1 * j.v / (d2 * d) - (p.c1 * j.u - p.b1 * j.w) / d2 - p.a1 * j.v / d
}

/// Second-order perturbation term of the Jordan-form system.
pub fn h2(j: &JordanState, p: &UnfoldingParams) -> f64 {
    let JordanState { u, v, w } = *j;
    let d = p.delta;
    let d2 = d * d;
    let d3 = d2 * d;
    v * v * v / (d3 * d2) + 3.0 * v * v * w / (d2 * d2) + (p.b2 - u * u + 3.0 * w * w) * v / d3
        - (p.c2 * u + (u * u - p.b2) * w - w * w * w) / d2
        - p.a2 * v / d
}

/// The scaled jerk system in `(X, Y, Z)`.
pub fn scaled_field(p: &UnfoldingParams, eps: f64, s: &State3) -> State3 {
    let State3 { x, y, z } = *s;
    let first = -p.a1 * z - p.b1 * x + p.c1 * y;
    let second = -p.a2 * z - p.b2 * x + p.c2 * y + x * y * y - x * x * x;
    State3::new(y, z, -p.delta * p.delta * y + eps * first + eps * eps * second)
}

/// The jerk system in Jordan coordinates `(u, v, w)`.
pub fn jordan_field(p: &UnfoldingParams, eps: f64, j: &JordanState) -> JordanState {
    let h = h1(j, p) + eps * h2(j, p);
    JordanState::new(-p.delta * j.v, p.delta * j.u + eps * p.delta * h, -eps * h)
}

/// Time derivatives `(θ̇, ṙ, ẇ)` in cylindrical coordinates.
pub fn cylindrical_field(p: &UnfoldingParams, eps: f64, c: &CylState) -> [f64; 3] {
    let (s, co) = c.theta.sin_cos();
    let j = c.to_jordan();
    let h = h1(&j, p) + eps * h2(&j, p);
    [
        p.delta + eps * p.delta * co * h / c.r,
        eps * p.delta * s * h,
        -eps * h,
    ]
}

/// Exact `(dr/dθ, dw/dθ)` of the θ-parametrized system (no ε truncation).
pub fn theta_rhs(c: &CylState, p: &UnfoldingParams, eps: f64) -> Result<[f64; 2], NormalFormError> {
    let (s, co) = c.theta.sin_cos();
    let j = c.to_jordan();
    let h = h1(&j, p) + eps * h2(&j, p);
    let den = c.r + eps * co * h;
    if !(den.abs() >= SINGULAR_DENOMINATOR_TOL) {
        return Err(NormalFormError::SingularDenominator(den));
    }
    let q = eps * h * c.r / den;
    Ok([q * s, -q / p.delta])
}

/// A `T`-periodic system `ż = ε F₁(z, t) + ε² F₂(z, t)` in averaging standard form.
///
/// Evaluators write into caller-provided buffers of length `dim()`
/// (`dim()²`, row-major, for the Jacobian).
pub trait StandardForm {
    fn dim(&self) -> usize;
    fn period(&self) -> f64;
    fn f1(&self, z: &[f64], t: f64, out: &mut [f64]);
    fn f2(&self, z: &[f64], t: f64, out: &mut [f64]);
    /// Analytic `D_z F₁`. Returns `false` when unavailable, in which case
    /// callers fall back to finite differences.
    fn df1(&self, _z: &[f64], _t: f64, _out: &mut [f64]) -> bool {
        false
    }
}

/// Standard form built from closures; handy for tests and ad-hoc systems.
pub struct ClosureStandardForm<F1, F2>
where
    F1: Fn(&[f64], f64, &mut [f64]),
    F2: Fn(&[f64], f64, &mut [f64]),
{
    pub dim: usize,
    pub period: f64,
    pub f1: F1,
    pub f2: F2,
}

impl<F1, F2> StandardForm for ClosureStandardForm<F1, F2>
where
    F1: Fn(&[f64], f64, &mut [f64]),
    F2: Fn(&[f64], f64, &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn period(&self) -> f64 {
        self.period
    }
    fn f1(&self, z: &[f64], t: f64, out: &mut [f64]) {
        (self.f1)(z, t, out)
    }
    fn f2(&self, z: &[f64], t: f64, out: &mut [f64]) {
        (self.f2)(z, t, out)
    }
}

/// The jerk system in standard form: `t = θ`, `T = 2π`, `z = (r, w)`.
///
/// `F₁ = h₁ (sin θ, −1/δ)` and `F₂ = (h₂ r − h₁² cos θ)/r · (sin θ, −1/δ)`,
/// which are the ε and ε² Taylor coefficients of [`theta_rhs`].
#[derive(Debug, Clone, Copy)]
pub struct JerkStandardForm {
    pub params: UnfoldingParams,
}

pub fn jerk_standard_form(params: UnfoldingParams) -> Result<JerkStandardForm, NormalFormError> {
    params.validate()?;
    Ok(JerkStandardForm { params })
}

impl JerkStandardForm {
    fn jordan(z: &[f64], theta: f64) -> (JordanState, f64, f64) {
        let (s, c) = theta.sin_cos();
        (JordanState::new(z[0] * c, z[0] * s, z[1]), s, c)
    }
}

impl StandardForm for JerkStandardForm {
    fn dim(&self) -> usize {
        2
    }

    fn period(&self) -> f64 {
        TAU
    }

    fn f1(&self, z: &[f64], t: f64, out: &mut [f64]) {
        let (j, s, _) = Self::jordan(z, t);
        let h = h1(&j, &self.params);
        out[0] = h * s;
        out[1] = -h / self.params.delta;
    }

    fn f2(&self, z: &[f64], t: f64, out: &mut [f64]) {
        let (j, s, c) = Self::jordan(z, t);
        let g1 = h1(&j, &self.params);
        let g2 = h2(&j, &self.params);
        let k = (g2 * z[0] - g1 * g1 * c) / z[0];
        out[0] = k * s;
        out[1] = -k / self.params.delta;
    }

    fn df1(&self, _z: &[f64], t: f64, out: &mut [f64]) -> bool {
        // h₁ = α u + β v + γ w is linear in (u, v, w).
        let p = &self.params;
        let d = p.delta;
        let alpha = -p.c1 / (d * d);
        let beta = p.b1 / (d * d * d) - p.a1 / d;
        let gamma = p.b1 / (d * d);
        let (s, c) = t.sin_cos();
        let dh_dr = alpha * c + beta * s;
        let dh_dw = gamma;
        out[0] = s * dh_dr;
        out[1] = s * dh_dw;
        out[2] = -dh_dr / d;
        out[3] = -dh_dw / d;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: UnfoldingParams = UnfoldingParams {
        a1: 0.0,
        a2: 1.0,
        b1: 0.0,
        b2: 5.0,
        c1: 0.0,
        c2: 0.0,
        delta: 2.0,
    };

    #[test]
    fn unfold_examples() {
        let p = unfold(&FIG, 0.1);
        assert!((p.a - 0.01).abs() < 1e-17);
        assert!((p.b - 0.05).abs() < 1e-16);
        assert_eq!(p.c, -4.0);

        let gen = UnfoldingParams { a1: 0.3, a2: -2.0, b1: 1.0, b2: 4.0, c1: 2.0, c2: 7.0, delta: 1.5 };
        assert_eq!(unfold(&gen, 0.0), SystemParams::new(0.0, 0.0, -2.25));

        let only_a1 = UnfoldingParams { a1: 1.0, a2: 0.0, b1: 0.0, b2: 0.0, c1: 0.0, c2: 0.0, delta: 1.0 };
        assert_eq!(unfold(&only_a1, 0.5), SystemParams::new(0.5, 0.0, -1.0));
    }

    #[test]
    fn scaling_examples() {
        let s = scale_state(&State3::new(0.2, 0.4, 0.0), 0.1).unwrap();
        assert!((s.x - 2.0).abs() < 1e-15 && (s.y - 4.0).abs() < 1e-15 && s.z == 0.0);
        let q = State3::new(1.25, -3.5, 0.75);
        assert_eq!(scale_state(&q, 1.0).unwrap(), q);
        assert_eq!(unscale_state(&q, 1.0), q);
        assert!(matches!(scale_state(&q, 0.0), Err(NormalFormError::DegenerateEpsilon(_))));
    }

    #[test]
    fn jordan_section_point() {
        // θ = 0 ⇒ v = 0 ⇒ (X, Y, Z) = (w, r, 0).
        let s = jordan_to_xyz(&JordanState::new(4.0, 0.0, 0.5), 2.0);
        assert_eq!(s, State3::new(0.5, 4.0, 0.0));
        assert_eq!(jordan_to_xyz(&JordanState::default(), 2.0), State3::ORIGIN);
    }

    #[test]
    fn h_examples() {
        let p = UnfoldingParams { a1: 0.0, a2: 0.7, b1: 0.0, b2: -1.0, c1: 1.3, c2: 0.2, delta: 1.7 };
        let j = JordanState::new(0.9, -0.4, 0.25);
        assert!((h1(&j, &p) + 1.3 * 0.9 / (1.7 * 1.7)).abs() < 1e-15);
        assert_eq!(h1(&JordanState::default(), &p), 0.0);
        assert_eq!(h2(&JordanState::default(), &p), 0.0);
        let q = UnfoldingParams { a1: 0.0, a2: 0.0, b1: 0.0, b2: 0.0, c1: 0.0, c2: 0.0, delta: 1.0 };
        assert_eq!(h2(&JordanState::new(0.0, 1.0, 0.0), &q), 1.0);
    }

    /// `h₁ + ε h₂` must equal `−(ż-perturbation)/δ²`; checked against the scaled field.
    #[test]
    fn jordan_field_matches_scaled_field() {
        let p = UnfoldingParams { a1: 0.4, a2: -1.1, b1: 0.8, b2: 2.2, c1: -0.6, c2: 0.9, delta: 1.3 };
        let eps = 0.07;
        for &(u, v, w) in &[(0.3, -1.2, 0.5), (2.0, 0.1, -0.7), (-0.4, 0.9, 1.9)] {
            let j = JordanState::new(u, v, w);
            let s = jordan_to_xyz(&j, p.delta);
            let ds = scaled_field(&p, eps, &s);
            // Push the XYZ derivative through the (linear) inverse change.
            let dj_expected = xyz_to_jordan(&ds, p.delta);
            let dj = jordan_field(&p, eps, &j);
            assert!((dj.u - dj_expected.u).abs() < 1e-13);
            assert!((dj.v - dj_expected.v).abs() < 1e-13);
            assert!((dj.w - dj_expected.w).abs() < 1e-13);
        }
    }

    #[test]
    fn cylindrical_field_matches_jordan_field() {
        let p = UnfoldingParams { a1: 0.4, a2: -1.1, b1: 0.8, b2: 2.2, c1: -0.6, c2: 0.9, delta: 1.3 };
        let eps = 0.05;
        let c = CylState::new(1.7, 0.9, -0.3);
        let j = c.to_jordan();
        let dj = jordan_field(&p, eps, &j);
        let [dtheta, dr, dw] = cylindrical_field(&p, eps, &c);
        let (s, co) = c.theta.sin_cos();
        // u̇ = ṙ cos θ − r θ̇ sin θ, v̇ = ṙ sin θ + r θ̇ cos θ
        assert!((dj.u - (dr * co - c.r * dtheta * s)).abs() < 1e-13);
        assert!((dj.v - (dr * s + c.r * dtheta * co)).abs() < 1e-13);
        assert!((dj.w - dw).abs() < 1e-15);
    }

    #[test]
    fn theta_rhs_is_quotient_of_cylindrical_field() {
        let p = UnfoldingParams { a1: 0.2, a2: 0.5, b1: -0.3, b2: 1.0, c1: 0.6, c2: -0.4, delta: 2.0 };
        let c = CylState::new(3.0, 2.3, 0.4);
        let eps = 0.1;
        let [dtheta, dr, dw] = cylindrical_field(&p, eps, &c);
        let [rr, ww] = theta_rhs(&c, &p, eps).unwrap();
        assert!((rr - dr / dtheta).abs() < 1e-14);
        assert!((ww - dw / dtheta).abs() < 1e-14);
    }

    #[test]
    fn theta_rhs_vanishes_at_zero_epsilon() {
        let c = CylState::new(1.0, 0.7, 0.2);
        assert_eq!(theta_rhs(&c, &FIG, 0.0).unwrap(), [0.0, -0.0]);
    }

    #[test]
    fn theta_rhs_radial_rate_vanishes_on_section() {
        let c = CylState::new(1.0, 0.0, 0.3);
        let [dr, _] = theta_rhs(&c, &FIG, 0.05).unwrap();
        assert_eq!(dr, 0.0);
    }

    #[test]
    fn theta_rhs_singular_guard() {
        let c = CylState::new(0.0, 0.0, 0.0);
        assert!(matches!(
            theta_rhs(&c, &FIG, 0.1),
            Err(NormalFormError::SingularDenominator(_))
        ));
    }

    /// Residual of the exact θ-system minus its first-order term scales like ε²,
    /// and minus both standard-form terms like ε³.
    #[test]
    fn theta_rhs_expansion_orders() {
        let p = UnfoldingParams { a1: 0.3, a2: 0.5, b1: -0.4, b2: 1.0, c1: 0.6, c2: -0.4, delta: 1.4 };
        let sys = jerk_standard_form(p).unwrap();
        let c = CylState::new(1.3, 0.8, 0.45);
        let z = [c.r, c.w];
        let mut f1 = [0.0; 2];
        let mut f2 = [0.0; 2];
        sys.f1(&z, c.theta, &mut f1);
        sys.f2(&z, c.theta, &mut f2);
        let err = |eps: f64, order: usize| {
            let exact = theta_rhs(&c, &p, eps).unwrap();
            let mut e = 0.0_f64;
            for i in 0..2 {
                let approx = eps * f1[i] + if order == 2 { eps * eps * f2[i] } else { 0.0 };
                e = e.max((exact[i] - approx).abs());
            }
            e
        };
        for order in [1usize, 2] {
            let ratio = err(1e-2, order) / err(1e-3, order);
            let expected = 10f64.powi(order as i32 + 1);
            assert!(
                (ratio / expected - 1.0).abs() < 0.05,
                "order {order}: ratio {ratio}, expected {expected}"
            );
        }
    }

    #[test]
    fn first_order_terms_vanish_without_a1_b1_c1() {
        let p = UnfoldingParams::second_order(0.8, -1.5, 0.0, 0.9, 1.1);
        let sys = jerk_standard_form(p).unwrap();
        let mut out = [1.0; 2];
        for k in 0..20 {
            let t = k as f64 * 0.37;
            sys.f1(&[0.5 + 0.1 * k as f64, -0.3 + 0.05 * k as f64], t, &mut out);
            assert_eq!(out, [0.0, -0.0]);
        }
    }

    #[test]
    fn f1_examples() {
        let p = UnfoldingParams::second_order(0.0, 0.0, 1.0, 0.0, 1.0);
        let sys = jerk_standard_form(p).unwrap();
        let mut out = [9.0; 2];
        sys.f1(&[1.0, 0.0], std::f64::consts::FRAC_PI_2, &mut out);
        assert!(out[0].abs() < 1e-16 && out[1].abs() < 1e-16);

        let sys = jerk_standard_form(FIG).unwrap();
        let mut f2 = [9.0; 2];
        sys.f2(&[3.0, 0.0], 0.0, &mut f2);
        let j = JordanState::new(3.0, 0.0, 0.0);
        let expected = -(h2(&j, &FIG) * 3.0 - h1(&j, &FIG).powi(2)) / (3.0 * 2.0);
        assert_eq!(f2[0], 0.0);
        assert!((f2[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn df1_matches_finite_differences() {
        let p = UnfoldingParams { a1: 0.7, a2: 0.0, b1: -1.2, b2: 0.0, c1: 0.4, c2: 0.0, delta: 0.9 };
        let sys = jerk_standard_form(p).unwrap();
        let z = [1.4, -0.6];
        let t = 2.1;
        let mut jac = [0.0; 4];
        assert!(sys.df1(&z, t, &mut jac));
        let h = 1e-6;
        for col in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[col] += h;
            zm[col] -= h;
            let (mut fp, mut fm) = ([0.0; 2], [0.0; 2]);
            sys.f1(&zp, t, &mut fp);
            sys.f1(&zm, t, &mut fm);
            for row in 0..2 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!((fd - jac[row * 2 + col]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn standard_form_is_periodic() {
        let p = UnfoldingParams { a1: 0.7, a2: 0.2, b1: -1.2, b2: 0.3, c1: 0.4, c2: -0.8, delta: 0.9 };
        let sys = jerk_standard_form(p).unwrap();
        for k in 0..10 {
            let z = [0.3 + 0.4 * k as f64, -1.0 + 0.2 * k as f64];
            let t = 0.61 * k as f64;
            let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
            sys.f1(&z, t, &mut a);
            sys.f1(&z, t + TAU, &mut b);
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
            sys.f2(&z, t, &mut a);
            sys.f2(&z, t + TAU, &mut b);
            assert!((a[0] - b[0]).abs() < 1e-12 * (1.0 + a[0].abs()) && (a[1] - b[1]).abs() < 1e-12 * (1.0 + a[1].abs()));
        }
    }

    #[test]
    fn validate_rejects_bad_delta() {
        let mut p = FIG;
        p.delta = 0.0;
        assert!(jerk_standard_form(p).is_err());
        p.delta = f64::NAN;
        assert!(p.validate().is_err());
    }
}
