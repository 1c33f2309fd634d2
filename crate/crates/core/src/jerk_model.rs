//! The 3-D jerk system
//!
//! ```text
//! ẋ = y,   ẏ = z,   ż = −a z − b x + c y + x y² − x³
//! ```
//!
//! together with its equilibria and an eigenvalue-based classification of
//! them. The origin is a zero-Hopf equilibrium exactly when `a = b = 0` and
//! `c < 0`, with eigenvalues `0, ±i√(−c)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cubic::cubic_roots;

/// Default tolerance used to decide that an eigenvalue (or real part) is zero.
pub const DEFAULT_TOL_EIG: f64 = 1e-10;

/// Residual below which a point is accepted as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("point is not an equilibrium (residual {residual:e})")]
    NotAnEquilibrium { residual: f64 },
}

/// Physical parameters `(a, b, c)` of the jerk system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Damping coefficient (multiplies `z`).
    pub a: f64,
    /// Position coefficient (multiplies `x`).
    pub b: f64,
    /// Velocity coefficient (multiplies `y`).
    pub c: f64,
}

impl SystemParams {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }
}

/// A point `(x, y, z)` of phase space: position, velocity, acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State3 {
    pub const ORIGIN: State3 = State3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    ZeroHopf,
    Hyperbolic,
    OtherNonHyperbolic,
}

/// Result of [`classify_equilibrium`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumClass {
    pub point: State3,
    /// Roots of the characteristic cubic, sorted by real part then imaginary part.
    pub eigenvalues: [Complex64; 3],
    pub kind: EquilibriumKind,
}

pub fn vector_field(p: &SystemParams, s: &State3) -> State3 {
    let State3 { x, y, z } = *s;
    State3 {
        x: y,
        y: z,
        z: -p.a * z - p.b * x + p.c * y + x * y * y - x * x * x,
    }
}

/// Jacobian of [`vector_field`] at `s`, row-major.
pub fn jacobian_at(p: &SystemParams, s: &State3) -> [[f64; 3]; 3] {
    let State3 { x, y, .. } = *s;
    [
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [-p.b + y * y - 3.0 * x * x, p.c + 2.0 * x * y, -p.a],
    ]
}

/// All equilibria `(x, 0, 0)` with `x = 0` or `x² = −b`.
///
/// For `b = 0` the triple root collapses to the origin alone.
pub fn equilibria(p: &SystemParams) -> Vec<State3> {
    let mut out = vec![State3::ORIGIN];
    if p.b < 0.0 {
        let x = (-p.b).sqrt();
        out.push(State3::new(x, 0.0, 0.0));
        out.push(State3::new(-x, 0.0, 0.0));
    }
    out
}

/// Characteristic polynomial `p(λ) = −λ³ − a λ² + c λ − b − 3x²` of the
/// linearization at the equilibrium `(x, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoly {
    /// Coefficients of `λ³, λ², λ, 1`.
    pub coeffs: [f64; 4],
}

impl CharPoly {
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let [c3, c2, c1, c0] = self.coeffs;
        ((lambda * c3 + c2) * lambda + c1) * lambda + c0
    }

    pub fn roots(&self) -> [Complex64; 3] {
        let [c3, c2, c1, c0] = self.coeffs;
        cubic_roots(c3, c2, c1, c0)
    }

    /// Largest coefficient magnitude, used to scale residual checks.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

pub fn char_poly(p: &SystemParams, x: f64) -> CharPoly {
    CharPoly {
        coeffs: [-1.0, -p.a, p.c, -p.b - 3.0 * x * x],
    }
}

pub fn classify_equilibrium(
    p: &SystemParams,
    s: &State3,
    tol_eig: f64,
) -> Result<EquilibriumClass, ModelError> {
    let residual = vector_field(p, s).norm();
    if !(residual < EQUILIBRIUM_TOL * (1.0 + s.norm().powi(3))) {
        return Err(ModelError::NotAnEquilibrium { residual });
    }
    let eigenvalues = char_poly(p, s.x).roots();
    Ok(EquilibriumClass {
        point: *s,
        eigenvalues,
        kind: kind_of(&eigenvalues, tol_eig),
    })
}

fn kind_of(eig: &[Complex64; 3], tol: f64) -> EquilibriumKind {
    for i in 0..3 {
        if eig[i].norm() >= tol {
            continue;
        }
        let (j, k) = match i {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (l1, l2) = (eig[j], eig[k]);
        let conjugate = (l1 - l2.conj()).norm() < tol;
        if conjugate && l1.re.abs() < tol && l2.re.abs() < tol && l1.im.abs() > tol {
            return EquilibriumKind::ZeroHopf;
        }
    }
    if eig.iter().all(|l| l.re.abs() >= tol) {
        EquilibriumKind::Hyperbolic
    } else {
        EquilibriumKind::OtherNonHyperbolic
    }
}
