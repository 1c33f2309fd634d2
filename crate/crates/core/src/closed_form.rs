//! Closed-form averaged functions of the unfolded jerk system, their positive
//! zeros, Jacobian determinants and the resulting orbit-count classification.
//!
//! With `A = a₂δ²`, `B = b₂`, `D = 3 − δ²` the zeros of `g` with `r > 0` are
//!
//! ```text
//! family 1:  r² = 4(A − B)δ²/D,           w = 0
//! family 2:  r² = −4(A + 2B)δ²/(5D),       w² = (2A − B)/5   (two roots ±w)
//! ```
//!
//! Family 2 needs both `r² > 0` and `w² > 0`. Because
//! `2A − B = (D/3)(Q₊ + 5Q₋)` with `Q₊ = (A + 2B)/D`, `Q₋ = (A − B)/D`, the
//! sign of `w²` is not fixed by the signs of `Q₊, Q₋` alone, so
//! [`classify`] counts roots using all three conditions while
//! [`sign_region`] reports the plain `(Q₊, Q₋)` sign pattern.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance from a degenerate hypersurface below which a parameter triple is treated as on it.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(DegenerateReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegenerateReason {
    /// `δ² = 3`: the cubic term of `g` vanishes and zeros are not isolated.
    DeltaSquaredThree,
    /// `2a₂δ² = b₂`: the two root families merge at `w = 0`.
    FamiliesMerge,
    /// `a₂δ² = b₂`: family 1 collapses onto `r = 0`.
    FirstFamilyAtOrigin,
    /// `a₂δ² = −2b₂`: family 2 collapses onto `r = 0`.
    SecondFamilyAtOrigin,
    /// `δ ≤ 0` or non-finite input.
    InvalidDelta,
}

impl std::fmt::Display for DegenerateReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DegenerateReason::DeltaSquaredThree => "delta^2 = 3",
            DegenerateReason::FamiliesMerge => "2 a2 delta^2 = b2",
            DegenerateReason::FirstFamilyAtOrigin => "a2 delta^2 = b2",
            DegenerateReason::SecondFamilyAtOrigin => "a2 delta^2 = -2 b2",
            DegenerateReason::InvalidDelta => "delta must be positive and finite",
        };
        f.write_str(s)
    }
}

/// Number of periodic orbits bifurcating from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitCase {
    Three,
    Two,
    One,
    Zero,
}

impl OrbitCase {
    pub fn count(self) -> usize {
        match self {
            OrbitCase::Three => 3,
            OrbitCase::Two => 2,
            OrbitCase::One => 1,
            OrbitCase::Zero => 0,
        }
    }

    fn from_count(n: usize) -> Self {
        match n {
            3 => OrbitCase::Three,
            2 => OrbitCase::Two,
            1 => OrbitCase::One,
            0 => OrbitCase::Zero,
            _ => unreachable!("at most three roots"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionCount {
    Three,
    Two,
    One,
    Zero,
    Degenerate(DegenerateReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitPrediction {
    /// `(r, w)` zeros of `g` with `r > 0`; family 1 first, then `+w`, then `−w`.
    pub roots: Vec<[f64; 2]>,
    pub jac_dets: Vec<f64>,
    pub count: PredictionCount,
}

/// First-order averaged function.
pub fn f_closed(r: f64, w: f64, a1: f64, b1: f64, delta: f64) -> [f64; 2] {
    let d3 = delta.powi(3);
    [r * (b1 - a1 * delta * delta) / (2.0 * d3), -b1 * w / d3]
}

/// Second-order averaged function (valid when `a₁ = b₁ = 0`).
pub fn g_closed(r: f64, w: f64, a2: f64, b2: f64, delta: f64) -> [f64; 2] {
    let d2 = delta * delta;
    let scale = 1.0 / (2.0 * d2 * d2 * delta);
    let cubic = (3.0 - d2) * r * r;
    [
        scale * r * (cubic + 4.0 * b2 * d2 - 4.0 * a2 * d2 * d2 + 12.0 * d2 * w * w) / 4.0,
        -scale * w * (cubic + 2.0 * b2 * d2 + 2.0 * d2 * w * w),
    ]
}

/// Analytic Jacobian determinant of `g` on family 1.
pub fn jac_det_first_family(a2: f64, b2: f64, delta: f64) -> f64 {
    let a = a2 * delta * delta;
    -(a - b2) * (2.0 * a - b2) / delta.powi(6)
}

/// Analytic Jacobian determinant of `g` on family 2.
pub fn jac_det_second_family(a2: f64, b2: f64, delta: f64) -> f64 {
    let a = a2 * delta * delta;
    -2.0 * (a + 2.0 * b2) * (2.0 * a - b2) / (5.0 * delta.powi(6))
}

fn degeneracy(a2: f64, b2: f64, delta: f64) -> Option<DegenerateReason> {
    if !(delta > 0.0) || !delta.is_finite() || !a2.is_finite() || !b2.is_finite() {
        return Some(DegenerateReason::InvalidDelta);
    }
    let d2 = delta * delta;
    let a = a2 * d2;
    if (3.0 - d2).abs() < DEGENERACY_TOL {
        Some(DegenerateReason::DeltaSquaredThree)
    } else if (2.0 * a - b2).abs() < DEGENERACY_TOL {
        Some(DegenerateReason::FamiliesMerge)
    } else if (a - b2).abs() < DEGENERACY_TOL {
        Some(DegenerateReason::FirstFamilyAtOrigin)
    } else if (a + 2.0 * b2).abs() < DEGENERACY_TOL {
        Some(DegenerateReason::SecondFamilyAtOrigin)
    } else {
        None
    }
}

pub fn predicted_roots(a2: f64, b2: f64, delta: f64) -> OrbitPrediction {
    if let Some(reason) = degeneracy(a2, b2, delta) {
        return OrbitPrediction {
            roots: Vec::new(),
            jac_dets: Vec::new(),
            count: PredictionCount::Degenerate(reason),
        };
    }
    let d2 = delta * delta;
    let a = a2 * d2;
    let den = 3.0 - d2;
    let mut roots = Vec::new();
    let mut jac_dets = Vec::new();

    let r1_sq = 4.0 * (a - b2) * d2 / den;
    if r1_sq > 0.0 {
        roots.push([r1_sq.sqrt(), 0.0]);
        jac_dets.push(jac_det_first_family(a2, b2, delta));
    }
    let r2_sq = -4.0 * (a + 2.0 * b2) * d2 / (5.0 * den);
    let w2_sq = (2.0 * a - b2) / 5.0;
    if r2_sq > 0.0 && w2_sq > 0.0 {
        let (r, w) = (r2_sq.sqrt(), w2_sq.sqrt());
        let det = jac_det_second_family(a2, b2, delta);
        roots.push([r, w]);
        roots.push([r, -w]);
        jac_dets.extend([det, det]);
    }
    let count = match OrbitCase::from_count(roots.len()) {
        OrbitCase::Three => PredictionCount::Three,
        OrbitCase::Two => PredictionCount::Two,
        OrbitCase::One => PredictionCount::One,
        OrbitCase::Zero => PredictionCount::Zero,
    };
    OrbitPrediction { roots, jac_dets, count }
}

/// `(Q₊, Q₋) = ((a₂δ² + 2b₂)/(3 − δ²), (a₂δ² − b₂)/(3 − δ²))`.
pub fn quotients(a2: f64, b2: f64, delta: f64) -> (f64, f64) {
    let d2 = delta * delta;
    let a = a2 * d2;
    ((a + 2.0 * b2) / (3.0 - d2), (a - b2) / (3.0 - d2))
}

fn checked_quotients(a2: f64, b2: f64, delta: f64) -> Result<(f64, f64), ClosedFormError> {
    match degeneracy(a2, b2, delta) {
        Some(reason) => Err(ClosedFormError::HypothesisViolated(reason)),
        None => Ok(quotients(a2, b2, delta)),
    }
}

/// Orbit count read off the sign pattern of `(Q₊, Q₋)` only:
/// `Q₊ < 0, Q₋ > 0 → Three`, `Q₊ < 0, Q₋ < 0 → Two`, `Q₊ > 0, Q₋ > 0 → One`,
/// `Q₊ > 0, Q₋ < 0 → Zero`.
pub fn sign_region(a2: f64, b2: f64, delta: f64) -> Result<OrbitCase, ClosedFormError> {
    let (qp, qm) = checked_quotients(a2, b2, delta)?;
    Ok(match (qp < 0.0, qm > 0.0) {
        (true, true) => OrbitCase::Three,
        (true, false) => OrbitCase::Two,
        (false, true) => OrbitCase::One,
        (false, false) => OrbitCase::Zero,
    })
}

/// Number of positive-radius zeros of `g`, i.e. of bifurcating orbits.
///
/// Agrees with [`sign_region`] except where the second family has
/// `r² > 0` but `w² < 0`, in which case its pair of roots is absent.
pub fn classify(a2: f64, b2: f64, delta: f64) -> Result<OrbitCase, ClosedFormError> {
    let (qp, qm) = checked_quotients(a2, b2, delta)?;
    let d2 = delta * delta;
    let w_sq_positive = 2.0 * a2 * d2 - b2 > 0.0;
    let first = usize::from(qm > 0.0);
    let second = if qp < 0.0 && w_sq_positive { 2 } else { 0 };
    Ok(OrbitCase::from_count(first + second))
}
