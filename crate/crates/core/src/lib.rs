//! Averaging-theory toolkit for the zero-Hopf bifurcation of the 3-D jerk system.
//!
//! The crate goes from the physical system to periodic orbits in five layers:
//!
//! - [`jerk_model`]: the vector field, its equilibria and their classification;
//! - [`normal_form`]: unfolding, scaling and the coordinate changes that bring the
//!   system into periodic standard form `ε F₁ + ε² F₂`;
//! - [`averaging`]: numeric first/second-order averaged functions, zero finding
//!   and the Jacobian-determinant degree test, for any [`StandardForm`];
//! - [`closed_form`]: the analytic averaged functions for the jerk system, their
//!   roots and the orbit-count classifier;
//! - [`orbit`]: Poincaré-section shooting on the full nonlinear system, seeded by
//!   the averaged roots, with Floquet multipliers and ε-sweeps.

// Negated comparisons route NaN to the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod closed_form;
pub mod cubic;
pub mod jerk_model;
pub mod newton;
pub mod normal_form;
pub mod ode;
pub mod orbit;
pub mod quadrature;

pub use averaging::{average_first, average_second, find_roots, AveragedRoot, DegreeSign, QuadratureSpec, RootSearch};
pub use closed_form::{classify, f_closed, g_closed, predicted_roots, OrbitCase, OrbitPrediction, PredictionCount};
pub use jerk_model::{classify_equilibrium, equilibria, vector_field, EquilibriumClass, EquilibriumKind, State3, SystemParams};
pub use normal_form::{jerk_standard_form, JerkStandardForm, StandardForm, UnfoldingParams};
pub use ode::{IntegratorSpec, Method};
pub use quadrature::QuadratureRule;
pub use orbit::{shoot_orbit, sweep_epsilon, OrbitError, PeriodicOrbitRecord, ShootJacobian, ShootSettings, SweepReport};
