//! First- and second-order averaged functions of a [`StandardForm`] system,
//! zero finding on them, and the Jacobian-determinant degree certificate.
//!
//! ```text
//! f(z) = (1/T) ∫₀ᵀ F₁(z, s) ds
//! g(z) = (1/T) ∫₀ᵀ [ D_z F₁(z, s) · ∫₀ˢ F₁(z, t) dt + F₂(z, s) ] ds
//! ```
//!
//! Both integrals are evaluated at `N` and `2N` outer nodes; the `2N` value is
//! returned and the difference is reported as a convergence diagnostic.

use std::convert::Infallible;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::newton::{damped_newton, fd_jacobian, norm, FdScheme, NewtonSettings};
use crate::normal_form::StandardForm;
use crate::quadrature::{MappedRule, QuadratureRule};

/// Node agreement below which no accuracy warning is attached.
pub const QUADRATURE_WARN_TOL: f64 = 1e-12;
/// Node disagreement above which the quadrature is rejected.
pub const QUADRATURE_FAIL_TOL: f64 = 1e-6;

/// Points (GL) or subintervals (Simpson) of the local rule used for partial inner integrals.
const LOCAL_ORDER: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AveragingError {
    #[error("quadrature did not converge: N and 2N nodes differ by {discrepancy:e}")]
    QuadratureNotConverged { discrepancy: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: system has {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Outer rule size `N`: Gauss points or Simpson subintervals.
    pub nodes: usize,
    /// Number `M` of breakpoints of the cumulative inner integral.
    pub inner_nodes: usize,
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 48,
            inner_nodes: 32,
            rule: QuadratureRule::GaussLegendre,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), AveragingError> {
        if self.nodes < 16 || self.inner_nodes < 16 {
            return Err(AveragingError::InvalidSpec(format!(
                "nodes ({}) and inner_nodes ({}) must both be at least 16",
                self.nodes, self.inner_nodes
            )));
        }
        Ok(())
    }
}

/// An averaged value with its `N` vs `2N` discrepancy.
#[derive(Debug, Clone, PartialEq)]
pub struct Averaged {
    pub value: Vec<f64>,
    pub discrepancy: f64,
    /// Set when the discrepancy exceeds [`QUADRATURE_WARN_TOL`].
    pub accuracy_warning: bool,
}

fn checked<S: StandardForm + ?Sized>(
    sys: &S,
    z: &[f64],
    q: &QuadratureSpec,
    eval: impl Fn(usize) -> Vec<f64>,
) -> Result<Averaged, AveragingError> {
    q.validate()?;
    if z.len() != sys.dim() {
        return Err(AveragingError::DimensionMismatch { expected: sys.dim(), got: z.len() });
    }
    let coarse = eval(q.nodes);
    let fine = eval(2 * q.nodes);
    let discrepancy = coarse
        .iter()
        .zip(&fine)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if !(discrepancy <= QUADRATURE_FAIL_TOL) {
        return Err(AveragingError::QuadratureNotConverged { discrepancy });
    }
    Ok(Averaged {
        value: fine,
        discrepancy,
        accuracy_warning: discrepancy > QUADRATURE_WARN_TOL,
    })
}

/// First-order averaged function `f(z)`.
pub fn average_first<S: StandardForm + ?Sized>(
    sys: &S,
    z: &[f64],
    q: &QuadratureSpec,
) -> Result<Averaged, AveragingError> {
    checked(sys, z, q, |n| first_with(sys, z, q.rule, n))
}

/// Second-order averaged function `g(z)`.
///
/// Uses the analytic `D_z F₁` when the system provides one, central
/// differences otherwise.
pub fn average_second<S: StandardForm + ?Sized>(
    sys: &S,
    z: &[f64],
    q: &QuadratureSpec,
) -> Result<Averaged, AveragingError> {
    checked(sys, z, q, |n| second_with(sys, z, q.rule, n, q.inner_nodes))
}

fn first_with<S: StandardForm + ?Sized>(sys: &S, z: &[f64], rule: QuadratureRule, n: usize) -> Vec<f64> {
    let period = sys.period();
    let outer = MappedRule::new(rule, n, 0.0, period);
    let mut v = outer.integrate(sys.dim(), |t, out| sys.f1(z, t, out));
    v.iter_mut().for_each(|x| *x /= period);
    v
}

/// Prefix integrals `∫₀^{t_j} F₁` on `M` equal subintervals, plus a local rule
/// for the remainder up to an arbitrary `s`.
struct CumulativeF1<'a, S: StandardForm + ?Sized> {
    sys: &'a S,
    z: &'a [f64],
    local: MappedRule,
    width: f64,
    prefix: Vec<Vec<f64>>,
}

impl<'a, S: StandardForm + ?Sized> CumulativeF1<'a, S> {
    fn new(sys: &'a S, z: &'a [f64], rule: QuadratureRule, m: usize) -> Self {
        let local = MappedRule::new(rule, LOCAL_ORDER, 0.0, 1.0);
        let width = sys.period() / m as f64;
        let mut prefix = Vec::with_capacity(m + 1);
        prefix.push(vec![0.0; sys.dim()]);
        for j in 0..m {
            let a = j as f64 * width;
            let piece = local.integrate_affine(a, width, sys.dim(), |t, out| sys.f1(z, t, out));
            let next: Vec<f64> = prefix[j].iter().zip(&piece).map(|(p, q)| p + q).collect();
            prefix.push(next);
        }
        Self { sys, z, local, width, prefix }
    }

    fn at(&self, s: f64) -> Vec<f64> {
        let m = self.prefix.len() - 1;
        let j = ((s / self.width).floor() as usize).min(m);
        let start = j as f64 * self.width;
        if s - start <= 0.0 {
            return self.prefix[j].clone();
        }
        let tail = self
            .local
            .integrate_affine(start, s - start, self.sys.dim(), |t, out| self.sys.f1(self.z, t, out));
        self.prefix[j].iter().zip(&tail).map(|(p, q)| p + q).collect()
    }
}

fn second_with<S: StandardForm + ?Sized>(
    sys: &S,
    z: &[f64],
    rule: QuadratureRule,
    n: usize,
    m: usize,
) -> Vec<f64> {
    let dim = sys.dim();
    let period = sys.period();
    let inner = CumulativeF1::new(sys, z, rule, m);
    let outer = MappedRule::new(rule, n, 0.0, period);
    let mut jac = vec![0.0; dim * dim];
    let mut v = outer.integrate(dim, |s, out| {
        if !sys.df1(z, s, &mut jac) {
            fd_df1(sys, z, s, &mut jac);
        }
        let y1 = inner.at(s);
        sys.f2(z, s, out);
        for i in 0..dim {
            out[i] += (0..dim).map(|k| jac[i * dim + k] * y1[k]).sum::<f64>();
        }
    });
    v.iter_mut().for_each(|x| *x /= period);
    v
}

fn fd_df1<S: StandardForm + ?Sized>(sys: &S, z: &[f64], t: f64, jac: &mut [f64]) {
    let dim = sys.dim();
    let mut probe = z.to_vec();
    let mut fp = vec![0.0; dim];
    let mut fm = vec![0.0; dim];
    for k in 0..dim {
        let h = 1e-6 * (1.0 + z[k].abs());
        probe[k] = z[k] + h;
        sys.f1(&probe, t, &mut fp);
        probe[k] = z[k] - h;
        sys.f1(&probe, t, &mut fm);
        probe[k] = z[k];
        for i in 0..dim {
            jac[i * dim + k] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
}

/// Sign of the Jacobian determinant at a zero, i.e. the local Brouwer degree
/// when the determinant is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeSign {
    Plus,
    Minus,
    Degenerate,
}

impl DegreeSign {
    pub fn from_det(det: f64, det_tol: f64) -> Self {
        if !(det.abs() >= det_tol) {
            DegreeSign::Degenerate
        } else if det > 0.0 {
            DegreeSign::Plus
        } else {
            DegreeSign::Minus
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRoot {
    pub z: Vec<f64>,
    pub residual: f64,
    pub jac_det: f64,
    pub degree_sign: DegreeSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSearch {
    /// Cells per axis.
    pub grid: Vec<usize>,
    pub root_tol: f64,
    pub det_tol: f64,
    /// Roots closer than this (max-norm) are merged.
    pub dedup_tol: f64,
}

impl RootSearch {
    pub fn with_dim(dim: usize) -> Self {
        Self {
            grid: vec![32; dim],
            root_tol: 1e-10,
            det_tol: 1e-8,
            dedup_tol: 1e-6,
        }
    }
}

/// Central-difference Jacobian determinant with step `1e-6·(1 + |zᵢ|)`.
pub fn jacobian_determinant<F>(fun: &F, z: &[f64]) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut wrapped = |x: &[f64]| -> Result<Vec<f64>, Infallible> { Ok(fun(x)) };
    let fz = fun(z);
    let jac: DMatrix<f64> = match fd_jacobian(&mut wrapped, z, &fz, FdScheme::Central(1e-6)) {
        Ok(j) => j,
        Err(e) => match e {},
    };
    jac.determinant()
}

/// Zeros of `fun` inside the box `bounds`.
///
/// Seeds are the centres of grid cells where every component of `fun`
/// changes sign across the cell corners, or where `‖fun‖` at the centre is a
/// local minimum over the axis-neighbouring cells. Each seed runs damped
/// Newton; converged points inside the box are deduplicated and returned in
/// lexicographic order.
pub fn find_roots<F>(fun: F, bounds: &[(f64, f64)], search: &RootSearch) -> Vec<AveragedRoot>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let dim = bounds.len();
    assert_eq!(search.grid.len(), dim, "grid must give one cell count per axis");
    assert!(bounds.iter().all(|(lo, hi)| lo < hi), "box must be nonempty");

    let cells = &search.grid;
    let widths: Vec<f64> = bounds
        .iter()
        .zip(cells)
        .map(|((lo, hi), &c)| (hi - lo) / c as f64)
        .collect();

    // Corner values on the (cells + 1)ⁿ lattice.
    let corner_dims: Vec<usize> = cells.iter().map(|c| c + 1).collect();
    let corner_vals: Vec<Vec<f64>> = lattice(&corner_dims)
        .map(|idx| {
            let p: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| bounds[k].0 + i as f64 * widths[k]).collect();
            fun(&p)
        })
        .collect();

    let centre = |idx: &[usize]| -> Vec<f64> {
        idx.iter().enumerate().map(|(k, &i)| bounds[k].0 + (i as f64 + 0.5) * widths[k]).collect()
    };
    let centre_norms: Vec<f64> = lattice(cells).map(|idx| norm(&fun(&centre(&idx)))).collect();

    let mut seeds = Vec::new();
    for (flat, idx) in lattice(cells).enumerate() {
        if sign_change_in_cell(&idx, &corner_dims, &corner_vals) || is_local_min(&idx, cells, &centre_norms, flat) {
            seeds.push(centre(&idx));
        }
    }

    let settings = NewtonSettings {
        tol: search.root_tol,
        ..NewtonSettings::default()
    };
    let mut roots: Vec<AveragedRoot> = Vec::new();
    for seed in seeds {
        let Ok(out) = damped_newton(|x: &[f64]| -> Result<Vec<f64>, Infallible> { Ok(fun(x)) }, &seed, &settings)
        else {
            continue;
        };
        let inside = out.x.iter().zip(bounds).all(|(x, (lo, hi))| *x >= *lo && *x <= *hi);
        if !inside || !(out.residual < search.root_tol) {
            continue;
        }
        let duplicate = roots.iter().any(|r| {
            r.z.iter().zip(&out.x).all(|(a, b)| (a - b).abs() < search.dedup_tol)
        });
        if duplicate {
            continue;
        }
        let jac_det = jacobian_determinant(&fun, &out.x);
        roots.push(AveragedRoot {
            residual: norm(&fun(&out.x)),
            z: out.x,
            jac_det,
            degree_sign: DegreeSign::from_det(jac_det, search.det_tol),
        });
    }
    roots.sort_by(|a, b| {
        a.z.iter()
            .zip(&b.z)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    roots
}

/// Row-major enumeration of all multi-indices below `dims`.
fn lattice(dims: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = dims.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            idx[k] = flat % dims[k];
            flat /= dims[k];
        }
        idx
    })
}

fn flat_index(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (i, d)| acc * d + i)
}

fn sign_change_in_cell(cell: &[usize], corner_dims: &[usize], vals: &[Vec<f64>]) -> bool {
    let dim = cell.len();
    let m = vals[0].len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for mask in 0..(1usize << dim) {
        let corner: Vec<usize> = (0..dim).map(|k| cell[k] + ((mask >> k) & 1)).collect();
        let v = &vals[flat_index(&corner, corner_dims)];
        for i in 0..m {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    lo.iter().zip(&hi).all(|(l, h)| *l <= 0.0 && *h >= 0.0)
}

fn is_local_min(cell: &[usize], dims: &[usize], norms: &[f64], flat: usize) -> bool {
    let here = norms[flat];
    let mut probe = cell.to_vec();
    for k in 0..cell.len() {
        for step in [-1i64, 1] {
            let n = cell[k] as i64 + step;
            if n < 0 || n >= dims[k] as i64 {
                continue;
            }
            probe[k] = n as usize;
            if norms[flat_index(&probe, dims)] < here {
                return false;
            }
            probe[k] = cell[k];
        }
    }
    true
}
