//! Gauss–Legendre and composite Simpson rules for vector-valued integrands.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    GaussLegendre,
    Simpson,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed rule mapped onto `[a, b]`: `∫ f ≈ Σ wᵢ f(tᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MappedRule {
    /// `n` Gauss–Legendre points, or `n` Simpson subintervals (`n` rounded up to even).
    pub fn new(rule: QuadratureRule, n: usize, a: f64, b: f64) -> Self {
        match rule {
            QuadratureRule::GaussLegendre => {
                let (x, w) = gauss_legendre(n);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                Self {
                    nodes: x.iter().map(|x| mid + half * x).collect(),
                    weights: w.iter().map(|w| w * half).collect(),
                }
            }
            QuadratureRule::Simpson => {
                let n = n + n % 2;
                let h = (b - a) / n as f64;
                let nodes = (0..=n).map(|k| a + k as f64 * h).collect();
                let weights = (0..=n)
                    .map(|k| {
                        let c = if k == 0 || k == n {
                            1.0
                        } else if k % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        c * h / 3.0
                    })
                    .collect();
                Self { nodes, weights }
            }
        }
    }

    /// Integrates a vector-valued `f(t, out)` of dimension `dim`.
    pub fn integrate<F>(&self, dim: usize, f: F) -> Vec<f64>
    where
        F: FnMut(f64, &mut [f64]),
    {
        self.integrate_affine(0.0, 1.0, dim, f)
    }

    /// Integrates over the image of this rule's interval under `t ↦ offset + scale·t`.
    /// A rule built on `[0, 1]` thus integrates over `[a, b]` with `offset = a, scale = b − a`.
    pub fn integrate_affine<F>(&self, offset: f64, scale: f64, dim: usize, mut f: F) -> Vec<f64>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut acc = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            f(offset + scale * t, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += scale * w * b;
            }
        }
        acc
    }
}
