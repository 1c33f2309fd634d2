//! Roots of real cubic polynomials.
//!
//! Used for equilibrium eigenvalues (characteristic polynomial of the jerk
//! Jacobian) and for Floquet multipliers of 3×3 monodromy matrices.

use std::cmp::Ordering;

use num_complex::Complex64;

/// Roots of `c3 λ³ + c2 λ² + c1 λ + c0`, sorted by real part then imaginary part.
///
/// Real roots are polished with Newton's method; a complex pair is obtained by
/// deflating the cubic by its (always present) real root.
pub fn cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> [Complex64; 3] {
    assert!(c3 != 0.0, "leading coefficient of a cubic must be nonzero");
    let a = c2 / c3;
    let b = c1 / c3;
    let c = c0 / c3;

    // Depressed cubic t³ + p t + q with λ = t − a/3.
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = q * q / 4.0 + p * p * p / 27.0;

    let mut roots = if disc < 0.0 {
        // Three distinct real roots: trigonometric form.
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let t = m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
            *slot = Complex64::new(polish(a, b, c, t - shift), 0.0);
        }
        out
    } else {
        let sq = disc.sqrt();
        let t = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
        let r = polish(a, b, c, t - shift);
        // λ³ + aλ² + bλ + c = (λ − r)(λ² + (a + r)λ + (b + r(a + r)))
        let qb = a + r;
        let qc = b + r * qb;
        let [s1, s2] = quadratic_roots(qb, qc);
        [Complex64::new(r, 0.0), s1, s2]
    };
    sort_roots(&mut roots);
    roots
}

/// Roots of the monic quadratic `λ² + b λ + c`.
pub fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // Avoid cancellation: compute the larger-magnitude root first.
        let big = -0.5 * (b + b.signum() * sq);
        if big == 0.0 {
            return [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        }
        let small = c / big;
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Deterministic ordering: real part ascending, then imaginary part ascending.
pub fn sort_roots(roots: &mut [Complex64]) {
    // partial_cmp so that -0.0 and 0.0 compare equal.
    roots.sort_by(|l, r| {
        l.re.partial_cmp(&r.re)
            .unwrap_or(Ordering::Equal)
            .then(l.im.partial_cmp(&r.im).unwrap_or(Ordering::Equal))
    });
}

fn polish(a: f64, b: f64, c: f64, mut x: f64) -> f64 {
    let eval = |x: f64| ((x + a) * x + b) * x + c;
    let mut best = (eval(x).abs(), x);
    for _ in 0..8 {
        let f = eval(x);
        let df = (3.0 * x + 2.0 * a) * x + b;
        if f == 0.0 || df == 0.0 {
            break;
        }
        x -= f / df;
        let res = eval(x).abs();
        if res < best.0 {
            best = (res, x);
        } else {
            break;
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(coeffs: [f64; 4], z: Complex64) -> f64 {
        let [c3, c2, c1, c0] = coeffs;
        (((z * c3 + c2) * z + c1) * z + c0).norm()
    }

    #[test]
    fn pure_imaginary_pair_is_exact() {
        let r = cubic_roots(-1.0, 0.0, -4.0, 0.0);
        assert_eq!(r[0], Complex64::new(0.0, -2.0));
        assert_eq!(r[1], Complex64::new(0.0, 0.0));
        assert_eq!(r[2], Complex64::new(0.0, 2.0));
    }

    #[test]
    fn three_real_roots() {
        // (λ − 1)(λ − 2)(λ + 3) = λ³ − 7λ + 6
        let r = cubic_roots(1.0, 0.0, -7.0, 6.0);
        let re: Vec<f64> = r.iter().map(|z| z.re).collect();
        assert!((re[0] + 3.0).abs() < 1e-14);
        assert!((re[1] - 1.0).abs() < 1e-14);
        assert!((re[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn repeated_root() {
        // (λ − 1)³
        let r = cubic_roots(1.0, -3.0, 3.0, -1.0);
        for z in r {
            assert!((z - 1.0).norm() < 1e-5, "{z}");
        }
    }

    #[test]
    fn residuals_small_on_mixed_coefficients() {
        for coeffs in [
            [-1.0_f64, -1.0, 1.0, -1.0],
            [-1.0, 0.0, 0.0, -2.0],
            [2.5, -3.0, 0.7, 11.0],
            [-1.0, -3.6, 0.1, -1.3],
        ] {
            let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
            for z in cubic_roots(coeffs[0], coeffs[1], coeffs[2], coeffs[3]) {
                let mag = 1.0 + z.norm().powi(3);
                assert!(residual(coeffs, z) < 1e-12 * scale * mag, "{coeffs:?} {z}");
            }
        }
    }
}
