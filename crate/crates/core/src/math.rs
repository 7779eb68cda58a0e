//! Small numeric helpers: Cholesky with pivot reporting, triangular solves,
//! special functions missing from statrs, and decimal formatting.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// On failure returns the 1-based index of the leading minor that is not
/// positive definite, which callers surface in `Error::SingularKernel`.
pub fn chol_lower(a: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, usize> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(j + 1);
        }
        let dj = diag.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

pub fn chol_or_singular(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    chol_lower(a).map_err(|minor| Error::SingularKernel { minor })
}

/// Solve L X = B in place for lower-triangular L.
pub fn solve_lower_mut(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = l.nrows();
    for col in 0..b.ncols() {
        for i in 0..n {
            let mut s = b[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, col)];
            }
            b[(i, col)] = s / l[(i, i)];
        }
    }
}

/// Solve Lᵀ X = B in place for lower-triangular L.
pub fn solve_lower_transpose_mut(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = l.nrows();
    for col in 0..b.ncols() {
        for ii in 0..n {
            let i = n - 1 - ii;
            let mut s = b[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * b[(k, col)];
            }
            b[(i, col)] = s / l[(i, i)];
        }
    }
}

pub fn solve_lower_vec(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    solve_lower_mut(l, &mut m);
    DVector::from_column_slice(m.as_slice())
}

pub fn solve_lower_transpose_vec(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    solve_lower_transpose_mut(l, &mut m);
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of a lower-triangular matrix via forward substitution on I.
pub fn invert_lower(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::identity(n, n);
    solve_lower_mut(l, &mut inv);
    inv
}

/// Trigamma function ψ'(x) for x > 0.
///
/// Recurrence down to the asymptotic regime, then the standard Bernoulli
/// series (Abramowitz & Stegun 6.4.12).
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma requires x > 0, got {x}");
    let mut x = x;
    let mut acc = 0.0;
    while x < 6.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x²) + 1/(6x³) − 1/(30x⁵) + 1/(42x⁷) − 1/(30x⁹)
    let series = inv
        + 0.5 * inv2
        + inv2 * inv * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)));
    acc + series
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// 17 significant decimal digits: enough to reproduce any f64 bit-exactly.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::digamma;

    #[test]
    fn chol_matches_reconstruction() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.6, 2.0, 5.0, 1.2, 0.6, 1.2, 3.0]);
        let l = chol_lower(&a).unwrap();
        let r = &l * l.transpose();
        assert!((r - &a).abs().max() < 1e-12);
    }

    #[test]
    fn chol_reports_failing_minor() {
        // Leading 1x1 minor fine, 2x2 minor indefinite.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(chol_lower(&a).unwrap_err(), 2);
        let b = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(chol_lower(&b).unwrap_err(), 1);
    }

    #[test]
    fn triangular_solves_invert() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.6, 2.0, 5.0, 1.2, 0.6, 1.2, 3.0]);
        let l = chol_lower(&a).unwrap();
        let b = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        let y = solve_lower_vec(&l, &b);
        let x = solve_lower_transpose_vec(&l, &y);
        assert!((&a * &x - &b).abs().max() < 1e-12);
        let linv = invert_lower(&l);
        assert!((&linv * &l - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn trigamma_matches_digamma_differences() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 7.0, 42.0] {
            let h = 1e-5 * x.max(1.0);
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            let tg = trigamma(x);
            assert!(
                (tg - fd).abs() / fd.abs() < 1e-7,
                "x={x}: trigamma {tg} vs fd {fd}"
            );
        }
        // ψ'(1) = π²/6
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn g17_roundtrips_bits() {
        for &x in &[
            std::f64::consts::PI,
            1.0 / 3.0,
            -2.2250738585072014e-308,
            1.7976931348623157e308,
            0.1 + 0.2,
        ] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }
}
