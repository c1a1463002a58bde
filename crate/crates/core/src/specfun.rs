//! Bessel kernels used by the normalization and the extended-detector form factor.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Below this magnitude `J₀` is summed from its ascending series; above it the
/// Hankel asymptotic expansion is optimally truncated. Worst absolute error
/// on either side of the switch is about 8e-13.
const J0_SERIES_LIMIT: f64 = 12.0;

/// Below this magnitude `j₁(x)/x` uses its Taylor expansion.
const J1_OVER_X_SERIES_LIMIT: f64 = 1e-2;

/// Bessel function of the first kind of order zero.
///
/// Absolute error below 1e-12 on `|x| ≤ 1e4`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("J0 of non-finite argument {x}")));
    }
    let x = x.abs();
    Ok(if x < J0_SERIES_LIMIT {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    })
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let k = k as f64;
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// `J₀(x) = √(2/πx) [P(x) cos χ − Q(x) sin χ]`, `χ = x − π/4`, with the
/// P and Q series cut at their smallest term.
fn j0_asymptotic(x: f64) -> f64 {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut n = 0usize;
    // term_n = a_n / x^n with a_n = Π_{j≤n} (−(2j−1)²) / (n! 8ⁿ); even n feed P, odd n feed Q.
    loop {
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if n % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        let odd = (2 * n + 1) as f64;
        let next = -term * odd * odd / ((n + 1) as f64 * 8.0 * x);
        n += 1;
        if next.abs() >= term.abs() || next.abs() < 1e-18 || n > 200 {
            break;
        }
        term = next;
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `j₁(x)/x = (sin x − x cos x)/x³`, continuous through `x = 0` where it equals 1/3.
pub fn spherical_j1_over_x(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("j1(x)/x of non-finite argument {x}")));
    }
    let x = x.abs();
    if x < J1_OVER_X_SERIES_LIMIT {
        let x2 = x * x;
        // 1/3 - x²/30 + x⁴/840 - x⁶/45360
        return Ok(1.0 / 3.0 + x2 * (-1.0 / 30.0 + x2 * (1.0 / 840.0 - x2 / 45360.0)));
    }
    let (s, c) = x.sin_cos();
    Ok((s - x * c) / (x * x * x))
}
