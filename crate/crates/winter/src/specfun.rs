//! Complex special functions: the Faddeeva function w(z) = exp(-z^2) erfc(-iz),
//! the scaled complementary error function exp(u^2) erfc(u), and the real
//! Gamma function.
//!
//! w(z) is evaluated in the closed upper half-plane by a trigonometrically
//! convergent quadrature of the defining integral
//!     w(z) = (i/pi) int exp(-t^2) / (z - t) dt,
//! using either the midpoint or the trapezoidal rule on a grid of spacing
//! `H`, whichever keeps its nodes away from Re z, plus the exact aliasing
//! correction obtained from the residue at t = z.  The discretization error
//! is O(exp(-pi^2/H^2)), far below the 1e-10 target.  The lower half-plane
//! is reached through the reflection w(-z) = 2 exp(-z^2) - w(z), applied
//! once.

use crate::error::WinterError;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Grid spacing of the quadrature rule; error term exp(-pi^2/H^2) ~ 7e-18.
const H: f64 = 0.5;
/// Number of node pairs; nodes reach |t| ~ 7.5 where exp(-t^2) ~ 4e-25.
const NODES: usize = 15;

/// Faddeeva function w(z) = e^{-z^2} erfc(-iz).
///
/// Relative accuracy is better than 1e-12 over the tested domain
/// |z| <= 1e4.  Errors only in the lower half-plane, when the reflection
/// term e^{-z^2} overflows.
pub fn faddeeva(z: Complex64) -> Result<Complex64, WinterError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(WinterError::InvalidParameter(
            "faddeeva: non-finite argument".into(),
        ));
    }
    if z.im >= 0.0 {
        return Ok(w_upper(z));
    }
    // Reflection into the upper half-plane.
    let m2 = -z * z;
    if m2.re > 709.0 {
        return Err(WinterError::Overflow { what: "faddeeva reflection term exp(-z^2)" });
    }
    Ok(2.0 * m2.exp() - w_upper(-z))
}

/// w(z) for Im z >= 0.
fn w_upper(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        // w(-conj z) = conj(w(z))
        return w_upper(Complex64::new(-z.re, z.im)).conj();
    }
    let x = z.re;
    let y = z.im;

    // Distance (in units of H) of x to the nearest node of each rule.
    let s = x / H;
    let frac_int = s - s.round();
    let frac_half = s - 0.5 - (s - 0.5).round();
    let use_midpoint = frac_half.abs() >= frac_int.abs();

    let zz = z * z;
    let mut sum = Complex64::new(0.0, 0.0);
    if use_midpoint {
        for m in 0..NODES {
            let t = (m as f64 + 0.5) * H;
            sum += (-t * t).exp() / (zz - t * t);
        }
        sum *= Complex64::new(0.0, 2.0 * H / PI) * z;
    } else {
        for m in 1..=NODES {
            let t = m as f64 * H;
            sum += (-t * t).exp() / (zz - t * t);
        }
        sum = Complex64::new(0.0, H / PI) * (2.0 * z * sum + 1.0 / z);
    }

    // Aliasing correction: residue contributions of harmonics j with
    // pi j / H > Im z.  Geometric tail starting at j0.
    let j0 = (y * H / PI).floor() + 1.0;
    let log_q = Complex64::new(-2.0 * PI * y / H, 2.0 * PI * x / H);
    let expo = -zz + j0 * log_q;
    if expo.re > -746.0 {
        let q = log_q.exp();
        let corr = if use_midpoint {
            let sign = if (j0 as i64) % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * sign * expo.exp() / (1.0 + q)
        } else {
            -2.0 * expo.exp() / (1.0 - q)
        };
        sum += corr;
    }
    sum
}

/// Scaled complementary error function e^{u^2} erfc(u), computed as w(iu).
pub fn erfc_scaled(u: Complex64) -> Result<Complex64, WinterError> {
    faddeeva(Complex64::new(-u.im, u.re))
}

// Lanczos approximation, g = 7, 9 terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real x > 0, relative error below 1e-12 on (0, 30].
pub fn gamma_real(x: f64) -> Result<f64, WinterError> {
    if !(x > 0.0) {
        return Err(WinterError::GammaDomain(x));
    }
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x - 1.0 + i as f64);
    }
    let t = x - 0.5 + LANCZOS_G;
    Ok((2.0 * PI).sqrt() * t.powf(x - 0.5) * (-t).exp() * acc)
}
