//! Time evolution: the per-resonance kernel M(k, t), the wave function
//! phi(r, t), the decay law P(t) as a double resonance series, its
//! derivative from the boundary probability current, the locally smeared
//! logarithmic derivative, and two independent ground-truth routes (the
//! real-axis spectral kernel and its direct oscillatory quadrature).

use crate::error::WinterError;
use crate::resonance::ModelParams;
use crate::specfun::erfc_scaled;
use crate::states::{eval_state, eval_state_deriv, SpectralData};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Sampled decay law P(t), optionally with its derivative.
#[derive(Debug, Clone)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub p: Vec<f64>,
    pub pdot: Option<Vec<f64>>,
    pub params: ModelParams,
    pub n_max: u32,
}

/// Radial probability density |phi(r, t)|^2 at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub r_grid: Vec<f64>,
    pub density: Vec<f64>,
}

/// Maximum allowed imaginary residue of the decay-law contraction.
const IMAG_TOL: f64 = 1e-10;

/// M(k, t) = (1/2) e^{u^2} erfc(u) with u = -e^{-i pi/4} k sqrt(t).
pub fn time_kernel(k: Complex64, t: f64) -> Result<Complex64, WinterError> {
    let u = -Complex64::from_polar(1.0, -PI / 4.0) * k * t.sqrt();
    Ok(0.5 * erfc_scaled(u)?)
}

/// Per-time coefficient vector a_n = C_n M(k_n, t).
fn coeff_at_time(spectral: &SpectralData, t: f64) -> Result<Vec<Complex64>, WinterError> {
    spectral
        .states
        .iter()
        .zip(&spectral.coeff)
        .map(|(s, &c)| Ok(c * time_kernel(s.resonance.k, t)?))
        .collect()
}

/// phi(r, t) = sum_n C_n M(k_n, t) v_n(r), truncated at |n| <= n_max.
pub fn wavefunction(
    r: f64,
    t: f64,
    spectral: &SpectralData,
) -> Result<Complex64, WinterError> {
    let a = coeff_at_time(spectral, t)?;
    Ok(spectral
        .states
        .iter()
        .zip(&a)
        .map(|(s, &an)| an * eval_state(s, r))
        .sum())
}

/// phi(r_j, t) on the uniform grid r_j = j R / (count - 1), j = 0..count.
///
/// Uses the phase recurrence e^{i k r_{j+1}} = e^{i k r_j} e^{i k dr}, so the
/// cost is one complex multiply per state per grid point.
pub fn wavefunction_grid(
    count: usize,
    t: f64,
    spectral: &SpectralData,
) -> Result<(Vec<f64>, Vec<Complex64>), WinterError> {
    assert!(count >= 2);
    let radius = spectral.params.radius;
    let dr = radius / (count - 1) as f64;
    let a = coeff_at_time(spectral, t)?;
    let half_i = Complex64::new(0.0, 0.5);
    let mut phi = vec![Complex64::new(0.0, 0.0); count];
    for (s, &an) in spectral.states.iter().zip(&a) {
        let c = 2f64.sqrt() * s.q * an;
        if c.norm() == 0.0 {
            continue;
        }
        let ik = Complex64::new(0.0, 1.0) * s.resonance.k;
        let step_p = (ik * dr).exp();
        let step_m = (-ik * dr).exp();
        let mut ep = Complex64::new(1.0, 0.0);
        let mut em = Complex64::new(1.0, 0.0);
        for slot in phi.iter_mut() {
            // sin(kr) = (e^{ikr} - e^{-ikr}) / 2i
            *slot += c * half_i * (em - ep);
            ep *= step_p;
            em *= step_m;
        }
    }
    let grid = (0..count).map(|j| j as f64 * dr).collect();
    Ok((grid, phi))
}

/// Density snapshot on a uniform radial grid.
pub fn snapshot(t: f64, r_count: usize, spectral: &SpectralData) -> Result<Snapshot, WinterError> {
    let (r_grid, phi) = wavefunction_grid(r_count, t, spectral)?;
    Ok(Snapshot {
        t,
        r_grid,
        density: phi.iter().map(|v| v.norm_sqr()).collect(),
    })
}

fn contraction(spectral: &SpectralData, a: &[Complex64]) -> Complex64 {
    let dim = spectral.dim();
    let abar: Vec<Complex64> = a.iter().map(|v| v.conj()).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, &ai) in a.iter().enumerate() {
        let row = &spectral.overlap[i * dim..(i + 1) * dim];
        let mut s = Complex64::new(0.0, 0.0);
        for (v, ab) in row.iter().zip(&abar) {
            s += v * ab;
        }
        total += ai * s;
    }
    total
}

/// Decay law P(t) = sum_{n,l} C_n conj(C_l) I_nl M(k_n,t) conj(M(k_l,t)),
/// evaluated as the quadratic form a^H I a with a_n = C_n M(k_n, t).
pub fn decay_law(t: f64, spectral: &SpectralData) -> Result<f64, WinterError> {
    let a = coeff_at_time(spectral, t)?;
    let total = contraction(spectral, &a);
    if total.im.abs() >= IMAG_TOL {
        return Err(WinterError::ImaginaryResidual {
            t,
            imag_abs: total.im.abs(),
        });
    }
    Ok(total.re)
}

/// Boundary values phi(R, t) and phi'(R, t) from the series.
pub fn boundary_values(
    t: f64,
    spectral: &SpectralData,
) -> Result<(Complex64, Complex64), WinterError> {
    let radius = spectral.params.radius;
    let a = coeff_at_time(spectral, t)?;
    let mut phi = Complex64::new(0.0, 0.0);
    let mut dphi = Complex64::new(0.0, 0.0);
    for (s, &an) in spectral.states.iter().zip(&a) {
        phi += an * eval_state(s, radius);
        dphi += an * eval_state_deriv(s, radius);
    }
    Ok((phi, dphi))
}

/// Probability current out of the shell, evaluated term-by-term on the
/// truncated series: -2 Im( phi'(R,t) conj(phi(R,t)) ).
///
/// This is the exact Pdot of the *untruncated* solution, but the truncated
/// series for phi'(R, t) converges only as the truncation grows like
/// O(sqrt(N)) oscillations (resonance expansions degrade at the shell), so
/// prefer `decay_derivative` for quantitative work.
pub fn boundary_current(t: f64, spectral: &SpectralData) -> Result<f64, WinterError> {
    let (phi, dphi) = boundary_values(t, spectral)?;
    Ok(-2.0 * (dphi * phi.conj()).im)
}

/// dP/dt of the truncated decay law: the exact time derivative of the
/// a^H I a contraction,  Pdot = 2 Re( adot^T I conj(a) ), with
/// adot_n = C_n Mdot(k_n, t) and Mdot = -i k^2 M - u / (2 t sqrt(pi)).
///
/// As n_max grows this converges to the probability-current value
/// -2 Im( phi'(R,t) conj(phi(R,t)) ) of the exact solution.
pub fn decay_derivative(t: f64, spectral: &SpectralData) -> Result<f64, WinterError> {
    Ok(p_and_pdot(t, spectral)?.1)
}

/// P and Pdot in one pass over the overlap matrix: the row sums
/// s_i = sum_l I_il conj(a_l) serve both a^T s (P) and 2 Re(adot^T s).
pub fn p_and_pdot(t: f64, spectral: &SpectralData) -> Result<(f64, f64), WinterError> {
    if !(t > 0.0) {
        return Err(WinterError::InvalidParameter(
            "decay_derivative requires t > 0".into(),
        ));
    }
    let rot = -Complex64::from_polar(1.0, -PI / 4.0);
    let sqrt_t = t.sqrt();
    let mut a = Vec::with_capacity(spectral.dim());
    let mut adot = Vec::with_capacity(spectral.dim());
    for (s, &c) in spectral.states.iter().zip(&spectral.coeff) {
        let k = s.resonance.k;
        let m = time_kernel(k, t)?;
        let u = rot * k * sqrt_t;
        let mdot = -Complex64::new(0.0, 1.0) * k * k * m - u / (2.0 * t * PI.sqrt());
        a.push(c * m);
        adot.push(c * mdot);
    }
    let dim = spectral.dim();
    let abar: Vec<Complex64> = a.iter().map(|v| v.conj()).collect();
    let mut p = Complex64::new(0.0, 0.0);
    let mut pd = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        let row = &spectral.overlap[i * dim..(i + 1) * dim];
        let mut s = Complex64::new(0.0, 0.0);
        for (v, ab) in row.iter().zip(&abar) {
            s += v * ab;
        }
        p += a[i] * s;
        pd += adot[i] * s;
    }
    if p.im.abs() >= IMAG_TOL {
        return Err(WinterError::ImaginaryResidual {
            t,
            imag_abs: p.im.abs(),
        });
    }
    Ok((p.re, 2.0 * pd.re))
}

/// Evaluates P (and optionally Pdot) on a time grid; times are independent
/// and processed in parallel.
pub fn decay_curve(
    times: &[f64],
    spectral: &SpectralData,
    with_derivative: bool,
) -> Result<DecayCurve, WinterError> {
    let (p, pdot) = if with_derivative {
        // at t = 0 the truncated Mdot contraction has a 1/sqrt(t)
        // transient, so report the finite boundary-current value there
        let pairs: Result<Vec<(f64, f64)>, WinterError> = times
            .par_iter()
            .map(|&t| {
                if t == 0.0 {
                    Ok((decay_law(t, spectral)?, boundary_current(t, spectral)?))
                } else {
                    p_and_pdot(t, spectral)
                }
            })
            .collect();
        let (p, d): (Vec<f64>, Vec<f64>) = pairs?.into_iter().unzip();
        (p, Some(d))
    } else {
        let p: Result<Vec<f64>, WinterError> = times
            .par_iter()
            .map(|&t| decay_law(t, spectral))
            .collect();
        (p?, None)
    };
    Ok(DecayCurve {
        times: times.to_vec(),
        p,
        pdot,
        params: spectral.params,
        n_max: spectral.params.n_max,
    })
}

/// Boxcar moving average of Pdot(t)/P(t) over a centered window of the
/// given length; windows are truncated at the curve endpoints.
pub fn smeared_log_derivative(curve: &DecayCurve, window: f64) -> Result<Vec<f64>, WinterError> {
    let pdot = curve
        .pdot
        .as_ref()
        .ok_or_else(|| WinterError::InvalidParameter("curve lacks Pdot samples".into()))?;
    let n = curve.times.len();
    if n < 2 {
        return Err(WinterError::WindowTooNarrow);
    }
    let dt = (curve.times[n - 1] - curve.times[0]) / (n - 1) as f64;
    let half = (0.5 * window / dt).floor() as usize;
    if 2 * half + 1 < 3 {
        return Err(WinterError::WindowTooNarrow);
    }
    let logd: Vec<f64> = pdot.iter().zip(&curve.p).map(|(d, p)| d / p).collect();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            logd[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect())
}

/// Real-axis spectral density kernel
/// p(k, r, r') = 2k sin(kr) sin(kr') / (pi |D(k)|^2 / 2), evaluated through
/// the manifestly nonnegative |D|^2 form of the denominator.
pub fn spectral_kernel(k: f64, r: f64, r_prime: f64, params: &ModelParams) -> f64 {
    if k == 0.0 {
        // D(0) = 0 but p(k) ~ k r r' / (pi (1 + alpha R)^2) -> 0
        return 0.0;
    }
    let (a, rad) = (params.alpha, params.radius);
    let s2 = (2.0 * k * rad).sin();
    let c2 = (2.0 * k * rad).cos();
    // |D|^2 = (2k + a sin 2kR)^2 + a^2 (1 - cos 2kR)^2
    let d2 = (2.0 * k + a * s2).powi(2) + (a * (1.0 - c2)).powi(2);
    2.0 * k * (k * r).sin() * (k * r_prime).sin() / (PI * d2 / 2.0)
}

/// Ternary search for the minimum of |D(k)|^2 on [lo, hi] (peak of p).
fn locate_peak(lo: f64, hi: f64, params: &ModelParams) -> f64 {
    let g = |k: f64| {
        let s2 = (2.0 * k * params.radius).sin();
        let c2 = (2.0 * k * params.radius).cos();
        (2.0 * k + params.alpha * s2).powi(2) + (params.alpha * (1.0 - c2)).powi(2)
    };
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if g(m1) < g(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

fn adaptive_simpson_complex<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let whole = (fa + 4.0 * fm + fb) * ((b - a) / 6.0);
    let left = (fa + 4.0 * flm + fm) * ((m - a) / 6.0);
    let right = (fm + 4.0 * frm + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() < 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson_complex(f, a, m, fa, flm, fm, tol / 2.0, depth - 1)
            + adaptive_simpson_complex(f, m, b, fm, frm, fb, tol / 2.0, depth - 1)
    }
}

/// Direct oscillatory quadrature of the exact propagator kernel
///     u(t, r, r') = int_0^inf p(k, r, r') e^{-i k^2 t} 2k dk,
/// truncated at `k_cutoff`.  Serves as the ground-truth oracle for the
/// resonance expansion.  The mesh is graded geometrically around each
/// resonance peak of p (located by ternary search on |D|^2) and bounded
/// by a quarter of the local oscillation period elsewhere.
pub fn direct_propagate(
    t: f64,
    r: f64,
    r_prime: f64,
    params: &ModelParams,
    k_cutoff: f64,
) -> Result<Complex64, WinterError> {
    if !(t > 0.0) || !(k_cutoff > 0.0) {
        return Err(WinterError::InvalidParameter(
            "direct_propagate requires t > 0 and a finite positive cutoff".into(),
        ));
    }
    let rad = params.radius;
    let spacing = PI / rad;
    // base spacing: resolve both the shell oscillation and e^{-ik^2 t}
    let h_osc = (spacing / 8.0).min(2.0 * PI / (2.0 * k_cutoff * t) / 4.0);
    let est_panels = k_cutoff / h_osc;
    if est_panels > 2e6 {
        return Err(WinterError::QuadratureFailure(format!(
            "oscillation requires ~{est_panels:.0} panels; reduce k_cutoff or t"
        )));
    }

    let mut brk: Vec<f64> = Vec::new();
    brk.push(0.0);
    let mut n = 1;
    loop {
        let center_window = ((n as f64 - 0.5) * spacing, (n as f64 + 0.2) * spacing);
        if center_window.0 > k_cutoff {
            break;
        }
        let c = locate_peak(center_window.0, center_window.1.min(k_cutoff), params);
        // geometric grading into the peak from both sides
        let mut w = 1e-8 * spacing.max(1.0);
        let mut local = vec![c];
        while w < 0.45 * spacing {
            local.push(c - w);
            local.push(c + w);
            w *= 2.0;
        }
        for k in local {
            if k > 0.0 && k < k_cutoff {
                brk.push(k);
            }
        }
        n += 1;
    }
    brk.push(k_cutoff);
    brk.sort_by(|a, b| a.partial_cmp(b).unwrap());
    brk.dedup();

    let f = |k: f64| {
        spectral_kernel(k, r, r_prime, params)
            * 2.0
            * k
            * Complex64::from_polar(1.0, -k * k * t)
    };
    let mut total = Complex64::new(0.0, 0.0);
    for w in brk.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let m = ((hi - lo) / h_osc).ceil().max(1.0) as usize;
        let h = (hi - lo) / m as f64;
        for j in 0..m {
            let a = lo + j as f64 * h;
            let b = a + h;
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            total += adaptive_simpson_complex(&f, a, b, fa, fm, fb, 1e-10, 30);
        }
    }
    Ok(total)
}

/// Resonance-expansion propagator kernel
/// u(t, r, r') = sum_n M(k_n, t) v_n(r) v_n(r'), for comparison against
/// `direct_propagate`.
pub fn series_propagate(
    t: f64,
    r: f64,
    r_prime: f64,
    spectral: &SpectralData,
) -> Result<Complex64, WinterError> {
    let mut total = Complex64::new(0.0, 0.0);
    for s in &spectral.states {
        total += time_kernel(s.resonance.k, t)? * eval_state(s, r) * eval_state(s, r_prime);
    }
    Ok(total)
}
