//! Model parameters, the Krein coefficient of the resolvent, and the
//! resonance poles in the fourth momentum quadrant.
//!
//! Resonances are the roots of the entire function
//!     D(k) = 2k + i alpha (1 - e^{2ikR}),
//! which is the denominator of lambda(k) cleared of the 1/(2k) factor.
//! Roots are found by damped Newton iteration.  The seed comes from the
//! fixed-point form of the pole condition,
//!     k = n pi / R - (i / 2R) Log(1 - 2ik/alpha),
//! which reduces to the large-coupling expansion around n pi / R when
//! n pi << alpha R and to the logarithmic-width asymptote when
//! n pi >> alpha R, so the same seeding works across the whole index range.

use crate::error::WinterError;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Coupling strength, shell radius and series cutoff (units hbar = 2m = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub radius: f64,
    pub n_max: u32,
}

impl ModelParams {
    pub fn new(alpha: f64, radius: f64, n_max: u32) -> Result<Self, WinterError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(WinterError::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(WinterError::InvalidParameter(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        if n_max < 1 {
            return Err(WinterError::InvalidParameter(
                "n_max must be at least 1".into(),
            ));
        }
        Ok(Self { alpha, radius, n_max })
    }
}

/// A resonance pole: signed index and complex wavenumber.
///
/// Positive indices sit in the fourth quadrant (Re k > 0, Im k < 0);
/// the mirror partner of index -n is -conj(k_n) by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub n: i32,
    pub k: Complex64,
}

impl Resonance {
    /// Mirror partner k_{-n} = -conj(k_n).
    pub fn mirror(&self) -> Resonance {
        Resonance {
            n: -self.n,
            k: -self.k.conj(),
        }
    }
}

/// Solver tolerances; the defaults match the library-wide contracts.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Converged when |D(k)| <= residual_scale * alpha * max(1, |k|).
    pub residual_scale: f64,
    /// Two roots closer than this relative distance are a collision.
    pub collision_rel: f64,
    pub max_iterations: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual_scale: 1e-12,
            collision_rel: 1e-8,
            max_iterations: 100,
        }
    }
}

/// A point with |1 + (i alpha/2k)(1 - e^{2ikR})| below this is treated as a
/// pole of lambda.  The denominator slope near a root is O(alpha R / |k|),
/// so this flags only points within ~1e-11 of a resonance while staying
/// well above the f64 noise floor of the expression.
const KREIN_POLE_TOL: f64 = 1e-8;

/// Krein coefficient lambda(k) = -alpha / (1 + (i alpha / 2k)(1 - e^{2ikR})).
pub fn krein_lambda(k: Complex64, params: &ModelParams) -> Result<Complex64, WinterError> {
    if k.norm() == 0.0 {
        return Err(WinterError::InvalidParameter("krein_lambda at k = 0".into()));
    }
    let i = Complex64::new(0.0, 1.0);
    let denom = 1.0 + i * params.alpha / (2.0 * k)
        * (1.0 - (2.0 * i * k * params.radius).exp());
    if denom.norm() < KREIN_POLE_TOL {
        return Err(WinterError::AtPole { denom_abs: denom.norm() });
    }
    Ok(-params.alpha / denom)
}

/// Pole condition D(k) = 2k + i alpha (1 - e^{2ikR}); D(k) = 0 at a resonance.
pub fn pole_residual(k: Complex64, params: &ModelParams) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    2.0 * k + i * params.alpha * (1.0 - (2.0 * i * k * params.radius).exp())
}

fn pole_residual_deriv(k: Complex64, params: &ModelParams) -> Complex64 {
    2.0 + 2.0 * params.alpha * params.radius * (2.0 * Complex64::new(0.0, 1.0) * k * params.radius).exp()
}

/// Large-coupling expansion of the n-th resonance around n pi / R:
/// k ~ k0 (1 - 1/(aR) + 1/(aR)^2) - i k0^2/(a^2 R), k0 = n pi / R.
/// Useful when alpha R >> n pi.
pub fn initial_guess(n: u32, params: &ModelParams) -> Complex64 {
    let k0 = n as f64 * PI / params.radius;
    let ar = params.alpha * params.radius;
    Complex64::new(
        k0 * (1.0 - 1.0 / ar + 1.0 / (ar * ar)),
        -k0 * k0 / (params.alpha * params.alpha * params.radius),
    )
}

/// Seed valid across the whole index range: a few sweeps of the fixed-point
/// map of the pole condition, started from the hard-wall value.
fn seed(n: u32, alpha: f64, radius: f64) -> Complex64 {
    let k0 = n as f64 * PI / radius;
    let i = Complex64::new(0.0, 1.0);
    let mut k = Complex64::new(k0, 0.0);
    for _ in 0..16 {
        k = k0 - i / (2.0 * radius) * (1.0 - 2.0 * i * k / alpha).ln();
    }
    k
}

fn newton(
    n: u32,
    start: Complex64,
    alpha: f64,
    radius: f64,
    tol: &Tolerances,
) -> Result<Complex64, WinterError> {
    let params = ModelParams { alpha, radius, n_max: 1 };
    let target = |k: Complex64| tol.residual_scale * alpha * k.norm().max(1.0);
    let mut k = start;
    let mut residual = pole_residual(k, &params);
    for _ in 0..tol.max_iterations {
        if residual.norm() <= target(k) {
            return Ok(k);
        }
        let step = residual / pole_residual_deriv(k, &params);
        let mut damping = 1.0;
        loop {
            let trial = k - damping * step;
            let trial_res = pole_residual(trial, &params);
            if trial_res.norm() < residual.norm() || damping < 1e-4 {
                k = trial;
                residual = trial_res;
                break;
            }
            damping *= 0.5;
        }
    }
    if residual.norm() <= target(k) {
        Ok(k)
    } else {
        Err(WinterError::NoConvergence { index: n })
    }
}

fn solve_one(n: u32, params: &ModelParams, tol: &Tolerances) -> Result<Complex64, WinterError> {
    match newton(n, seed(n, params.alpha, params.radius), params.alpha, params.radius, tol) {
        Ok(k) => Ok(k),
        Err(_) => {
            // Homotopy fallback: solve at larger alpha where the seed is
            // reliable, then continue the root down in coupling.
            let mut a = params.alpha * 16.0;
            let mut k = newton(n, seed(n, a, params.radius), a, params.radius, tol)?;
            while a > params.alpha {
                a = (a / 2.0).max(params.alpha);
                k = newton(n, k, a, params.radius, tol)?;
            }
            Ok(k)
        }
    }
}

/// Finds the positive-index resonances n = 1..n_max, sorted by Re k.
pub fn find_resonances(params: &ModelParams) -> Result<Vec<Resonance>, WinterError> {
    find_resonances_with(params, &Tolerances::default())
}

pub fn find_resonances_with(
    params: &ModelParams,
    tol: &Tolerances,
) -> Result<Vec<Resonance>, WinterError> {
    let roots: Result<Vec<_>, _> = (1..=params.n_max)
        .into_par_iter()
        .map(|n| {
            let k = solve_one(n, params, tol)?;
            if !(k.re > 0.0 && k.im < 0.0) {
                return Err(WinterError::NoConvergence { index: n });
            }
            Ok(Resonance { n: n as i32, k })
        })
        .collect();
    let mut roots = roots?;
    roots.sort_by(|a, b| a.k.re.partial_cmp(&b.k.re).unwrap());
    for pair in roots.windows(2) {
        let rel = (pair[1].k - pair[0].k).norm() / pair[0].k.norm();
        if rel < tol.collision_rel {
            return Err(WinterError::RootCollision {
                first: pair[0].n as u32,
                second: pair[1].n as u32,
                rel_dist: rel,
            });
        }
    }
    Ok(roots)
}
