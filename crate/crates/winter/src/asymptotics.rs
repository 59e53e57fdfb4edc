//! Large-alpha analysis: quadratic Gauss sums S_L(t) with growth
//! classification, the weighted tail sums with the Gamma integrals
//! I_j = Gamma((j+1)/3)/3, the asymptotic boundary wave function, and the
//! moving-time derivative limit -4/(3 sqrt 3).

use crate::error::WinterError;
use crate::propagator::decay_derivative;
use crate::resonance::ModelParams;
use crate::revival_period;
use crate::specfun::gamma_real;
use crate::states::{InitialState, SpectralData};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Growth regime of |S_L(t)| as L grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    /// pq odd: the partial sums retrace a bounded pattern.
    BoundedPattern,
    /// pq even: |S_L| grows linearly in L.
    Linear,
    /// irrational t: bounded by C L^{1-eps}.
    Sublinear,
}

impl GrowthClass {
    pub fn label(self) -> &'static str {
        match self {
            GrowthClass::BoundedPattern => "bounded-pattern",
            GrowthClass::Linear => "linear",
            GrowthClass::Sublinear => "sublinear",
        }
    }

    fn from_exponent(e: f64) -> GrowthClass {
        if e <= 0.1 {
            GrowthClass::BoundedPattern
        } else if (0.9..=1.1).contains(&e) {
            GrowthClass::Linear
        } else {
            GrowthClass::Sublinear
        }
    }
}

/// Time argument of the Gauss sum, in units of the revival period.
#[derive(Debug, Clone, Copy)]
pub enum TimeSpec {
    /// Reduced fraction p/q.
    Rational { p: u64, q: u64 },
    Real(f64),
}

#[derive(Debug, Clone)]
pub struct GaussSumResult {
    pub t: f64,
    pub l_values: Vec<u64>,
    pub magnitudes: Vec<f64>,
    pub growth_class: GrowthClass,
    pub exponent: f64,
}

/// Phases pi * (2^j t mod 2), each doubling step exact in f64.
fn doubling_table(t: f64) -> [f64; 64] {
    let mut d = [0.0f64; 64];
    let mut v = t.rem_euclid(2.0);
    for slot in d.iter_mut() {
        *slot = v;
        v *= 2.0;
        if v >= 2.0 {
            v -= 2.0;
        }
    }
    d
}

/// (n^2 t) mod 2 assembled from the set bits of n^2; every table entry is
/// the exact f64 value of 2^j t mod 2, so the only rounding is in the
/// final ~40-term accumulation.
fn phase_mod_2(n: u64, table: &[f64; 64]) -> f64 {
    let mut m = n * n;
    let mut acc = 0.0f64;
    let mut j = 0usize;
    while m != 0 {
        if m & 1 == 1 {
            acc += table[j];
            if acc >= 2.0 {
                acc -= 2.0;
            }
        }
        m >>= 1;
        j += 1;
    }
    acc
}

fn unit_phase(theta_mod_2: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI * theta_mod_2)
}

/// S_L(t) = sum_{n=1}^{L} e^{i pi n^2 t}, with the phase argument reduced
/// mod 2 exactly (binary doubling) to avoid precision loss at large n.
pub fn gauss_sum(t: f64, l: u64) -> Complex64 {
    assert!(l >= 1);
    let table = doubling_table(t);
    let mut s = Complex64::new(0.0, 0.0);
    for n in 1..=l {
        s += unit_phase(phase_mod_2(n, &table));
    }
    s
}

/// Log-spaced grid of ~points cutoffs from 10 to l_max, deduplicated.
fn log_grid(l_max: u64, points: usize) -> Vec<u64> {
    let lo = 10f64.min(l_max as f64);
    let hi = l_max as f64;
    let mut grid: Vec<u64> = (0..points)
        .map(|i| {
            let f = i as f64 / (points - 1) as f64;
            (lo * (hi / lo).powf(f)).round() as u64
        })
        .collect();
    grid.dedup();
    grid
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Sweeps |S_L| over a log-spaced grid, fits the growth exponent of the
/// running maximum over the upper two decades of L, and classifies.  For
/// rational t the empirical class must agree with the pq-parity rule
/// (pq odd -> bounded pattern, pq even -> linear).
pub fn classify_growth(t: TimeSpec, l_max: u64) -> Result<GaussSumResult, WinterError> {
    if l_max < 100 {
        return Err(WinterError::InvalidParameter(
            "classify_growth needs l_max >= 100".into(),
        ));
    }
    let (t_value, predicted) = match t {
        TimeSpec::Rational { p, q } => {
            if q == 0 || gcd(p, q) != 1 {
                return Err(WinterError::InvalidParameter(
                    "rational time must be a reduced fraction with q > 0".into(),
                ));
            }
            let class = if (p % 2) * (q % 2) == 1 {
                GrowthClass::BoundedPattern
            } else {
                GrowthClass::Linear
            };
            (p as f64 / q as f64, Some(class))
        }
        TimeSpec::Real(v) => (v, None),
    };

    let grid = log_grid(l_max, 25);
    let mut magnitudes = Vec::with_capacity(grid.len());
    let mut running = Vec::with_capacity(grid.len());
    let mut run_max = 0.0f64;
    let mut s = Complex64::new(0.0, 0.0);
    let mut next = 0usize;
    match t {
        TimeSpec::Rational { p, q } => {
            // exact integer phase: n^2 p mod 2q, in units of pi/q
            let modulus = 2 * q as u128;
            for n in 1..=l_max {
                let r = ((n as u128 * n as u128) % modulus * p as u128) % modulus;
                s += Complex64::from_polar(1.0, PI * r as f64 / q as f64);
                run_max = run_max.max(s.norm());
                if grid[next] == n {
                    magnitudes.push(s.norm());
                    running.push(run_max);
                    next += 1;
                    if next == grid.len() {
                        break;
                    }
                }
            }
        }
        TimeSpec::Real(v) => {
            let table = doubling_table(v);
            for n in 1..=l_max {
                s += unit_phase(phase_mod_2(n, &table));
                run_max = run_max.max(s.norm());
                if grid[next] == n {
                    magnitudes.push(s.norm());
                    running.push(run_max);
                    next += 1;
                    if next == grid.len() {
                        break;
                    }
                }
            }
        }
    }

    let l_fit_min = (l_max as f64 / 100.0).max(10.0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lv, m) in grid.iter().zip(&running) {
        if *lv as f64 >= l_fit_min {
            xs.push((*lv as f64).ln());
            ys.push(m.max(1e-300).ln());
        }
    }
    let exponent = fit_slope(&xs, &ys);
    let fitted = GrowthClass::from_exponent(exponent);
    if let Some(pred) = predicted {
        if pred != fitted {
            return Err(WinterError::GrowthClassMismatch {
                predicted: pred.label(),
                fitted: fitted.label(),
                exponent,
            });
        }
    }
    Ok(GaussSumResult {
        t: t_value,
        l_values: grid,
        magnitudes,
        growth_class: fitted,
        exponent,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// I_j = int_0^inf e^{-x^3} x^j dx = Gamma((j+1)/3) / 3.
pub fn gamma_integral(j: f64) -> Result<f64, WinterError> {
    Ok(gamma_real((j + 1.0) / 3.0)? / 3.0)
}

/// Direct evaluation of sum_{n>=1} exp(-2 k0^3 t / (alpha^2 R)) k0^j with
/// k0 = n pi / R; terms accumulate until relatively negligible.
pub fn tail_sum(j: f64, t: f64, params: &ModelParams) -> Result<f64, WinterError> {
    if !(t > 0.0) || j <= -1.0 {
        return Err(WinterError::InvalidParameter(
            "tail_sum requires t > 0 and j > -1".into(),
        ));
    }
    let scale = 2.0 * t / (params.alpha * params.alpha * params.radius);
    let mut total = 0.0f64;
    let mut n = 1u64;
    loop {
        let k0 = n as f64 * PI / params.radius;
        let term = (-scale * k0.powi(3)).exp() * k0.powf(j);
        total += term;
        if term < 1e-16 * total && n > 2 {
            break;
        }
        n += 1;
        if n > 100_000_000 {
            return Err(WinterError::QuadratureFailure(
                "tail_sum failed to converge".into(),
            ));
        }
    }
    Ok(total)
}

/// Closed form (R/pi) (R/2t)^{(j+1)/3} alpha^{2(j+1)/3} I_j.
pub fn tail_sum_closed(j: f64, t: f64, params: &ModelParams) -> Result<f64, WinterError> {
    if !(t > 0.0) || j <= -1.0 {
        return Err(WinterError::InvalidParameter(
            "tail_sum_closed requires t > 0 and j > -1".into(),
        ));
    }
    let e = (j + 1.0) / 3.0;
    Ok(params.radius / PI
        * (params.radius / (2.0 * t)).powf(e)
        * params.alpha.powf(2.0 * e)
        * gamma_integral(j)?)
}

fn kahan_sum(terms: impl Iterator<Item = Complex64>) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    let mut c = Complex64::new(0.0, 0.0);
    for term in terms {
        let y = term - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// Terms of the asymptotic boundary series.  `primed` replaces the final
/// bracket by k_{n,0}; `moving` drops the (1 - 2/(alpha R)) phase factor,
/// giving the value at the moving time t_alpha = t (1 + 2/(alpha R)).
fn asym_terms(
    t: f64,
    params: &ModelParams,
    primed: bool,
    moving: bool,
) -> Result<Vec<Complex64>, WinterError> {
    if !(t > 0.0) {
        return Err(WinterError::InvalidParameter(
            "asymptotic boundary value requires t > 0".into(),
        ));
    }
    let (alpha, radius) = (params.alpha, params.radius);
    let front = -(2.0 / radius).sqrt() * 6f64.sqrt() / radius;
    let phase_scale = if moving {
        1.0
    } else {
        1.0 - 2.0 / (alpha * radius)
    };
    let mut terms = Vec::new();
    let mut n = 1u64;
    loop {
        let k0 = n as f64 * PI / radius;
        let damp = (-2.0 * k0.powi(3) * t / (alpha * alpha * radius)).exp();
        if damp < 1e-16 {
            break;
        }
        let phase = Complex64::from_polar(1.0, -k0 * k0 * t * phase_scale);
        let bracket = if primed {
            Complex64::new(k0, 0.0)
        } else {
            Complex64::new(-k0 / alpha, -k0 * k0 / (alpha * alpha))
        };
        // front already folds (-1)^n C_n = -sqrt(6)/(R k0) and sqrt(2/R)
        terms.push(front / k0 * phase * damp * bracket);
        n += 1;
        if n > 50_000_000 {
            return Err(WinterError::QuadratureFailure(
                "asymptotic series failed to truncate".into(),
            ));
        }
    }
    Ok(terms)
}

fn require_linear(profile: &InitialState) -> Result<(), WinterError> {
    match profile {
        InitialState::LinearProfile { .. } => Ok(()),
        _ => Err(WinterError::InvalidParameter(
            "asymptotic boundary value is derived for the linear profile only".into(),
        )),
    }
}

/// Asymptotic phi(R, t) for the linear profile (C_n = (-1)^{n+1} sqrt(6)/(R k_n)).
pub fn asymptotic_boundary(
    t: f64,
    params: &ModelParams,
    profile: &InitialState,
) -> Result<Complex64, WinterError> {
    require_linear(profile)?;
    Ok(kahan_sum(asym_terms(t, params, false, false)?.into_iter()))
}

/// Asymptotic phi'(R, t): the final bracket replaced by k_{n,0}.
pub fn asymptotic_boundary_prime(
    t: f64,
    params: &ModelParams,
    profile: &InitialState,
) -> Result<Complex64, WinterError> {
    require_linear(profile)?;
    Ok(kahan_sum(asym_terms(t, params, true, false)?.into_iter()))
}

/// Asymptotic Pdot at the moving time t_alpha = t (1 + 2/(alpha R)):
/// -2 Im( phi'(R, t_alpha) conj(phi(R, t_alpha)) ) with the moving-time
/// boundary values.
pub fn asymptotic_pdot_moving(t: f64, params: &ModelParams) -> Result<f64, WinterError> {
    let phi = kahan_sum(asym_terms(t, params, false, true)?.into_iter());
    let dphi = kahan_sum(asym_terms(t, params, true, true)?.into_iter());
    Ok(-2.0 * (dphi * phi.conj()).im)
}

#[derive(Debug, Clone)]
pub struct LimitReport {
    pub alphas: Vec<f64>,
    pub exact: Vec<f64>,
    pub asymptotic: Vec<f64>,
    pub target: f64,
}

/// The limit value -4/(3 sqrt 3).
pub const DERIVATIVE_LIMIT: f64 = -0.769_800_358_919_501_1;

/// For each alpha, the exact Pdot(T_alpha) from the full propagator and
/// the asymptotic value, against the target -4/(3 sqrt 3).
pub fn derivative_limit_check(
    alphas: &[f64],
    radius: f64,
    n_max: u32,
) -> Result<LimitReport, WinterError> {
    let t_rev = revival_period(radius);
    let profile = InitialState::LinearProfile { radius };
    let mut exact = Vec::with_capacity(alphas.len());
    let mut asymptotic = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let params = ModelParams::new(alpha, radius, n_max)?;
        let t_alpha = t_rev * (1.0 + 2.0 / (alpha * radius));
        let spectral = SpectralData::build(&params, &profile)?;
        exact.push(decay_derivative(t_alpha, &spectral)?);
        asymptotic.push(asymptotic_pdot_moving(t_rev, &params)?);
    }
    Ok(LimitReport {
        alphas: alphas.to_vec(),
        exact,
        asymptotic,
        target: DERIVATIVE_LIMIT,
    })
}
