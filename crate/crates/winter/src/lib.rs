//! Resonance-expansion solver for the Winter model: a quantum particle
//! initially confined by a spherical delta-shell potential of strength
//! `alpha` at radius `R` (units hbar = 2m = 1, s-wave sector).
//!
//! The crate finds the resonance poles of the continued Green function,
//! builds the associated Gamow states, and evaluates the non-decay
//! probability P(t) as a double resonance series, together with the
//! large-coupling asymptotics (tail sums, quadratic Gauss sums and the
//! moving-time derivative limit).

pub mod asymptotics;
pub mod error;
pub mod propagator;
pub mod resonance;
pub mod specfun;
pub mod states;

pub use error::WinterError;
pub use num_complex::Complex64;

/// Hard-wall revival period T = 2R^2/pi.
pub fn revival_period(radius: f64) -> f64 {
    2.0 * radius * radius / std::f64::consts::PI
}
