use thiserror::Error;

#[derive(Debug, Error)]
pub enum WinterError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("overflow evaluating {what} (argument magnitude too large)")]
    Overflow { what: &'static str },

    #[error("gamma function domain error: x = {0} (requires x > 0)")]
    GammaDomain(f64),

    #[error("evaluation at a resonance pole (|denominator| = {denom_abs:.3e})")]
    AtPole { denom_abs: f64 },

    #[error("Newton iteration for resonance n = {index} failed to converge")]
    NoConvergence { index: u32 },

    #[error("resonances n = {first} and n = {second} collided (relative distance {rel_dist:.3e})")]
    RootCollision {
        first: u32,
        second: u32,
        rel_dist: f64,
    },

    #[error("degenerate normalization denominator for resonance n = {index}")]
    DegenerateNormalization { index: i32 },

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("decay-law sum has non-negligible imaginary part {imag_abs:.3e} at t = {t}")]
    ImaginaryResidual { t: f64, imag_abs: f64 },

    #[error("smearing window holds fewer than 3 samples")]
    WindowTooNarrow,

    #[error("Gauss-sum growth class mismatch: parity rule predicts {predicted}, fit gives {fitted} (exponent {exponent:.3})")]
    GrowthClassMismatch {
        predicted: &'static str,
        fitted: &'static str,
        exponent: f64,
    },
}
