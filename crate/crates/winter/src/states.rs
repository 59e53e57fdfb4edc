//! Normalized resonant (Gamow) states v_n(r) = sqrt(2) Q_n sin(k_n r),
//! initial-state coefficients C_n = int phi0 v_n dr, and the overlap
//! matrix I_nl = int v_n conj(v_l) dr, all in closed form.

use crate::error::WinterError;
use crate::resonance::{find_resonances, ModelParams, Resonance};
use num_complex::Complex64;
use rayon::prelude::*;

/// A resonance together with its normalization coefficient Q.
#[derive(Debug, Clone, Copy)]
pub struct ResonantState {
    pub resonance: Resonance,
    pub q: Complex64,
}

/// Initial reduced wave function phi(r, 0) supported in (0, R), unit norm.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// phi(r,0) = sqrt(3) R^{-3/2} r  (constant 3D wave function).
    LinearProfile { radius: f64 },
    /// phi(r,0) = R^{-1/2}  (constant reduced wave function).
    ConstantProfile { radius: f64 },
    /// Sampled profile, linearly interpolated between nodes and zero
    /// outside [first, last] sample; normalized on construction.
    Tabulated {
        samples: Vec<(f64, f64)>,
        radius: f64,
    },
}

impl InitialState {
    pub fn radius(&self) -> f64 {
        match self {
            InitialState::LinearProfile { radius }
            | InitialState::ConstantProfile { radius }
            | InitialState::Tabulated { radius, .. } => *radius,
        }
    }

    /// Builds a tabulated state from (r, phi0) samples with strictly
    /// increasing r inside (0, R).  The profile is rescaled to unit norm.
    pub fn tabulated(samples: Vec<(f64, f64)>, radius: f64) -> Result<Self, WinterError> {
        if samples.len() < 2 {
            return Err(WinterError::InvalidParameter(
                "tabulated state needs at least 2 samples".into(),
            ));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(WinterError::InvalidParameter(
                    "tabulated radii must be strictly increasing".into(),
                ));
            }
        }
        if samples[0].0 < 0.0 || samples.last().unwrap().0 > radius {
            return Err(WinterError::InvalidParameter(
                "tabulated radii must lie inside [0, R]".into(),
            ));
        }
        // norm^2 of the piecewise-linear interpolant, exact per segment
        let mut norm2 = 0.0;
        for w in samples.windows(2) {
            let ((r0, f0), (r1, f1)) = (w[0], w[1]);
            norm2 += (r1 - r0) * (f0 * f0 + f0 * f1 + f1 * f1) / 3.0;
        }
        if norm2 <= 0.0 {
            return Err(WinterError::InvalidParameter(
                "tabulated profile has zero norm".into(),
            ));
        }
        let scale = norm2.sqrt().recip();
        let samples = samples.into_iter().map(|(r, f)| (r, f * scale)).collect();
        Ok(InitialState::Tabulated { samples, radius })
    }

    /// phi(r, 0).
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            InitialState::LinearProfile { radius } => {
                3f64.sqrt() * radius.powf(-1.5) * r
            }
            InitialState::ConstantProfile { radius } => radius.sqrt().recip(),
            InitialState::Tabulated { samples, .. } => {
                if r < samples[0].0 || r > samples.last().unwrap().0 {
                    return 0.0;
                }
                let j = samples.partition_point(|&(rr, _)| rr <= r).min(samples.len() - 1);
                let ((r0, f0), (r1, f1)) = (samples[j - 1], samples[j]);
                f0 + (f1 - f0) * (r - r0) / (r1 - r0)
            }
        }
    }
}

/// Q_n^2 denominators smaller than this are reported as degenerate.
const Q_DENOM_TOL: f64 = 1e-14;

/// Builds the resonant state for one pole: Q is the principal square root
/// of the closed-form Q^2 (argument of Q in (-pi/2, pi/2]).
pub fn build_state(res: Resonance, params: &ModelParams) -> Result<ResonantState, WinterError> {
    let k = res.k;
    let (a, r) = (params.alpha, params.radius);
    let two_kr = 2.0 * k * r;
    let denom = 2.0 * k + a * a * r * two_kr.sin() + a * two_kr.sin() + 2.0 * k * a * r * two_kr.cos();
    if denom.norm() < Q_DENOM_TOL {
        return Err(WinterError::DegenerateNormalization { index: res.n });
    }
    let q2 = Complex64::new(0.0, -2.0) * k * k / denom;
    Ok(ResonantState {
        resonance: res,
        q: q2.sqrt(),
    })
}

/// v_n(r) = sqrt(2) Q_n sin(k_n r).
pub fn eval_state(state: &ResonantState, r: f64) -> Complex64 {
    2f64.sqrt() * state.q * (state.resonance.k * r).sin()
}

/// v_n'(r) = sqrt(2) Q_n k_n cos(k_n r).
pub fn eval_state_deriv(state: &ResonantState, r: f64) -> Complex64 {
    2f64.sqrt() * state.q * state.resonance.k * (state.resonance.k * r).cos()
}

/// C_n = int_0^R phi(r,0) v_n(r) dr, closed form for the two analytic
/// profiles, exact segment integration of the interpolant for tabulated
/// data.
pub fn coeff_c(state: &ResonantState, init: &InitialState) -> Complex64 {
    let k = state.resonance.k;
    let rr = init.radius();
    let sq2q = 2f64.sqrt() * state.q;
    match init {
        InitialState::LinearProfile { .. } => {
            3f64.sqrt() * rr.powf(-1.5) * sq2q * ((k * rr).sin() - k * rr * (k * rr).cos())
                / (k * k)
        }
        InitialState::ConstantProfile { .. } => {
            rr.sqrt().recip() * sq2q * (1.0 - (k * rr).cos()) / k
        }
        InitialState::Tabulated { samples, .. } => {
            // int (a + b r) sin(k r) dr = [-(a + b r) cos(k r)/k + b sin(k r)/k^2]
            let mut acc = Complex64::new(0.0, 0.0);
            for w in samples.windows(2) {
                let ((r0, f0), (r1, f1)) = (w[0], w[1]);
                let b = (f1 - f0) / (r1 - r0);
                let a = f0 - b * r0;
                let anti = |r: f64| -(a + b * r) * (k * r).cos() / k + b * (k * r).sin() / (k * k);
                acc += anti(r1) - anti(r0);
            }
            sq2q * acc
        }
    }
}

/// Near-degenerate wavenumber combinations switch to the series limit of
/// sin(xR)/(2x) to avoid 0/0.
const OVERLAP_DEGENERATE_TOL: f64 = 1e-8;

fn half_sinc(x: Complex64, r: f64) -> Complex64 {
    if x.norm() < OVERLAP_DEGENERATE_TOL {
        let xr2 = (x * r) * (x * r);
        0.5 * r * (1.0 - xr2 / 6.0 + xr2 * xr2 / 120.0)
    } else {
        (x * r).sin() / (2.0 * x)
    }
}

/// I_nl = int_0^R v_n(r) conj(v_l(r)) dr in closed form.
pub fn overlap_i(state_n: &ResonantState, state_l: &ResonantState, radius: f64) -> Complex64 {
    let kn = state_n.resonance.k;
    let klc = state_l.resonance.k.conj();
    2.0 * state_n.q * state_l.q.conj() * (half_sinc(kn - klc, radius) - half_sinc(kn + klc, radius))
}

/// Truncated residue sum rule: sum over the given states of
/// v_n(r) v_n(r') / k_n; tends to zero as the cutoff grows.
pub fn residue_sum_check(states: &[ResonantState], r: f64, r_prime: f64) -> Complex64 {
    states
        .iter()
        .map(|s| eval_state(s, r) * eval_state(s, r_prime) / s.resonance.k)
        .sum()
}

/// Per-initial-state spectral coefficients over the signed index set
/// {-n_max..-1, 1..n_max}, stored in index order (slot i holds n = i - n_max
/// for i < n_max and n = i - n_max + 1 otherwise).
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub params: ModelParams,
    pub states: Vec<ResonantState>,
    pub coeff: Vec<Complex64>,
    /// Row-major (2 n_max)^2 overlap matrix.
    pub overlap: Vec<Complex64>,
}

impl SpectralData {
    /// Signed index held in slot i.
    pub fn index_of_slot(&self, i: usize) -> i32 {
        let n_max = self.params.n_max as i32;
        let j = i as i32 - n_max;
        if j < 0 {
            j
        } else {
            j + 1
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.params.n_max as usize
    }

    pub fn overlap_at(&self, row: usize, col: usize) -> Complex64 {
        self.overlap[row * self.dim() + col]
    }

    /// Finds resonances, builds all 2 n_max states and assembles C and I.
    pub fn build(params: &ModelParams, init: &InitialState) -> Result<Self, WinterError> {
        if (init.radius() - params.radius).abs() > 1e-12 * params.radius {
            return Err(WinterError::InvalidParameter(
                "initial state radius differs from model radius".into(),
            ));
        }
        let positive = find_resonances(params)?;
        Self::from_resonances(params, init, &positive)
    }

    /// Assembly from an existing positive-index resonance table.
    pub fn from_resonances(
        params: &ModelParams,
        init: &InitialState,
        positive: &[Resonance],
    ) -> Result<Self, WinterError> {
        let n_max = params.n_max as usize;
        assert_eq!(positive.len(), n_max);
        let mut states = Vec::with_capacity(2 * n_max);
        for r in positive.iter().rev() {
            states.push(build_state(r.mirror(), params)?);
        }
        for r in positive {
            states.push(build_state(*r, params)?);
        }
        let coeff: Vec<_> = states.iter().map(|s| coeff_c(s, init)).collect();

        let dim = 2 * n_max;
        let mut overlap = vec![Complex64::new(0.0, 0.0); dim * dim];
        // Positive-index rows are computed directly; negative rows follow
        // from I_{(-n)(-l)} = conj(I_{nl}).  The decay-law realness check
        // downstream then genuinely probes mirror consistency.
        let rows: Vec<Vec<Complex64>> = (n_max..dim)
            .into_par_iter()
            .map(|i| {
                (0..dim)
                    .map(|j| overlap_i(&states[i], &states[j], params.radius))
                    .collect()
            })
            .collect();
        for (off, row) in rows.iter().enumerate() {
            let i = n_max + off;
            for (j, &v) in row.iter().enumerate() {
                overlap[i * dim + j] = v;
                overlap[(dim - 1 - i) * dim + (dim - 1 - j)] = v.conj();
            }
        }
        Ok(Self {
            params: *params,
            states,
            coeff,
            overlap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::find_resonances;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn setup(alpha: f64, n_max: u32) -> (ModelParams, Vec<ResonantState>) {
        let p = ModelParams::new(alpha, 1.0, n_max).unwrap();
        let res = find_resonances(&p).unwrap();
        let states = res.iter().map(|r| build_state(*r, &p).unwrap()).collect();
        (p, states)
    }

    /// Adaptive Simpson oracle for complex integrands on [a, b].
    fn adaptive_simpson<F: Fn(f64) -> Complex64 + Copy>(
        f: F,
        a: f64,
        b: f64,
        tol: f64,
    ) -> Complex64 {
        fn simpson<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
            (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) * ((b - a) / 6.0)
        }
        fn rec<F: Fn(f64) -> Complex64>(
            f: &F,
            a: f64,
            b: f64,
            whole: Complex64,
            tol: f64,
            depth: u32,
        ) -> Complex64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth > 40 || (left + right - whole).norm() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth + 1)
                    + rec(f, m, b, right, tol / 2.0, depth + 1)
            }
        }
        // seed with enough panels to resolve oscillation
        let n0 = 64;
        let mut acc = Complex64::new(0.0, 0.0);
        let h = (b - a) / n0 as f64;
        for i in 0..n0 {
            let x0 = a + i as f64 * h;
            acc += rec(&f, x0, x0 + h, simpson(&f, x0, x0 + h), tol / n0 as f64, 0);
        }
        acc
    }

    #[test]
    fn q_squared_matches_independent_evaluation() {
        // Rebuild Q^2 from scratch through real/imag trig pieces.
        let (p, states) = setup(500.0, 1);
        let s = &states[0];
        let k = s.resonance.k;
        let e_plus = (Complex64::new(0.0, 2.0) * k * p.radius).exp();
        let e_minus = (Complex64::new(0.0, -2.0) * k * p.radius).exp();
        let sin2 = (e_plus - e_minus) / Complex64::new(0.0, 2.0);
        let cos2 = (e_plus + e_minus) / 2.0;
        let denom = 2.0 * k
            + p.alpha * p.alpha * p.radius * sin2
            + p.alpha * sin2
            + 2.0 * k * p.alpha * p.radius * cos2;
        let q2 = Complex64::new(0.0, -2.0) * k * k / denom;
        assert!((s.q * s.q - q2).norm() <= 1e-12 * q2.norm());
    }

    #[test]
    fn q_magnitude_hard_wall_limit() {
        for (alpha, tol) in [(500.0, 2e-2), (8000.0, 1.5e-3)] {
            let (_, states) = setup(alpha, 3);
            for s in &states {
                assert!(
                    (s.q.norm() - 1.0).abs() < tol,
                    "alpha={alpha} |Q|={}",
                    s.q.norm()
                );
            }
        }
    }

    #[test]
    fn state_vanishes_at_origin_and_nearly_at_wall() {
        let (_, states) = setup(500.0, 4);
        for s in &states {
            assert_eq!(eval_state(s, 0.0).norm(), 0.0);
            // near the hard wall v_n(R) is suppressed ~ n pi/(alpha R)
            let wall = eval_state(s, 1.0).norm();
            assert!(wall < 0.2, "v_n(R) = {wall}");
        }
    }

    #[test]
    fn mirror_state_is_negated_conjugate() {
        let (p, states) = setup(500.0, 6);
        for s in &states {
            let m = build_state(s.resonance.mirror(), &p).unwrap();
            for r in [0.21, 0.5, 0.83] {
                let lhs = eval_state(&m, r);
                let rhs = -eval_state(s, r).conj();
                // equality up to the fixed Q branch sign
                let d = (lhs - rhs).norm().min((lhs + rhs).norm());
                assert!(d <= 1e-12 * rhs.norm().max(1e-30));
            }
        }
    }

    #[test]
    fn coeff_closed_forms_match_quadrature() {
        let (_p, states) = setup(500.0, 40);
        let lin = InitialState::LinearProfile { radius: 1.0 };
        let con = InitialState::ConstantProfile { radius: 1.0 };
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..25 {
            let s = &states[rng.gen_range(0..states.len())];
            for init in [&lin, &con] {
                let closed = coeff_c(s, init);
                let oracle = adaptive_simpson(
                    |r| Complex64::new(init.eval(r), 0.0) * eval_state(s, r),
                    0.0,
                    1.0,
                    1e-12,
                );
                assert!(
                    (closed - oracle).norm() < 1e-9,
                    "n = {}, closed = {closed}, oracle = {oracle}",
                    s.resonance.n
                );
            }
        }
    }

    #[test]
    fn overlap_closed_form_matches_quadrature() {
        let (p, states) = setup(500.0, 40);
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..50 {
            let a = &states[rng.gen_range(0..states.len())];
            let b = &states[rng.gen_range(0..states.len())];
            let closed = overlap_i(a, b, p.radius);
            let oracle = adaptive_simpson(
                |r| eval_state(a, r) * eval_state(b, r).conj(),
                0.0,
                1.0,
                1e-12,
            );
            assert!(
                (closed - oracle).norm() < 1e-9,
                "(n,l) = ({},{})",
                a.resonance.n,
                b.resonance.n
            );
        }
    }

    #[test]
    fn overlap_degenerate_branch_is_continuous() {
        // I_{n,-n} hits k_n + conj(k_{-n}) = 0 exactly; the limit branch
        // must agree with the regular branch just off the degeneracy.
        let (p, states) = setup(500.0, 3);
        let s = &states[1];
        let m = build_state(s.resonance.mirror(), &p).unwrap();
        let exact = overlap_i(s, &m, p.radius);
        let mut nudged = m;
        nudged.resonance.k += Complex64::new(3e-8, 0.0);
        let offset = overlap_i(s, &nudged, p.radius);
        assert!((exact - offset).norm() < 1e-6 * exact.norm());
    }

    #[test]
    fn overlap_hard_wall_orthonormality() {
        let (p, states) = setup(50_000.0, 8);
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let v = overlap_i(a, b, p.radius);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (v - expect).norm() < 2e-3,
                    "(i,j)=({i},{j}) I={v}"
                );
            }
        }
    }

    #[test]
    fn linear_profile_coeff_hard_wall_illustration() {
        // C_n -> (-1)^{n+1} sqrt(6) / (R k_n), monotone in alpha
        let lin = InitialState::LinearProfile { radius: 1.0 };
        let mut prev = f64::INFINITY;
        for alpha in [500.0, 2000.0, 8000.0] {
            let (_, states) = setup(alpha, 20);
            let mut worst: f64 = 0.0;
            for s in &states {
                let n = s.resonance.n;
                let c = coeff_c(s, &lin);
                let ideal = (if n % 2 == 0 { -1.0 } else { 1.0 }) * 6f64.sqrt() / s.resonance.k;
                worst = worst.max(((c - ideal) * s.resonance.k).norm());
            }
            assert!(worst < prev, "alpha={alpha}: {worst} !< {prev}");
            prev = worst;
        }
    }

    #[test]
    fn constant_profile_even_coeffs_vanish_at_hard_wall() {
        let con = InitialState::ConstantProfile { radius: 1.0 };
        let (_, states) = setup(100_000.0, 6);
        for s in &states {
            let c = coeff_c(s, &con);
            if s.resonance.n % 2 == 0 {
                assert!(c.norm() < 1e-3, "n={} C={c}", s.resonance.n);
            } else {
                assert!(c.norm() > 0.1);
            }
        }
    }

    #[test]
    fn tabulated_reproduces_linear_closed_form() {
        let lin = InitialState::LinearProfile { radius: 1.0 };
        let samples: Vec<_> = (0..=4000)
            .map(|i| {
                let r = i as f64 / 4000.0;
                (r, lin.eval(r))
            })
            .collect();
        let tab = InitialState::tabulated(samples, 1.0).unwrap();
        let (_, states) = setup(500.0, 10);
        for s in &states {
            let a = coeff_c(s, &lin);
            let b = coeff_c(s, &tab);
            assert!((a - b).norm() < 1e-6, "n={} {a} vs {b}", s.resonance.n);
        }
    }

    #[test]
    fn tabulated_validation() {
        assert!(InitialState::tabulated(vec![(0.1, 1.0)], 1.0).is_err());
        assert!(InitialState::tabulated(vec![(0.5, 1.0), (0.2, 1.0)], 1.0).is_err());
        assert!(InitialState::tabulated(vec![(0.5, 1.0), (1.2, 1.0)], 1.0).is_err());
        // normalization on construction
        let t = InitialState::tabulated(vec![(0.0, 5.0), (1.0, 5.0)], 1.0).unwrap();
        let norm: f64 = (0..1000)
            .map(|i| t.eval((i as f64 + 0.5) / 1000.0).powi(2) / 1000.0)
            .sum();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_data_mirror_symmetry() {
        let p = ModelParams::new(500.0, 1.0, 30).unwrap();
        let lin = InitialState::LinearProfile { radius: 1.0 };
        let sd = SpectralData::build(&p, &lin).unwrap();
        let dim = sd.dim();
        let n_max = p.n_max as usize;
        // every matrix slot (including the mirror-derived negative rows)
        // agrees with a direct evaluation of the overlap integral
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..300 {
            let i = rng.gen_range(0..dim);
            let j = rng.gen_range(0..dim);
            let direct = overlap_i(&sd.states[i], &sd.states[j], p.radius);
            let stored = sd.overlap_at(i, j);
            assert!(
                (stored - direct).norm() <= 1e-12 * direct.norm().max(1e-12),
                "slot ({i},{j})"
            );
        }
        // Hermiticity follows and holds to rounding
        for i in (0..dim).step_by(7) {
            for j in (0..dim).step_by(5) {
                let a = sd.overlap_at(i, j);
                let b = sd.overlap_at(j, i).conj();
                assert!((a - b).norm() <= 1e-13 * a.norm().max(1e-13));
            }
        }
        // slot bookkeeping
        assert_eq!(sd.index_of_slot(0), -(n_max as i32));
        assert_eq!(sd.index_of_slot(n_max - 1), -1);
        assert_eq!(sd.index_of_slot(n_max), 1);
        assert_eq!(sd.index_of_slot(dim - 1), n_max as i32);
    }

    #[test]
    fn residue_sum_rule_trend() {
        let lin = InitialState::LinearProfile { radius: 1.0 };
        let mut prev = f64::INFINITY;
        for n_max in [100u32, 1000] {
            let p = ModelParams::new(500.0, 1.0, n_max).unwrap();
            let sd = SpectralData::build(&p, &lin).unwrap();
            let s = residue_sum_check(&sd.states, 0.5, 0.5);
            assert!(s.norm() < prev, "n_max={n_max}: |sum|={} !< {prev}", s.norm());
            prev = s.norm();
        }
    }

    #[test]
    fn residue_sum_vanishes_at_origin() {
        let (_, states) = setup(500.0, 20);
        assert_eq!(residue_sum_check(&states, 0.0, 0.37).norm(), 0.0);
    }

    #[test]
    fn residue_sum_real_part_cancels_in_mirror_pairs() {
        let p = ModelParams::new(500.0, 1.0, 50).unwrap();
        let lin = InitialState::LinearProfile { radius: 1.0 };
        let sd = SpectralData::build(&p, &lin).unwrap();
        let s = residue_sum_check(&sd.states, 0.4, 0.7);
        // n and -n terms are z and -conj(z): the real parts cancel exactly
        assert!(s.re.abs() < 1e-12, "Re sum = {}", s.re);
    }
}
