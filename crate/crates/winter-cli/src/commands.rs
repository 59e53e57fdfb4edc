use crate::config::{fmt_g, RunConfig};
use crate::output::{indexed_path, write_output, Table};
use anyhow::{bail, Result};
use num_complex::Complex64;
use winter::asymptotics::{classify_growth, derivative_limit_check, TimeSpec};
use winter::propagator::{
    boundary_current, decay_curve, decay_law, decay_derivative, smeared_log_derivative, snapshot,
    time_kernel,
};
use winter::resonance::{find_resonances, pole_residual, ModelParams};
use winter::specfun::faddeeva;
use winter::states::{build_state, coeff_c, overlap_i, residue_sum_check, SpectralData};
use winter::WinterError;

fn model(config: &RunConfig) -> Result<ModelParams> {
    Ok(ModelParams::new(config.alpha, config.radius, config.n_max)?)
}

fn spectral(config: &RunConfig) -> Result<SpectralData> {
    let params = model(config)?;
    let init = config.state.build(config.radius)?;
    Ok(SpectralData::build(&params, &init)?)
}

pub fn cmd_resonances(config: &RunConfig) -> Result<()> {
    let params = model(config)?;
    let roots = find_resonances(&params)?;
    let mut table = Table::new(
        "resonances",
        vec!["n", "re_k", "im_k", "residual_abs", "re_Q2", "im_Q2"],
    );
    for r in &roots {
        let st = build_state(*r, &params)?;
        let q2 = st.q * st.q;
        table.rows.push(vec![
            r.n as f64,
            r.k.re,
            r.k.im,
            pole_residual(r.k, &params).norm(),
            q2.re,
            q2.im,
        ]);
    }
    write_output(&table.render(config), config.out.as_deref())
}

pub fn cmd_decay(config: &RunConfig) -> Result<()> {
    let sd = spectral(config)?;
    let times = config.time_grid();
    let curve = decay_curve(&times, &sd, true)?;
    for (t, p) in curve.times.iter().zip(&curve.p) {
        if !(-1e-6..=1.0 + 1e-6).contains(p) {
            return Err(anyhow::Error::new(CliPhysicsError(format!(
                "P({t}) = {p} outside [-1e-6, 1+1e-6]"
            ))));
        }
    }
    let window = config.smear * config.revival_period();
    let smeared = smeared_log_derivative(&curve, window)?;
    let t_rev = config.revival_period();
    let mut table = Table::new(
        "decay",
        vec!["t", "t_over_T", "P", "Pdot", "Pdot_over_P_smeared"],
    );
    let pdot = curve.pdot.as_ref().unwrap();
    for i in 0..curve.times.len() {
        table.rows.push(vec![
            curve.times[i],
            curve.times[i] / t_rev,
            curve.p[i],
            pdot[i],
            smeared[i],
        ]);
    }
    write_output(&table.render(config), config.out.as_deref())
}

/// P(t) outside physical bounds: mapped to exit code 3.
#[derive(Debug)]
pub struct CliPhysicsError(pub String);

impl std::fmt::Display for CliPhysicsError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "physics violation: {}", self.0)
    }
}

impl std::error::Error for CliPhysicsError {}

pub fn cmd_snapshot(config: &RunConfig) -> Result<()> {
    let sd = spectral(config)?;
    let t_rev = config.revival_period();
    let times = config
        .times
        .clone()
        .unwrap_or_else(|| vec![t_rev / 8.0, t_rev / 16.0, t_rev / 27.0]);
    let many = times.len() > 1;
    for (i, &t) in times.iter().enumerate() {
        if t < 0.0 {
            bail!("snapshot time {t} is negative");
        }
        let snap = snapshot(t, config.r_count, &sd)?;
        let mut table = Table::new("snapshot", vec!["r", "density"]);
        table.extra_metadata.push(format!("t = {}", fmt_g(t)));
        table
            .extra_metadata
            .push(format!("t_over_T = {}", fmt_g(t / t_rev)));
        for (r, d) in snap.r_grid.iter().zip(&snap.density) {
            table.rows.push(vec![*r, *d]);
        }
        let out = config
            .out
            .as_deref()
            .map(|p| if many { indexed_path(p, i) } else { p.to_path_buf() });
        write_output(&table.render(config), out.as_deref())?;
    }
    Ok(())
}

pub fn cmd_derivative_scan(config: &RunConfig) -> Result<()> {
    let sd = spectral(config)?;
    let times = config.time_grid();
    let curve = decay_curve(&times, &sd, true)?;
    let t_rev = config.revival_period();
    let mut table = Table::new("derivative-scan", vec!["t", "t_over_T", "Pdot"]);
    let pdot = curve.pdot.as_ref().unwrap();
    for i in 0..curve.times.len() {
        table
            .rows
            .push(vec![curve.times[i], curve.times[i] / t_rev, pdot[i]]);
    }
    write_output(&table.render(config), config.out.as_deref())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn parse_time_spec(spec: &str) -> Result<TimeSpec> {
    let s = spec.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: u64 = p.trim().parse()?;
        let q: u64 = q.trim().parse()?;
        if q == 0 {
            bail!("zero denominator in '{spec}'");
        }
        let g = gcd(p, q);
        Ok(TimeSpec::Rational { p: p / g, q: q / g })
    } else {
        Ok(TimeSpec::Real(s.parse()?))
    }
}

pub fn cmd_gauss(config: &RunConfig, spec: &str, l_max: u64) -> Result<()> {
    let t = parse_time_spec(spec)?;
    let result = classify_growth(t, l_max)?;
    let fit_min = (l_max as f64 / 100.0).max(10.0) as u64;
    let doc = serde_json::json!({
        "t": result.t,
        "t_spec": spec,
        "class": result.growth_class.label(),
        "exponent": result.exponent,
        "fit_range": [fit_min, l_max],
        "l_values": result.l_values,
        "magnitudes": result.magnitudes,
    });
    let mut text = serde_json::to_string_pretty(&doc).unwrap();
    text.push('\n');
    write_output(&text, config.out.as_deref())
}

pub fn cmd_limit(config: &RunConfig, alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        bail!("limit needs at least one alpha");
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        bail!("alphas must be strictly ascending");
    }
    let report = derivative_limit_check(alphas, config.radius, config.n_max)?;
    let rows: Vec<serde_json::Value> = report
        .alphas
        .iter()
        .zip(report.exact.iter().zip(&report.asymptotic))
        .map(|(alpha, (ex, asy))| {
            serde_json::json!({
                "alpha": alpha,
                "Pdot_exact": ex,
                "Pdot_asymptotic": asy,
                "target": report.target,
            })
        })
        .collect();
    let distances: Vec<f64> = report
        .exact
        .iter()
        .map(|ex| (ex - report.target).abs())
        .collect();
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let doc = if alphas.len() > 1 {
        serde_json::json!({ "rows": rows, "distance_decreasing": decreasing })
    } else {
        serde_json::json!({ "rows": rows })
    };
    let mut text = serde_json::to_string_pretty(&doc).unwrap();
    text.push('\n');
    write_output(&text, config.out.as_deref())
}

pub fn cmd_selfcheck(config: &RunConfig) -> Result<()> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        println!("selfcheck {name}: {}", if ok { "ok" } else { "FAILED" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    // specfun identities
    let mut rng = StdRng::seed_from_u64(2024);
    let mut specfun_ok = true;
    for _ in 0..100 {
        let z = Complex64::new(rng.gen_range(-8.0..8.0), rng.gen_range(0.1..8.0));
        let (w, wm) = match (faddeeva(z), faddeeva(-z)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                specfun_ok = false;
                break;
            }
        };
        let refl = 2.0 * (-z * z).exp() - wm;
        let scale = w.norm().max(wm.norm()).max(1.0);
        if (w - refl).norm() > 1e-10 * scale {
            specfun_ok = false;
            break;
        }
        let conj = faddeeva(Complex64::new(-z.re, z.im)).unwrap();
        if (conj - w.conj()).norm() > 1e-10 * scale {
            specfun_ok = false;
            break;
        }
    }
    for _ in 0..100 {
        let k = Complex64::new(rng.gen_range(0.1..100.0), rng.gen_range(-2.0..0.0));
        let m = time_kernel(k, 0.0).unwrap();
        if (m - Complex64::new(0.5, 0.0)).norm() > 1e-13 {
            specfun_ok = false;
        }
    }
    check("specfun-identities", specfun_ok);

    // resonance residuals for n <= 50
    let params = ModelParams::new(config.alpha, config.radius, 50)?;
    let roots = find_resonances(&params)?;
    let residuals_ok = roots.iter().all(|r| {
        pole_residual(r.k, &params).norm() <= 1e-10 * config.alpha * r.k.norm().max(1.0)
    });
    check("resonance-residuals", residuals_ok);

    // residue sum rule: envelope decrease (the truncated magnitude
    // oscillates with the cutoff, so compare widely separated cutoffs)
    let r_half = config.radius / 2.0;
    let r_third = config.radius / 3.0;
    let mut trend = Vec::new();
    for n_max in [10u32, 300] {
        let p = ModelParams::new(config.alpha, config.radius, n_max)?;
        let res = find_resonances(&p)?;
        let mut states = Vec::new();
        for r in res.iter().rev() {
            states.push(build_state(r.mirror(), &p)?);
        }
        for r in &res {
            states.push(build_state(*r, &p)?);
        }
        trend.push(residue_sum_check(&states, r_half, r_third).norm());
    }
    check("residue-sum-trend", trend[1] < trend[0]);

    // P-realness and derivative consistency on a small spectral set
    let small = RunConfig {
        n_max: config.n_max.min(100),
        ..config.clone()
    };
    let sd = spectral(&small)?;
    let t_rev = small.revival_period();
    let p_real_ok = [0.05, 0.17, 0.39, 0.68, 1.03]
        .iter()
        .all(|f| decay_law(f * t_rev, &sd).is_ok());
    check("decay-law-realness", p_real_ok);

    let h = 1e-6 * t_rev;
    let deriv_ok = [0.137, 0.263, 0.411, 0.683, 0.929].iter().all(|f| {
        let t = f * t_rev;
        let fd = match (decay_law(t + h, &sd), decay_law(t - h, &sd)) {
            (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
            _ => return false,
        };
        match decay_derivative(t, &sd) {
            Ok(an) => (an - fd).abs() <= 1e-3 * fd.abs(),
            Err(_) => false,
        }
    });
    check("derivative-consistency", deriv_ok);

    // Q-sign invariance: flipping one branch sign consistently leaves P alone
    let mut flipped = sd.clone();
    let slot = flipped.dim() / 3;
    let dim = flipped.dim();
    flipped.states[slot].q = -flipped.states[slot].q;
    flipped.coeff[slot] = -flipped.coeff[slot];
    for j in 0..dim {
        if j != slot {
            flipped.overlap[slot * dim + j] = -flipped.overlap[slot * dim + j];
            flipped.overlap[j * dim + slot] = -flipped.overlap[j * dim + slot];
        }
    }
    let t_probe = 0.31 * t_rev;
    let q_ok = match (decay_law(t_probe, &sd), decay_law(t_probe, &flipped)) {
        (Ok(a), Ok(b)) => (a - b).abs() <= 1e-10 * a.abs(),
        _ => false,
    };
    check("q-sign-invariance", q_ok);

    // negative control: a wrong mirror must trip the realness guard
    let p = ModelParams::new(config.alpha, config.radius, 40)?;
    let init = small.state.build(small.radius)?;
    let res = find_resonances(&p)?;
    let mut broken = SpectralData::from_resonances(&p, &init, &res)?;
    let n_max = 40usize;
    let dim = broken.dim();
    for (i, r) in res.iter().rev().enumerate() {
        let wrong = winter::resonance::Resonance { n: -r.n, k: -r.k };
        let st = build_state(wrong, &p)?;
        broken.states[i] = st;
        broken.coeff[i] = coeff_c(&st, &init);
    }
    for i in n_max..dim {
        for j in 0..dim {
            let v = overlap_i(&broken.states[i], &broken.states[j], p.radius);
            broken.overlap[i * dim + j] = v;
            broken.overlap[(dim - 1 - i) * dim + (dim - 1 - j)] = v.conj();
        }
    }
    let mirror_guard_ok = matches!(
        decay_law(0.17 * t_rev, &broken),
        Err(WinterError::ImaginaryResidual { .. })
    );
    check("mirror-corruption-detected", mirror_guard_ok);

    // boundary-current finiteness at small t
    let bc = boundary_current(1e-9 * t_rev, &sd)?;
    check("boundary-current-finite", bc.is_finite());

    if failures.is_empty() {
        println!("selfcheck: all checks passed");
        Ok(())
    } else {
        bail!("selfcheck failed: {}", failures.join(", "));
    }
}
