use anyhow::{anyhow, bail, Context, Result};
use std::fmt;
use std::path::{Path, PathBuf};
use winter::revival_period;
use winter::states::InitialState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone)]
pub enum StateKind {
    Linear,
    Constant,
    File(PathBuf),
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateKind::Linear => f.write_str("linear"),
            StateKind::Constant => f.write_str("constant"),
            StateKind::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl StateKind {
    pub fn parse(s: &str) -> Result<StateKind> {
        match s {
            "linear" => Ok(StateKind::Linear),
            "constant" => Ok(StateKind::Constant),
            other => {
                if let Some(path) = other.strip_prefix("file:") {
                    Ok(StateKind::File(PathBuf::from(path)))
                } else {
                    bail!("unknown state '{other}' (expected linear | constant | file:PATH)")
                }
            }
        }
    }

    pub fn build(&self, radius: f64) -> Result<InitialState> {
        match self {
            StateKind::Linear => Ok(InitialState::LinearProfile { radius }),
            StateKind::Constant => Ok(InitialState::ConstantProfile { radius }),
            StateKind::File(path) => {
                let samples = read_profile(path)?;
                Ok(InitialState::tabulated(samples, radius)?)
            }
        }
    }
}

fn read_profile(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read profile file {}", path.display()))?;
    let mut samples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let r: f64 = cols
            .next()
            .ok_or_else(|| anyhow!("line {}: missing r column", idx + 1))?
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad r value", idx + 1))?;
        let v: f64 = cols
            .next()
            .ok_or_else(|| anyhow!("line {}: missing phi0 column", idx + 1))?
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad phi0 value", idx + 1))?;
        samples.push((r, v));
    }
    if samples.is_empty() {
        bail!("profile file {} has no data rows", path.display());
    }
    Ok(samples)
}

/// Fully resolved run parameters (defaults <- config file <- flags).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alpha: f64,
    pub radius: f64,
    pub n_max: u32,
    pub state: StateKind,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_count: usize,
    pub r_count: usize,
    pub smear: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub times: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn revival_period(&self) -> f64 {
        revival_period(self.radius)
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let n = self.t_count.max(1);
        if n == 1 {
            return vec![self.t_start];
        }
        let dt = (self.t_stop - self.t_start) / (n - 1) as f64;
        (0..n).map(|i| self.t_start + i as f64 * dt).collect()
    }

    pub fn metadata_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("alpha = {}", fmt_g(self.alpha)),
            format!("radius = {}", fmt_g(self.radius)),
            format!("n_max = {}", self.n_max),
            format!("state = {}", self.state),
            format!("t_start = {}", fmt_g(self.t_start)),
            format!("t_stop = {}", fmt_g(self.t_stop)),
            format!("t_count = {}", self.t_count),
            format!("r_count = {}", self.r_count),
            format!("smear = {}", fmt_g(self.smear)),
            format!("format = {}", self.format),
        ];
        if let Some(ts) = &self.times {
            let rendered: Vec<String> = ts.iter().map(|t| fmt_g(*t)).collect();
            lines.push(format!("times = {}", rendered.join(",")));
        }
        lines
    }
}

/// 17 significant digits: shortest representation that round-trips f64.
pub fn fmt_g(v: f64) -> String {
    format!("{v:.16e}")
}

/// Unresolved overrides, from flags or a config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub radius: Option<f64>,
    pub n_max: Option<u32>,
    pub state: Option<String>,
    pub t_start: Option<f64>,
    pub t_stop: Option<String>,
    pub t_count: Option<usize>,
    pub r_count: Option<usize>,
    pub smear: Option<f64>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub times: Option<String>,
}

impl Overrides {
    fn merge_under(&mut self, weaker: Overrides) {
        macro_rules! take {
            ($f:ident) => {
                if self.$f.is_none() {
                    self.$f = weaker.$f;
                }
            };
        }
        take!(alpha);
        take!(radius);
        take!(n_max);
        take!(state);
        take!(t_start);
        take!(t_stop);
        take!(t_count);
        take!(r_count);
        take!(smear);
        take!(format);
        take!(out);
        take!(threads);
        take!(times);
    }
}

pub fn parse_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut ov = Overrides::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", idx + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let ctx = || format!("config line {}: bad value for {key}", idx + 1);
        match key {
            "alpha" => ov.alpha = Some(value.parse().with_context(ctx)?),
            "radius" => ov.radius = Some(value.parse().with_context(ctx)?),
            "nmax" | "n_max" => ov.n_max = Some(value.parse().with_context(ctx)?),
            "state" => ov.state = Some(value.to_string()),
            "t-start" | "t_start" => ov.t_start = Some(value.parse().with_context(ctx)?),
            "t-stop" | "t_stop" => ov.t_stop = Some(value.to_string()),
            "t-count" | "t_count" => ov.t_count = Some(value.parse().with_context(ctx)?),
            "r-count" | "r_count" => ov.r_count = Some(value.parse().with_context(ctx)?),
            "smear" => ov.smear = Some(value.parse().with_context(ctx)?),
            "format" => ov.format = Some(value.to_string()),
            "out" => ov.out = Some(PathBuf::from(value)),
            "threads" => ov.threads = Some(value.parse().with_context(ctx)?),
            "times" => ov.times = Some(value.to_string()),
            other => bail!("config line {}: unknown key '{other}'", idx + 1),
        }
    }
    Ok(ov)
}

/// Parses a time expression: a plain number, or a multiple of the revival
/// period written as "T", "T/8", "0.5T", "3T/4".
pub fn parse_time(expr: &str, t_rev: f64) -> Result<f64> {
    let s = expr.trim();
    if let Some(pos) = s.find('T') {
        let (pre, post) = (s[..pos].trim(), s[pos + 1..].trim());
        let coef: f64 = if pre.is_empty() {
            1.0
        } else {
            pre.parse().map_err(|_| anyhow!("bad time expression '{expr}'"))?
        };
        let div: f64 = if post.is_empty() {
            1.0
        } else if let Some(d) = post.strip_prefix('/') {
            d.trim().parse().map_err(|_| anyhow!("bad time expression '{expr}'"))?
        } else {
            bail!("bad time expression '{expr}'");
        };
        if div == 0.0 {
            bail!("time expression '{expr}' divides by zero");
        }
        Ok(coef * t_rev / div)
    } else {
        s.parse().map_err(|_| anyhow!("bad time expression '{expr}'"))
    }
}

pub fn parse_times(list: &str, t_rev: f64) -> Result<Vec<f64>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_time(s, t_rev))
        .collect()
}

/// Resolve defaults <- config file <- flags into a validated RunConfig.
pub fn resolve(
    flags: Overrides,
    config_path: Option<&Path>,
    default_state: StateKind,
) -> Result<RunConfig> {
    let mut ov = flags;
    if let Some(path) = config_path {
        ov.merge_under(parse_config_file(path)?);
    }
    let radius = ov.radius.unwrap_or(1.0);
    if !(radius > 0.0) {
        bail!("radius must be positive");
    }
    let t_rev = revival_period(radius);
    let state = match &ov.state {
        Some(s) => StateKind::parse(s)?,
        None => default_state,
    };
    let t_stop = match &ov.t_stop {
        Some(s) => parse_time(s, t_rev)?,
        None => 1.2 * t_rev,
    };
    let times = match &ov.times {
        Some(list) => Some(parse_times(list, t_rev)?),
        None => None,
    };
    let format = match ov.format.as_deref() {
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(other) => bail!("unknown format '{other}' (expected csv | json)"),
    };
    let config = RunConfig {
        alpha: ov.alpha.unwrap_or(500.0),
        radius,
        n_max: ov.n_max.unwrap_or(1000),
        state,
        t_start: ov.t_start.unwrap_or(0.0),
        t_stop,
        t_count: ov.t_count.unwrap_or(2000),
        r_count: ov.r_count.unwrap_or(800),
        smear: ov.smear.unwrap_or(1.0 / 200.0),
        format,
        out: ov.out,
        threads: ov.threads,
        times,
    };
    if config.t_count >= 2 && !(config.t_stop > config.t_start) {
        bail!("t-stop must exceed t-start");
    }
    if config.r_count < 2 {
        bail!("r-count must be at least 2");
    }
    if !(config.smear > 0.0) {
        bail!("smear must be positive");
    }
    Ok(config)
}
