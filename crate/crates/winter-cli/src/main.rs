mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::CliPhysicsError;
use config::{Overrides, StateKind};
use std::path::PathBuf;
use winter::WinterError;

#[derive(Parser)]
#[command(
    name = "winter",
    about = "Resonance-expansion decay law for a particle in a spherical delta shell"
)]
struct Cli {
    /// Optional key=value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default, Clone)]
struct CommonArgs {
    /// Shell coupling strength.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Shell radius R.
    #[arg(long, allow_negative_numbers = true)]
    radius: Option<f64>,
    /// Resonance truncation: indices |n| <= nmax.
    #[arg(long)]
    nmax: Option<u32>,
    /// Initial state: linear | constant | file:PATH.
    #[arg(long)]
    state: Option<String>,
    /// Time grid start.
    #[arg(long = "t-start", allow_negative_numbers = true)]
    t_start: Option<f64>,
    /// Time grid stop; accepts multiples of T like "1.2T".
    #[arg(long = "t-stop")]
    t_stop: Option<String>,
    /// Number of time grid points.
    #[arg(long = "t-count")]
    t_count: Option<usize>,
    /// Number of radial grid points.
    #[arg(long = "r-count")]
    r_count: Option<usize>,
    /// Comma list of times; accepts fractions of T like "T/8".
    #[arg(long)]
    times: Option<String>,
    /// Smearing window as a fraction of T.
    #[arg(long)]
    smear: Option<f64>,
    /// Output format: csv | json.
    #[arg(long)]
    format: Option<String>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            alpha: self.alpha,
            radius: self.radius,
            n_max: self.nmax,
            state: self.state.clone(),
            t_start: self.t_start,
            t_stop: self.t_stop.clone(),
            t_count: self.t_count,
            r_count: self.r_count,
            smear: self.smear,
            format: self.format.clone(),
            out: self.out.clone(),
            threads: self.threads,
            times: self.times.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Resonance table: n, k_n, residual, Q_n^2.
    Resonances(CommonArgs),
    /// Decay law P(t) with derivative and smeared log-derivative.
    Decay(CommonArgs),
    /// Radial density snapshots |phi(r,t)|^2 (default times T/8, T/16, T/27).
    Snapshot(CommonArgs),
    /// Unsmeared derivative Pdot(t) over the time grid.
    DerivativeScan(CommonArgs),
    /// Gauss-sum growth classification for a time spec like "1/3" or "0.7071".
    Gauss {
        #[command(flatten)]
        common: CommonArgs,
        /// Time in units of T: a fraction "p/q" or a decimal.
        #[arg(long = "time", default_value = "1/2")]
        time: String,
        /// Largest partial-sum cutoff L.
        #[arg(long = "l-max", default_value_t = 100_000)]
        l_max: u64,
    },
    /// Convergence of Pdot(T_alpha) toward -4/(3 sqrt 3).
    Limit {
        #[command(flatten)]
        common: CommonArgs,
        /// Ascending comma list of alpha values.
        #[arg(long, default_value = "500,2000,8000", value_delimiter = ',')]
        alphas: Vec<f64>,
    },
    /// Fast invariant suite; exits nonzero on any failure.
    Selfcheck(CommonArgs),
}

fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<CliPhysicsError>().is_some() {
        return 3;
    }
    match err.downcast_ref::<WinterError>() {
        Some(WinterError::InvalidParameter(_))
        | Some(WinterError::GammaDomain(_))
        | Some(WinterError::WindowTooNarrow) => 1,
        Some(WinterError::NoConvergence { .. })
        | Some(WinterError::RootCollision { .. })
        | Some(WinterError::AtPole { .. })
        | Some(WinterError::Overflow { .. })
        | Some(WinterError::DegenerateNormalization { .. })
        | Some(WinterError::QuadratureFailure(_)) => 2,
        Some(WinterError::ImaginaryResidual { .. }) => 3,
        Some(WinterError::GrowthClassMismatch { .. }) => 4,
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (common, default_state) = match &cli.cmd {
        Cmd::Resonances(c)
        | Cmd::Decay(c)
        | Cmd::DerivativeScan(c)
        | Cmd::Selfcheck(c) => (c.clone(), StateKind::Linear),
        Cmd::Snapshot(c) => (c.clone(), StateKind::Constant),
        Cmd::Gauss { common, .. } | Cmd::Limit { common, .. } => {
            (common.clone(), StateKind::Linear)
        }
    };
    let config = config::resolve(common.overrides(), cli.config.as_deref(), default_state)?;
    if let Some(n) = config.threads {
        // ignore failure: the global pool may already exist
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.cmd {
        Cmd::Resonances(_) => commands::cmd_resonances(&config),
        Cmd::Decay(_) => commands::cmd_decay(&config),
        Cmd::Snapshot(_) => commands::cmd_snapshot(&config),
        Cmd::DerivativeScan(_) => commands::cmd_derivative_scan(&config),
        Cmd::Gauss { time, l_max, .. } => commands::cmd_gauss(&config, time, *l_max),
        Cmd::Limit { alphas, .. } => commands::cmd_limit(&config, alphas),
        Cmd::Selfcheck(_) => commands::cmd_selfcheck(&config),
    }
}

fn main() {
    // command-line parse problems are configuration errors (exit 1);
    // --help / --version still exit 0
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
