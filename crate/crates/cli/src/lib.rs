//! Command-line front end of the orbitshare simulator: configuration
//! ingestion, command dispatch and CSV/JSON result files.

pub mod bundles;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use orbitshare::sweep::PairMode;
use orbitshare::Service;

use crate::bundles::Figure;
use crate::commands::{Artifacts, DeThresholdArgs, Overrides, Scenario, Session, SimulateArgs, UsageError};

#[derive(Debug, Parser)]
#[command(name = "orbitshare", version, about = "LEO/GEO CRDSA spectrum-sharing simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Configuration file (`[section]`, `key = value`, `#` comments).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `[run] seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Frames per simulated point; overrides `[run] frames`.
    #[arg(long, global = true, value_name = "N")]
    pub frames: Option<usize>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true, value_name = "N", env = "ORBITSHARE_JOBS")]
    pub jobs: Option<usize>,
    /// Downgrade unknown configuration keys to warnings.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// How a shared-band rate pair's throughputs are read off its load scan.
    #[arg(long, global = true, value_enum)]
    pub pair_mode: Option<PairModeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairModeArg {
    SharedSweep,
    PerServiceArgmax,
}

impl From<PairModeArg> for PairMode {
    fn from(m: PairModeArg) -> Self {
        match m {
            PairModeArg::SharedSweep => PairMode::SharedSweep,
            PairModeArg::PerServiceArgmax => PairMode::PerServiceArgmax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ServiceArg {
    Leo,
    Geo,
}

impl From<ServiceArg> for Service {
    fn from(s: ServiceArg) -> Self {
        match s {
            ServiceArg::Leo => Service::Leo,
            ServiceArg::Geo => Service::Geo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    /// Segregated bands.
    A,
    /// Shared band.
    B,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Received power, noise and SNR at both satellites.
    Linkbudget,
    /// Density-evolution load threshold for a tau, or for a rate at an SNR.
    #[command(group(ArgGroup::new("input").required(true).args(["tau", "rate"])))]
    DeThreshold {
        #[arg(long)]
        tau: Option<usize>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, value_enum, requires = "rate")]
        service: Option<ServiceArg>,
        /// Receiver SNR; defaults to the configured link of `--service`.
        #[arg(long, requires = "rate", allow_negative_numbers = true)]
        snr_db: Option<f64>,
    },
    /// Success probability and throughput at one load.
    Simulate {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        /// Rate in b/s/Hz; the LEO rate in scenario b, where the GEO rate is rate / alpha.
        #[arg(long)]
        rate: f64,
        /// Load in packets per LEO slot.
        #[arg(long)]
        load: f64,
        /// Service simulated in scenario a.
        #[arg(long, value_enum, default_value = "leo")]
        service: ServiceArg,
        #[arg(long)]
        alpha: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Segregated-band peak throughput over the rate grid, with the DE overlay.
    SweepRate,
    /// Shared-band throughput pairs classified against the segregated benchmarks.
    SweepPairs,
    /// Regenerates a figure's data with its bundled grids and seed.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

impl GlobalArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            seed: self.seed,
            frames: self.frames,
            lenient: self.lenient,
            out: self.out.clone(),
            pair_mode: self.pair_mode.map(PairMode::from),
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Artifacts> {
    let ov = cli.global.overrides();
    if ov.frames == Some(0) {
        return Err(UsageError("--frames must be at least 1".into()).into());
    }
    if let Command::Reproduce { figure } = cli.command {
        return commands::reproduce(figure, &ov);
    }
    let session = Session::load(&ov)?;
    match &cli.command {
        Command::Linkbudget => commands::linkbudget(&session),
        Command::DeThreshold { tau, rate, service, snr_db } => commands::de_threshold(
            &session,
            &DeThresholdArgs { tau: *tau, rate: *rate, service: service.map(Service::from), snr_db: *snr_db },
        ),
        Command::Simulate { scenario, rate, load, service, alpha, beta } => commands::simulate(
            &session,
            &SimulateArgs {
                scenario: match scenario {
                    ScenarioArg::A => Scenario::Segregated,
                    ScenarioArg::B => Scenario::Shared,
                },
                rate: *rate,
                load: *load,
                service: (*service).into(),
                alpha: *alpha,
                beta: *beta,
            },
        ),
        Command::SweepRate => commands::sweep_rate(&session),
        Command::SweepPairs => commands::sweep_pairs(&session),
        Command::Reproduce { .. } => unreachable!("handled above"),
    }
}

fn execute(cli: &Cli) -> Result<Artifacts> {
    match cli.global.jobs {
        Some(0) => Err(UsageError("--jobs must be at least 1".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
///
/// The JSON summary goes to stdout; diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(artifacts) => {
            for f in &artifacts.files {
                log::info!("wrote {}", f.display());
            }
            let mut out = std::io::stdout().lock();
            match out.write_all(artifacts.summary.as_bytes()).and_then(|_| out.flush()) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: writing to stdout: {e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            commands::exit_code(&e)
        }
    }
}
