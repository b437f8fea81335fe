//! Command-line front end: flag parsing, dispatch to the suites, report files
//! and exit status.

pub mod config;
pub mod report;
pub mod suite;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{default_battery, BatteryEntry, RunConfig};
pub use report::{Check, Report, SuiteVerdict};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "clt-monotone",
    version,
    about = "Entropy, Fisher information and maximal correlation of i.i.d. sums, with self-verification"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Base family: gaussian, uniform, triangular, gaussian_mixture, exponential
    #[arg(long, global = true)]
    pub dist: Option<String>,
    /// Comma-separated family parameters
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub params: Option<String>,
    /// Two-column density table; selects the tabulated family
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    /// Use the base law as given instead of shifting it to mean 0, variance 1
    #[arg(long, global = true)]
    pub no_standardize: bool,
    /// Largest number of summands (1 to 16)
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    /// Grid points across the nominal window (a power of two)
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Half-width of the nominal grid window in standard deviations of S_{n_max}
    #[arg(long, global = true)]
    pub grid_span: Option<f64>,
    /// Flow time used to mollify rough bases (0 keeps them rough)
    #[arg(long, global = true)]
    pub t_smooth: Option<f64>,
    /// Seed for every random stream
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    /// `key = value` settings file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for report files
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropy and Fisher information of U_1..U_{n_max}
    Functionals,
    /// Maximal correlation of (S_m, S_n) on the grid and from samples
    Maxcorr {
        #[arg(short, default_value_t = 1)]
        m: usize,
        #[arg(short, default_value_t = 2)]
        n: usize,
    },
    /// Entropy gaps by integrating Fisher information along the Ornstein-Uhlenbeck flow
    Debruijn,
    /// Score of S_n against the conditional expectation of the score of S_m
    Scorecheck {
        #[arg(short)]
        m: Option<usize>,
        #[arg(short)]
        n: Option<usize>,
    },
    /// Every check, across the battery
    Verify,
}

impl CommonArgs {
    fn settings(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        put("dist", self.dist.clone());
        put("params", self.params.clone());
        put("table", self.table.as_ref().map(|p| p.display().to_string()));
        put("standardize", self.no_standardize.then(|| "false".to_string()));
        put("n_max", self.n_max.map(|v| v.to_string()));
        put("grid_points", self.grid_points.map(|v| v.to_string()));
        put("grid_span", self.grid_span.map(|v| v.to_string()));
        put("t_smooth", self.t_smooth.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("mc_samples", self.mc_samples.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        out
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut settings = match &self.config {
            Some(path) => config::read_config_file(path)?,
            None => Vec::new(),
        };
        settings.extend(self.settings());
        let mut cfg = RunConfig::default();
        cfg.apply(&settings)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Run one subcommand against a resolved configuration and write its reports.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Report> {
    report::prepare_output_dir(&cfg.output_dir)?;
    let mut r = Report::new();
    match command {
        Command::Functionals => suite::functionals_suite(cfg, &mut r),
        Command::Maxcorr { m, n } => suite::maxcorr_suite(cfg, *m, *n, &mut r),
        Command::Debruijn => suite::debruijn_suite(cfg, &mut r),
        Command::Scorecheck { m, n } => match (m, n) {
            (None, None) => suite::score_suite(cfg, suite::default_projection_pairs(), &mut r),
            (m, n) => suite::scorecheck_suite(cfg, m.unwrap_or(1), n.unwrap_or(2), &mut r),
        },
        Command::Verify => r = suite::run_verify(cfg),
    }
    r.write(&cfg.output_dir)?;
    Ok(r)
}

/// Parse-free entry point: returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match cli.common.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return report::exit_code(&e);
        }
    };
    match execute(&cli.command, &cfg) {
        Ok(r) => {
            for (suite, e) in r.errors() {
                eprintln!("{suite}: {e}");
            }
            let verdict = r.verdict();
            for c in verdict.failed() {
                eprintln!("FAIL {} (value {}, threshold {})", c.name, c.value, c.threshold);
            }
            println!(
                "{} of {} checks passed; reports in {}",
                verdict.checks.len() - verdict.failed().count(),
                verdict.checks.len(),
                cfg.output_dir.display()
            );
            r.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            report::exit_code(&e)
        }
    }
}

/// Convenience for callers holding raw arguments.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                report::EXIT_CONFIG
            } else {
                report::EXIT_PASS
            }
        }
    }
}

impl From<clap::Error> for Error {
    fn from(e: clap::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
