use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use glmcs::harness::{
    coverage_experiment, martingale_validate, regret_audit, shifted_martingale_validate, width_experiment, write_csv,
    Row, ScenarioConfig, SetSpec,
};
use glmcs::{Error, GlmFamily};

/// Monte Carlo harness for GLM confidence sets.
#[derive(Parser)]
#[command(name = "glmcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coverage experiment: membership of theta_star per replication and checkpoint.
    Simulate(Common),
    /// Width experiment: log volumes and worst-case vs rank-adaptive widths.
    Width(Common),
    /// Regret audit: realized EWA regret against its bounds.
    Regret(Common),
    /// Martingale validity (mean of M_n and Ville crossing frequency).
    ValidateMartingale {
        #[command(flatten)]
        common: Common,
        /// Use the eta-shifted mixture losses.
        #[arg(long)]
        eta: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    /// Horizon N.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Replace the configured sets with the default construction of this type.
    #[arg(long)]
    set: Option<String>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                ScenarioConfig::from_json(&text)?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.reps {
            cfg.replications = r;
        }
        if let Some(f) = &self.family {
            cfg.family = GlmFamily::from_name(f)?;
        }
        if let Some(d) = self.d {
            cfg.dim = d;
        }
        if let Some(n) = self.n {
            cfg.horizon = n;
            cfg.checkpoints = cfg.checkpoints.take().map(|c| c.into_iter().filter(|&k| k <= n).collect());
        }
        if let Some(delta) = self.delta {
            cfg.delta = delta;
        }
        if let Some(name) = &self.set {
            cfg.sets = vec![SetSpec::default_named(name, cfg.dim)?];
        }
        Ok(cfg)
    }

    fn emit(&self, rows: &[Row]) -> Result<(), Error> {
        match &self.out {
            Some(path) => {
                let f = File::create(path).map_err(|e| Error::Io(format!("cannot create {}: {e}", path.display())))?;
                write_csv(rows, BufWriter::new(f))
            }
            None => write_csv(rows, io::stdout().lock()),
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate(c) => {
            let rows = coverage_experiment(&c.load()?)?;
            c.emit(&rows)?;
        }
        Command::Width(c) => {
            let rows = width_experiment(&c.load()?)?;
            c.emit(&rows)?;
        }
        Command::Regret(c) => {
            let audit = regret_audit(&c.load()?)?;
            c.emit(&audit.rows)?;
            if audit.violations > 0 {
                eprintln!(
                    "regret_audit: {} bound violations (min slack {:e})",
                    audit.violations, audit.min_slack
                );
                return Ok(ExitCode::from(1));
            }
        }
        Command::ValidateMartingale { common, eta } => {
            let cfg = common.load()?;
            let report = match eta.or(cfg.eta) {
                Some(eta) => shifted_martingale_validate(&cfg, eta)?,
                None => martingale_validate(&cfg)?,
            };
            common.emit(&report.rows)?;
            let _ = writeln!(
                io::stderr(),
                "crossing frequency {} (threshold {}), mean within 3 SE at all checkpoints: {}",
                report.crossing_frequency,
                report.crossing_threshold,
                report.within_three_se.iter().all(|b| *b)
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("glmcs: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
