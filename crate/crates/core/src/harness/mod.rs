//! Simulation engine behind the `glmcs` CLI: seeded scenarios, martingale
//! checks, coverage and width experiments, regret audits, CSV output.
//!
//! Replications run in parallel; each owns the ChaCha20 stream derived from
//! `(seed, replication index)`, and rows are emitted in replication order, so
//! output is byte-identical across runs and thread counts.

mod config;
mod coverage;
mod martingale;
mod output;
mod regret;
mod scenario;

pub use config::{CovariateProcess, ForecasterSpec, ScenarioConfig, SetSpec, ThetaStarSpec};
pub use coverage::{check_mode_metadata, coverage_experiment, width_experiment, WidthMetric};
pub use martingale::{martingale_validate, shifted_martingale_validate, MartingaleReport};
pub use output::{binomial_margin, csv_string, write_csv, Row, CSV_HEADER};
pub use regret::{regret_audit, RegretAudit, SLACK_TOL};
pub use scenario::{draw_theta_star, eigenvalue_spread, replication_rng, simulate, stream, Replication, Scenario};
