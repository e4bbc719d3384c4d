//! Batch front end for the expansion pricer: experiment files, table
//! reproduction, oracle cross-checks and bandwidth scans, with CSV, JSON and
//! plain-text output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Bandwidths, ExperimentSpec, OutputFormat, Overrides, Panel, WORKERS_ENV};
pub use error::{CliError, Result};
pub use output::write_output;
pub use report::{error_ratio, PanelReport, PriceReport, ResultRow};
pub use run::{
    run_bandwidth_scan, run_oracle_check, run_price, run_price_with, verdict, OracleReport, OracleRow, ScanReport,
    Verdict,
};
