use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbsde_cli::{
    experiments, run_bandwidth_scan, run_oracle_check, run_price_with, write_output, ExperimentSpec, OutputFormat,
    Overrides, Result, WORKERS_ENV,
};

/// Exit status when `--strict` is set and an oracle comparison fails.
const STRICT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "american-fbsde",
    version,
    about = "American option pricing by perturbative expansion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Price every cell of an experiment file.
    Price,
    /// Reproduce a shipped table (`table1` .. `table4`, `table4-largepath`)
    /// or run an experiment file given by path.
    Table { name: String },
    /// Compare first and second order particle estimates with quadrature.
    OracleCheck,
    /// Dispersion scan over the kernel variance for one cell.
    BandwidthScan,
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed of the random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo paths per cell.
    #[arg(long, global = true)]
    paths: Option<u64>,
    /// Time steps on [0, T].
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Highest expansion order (0 to 4).
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Interaction clock intensity, overriding every panel.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Worker threads; falls back to the environment, then the file.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output file, written atomically. Defaults to stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Exit nonzero when an oracle comparison fails.
    #[arg(long, global = true)]
    strict: bool,
    /// Suppress progress on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            paths: self.paths,
            steps: self.steps,
            order: self.order,
            lambda: self.lambda,
            workers: self.workers,
            output: self.output.clone(),
            format: self.format,
        }
    }

    fn load(&self, fallback: Option<&str>) -> Result<ExperimentSpec> {
        let mut spec = match (&self.config, fallback) {
            (Some(path), _) => ExperimentSpec::load(path)?,
            (None, Some(name)) => experiments::load(name)?,
            (None, None) => {
                return Err(fbsde_cli::CliError::Config {
                    field: "--config".into(),
                    reason: "an experiment file is required".into(),
                })
            }
        };
        spec.apply(&self.overrides())?;
        if !self.quiet {
            for w in spec.warnings() {
                eprintln!("warning: {w}");
            }
        }
        Ok(spec)
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let c = &cli.common;
    let spec = match &cli.command {
        Command::Price => c.load(None)?,
        Command::Table { name } => {
            let mut spec = if std::path::Path::new(name).is_file() {
                ExperimentSpec::load(std::path::Path::new(name))?
            } else {
                experiments::load(name)?
            };
            spec.apply(&c.overrides())?;
            spec
        }
        Command::OracleCheck => c.load(Some("oracle"))?,
        Command::BandwidthScan => c.load(None)?,
    };
    let path = spec.output.path.as_deref();
    let format = spec.output.format;
    let mut strict_failure = false;
    let text = match &cli.command {
        Command::Price | Command::Table { .. } => {
            let report = run_price_with(&spec, |cell| {
                if !c.quiet {
                    eprintln!("[{}] S0={} done in {:.1?}", cell.panel, cell.spot, cell.elapsed);
                }
            })?;
            match format {
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Json => report.to_json()?,
                OutputFormat::PrettyTable => report.to_pretty(),
            }
        }
        Command::OracleCheck => {
            let report = run_oracle_check(&spec)?;
            if report.any_failed() {
                if !c.quiet {
                    eprintln!("oracle check: at least one comparison failed");
                }
                strict_failure = c.strict;
            }
            match format {
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Json => report.to_json()?,
                OutputFormat::PrettyTable => report.to_pretty(),
            }
        }
        Command::BandwidthScan => {
            let report = run_bandwidth_scan(&spec)?;
            match format {
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Json => report.to_json()?,
                OutputFormat::PrettyTable => report.to_pretty(),
            }
        }
    };
    write_output(&text, path)?;
    Ok(!strict_failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(STRICT_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
