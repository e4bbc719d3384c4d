//! Experiment files.
//!
//! An experiment is a TOML document with a `[sim]` block shared by every
//! panel and one `[[panel]]` table per model/contract combination:
//!
//! ```toml
//! name = "demo"
//!
//! [sim]
//! paths = 100000
//! steps = 600
//! lambda = 2.0
//! order = 3
//! bandwidths = { absolute = 1.0 }
//!
//! [[panel]]
//! label = "y=0.12"
//! model = { type = "black-scholes", r = 0.08, y = 0.12, sigma = 0.2 }
//! option = { kind = "put", strike = 100.0, expiry = 3.0, spots = [90.0, 100.0] }
//! benchmarks = [20.083, 15.498]
//! ```

use std::path::{Path, PathBuf};

use american_fbsde::oracle::QuadratureConfig;
use american_fbsde::{Bandwidth, Model, MollifierConfig, OptionKind, OptionSpec, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{config, core, CliError, Result};

/// Name of the environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "AMERICAN_FBSDE_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub sim: SimBlock,
    #[serde(default)]
    pub scan: ScanBlock,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(rename = "panel")]
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub paths: u64,
    pub steps: usize,
    pub lambda: f64,
    pub order: usize,
    #[serde(default = "default_bandwidths")]
    pub bandwidths: Bandwidths,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
}

fn default_bandwidths() -> Bandwidths {
    Bandwidths::Uniform(Bandwidth::Absolute(1.0))
}

fn default_seed() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

/// Either fixed kernel variances or the keyword `"scan"`, which selects a
/// single variance per cell by the dispersion scan before pricing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidths {
    Scan(ScanKeyword),
    Uniform(Bandwidth),
    PerOrder(MollifierConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKeyword {
    Scan,
}

impl Bandwidths {
    pub fn fixed(&self) -> Option<MollifierConfig> {
        match *self {
            Bandwidths::Scan(_) => None,
            Bandwidths::Uniform(b) => Some(MollifierConfig::uniform(b)),
            Bandwidths::PerOrder(m) => Some(m),
        }
    }
}

/// Grid and target of the bandwidth scan. Grid bounds default to
/// `K^2 * 1e-2` down to `K^2 * 1e-6`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub largest: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smallest: Option<f64>,
    #[serde(default = "default_scan_points")]
    pub points: usize,
    /// Paths per grid point; defaults to the pricing path count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    /// Cell scanned by `bandwidth-scan`.
    #[serde(default)]
    pub panel: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spot: Option<f64>,
}

fn default_scan_points() -> usize {
    9
}

impl Default for ScanBlock {
    fn default() -> Self {
        Self {
            largest: None,
            smallest: None,
            points: default_scan_points(),
            paths: None,
            panel: 0,
            spot: None,
        }
    }
}

impl ScanBlock {
    pub fn grid(&self, strike: f64) -> Vec<f64> {
        let k2 = strike * strike;
        american_fbsde::mollifier::geometric_grid(
            self.largest.unwrap_or(k2 * 1e-2),
            self.smallest.unwrap_or(k2 * 1e-6),
            self.points,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    PrettyTable,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub label: String,
    pub model: Model,
    pub option: OptionBlock,
    /// Reference prices aligned with `option.spots`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmarks: Option<Vec<f64>>,
    /// Clock intensity for this panel only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionBlock {
    pub kind: OptionKind,
    pub strike: f64,
    pub expiry: f64,
    pub spots: Vec<f64>,
}

impl Panel {
    pub fn spec(&self, spot: f64) -> OptionSpec {
        OptionSpec {
            kind: self.option.kind,
            strike: self.option.strike,
            expiry: self.option.expiry,
            spot,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub steps: Option<usize>,
    pub order: Option<usize>,
    pub lambda: Option<f64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            source: Box::new(e),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment specs always serialise")
    }

    /// Applies flag overrides, then the worker environment variable when no
    /// flag was given, and re-validates.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = o.seed {
            self.sim.seed = v;
        }
        if let Some(v) = o.paths {
            self.sim.paths = v;
        }
        if let Some(v) = o.steps {
            self.sim.steps = v;
        }
        if let Some(v) = o.order {
            self.sim.order = v;
        }
        if let Some(v) = o.lambda {
            self.sim.lambda = v;
            for p in &mut self.panels {
                p.lambda = None;
            }
        }
        if let Some(v) = o.workers {
            self.sim.workers = Some(v);
        } else if let Some(v) = workers_from_env()? {
            self.sim.workers = Some(v);
        }
        if let Some(p) = &o.output {
            self.output.path = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels.is_empty() {
            return Err(config("panel", "at least one panel is required"));
        }
        let base = self.sim_config(0)?;
        base.validate().map_err(|e| core("sim", e))?;
        if self.sim.workers == Some(0) {
            return Err(config("sim.workers", "must be at least 1"));
        }
        if self.scan.points < 2 {
            return Err(config("scan.points", "must be at least 2"));
        }
        for (name, v) in [
            ("scan.largest", self.scan.largest),
            ("scan.smallest", self.scan.smallest),
        ] {
            if let Some(h) = v {
                if !(h.is_finite() && h > 0.0) {
                    return Err(config(name, format!("must be > 0, got {h}")));
                }
            }
        }
        if self.scan.paths == Some(0) {
            return Err(config("scan.paths", "must be at least 1"));
        }
        for (i, p) in self.panels.iter().enumerate() {
            let at = format!("panel[{i}]");
            p.model.validate().map_err(|e| core(format!("{at}.model"), e))?;
            if p.option.spots.is_empty() {
                return Err(config(format!("{at}.option.spots"), "at least one spot is required"));
            }
            for (j, &s) in p.option.spots.iter().enumerate() {
                p.spec(s).validate().map_err(|e| match e {
                    american_fbsde::Error::InvalidParameter { name, reason } => {
                        let field = if name == "spot" {
                            format!("{at}.option.spots[{j}]")
                        } else {
                            format!("{at}.option.{name}")
                        };
                        config(field, reason)
                    }
                    other => core(format!("{at}.option"), other),
                })?;
            }
            if let Some(b) = &p.benchmarks {
                if b.len() != p.option.spots.len() {
                    return Err(config(
                        format!("{at}.benchmarks"),
                        format!("{} benchmarks for {} spots", b.len(), p.option.spots.len()),
                    ));
                }
            }
            if let Some(l) = p.lambda {
                if !(l.is_finite() && l > 0.0) {
                    return Err(config(format!("{at}.lambda"), format!("must be > 0, got {l}")));
                }
            }
        }
        if self.scan.panel >= self.panels.len() {
            return Err(config("scan.panel", format!("no panel with index {}", self.scan.panel)));
        }
        Ok(())
    }

    pub fn workers(&self) -> usize {
        self.sim
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Engine configuration for panel `i`. Under `"scan"` the mollifier is a
    /// placeholder to be replaced by the selected bandwidth.
    pub fn sim_config(&self, i: usize) -> Result<SimConfig> {
        let panel = self
            .panels
            .get(i)
            .ok_or_else(|| config("panel", format!("no panel with index {i}")))?;
        Ok(SimConfig {
            n_paths: self.sim.paths,
            n_steps: self.sim.steps,
            lambda: panel.lambda.unwrap_or(self.sim.lambda),
            order: self.sim.order,
            mollifier: self.sim.bandwidths.fixed().unwrap_or_default(),
            seed: self.sim.seed,
            workers: self.workers(),
            common_random_numbers: self.sim.common_random_numbers,
        })
    }

    /// Feller violations and similar non-fatal remarks.
    pub fn warnings(&self) -> Vec<String> {
        self.panels
            .iter()
            .filter_map(|p| match &p.model {
                Model::Heston(h) if !h.feller_condition_holds() => Some(format!(
                    "panel {:?}: Feller condition 2*xi*theta >= eta^2 fails; variance may hit zero",
                    p.label
                )),
                _ => None,
            })
            .collect()
    }
}

fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(config(WORKERS_ENV, format!("expected a positive integer, got {v:?}"))),
        },
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"
name = "demo"
[sim]
paths = 1000
steps = 50
lambda = 2.0
order = 2
bandwidths = { absolute = 1.0 }

[[panel]]
label = "a"
model = { type = "black-scholes", r = 0.08, y = 0.12, sigma = 0.2 }
option = { kind = "put", strike = 100.0, expiry = 3.0, spots = [90.0, 100.0] }
benchmarks = [20.083, 15.498]
"#;

    #[test]
    fn parses_and_round_trips() {
        let spec = ExperimentSpec::from_toml(DEMO, "demo").unwrap();
        assert_eq!(spec.panels[0].option.spots, vec![90.0, 100.0]);
        assert_eq!(spec.sim.seed, 1);
        let again = ExperimentSpec::from_toml(&spec.to_toml(), "again").unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn bandwidth_forms() {
        for (text, want) in [
            (r#"bandwidths = "scan""#, None),
            (
                r#"bandwidths = { spot_relative = 1e-4 }"#,
                Some(MollifierConfig::uniform(Bandwidth::SpotRelative(1e-4))),
            ),
            (
                r#"bandwidths = { h0 = { absolute = 0.3 }, h1 = { absolute = 0.1 }, h2 = { absolute = 0.1 } }"#,
                Some(MollifierConfig {
                    h0: Bandwidth::Absolute(0.3),
                    h1: Bandwidth::Absolute(0.1),
                    h2: Bandwidth::Absolute(0.1),
                }),
            ),
        ] {
            let doc = DEMO.replace("bandwidths = { absolute = 1.0 }", text);
            let spec = ExperimentSpec::from_toml(&doc, "t").unwrap();
            assert_eq!(spec.sim.bandwidths.fixed(), want, "{text}");
        }
    }

    #[test]
    fn field_level_errors() {
        let cases = [
            (
                "spots = [90.0, 100.0]",
                "spots = [90.0, -1.0]",
                "panel[0].option.spots[1]",
            ),
            (
                "benchmarks = [20.083, 15.498]",
                "benchmarks = [20.083]",
                "panel[0].benchmarks",
            ),
            ("strike = 100.0", "strike = 0.0", "panel[0].option.strike"),
            ("sigma = 0.2", "sigma = -0.2", "panel[0].model.sigma"),
            ("lambda = 2.0", "lambda = 0.0", "sim.lambda"),
        ];
        for (from, to, field) in cases {
            let err = ExperimentSpec::from_toml(&DEMO.replace(from, to), "t").unwrap_err();
            match err {
                CliError::Config { field: f, .. } => assert_eq!(f, field),
                other => panic!("{to}: unexpected {other}"),
            }
        }
        assert!(matches!(
            ExperimentSpec::from_toml(&DEMO.replace("order = 2", "order = 2\nbogus = 1"), "t"),
            Err(CliError::Parse { .. })
        ));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut spec = ExperimentSpec::from_toml(DEMO, "demo").unwrap();
        spec.panels[0].lambda = Some(8.0);
        spec.apply(&Overrides {
            paths: Some(10),
            lambda: Some(4.0),
            workers: Some(3),
            format: Some(OutputFormat::Json),
            ..Overrides::default()
        })
        .unwrap();
        let cfg = spec.sim_config(0).unwrap();
        assert_eq!((cfg.n_paths, cfg.lambda, cfg.workers), (10, 4.0, 3));
        assert_eq!(spec.output.format, OutputFormat::Json);
        assert!(spec
            .apply(&Overrides {
                paths: Some(0),
                ..Overrides::default()
            })
            .is_err());
    }
}
