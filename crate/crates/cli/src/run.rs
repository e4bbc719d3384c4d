use std::fmt::Write as _;
use std::time::{Duration, Instant};

use american_fbsde::mollifier::{select_bandwidth, BandwidthScan};
use american_fbsde::oracle::{quadrature_v1, quadrature_v2};
use american_fbsde::{price_american, Bandwidth, Model, MollifierConfig, SimConfig};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentSpec, Panel};
use crate::error::{config, core, Result};
use crate::report::{PanelReport, PriceReport, ResultRow};

/// Progress notice emitted after each priced cell.
#[derive(Debug, Clone)]
pub struct CellDone<'a> {
    pub panel: &'a str,
    pub spot: f64,
    pub elapsed: Duration,
}

pub fn run_price(spec: &ExperimentSpec) -> Result<PriceReport> {
    run_price_with(spec, |_| {})
}

pub fn run_price_with<F: FnMut(CellDone<'_>)>(spec: &ExperimentSpec, mut progress: F) -> Result<PriceReport> {
    spec.validate()?;
    let mut panels = Vec::with_capacity(spec.panels.len());
    for (i, panel) in spec.panels.iter().enumerate() {
        let base = spec.sim_config(i)?;
        let mut rows = Vec::with_capacity(panel.option.spots.len());
        for (j, &s0) in panel.option.spots.iter().enumerate() {
            let started = Instant::now();
            let at = format!("panel[{i}] S0={s0}");
            let mut cfg = base;
            let selected = match spec.sim.bandwidths.fixed() {
                Some(_) => None,
                None => {
                    let scan = scan_cell(spec, panel, &base, s0).map_err(|e| annotate(e, &at))?;
                    cfg.mollifier = MollifierConfig::uniform(Bandwidth::Absolute(scan.selected));
                    Some(scan.selected)
                }
            };
            let res = price_american(&panel.model, &panel.spec(s0), &cfg).map_err(|e| core(&at, e))?;
            let benchmark = panel.benchmarks.as_ref().map(|b| b[j]);
            let mut row = ResultRow::new(s0, benchmark, res.cumulative, res.cumulative_stderrs)?;
            row.selected_bandwidth = selected;
            rows.push(row);
            progress(CellDone {
                panel: &panel.label,
                spot: s0,
                elapsed: started.elapsed(),
            });
        }
        panels.push(PanelReport {
            label: panel.label.clone(),
            model: panel.model,
            kind: panel.option.kind,
            strike: panel.option.strike,
            expiry: panel.option.expiry,
            lambda: base.lambda,
            rows,
        });
    }
    Ok(PriceReport {
        name: spec.name.clone(),
        title: spec.title.clone(),
        paths: spec.sim.paths,
        steps: spec.sim.steps,
        order: spec.sim.order,
        seed: spec.sim.seed,
        panels,
    })
}

fn annotate(e: crate::error::CliError, at: &str) -> crate::error::CliError {
    match e {
        crate::error::CliError::Core { context, source } => crate::error::CliError::Core {
            context: format!("{at}: {context}"),
            source,
        },
        other => other,
    }
}

/// Dispersion scan of one cell over a uniform absolute kernel variance. The
/// statistic is the cumulative price at the configured order.
fn scan_cell(spec: &ExperimentSpec, panel: &Panel, base: &SimConfig, s0: f64) -> Result<BandwidthScan> {
    let grid = spec.scan.grid(panel.option.strike);
    let option = panel.spec(s0);
    let order = base.order;
    let estimator = |h: f64| {
        let cfg = SimConfig {
            n_paths: spec.scan.paths.unwrap_or(base.n_paths),
            mollifier: MollifierConfig::uniform(Bandwidth::Absolute(h)),
            ..*base
        };
        let r = price_american(&panel.model, &option, &cfg)?;
        Ok((r.cumulative[order], r.cumulative_stderrs[order]))
    };
    select_bandwidth(estimator, &grid).map_err(|e| core("scan", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub panel: String,
    pub s0: f64,
    pub order: usize,
    pub paths: u64,
    pub scan: BandwidthScan,
}

impl ScanReport {
    pub fn to_csv(&self) -> String {
        self.scan.to_csv()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_pretty(&self) -> String {
        let mut out = format!(
            "[{}] S0={} order={} paths={}\n{:>12} {:>12} {:>12}\n",
            self.panel, self.s0, self.order, self.paths, "h", "mean", "stderr"
        );
        for p in &self.scan.points {
            let mark = if p.h == self.scan.selected { "  <- selected" } else { "" };
            let _ = writeln!(out, "{:>12.6} {:>12.6} {:>12.6}{mark}", p.h, p.mean, p.dispersion);
        }
        out
    }
}

/// Scans the cell named by `[scan]` (panel index and spot, defaulting to
/// the first spot of the panel).
pub fn run_bandwidth_scan(spec: &ExperimentSpec) -> Result<ScanReport> {
    spec.validate()?;
    let i = spec.scan.panel;
    let panel = &spec.panels[i];
    let s0 = spec.scan.spot.unwrap_or(panel.option.spots[0]);
    panel.spec(s0).validate().map_err(|e| core("scan.spot", e))?;
    let base = spec.sim_config(i)?;
    let scan = scan_cell(spec, panel, &base, s0)?;
    Ok(ScanReport {
        panel: panel.label.clone(),
        s0,
        order: base.order,
        paths: spec.scan.paths.unwrap_or(base.n_paths),
        scan,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Three standard errors exceed a tenth of the reference, so neither
    /// agreement nor disagreement means anything.
    Inconclusive,
}

/// Share of the reference value that three standard errors may cover before
/// a comparison is declared inconclusive.
pub const INCONCLUSIVE_SHARE: f64 = 0.1;

pub fn verdict(mean: f64, stderr: f64, reference: f64) -> Verdict {
    let band = 3.0 * stderr;
    if band > INCONCLUSIVE_SHARE * reference.abs() {
        return Verdict::Inconclusive;
    }
    if (mean - reference).abs() <= band {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub panel: String,
    pub s0: f64,
    pub order: usize,
    pub particle: f64,
    pub stderr: f64,
    pub quadrature: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub paths: u64,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Fail)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("panel,S0,order,particle,stderr,quadrature,verdict\n");
        for r in &self.rows {
            let v = match r.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
                Verdict::Inconclusive => "inconclusive",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{v}",
                r.panel, r.s0, r.order, r.particle, r.stderr, r.quadrature
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_pretty(&self) -> String {
        let mut out = format!(
            "{:<12} {:>8} {:>5} {:>12} {:>10} {:>12}  verdict\n",
            "panel", "S0", "order", "particle", "stderr", "quadrature"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>5} {:>12.6} {:>10.6} {:>12.6}  {:?}",
                r.panel, r.s0, r.order, r.particle, r.stderr, r.quadrature, r.verdict
            );
        }
        out
    }
}

/// First- and second-order particle estimates against the quadrature
/// oracle. Both sides use the kernel variance of the `[quadrature]` block so
/// that they target the same mollified quantity.
pub fn run_oracle_check(spec: &ExperimentSpec) -> Result<OracleReport> {
    spec.validate()?;
    let mut rows = Vec::new();
    for (i, panel) in spec.panels.iter().enumerate() {
        let Model::BlackScholes(params) = panel.model else {
            return Err(config(
                format!("panel[{i}].model"),
                "oracle-check needs a black-scholes model",
            ));
        };
        let cfg = SimConfig {
            order: 2,
            mollifier: MollifierConfig::uniform(spec.quadrature.delta_variance),
            ..spec.sim_config(i)?
        };
        for &s0 in &panel.option.spots {
            let at = format!("panel[{i}] S0={s0}");
            let option = panel.spec(s0);
            let res = price_american(&panel.model, &option, &cfg).map_err(|e| core(&at, e))?;
            let quad = [
                quadrature_v1(&params, &option, &spec.quadrature).map_err(|e| core(&at, e))?,
                quadrature_v2(&params, &option, &spec.quadrature).map_err(|e| core(&at, e))?,
            ];
            for order in 1..=2 {
                let (m, se, q) = (res.means[order], res.stderrs[order], quad[order - 1]);
                rows.push(OracleRow {
                    panel: panel.label.clone(),
                    s0,
                    order,
                    particle: m,
                    stderr: se,
                    quadrature: q,
                    verdict: verdict(m, se, q),
                });
            }
        }
    }
    Ok(OracleReport {
        paths: spec.sim.paths,
        rows,
    })
}
