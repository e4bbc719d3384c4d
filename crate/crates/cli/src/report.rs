use std::fmt::Write as _;

use american_fbsde::particle::MAX_ORDER;
use american_fbsde::{Model, OptionKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// `100 * (value - benchmark) / benchmark`.
pub fn error_ratio(value: f64, benchmark: f64) -> Result<f64> {
    if benchmark == 0.0 || !benchmark.is_finite() {
        return Err(CliError::ZeroBenchmark);
    }
    Ok(100.0 * (value - benchmark) / benchmark)
}

/// One spot of one panel. `prices[k]` and `stderrs[k]` are the cumulative
/// order-`k` price and its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub s0: f64,
    pub benchmark: Option<f64>,
    pub prices: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub error_ratios: Option<Vec<f64>>,
    /// Kernel variance chosen by the scan, when the experiment asked for one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_bandwidth: Option<f64>,
}

impl ResultRow {
    pub fn new(s0: f64, benchmark: Option<f64>, prices: Vec<f64>, stderrs: Vec<f64>) -> Result<Self> {
        let error_ratios = match benchmark {
            Some(b) => Some(prices.iter().map(|&v| error_ratio(v, b)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        Ok(Self {
            s0,
            benchmark,
            prices,
            stderrs,
            error_ratios,
            selected_bandwidth: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelReport {
    pub label: String,
    pub model: Model,
    pub kind: OptionKind,
    pub strike: f64,
    pub expiry: f64,
    pub lambda: f64,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub paths: u64,
    pub steps: usize,
    pub order: usize,
    pub seed: u64,
    pub panels: Vec<PanelReport>,
}

fn field(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

impl PriceReport {
    pub fn rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.panels.iter().flat_map(|p| p.rows.iter())
    }

    /// Columns `S0, benchmark, v0..v4, se0..se4, er0..er4`; orders that were
    /// not computed are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("S0,benchmark");
        for prefix in ["v", "se", "er"] {
            for k in 0..=MAX_ORDER {
                let _ = write!(out, ",{prefix}{k}");
            }
        }
        out.push('\n');
        for row in self.rows() {
            let _ = write!(out, "{}", row.s0);
            field(&mut out, row.benchmark);
            for k in 0..=MAX_ORDER {
                field(&mut out, row.prices.get(k).copied());
            }
            for k in 0..=MAX_ORDER {
                field(&mut out, row.stderrs.get(k).copied());
            }
            for k in 0..=MAX_ORDER {
                field(&mut out, row.error_ratios.as_ref().and_then(|e| e.get(k).copied()));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_pretty(&self) -> String {
        let ordinal = |k: usize| match k {
            0 => "0th".to_string(),
            1 => "1st".to_string(),
            2 => "2nd".to_string(),
            3 => "3rd".to_string(),
            k => format!("{k}th"),
        };
        let mut out = String::new();
        if let Some(t) = &self.title {
            let _ = writeln!(out, "{t}");
        }
        let _ = writeln!(
            out,
            "{}: paths={} steps={} order={} seed={}",
            self.name, self.paths, self.steps, self.order, self.seed
        );
        for p in &self.panels {
            let _ = writeln!(
                out,
                "\n[{}] {} {:?} K={} T={} lambda={}",
                p.label,
                p.model.name(),
                p.kind,
                p.strike,
                p.expiry,
                p.lambda
            );
            let orders = self.order + 1;
            let with_er = p.rows.iter().any(|r| r.error_ratios.is_some());
            let _ = write!(out, "{:>8} {:>10}", "S0", "Benchmark");
            for k in 0..orders {
                let _ = write!(out, " {:>9}", ordinal(k));
            }
            if with_er {
                for k in 0..orders {
                    let _ = write!(out, " {:>9}", format!("ER({})", ordinal(k)));
                }
            }
            out.push('\n');
            for r in &p.rows {
                let _ = write!(
                    out,
                    "{:>8} {:>10}",
                    r.s0,
                    r.benchmark.map_or(String::new(), |b| format!("{b:.3}"))
                );
                for v in &r.prices {
                    let _ = write!(out, " {v:>9.3}");
                }
                if let Some(er) = &r.error_ratios {
                    for e in er {
                        let _ = write!(out, " {:>9}", format!("{e:.2}%"));
                    }
                }
                out.push('\n');
                let _ = write!(out, "{:>8} {:>10}", "", "(stderr)");
                for s in &r.stderrs {
                    let _ = write!(out, " {s:>9.3}");
                }
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_ratio_examples() {
        assert!((error_ratio(15.518, 15.498).unwrap() - 0.129).abs() < 5e-4);
        assert!((error_ratio(24.777, 25.658).unwrap() + 3.434).abs() < 5e-4);
        assert_eq!(error_ratio(7.5, 7.5).unwrap(), 0.0);
        assert!(matches!(error_ratio(1.0, 0.0), Err(CliError::ZeroBenchmark)));
    }

    #[test]
    fn error_ratio_present_iff_benchmark() {
        let r = ResultRow::new(100.0, None, vec![1.0], vec![0.0]).unwrap();
        assert!(r.error_ratios.is_none());
        let r = ResultRow::new(100.0, Some(2.0), vec![1.0, 3.0], vec![0.0, 0.1]).unwrap();
        assert_eq!(r.error_ratios, Some(vec![-50.0, 50.0]));
        assert!(ResultRow::new(100.0, Some(0.0), vec![1.0], vec![0.0]).is_err());
    }
}
