//! Gaussian stand-ins for the Heaviside step, the Dirac delta and its first
//! two derivatives, together with the dispersion scan used to pick the
//! kernel variance.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Heaviside step with `theta(0) = 0`.
#[inline]
pub fn theta_step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Normal density with mean zero and variance `h`.
#[inline]
pub fn delta_gauss(x: f64, h: f64) -> f64 {
    (-0.5 * x * x / h).exp() / (2.0 * PI * h).sqrt()
}

#[inline]
pub fn delta_prime_gauss(x: f64, h: f64) -> f64 {
    -(x / h) * delta_gauss(x, h)
}

#[inline]
pub fn delta_second_gauss(x: f64, h: f64) -> f64 {
    (x * x / (h * h) - 1.0 / h) * delta_gauss(x, h)
}

/// Kernel variance, either fixed in currency² or proportional to the squared
/// spot of the particle being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Absolute(f64),
    SpotRelative(f64),
}

impl Bandwidth {
    #[inline]
    pub fn variance(&self, spot: f64) -> f64 {
        match *self {
            Bandwidth::Absolute(h) => h,
            Bandwidth::SpotRelative(c) => c * spot * spot,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        match self {
            Bandwidth::Absolute(h) => Bandwidth::Absolute(h * factor),
            Bandwidth::SpotRelative(c) => Bandwidth::SpotRelative(c * factor),
        }
    }

    fn raw(&self) -> f64 {
        match *self {
            Bandwidth::Absolute(h) | Bandwidth::SpotRelative(h) => h,
        }
    }
}

/// Bandwidths per derivative order: `h0` for the delta itself, `h1` for its
/// first derivative and `h2` for the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierConfig {
    pub h0: Bandwidth,
    pub h1: Bandwidth,
    pub h2: Bandwidth,
}

impl Default for MollifierConfig {
    fn default() -> Self {
        Self::uniform(Bandwidth::Absolute(1.0))
    }
}

impl MollifierConfig {
    pub fn uniform(h: Bandwidth) -> Self {
        Self { h0: h, h1: h, h2: h }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("h0", self.h0), ("h1", self.h1), ("h2", self.h2)] {
            let h = b.raw();
            if !(h.is_finite() && h > 0.0) {
                return Err(invalid(name, format!("bandwidth must be > 0, got {h}")));
            }
        }
        Ok(())
    }

    /// All three bandwidths multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            h0: self.h0.scaled(factor),
            h1: self.h1.scaled(factor),
            h2: self.h2.scaled(factor),
        }
    }

    #[inline]
    pub fn delta(&self, x: f64, spot: f64) -> f64 {
        delta_gauss(x, self.h0.variance(spot))
    }

    #[inline]
    pub fn delta_prime(&self, x: f64, spot: f64) -> f64 {
        delta_prime_gauss(x, self.h1.variance(spot))
    }

    #[inline]
    pub fn delta_second(&self, x: f64, spot: f64) -> f64 {
        delta_second_gauss(x, self.h2.variance(spot))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub h: f64,
    pub mean: f64,
    pub dispersion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthScan {
    pub points: Vec<ScanPoint>,
    pub selected: f64,
}

impl BandwidthScan {
    /// CSV with header `h,mean,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,mean,stderr\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.h, p.mean, p.dispersion);
        }
        out
    }
}

fn check_grid(h_grid: &[f64]) -> Result<()> {
    let ok =
        h_grid.len() >= 2 && h_grid.iter().all(|h| h.is_finite() && *h > 0.0) && h_grid.windows(2).all(|w| w[1] < w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidBandwidthGrid)
    }
}

/// Walks a decreasing grid and returns the smallest `h` reached before the
/// dispersion first increases. If the very first step increases, the
/// largest `h` is returned; if every step increases the scan is degenerate.
pub fn select_from_dispersions(h_grid: &[f64], dispersions: &[f64]) -> Result<f64> {
    check_grid(h_grid)?;
    if dispersions.len() != h_grid.len() {
        return Err(Error::InvalidBandwidthGrid);
    }
    if dispersions.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::DegenerateBandwidthScan);
    }
    let first_rise = dispersions.windows(2).position(|w| w[1] > w[0]);
    Ok(match first_rise {
        Some(i) => h_grid[i],
        None => h_grid[h_grid.len() - 1],
    })
}

/// Runs `estimator` at each bandwidth of the decreasing grid, in order, and
/// selects by [`select_from_dispersions`]. The estimator returns
/// `(mean, dispersion)` and should use a fixed seed and path count.
pub fn select_bandwidth<F>(mut estimator: F, h_grid: &[f64]) -> Result<BandwidthScan>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    check_grid(h_grid)?;
    let mut points = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let (mean, dispersion) = estimator(h)?;
        points.push(ScanPoint { h, mean, dispersion });
    }
    let dispersions: Vec<f64> = points.iter().map(|p| p.dispersion).collect();
    let selected = select_from_dispersions(h_grid, &dispersions)?;
    Ok(BandwidthScan { points, selected })
}

/// Geometric grid from `largest` down to `smallest` with `n` points.
pub fn geometric_grid(largest: f64, smallest: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![largest];
    }
    let ratio = (smallest / largest).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| largest * ratio.powi(i as i32)).collect()
}
