//! Forward dynamics of the underlying, the contract payoff and the
//! instantaneous early-exercise premium rate.
//!
//! Two models are provided: Black-Scholes with a continuous dividend yield,
//! stepped with the exact lognormal transition, and Heston, stepped with a
//! full-truncation Euler scheme in log-spot.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// Contract definition of a vanilla American (or European) option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    /// Years to expiry.
    pub expiry: f64,
    pub spot: f64,
}

impl OptionSpec {
    pub fn new(kind: OptionKind, strike: f64, expiry: f64, spot: f64) -> Result<Self> {
        let spec = Self {
            kind,
            strike,
            expiry,
            spot,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn put(strike: f64, expiry: f64, spot: f64) -> Result<Self> {
        Self::new(OptionKind::Put, strike, expiry, spot)
    }

    pub fn call(strike: f64, expiry: f64, spot: f64) -> Result<Self> {
        Self::new(OptionKind::Call, strike, expiry, spot)
    }

    pub fn with_spot(self, spot: f64) -> Self {
        Self { spot, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        positive("strike", self.strike)?;
        positive("expiry", self.expiry)?;
        positive("spot", self.spot)
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {x}")))
    }
}

fn nonnegative(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {x}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackScholesParams {
    pub r: f64,
    pub y: f64,
    pub sigma: f64,
}

impl BlackScholesParams {
    pub fn new(r: f64, y: f64, sigma: f64) -> Result<Self> {
        let p = Self { r, y, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        nonnegative("r", self.r)?;
        nonnegative("y", self.y)?;
        nonnegative("sigma", self.sigma)
    }
}

/// Heston parameters. `v0` is the initial variance, `xi` the speed of mean
/// reversion, `theta` the long-run variance and `eta` the volatility of
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub r: f64,
    pub y: f64,
    pub v0: f64,
    pub xi: f64,
    pub theta: f64,
    pub eta: f64,
    pub rho: f64,
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        nonnegative("r", self.r)?;
        nonnegative("y", self.y)?;
        nonnegative("v0", self.v0)?;
        positive("xi", self.xi)?;
        positive("theta", self.theta)?;
        positive("eta", self.eta)?;
        if !(self.rho.is_finite() && self.rho.abs() <= 1.0) {
            return Err(invalid("rho", format!("must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }

    /// Standard Feller condition `2 xi theta >= eta^2`. Violations are legal
    /// (the scheme truncates), callers are expected to warn.
    pub fn feller_condition_holds(&self) -> bool {
        2.0 * self.xi * self.theta >= self.eta * self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Model {
    BlackScholes(BlackScholesParams),
    Heston(HestonParams),
}

impl Model {
    pub fn rate(&self) -> f64 {
        match self {
            Model::BlackScholes(p) => p.r,
            Model::Heston(p) => p.r,
        }
    }

    pub fn dividend_yield(&self) -> f64 {
        match self {
            Model::BlackScholes(p) => p.y,
            Model::Heston(p) => p.y,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::BlackScholes(_) => "black-scholes",
            Model::Heston(_) => "heston",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::BlackScholes(p) => p.validate(),
            Model::Heston(p) => p.validate(),
        }
    }

    /// State at time zero for a contract written on spot `spot`.
    pub fn initial_state(&self, spot: f64) -> PathState {
        match self {
            Model::BlackScholes(_) => PathState::new(spot),
            Model::Heston(p) => PathState::with_variance(spot, p.v0),
        }
    }
}

/// Running state of one simulated particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub t: f64,
    pub spot: f64,
    /// Instantaneous variance; `None` for Black-Scholes.
    pub variance: Option<f64>,
    /// Accumulated `int_0^t r du`.
    pub int_r: f64,
}

impl PathState {
    pub fn new(spot: f64) -> Self {
        Self {
            t: 0.0,
            spot,
            variance: None,
            int_r: 0.0,
        }
    }

    pub fn with_variance(spot: f64, variance: f64) -> Self {
        Self {
            variance: Some(variance),
            ..Self::new(spot)
        }
    }

    /// Money-market discount factor `exp(-int_0^t r du)`.
    pub fn discount(&self) -> f64 {
        (-self.int_r).exp()
    }
}

/// Returns `(psi, max(psi, 0))`.
#[inline]
pub fn payoff(spec: &OptionSpec, s: f64) -> (f64, f64) {
    let psi = match spec.kind {
        OptionKind::Call => s - spec.strike,
        OptionKind::Put => spec.strike - s,
    };
    (psi, psi.max(0.0))
}

/// Instantaneous early-exercise premium rate, `yS - rK` for a call and
/// `rK - yS` for a put.
#[inline]
pub fn premium_rate(spec: &OptionSpec, r: f64, y: f64, s: f64) -> f64 {
    let call = y * s - r * spec.strike;
    match spec.kind {
        OptionKind::Call => call,
        OptionKind::Put => -call,
    }
}

/// Exact lognormal update over `dt` driven by the standard normal `z`.
#[inline]
pub fn step_bs(params: &BlackScholesParams, state: &PathState, dt: f64, z: f64) -> PathState {
    let drift = (params.r - params.y - 0.5 * params.sigma * params.sigma) * dt;
    PathState {
        t: state.t + dt,
        spot: state.spot * (drift + params.sigma * dt.sqrt() * z).exp(),
        variance: state.variance,
        int_r: state.int_r + params.r * dt,
    }
}

/// Full-truncation Euler step: the variance may become negative but only its
/// positive part ever enters a drift or a square root.
#[inline]
pub fn step_heston(params: &HestonParams, state: &PathState, dt: f64, z1: f64, z2: f64) -> PathState {
    let v = state.variance.unwrap_or(params.v0);
    let vp = v.max(0.0);
    let sq = (vp * dt).sqrt();
    let spot = state.spot * ((params.r - params.y - 0.5 * vp) * dt + sq * z1).exp();
    let zv = params.rho * z1 + (1.0 - params.rho * params.rho).sqrt() * z2;
    let variance = v + params.xi * (params.theta - vp) * dt + params.eta * sq * zv;
    PathState {
        t: state.t + dt,
        spot,
        variance: Some(variance),
        int_r: state.int_r + params.r * dt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn put() -> OptionSpec {
        OptionSpec::put(100.0, 1.0, 100.0).unwrap()
    }

    fn call() -> OptionSpec {
        OptionSpec::call(100.0, 1.0, 100.0).unwrap()
    }

    #[test]
    fn payoff_examples() {
        assert_eq!(payoff(&put(), 80.0), (20.0, 20.0));
        assert_eq!(payoff(&call(), 80.0), (-20.0, 0.0));
        assert_eq!(payoff(&call(), 100.0), (0.0, 0.0));
    }

    #[test]
    fn premium_rate_examples() {
        assert_relative_eq!(premium_rate(&call(), 0.03, 0.07, 100.0), 4.0, epsilon = 1e-12);
        assert_relative_eq!(premium_rate(&put(), 0.08, 0.12, 80.0), -1.6, epsilon = 1e-12);
        for s in [1.0, 50.0, 100.0, 1e4] {
            assert_eq!(premium_rate(&call(), 0.0, 0.0, s), 0.0);
        }
    }

    #[test]
    fn bs_step_deterministic_drift() {
        let p = BlackScholesParams::new(0.08, 0.12, 0.2).unwrap();
        let s = step_bs(&p, &PathState::new(100.0), 1.0, 0.0);
        assert_relative_eq!(s.spot, 100.0 * (-0.06f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(s.spot, 94.176, epsilon = 1e-3);
        assert_eq!(s.t, 1.0);
        assert_relative_eq!(s.int_r, 0.08);
    }

    #[test]
    fn bs_step_zero_vol() {
        let p = BlackScholesParams::new(0.05, 0.02, 0.0).unwrap();
        for z in [-3.0, 0.0, 1.7] {
            let s = step_bs(&p, &PathState::new(50.0), 0.5, z);
            assert_relative_eq!(s.spot, 50.0 * (0.03f64 * 0.5).exp(), max_relative = 1e-14);
        }
    }

    fn heston() -> HestonParams {
        HestonParams {
            r: 0.05,
            y: 0.0,
            v0: 0.04,
            xi: 3.0,
            theta: 0.04,
            eta: 0.1,
            rho: -0.1,
        }
    }

    #[test]
    fn heston_fixed_points() {
        let mut p = heston();
        p.eta = 0.0;
        let s = step_heston(&p, &PathState::with_variance(100.0, p.theta), 0.01, 1.3, -0.4);
        assert_eq!(s.variance, Some(p.theta));

        let p = heston();
        let s = step_heston(&p, &PathState::with_variance(100.0, 0.04), 0.01, 0.0, 0.0);
        assert_relative_eq!(s.variance.unwrap(), 0.04, epsilon = 1e-15);
    }

    #[test]
    fn heston_negative_variance_is_truncated() {
        let p = heston();
        let s = step_heston(&p, &PathState::with_variance(100.0, -0.01), 0.01, 2.0, 2.0);
        // only the drift xi * theta * dt acts on a negative variance
        assert_relative_eq!(s.variance.unwrap(), -0.01 + 3.0 * 0.04 * 0.01, epsilon = 1e-15);
        assert_relative_eq!(s.spot, 100.0 * (0.05f64 * 0.01).exp(), max_relative = 1e-14);
    }

    #[test]
    fn feller() {
        assert!(heston().feller_condition_holds());
        let mut p = heston();
        p.eta = 1.0;
        assert!(!p.feller_condition_holds());
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(OptionSpec::put(0.0, 1.0, 100.0).is_err());
        assert!(OptionSpec::put(100.0, -1.0, 100.0).is_err());
        assert!(OptionSpec::put(100.0, 1.0, f64::NAN).is_err());
        assert!(BlackScholesParams::new(-0.01, 0.0, 0.2).is_err());
        let mut p = heston();
        p.rho = -1.5;
        assert!(p.validate().is_err());
        p.rho = 0.0;
        p.xi = 0.0;
        assert!(p.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn call_put_premium_antisymmetric(r in 0.0..0.2f64, y in 0.0..0.2f64, s in 1.0..500.0f64, k in 1.0..500.0f64) {
                let c = OptionSpec::call(k, 1.0, s).unwrap();
                let p = OptionSpec::put(k, 1.0, s).unwrap();
                prop_assert_eq!(premium_rate(&c, r, y, s), -premium_rate(&p, r, y, s));
            }

            #[test]
            fn steps_keep_spot_positive(z1 in -8.0..8.0f64, z2 in -8.0..8.0f64, v in -0.5..2.0f64, dt in 1e-5..1.0f64) {
                let bs = BlackScholesParams::new(0.05, 0.1, 0.8).unwrap();
                prop_assert!(step_bs(&bs, &PathState::new(10.0), dt, z1).spot > 0.0);
                let h = HestonParams { eta: 1.5, rho: -0.9, ..heston() };
                let next = step_heston(&h, &PathState::with_variance(10.0, v), dt, z1, z2);
                prop_assert!(next.spot > 0.0 && next.spot.is_finite());
            }
        }
    }
}
