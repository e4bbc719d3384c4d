//! European option values: the zeroth-order term of the expansion and the
//! continuation proxy inside every exercise indicator.
//!
//! Black-Scholes uses the closed form with continuous dividend yield. Heston
//! uses Lewis' single-integral representation with a Black-Scholes control
//! variate at the expected average variance, integrated by composite
//! Gauss-Legendre on a domain scaled by the total variance.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::models::{payoff, BlackScholesParams, HestonParams, Model, OptionKind, OptionSpec, PathState};

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Black-Scholes value at time `t` and spot `s`. At `t >= T` this is the
/// payoff.
pub fn bs_price(params: &BlackScholesParams, spec: &OptionSpec, t: f64, s: f64) -> f64 {
    let tau = spec.expiry - t;
    if tau <= 0.0 {
        return payoff(spec, s).1;
    }
    black_scholes(spec.kind, s, spec.strike, tau, params.sigma, params.r, params.y)
}

pub(crate) fn black_scholes(kind: OptionKind, s: f64, k: f64, tau: f64, sigma: f64, r: f64, y: f64) -> f64 {
    let df_r = (-r * tau).exp();
    let df_y = (-y * tau).exp();
    let sd = sigma * tau.sqrt();
    if sd < 1e-14 {
        let fwd = s * df_y - k * df_r;
        return match kind {
            OptionKind::Call => fwd.max(0.0),
            OptionKind::Put => (-fwd).max(0.0),
        };
    }
    let d1 = ((s / k).ln() + (r - y) * tau) / sd + 0.5 * sd;
    let d2 = d1 - sd;
    match kind {
        OptionKind::Call => s * df_y * norm_cdf(d1) - k * df_r * norm_cdf(d2),
        OptionKind::Put => k * df_r * norm_cdf(-d2) - s * df_y * norm_cdf(-d1),
    }
}

/// Integration settings for the Heston Fourier pricer. The integration
/// variable is `u * sqrt(w)` where `w` is the expected total variance to
/// expiry, so the domain adapts to the remaining maturity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierConfig {
    pub upper: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    /// Largest admissible integrand magnitude at the truncation point.
    pub tail_tolerance: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self {
            upper: 40.0,
            panels: 8,
            nodes_per_panel: 12,
            tail_tolerance: 1e-10,
        }
    }
}

/// Semi-analytic Heston pricer with the quadrature rule precomputed.
#[derive(Debug, Clone)]
pub struct HestonPricer {
    params: HestonParams,
    config: FourierConfig,
    base: GaussLegendre,
    rule: Vec<(f64, f64)>,
}

const MAX_PANELS: usize = 4096;

impl HestonPricer {
    pub fn new(params: HestonParams, config: FourierConfig) -> Self {
        let base = GaussLegendre::new(config.nodes_per_panel);
        let rule = base.composite(0.0, config.upper, config.panels);
        Self {
            params,
            config,
            base,
            rule,
        }
    }

    pub fn params(&self) -> &HestonParams {
        &self.params
    }

    /// Value at time `t`, spot `s` and instantaneous variance `v` (negative
    /// values are read as zero).
    pub fn price(&self, spec: &OptionSpec, t: f64, s: f64, v: f64) -> Result<f64> {
        let tau = spec.expiry - t;
        if tau <= 0.0 {
            return Ok(payoff(spec, s).1);
        }
        let p = &self.params;
        let v = v.max(0.0);
        let k = spec.strike;
        let xt = p.xi * tau;
        let avg_var = if xt < 1e-10 {
            v
        } else {
            p.theta + (v - p.theta) * (-(-xt).exp_m1()) / xt
        };
        let w = avg_var * tau;
        let df_r = (-p.r * tau).exp();
        let df_y = (-p.y * tau).exp();
        let call = if w < 1e-16 {
            (s * df_y - k * df_r).max(0.0)
        } else {
            let base = black_scholes(OptionKind::Call, s, k, tau, avg_var.sqrt(), p.r, p.y);
            let fwd = s * df_y / df_r;
            let log_moneyness = (fwd / k).ln();
            let scale = w.sqrt();
            let integrand = |x: f64| {
                let u = x / scale;
                let q = u * u + 0.25;
                let phi = self.log_cf_shifted(u, tau, v).exp();
                let bs = (-0.5 * w * q).exp();
                let rot = Complex64::from_polar(1.0, u * log_moneyness);
                (rot * (phi - bs)).re / q
            };
            let tail = integrand(self.config.upper).abs();
            if !(tail <= self.config.tail_tolerance * scale) {
                return Err(Error::FourierNonConvergence {
                    tail,
                    t,
                    spot: s,
                    variance: v,
                });
            }
            // at least one panel per oscillation of exp(i u k)
            let periods = self.config.upper * log_moneyness.abs() / (scale * 2.0 * PI);
            let integral = if periods <= self.config.panels as f64 {
                self.rule.iter().map(|&(x, wt)| wt * integrand(x)).sum::<f64>()
            } else {
                let panels = (periods.ceil() as usize).min(MAX_PANELS);
                self.base.integrate(0.0, self.config.upper, panels, integrand)
            } / scale;
            base - df_r * (fwd * k).sqrt() / PI * integral
        };
        Ok(match spec.kind {
            OptionKind::Call => call,
            OptionKind::Put => call - s * df_y + k * df_r,
        }
        .max(0.0))
    }

    /// `ln E[exp(i z ln(S_T / F))]` at `z = u - i/2`, in the rotation-safe
    /// form of the Heston characteristic function.
    fn log_cf_shifted(&self, u: f64, tau: f64, v: f64) -> Complex64 {
        let p = &self.params;
        let eta2 = p.eta * p.eta;
        // i z = i u + 1/2 and i z + z^2 = u^2 + 1/4 at z = u - i/2
        let iz = Complex64::new(0.5, u);
        let b = Complex64::new(p.xi, 0.0) - p.rho * p.eta * iz;
        let d = (b * b + eta2 * (u * u + 0.25)).sqrt();
        let bm = b - d;
        let g = bm / (b + d);
        let e = (-d * tau).exp();
        let one = Complex64::new(1.0, 0.0);
        let c = p.xi * p.theta / eta2 * (bm * tau - 2.0 * ((one - g * e) / (one - g)).ln());
        let dd = bm / eta2 * (one - e) / (one - g * e);
        c + dd * v
    }
}

/// The zeroth-order value function `v0(t, X_t)` for one contract.
#[derive(Debug, Clone)]
pub enum EuropeanPricer {
    BlackScholes {
        params: BlackScholesParams,
        spec: OptionSpec,
    },
    Heston {
        pricer: HestonPricer,
        spec: OptionSpec,
    },
}

impl EuropeanPricer {
    pub fn new(model: &Model, spec: &OptionSpec) -> Self {
        Self::with_fourier(model, spec, FourierConfig::default())
    }

    pub fn with_fourier(model: &Model, spec: &OptionSpec, fourier: FourierConfig) -> Self {
        match *model {
            Model::BlackScholes(params) => EuropeanPricer::BlackScholes { params, spec: *spec },
            Model::Heston(params) => EuropeanPricer::Heston {
                pricer: HestonPricer::new(params, fourier),
                spec: *spec,
            },
        }
    }

    pub fn spec(&self) -> &OptionSpec {
        match self {
            EuropeanPricer::BlackScholes { spec, .. } | EuropeanPricer::Heston { spec, .. } => spec,
        }
    }

    pub fn price(&self, state: &PathState) -> Result<f64> {
        match self {
            EuropeanPricer::BlackScholes { params, spec } => Ok(bs_price(params, spec, state.t, state.spot)),
            EuropeanPricer::Heston { pricer, spec } => {
                let v = state.variance.unwrap_or(pricer.params.v0);
                pricer.price(spec, state.t, state.spot, v)
            }
        }
    }

    /// Price at time zero from the contract's own spot.
    pub fn price_at_inception(&self) -> Result<f64> {
        let spec = *self.spec();
        let state = match self {
            EuropeanPricer::BlackScholes { .. } => PathState::new(spec.spot),
            EuropeanPricer::Heston { pricer, .. } => PathState::with_variance(spec.spot, pricer.params.v0),
        };
        self.price(&state)
    }
}

/// Heston European price with the default Fourier settings.
pub fn heston_price(params: &HestonParams, spec: &OptionSpec, t: f64, s: f64, v: f64) -> Result<f64> {
    HestonPricer::new(*params, FourierConfig::default()).price(spec, t, s, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table1(y: f64) -> BlackScholesParams {
        BlackScholesParams::new(0.08, y, 0.2).unwrap()
    }

    fn heston(rho: f64, sigma: f64) -> HestonParams {
        HestonParams {
            r: 0.05,
            y: 0.0,
            v0: sigma * sigma,
            xi: 3.0,
            theta: 0.04,
            eta: 0.1,
            rho,
        }
    }

    #[test]
    fn bs_matches_published_zeroth_order() {
        let p = table1(0.12);
        let expected = [
            (80.0, 24.777),
            (90.0, 19.620),
            (100.0, 15.252),
            (110.0, 11.671),
            (120.0, 8.814),
        ];
        for (s, v) in expected {
            let spec = OptionSpec::put(100.0, 3.0, s).unwrap();
            assert!((bs_price(&p, &spec, 0.0, s) - v).abs() < 5e-4, "S={s}");
        }
    }

    #[test]
    fn bs_at_expiry_is_payoff() {
        let spec = OptionSpec::put(100.0, 3.0, 80.0).unwrap();
        assert_eq!(bs_price(&table1(0.12), &spec, 3.0, 80.0), 20.0);
    }

    #[test]
    fn bs_zero_vol_is_discounted_forward_intrinsic() {
        let p = BlackScholesParams::new(0.05, 0.0, 0.0).unwrap();
        let spec = OptionSpec::call(100.0, 1.0, 100.0).unwrap();
        assert_relative_eq!(
            bs_price(&p, &spec, 0.0, 100.0),
            100.0 - 100.0 * (-0.05f64).exp(),
            max_relative = 1e-14
        );
    }

    // Reference values from an adaptive-quadrature evaluation of the
    // Heston P1/P2 integrals, independent of the Lewis route used here.
    #[test]
    fn heston_matches_adaptive_quadrature_reference() {
        let cases = [
            (0.25, -0.1, 0.2, [9.643, 3.368, 0.758]),
            (0.25, -0.7, 0.2, [9.570, 3.377, 0.826]),
            (0.25, -0.1, 0.4, [11.893, 6.375, 3.045]),
            (0.5, -0.7, 0.4, [12.617, 7.697, 4.472]),
        ];
        for (expiry, rho, sigma, prices) in cases {
            let p = heston(rho, sigma);
            for (s, want) in [90.0, 100.0, 110.0].into_iter().zip(prices) {
                let spec = OptionSpec::put(100.0, expiry, s).unwrap();
                let got = heston_price(&p, &spec, 0.0, s, p.v0).unwrap();
                assert!((got - want).abs() < 6e-4, "T={expiry} rho={rho} S={s}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn heston_close_to_published_zeroth_order() {
        // the published column comes from an asymptotic expansion, so only
        // agreement to about a cent is expected
        let p = heston(-0.1, 0.2);
        for (s, want) in [(100.0, 3.374), (90.0, 9.643)] {
            let spec = OptionSpec::put(100.0, 0.25, s).unwrap();
            let got = heston_price(&p, &spec, 0.0, s, p.v0).unwrap();
            assert!((got - want).abs() < 0.01, "S={s}: {got}");
        }
    }

    #[test]
    fn heston_small_vol_of_vol_is_black_scholes() {
        // with rho = 0 the leading vol-of-vol correction is O(eta^2)
        let mut p = heston(0.0, 0.2);
        p.eta = 1e-3;
        let bs = BlackScholesParams::new(0.05, 0.0, 0.2).unwrap();
        for kind in [OptionKind::Put, OptionKind::Call] {
            for s in [70.0, 90.0, 100.0, 115.0, 140.0] {
                let spec = OptionSpec::new(kind, 100.0, 0.25, s).unwrap();
                let h = heston_price(&p, &spec, 0.0, s, 0.04).unwrap();
                let b = bs_price(&bs, &spec, 0.0, s);
                assert!(((h - b) / b).abs() < 1e-4, "{kind:?} S={s}: {h} vs {b}");
            }
        }
    }

    #[test]
    fn heston_near_expiry_and_zero_variance() {
        let p = heston(-0.7, 0.4);
        let spec = OptionSpec::put(100.0, 0.5, 100.0).unwrap();
        for (t, s, v) in [
            (0.4999, 95.0, 0.16),
            (0.49, 100.0, 0.0),
            (0.0, 60.0, 0.0),
            (0.25, 160.0, 0.3),
        ] {
            let price = heston_price(&p, &spec, t, s, v).unwrap();
            let lower = (100.0 * (-p.r * (0.5 - t)).exp() - s).max(0.0);
            assert!(price >= lower - 1e-9 && price.is_finite(), "t={t} s={s} v={v}: {price}");
        }
    }

    #[test]
    fn heston_reports_non_convergence() {
        let p = heston(-0.7, 0.4);
        let cfg = FourierConfig {
            upper: 0.5,
            ..FourierConfig::default()
        };
        let spec = OptionSpec::put(100.0, 0.5, 100.0).unwrap();
        let err = HestonPricer::new(p, cfg).price(&spec, 0.0, 100.0, 0.16).unwrap_err();
        assert!(matches!(err, Error::FourierNonConvergence { .. }));
    }
}
