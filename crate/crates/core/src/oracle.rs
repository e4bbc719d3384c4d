//! Independent reference calculators for the particle estimators: a
//! recombining binomial lattice for the American price and deterministic
//! quadrature of the first- and second-order time integrals under
//! Black-Scholes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::european::{bs_price, EuropeanPricer};
use crate::gauss::GaussLegendre;
use crate::models::{payoff, premium_rate, BlackScholesParams, OptionKind, OptionSpec, PathState};
use crate::mollifier::{delta_gauss, Bandwidth};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub n_levels: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { n_levels: 2000 }
    }
}

/// Cox-Ross-Rubinstein lattice with dividend yield and early exercise at
/// every node.
pub fn tree_american(params: &BlackScholesParams, spec: &OptionSpec, cfg: &TreeConfig) -> Result<f64> {
    lattice(params, spec, cfg, true)
}

/// The same lattice without early exercise.
pub fn tree_european(params: &BlackScholesParams, spec: &OptionSpec, cfg: &TreeConfig) -> Result<f64> {
    lattice(params, spec, cfg, false)
}

fn lattice(params: &BlackScholesParams, spec: &OptionSpec, cfg: &TreeConfig, american: bool) -> Result<f64> {
    params.validate()?;
    spec.validate()?;
    if cfg.n_levels == 0 {
        return Err(invalid("n_levels", "must be at least 1"));
    }
    let n = cfg.n_levels;
    let dt = spec.expiry / n as f64;
    let growth = ((params.r - params.y) * dt).exp();
    let disc = (-params.r * dt).exp();
    let intrinsic = |s: f64| payoff(spec, s).1;

    if params.sigma * dt.sqrt() < 1e-12 {
        // deterministic path: best discounted exercise value
        let first = if american { 0 } else { n };
        return Ok((first..=n)
            .map(|i| disc.powi(i as i32) * intrinsic(spec.spot * growth.powi(i as i32)))
            .fold(0.0, f64::max));
    }

    let u = (params.sigma * dt.sqrt()).exp();
    let d = 1.0 / u;
    let p = (growth - d) / (u - d);
    let (pu, pd) = (disc * p, disc * (1.0 - p));
    let mut values: Vec<f64> = (0..=n)
        .map(|j| intrinsic(spec.spot * u.powi(j as i32) * d.powi((n - j) as i32)))
        .collect();
    for level in (0..n).rev() {
        for j in 0..=level {
            let s = spec.spot * u.powi(j as i32) * d.powi((level - j) as i32);
            let cont = pu * values[j + 1] + pd * values[j];
            values[j] = if american { cont.max(intrinsic(s)) } else { cont };
        }
    }
    Ok(values[0])
}

/// Edge of the region where intrinsic value exceeds the European price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExerciseBoundary {
    /// Exercise region is `{S < b}` for a put and `{S > b}` for a call.
    At(f64),
    /// No spot in the search bracket satisfies `Psi(S) > v0(u, S)`.
    Empty,
}

impl ExerciseBoundary {
    pub fn level(&self) -> Option<f64> {
        match *self {
            ExerciseBoundary::At(b) => Some(b),
            ExerciseBoundary::Empty => None,
        }
    }
}

/// Root of `Psi(S) - v0(u, S)` by bisection. For Heston the variance is held
/// at its initial value.
pub fn exercise_boundary(pricer: &EuropeanPricer, u: f64) -> Result<ExerciseBoundary> {
    let spec = *pricer.spec();
    if !(0.0..spec.expiry).contains(&u) {
        return Err(invalid("u", format!("must lie in [0, {}), got {u}", spec.expiry)));
    }
    let variance = match pricer {
        EuropeanPricer::BlackScholes { .. } => None,
        EuropeanPricer::Heston { pricer, .. } => Some(pricer.params().v0),
    };
    let gap = |s: f64| -> Result<f64> {
        let state = PathState {
            t: u,
            spot: s,
            variance,
            int_r: 0.0,
        };
        Ok(payoff(&spec, s).0 - pricer.price(&state)?)
    };
    let k = spec.strike;
    let (mut lo, mut hi) = match spec.kind {
        OptionKind::Put => (k * 1e-8, k),
        OptionKind::Call => (k, k * 1e4),
    };
    let (g_lo, g_hi) = (gap(lo)?, gap(hi)?);
    // put: gap decreasing from positive near zero; call: increasing
    let (inside, outside) = match spec.kind {
        OptionKind::Put => (g_lo, g_hi),
        OptionKind::Call => (g_hi, g_lo),
    };
    if inside <= 0.0 {
        return Ok(ExerciseBoundary::Empty);
    }
    if outside > 0.0 {
        return Err(Error::BracketFailure { lo, hi });
    }
    let put = spec.kind == OptionKind::Put;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let in_region = gap(mid)? > 0.0;
        if in_region == put {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * k {
            break;
        }
    }
    Ok(ExerciseBoundary::At(0.5 * (lo + hi)))
}

/// Resolution of the quadrature oracles. Node counts are rounded up to whole
/// Gauss-Legendre panels of `panel_order` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub time_nodes: usize,
    /// Half-width of the spatial domain in standard deviations of log-spot.
    pub truncation: f64,
    pub spatial_nodes: usize,
    /// Spatial nodes of the inner first-order evaluations that feed the
    /// second-order integral.
    pub inner_spatial_nodes: usize,
    /// Log-spot grid points on which the first-order value is tabulated for
    /// the second-order integral.
    pub v1_grid_points: usize,
    /// Variance of the normal density standing in for the delta function.
    pub delta_variance: Bandwidth,
    pub panel_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            time_nodes: 128,
            truncation: 5.0,
            spatial_nodes: 2048,
            inner_spatial_nodes: 64,
            v1_grid_points: 401,
            delta_variance: Bandwidth::SpotRelative(1e-4),
            panel_order: 8,
        }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("time_nodes", self.time_nodes),
            ("spatial_nodes", self.spatial_nodes),
            ("inner_spatial_nodes", self.inner_spatial_nodes),
            ("v1_grid_points", self.v1_grid_points),
        ] {
            if n < 16 {
                return Err(invalid(name, format!("must be at least 16, got {n}")));
            }
        }
        if !(self.truncation.is_finite() && self.truncation > 0.0) {
            return Err(invalid("truncation", "must be > 0"));
        }
        if self.panel_order == 0 {
            return Err(invalid("panel_order", "must be at least 1"));
        }
        Ok(())
    }

    fn panels(&self, nodes: usize) -> usize {
        nodes.div_ceil(self.panel_order)
    }
}

struct Quadrature<'a> {
    params: &'a BlackScholesParams,
    spec: OptionSpec,
    pricer: EuropeanPricer,
    cfg: &'a QuadratureConfig,
    rule: GaussLegendre,
}

impl<'a> Quadrature<'a> {
    fn new(params: &'a BlackScholesParams, spec: &OptionSpec, cfg: &'a QuadratureConfig) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        cfg.validate()?;
        Ok(Self {
            params,
            spec: *spec,
            pricer: EuropeanPricer::BlackScholes {
                params: *params,
                spec: *spec,
            },
            cfg,
            rule: GaussLegendre::new(cfg.panel_order),
        })
    }

    fn time_rule(&self, from: f64) -> Vec<(f64, f64)> {
        self.rule
            .composite(from, self.spec.expiry, self.cfg.panels(self.cfg.time_nodes))
    }

    /// Spot reached from `s` after `dt` at standard-normal quantile `z`.
    #[inline]
    fn spot_at(&self, s: f64, dt: f64, z: f64) -> f64 {
        let p = self.params;
        s * ((p.r - p.y - 0.5 * p.sigma * p.sigma) * dt + p.sigma * dt.sqrt() * z).exp()
    }

    /// Quantile at which a particle started at `s` crosses level `b`.
    fn quantile_of(&self, s: f64, dt: f64, b: f64) -> f64 {
        let p = self.params;
        let sd = p.sigma * dt.sqrt();
        ((b / s).ln() - (p.r - p.y - 0.5 * p.sigma * p.sigma) * dt) / sd
    }

    fn boundary(&self, u: f64) -> Result<Option<f64>> {
        if u >= self.spec.expiry {
            return Ok(None);
        }
        Ok(exercise_boundary(&self.pricer, u)?.level())
    }

    /// `E[C(S_u) 1{S_u in region} | S_t = s]`.
    fn region_expectation(&self, s: f64, dt: f64, b: Option<f64>, nodes: usize) -> f64 {
        let Some(b) = b else { return 0.0 };
        let l = self.cfg.truncation;
        let p = self.params;
        if dt <= 0.0 || p.sigma == 0.0 {
            let su = s * ((p.r - p.y) * dt.max(0.0)).exp();
            let inside = match self.spec.kind {
                OptionKind::Put => su < b,
                OptionKind::Call => su > b,
            };
            return if inside {
                premium_rate(&self.spec, p.r, p.y, su)
            } else {
                0.0
            };
        }
        let zb = self.quantile_of(s, dt, b);
        let (lo, hi) = match self.spec.kind {
            OptionKind::Put => (-l, zb.min(l)),
            OptionKind::Call => (zb.max(-l), l),
        };
        if hi <= lo {
            return 0.0;
        }
        self.rule.integrate(lo, hi, self.cfg.panels(nodes), |z| {
            let su = self.spot_at(s, dt, z);
            std_normal_pdf(z) * premium_rate(&self.spec, p.r, p.y, su)
        })
    }

    /// First-order value at `(t, s)` with precomputed boundaries on the
    /// time rule from `t`.
    fn v1(&self, t: f64, s: f64, times: &[(f64, f64, Option<f64>)], nodes: usize) -> f64 {
        times
            .iter()
            .map(|&(u, w, b)| w * (-self.params.r * (u - t)).exp() * self.region_expectation(s, u - t, b, nodes))
            .sum()
    }

    fn times_with_boundaries(&self, from: f64) -> Result<Vec<(f64, f64, Option<f64>)>> {
        self.time_rule(from)
            .into_iter()
            .map(|(u, w)| Ok((u, w, self.boundary(u)?)))
            .collect()
    }
}

#[inline]
fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// First-order term at inception: the premium rate integrated over the
/// European exercise region in time and log-spot.
pub fn quadrature_v1(params: &BlackScholesParams, spec: &OptionSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let q = Quadrature::new(params, spec, cfg)?;
    let times = q.times_with_boundaries(0.0)?;
    Ok(q.v1(0.0, spec.spot, &times, cfg.spatial_nodes))
}

/// Second-order term at inception, `-int E[C delta(Psi - v0) V1] du`, with the
/// delta replaced by a normal density. The inner first-order value is
/// tabulated on a log-spot grid at every outer time node and interpolated
/// linearly.
pub fn quadrature_v2(params: &BlackScholesParams, spec: &OptionSpec, cfg: &QuadratureConfig) -> Result<f64> {
    let q = Quadrature::new(params, spec, cfg)?;
    let s0 = spec.spot;
    let l = cfg.truncation;
    let outer = q.times_with_boundaries(0.0)?;
    let n_grid = cfg.v1_grid_points;
    let grid_step = 2.0 * l / (n_grid - 1) as f64;
    let spatial = q.rule.composite(-l, l, cfg.panels(cfg.spatial_nodes));

    let mut total = 0.0;
    for &(u, w_u, _) in &outer {
        let inner = q.times_with_boundaries(u)?;
        // V1(u, S) at the grid quantiles z_j of S_u given S_0
        let table: Vec<f64> = (0..n_grid)
            .map(|j| {
                let z = -l + j as f64 * grid_step;
                q.v1(u, q.spot_at(s0, u, z), &inner, cfg.inner_spatial_nodes)
            })
            .collect();
        let interp = |z: f64| {
            let x = ((z + l) / grid_step).clamp(0.0, (n_grid - 1) as f64);
            let i = (x.floor() as usize).min(n_grid - 2);
            let f = x - i as f64;
            table[i] * (1.0 - f) + table[i + 1] * f
        };
        let mut acc = 0.0;
        for &(z, w_z) in &spatial {
            let su = q.spot_at(s0, u, z);
            let gap = payoff(spec, su).0 - bs_price(params, spec, u, su);
            let h = cfg.delta_variance.variance(su);
            let kernel = delta_gauss(gap, h);
            if kernel == 0.0 {
                continue;
            }
            acc += w_z * std_normal_pdf(z) * premium_rate(spec, params.r, params.y, su) * kernel * interp(z);
        }
        total += w_u * (-params.r * u).exp() * acc;
    }
    Ok(-total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table1(y: f64) -> BlackScholesParams {
        BlackScholesParams::new(0.08, y, 0.2).unwrap()
    }

    #[test]
    fn tree_reproduces_benchmark_cell() {
        let spec = OptionSpec::put(100.0, 3.0, 100.0).unwrap();
        let v = tree_american(&table1(0.12), &spec, &TreeConfig::default()).unwrap();
        assert!((v - 15.498).abs() / 15.498 < 5e-3, "{v}");
    }

    #[test]
    fn tree_tiny_expiry_is_intrinsic() {
        let spec = OptionSpec::put(100.0, 1e-10, 80.0).unwrap();
        let v = tree_american(&table1(0.12), &spec, &TreeConfig { n_levels: 1 }).unwrap();
        assert_relative_eq!(v, 20.0, epsilon = 1e-6);
    }

    #[test]
    fn tree_zero_vol_put() {
        // zero vol, no dividend: exercise immediately when rK dominates
        let p = BlackScholesParams::new(0.05, 0.0, 0.0).unwrap();
        let spec = OptionSpec::put(100.0, 1.0, 90.0).unwrap();
        let v = tree_american(&p, &spec, &TreeConfig { n_levels: 50 }).unwrap();
        assert_relative_eq!(v, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn tree_dominates_european() {
        for y in [0.0, 0.04, 0.08, 0.12] {
            for s in [80.0, 100.0, 120.0] {
                let spec = OptionSpec::put(100.0, 3.0, s).unwrap();
                let am = tree_american(&table1(y), &spec, &TreeConfig { n_levels: 400 }).unwrap();
                assert!(am >= bs_price(&table1(y), &spec, 0.0, s) - 1e-9);
            }
        }
    }

    #[test]
    fn boundary_limits() {
        let p = BlackScholesParams::new(0.05, 0.0, 0.2).unwrap();
        let put = OptionSpec::put(100.0, 1.0, 100.0).unwrap();
        let pricer = EuropeanPricer::BlackScholes { params: p, spec: put };
        let b = exercise_boundary(&pricer, 1.0 - 1e-8).unwrap().level().unwrap();
        assert!((b - 100.0).abs() < 0.1, "{b}");

        let call = OptionSpec::call(100.0, 1.0, 100.0).unwrap();
        let pricer = EuropeanPricer::BlackScholes { params: p, spec: call };
        for u in [0.0, 0.5, 0.99] {
            assert_eq!(exercise_boundary(&pricer, u).unwrap(), ExerciseBoundary::Empty);
        }
        assert!(exercise_boundary(&pricer, 1.0).is_err());
    }

    #[test]
    fn boundary_is_single_crossing() {
        let p = table1(0.12);
        let spec = OptionSpec::put(100.0, 3.0, 100.0).unwrap();
        let pricer = EuropeanPricer::BlackScholes { params: p, spec };
        let b = exercise_boundary(&pricer, 1.5).unwrap().level().unwrap();
        let step = 0.01;
        let mut crossings = Vec::new();
        let mut prev = None;
        for i in 1..15000 {
            let s = i as f64 * step;
            let inside = payoff(&spec, s).0 - bs_price(&p, &spec, 1.5, s) > 0.0;
            if let Some(pv) = prev {
                if pv != inside {
                    crossings.push(s);
                }
            }
            prev = Some(inside);
        }
        assert_eq!(crossings.len(), 1);
        assert!((crossings[0] - b).abs() <= step);
    }

    #[test]
    fn quadrature_trivial_cases() {
        let p = BlackScholesParams::new(0.05, 0.0, 0.2).unwrap();
        let call = OptionSpec::call(100.0, 0.5, 100.0).unwrap();
        let cfg = QuadratureConfig {
            time_nodes: 16,
            spatial_nodes: 64,
            v1_grid_points: 33,
            inner_spatial_nodes: 16,
            ..QuadratureConfig::default()
        };
        assert_eq!(quadrature_v1(&p, &call, &cfg).unwrap(), 0.0);
        assert_eq!(quadrature_v2(&p, &call, &cfg).unwrap(), 0.0);

        let put = OptionSpec::put(100.0, 1e-9, 100.0).unwrap();
        assert!(quadrature_v1(&p, &put, &cfg).unwrap().abs() < 1e-9);
        assert!(QuadratureConfig { time_nodes: 8, ..cfg }.validate().is_err());
    }

    // Closed-form oracle for the y = 0 put, where C = rK and the inner
    // expectation is rK N(z_b).
    #[test]
    fn v1_matches_normal_cdf_form() {
        use crate::european::norm_cdf;
        let p = BlackScholesParams::new(0.05, 0.0, 0.2).unwrap();
        let spec = OptionSpec::put(100.0, 0.5, 100.0).unwrap();
        let cfg = QuadratureConfig::default();
        let q = Quadrature::new(&p, &spec, &cfg).unwrap();
        let times = q.times_with_boundaries(0.0).unwrap();
        let closed: f64 = times
            .iter()
            .map(|&(u, w, b)| {
                let zb = q.quantile_of(100.0, u, b.unwrap());
                w * (-0.05 * u).exp() * 0.05 * 100.0 * norm_cdf(zb)
            })
            .sum();
        let v = quadrature_v1(&p, &spec, &cfg).unwrap();
        assert!(v > 0.0);
        // the only difference is the mass beyond the 5-sigma truncation
        assert_relative_eq!(v, closed, max_relative = 1e-5);
    }

    #[test]
    fn v1_refinement_is_stable() {
        let p = table1(0.12);
        let spec = OptionSpec::put(100.0, 3.0, 100.0).unwrap();
        let base = QuadratureConfig::default();
        let fine = QuadratureConfig {
            time_nodes: 2 * base.time_nodes,
            spatial_nodes: 2 * base.spatial_nodes,
            ..base
        };
        let a = quadrature_v1(&p, &spec, &base).unwrap();
        let b = quadrature_v1(&p, &spec, &fine).unwrap();
        assert!(((a - b) / b).abs() < 1e-4, "{a} vs {b}");
    }
}
