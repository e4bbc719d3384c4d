//! Branching interacting-particle estimators of the expansion terms.
//!
//! Every path family consists of a trunk particle, which carries the chain of
//! Poisson interaction times `tau_1 < tau_2 < ...`, and up to three offspring:
//! two spawned at `tau_1` and one at `tau_2`. Offspring start from a copy of
//! the trunk state and are driven by their own random streams, so each is a
//! conditionally independent copy of the continuation. The trunk
//! continuation doubles as one member of every offspring group, which keeps
//! every term unbiased while sharing random numbers across orders.
//!
//! Writing `W_k = exp(lambda (tau_k - tau_{k-1})) C(tau_k) / lambda`,
//! `D_k = exp(-int_0^{tau_k} r)` and `theta_k`, `delta_k`, `delta'_k`,
//! `delta''_k` for the (mollified) step and delta evaluated at
//! `Psi(S) - v0` on the trunk, the per-path contributions are
//!
//! ```text
//! x1 =  D1 W1 theta1
//! x2 = -D2 W1 delta1 W2 theta2
//! x3 =  D3 W1 delta1 W2 delta2 W3 theta3 + 1/2 D1 W1 delta'1 G G_a
//! x4 = -1/6 D1 W1 delta''1 G G_a G_b - D1 W1 delta'1 G_a H
//!      - D4 W1 delta1 W2 delta2 W3 delta3 W4 theta4
//!      - 1/2 D2 W1 delta1 W2 delta'2 G' G_c
//! ```
//!
//! with `G`, `G_a`, `G_b` the discounted `W theta` factors of the trunk and of
//! the two first-generation offspring measured from `tau_1`, `H` the trunk's
//! `W2 delta2 W3 theta3` chain from `tau_1`, `G'` the trunk's `W3 theta3` from
//! `tau_2` and `G_c` the second-generation offspring's `W theta` from
//! `tau_2`. All indicator functions `tau < T` are implicit.
//!
//! Interaction times are exact exponential arrivals; the particle state is
//! read at the first grid node at or after each arrival.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::european::EuropeanPricer;
use crate::models::{payoff, premium_rate, step_bs, step_heston, Model, OptionSpec, PathState};
use crate::mollifier::{theta_step, MollifierConfig};
use crate::rng::{branch, StreamKey};

pub const MAX_ORDER: usize = 4;

/// Paths per work unit. Fixed so that accumulation order, and therefore the
/// result, does not depend on the worker count.
const CHUNK: u64 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: u64,
    pub n_steps: usize,
    /// Constant intensity of the interaction clock, per year.
    pub lambda: f64,
    pub order: usize,
    pub mollifier: MollifierConfig,
    pub seed: u64,
    pub workers: usize,
    /// Share one path family across all orders. When false every order is
    /// estimated from its own independent family.
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 1000,
            lambda: 2.0,
            order: 3,
            mollifier: MollifierConfig::default(),
            seed: 1,
            workers: 1,
            common_random_numbers: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        if self.n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(invalid("lambda", format!("must be > 0, got {}", self.lambda)));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(self.order));
        }
        self.mollifier.validate()
    }
}

/// Next arrival of a Poisson clock with constant intensity, by inversion of
/// the uniform `u` in `(0, 1]`.
#[inline]
pub fn jump_time_from_uniform(t: f64, lambda: f64, u: f64) -> f64 {
    t - u.ln() / lambda
}

/// Next arrival after `t`. The result may lie beyond the horizon.
#[inline]
pub fn draw_next_jump<R: Rng + ?Sized>(rng: &mut R, t: f64, lambda: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    jump_time_from_uniform(t, lambda, u)
}

/// The reweighted premium `exp(lambda (tau - tau_prev)) C / lambda`.
#[inline]
pub fn chat_weight(tau_prev: f64, tau: f64, c_at_tau: f64, lambda: f64) -> f64 {
    if c_at_tau == 0.0 {
        return 0.0;
    }
    (lambda * (tau - tau_prev)).exp() * c_at_tau / lambda
}

/// Interaction times of one particle that fall before the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSchedule {
    pub start: f64,
    pub times: Vec<f64>,
}

impl JumpSchedule {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, start: f64, lambda: f64, horizon: f64, max_jumps: usize) -> Self {
        let mut times = Vec::with_capacity(max_jumps);
        let mut t = start;
        while times.len() < max_jumps {
            t = draw_next_jump(rng, t, lambda);
            if t >= horizon {
                break;
            }
            times.push(t);
        }
        Self { start, times }
    }

    /// Grid node at or after each time on the uniform grid of spacing `dt`.
    pub fn nodes(&self, dt: f64, n_steps: usize) -> Vec<usize> {
        self.times.iter().map(|&t| snap_forward(t, dt, n_steps)).collect()
    }
}

#[inline]
fn snap_forward(t: f64, dt: f64, n_steps: usize) -> usize {
    ((t / dt).ceil() as usize).min(n_steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Per-order estimates and their partial sums at unit perturbation
/// parameter. Index `k` holds order `k`; index 0 is the European value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Standard errors of the partial sums, which account for the
    /// correlation between orders under common random numbers.
    pub cumulative_stderrs: Vec<f64>,
    pub n_paths: u64,
}

impl ExpansionResult {
    pub fn order(&self) -> usize {
        self.means.len() - 1
    }

    pub fn price(&self) -> f64 {
        *self.cumulative.last().expect("at least order 0")
    }
}

/// Running mean and sum of squared deviations, merged with Chan's update.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + d * b.n / n,
            m2: a.m2 + b.m2 + d * d * a.n * b.n / n,
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    terms: [Moments; MAX_ORDER + 1],
    partial: [Moments; MAX_ORDER + 1],
}

impl ChunkStats {
    fn merge(a: ChunkStats, b: ChunkStats) -> ChunkStats {
        let mut out = ChunkStats::default();
        for k in 0..=MAX_ORDER {
            out.terms[k] = Moments::merge(a.terms[k], b.terms[k]);
            out.partial[k] = Moments::merge(a.partial[k], b.partial[k]);
        }
        out
    }
}

fn merge_tree(stats: &[ChunkStats]) -> ChunkStats {
    match stats.len() {
        0 => ChunkStats::default(),
        1 => stats[0],
        n => {
            let (l, r) = stats.split_at(n / 2);
            ChunkStats::merge(merge_tree(l), merge_tree(r))
        }
    }
}

/// Quantities read off a particle at one interaction.
#[derive(Debug, Clone, Copy)]
struct Interaction {
    tau: f64,
    state: PathState,
    node: usize,
    /// `Psi(S) - v0(t, X)`.
    gap: f64,
    premium: f64,
}

impl Interaction {
    #[inline]
    fn weight(&self, tau_prev: f64, lambda: f64) -> f64 {
        chat_weight(tau_prev, self.tau, self.premium, lambda)
    }

    #[inline]
    fn discount_from(&self, origin: &PathState) -> f64 {
        (origin.int_r - self.state.int_r).exp()
    }
}

struct Engine<'a> {
    model: &'a Model,
    spec: OptionSpec,
    pricer: EuropeanPricer,
    cfg: &'a SimConfig,
    dt: f64,
}

impl<'a> Engine<'a> {
    fn new(model: &'a Model, spec: &OptionSpec, cfg: &'a SimConfig) -> Self {
        Self {
            model,
            spec: *spec,
            pricer: EuropeanPricer::new(model, spec),
            cfg,
            dt: spec.expiry / cfg.n_steps as f64,
        }
    }

    #[inline]
    fn node_time(&self, node: usize) -> f64 {
        if node >= self.cfg.n_steps {
            self.spec.expiry
        } else {
            node as f64 * self.dt
        }
    }

    /// Moves a particle from grid node `from` to grid node `to`.
    fn advance(&self, state: &PathState, from: usize, to: usize, rng: &mut ChaCha8Rng) -> PathState {
        if to <= from {
            return *state;
        }
        match self.model {
            Model::BlackScholes(p) => {
                let t_to = self.node_time(to);
                let z: f64 = rng.sample(StandardNormal);
                let mut next = step_bs(p, state, t_to - state.t, z);
                next.t = t_to;
                next
            }
            Model::Heston(p) => {
                let mut s = *state;
                for node in from + 1..=to {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    s = step_heston(p, &s, self.dt, z1, z2);
                    s.t = self.node_time(node);
                }
                s
            }
        }
    }

    fn interact(&self, tau: f64, node: usize, state: PathState) -> Result<Interaction> {
        let v0 = self.pricer.price(&state)?;
        let (psi, _) = payoff(&self.spec, state.spot);
        Ok(Interaction {
            tau,
            state,
            node,
            gap: psi - v0,
            premium: premium_rate(&self.spec, self.model.rate(), self.model.dividend_yield(), state.spot),
        })
    }

    /// Runs a particle from `origin` (at `node`, clock time `tau`) through at
    /// most `max_jumps` interactions before expiry.
    fn run_particle(
        &self,
        origin: &PathState,
        node: usize,
        tau: f64,
        max_jumps: usize,
        key: StreamKey,
    ) -> Result<Vec<Interaction>> {
        let mut rng = key.rng();
        // always consume the same clock draws so that runs of different
        // order see identical paths
        let mut schedule = JumpSchedule::draw(&mut rng, tau, self.cfg.lambda, self.spec.expiry, MAX_ORDER);
        schedule.times.truncate(max_jumps);
        let nodes = schedule.nodes(self.dt, self.cfg.n_steps);
        let mut out = Vec::with_capacity(nodes.len());
        let mut state = *origin;
        let mut at = node;
        for (&t, &n) in schedule.times.iter().zip(&nodes) {
            state = self.advance(&state, at, n, &mut rng);
            at = n.max(at);
            out.push(self.interact(t, at, state)?);
        }
        Ok(out)
    }

    /// Discounted `W theta` factor of an offspring spawned at `parent`.
    fn offspring_factor(&self, parent: &Interaction, key: StreamKey) -> Result<f64> {
        let hits = self.run_particle(&parent.state, parent.node, parent.tau, 1, key)?;
        Ok(match hits.first() {
            Some(j) => j.discount_from(&parent.state) * j.weight(parent.tau, self.cfg.lambda) * theta_step(j.gap),
            None => 0.0,
        })
    }

    /// Contributions `x_1..x_order` of one path family (index 0 unused).
    fn path_terms(&self, path: u64, salt: u64, order: usize) -> Result<[f64; MAX_ORDER + 1]> {
        let mut x = [0.0; MAX_ORDER + 1];
        if order == 0 {
            return Ok(x);
        }
        let lambda = self.cfg.lambda;
        let moll = &self.cfg.mollifier;
        let key = |b| StreamKey {
            seed: self.cfg.seed,
            salt,
            path,
            branch: b,
        };
        let origin = self.model.initial_state(self.spec.spot);
        let trunk = self.run_particle(&origin, 0, 0.0, order, key(branch::TRUNK))?;
        let Some(first) = trunk.first() else {
            return Ok(x);
        };

        // chain factors along the trunk
        let mut w = [0.0; MAX_ORDER + 1];
        let mut disc = [0.0; MAX_ORDER + 1];
        let mut theta = [0.0; MAX_ORDER + 1];
        let mut delta = [0.0; MAX_ORDER + 1];
        let mut prev = 0.0;
        for (i, j) in trunk.iter().enumerate() {
            let k = i + 1;
            w[k] = j.weight(prev, lambda);
            disc[k] = j.discount_from(&origin);
            theta[k] = theta_step(j.gap);
            delta[k] = moll.delta(j.gap, j.state.spot);
            prev = j.tau;
        }
        let n = trunk.len();

        x[1] = disc[1] * w[1] * theta[1];
        if order >= 2 && n >= 2 {
            x[2] = -disc[2] * w[1] * delta[1] * w[2] * theta[2];
        }
        if order < 3 {
            return Ok(x);
        }

        let d1 = moll.delta_prime(first.gap, first.state.spot);
        // trunk W2 theta2 measured from tau_1
        let g_trunk = if n >= 2 {
            disc[2] / disc[1] * w[2] * theta[2]
        } else {
            0.0
        };
        let g_a = if d1 != 0.0 || order >= 4 {
            self.offspring_factor(first, key(branch::FIRST_OFFSPRING_A))?
        } else {
            0.0
        };
        if n >= 3 {
            x[3] = disc[3] * w[1] * delta[1] * w[2] * delta[2] * w[3] * theta[3];
        }
        x[3] += 0.5 * disc[1] * w[1] * d1 * g_trunk * g_a;
        if order < 4 {
            return Ok(x);
        }

        let d2 = moll.delta_second(first.gap, first.state.spot);
        let g_b = self.offspring_factor(first, key(branch::FIRST_OFFSPRING_B))?;
        let triple = disc[1] * w[1] * d2 * g_trunk * g_a * g_b / 6.0;
        let h_trunk = if n >= 3 {
            disc[3] / disc[1] * w[2] * delta[2] * w[3] * theta[3]
        } else {
            0.0
        };
        let mixed = disc[1] * w[1] * d1 * g_a * h_trunk;
        let chain = if n >= 4 {
            disc[4] * w[1] * delta[1] * w[2] * delta[2] * w[3] * delta[3] * w[4] * theta[4]
        } else {
            0.0
        };
        let late_branch = if n >= 2 {
            let second = &trunk[1];
            let dp2 = moll.delta_prime(second.gap, second.state.spot);
            let g_trunk2 = if n >= 3 {
                disc[3] / disc[2] * w[3] * theta[3]
            } else {
                0.0
            };
            let g_c = self.offspring_factor(second, key(branch::SECOND_OFFSPRING))?;
            0.5 * disc[2] * w[1] * delta[1] * w[2] * dp2 * g_trunk2 * g_c
        } else {
            0.0
        };
        x[4] = -(triple + mixed + chain + late_branch);
        Ok(x)
    }

    fn path_contributions(&self, path: u64) -> Result<[f64; MAX_ORDER + 1]> {
        let order = self.cfg.order;
        if self.cfg.common_random_numbers {
            return self.path_terms(path, 0, order);
        }
        let mut x = [0.0; MAX_ORDER + 1];
        for k in 1..=order {
            x[k] = self.path_terms(path, k as u64, k)?[k];
        }
        Ok(x)
    }

    fn run_chunk(&self, chunk: u64) -> Result<ChunkStats> {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(self.cfg.n_paths);
        let mut stats = ChunkStats::default();
        for path in start..end {
            let x = self.path_contributions(path)?;
            let mut partial = 0.0;
            for k in 1..=self.cfg.order {
                partial += x[k];
                stats.terms[k].push(x[k]);
                stats.partial[k].push(partial);
            }
        }
        Ok(stats)
    }

    fn run(&self) -> Result<ChunkStats> {
        let chunks = self.cfg.n_paths.div_ceil(CHUNK);
        let stats: Vec<ChunkStats> = if self.cfg.workers <= 1 {
            (0..chunks).map(|c| self.run_chunk(c)).collect::<Result<_>>()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.cfg.workers)
                .build()
                .map_err(|e| Error::WorkerPool(e.to_string()))?;
            pool.install(|| {
                (0..chunks)
                    .into_par_iter()
                    .map(|c| self.run_chunk(c))
                    .collect::<Result<_>>()
            })?
        };
        Ok(merge_tree(&stats))
    }
}

fn check_inputs(model: &Model, spec: &OptionSpec, config: &SimConfig) -> Result<()> {
    model.validate()?;
    spec.validate()?;
    config.validate()?;
    if matches!(model, Model::Heston(_)) && config.order > 3 {
        return Err(Error::OrderNotAvailable {
            order: config.order,
            model: model.name(),
        });
    }
    Ok(())
}

/// Runs orders `0..=config.order` on one path family and sums them.
pub fn price_american(model: &Model, spec: &OptionSpec, config: &SimConfig) -> Result<ExpansionResult> {
    check_inputs(model, spec, config)?;
    let engine = Engine::new(model, spec, config);
    let european = engine.pricer.price_at_inception()?;
    let order = config.order;
    let mut means = vec![european];
    let mut stderrs = vec![0.0];
    let mut cumulative = vec![european];
    let mut cumulative_stderrs = vec![0.0];
    if order > 0 {
        let stats = engine.run()?;
        for k in 1..=order {
            means.push(stats.terms[k].mean);
            stderrs.push(stats.terms[k].stderr());
            cumulative.push(european + stats.partial[k].mean);
            cumulative_stderrs.push(if config.common_random_numbers {
                stats.partial[k].stderr()
            } else {
                // independent families: variances add
                stderrs[1..=k].iter().map(|s| s * s).sum::<f64>().sqrt()
            });
        }
    }
    Ok(ExpansionResult {
        means,
        stderrs,
        cumulative,
        cumulative_stderrs,
        n_paths: config.n_paths,
    })
}

fn estimate_order(model: &Model, spec: &OptionSpec, config: &SimConfig, order: usize) -> Result<Estimate> {
    let cfg = SimConfig { order, ..*config };
    let res = price_american(model, spec, &cfg)?;
    Ok(Estimate {
        mean: res.means[order],
        stderr: res.stderrs[order],
    })
}

/// First-order term: the early-exercise premium integrated against the
/// European exercise region.
pub fn estimate_order1(model: &Model, spec: &OptionSpec, config: &SimConfig) -> Result<Estimate> {
    estimate_order(model, spec, config, 1)
}

pub fn estimate_order2(model: &Model, spec: &OptionSpec, config: &SimConfig) -> Result<Estimate> {
    estimate_order(model, spec, config, 2)
}

pub fn estimate_order3(model: &Model, spec: &OptionSpec, config: &SimConfig) -> Result<Estimate> {
    estimate_order(model, spec, config, 3)
}

/// Fourth-order term. Black-Scholes only.
pub fn estimate_order4(model: &Model, spec: &OptionSpec, config: &SimConfig) -> Result<Estimate> {
    estimate_order(model, spec, config, 4)
}

/// Per-path contributions `x_1..x_order` of path family `path` (index 0 is
/// always zero). Exposed for path-wise property checks.
pub fn path_contributions(
    model: &Model,
    spec: &OptionSpec,
    config: &SimConfig,
    path: u64,
) -> Result<[f64; MAX_ORDER + 1]> {
    check_inputs(model, spec, config)?;
    Engine::new(model, spec, config).path_contributions(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::BlackScholesParams;
    use approx::assert_relative_eq;

    fn bs(r: f64, y: f64, sigma: f64) -> Model {
        Model::BlackScholes(BlackScholesParams::new(r, y, sigma).unwrap())
    }

    #[test]
    fn jump_inversion_examples() {
        assert_eq!(jump_time_from_uniform(0.3, 2.0, 1.0), 0.3);
        assert_relative_eq!(
            jump_time_from_uniform(0.0, 2.0, (-2.0f64).exp()),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn chat_weight_examples() {
        assert_relative_eq!(chat_weight(0.0, 0.5, 4.0, 2.0), 2.0 * 1f64.exp(), max_relative = 1e-15);
        assert_relative_eq!(chat_weight(0.0, 0.5, 4.0, 2.0), 5.43656, epsilon = 1e-5);
        assert_eq!(chat_weight(0.2, 0.9, 0.0, 2.0), 0.0);
        assert_eq!(chat_weight(0.7, 0.7, 1.0, 1.0), 1.0);
    }

    #[test]
    fn schedule_is_increasing_and_bounded() {
        let mut rng = StreamKey {
            seed: 3,
            salt: 0,
            path: 0,
            branch: 0,
        }
        .rng();
        for _ in 0..200 {
            let s = JumpSchedule::draw(&mut rng, 0.1, 5.0, 1.0, 10);
            assert!(s.times.windows(2).all(|w| w[0] < w[1]));
            assert!(s.times.iter().all(|&t| t > 0.1 && t < 1.0));
            let nodes = s.nodes(0.01, 100);
            assert!(nodes
                .iter()
                .zip(&s.times)
                .all(|(&n, &t)| n as f64 * 0.01 >= t - 1e-12 && n <= 100));
        }
    }

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3 - 4.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = Moments::merge(a, b);
        assert_relative_eq!(m.mean, all.mean, max_relative = 1e-12);
        assert_relative_eq!(m.m2, all.m2, max_relative = 1e-10);
    }

    #[test]
    fn order_zero_is_european() {
        let model = bs(0.08, 0.12, 0.2);
        let spec = OptionSpec::put(100.0, 3.0, 100.0).unwrap();
        let cfg = SimConfig {
            order: 0,
            ..SimConfig::default()
        };
        let res = price_american(&model, &spec, &cfg).unwrap();
        assert_eq!(res.cumulative.len(), 1);
        assert_relative_eq!(res.price(), 15.252, epsilon = 5e-4);
        assert_eq!(res.stderrs[0], 0.0);
    }

    #[test]
    fn rejects_bad_orders() {
        let spec = OptionSpec::put(100.0, 0.5, 100.0).unwrap();
        let cfg = SimConfig {
            order: 5,
            ..SimConfig::default()
        };
        assert_eq!(
            price_american(&bs(0.05, 0.0, 0.2), &spec, &cfg).unwrap_err(),
            Error::UnsupportedOrder(5)
        );
        let heston = Model::Heston(crate::models::HestonParams {
            r: 0.05,
            y: 0.0,
            v0: 0.04,
            xi: 3.0,
            theta: 0.04,
            eta: 0.1,
            rho: -0.1,
        });
        let cfg = SimConfig {
            order: 4,
            ..SimConfig::default()
        };
        assert!(matches!(
            price_american(&heston, &spec, &cfg),
            Err(Error::OrderNotAvailable { order: 4, .. })
        ));
    }

    #[test]
    fn paths_beyond_expiry_contribute_nothing() {
        // a tiny intensity pushes every first interaction past expiry
        let model = bs(0.08, 0.12, 0.2);
        let spec = OptionSpec::put(100.0, 0.1, 100.0).unwrap();
        let cfg = SimConfig {
            lambda: 1e-9,
            order: 4,
            n_paths: 50,
            ..SimConfig::default()
        };
        for path in 0..50 {
            assert_eq!(path_contributions(&model, &spec, &cfg, path).unwrap(), [0.0; 5]);
        }
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let model = bs(0.08, 0.12, 0.2);
        let spec = OptionSpec::put(100.0, 3.0, 90.0).unwrap();
        let cfg = SimConfig {
            n_paths: 5000,
            n_steps: 300,
            order: 4,
            ..SimConfig::default()
        };
        let one = price_american(&model, &spec, &cfg).unwrap();
        let three = price_american(&model, &spec, &SimConfig { workers: 3, ..cfg }).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn independent_families_differ_from_common() {
        let model = bs(0.05, 0.0, 0.2);
        let spec = OptionSpec::put(100.0, 0.5, 100.0).unwrap();
        let cfg = SimConfig {
            n_paths: 4000,
            order: 2,
            ..SimConfig::default()
        };
        let common = price_american(&model, &spec, &cfg).unwrap();
        let indep = price_american(
            &model,
            &spec,
            &SimConfig {
                common_random_numbers: false,
                ..cfg
            },
        )
        .unwrap();
        // order 1 uses salt 1 in independent mode
        assert_ne!(common.means[1], indep.means[1]);
        assert!((common.means[1] - indep.means[1]).abs() < 4.0 * (common.stderrs[1] + indep.stderrs[1]));
    }
}
