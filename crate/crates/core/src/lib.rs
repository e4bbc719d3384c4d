//! American option pricing through the decomposition of the price into the
//! European value plus an early-exercise premium. The premium solves a
//! decoupled nonlinear backward equation, which is expanded perturbatively in
//! the exercise driver; each order is a nested expectation evaluated in one
//! forward pass by a branching particle Monte Carlo.
//!
//! - [`models`]: Black-Scholes and Heston dynamics, payoff, premium rate.
//! - [`european`]: the zeroth order (closed form and Fourier).
//! - [`mollifier`]: Gaussian step/delta kernels and bandwidth selection.
//! - [`particle`]: the interaction-time estimators for orders one to four.
//! - [`oracle`]: lattice and quadrature references.

pub mod error;
pub mod european;
mod gauss;
pub mod models;
pub mod mollifier;
pub mod oracle;
pub mod particle;
pub mod rng;

pub use error::{Error, Result};
pub use european::{bs_price, heston_price, EuropeanPricer, FourierConfig, HestonPricer};
pub use models::{payoff, premium_rate, BlackScholesParams, HestonParams, Model, OptionKind, OptionSpec, PathState};
pub use mollifier::{Bandwidth, MollifierConfig};
pub use oracle::{
    exercise_boundary, quadrature_v1, quadrature_v2, tree_american, tree_european, ExerciseBoundary, QuadratureConfig,
    TreeConfig,
};
pub use particle::{
    estimate_order1, estimate_order2, estimate_order3, estimate_order4, price_american, Estimate, ExpansionResult,
    SimConfig,
};
