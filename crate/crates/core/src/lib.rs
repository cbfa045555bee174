//! Simulation and optimization toolkit for periodic-review lost-sales
//! inventory control of a perishable SKU with lead time.
//!
//! The library models one SKU managed by daily replenishment orders under
//! three sources of uncertainty: stochastic customer demand (negative
//! binomial, optionally with per-period parameter draws), random supply
//! yield driven by a three-state Markov chain, and random shelf life
//! realized as per-age-bucket binomial spoilage. Unmet demand is lost.
//!
//! Modules:
//! - [`domain`]: value types (inventory vector, cost parameters, stochastic
//!   model parameter sets, scenario configuration, per-period outcomes).
//! - [`stochastic`]: distributions, addressed random streams, the supply
//!   Markov chain, and conditional spoilage probabilities.
//! - [`dynamics`]: the deterministic state-transition engine (FIFO sales,
//!   spoilage, aging) and expectation-based projections.
//! - [`optimizer`]: Nelder-Mead simplex search on the non-negative orthant.
//! - [`policies`]: the four replenishment policies (newsvendor,
//!   deterministic, retailer benchmark, Monte Carlo lookahead).
//! - [`estimation`]: model fitting from historical records with rolling
//!   windows.
//! - [`simulator`]: experiment harness (policy runs, information-value
//!   grid, sensitivity sweeps, paired case-study evaluation).

pub mod config;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod optimizer;
pub mod policies;
pub mod report;
pub mod simulator;
pub mod stochastic;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
