//! Probability machinery: distribution parameterization, sampling,
//! quantiles, the supply Markov chain, conditional spoilage probabilities,
//! and reproducible stream-addressed randomness.

mod binomial;
mod markov;
mod negbinom;
mod spoilage;
mod stream;

pub use binomial::{binomial_quantile, sample_binomial, BinomialQuantileTable};
pub use markov::{
    initial_supply_state, mean_shortage_fraction, mean_supplied_fraction, next_supply_state,
    pick_state, sample_beta, sample_delivery_fraction, stationary_distribution,
};
pub use negbinom::{
    demand_dist_from_params, draw_demand_params, sample_nonstationary_demand, sample_poisson,
    NegBinom,
};
pub use spoilage::{conditional_spoilage_probs, sample_spoilage};
pub use stream::{RngStream, StreamAddress, StreamScope, VarTag};
