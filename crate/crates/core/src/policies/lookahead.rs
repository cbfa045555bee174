//! Monte Carlo stochastic lookahead policy.
//!
//! Each decision freezes N sample paths of demand, supply, and spoilage
//! randomness over the lookahead horizon H = lead_time + extra_periods,
//! then searches the (extra_periods + 1)-dimensional order vector that
//! minimizes the discounted average cost of the periods the decision can
//! still influence. The frozen paths act as common random numbers: every
//! candidate vector is scored on identical draws, so the sample-average
//! objective is deterministic and smooth enough for simplex search.
//! Spoilage uses pre-drawn uniforms mapped through the binomial inverse
//! CDF, which keeps spoilage comonotone across nearby candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DecisionContext;
use crate::config::LookaheadSettings;
use crate::domain::{InfoMode, InfoScenario, MAX_SHELF_LIFE};
use crate::dynamics::step_frac;
use crate::error::{Error, Result};
use crate::optimizer::{nelder_mead, NmOptions};
use crate::stochastic::{
    binomial_quantile, mean_shortage_fraction, next_supply_state, pick_state,
    sample_delivery_fraction, BinomialQuantileTable, VarTag,
};

const MAX_DECISION_DIM: usize = 32;
const PATH_CHUNK: usize = 64;

/// Parameters of one lookahead policy instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookaheadParams {
    /// Number of frozen sample paths per decision.
    pub paths: usize,
    /// Lookahead periods beyond the lead time.
    pub extra_periods: usize,
    /// Discount on costs after the delivery period.
    pub discount: f64,
    pub info: InfoScenario,
    pub max_evals_per_dim: usize,
    pub objective_tolerance: f64,
}

impl LookaheadParams {
    pub fn from_settings(s: &LookaheadSettings) -> Self {
        Self {
            paths: s.paths,
            extra_periods: s.extra_periods,
            discount: s.discount,
            info: s.info,
            max_evals_per_dim: s.max_evals_per_dim,
            objective_tolerance: s.objective_tolerance,
        }
    }

    /// Small-budget variant for tests and smoke runs.
    pub fn quick(info: InfoScenario) -> Self {
        Self {
            paths: 200,
            extra_periods: 1,
            discount: 0.9,
            info,
            max_evals_per_dim: 200,
            objective_tolerance: 1e-2,
        }
    }

    pub fn with_scenario(mut self, info: InfoScenario) -> Self {
        self.info = info;
        self
    }
}

/// One frozen sample path: per-step demand, delivered fraction, and the
/// spoilage uniforms (empty in point-forecast spoilage mode).
struct PathTape {
    demand: Vec<f64>,
    frac: Vec<f64>,
    spoil_u: Vec<f64>,
}

/// Frozen decision problem: paths plus everything needed to score a
/// candidate order vector.
pub(crate) struct LookaheadProblem<'a> {
    table: Option<&'a BinomialQuantileTable>,
    paths: Vec<PathTape>,
    start: Vec<f64>,
    pending: Vec<f64>,
    conditional: Vec<f64>,
    weights: Vec<f64>,
    closed_mask: Vec<bool>,
    lead_time: usize,
    steps: usize,
    shelf_pf: bool,
    lost_cost: f64,
    holding_cost: f64,
    spoil_cost: f64,
}

impl LookaheadProblem<'_> {
    /// Discounted average cost of one candidate order vector over the
    /// frozen paths. Deterministic in the candidate; the reduction order
    /// is fixed regardless of thread count.
    pub(crate) fn objective(&self, x: &[f64]) -> f64 {
        let mut masked = [0.0f64; MAX_DECISION_DIM];
        for (i, &v) in x.iter().enumerate() {
            masked[i] = if self.closed_mask[i] { 0.0 } else { v.max(0.0) };
        }
        let dim = x.len();
        let total: f64 = if self.paths.len() == 1 {
            self.path_cost(&self.paths[0], &masked[..dim])
        } else {
            let partials: Vec<f64> = self
                .paths
                .par_chunks(PATH_CHUNK)
                .map(|chunk| {
                    chunk
                        .iter()
                        .map(|p| self.path_cost(p, &masked[..dim]))
                        .sum::<f64>()
                })
                .collect();
            partials.iter().sum()
        };
        total / self.paths.len() as f64
    }

    fn path_cost(&self, path: &PathTape, x: &[f64]) -> f64 {
        let j = self.start.len();
        let mut buckets = [0.0f64; MAX_SHELF_LIFE];
        buckets[..j].copy_from_slice(&self.start);
        let mut total = 0.0;
        for s in 0..self.steps {
            let due = if s < self.lead_time {
                self.pending[s]
            } else {
                x[s - self.lead_time]
            };
            let delivered = path.frac[s] * due;
            let spoil_u = &path.spoil_u;
            let shelf_pf = self.shelf_pf;
            let conditional = &self.conditional;
            let totals = step_frac(
                &mut buckets[..j],
                delivered,
                path.demand[s],
                |age, count| {
                    if shelf_pf {
                        count * conditional[age]
                    } else {
                        let n = count.round().max(0.0) as u64;
                        let u = spoil_u[s * j + age];
                        let drawn = match self.table {
                            Some(table) => table.quantile(age, n, u),
                            None => binomial_quantile(n, conditional[age], u),
                        };
                        (drawn as f64).min(count)
                    }
                },
            );
            if s >= self.lead_time {
                let cost = self.holding_cost * totals.ending
                    + self.lost_cost * totals.lost
                    + self.spoil_cost * totals.spoiled;
                total += self.weights[s - self.lead_time] * cost;
            }
        }
        total
    }

    fn dimension(&self) -> usize {
        self.closed_mask.len()
    }
}

/// Freeze the sample paths of one decision.
pub(crate) fn build_problem<'a>(
    ctx: &DecisionContext<'a>,
    params: &LookaheadParams,
) -> Result<LookaheadProblem<'a>> {
    let tau = ctx.lead_time();
    let nu = params.extra_periods;
    let dim = nu + 1;
    if dim > MAX_DECISION_DIM {
        return Err(Error::Optimizer(format!(
            "lookahead dimension {dim} exceeds {MAX_DECISION_DIM}"
        )));
    }
    let steps = tau + nu + 1;
    let j = ctx.shelf_life.max_shelf_life();
    let t = ctx.period as u64;

    let demand_pf = params.info.demand == InfoMode::PointForecast;
    let supply_pf =
        params.info.supply == InfoMode::PointForecast || ctx.supply.point_forecast_mode;
    let shelf_pf =
        params.info.shelf_life == InfoMode::PointForecast || ctx.shelf_life.point_forecast_mode;

    let mean_supplied = 1.0 - mean_shortage_fraction(ctx.supply)?;
    if mean_supplied <= 0.0 {
        return Err(Error::TotalShortage(1.0 - mean_supplied));
    }

    // With every source collapsed to its expectation all paths coincide,
    // so one path carries the whole objective.
    let deterministic_paths = demand_pf && supply_pf && shelf_pf;
    let n_paths = if deterministic_paths { 1 } else { params.paths };

    // The stationary distribution is only needed when the chain starts
    // without an observed state; solve it once outside the path loop.
    let initial_theta = match ctx.state.last_supply_state {
        None if !supply_pf => Some(crate::stochastic::stationary_distribution(&ctx.supply.tpm)?),
        _ => None,
    };

    let build_path = |n: u64| -> PathTape {
        let mut demand = Vec::with_capacity(steps);
        let mut frac = Vec::with_capacity(steps);
        let mut state = ctx.state.last_supply_state;
        for s in 0..steps {
            let period = ctx.period + s;
            let d = if ctx.is_closed(period) {
                0.0
            } else if demand_pf {
                ctx.demand.mean(period).round()
            } else {
                match ctx.demand.dist(period) {
                    Some(dist) => {
                        let mut rng = ctx.stream.lookahead(t, n, period as u64, VarTag::Demand);
                        dist.sample(&mut rng) as f64
                    }
                    None => ctx.demand.mean(period).round(),
                }
            };
            demand.push(d);

            let f = if supply_pf {
                mean_supplied
            } else {
                let mut rng = ctx
                    .stream
                    .lookahead(t, n, period as u64, VarTag::SupplyState);
                let g = match (state, &initial_theta) {
                    (Some(prev), _) => next_supply_state(prev, &ctx.supply.tpm, &mut rng),
                    (None, Some(theta)) => pick_state(theta, rand::Rng::gen(&mut rng)),
                    (None, None) => unreachable!("stationary solved when state is unknown"),
                };
                state = Some(g);
                let mut rng = ctx
                    .stream
                    .lookahead(t, n, period as u64, VarTag::SupplyFraction);
                sample_delivery_fraction(g, ctx.supply.alpha, ctx.supply.beta, &mut rng)
            };
            frac.push(f);
        }

        let spoil_u = if shelf_pf {
            Vec::new()
        } else {
            let mut u = Vec::with_capacity(steps * j);
            for s in 0..steps {
                let period = (ctx.period + s) as u64;
                let mut rng = ctx.stream.lookahead(t, n, period, VarTag::Spoilage);
                for _ in 0..j {
                    u.push(rand::Rng::gen::<f64>(&mut rng));
                }
            }
            u
        };
        PathTape {
            demand,
            frac,
            spoil_u,
        }
    };

    let paths: Vec<PathTape> = if n_paths > 1 {
        (0..n_paths as u64).into_par_iter().map(build_path).collect()
    } else {
        (0..n_paths as u64).map(build_path).collect()
    };

    let closed_mask: Vec<bool> = (0..dim).map(|i| ctx.is_closed(ctx.period + i)).collect();
    let weights: Vec<f64> = (0..=nu).map(|i| params.discount.powi(i as i32)).collect();

    Ok(LookaheadProblem {
        table: ctx.spoilage_table,
        paths,
        start: ctx
            .state
            .inventory
            .counts()
            .iter()
            .map(|&c| f64::from(c))
            .collect(),
        pending: ctx
            .state
            .pipeline
            .pending()
            .iter()
            .map(|&c| f64::from(c))
            .collect(),
        conditional: ctx.shelf_life.conditional().to_vec(),
        weights,
        closed_mask,
        lead_time: tau,
        steps,
        shelf_pf,
        lost_cost: ctx.costs.lost_sale,
        holding_cost: ctx.costs.holding,
        spoil_cost: ctx.costs.spoilage,
    })
}

/// Warm start: the order vector the deterministic rule would produce when
/// applied sequentially through the expectation world.
pub(crate) fn deterministic_warm_start(
    ctx: &DecisionContext,
    extra_periods: usize,
    mean_supplied: f64,
) -> Vec<f64> {
    let tau = ctx.lead_time();
    let conditional = ctx.shelf_life.conditional();
    let mut buckets: Vec<f64> = ctx
        .state
        .inventory
        .counts()
        .iter()
        .map(|&c| f64::from(c))
        .collect();
    let mut due: Vec<f64> = ctx
        .state
        .pipeline
        .pending()
        .iter()
        .map(|&c| f64::from(c))
        .collect();
    let mean_at = |period: usize| {
        if ctx.is_closed(period) {
            0.0
        } else {
            ctx.demand.mean(period)
        }
    };

    let mut orders = Vec::with_capacity(extra_periods + 1);
    for s in 0..=extra_periods {
        let decision_period = ctx.period + s;
        let mut projected = buckets.clone();
        for (i, &pending) in due.iter().enumerate() {
            step_frac(
                &mut projected,
                mean_supplied * pending,
                mean_at(decision_period + i),
                |age, count| count * conditional[age],
            );
        }
        let expected_inventory: f64 = projected.iter().sum();
        let mut order =
            ((mean_at(decision_period + tau) - expected_inventory) / mean_supplied).max(0.0);
        if ctx.is_closed(decision_period) {
            order = 0.0;
        }
        orders.push(order);

        due.push(order);
        let arriving = mean_supplied * due.remove(0);
        step_frac(&mut buckets, arriving, mean_at(decision_period), |age, count| {
            count * conditional[age]
        });
    }
    orders
}

/// Order quantity of the lookahead policy: optimize the discounted
/// sample-average cost over the frozen paths and return the first
/// component rounded to the nearest non-negative integer.
pub fn lookahead_order(ctx: &DecisionContext, params: &LookaheadParams) -> Result<u32> {
    let problem = build_problem(ctx, params)?;
    let mean_supplied = 1.0 - mean_shortage_fraction(ctx.supply)?;
    let x0 = deterministic_warm_start(ctx, params.extra_periods, mean_supplied);
    let steps: Vec<f64> = x0.iter().map(|&v| (0.25 * v).max(10.0)).collect();
    let opts = NmOptions::for_dimension(
        problem.dimension(),
        params.max_evals_per_dim,
        params.objective_tolerance,
    );
    let result = nelder_mead(|x| problem.objective(x), &x0, &steps, &opts)?;
    if std::env::var("LA_STATS").is_ok() {
        eprintln!(
            "period {} evals {} converged {} x0 {:?} -> {:?}",
            ctx.period, result.evaluations, result.converged, x0, result.x
        );
    }
    if problem.closed_mask[0] {
        return Ok(0);
    }
    Ok(result.x[0].round().max(0.0) as u32)
}
