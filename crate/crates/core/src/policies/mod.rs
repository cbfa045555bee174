//! Replenishment policies mapping the current state to an order quantity:
//! the myopic newsvendor, the expectation-based deterministic rule, the
//! retailer's parametric benchmark, and the Monte Carlo stochastic
//! lookahead.

mod lookahead;

pub use lookahead::{lookahead_order, LookaheadParams};

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{
    CostParams, DemandModel, InfoMode, InfoScenario, ShelfLifeModel, SimulationState, SupplyModel,
};
use crate::dynamics::{project_inventory, SpoilagePlan};
use crate::error::{Error, Result};
use crate::stochastic::{mean_shortage_fraction, BinomialQuantileTable, NegBinom, RngStream};

/// Per-period demand information available to a policy.
pub trait DemandForecast: Sync {
    /// Expected demand of the given absolute period.
    fn mean(&self, period: usize) -> f64;
    /// Full distribution of the period's demand; `None` when demand is a
    /// known constant equal to `mean`.
    fn dist(&self, period: usize) -> Option<NegBinom>;
}

/// Forecast backed by a stationary demand model. For the non-stationary
/// model this exposes the marginal distribution (mean lambda_mean,
/// variance lambda_mean + lambda_kappa + lambda_mean); simulation runs use
/// the per-period parameter tape instead.
#[derive(Debug, Clone)]
pub struct ModelForecast {
    model: DemandModel,
}

impl ModelForecast {
    pub fn new(model: DemandModel) -> Self {
        Self { model }
    }
}

impl DemandForecast for ModelForecast {
    fn mean(&self, _period: usize) -> f64 {
        match self.model {
            DemandModel::NegBinomFixed { mean, .. } => mean,
            DemandModel::NegBinomNonStationary { lambda_mean, .. } => lambda_mean,
            DemandModel::PointForecast { mean } => mean,
        }
    }

    fn dist(&self, _period: usize) -> Option<NegBinom> {
        match self.model {
            DemandModel::NegBinomFixed { mean, size } => NegBinom::new(mean, size).ok(),
            DemandModel::NegBinomNonStationary {
                lambda_mean,
                lambda_kappa,
            } => NegBinom::from_mean_excess_var(lambda_mean, lambda_kappa + lambda_mean).ok(),
            DemandModel::PointForecast { .. } => None,
        }
    }
}

/// Everything a policy may look at when deciding the order of period t.
pub struct DecisionContext<'a> {
    /// Current period t (1-based).
    pub period: usize,
    pub state: &'a SimulationState,
    pub demand: &'a dyn DemandForecast,
    pub supply: &'a SupplyModel,
    pub shelf_life: &'a ShelfLifeModel,
    pub costs: &'a CostParams,
    /// Randomness root for policy-internal sampling.
    pub stream: RngStream,
    /// Closed-day flags indexed by absolute period; empty when every day
    /// is a service day.
    pub closed: &'a [bool],
    /// Precomputed binomial rows for the shelf-life conditionals; policies
    /// fall back to the summation scan when absent.
    pub spoilage_table: Option<&'a BinomialQuantileTable>,
}

impl DecisionContext<'_> {
    pub fn lead_time(&self) -> usize {
        self.state.pipeline.lead_time()
    }

    pub fn is_closed(&self, period: usize) -> bool {
        self.closed.get(period).copied().unwrap_or(false)
    }

    /// Expected demand per period over the lead time t .. t+tau-1.
    fn lead_time_demand(&self) -> Vec<f64> {
        (self.period..self.period + self.lead_time())
            .map(|s| self.demand.mean(s))
            .collect()
    }
}

/// Parameters of the retailer's target-stock rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetailerBenchmarkParams {
    /// Safety stock as a share of mean demand.
    pub safety_pct: f64,
    /// Assumed fixed shelf life in sales periods.
    pub sales_periods: usize,
    /// Assumed delivered share of an order.
    pub yield_rate: f64,
}

/// A replenishment policy with its parameters.
#[derive(Debug, Clone)]
pub enum Policy {
    Newsvendor,
    Deterministic,
    Retailer(RetailerBenchmarkParams),
    Lookahead(LookaheadParams),
}

impl Policy {
    /// Order quantity for delivery `lead_time` periods out.
    pub fn decide(&self, ctx: &DecisionContext) -> Result<u32> {
        if ctx.is_closed(ctx.period) {
            return Ok(0);
        }
        match self {
            Policy::Newsvendor => newsvendor_order(ctx),
            Policy::Deterministic => deterministic_order(ctx),
            Policy::Retailer(params) => Ok(retailer_benchmark_order(ctx, params)),
            Policy::Lookahead(params) => lookahead_order(ctx, params),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Newsvendor => "newsvendor",
            Policy::Deterministic => "deterministic",
            Policy::Retailer(_) => "retailer",
            Policy::Lookahead(_) => "lookahead",
        }
    }
}

/// Policy selector as it appears on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Newsvendor,
    Deterministic,
    Retailer,
    Lookahead,
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "newsvendor" => Ok(PolicyKind::Newsvendor),
            "deterministic" => Ok(PolicyKind::Deterministic),
            "retailer" => Ok(PolicyKind::Retailer),
            "lookahead" => Ok(PolicyKind::Lookahead),
            other => Err(Error::invalid("policy", format!("unknown policy {other:?}"))),
        }
    }
}

/// Myopic newsvendor order: the b/(b+h) quantile of the demand
/// distribution of the delivery period. Ignores inventory, pipeline,
/// shelf life, and supply risk by construction.
pub fn newsvendor_order(ctx: &DecisionContext) -> Result<u32> {
    let ratio = ctx.costs.critical_ratio()?;
    let target = ctx.period + ctx.lead_time();
    match ctx.demand.dist(target) {
        Some(dist) => Ok(dist.quantile(ratio)? as u32),
        None => {
            let mean = ctx.demand.mean(target);
            if ratio <= 0.0 {
                Ok(0)
            } else {
                Ok(mean.round().max(0.0) as u32)
            }
        }
    }
}

/// Expectation-based order: expected demand of the delivery period minus
/// the projected starting inventory, grossed up by the mean supplied
/// fraction and floored at zero.
pub fn deterministic_order(ctx: &DecisionContext) -> Result<u32> {
    let supplied = 1.0 - mean_shortage_fraction(ctx.supply)?;
    if supplied <= 0.0 {
        return Err(Error::TotalShortage(1.0 - supplied));
    }
    let demands = ctx.lead_time_demand();
    let projected = project_inventory(
        &ctx.state.inventory,
        ctx.state.pipeline.pending(),
        &demands,
        supplied,
        SpoilagePlan::ExpectedFractions(ctx.shelf_life.conditional()),
    );
    let expected_demand = ctx.demand.mean(ctx.period + ctx.lead_time());
    let order = ((expected_demand - projected) / supplied).max(0.0);
    Ok(order.round() as u32)
}

/// The retailer's rule: order up to (1 + safety) times expected demand,
/// where the projected position assumes a fixed shelf life, full yield,
/// and pending orders at face value.
pub fn retailer_benchmark_order(ctx: &DecisionContext, params: &RetailerBenchmarkParams) -> u32 {
    let demands = ctx.lead_time_demand();
    let position = project_inventory(
        &ctx.state.inventory,
        ctx.state.pipeline.pending(),
        &demands,
        params.yield_rate,
        SpoilagePlan::FixedLife(params.sales_periods),
    );
    let target = (1.0 + params.safety_pct) * ctx.demand.mean(ctx.period + ctx.lead_time());
    (target - position).max(0.0).round() as u32
}

/// Replace each point-forecast-flagged source by its deterministic
/// expectation marker: the demand model collapses to its mean where fixed,
/// and the supply and shelf-life models carry their point-forecast flags.
pub fn apply_info_scenario(
    demand: DemandModel,
    mut supply: SupplyModel,
    mut shelf_life: ShelfLifeModel,
    info: InfoScenario,
) -> (DemandModel, SupplyModel, ShelfLifeModel) {
    let demand = match (info.demand, demand) {
        (InfoMode::PointForecast, DemandModel::NegBinomFixed { mean, .. }) => {
            DemandModel::PointForecast { mean }
        }
        (_, model) => model,
    };
    supply.point_forecast_mode |= info.supply == InfoMode::PointForecast;
    shelf_life.point_forecast_mode |= info.shelf_life == InfoMode::PointForecast;
    (demand, supply, shelf_life)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{InventoryVector, PipelineState};

    pub(crate) fn context_parts(
        demand: DemandModel,
        supply: SupplyModel,
        shelf_life: ShelfLifeModel,
        costs: CostParams,
        state: SimulationState,
    ) -> (ModelForecast, SupplyModel, ShelfLifeModel, CostParams, SimulationState) {
        (ModelForecast::new(demand), supply, shelf_life, costs, state)
    }

    fn full_supply() -> SupplyModel {
        SupplyModel {
            tpm: [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            ..SupplyModel::baseline()
        }
    }

    fn no_spoilage_shelf() -> ShelfLifeModel {
        ShelfLifeModel::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn newsvendor_matches_quantile() {
        let demand = DemandModel::NegBinomFixed {
            mean: 100.0,
            size: 1.0 / 3.0,
        };
        let (forecast, supply, shelf, costs, state) = context_parts(
            demand,
            SupplyModel::baseline(),
            ShelfLifeModel::baseline(),
            CostParams::baseline(),
            SimulationState::initial(6, 3),
        );
        let ctx = DecisionContext {
            period: 1,
            state: &state,
            demand: &forecast,
            supply: &supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(0, 0),
            closed: &[],
            spoilage_table: None,
        };
        let expected = NegBinom::new(100.0, 1.0 / 3.0)
            .unwrap()
            .quantile(5.0 / 6.0)
            .unwrap() as u32;
        assert_eq!(newsvendor_order(&ctx).unwrap(), expected);
    }

    #[test]
    fn newsvendor_zero_lost_sales_cost_orders_nothing() {
        let (forecast, supply, shelf, costs, state) = context_parts(
            DemandModel::NegBinomFixed {
                mean: 50.0,
                size: 5.0,
            },
            SupplyModel::baseline(),
            ShelfLifeModel::baseline(),
            CostParams {
                lost_sale: 0.0,
                holding: 0.1,
                spoilage: 1.0,
            },
            SimulationState::initial(6, 3),
        );
        let ctx = DecisionContext {
            period: 1,
            state: &state,
            demand: &forecast,
            supply: &supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(0, 0),
            closed: &[],
            spoilage_table: None,
        };
        assert_eq!(newsvendor_order(&ctx).unwrap(), 0);
    }

    #[test]
    fn newsvendor_critical_ratio_is_scale_equivariant() {
        let demand = DemandModel::NegBinomFixed {
            mean: 80.0,
            size: 4.0,
        };
        let mut orders = Vec::new();
        for scale in [1.0, 0.01, 3.0, 250.0] {
            let (forecast, supply, shelf, costs, state) = context_parts(
                demand,
                SupplyModel::baseline(),
                ShelfLifeModel::baseline(),
                CostParams {
                    lost_sale: 5.0 * scale,
                    holding: 0.1,
                    spoilage: 1.0 * scale,
                },
                SimulationState::initial(6, 3),
            );
            let ctx = DecisionContext {
                period: 1,
                state: &state,
                demand: &forecast,
                supply: &supply,
                shelf_life: &shelf,
                costs: &costs,
                stream: RngStream::new(0, 0),
                closed: &[],
            };
            orders.push(newsvendor_order(&ctx).unwrap());
        }
        assert!(orders.windows(2).all(|w| w[0] == w[1]), "{orders:?}");
    }

    #[test]
    fn deterministic_rule_examples() {
        // Inventory already covers expected demand: order nothing.
        let state = SimulationState {
            period: 0,
            inventory: InventoryVector::from_counts(vec![200, 0, 0, 0, 0, 0]),
            last_supply_state: None,
            pipeline: PipelineState::empty(0),
        };
        let (forecast, supply, shelf, costs, state) = context_parts(
            DemandModel::PointForecast { mean: 100.0 },
            full_supply(),
            no_spoilage_shelf(),
            CostParams::baseline(),
            state,
        );
        let ctx = DecisionContext {
            period: 1,
            state: &state,
            demand: &forecast,
            supply: &supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(0, 0),
            closed: &[],
            spoilage_table: None,
        };
        assert_eq!(deterministic_order(&ctx).unwrap(), 0);

        // Shortfall of 80 with full supply.
        let state = SimulationState {
            period: 0,
            inventory: InventoryVector::from_counts(vec![20, 0, 0, 0, 0, 0]),
            last_supply_state: None,
            pipeline: PipelineState::empty(0),
        };
        let ctx = DecisionContext {
            period: 1,
            state: &state,
            demand: &forecast,
            supply: &supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(0, 0),
            closed: &[],
            spoilage_table: None,
        };
        assert_eq!(deterministic_order(&ctx).unwrap(), 80);

        // Same shortfall grossed up by the baseline mean shortage.
        let baseline_supply = SupplyModel::baseline();
        let ctx = DecisionContext {
            period: 1,
            state: &state,
            demand: &forecast,
            supply: &baseline_supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(0, 0),
            closed: &[],
            spoilage_table: None,
        };
        assert_eq!(deterministic_order(&ctx).unwrap(), 81);
    }

    #[test]
    fn retailer_rule_examples() {
        let params = RetailerBenchmarkParams {
            safety_pct: 0.5,
            sales_periods: 2,
            yield_rate: 1.0,
        };
        let empty = SimulationState::initial(6, 0);
        let (forecast, supply, shelf, costs, empty) = context_parts(
            DemandModel::PointForecast { mean: 100.0 },
            full_supply(),
            ShelfLifeModel::baseline(),
            CostParams::baseline(),
            empty,
        );
        let ctx = DecisionContext {
            period: 1,
            state: &empty,
            demand: &forecast,
            supply: &supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(0, 0),
            closed: &[],
            spoilage_table: None,
        };
        assert_eq!(retailer_benchmark_order(&ctx, &params), 150);

        // Position above target: nothing ordered.
        let stocked = SimulationState {
            period: 0,
            inventory: InventoryVector::from_counts(vec![400, 0, 0, 0, 0, 0]),
            last_supply_state: None,
            pipeline: PipelineState::empty(0),
        };
        let ctx = DecisionContext {
            period: 1,
            state: &stocked,
            demand: &forecast,
            supply: &supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(0, 0),
            closed: &[],
            spoilage_table: None,
        };
        assert_eq!(retailer_benchmark_order(&ctx, &params), 0);
    }

    #[test]
    fn retailer_rule_excludes_units_past_their_sales_periods() {
        // One-period shelf life assumption: day-old leftovers are not part
        // of the projected position.
        let lettuce = RetailerBenchmarkParams {
            safety_pct: 0.3,
            sales_periods: 1,
            yield_rate: 1.0,
        };
        let state = SimulationState {
            period: 0,
            inventory: InventoryVector::from_counts(vec![0, 50, 0, 0, 0, 0]),
            last_supply_state: None,
            pipeline: PipelineState::empty(1),
        };
        let (forecast, supply, shelf, costs, state) = context_parts(
            DemandModel::PointForecast { mean: 100.0 },
            full_supply(),
            ShelfLifeModel::baseline(),
            CostParams::baseline(),
            state,
        );
        let ctx = DecisionContext {
            period: 1,
            state: &state,
            demand: &forecast,
            supply: &supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(0, 0),
            closed: &[],
            spoilage_table: None,
        };
        assert_eq!(retailer_benchmark_order(&ctx, &lettuce), 130);
        // With a two-period assumption the leftovers would count if they
        // survived the lead time; here they are sold to cover demand.
        let grapes = RetailerBenchmarkParams {
            safety_pct: 0.3,
            sales_periods: 2,
            yield_rate: 1.0,
        };
        assert!(retailer_benchmark_order(&ctx, &grapes) <= 130);
    }

    #[test]
    fn info_scenario_application() {
        let (demand, supply, shelf) = (
            DemandModel::NegBinomFixed {
                mean: 42.0,
                size: 2.0,
            },
            SupplyModel::baseline(),
            ShelfLifeModel::baseline(),
        );
        let (d, s, f) = apply_info_scenario(
            demand,
            supply.clone(),
            shelf.clone(),
            InfoScenario::all_point_forecast(),
        );
        assert_eq!(d, DemandModel::PointForecast { mean: 42.0 });
        assert!(s.point_forecast_mode);
        assert!(f.point_forecast_mode);

        let (d, s, f) = apply_info_scenario(demand, supply, shelf, InfoScenario::all_distribution());
        assert_eq!(d, demand);
        assert!(!s.point_forecast_mode);
        assert!(!f.point_forecast_mode);
    }

    #[test]
    fn all_policies_return_zero_on_empty_world() {
        let (forecast, supply, shelf, costs, state) = context_parts(
            DemandModel::PointForecast { mean: 0.0 },
            SupplyModel::baseline(),
            ShelfLifeModel::baseline(),
            CostParams::baseline(),
            SimulationState::initial(6, 0),
        );
        let ctx = DecisionContext {
            period: 1,
            state: &state,
            demand: &forecast,
            supply: &supply,
            shelf_life: &shelf,
            costs: &costs,
            stream: RngStream::new(11, 0),
            closed: &[],
            spoilage_table: None,
        };
        let retailer = RetailerBenchmarkParams {
            safety_pct: 0.5,
            sales_periods: 2,
            yield_rate: 1.0,
        };
        let lookahead = LookaheadParams::quick(InfoScenario::all_distribution());
        for policy in [
            Policy::Newsvendor,
            Policy::Deterministic,
            Policy::Retailer(retailer),
            Policy::Lookahead(lookahead),
        ] {
            assert_eq!(policy.decide(&ctx).unwrap(), 0, "{}", policy.name());
        }
    }
}
