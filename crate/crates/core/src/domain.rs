//! Core value types shared by every module: inventory state, cost
//! parameters, stochastic-model parameter sets, and per-period outcomes.
//!
//! All types are immutable values after validation and are safe to share
//! across parallel workers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::conditional_spoilage_probs;

/// Hard cap on the shelf-life support so hot loops can use fixed-size
/// scratch buffers.
pub const MAX_SHELF_LIFE: usize = 16;

/// Age-indexed unit counts of one SKU. `counts[j]` holds units supplied
/// `j` periods ago; index 0 is the newest bucket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryVector {
    counts: Vec<u32>,
}

impl InventoryVector {
    /// Empty inventory with `max_shelf_life` age buckets.
    pub fn empty(max_shelf_life: usize) -> Self {
        Self {
            counts: vec![0; max_shelf_life],
        }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn max_shelf_life(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Receive freshly delivered units into the age-0 bucket.
    pub fn receive(&mut self, quantity: u32) {
        if !self.counts.is_empty() {
            self.counts[0] += quantity;
        }
    }

    /// Shift every bucket one age up and drop the oldest. Returns the
    /// dropped count; the caller is responsible for it being zero after
    /// spoilage (the oldest bucket always spoils completely).
    pub fn age(&mut self) -> u32 {
        if self.counts.is_empty() {
            return 0;
        }
        let dropped = *self.counts.last().unwrap();
        for j in (1..self.counts.len()).rev() {
            self.counts[j] = self.counts[j - 1];
        }
        self.counts[0] = 0;
        dropped
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [u32] {
        &mut self.counts
    }
}

/// Per-unit cost parameters: `b` for a lost sale, `v` for holding one unit
/// one period, `h` for one spoiled unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostParams {
    /// Lost-sales cost per unit (`b`).
    pub lost_sale: f64,
    /// Holding cost per unit per period (`v`).
    pub holding: f64,
    /// Spoilage cost per unit (`h`).
    pub spoilage: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl CostParams {
    /// Baseline asymmetric e-grocery cost structure.
    pub fn baseline() -> Self {
        Self {
            lost_sale: 5.0,
            holding: 0.1,
            spoilage: 1.0,
        }
    }

    pub fn period_cost(&self, ending_inventory: f64, lost: f64, spoiled: f64) -> f64 {
        self.holding * ending_inventory + self.lost_sale * lost + self.spoilage * spoiled
    }

    /// Newsvendor critical ratio `b / (b + h)`.
    pub fn critical_ratio(&self) -> Result<f64> {
        let denom = self.lost_sale + self.spoilage;
        if denom <= 0.0 {
            return Err(Error::UndefinedCriticalRatio);
        }
        Ok(self.lost_sale / denom)
    }
}

/// Demand model kinds. Means and size parameters follow the textbook
/// mean/size negative binomial: variance = mean + mean^2 / size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandModel {
    /// Stationary negative binomial with fixed mean and size.
    NegBinomFixed { mean: f64, size: f64 },
    /// Per-period parameter draws: mean ~ Poisson(lambda_mean) and excess
    /// variance kappa ~ Poisson(lambda_kappa); demand in period t is
    /// negative binomial with mean mu_t and variance mu_t + kappa_t.
    NegBinomNonStationary { lambda_mean: f64, lambda_kappa: f64 },
    /// Deterministic demand equal to the stated mean.
    PointForecast { mean: f64 },
}

/// Supply states of the delivery Markov chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupplyState {
    /// Complete delivery (state 1).
    Full,
    /// Total cancellation (state 2).
    NoDelivery,
    /// Partial delivery with a Beta-distributed fraction (state 3).
    Partial,
}

impl SupplyState {
    pub const ALL: [SupplyState; 3] = [
        SupplyState::Full,
        SupplyState::NoDelivery,
        SupplyState::Partial,
    ];

    pub fn index(self) -> usize {
        match self {
            SupplyState::Full => 0,
            SupplyState::NoDelivery => 1,
            SupplyState::Partial => 2,
        }
    }

    pub fn from_index(i: usize) -> SupplyState {
        Self::ALL[i]
    }
}

/// Three-state Markov supply model: transition matrix over
/// {full, none, partial} plus the Beta shape parameters of the partial
/// delivery fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupplyModel {
    /// Row-stochastic 3x3 transition matrix; rows and columns are ordered
    /// full, none, partial.
    pub tpm: [[f64; 3]; 3],
    /// Beta shape parameters of the partial-delivery fraction.
    pub alpha: f64,
    pub beta: f64,
    /// Replace stochastic delivery with the constant fraction
    /// `1 - mean_shortage_fraction`.
    #[serde(default)]
    pub point_forecast_mode: bool,
}

impl Default for SupplyModel {
    fn default() -> Self {
        Self::baseline()
    }
}

impl SupplyModel {
    /// Baseline chain: rare, moderately persistent shortages.
    pub fn baseline() -> Self {
        Self {
            tpm: [[0.99, 0.005, 0.005], [0.5, 0.4, 0.1], [0.5, 0.1, 0.4]],
            alpha: 2.0,
            beta: 3.0,
            point_forecast_mode: false,
        }
    }

    /// Mean of the partial-delivery fraction, `alpha / (alpha + beta)`.
    pub fn partial_mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Shelf-life distribution over 1..=J periods together with the derived
/// conditional spoilage probabilities.
///
/// `pmf[j-1]` is the probability a unit spoils at the end of its j-th
/// demand period (j = 1 is the delivery period itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShelfLifeModelRaw", into = "ShelfLifeModelRaw")]
pub struct ShelfLifeModel {
    pmf: Vec<f64>,
    conditional: Vec<f64>,
    pub point_forecast_mode: bool,
}

#[derive(Serialize, Deserialize)]
struct ShelfLifeModelRaw {
    pmf: Vec<f64>,
    #[serde(default)]
    point_forecast_mode: bool,
}

impl TryFrom<ShelfLifeModelRaw> for ShelfLifeModel {
    type Error = Error;
    fn try_from(raw: ShelfLifeModelRaw) -> Result<Self> {
        let mut model = ShelfLifeModel::new(raw.pmf)?;
        model.point_forecast_mode = raw.point_forecast_mode;
        Ok(model)
    }
}

impl From<ShelfLifeModel> for ShelfLifeModelRaw {
    fn from(m: ShelfLifeModel) -> Self {
        Self {
            pmf: m.pmf,
            point_forecast_mode: m.point_forecast_mode,
        }
    }
}

impl ShelfLifeModel {
    /// Validates the pmf (entries in [0,1], sum 1 within 1e-9, length at
    /// most [`MAX_SHELF_LIFE`]), normalizes tiny rounding drift, and
    /// derives the conditional spoilage probabilities.
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::invalid("shelf_life.pmf", "must not be empty"));
        }
        if pmf.len() > MAX_SHELF_LIFE {
            return Err(Error::invalid(
                "shelf_life.pmf",
                format!("supports at most {MAX_SHELF_LIFE} periods"),
            ));
        }
        for (i, &f) in pmf.iter().enumerate() {
            if !(0.0..=1.0 + 1e-9).contains(&f) || !f.is_finite() {
                return Err(Error::invalid(
                    format!("shelf_life.pmf[{i}]"),
                    format!("entry {f} outside [0, 1]"),
                ));
            }
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "shelf_life.pmf",
                format!("sums to {sum}, expected 1"),
            ));
        }
        let pmf: Vec<f64> = pmf.iter().map(|f| f / sum).collect();
        let conditional = conditional_spoilage_probs(&pmf);
        Ok(Self {
            pmf,
            conditional,
            point_forecast_mode: false,
        })
    }

    /// Baseline six-period distribution.
    pub fn baseline() -> Self {
        Self::new(vec![0.05, 0.10, 0.15, 0.35, 0.20, 0.15]).unwrap()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Conditional probability that a unit spoils at the end of its j-th
    /// period given survival so far; `conditional()[j-1]` is p_j. Entries
    /// past the last positive-mass period are 1 (such buckets are never
    /// occupied).
    pub fn conditional(&self) -> &[f64] {
        &self.conditional
    }

    /// Number of age buckets J.
    pub fn max_shelf_life(&self) -> usize {
        self.pmf.len()
    }

    /// Mean shelf life in periods, counting the delivery period as 1.
    pub fn mean_periods(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, f)| (i + 1) as f64 * f)
            .sum()
    }
}

/// In-transit replenishment orders. `pending()[i]` is the quantity due
/// `i` periods from now; there are exactly `lead_time` entries at every
/// decision epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineState {
    pending: Vec<u32>,
    lead_time: usize,
}

impl PipelineState {
    /// Zero-filled pipeline (nothing ordered yet).
    pub fn empty(lead_time: usize) -> Self {
        Self {
            pending: vec![0; lead_time],
            lead_time,
        }
    }

    pub fn from_orders(pending: Vec<u32>) -> Self {
        let lead_time = pending.len();
        Self { pending, lead_time }
    }

    pub fn lead_time(&self) -> usize {
        self.lead_time
    }

    pub fn pending(&self) -> &[u32] {
        &self.pending
    }

    /// Append the order just placed (due `lead_time` periods out) and pop
    /// the quantity due this period.
    pub fn push_and_pop(&mut self, order: u32) -> u32 {
        self.pending.push(order);
        self.pending.remove(0)
    }
}

/// Full system state at a decision epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationState {
    /// Current period index t (1-based; 0 before the first period).
    pub period: usize,
    pub inventory: InventoryVector,
    /// Supply state observed in the previous period; `None` before any
    /// delivery has been observed (the chain then starts from its
    /// stationary distribution).
    pub last_supply_state: Option<SupplyState>,
    pub pipeline: PipelineState,
}

impl SimulationState {
    pub fn initial(max_shelf_life: usize, lead_time: usize) -> Self {
        Self {
            period: 0,
            inventory: InventoryVector::empty(max_shelf_life),
            last_supply_state: None,
            pipeline: PipelineState::empty(lead_time),
        }
    }
}

/// Realized quantities and cost of one simulated period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    /// Period index t.
    pub period: usize,
    /// Order placed this period (due in `lead_time` periods).
    pub order_placed: u32,
    /// Units delivered this period.
    pub delivered: u32,
    pub demand: u32,
    pub sold: u32,
    pub lost: u32,
    pub spoiled: u32,
    /// Inventory carried into the next period.
    pub ending_inventory: u32,
    pub cost: f64,
}

/// Which representation of a stochastic source the decision maker uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoMode {
    Distribution,
    PointForecast,
}

/// Information scenario: one flag per uncertainty source. The eight
/// combinations are numbered 1 (all point forecasts) through 8 (all
/// distributions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfoScenario {
    pub demand: InfoMode,
    pub shelf_life: InfoMode,
    pub supply: InfoMode,
}

impl InfoScenario {
    pub fn all_distribution() -> Self {
        Self {
            demand: InfoMode::Distribution,
            shelf_life: InfoMode::Distribution,
            supply: InfoMode::Distribution,
        }
    }

    pub fn all_point_forecast() -> Self {
        Self {
            demand: InfoMode::PointForecast,
            shelf_life: InfoMode::PointForecast,
            supply: InfoMode::PointForecast,
        }
    }

    /// Scenario number 1..=8: +4 for distributional demand, +2 for shelf
    /// life, +1 for supply.
    pub fn number(&self) -> u8 {
        let bit = |m: InfoMode| u8::from(m == InfoMode::Distribution);
        1 + 4 * bit(self.demand) + 2 * bit(self.shelf_life) + bit(self.supply)
    }

    pub fn from_number(n: u8) -> Result<Self> {
        if !(1..=8).contains(&n) {
            return Err(Error::invalid("scenario", format!("{n} outside 1..=8")));
        }
        let mode = |on: bool| {
            if on {
                InfoMode::Distribution
            } else {
                InfoMode::PointForecast
            }
        };
        let bits = n - 1;
        Ok(Self {
            demand: mode(bits & 4 != 0),
            shelf_life: mode(bits & 2 != 0),
            supply: mode(bits & 1 != 0),
        })
    }

    pub fn all() -> impl Iterator<Item = InfoScenario> {
        (1..=8).map(|n| InfoScenario::from_number(n).unwrap())
    }
}

/// Aggregate simulation statistics plus the full per-period trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub avg_order_quantity: f64,
    /// Average ending inventory level.
    pub avg_inventory: f64,
    pub avg_spoilage: f64,
    /// Fraction of total demanded units that were sold (unit-based fill
    /// rate); 1.0 when nothing was demanded.
    pub fill_rate: f64,
    pub avg_cost: f64,
    pub trajectory: Vec<PeriodOutcome>,
}

impl Metrics {
    pub fn from_trajectory(trajectory: Vec<PeriodOutcome>) -> Self {
        let n = trajectory.len().max(1) as f64;
        let sum = |f: fn(&PeriodOutcome) -> f64| trajectory.iter().map(f).sum::<f64>();
        let total_demand = sum(|o| f64::from(o.demand));
        let total_sold = sum(|o| f64::from(o.sold));
        Self {
            avg_order_quantity: sum(|o| f64::from(o.order_placed)) / n,
            avg_inventory: sum(|o| f64::from(o.ending_inventory)) / n,
            avg_spoilage: sum(|o| f64::from(o.spoiled)) / n,
            fill_rate: if total_demand > 0.0 {
                total_sold / total_demand
            } else {
                1.0
            },
            avg_cost: sum(|o| o.cost) / n,
            trajectory,
        }
    }

    pub fn periods(&self) -> usize {
        self.trajectory.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_aging_shifts_and_drops() {
        let mut inv = InventoryVector::from_counts(vec![36, 2, 0, 0, 0, 0]);
        let dropped = inv.age();
        assert_eq!(dropped, 0);
        assert_eq!(inv.counts(), &[0, 36, 2, 0, 0, 0]);
        assert_eq!(inv.total(), 38);
    }

    #[test]
    fn inventory_age_total_matches_minus_dropped() {
        let mut inv = InventoryVector::from_counts(vec![5, 3, 7]);
        let before = inv.total();
        let dropped = inv.age();
        assert_eq!(inv.total(), before - u64::from(dropped));
        assert_eq!(dropped, 7);
    }

    #[test]
    fn cost_params_critical_ratio() {
        let costs = CostParams::baseline();
        assert_eq!(costs.critical_ratio().unwrap(), 5.0 / 6.0);
        let zero = CostParams {
            lost_sale: 0.0,
            holding: 0.1,
            spoilage: 0.0,
        };
        assert!(zero.critical_ratio().is_err());
    }

    #[test]
    fn shelf_life_requires_normalized_pmf() {
        assert!(ShelfLifeModel::new(vec![0.5, 0.4]).is_err());
        let model = ShelfLifeModel::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(model.conditional()[0], 1.0);
    }

    #[test]
    fn shelf_life_mean_of_baseline() {
        // One period of residence on the delivery day plus three more.
        assert!((ShelfLifeModel::baseline().mean_periods() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn scenario_numbering_matches_flag_combinations() {
        assert_eq!(InfoScenario::all_point_forecast().number(), 1);
        assert_eq!(InfoScenario::all_distribution().number(), 8);
        let s5 = InfoScenario {
            demand: InfoMode::Distribution,
            shelf_life: InfoMode::PointForecast,
            supply: InfoMode::PointForecast,
        };
        assert_eq!(s5.number(), 5);
        let s2 = InfoScenario {
            demand: InfoMode::PointForecast,
            shelf_life: InfoMode::PointForecast,
            supply: InfoMode::Distribution,
        };
        assert_eq!(s2.number(), 2);
        for n in 1..=8 {
            assert_eq!(InfoScenario::from_number(n).unwrap().number(), n);
        }
    }

    #[test]
    fn pipeline_push_and_pop_keeps_length() {
        let mut p = PipelineState::empty(3);
        assert_eq!(p.push_and_pop(60), 0);
        assert_eq!(p.pending(), &[0, 0, 60]);
        assert_eq!(p.lead_time(), 3);
    }

    #[test]
    fn metrics_averages_are_trajectory_means() {
        let outcomes = vec![
            PeriodOutcome {
                period: 1,
                order_placed: 10,
                delivered: 8,
                demand: 5,
                sold: 5,
                lost: 0,
                spoiled: 1,
                ending_inventory: 2,
                cost: 1.2,
            },
            PeriodOutcome {
                period: 2,
                order_placed: 0,
                delivered: 0,
                demand: 4,
                sold: 2,
                lost: 2,
                spoiled: 0,
                ending_inventory: 0,
                cost: 10.0,
            },
        ];
        let m = Metrics::from_trajectory(outcomes);
        assert_eq!(m.avg_order_quantity, 5.0);
        assert_eq!(m.fill_rate, 7.0 / 9.0);
        assert_eq!(m.avg_cost, 5.6);
    }
}
