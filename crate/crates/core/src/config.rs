//! Scenario configuration: one experiment fully specified as a sectioned
//! key-value text file (TOML). A partial file works; every omitted field
//! falls back to the baseline experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{
    CostParams, DemandModel, InfoScenario, InventoryVector, ShelfLifeModel, SupplyModel,
    MAX_SHELF_LIFE,
};
use crate::error::{Error, Result};

/// Simulation-wide settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSettings {
    /// Lead time in periods between placing an order and its delivery.
    pub lead_time: usize,
    /// Periods excluded from metrics at the start of a run.
    pub burn_in: usize,
    /// Weekdays without service ("sun", "mon", ...). Only effective where
    /// real dates exist, i.e. in the case-study evaluation.
    pub closed_weekdays: Vec<String>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            lead_time: 3,
            burn_in: 0,
            closed_weekdays: Vec::new(),
        }
    }
}

/// Monte Carlo lookahead policy settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LookaheadSettings {
    /// Number of sample paths per decision.
    pub paths: usize,
    /// Lookahead periods beyond the lead time.
    pub extra_periods: usize,
    /// Per-period discount on costs after the delivery period.
    pub discount: f64,
    /// Which sources the decision maker sees as distributions.
    pub info: InfoScenario,
    /// Optimizer evaluation budget per decision dimension.
    pub max_evals_per_dim: usize,
    /// Optimizer convergence tolerance on the objective spread.
    pub objective_tolerance: f64,
}

impl Default for LookaheadSettings {
    fn default() -> Self {
        Self {
            paths: 1000,
            extra_periods: 3,
            discount: 0.9,
            info: InfoScenario::all_distribution(),
            max_evals_per_dim: 200,
            objective_tolerance: 1e-2,
        }
    }
}

/// Parameters of the retailer's parametric benchmark rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RetailerSettings {
    /// Safety stock as a share of mean demand.
    pub safety_pct: f64,
    /// Assumed fixed number of sales periods.
    pub sales_periods: usize,
    /// Assumed delivered share of an order.
    pub yield_rate: f64,
}

impl Default for RetailerSettings {
    fn default() -> Self {
        // Mushrooms row of the case-study parameter table.
        Self {
            safety_pct: 0.5,
            sales_periods: 2,
            yield_rate: 1.0,
        }
    }
}

/// Optional non-empty starting state.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StartSettings {
    /// Age-indexed starting inventory; empty means start from nothing.
    pub inventory: Vec<u32>,
    /// Orders already in transit, due in 1..=lead_time periods; empty
    /// means a zero-filled pipeline.
    pub pending: Vec<u32>,
}

/// Full specification of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub costs: CostParams,
    pub demand: DemandModel,
    pub supply: SupplyModel,
    pub shelf_life: ShelfLifeModel,
    pub simulation: SimulationSettings,
    pub lookahead: LookaheadSettings,
    pub retailer: RetailerSettings,
    pub start: StartSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            costs: CostParams::baseline(),
            demand: DemandModel::NegBinomNonStationary {
                lambda_mean: 100.0,
                lambda_kappa: 300.0,
            },
            supply: SupplyModel::baseline(),
            shelf_life: ShelfLifeModel::baseline(),
            simulation: SimulationSettings::default(),
            lookahead: LookaheadSettings::default(),
            retailer: RetailerSettings::default(),
            start: StartSettings::default(),
        }
    }
}

impl ScenarioConfig {
    /// Baseline experiment of the simulation study.
    pub fn baseline() -> Self {
        Self::default()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        validate_scenario(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn starting_inventory(&self) -> InventoryVector {
        if self.start.inventory.is_empty() {
            InventoryVector::empty(self.shelf_life.max_shelf_life())
        } else {
            InventoryVector::from_counts(self.start.inventory.clone())
        }
    }

    pub fn starting_pipeline(&self) -> Vec<u32> {
        if self.start.pending.is_empty() {
            vec![0; self.simulation.lead_time]
        } else {
            self.start.pending.clone()
        }
    }
}

fn check_nonnegative(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::invalid(field, format!("{value} must be >= 0")));
    }
    Ok(())
}

fn check_positive(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::invalid(field, format!("{value} must be > 0")));
    }
    Ok(())
}

/// Check every invariant and return the (possibly normalized) scenario.
/// Transition rows and the shelf-life pmf within 1e-9 of stochasticity are
/// rescaled exactly; anything further off is an error naming the first
/// violating field.
pub fn validate_scenario(mut config: ScenarioConfig) -> Result<ScenarioConfig> {
    check_nonnegative("costs.lost_sale", config.costs.lost_sale)?;
    check_nonnegative("costs.holding", config.costs.holding)?;
    check_nonnegative("costs.spoilage", config.costs.spoilage)?;

    match config.demand {
        DemandModel::NegBinomFixed { mean, size } => {
            check_positive("demand.mean", mean)?;
            if !(size > 0.0) {
                return Err(Error::invalid("demand.size", format!("{size} must be > 0")));
            }
        }
        DemandModel::NegBinomNonStationary {
            lambda_mean,
            lambda_kappa,
        } => {
            check_nonnegative("demand.lambda_mean", lambda_mean)?;
            check_nonnegative("demand.lambda_kappa", lambda_kappa)?;
        }
        DemandModel::PointForecast { mean } => check_nonnegative("demand.mean", mean)?,
    }

    for (i, row) in config.supply.tpm.iter_mut().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            if !entry.is_finite() || *entry < -1e-12 || *entry > 1.0 + 1e-9 {
                return Err(Error::invalid(
                    format!("supply.tpm[{i}][{j}]"),
                    format!("entry {entry} outside [0, 1]"),
                ));
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "supply.tpm",
                format!("row {} sums to {sum}", i + 1),
            ));
        }
        row.iter_mut().for_each(|x| *x = x.max(0.0) / sum);
    }
    check_positive("supply.alpha", config.supply.alpha)?;
    check_positive("supply.beta", config.supply.beta)?;

    // Shelf-life pmf invariants are enforced on construction; rebuild to
    // normalize drift from hand-edited files.
    let mut shelf = ShelfLifeModel::new(config.shelf_life.pmf().to_vec())?;
    shelf.point_forecast_mode = config.shelf_life.point_forecast_mode;
    config.shelf_life = shelf;

    if config.lookahead.paths == 0 {
        return Err(Error::invalid("lookahead.paths", "must be >= 1"));
    }
    if !(config.lookahead.discount > 0.0 && config.lookahead.discount < 1.0) {
        return Err(Error::invalid(
            "lookahead.discount",
            format!("{} must lie in (0, 1)", config.lookahead.discount),
        ));
    }
    if config.lookahead.max_evals_per_dim == 0 {
        return Err(Error::invalid("lookahead.max_evals_per_dim", "must be >= 1"));
    }

    check_nonnegative("retailer.safety_pct", config.retailer.safety_pct)?;
    if config.retailer.sales_periods == 0 {
        return Err(Error::invalid("retailer.sales_periods", "must be >= 1"));
    }
    if !(config.retailer.yield_rate > 0.0 && config.retailer.yield_rate <= 1.0) {
        return Err(Error::invalid(
            "retailer.yield_rate",
            format!("{} must lie in (0, 1]", config.retailer.yield_rate),
        ));
    }

    if config.simulation.lead_time > 64 {
        return Err(Error::invalid("simulation.lead_time", "must be <= 64"));
    }
    for day in &config.simulation.closed_weekdays {
        parse_weekday(day)?;
    }

    if !config.start.inventory.is_empty()
        && config.start.inventory.len() != config.shelf_life.max_shelf_life()
    {
        return Err(Error::invalid(
            "start.inventory",
            format!(
                "length {} must match shelf-life support {}",
                config.start.inventory.len(),
                config.shelf_life.max_shelf_life()
            ),
        ));
    }
    if !config.start.pending.is_empty()
        && config.start.pending.len() != config.simulation.lead_time
    {
        return Err(Error::invalid(
            "start.pending",
            format!(
                "length {} must match lead time {}",
                config.start.pending.len(),
                config.simulation.lead_time
            ),
        ));
    }

    let _ = MAX_SHELF_LIFE; // length bound enforced by ShelfLifeModel::new
    Ok(config)
}

/// Parse a weekday name as used in `closed_weekdays`.
pub fn parse_weekday(name: &str) -> Result<chrono::Weekday> {
    let day = match name.to_ascii_lowercase().as_str() {
        "mon" | "monday" => chrono::Weekday::Mon,
        "tue" | "tuesday" => chrono::Weekday::Tue,
        "wed" | "wednesday" => chrono::Weekday::Wed,
        "thu" | "thursday" => chrono::Weekday::Thu,
        "fri" | "friday" => chrono::Weekday::Fri,
        "sat" | "saturday" => chrono::Weekday::Sat,
        "sun" | "sunday" => chrono::Weekday::Sun,
        other => {
            return Err(Error::invalid(
                "simulation.closed_weekdays",
                format!("unknown weekday {other:?}"),
            ))
        }
    };
    Ok(day)
}
