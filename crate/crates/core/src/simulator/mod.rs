//! Experiment harness: generate an exogenous environment, run a policy
//! against it period by period, and execute the paper-style experiment
//! suites (policy comparison, information-value grid, sensitivity sweeps,
//! paired case-study evaluation).

mod case_study;
mod sensitivity;

pub use case_study::{
    evaluate_case_study, lane_metrics, synthesize_history, CasePeriod, CaseStudyReport,
    PolicyPeriod,
};
pub use sensitivity::{run_sensitivity, Sweep, SweepCell};

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::domain::{
    DemandModel, InfoScenario, Metrics, PipelineState, SimulationState, SupplyState,
};
use crate::dynamics::{advance_period, Realization};
use crate::error::{Error, Result};
use crate::policies::{
    DecisionContext, DemandForecast, LookaheadParams, Policy, PolicyKind,
    RetailerBenchmarkParams,
};
use crate::stochastic::{
    initial_supply_state, next_supply_state, sample_delivery_fraction, BinomialQuantileTable,
    NegBinom, RngStream, VarTag,
};

/// Bucket sizes covered by precomputed binomial rows; larger buckets fall
/// back to the summation scan.
const SPOILAGE_TABLE_MAX_N: usize = 1024;

/// Demand description of one period: mean plus optional excess variance;
/// `kappa == None` marks a point forecast (demand identically the mean).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodDemand {
    pub mu: f64,
    pub kappa: Option<f64>,
}

impl PeriodDemand {
    pub fn dist(&self) -> Option<NegBinom> {
        let kappa = self.kappa?;
        if self.mu <= 0.0 {
            return None;
        }
        Some(NegBinom::from_mean_excess_var(self.mu, kappa).expect("positive mean"))
    }
}

/// Realized exogenous world of one run plus the per-period demand
/// parameters (known to every policy as its forecast).
#[derive(Debug, Clone)]
pub struct Environment {
    pub periods: usize,
    /// Demand parameters for periods 1..=periods+forecast_slack.
    pub demand_spec: Vec<PeriodDemand>,
    /// Realized demand, periods 1..=periods.
    pub demand: Vec<u32>,
    pub supply_state: Vec<SupplyState>,
    pub delivery_fraction: Vec<f64>,
    /// Spoilage uniforms, one per (period, age bucket).
    pub spoil_u: Vec<f64>,
    pub max_shelf_life: usize,
}

impl Environment {
    fn spec(&self, period: usize) -> PeriodDemand {
        debug_assert!(period >= 1);
        self.demand_spec
            .get(period - 1)
            .copied()
            .unwrap_or(PeriodDemand {
                mu: 0.0,
                kappa: None,
            })
    }

    pub fn spoil_uniform(&self, period: usize, age: usize) -> f64 {
        self.spoil_u[(period - 1) * self.max_shelf_life + age]
    }
}

/// Forecast view over the environment's per-period parameters.
pub struct TapeForecast<'a> {
    env: &'a Environment,
}

impl DemandForecast for TapeForecast<'_> {
    fn mean(&self, period: usize) -> f64 {
        self.env.spec(period).mu
    }

    fn dist(&self, period: usize) -> Option<NegBinom> {
        self.env.spec(period).dist()
    }
}

/// Generate the exogenous world for `periods` periods: per-period demand
/// parameters and realizations, the supply-state chain with delivery
/// fractions, and one spoilage uniform per (period, age). Every draw is
/// addressed by (period, variable), so the same seed always produces the
/// same world no matter which policy later consumes it.
pub fn generate_environment(
    config: &ScenarioConfig,
    periods: usize,
    stream: &RngStream,
) -> Result<Environment> {
    let lead = config.simulation.lead_time;
    let slack = lead + config.lookahead.extra_periods + 1;
    let max_shelf = config.shelf_life.max_shelf_life();

    let mut demand_spec = Vec::with_capacity(periods + slack);
    for p in 1..=(periods + slack) as u64 {
        let spec = match config.demand {
            DemandModel::NegBinomFixed { mean, size } => PeriodDemand {
                mu: mean,
                kappa: Some(mean * mean / size),
            },
            DemandModel::PointForecast { mean } => PeriodDemand {
                mu: mean,
                kappa: None,
            },
            DemandModel::NegBinomNonStationary {
                lambda_mean,
                lambda_kappa,
            } => {
                let mut rng = stream.env(p, VarTag::ParamDraw);
                let (mu, kappa) =
                    crate::stochastic::draw_demand_params(lambda_mean, lambda_kappa, &mut rng);
                PeriodDemand {
                    mu,
                    kappa: Some(kappa),
                }
            }
        };
        demand_spec.push(spec);
    }

    let mut demand = Vec::with_capacity(periods);
    let mut supply_state = Vec::with_capacity(periods);
    let mut delivery_fraction = Vec::with_capacity(periods);
    let mut spoil_u = Vec::with_capacity(periods * max_shelf);
    let mut state: Option<SupplyState> = None;
    for p in 1..=periods {
        let spec = demand_spec[p - 1];
        let d = match spec.dist() {
            Some(dist) => {
                let mut rng = stream.env(p as u64, VarTag::Demand);
                dist.sample(&mut rng) as u32
            }
            None => spec.mu.round().max(0.0) as u32,
        };
        demand.push(d);

        let mut rng = stream.env(p as u64, VarTag::SupplyState);
        let g = match state {
            Some(prev) => next_supply_state(prev, &config.supply.tpm, &mut rng),
            None => initial_supply_state(&config.supply.tpm, &mut rng)?,
        };
        state = Some(g);
        supply_state.push(g);
        let mut rng = stream.env(p as u64, VarTag::SupplyFraction);
        delivery_fraction.push(sample_delivery_fraction(
            g,
            config.supply.alpha,
            config.supply.beta,
            &mut rng,
        ));

        let mut rng = stream.env(p as u64, VarTag::Spoilage);
        for _ in 0..max_shelf {
            spoil_u.push(rng.gen::<f64>());
        }
    }

    Ok(Environment {
        periods,
        demand_spec,
        demand,
        supply_state,
        delivery_fraction,
        spoil_u,
        max_shelf_life: max_shelf,
    })
}

/// Instantiate the policy named by `kind` with the scenario's parameters.
pub fn build_policy(kind: PolicyKind, config: &ScenarioConfig) -> Policy {
    match kind {
        PolicyKind::Newsvendor => Policy::Newsvendor,
        PolicyKind::Deterministic => Policy::Deterministic,
        PolicyKind::Retailer => Policy::Retailer(RetailerBenchmarkParams {
            safety_pct: config.retailer.safety_pct,
            sales_periods: config.retailer.sales_periods,
            yield_rate: config.retailer.yield_rate,
        }),
        PolicyKind::Lookahead => {
            Policy::Lookahead(LookaheadParams::from_settings(&config.lookahead))
        }
    }
}

/// Run one policy against an already generated environment.
pub fn run_against_environment(
    config: &ScenarioConfig,
    policy: &Policy,
    env: &Environment,
    stream: &RngStream,
) -> Result<Metrics> {
    let table = BinomialQuantileTable::new(config.shelf_life.conditional(), SPOILAGE_TABLE_MAX_N);
    let forecast = TapeForecast { env };
    let mut state = SimulationState {
        period: 0,
        inventory: config.starting_inventory(),
        last_supply_state: None,
        pipeline: PipelineState::from_orders(config.starting_pipeline()),
    };
    let mut trajectory = Vec::with_capacity(env.periods);

    for t in 1..=env.periods {
        let ctx = DecisionContext {
            period: t,
            state: &state,
            demand: &forecast,
            supply: &config.supply,
            shelf_life: &config.shelf_life,
            costs: &config.costs,
            stream: *stream,
            closed: &[],
            spoilage_table: Some(&table),
        };
        let order = policy.decide(&ctx).map_err(|e| Error::PolicyFailure {
            period: t,
            source: Box::new(e),
        })?;

        let due = state.pipeline.pending()[0];
        let delivered = (env.delivery_fraction[t - 1] * f64::from(due)).round() as u32;
        let realized = Realization {
            delivered,
            demand: env.demand[t - 1],
            supply_state: Some(env.supply_state[t - 1]),
        };
        let (next, outcome) = advance_period(&state, order, realized, &config.costs, |age, n| {
            table.quantile(age, u64::from(n), env.spoil_uniform(t, age)) as u32
        })?;
        state = next;
        trajectory.push(outcome);
    }

    let burn_in = config.simulation.burn_in.min(trajectory.len());
    Ok(Metrics::from_trajectory(trajectory.split_off(burn_in)))
}

/// Simulate `periods` periods of the scenario under one policy.
pub fn run_simulation(
    config: &ScenarioConfig,
    kind: PolicyKind,
    periods: usize,
    seed: u64,
) -> Result<Metrics> {
    let stream = RngStream::new(seed, 0);
    let env = generate_environment(config, periods, &stream)?;
    let policy = build_policy(kind, config);
    run_against_environment(config, &policy, &env, &stream)
}

/// Run the lookahead policy under every information scenario against one
/// shared environment (paired common random numbers), scenario 1 through
/// scenario 8.
pub fn run_eviu_grid(
    config: &ScenarioConfig,
    periods: usize,
    seed: u64,
) -> Result<Vec<(InfoScenario, Metrics)>> {
    let stream = RngStream::new(seed, 0);
    let env = generate_environment(config, periods, &stream)?;
    let base = LookaheadParams::from_settings(&config.lookahead);
    let mut out = Vec::with_capacity(8);
    for scenario in InfoScenario::all() {
        let policy = Policy::Lookahead(base.with_scenario(scenario));
        let metrics = run_against_environment(config, &policy, &env, &stream)?;
        out.push((scenario, metrics));
    }
    Ok(out)
}
