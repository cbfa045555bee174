//! Sensitivity sweeps: vary one uncertainty source (or the cost
//! asymmetry) and compare selected information scenarios on paired
//! environments.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{generate_environment, run_against_environment};
use crate::config::ScenarioConfig;
use crate::domain::{DemandModel, InfoScenario, Metrics, ShelfLifeModel};
use crate::error::{Error, Result};
use crate::policies::{LookaheadParams, Policy};
use crate::stochastic::RngStream;

/// Which parameter the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Excess-variance rate of demand, lambda_kappa in {100, 200, 400, 500}.
    DemandVariance,
    /// Shelf-life distributions f1..f4.
    ShelfLifeSets,
    /// Supply transition matrices theta1..theta4.
    SupplyTpms,
    /// Lost-sales cost b in {0.1, 0.5, 1, 2, 10}.
    CostAsymmetry,
}

impl Sweep {
    pub const ALL: [Sweep; 4] = [
        Sweep::DemandVariance,
        Sweep::ShelfLifeSets,
        Sweep::SupplyTpms,
        Sweep::CostAsymmetry,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Sweep::DemandVariance => "demand_variance",
            Sweep::ShelfLifeSets => "shelf_life_sets",
            Sweep::SupplyTpms => "supply_tpms",
            Sweep::CostAsymmetry => "cost_asymmetry",
        }
    }

    /// Scenarios reported for this sweep.
    pub fn scenarios(&self) -> &'static [u8] {
        match self {
            Sweep::DemandVariance => &[1, 8],
            Sweep::ShelfLifeSets => &[1, 3, 8],
            Sweep::SupplyTpms => &[1, 2, 8],
            Sweep::CostAsymmetry => &[1, 8],
        }
    }
}

impl FromStr for Sweep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "demand_variance" => Ok(Sweep::DemandVariance),
            "shelf_life_sets" => Ok(Sweep::ShelfLifeSets),
            "supply_tpms" => Ok(Sweep::SupplyTpms),
            "cost_asymmetry" => Ok(Sweep::CostAsymmetry),
            other => Err(Error::invalid("sweep", format!("unknown sweep {other:?}"))),
        }
    }
}

/// One (sweep value, scenario) cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub sweep: &'static str,
    pub value: String,
    pub scenario: u8,
    pub metrics: Metrics,
}

/// Shelf-life pmfs of the sensitivity study. The small-variance set is
/// printed unnormalized in its source (sums to 1.1) and is rescaled here.
pub fn shelf_life_sets() -> Vec<(String, ShelfLifeModel)> {
    let raw: [(&str, [f64; 6]); 4] = [
        ("f1", [0.0, 0.1, 0.25, 0.7, 0.05, 0.0]),
        ("f2", [0.2, 0.05, 0.05, 0.25, 0.15, 0.3]),
        ("f3", [0.4, 0.4, 0.075, 0.075, 0.025, 0.025]),
        ("f4", [0.025, 0.025, 0.075, 0.075, 0.4, 0.4]),
    ];
    raw.iter()
        .map(|(name, pmf)| {
            let sum: f64 = pmf.iter().sum();
            let model = ShelfLifeModel::new(pmf.iter().map(|f| f / sum).collect())
                .expect("valid sensitivity pmf");
            (name.to_string(), model)
        })
        .collect()
}

/// Supply transition matrices of the sensitivity study.
pub fn supply_tpm_sets() -> Vec<(String, [[f64; 3]; 3])> {
    vec![
        (
            "theta1".into(),
            [[0.95, 0.01, 0.04], [0.3, 0.2, 0.5], [0.3, 0.5, 0.2]],
        ),
        (
            "theta2".into(),
            [
                [0.8, 0.199, 0.001],
                [0.199, 0.8, 0.001],
                [0.4995, 0.4995, 0.001],
            ],
        ),
        (
            "theta3".into(),
            [[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.05, 0.05, 0.9]],
        ),
        ("theta4".into(), [[1.0 / 3.0; 3]; 3]),
    ]
}

pub fn demand_variance_values() -> Vec<f64> {
    vec![100.0, 200.0, 400.0, 500.0]
}

pub fn cost_asymmetry_values() -> Vec<f64> {
    vec![0.1, 0.5, 1.0, 2.0, 10.0]
}

fn sweep_configs(sweep: Sweep, base: &ScenarioConfig) -> Vec<(String, ScenarioConfig)> {
    match sweep {
        Sweep::DemandVariance => demand_variance_values()
            .into_iter()
            .map(|lk| {
                let mut c = base.clone();
                let lambda_mean = match base.demand {
                    DemandModel::NegBinomNonStationary { lambda_mean, .. } => lambda_mean,
                    _ => 100.0,
                };
                c.demand = DemandModel::NegBinomNonStationary {
                    lambda_mean,
                    lambda_kappa: lk,
                };
                (format!("lambda_kappa={lk}"), c)
            })
            .collect(),
        Sweep::ShelfLifeSets => shelf_life_sets()
            .into_iter()
            .map(|(name, model)| {
                let mut c = base.clone();
                c.shelf_life = model;
                (name, c)
            })
            .collect(),
        Sweep::SupplyTpms => supply_tpm_sets()
            .into_iter()
            .map(|(name, tpm)| {
                let mut c = base.clone();
                c.supply.tpm = tpm;
                (name, c)
            })
            .collect(),
        Sweep::CostAsymmetry => cost_asymmetry_values()
            .into_iter()
            .map(|b| {
                let mut c = base.clone();
                c.costs.lost_sale = b;
                (format!("b={b}"), c)
            })
            .collect(),
    }
}

/// Run one sweep: every sweep value against the scenarios the study
/// reports for it, each value on its own paired environment.
pub fn run_sensitivity(
    sweep: Sweep,
    base: &ScenarioConfig,
    periods: usize,
    seed: u64,
) -> Result<Vec<SweepCell>> {
    let stream = RngStream::new(seed, 0);
    let mut cells = Vec::new();
    for (value, config) in sweep_configs(sweep, base) {
        let env = generate_environment(&config, periods, &stream)?;
        let base_params = LookaheadParams::from_settings(&config.lookahead);
        for &scenario in sweep.scenarios() {
            let info = InfoScenario::from_number(scenario)?;
            let policy = Policy::Lookahead(base_params.with_scenario(info));
            let metrics = run_against_environment(&config, &policy, &env, &stream)?;
            cells.push(SweepCell {
                sweep: sweep.name(),
                value: value.clone(),
                scenario,
                metrics,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_names_round_trip() {
        for sweep in Sweep::ALL {
            assert_eq!(Sweep::from_str(sweep.name()).unwrap(), sweep);
        }
        assert!(Sweep::from_str("bogus").is_err());
    }

    #[test]
    fn shelf_life_sets_are_normalized() {
        for (name, model) in shelf_life_sets() {
            let sum: f64 = model.pmf().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "{name} sums to {sum}");
        }
    }

    #[test]
    fn sweep_emits_expected_cells() {
        let mut config = ScenarioConfig::baseline();
        config.lookahead.paths = 10;
        config.lookahead.extra_periods = 0;
        let cells = run_sensitivity(Sweep::CostAsymmetry, &config, 10, 1).unwrap();
        assert_eq!(cells.len(), 5 * 2);
        assert!(cells.iter().all(|c| c.sweep == "cost_asymmetry"));
        let cells = run_sensitivity(Sweep::SupplyTpms, &config, 10, 1).unwrap();
        assert_eq!(cells.len(), 4 * 3);
    }
}
