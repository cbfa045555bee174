//! Model fitting from historical records: negative binomial demand by
//! maximum likelihood, shelf life from FIFO-imputed spoilage ages, the
//! supply chain from delivered/ordered ratios, and the rolling-window
//! train/eval plan.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::domain::{DemandModel, ShelfLifeModel, SupplyModel};
use crate::error::{Error, Result};

/// Sentinel size parameter marking the Poisson fallback of the demand fit.
pub const POISSON_SIZE_SENTINEL: f64 = 1e15;

/// One period of history as read from the case-study CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub date: NaiveDate,
    /// Uncensored demand.
    pub demand: u32,
    pub ordered: u32,
    pub delivered: u32,
    /// Total units spoiled at the end of the period.
    pub spoiled: u32,
    pub closed: bool,
}

#[derive(Debug, Deserialize)]
struct HistoryRow {
    date: String,
    demand: u32,
    ordered: u32,
    delivered: u32,
    spoiled: u32,
    closed_flag: u8,
}

/// Read history records from a CSV with columns
/// `date,demand,ordered,delivered,spoiled,closed_flag`.
pub fn read_history_csv(path: impl AsRef<Path>) -> Result<Vec<HistoryRecord>> {
    let mut reader = csv::Reader::from_path(path.as_ref()).map_err(|e| Error::CsvRow {
        row: 0,
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<HistoryRow>().enumerate() {
        let data_row = i + 1;
        let row = row.map_err(|e| Error::CsvRow {
            row: data_row,
            message: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| Error::CsvRow {
            row: data_row,
            message: format!("bad date {:?}: {e}", row.date),
        })?;
        if row.delivered > row.ordered {
            return Err(Error::CsvRow {
                row: data_row,
                message: format!(
                    "delivered {} exceeds ordered {}",
                    row.delivered, row.ordered
                ),
            });
        }
        out.push(HistoryRecord {
            date,
            demand: row.demand,
            ordered: row.ordered,
            delivered: row.delivered,
            spoiled: row.spoiled,
            closed: row.closed_flag != 0,
        });
    }
    Ok(out)
}

pub fn write_history_csv(path: impl AsRef<Path>, records: &[HistoryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::CsvRow {
        row: 0,
        message: e.to_string(),
    })?;
    w.write_record(["date", "demand", "ordered", "delivered", "spoiled", "closed_flag"])
        .map_err(|e| Error::CsvRow {
            row: 0,
            message: e.to_string(),
        })?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.demand.to_string(),
            r.ordered.to_string(),
            r.delivered.to_string(),
            r.spoiled.to_string(),
            u8::from(r.closed).to_string(),
        ])
        .map_err(|e| Error::CsvRow {
            row: i + 1,
            message: e.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Maximum-likelihood negative binomial fit of demand counts. The mean is
/// the sample mean; the size parameter maximizes the profile likelihood.
/// Falls back to Poisson (size sentinel) when the sample shows no
/// overdispersion.
pub fn fit_negbinom_mle(samples: &[u32]) -> Result<DemandModel> {
    if samples.len() < 10 {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: 10,
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::DegenerateDemand);
    }
    let var = samples
        .iter()
        .map(|&x| (f64::from(x) - mean).powi(2))
        .sum::<f64>()
        / n;
    if var <= mean {
        return Ok(DemandModel::NegBinomFixed {
            mean,
            size: POISSON_SIZE_SENTINEL,
        });
    }

    // Frequency table keeps the likelihood evaluation cheap for long
    // histories with repeated counts.
    let mut freq: BTreeMap<u32, u64> = BTreeMap::new();
    for &x in samples {
        *freq.entry(x).or_insert(0) += 1;
    }
    let loglik = |k: f64| -> f64 {
        let mut ll = 0.0;
        for (&x, &c) in &freq {
            ll += c as f64 * ln_gamma(f64::from(x) + k);
        }
        ll -= n * ln_gamma(k);
        ll += n * k * (k / (k + mean)).ln();
        ll += n * mean * (mean / (k + mean)).ln();
        ll
    };

    // Golden-section search on ln k; the profile likelihood is unimodal.
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((1e-4f64).ln(), (1e8f64).ln());
    let mut m1 = hi - phi * (hi - lo);
    let mut m2 = lo + phi * (hi - lo);
    let mut f1 = loglik(m1.exp());
    let mut f2 = loglik(m2.exp());
    for _ in 0..200 {
        if f1 < f2 {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + phi * (hi - lo);
            f2 = loglik(m2.exp());
        } else {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - phi * (hi - lo);
            f1 = loglik(m1.exp());
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let size = ((lo + hi) / 2.0).exp();
    Ok(DemandModel::NegBinomFixed { mean, size })
}

/// Empirical shelf-life distribution from (shelf life, unit count)
/// observations. Mass observed beyond `max_life` is reallocated
/// proportionally over the supported range; with no observations at all a
/// flat prior over 1..=max_life is returned.
pub fn estimate_shelf_life(
    observations: &[(usize, u32)],
    max_life: usize,
) -> Result<ShelfLifeModel> {
    let mut counts = vec![0u64; max_life];
    for &(life, units) in observations {
        if life == 0 {
            continue;
        }
        if life <= max_life {
            counts[life - 1] += u64::from(units);
        }
        // Beyond max_life the mass is dropped, which is exactly the
        // proportional reallocation over the observed support.
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return ShelfLifeModel::new(vec![1.0 / max_life as f64; max_life]);
    }
    ShelfLifeModel::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Attribute daily spoilage totals to supply ages by replaying the
/// inventory under FIFO: deliveries enter the youngest bucket, demand
/// consumes the oldest buckets, and the day's spoilage total is assigned
/// oldest-first. Returns (shelf life, units) observations.
pub fn impute_spoilage_ages(history: &[HistoryRecord], max_life: usize) -> Vec<(usize, u32)> {
    let mut buckets = vec![0u32; max_life];
    let mut observations: BTreeMap<usize, u32> = BTreeMap::new();
    for record in history {
        buckets[0] += record.delivered;
        let mut remaining_demand = record.demand;
        for b in buckets.iter_mut().rev() {
            let take = remaining_demand.min(*b);
            *b -= take;
            remaining_demand -= take;
        }
        let mut remaining_spoil = record.spoiled;
        for age in (0..max_life).rev() {
            let take = remaining_spoil.min(buckets[age]);
            if take > 0 {
                *observations.entry(age + 1).or_insert(0) += take;
                buckets[age] -= take;
                remaining_spoil -= take;
            }
        }
        // Age by one period; units that would out-live the maximum shelf
        // life count as spoiling at the end of it.
        let dropped = buckets[max_life - 1];
        if dropped > 0 {
            *observations.entry(max_life).or_insert(0) += dropped;
        }
        for j in (1..max_life).rev() {
            buckets[j] = buckets[j - 1];
        }
        buckets[0] = 0;
    }
    observations.into_iter().collect()
}

/// Classify delivered/ordered ratios into supply states and estimate the
/// transition matrix (add-one smoothing) plus the Beta parameters of the
/// partial fraction by method of moments. Periods without an order carry
/// no supply observation.
pub fn estimate_supply_model(history: &[HistoryRecord]) -> SupplyModel {
    let mut states = Vec::new();
    let mut partial_fracs = Vec::new();
    for record in history {
        if record.ordered == 0 {
            continue;
        }
        let frac = f64::from(record.delivered) / f64::from(record.ordered);
        let state = if frac >= 1.0 - 1e-9 {
            0
        } else if frac <= 1e-9 {
            1
        } else {
            partial_fracs.push(frac);
            2
        };
        states.push(state);
    }

    let mut counts = [[0u64; 3]; 3];
    for w in states.windows(2) {
        counts[w[0]][w[1]] += 1;
    }
    let mut tpm = [[0.0f64; 3]; 3];
    for i in 0..3 {
        let row_total: u64 = counts[i].iter().sum();
        for j in 0..3 {
            tpm[i][j] = (counts[i][j] + 1) as f64 / (row_total + 3) as f64;
        }
    }

    let (alpha, beta) = fit_beta_moments(&partial_fracs).unwrap_or((2.0, 3.0));
    SupplyModel {
        tpm,
        alpha,
        beta,
        point_forecast_mode: false,
    }
}

/// Method-of-moments Beta fit; `None` when fewer than 5 observations or a
/// degenerate sample make the fit meaningless.
fn fit_beta_moments(fracs: &[f64]) -> Option<(f64, f64)> {
    if fracs.len() < 5 {
        return None;
    }
    let n = fracs.len() as f64;
    let mean = fracs.iter().sum::<f64>() / n;
    let var = fracs.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 || mean <= 0.0 || mean >= 1.0 {
        return None;
    }
    let common = mean * (1.0 - mean) / var - 1.0;
    if common <= 0.0 {
        return None;
    }
    Some((mean * common, (1.0 - mean) * common))
}

/// One rolling estimation window: train on [train_start, eval_start),
/// evaluate on [eval_start, eval_end).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub train_start: NaiveDate,
    pub eval_start: NaiveDate,
    pub eval_end: NaiveDate,
}

fn month_index(date: NaiveDate) -> i32 {
    date.year() * 12 + date.month0() as i32
}

fn month_start(index: i32) -> NaiveDate {
    let year = index.div_euclid(12);
    let month0 = index.rem_euclid(12) as u32;
    NaiveDate::from_ymd_opt(year, month0 + 1, 1).expect("valid month")
}

/// Consecutive monthly windows over the history span: train on
/// `train_months` calendar months, evaluate on the following
/// `eval_months`, sliding one month at a time.
pub fn rolling_window_plan(
    first: NaiveDate,
    last: NaiveDate,
    train_months: usize,
    eval_months: usize,
) -> Result<Vec<Window>> {
    if last < first {
        return Err(Error::InsufficientHistory("empty date span".into()));
    }
    let months_available = (month_index(last) - month_index(first) + 1) as usize;
    let needed = train_months + eval_months;
    if months_available < needed {
        return Err(Error::InsufficientHistory(format!(
            "{months_available} months of history, need at least {needed}"
        )));
    }
    let start = month_index(first);
    let count = months_available - needed + 1;
    Ok((0..count as i32)
        .map(|i| Window {
            train_start: month_start(start + i),
            eval_start: month_start(start + i + train_months as i32),
            eval_end: month_start(start + i + needed as i32),
        })
        .collect())
}

/// Models fitted on one training window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModels {
    pub window: Window,
    pub demand: DemandModel,
    pub supply: SupplyModel,
    pub shelf_life: ShelfLifeModel,
    /// Number of demand observations behind the fit.
    pub demand_samples: usize,
    pub warnings: Vec<String>,
}

/// Fit all three models on the training slice of one window. Demand uses
/// open days only.
pub fn fit_window_models(
    history: &[HistoryRecord],
    window: Window,
    max_life: usize,
) -> Result<FittedModels> {
    let train: Vec<&HistoryRecord> = history
        .iter()
        .filter(|r| r.date >= window.train_start && r.date < window.eval_start)
        .collect();
    if train.is_empty() {
        return Err(Error::InsufficientHistory(format!(
            "no records in training window starting {}",
            window.train_start
        )));
    }
    let mut warnings = Vec::new();

    let demand_samples: Vec<u32> = train
        .iter()
        .filter(|r| !r.closed)
        .map(|r| r.demand)
        .collect();
    let demand = fit_negbinom_mle(&demand_samples)?;

    let owned: Vec<HistoryRecord> = train.iter().map(|&r| r.clone()).collect();
    let ages = impute_spoilage_ages(&owned, max_life);
    if ages.iter().map(|&(_, c)| c).sum::<u32>() == 0 {
        warnings.push("no spoilage observed; flat shelf-life prior".into());
    }
    let shelf_life = estimate_shelf_life(&ages, max_life)?;

    let supply = estimate_supply_model(&owned);

    Ok(FittedModels {
        window,
        demand,
        supply,
        shelf_life,
        demand_samples: demand_samples.len(),
        warnings,
    })
}
