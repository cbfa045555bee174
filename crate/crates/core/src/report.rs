//! Result emission: metrics JSON and plot-ready CSV files. All numeric
//! CSV columns use 13 significant digits and a documented column order,
//! so identical runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::domain::{InfoMode, InfoScenario, Metrics};
use crate::error::{Error, Result};
use crate::simulator::{CaseStudyReport, SweepCell};

/// Full-precision float formatting for CSV output.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.12e}")
}

fn info_label(mode: InfoMode) -> &'static str {
    match mode {
        InfoMode::Distribution => "distribution",
        InfoMode::PointForecast => "point_forecast",
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Aggregates of one run as written to metrics.json.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsSummary {
    pub policy: String,
    pub periods: usize,
    pub seed: u64,
    pub avg_order_quantity: f64,
    pub avg_inventory: f64,
    pub avg_spoilage: f64,
    pub fill_rate: f64,
    pub avg_cost: f64,
}

impl MetricsSummary {
    pub fn new(policy: &str, seed: u64, metrics: &Metrics) -> Self {
        Self {
            policy: policy.to_string(),
            periods: metrics.periods(),
            seed,
            avg_order_quantity: metrics.avg_order_quantity,
            avg_inventory: metrics.avg_inventory,
            avg_spoilage: metrics.avg_spoilage,
            fill_rate: metrics.fill_rate,
            avg_cost: metrics.avg_cost,
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Internal(format!("json write: {e}")))?;
    writeln!(w)?;
    Ok(())
}

/// Column order: t, order, delivered, demand, sold, lost, spoiled,
/// ending_inventory, cost.
pub fn write_trajectory_csv(path: &Path, metrics: &Metrics) -> Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "t,order,delivered,demand,sold,lost,spoiled,ending_inventory,cost"
    )?;
    for o in &metrics.trajectory {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            o.period,
            o.order_placed,
            o.delivered,
            o.demand,
            o.sold,
            o.lost,
            o.spoiled,
            o.ending_inventory,
            fmt_full(o.cost)
        )?;
    }
    Ok(())
}

/// Column order: scenario, demand_info, shelf_life_info, supply_info,
/// avg_order_quantity, avg_inventory, avg_spoilage, fill_rate, avg_cost.
pub fn write_eviu_csv(path: &Path, grid: &[(InfoScenario, Metrics)]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "scenario,demand_info,shelf_life_info,supply_info,\
         avg_order_quantity,avg_inventory,avg_spoilage,fill_rate,avg_cost"
    )?;
    for (scenario, m) in grid {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            scenario.number(),
            info_label(scenario.demand),
            info_label(scenario.shelf_life),
            info_label(scenario.supply),
            fmt_full(m.avg_order_quantity),
            fmt_full(m.avg_inventory),
            fmt_full(m.avg_spoilage),
            fmt_full(m.fill_rate),
            fmt_full(m.avg_cost)
        )?;
    }
    Ok(())
}

/// Long format for plotting: sweep, value, scenario, metric, metric_value.
pub fn write_sensitivity_csv(path: &Path, cells: &[SweepCell]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "sweep,value,scenario,metric,metric_value")?;
    for cell in cells {
        let rows = [
            ("avg_order_quantity", cell.metrics.avg_order_quantity),
            ("avg_inventory", cell.metrics.avg_inventory),
            ("avg_spoilage", cell.metrics.avg_spoilage),
            ("fill_rate", cell.metrics.fill_rate),
            ("avg_cost", cell.metrics.avg_cost),
        ];
        for (metric, value) in rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                cell.sweep,
                cell.value,
                cell.scenario,
                metric,
                fmt_full(value)
            )?;
        }
    }
    Ok(())
}

/// Column order: date, demand, closed, then order/delivered/sold/lost/
/// spoiled/ending/cost per policy lane, then cost_diff (benchmark minus
/// lookahead).
pub fn write_case_csv(path: &Path, report: &CaseStudyReport) -> Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "date,demand,closed,\
         lookahead_order,lookahead_delivered,lookahead_sold,lookahead_lost,\
         lookahead_spoiled,lookahead_ending,lookahead_cost,\
         benchmark_order,benchmark_delivered,benchmark_sold,benchmark_lost,\
         benchmark_spoiled,benchmark_ending,benchmark_cost,cost_diff"
    )?;
    for p in &report.periods {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.date.format("%Y-%m-%d"),
            p.demand,
            u8::from(p.closed),
            p.lookahead.order_placed,
            p.lookahead.delivered,
            p.lookahead.sold,
            p.lookahead.lost,
            p.lookahead.spoiled,
            p.lookahead.ending_inventory,
            fmt_full(p.lookahead.cost),
            p.benchmark.order_placed,
            p.benchmark.delivered,
            p.benchmark.sold,
            p.benchmark.lost,
            p.benchmark.spoiled,
            p.benchmark.ending_inventory,
            fmt_full(p.benchmark.cost),
            fmt_full(p.benchmark.cost - p.lookahead.cost)
        )?;
    }
    Ok(())
}

/// Case-study aggregates, including the histogram-ready split of
/// per-period cost differences.
#[derive(Debug, Clone, Serialize)]
pub struct CaseSummary {
    pub periods: usize,
    pub lookahead_avg_cost: f64,
    pub benchmark_avg_cost: f64,
    pub relative_cost_change: f64,
    /// Periods where the benchmark was more expensive, with the average
    /// difference over them.
    pub benchmark_worse_periods: usize,
    pub benchmark_worse_avg_diff: f64,
    pub lookahead_worse_periods: usize,
    pub lookahead_worse_avg_diff: f64,
    pub warnings: Vec<String>,
}

impl CaseSummary {
    pub fn new(report: &CaseStudyReport) -> Self {
        let diffs = report.cost_differences();
        let pos: Vec<f64> = diffs.iter().copied().filter(|&d| d > 0.0).collect();
        let neg: Vec<f64> = diffs.iter().copied().filter(|&d| d < 0.0).collect();
        let avg = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        Self {
            periods: report.periods.len(),
            lookahead_avg_cost: report.lookahead_avg_cost,
            benchmark_avg_cost: report.benchmark_avg_cost,
            relative_cost_change: report.relative_cost_change,
            benchmark_worse_periods: pos.len(),
            benchmark_worse_avg_diff: avg(&pos),
            lookahead_worse_periods: neg.len(),
            lookahead_worse_avg_diff: avg(&neg),
            warnings: report.warnings.clone(),
        }
    }
}
