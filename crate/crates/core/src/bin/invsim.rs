//! Command-line front end: scenario simulation, the information-value
//! grid, sensitivity sweeps, rolling-window estimation, and the paired
//! case-study evaluation.
//!
//! Exit codes: 0 on success, 2 on invalid input (config, flags, CSV),
//! 1 on runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use invsim::config::ScenarioConfig;
use invsim::error::Error;
use invsim::estimation::{
    fit_window_models, read_history_csv, rolling_window_plan, write_history_csv, HistoryRecord,
};
use invsim::policies::PolicyKind;
use invsim::report;
use invsim::simulator::{
    evaluate_case_study, run_eviu_grid, run_sensitivity, run_simulation, synthesize_history,
    Sweep,
};

#[derive(Parser)]
#[command(
    name = "invsim",
    about = "Lost-sales perishable inventory simulation and policy optimization",
    version
)]
struct Cli {
    /// Worker threads for parallel path evaluation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Number of simulated periods.
    #[arg(short = 'T', long = "T", visible_alias = "periods", default_value_t = 5000)]
    periods: usize,
    /// Random seed (INVSIM_SEED overrides the default).
    #[arg(long, env = "INVSIM_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Quick mode: 500 periods and 200 sample paths unless given
    /// explicitly.
    #[arg(long, default_value_t = false)]
    quick: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy and write metrics.json plus trajectory.csv.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        policy: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the lookahead under all eight information scenarios (paired
    /// streams) and write eviu.csv.
    Eviu {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a sensitivity sweep (demand_variance, shelf_life_sets,
    /// supply_tpms, cost_asymmetry) and write sensitivity.csv.
    Sensitivity {
        sweep: String,
        /// Base scenario; the baseline when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Paired evaluation of lookahead vs retailer benchmark on a history
    /// CSV; writes case_eval.csv and case_summary.json.
    CaseEval {
        history: PathBuf,
        config: PathBuf,
        #[arg(long, env = "INVSIM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit demand, shelf-life, and supply models on rolling windows and
    /// write one JSON per window.
    Estimate {
        history: PathBuf,
        #[arg(long, default_value_t = 6)]
        train_months: usize,
        #[arg(long, default_value_t = 1)]
        eval_months: usize,
        #[arg(long, default_value_t = 6)]
        max_shelf_life: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a synthetic history CSV from a scenario (fixture helper).
    SynthHistory {
        config: PathBuf,
        #[arg(long, default_value = "2019-01-01")]
        start: String,
        #[arg(long, default_value_t = 420)]
        days: usize,
        #[arg(long, env = "INVSIM_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "history.csv")]
        out: PathBuf,
    },
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Error> {
    if !path.exists() {
        return Err(Error::invalid(
            "config",
            format!("file not found: {}", path.display()),
        ));
    }
    ScenarioConfig::from_path(path).map_err(|e| match e {
        Error::Io(io) => Error::ConfigParse(io.to_string()),
        other => other,
    })
}

fn load_history(path: &Path) -> Result<Vec<HistoryRecord>, Error> {
    if !path.exists() {
        return Err(Error::CsvRow {
            row: 0,
            message: format!("file not found: {}", path.display()),
        });
    }
    read_history_csv(path)
}

fn check_periods(periods: usize) -> Result<(), Error> {
    if periods == 0 {
        return Err(Error::invalid("periods", "must be >= 1"));
    }
    Ok(())
}

fn apply_quick(run: &RunArgs, config: &mut ScenarioConfig) -> usize {
    let mut periods = run.periods;
    if run.quick {
        if periods == 5000 {
            periods = 500;
        }
        config.lookahead.paths = config.lookahead.paths.min(200);
    }
    periods
}

fn cmd_simulate(config_path: &Path, policy: &str, run: &RunArgs) -> Result<(), Error> {
    let kind: PolicyKind = policy.parse()?;
    let mut config = load_config(config_path)?;
    let periods = apply_quick(run, &mut config);
    check_periods(periods)?;
    let metrics = run_simulation(&config, kind, periods, run.seed)?;
    let summary = report::MetricsSummary::new(policy, run.seed, &metrics);
    report::write_json(&run.out.join("metrics.json"), &summary)?;
    report::write_trajectory_csv(&run.out.join("trajectory.csv"), &metrics)?;
    println!(
        "policy {policy}: {} periods, avg order {:.2}, avg inventory {:.2}, \
         avg spoilage {:.2}, fill rate {:.4}, avg cost {:.4}",
        metrics.periods(),
        metrics.avg_order_quantity,
        metrics.avg_inventory,
        metrics.avg_spoilage,
        metrics.fill_rate,
        metrics.avg_cost
    );
    println!("wrote {}", run.out.join("metrics.json").display());
    Ok(())
}

fn cmd_eviu(config_path: &Path, run: &RunArgs) -> Result<(), Error> {
    let mut config = load_config(config_path)?;
    let periods = apply_quick(run, &mut config);
    check_periods(periods)?;
    let grid = run_eviu_grid(&config, periods, run.seed)?;
    report::write_eviu_csv(&run.out.join("eviu.csv"), &grid)?;
    for (scenario, m) in &grid {
        println!(
            "scenario {}: avg cost {:.4}, fill rate {:.4}",
            scenario.number(),
            m.avg_cost,
            m.fill_rate
        );
    }
    println!("wrote {}", run.out.join("eviu.csv").display());
    Ok(())
}

fn cmd_sensitivity(sweep: &str, config_path: Option<&Path>, run: &RunArgs) -> Result<(), Error> {
    let sweep: Sweep = sweep.parse()?;
    let mut config = match config_path {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::baseline(),
    };
    let periods = apply_quick(run, &mut config);
    check_periods(periods)?;
    let cells = run_sensitivity(sweep, &config, periods, run.seed)?;
    report::write_sensitivity_csv(&run.out.join("sensitivity.csv"), &cells)?;
    for cell in &cells {
        println!(
            "{} {} scenario {}: avg cost {:.4}",
            cell.sweep, cell.value, cell.scenario, cell.metrics.avg_cost
        );
    }
    println!("wrote {}", run.out.join("sensitivity.csv").display());
    Ok(())
}

fn cmd_case_eval(
    history_path: &Path,
    config_path: &Path,
    seed: u64,
    out: &Path,
) -> Result<(), Error> {
    let config = load_config(config_path)?;
    let history = load_history(history_path)?;
    let report_data = evaluate_case_study(&history, &config, seed)?;
    report::write_case_csv(&out.join("case_eval.csv"), &report_data)?;
    report::write_json(
        &out.join("case_summary.json"),
        &report::CaseSummary::new(&report_data),
    )?;
    for w in &report_data.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} periods: lookahead avg cost {:.4}, benchmark avg cost {:.4}, \
         relative change {:+.2}%",
        report_data.periods.len(),
        report_data.lookahead_avg_cost,
        report_data.benchmark_avg_cost,
        100.0 * report_data.relative_cost_change
    );
    println!("wrote {}", out.join("case_eval.csv").display());
    Ok(())
}

fn cmd_estimate(
    history_path: &Path,
    train_months: usize,
    eval_months: usize,
    max_shelf_life: usize,
    out: &Path,
) -> Result<(), Error> {
    let history = load_history(history_path)?;
    let first = history.iter().map(|r| r.date).min().ok_or_else(|| {
        Error::InsufficientHistory("no records".into())
    })?;
    let last = history.iter().map(|r| r.date).max().unwrap();
    let windows = rolling_window_plan(first, last, train_months, eval_months)?;
    for (i, &window) in windows.iter().enumerate() {
        let fitted = fit_window_models(&history, window, max_shelf_life)?;
        for w in &fitted.warnings {
            eprintln!("warning (window {i}): {w}");
        }
        let path = out.join(format!("models_{}.json", window.eval_start.format("%Y-%m")));
        report::write_json(&path, &fitted)?;
        println!("window {i}: eval {} -> {}", window.eval_start, path.display());
    }
    Ok(())
}

fn cmd_synth_history(
    config_path: &Path,
    start: &str,
    days: usize,
    seed: u64,
    out: &Path,
) -> Result<(), Error> {
    let config = load_config(config_path)?;
    let start = NaiveDate::parse_from_str(start, "%Y-%m-%d")
        .map_err(|e| Error::invalid("start", format!("bad date {start:?}: {e}")))?;
    if days == 0 {
        return Err(Error::invalid("days", "must be >= 1"));
    }
    let records = synthesize_history(&config, start, days, seed)?;
    write_history_csv(out, &records)?;
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not size thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match &cli.command {
        Command::Simulate {
            config,
            policy,
            run,
        } => cmd_simulate(config, policy, run),
        Command::Eviu { config, run } => cmd_eviu(config, run),
        Command::Sensitivity { sweep, config, run } => {
            cmd_sensitivity(sweep, config.as_deref(), run)
        }
        Command::CaseEval {
            history,
            config,
            seed,
            out,
        } => cmd_case_eval(history, config, *seed, out),
        Command::Estimate {
            history,
            train_months,
            eval_months,
            max_shelf_life,
            out,
        } => cmd_estimate(history, *train_months, *eval_months, *max_shelf_life, out),
        Command::SynthHistory {
            config,
            start,
            days,
            seed,
            out,
        } => cmd_synth_history(config, start, *days, *seed, out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
