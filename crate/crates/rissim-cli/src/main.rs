//! Command-line front end: training, evaluation, sweeps, the BCD bench and
//! report rendering on top of the rissim harness.

use clap::{Args, Parser, Subcommand};
use rissim::baselines::PolicyKind;
use rissim::harness::{
    bcd_convergence_report, emit_plot_scripts, positioning_study, run_experiment, sweep_axis,
    train_policy, write_bcd_bench_csv, write_learning_curve_csv, write_retention_csv,
    write_summary_csv, Aggregate, ExperimentConfig, HarnessError, SweepAxis, TrainedPolicy,
};
use rissim::agent::PolicyParams;
use rissim::parallel::{configure_threads_from_env, Parallelism};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rissim",
    about = "RIS-assisted vehicular scheduling simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Experiment configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
    /// Policy override: proposed|gs-bcd|rs-bcd|drl-rps.
    #[arg(long, global = true)]
    policy: Option<String>,
    /// Evaluation run count override.
    #[arg(long, global = true)]
    runs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the scheduling policy and write a checkpoint plus the
    /// learning curve.
    Train {
        #[command(flatten)]
        common: CommonOpts,
        /// Number of PPO updates (overrides the config).
        #[arg(long)]
        updates: Option<usize>,
    },
    /// Evaluate a policy over seeded episodes and write runs/summary CSVs.
    Eval {
        #[command(flatten)]
        common: CommonOpts,
        /// Trained-policy checkpoint for proposed/drl-rps evaluation.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Sweep one experiment axis and write summary.csv (or retention.csv
    /// for the positioning axis).
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Axis: M|b|arrival|placement|delta.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values (axis default grid when omitted).
        #[arg(long)]
        values: Option<String>,
        /// Checkpoint for the proposed scheme (trained at the base config
        /// when omitted and needed).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Checkpoint for the random-phase DRL scheme.
        #[arg(long)]
        checkpoint_rps: Option<PathBuf>,
    },
    /// Convergence/robustness report for the phase-shift tuner.
    BcdBench {
        #[command(flatten)]
        common: CommonOpts,
        /// Random instances per (M, b, C) cell.
        #[arg(long, default_value_t = 20)]
        instances: usize,
    },
    /// Pretty-print summary.csv from an output directory and refresh the
    /// plot scripts.
    Report {
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn load_config(common: &CommonOpts) -> Result<ExperimentConfig, HarnessError> {
    let (mut cfg, _) = ExperimentConfig::from_source(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.train.seed = seed;
    }
    if let Some(policy) = &common.policy {
        cfg.policy = policy
            .parse()
            .map_err(|e: String| HarnessError::ConfigErrors(vec![e]))?;
    }
    if let Some(runs) = common.runs {
        cfg.n_test_runs = runs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(common: &CommonOpts, updates: Option<usize>) -> Result<(), HarnessError> {
    let mut cfg = load_config(common)?;
    if let Some(u) = updates {
        cfg.n_updates = u;
    }
    if !cfg.policy.needs_training() {
        return Err(HarnessError::ConfigErrors(vec![format!(
            "policy '{}' has nothing to train; pick proposed or drl-rps",
            cfg.policy
        )]));
    }
    std::fs::create_dir_all(&common.out)?;
    println!(
        "training {} for {} updates (seed {})...",
        cfg.policy, cfg.n_updates, cfg.seed
    );
    let trained = train_policy(&cfg, cfg.policy, Parallelism::default())?;
    let params = trained.params.expect("training returns parameters");
    let ckpt = common.out.join("checkpoint.json");
    params.save_to_path(&ckpt)?;
    write_learning_curve_csv(&common.out.join("learning_curve.csv"), &trained.curve)?;
    emit_plot_scripts(&common.out)?;
    if let Some(last) = trained.curve.last() {
        println!(
            "done: final mean return {:.4}, min-avg-bitrate {:.4} bps/Hz",
            last.mean_return, last.min_avg_bitrate
        );
    }
    println!("checkpoint: {}", ckpt.display());
    Ok(())
}

fn cmd_eval(common: &CommonOpts, checkpoint: Option<&Path>) -> Result<(), HarnessError> {
    let mut cfg = load_config(common)?;
    if let Some(path) = checkpoint {
        cfg.checkpoint_path = Some(path.to_path_buf());
    }
    let out = run_experiment(&cfg, &common.out, Parallelism::default())?;
    println!(
        "{}: mean min-avg-bitrate {:.4} +- {:.4} bps/Hz, mean Jain {:.4} over {} runs ({} invalid)",
        cfg.policy,
        out.aggregate.mean_min_avg_bitrate,
        out.aggregate.std,
        out.aggregate.mean_jain,
        out.aggregate.runs,
        out.invalid_runs
    );
    println!("results written to {}", common.out.display());
    Ok(())
}

fn parse_values(axis: SweepAxis, raw: Option<&str>) -> Result<Vec<f64>, HarnessError> {
    match raw {
        None => Ok(axis.default_values()),
        Some(text) => text
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| HarnessError::ConfigErrors(vec![format!("bad value '{v}'")]))
            })
            .collect(),
    }
}

fn obtain_or_train(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    checkpoint: Option<&Path>,
    out: &Path,
) -> Result<PolicyParams, HarnessError> {
    if let Some(path) = checkpoint {
        return Ok(PolicyParams::load_from_path(path)?);
    }
    println!(
        "no checkpoint for {kind}; training at the base config ({} updates)...",
        cfg.n_updates
    );
    let TrainedPolicy { params, curve } = train_policy(cfg, kind, Parallelism::default())?;
    let params = params.expect("training returns parameters");
    let ckpt = out.join(format!("checkpoint_{kind}.json"));
    params.save_to_path(&ckpt)?;
    write_learning_curve_csv(&out.join(format!("learning_curve_{kind}.csv")), &curve)?;
    println!("saved {}", ckpt.display());
    Ok(params)
}

fn cmd_sweep(
    common: &CommonOpts,
    axis_raw: &str,
    values_raw: Option<&str>,
    checkpoint: Option<&Path>,
    checkpoint_rps: Option<&Path>,
) -> Result<(), HarnessError> {
    let cfg = load_config(common)?;
    let axis: SweepAxis = axis_raw
        .parse()
        .map_err(|e: String| HarnessError::ConfigErrors(vec![e]))?;
    let values = parse_values(axis, values_raw)?;
    std::fs::create_dir_all(&common.out)?;
    let runs = cfg.n_test_runs;

    match axis {
        SweepAxis::PositioningError => {
            let x_values = vec![20.0, 30.0, 40.0, 50.0];
            let rows = positioning_study(&cfg, &values, &x_values)?;
            write_retention_csv(&common.out.join("retention.csv"), &rows)?;
            emit_plot_scripts(&common.out)?;
            println!(
                "positioning study: {} cells -> {}",
                rows.len(),
                common.out.join("retention.csv").display()
            );
        }
        SweepAxis::Placement => {
            let policy = common
                .policy
                .as_deref()
                .map(|p| p.parse::<PolicyKind>())
                .transpose()
                .map_err(|e| HarnessError::ConfigErrors(vec![e]))?
                .unwrap_or(PolicyKind::GreedyBcd);
            let mut trained = Vec::new();
            if policy.needs_training() {
                let params = obtain_or_train(&cfg, policy, checkpoint, &common.out)?;
                trained.push((policy, params));
            }
            let rows = sweep_axis(
                &cfg,
                axis,
                &values,
                &[policy],
                &trained,
                runs,
                Parallelism::default(),
            )?;
            write_summary_csv(&common.out.join("summary.csv"), &rows)?;
            emit_plot_scripts(&common.out)?;
            print_aggregates(&rows);
        }
        _ => {
            let policies = [
                PolicyKind::ProposedDrlBcd,
                PolicyKind::GreedyBcd,
                PolicyKind::RandomBcd,
                PolicyKind::DrlRandomPhase,
            ];
            let mut trained = Vec::new();
            trained.push((
                PolicyKind::ProposedDrlBcd,
                obtain_or_train(&cfg, PolicyKind::ProposedDrlBcd, checkpoint, &common.out)?,
            ));
            trained.push((
                PolicyKind::DrlRandomPhase,
                obtain_or_train(&cfg, PolicyKind::DrlRandomPhase, checkpoint_rps, &common.out)?,
            ));
            let rows = sweep_axis(
                &cfg,
                axis,
                &values,
                &policies,
                &trained,
                runs,
                Parallelism::default(),
            )?;
            write_summary_csv(&common.out.join("summary.csv"), &rows)?;
            emit_plot_scripts(&common.out)?;
            print_aggregates(&rows);
        }
    }
    Ok(())
}

fn cmd_bcd_bench(common: &CommonOpts, instances: usize) -> Result<(), HarnessError> {
    let cfg = load_config(common)?;
    std::fs::create_dir_all(&common.out)?;
    let rows = bcd_convergence_report(&cfg, instances, cfg.seed)?;
    write_bcd_bench_csv(&common.out.join("bcd_bench.csv"), &rows)?;
    println!("{:>4} {:>2} {:>2} {:>12} {:>20} {:>16}", "M", "b", "C", "mean sweeps", "first-sweep frac", "mean time (us)");
    for r in &rows {
        println!(
            "{:>4} {:>2} {:>2} {:>12.2} {:>20.4} {:>16.1}",
            r.m, r.b, r.c_users, r.mean_sweeps, r.first_sweep_fraction, r.mean_runtime_us
        );
    }
    println!("written to {}", common.out.join("bcd_bench.csv").display());
    Ok(())
}

fn print_aggregates(rows: &[Aggregate]) {
    println!(
        "{:>10} {:>10} {:>22} {:>10} {:>10} {:>6}",
        "axis", "policy", "mean min-avg (bps/Hz)", "std", "jain", "runs"
    );
    for r in rows {
        println!(
            "{:>10} {:>10} {:>22.4} {:>10.4} {:>10.4} {:>6}",
            r.axis_value, r.policy, r.mean_min_avg_bitrate, r.std, r.mean_jain, r.runs
        );
    }
}

fn cmd_report(common: &CommonOpts) -> Result<(), HarnessError> {
    let summary = common.out.join("summary.csv");
    if summary.exists() {
        let mut rdr = csv::ReaderBuilder::new().from_path(&summary)?;
        let mut rows: Vec<Aggregate> = Vec::new();
        for rec in rdr.deserialize() {
            let row: SummaryRow = rec?;
            rows.push(Aggregate {
                axis_value: row.axis_value,
                policy: row.policy,
                mean_min_avg_bitrate: row.mean_min_avg_bitrate,
                std: row.std,
                mean_jain: row.mean_jain,
                runs: row.runs,
            });
        }
        print_aggregates(&rows);
    } else {
        println!("no summary.csv in {}", common.out.display());
    }
    emit_plot_scripts(&common.out)?;
    println!("plot scripts refreshed in {}", common.out.display());
    Ok(())
}

#[derive(serde::Deserialize)]
struct SummaryRow {
    axis_value: f64,
    policy: String,
    mean_min_avg_bitrate: f64,
    std: f64,
    mean_jain: f64,
    runs: usize,
}

fn main() -> ExitCode {
    configure_threads_from_env();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { common, updates } => cmd_train(common, *updates),
        Command::Eval { common, checkpoint } => cmd_eval(common, checkpoint.as_deref()),
        Command::Sweep {
            common,
            axis,
            values,
            checkpoint,
            checkpoint_rps,
        } => cmd_sweep(
            common,
            axis,
            values.as_deref(),
            checkpoint.as_deref(),
            checkpoint_rps.as_deref(),
        ),
        Command::BcdBench { common, instances } => cmd_bcd_bench(common, *instances),
        Command::Report { common } => cmd_report(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
