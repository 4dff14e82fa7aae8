use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use pinsched::{GroundTruthMode, Policy, ScenarioKind};
use pinsched_cli::{run_experiment, ExperimentError, ExperimentSpec, MetricsRow, OutputFormat};

/// Consolidation-scheduler experiment runner: replays arrival scenarios
/// against a 12-core host under round-robin, CPU-aware, resource-aware and
/// interference-aware pinning policies and reports normalized workload
/// performance and core-hours consumed.
#[derive(Debug, Parser)]
#[command(name = "pinsched", version, about)]
struct Cli {
    /// Workload profile document (TOML). Defaults to the bundled profile.
    #[arg(long)]
    profile: Option<PathBuf>,

    /// Scenario family: random, latency or dynamic.
    #[arg(long)]
    scenario: String,

    /// Subscription ratios to sweep, comma-separated (ignored by the
    /// dynamic scenario, which always places 24 instances).
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.0,1.5,2.0")]
    sr: Vec<String>,

    /// Activation batch size for the dynamic scenario: 6 or 12.
    #[arg(long, default_value_t = 12)]
    batch_size: usize,

    /// Policies to sweep, comma-separated: rrs, cas, ras, ias.
    #[arg(long, value_delimiter = ',', default_value = "rrs,cas,ras,ias")]
    policy: Vec<String>,

    /// Scenario seeds, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<String>,

    /// Multi-way ground-truth slowdown model: product, max or estimator.
    #[arg(long, default_value = "product")]
    ground_truth: String,

    /// Directory for metrics (and trace) files. Without it, results only
    /// print to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Metrics file format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,

    /// Also write one trace file per run.
    #[arg(long)]
    trace: bool,
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec, String> {
    let scenario: ScenarioKind = cli.scenario.parse()?;
    let mut spec = ExperimentSpec::new(scenario);
    spec.profile = cli.profile.clone();
    spec.subscription_ratios = cli
        .sr
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| format!("invalid subscription ratio {s:?}")))
        .collect::<Result<_, _>>()?;
    spec.batch_size = cli.batch_size;
    spec.policies = cli
        .policy
        .iter()
        .map(|s| s.parse::<Policy>())
        .collect::<Result<_, _>>()?;
    spec.seeds = cli
        .seeds
        .iter()
        .map(|s| s.parse::<u64>().map_err(|_| format!("invalid seed {s:?}")))
        .collect::<Result<_, _>>()?;
    spec.ground_truth = match cli.ground_truth.to_ascii_lowercase().as_str() {
        "product" => GroundTruthMode::PairwiseProduct,
        "max" => GroundTruthMode::PairwiseMax,
        "estimator" => GroundTruthMode::Estimator,
        other => return Err(format!("unknown ground truth {other:?} (expected product, max or estimator)")),
    };
    spec.output_dir = cli.out.clone();
    spec.format = cli.format.parse::<OutputFormat>()?;
    spec.write_traces = cli.trace;
    Ok(spec)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

fn print_table(rows: &[MetricsRow]) {
    println!(
        "{:<6} {:<8} {:>4} {:>5} {:>6} {:>9} {:>11} {:>10} {:>9}",
        "policy", "scenario", "sr", "batch", "seed", "perf", "core-hours", "perf/RRS", "ch/RRS"
    );
    for r in rows {
        println!(
            "{:<6} {:<8} {:>4} {:>5} {:>6} {:>9.4} {:>11.4} {:>10} {:>9}",
            r.policy.to_string(),
            r.scenario,
            r.sr,
            r.batch_size.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
            r.seed,
            r.mean_normalized_performance,
            r.total_core_hours,
            opt(r.performance_over_rrs),
            opt(r.core_hours_over_rrs),
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let spec = match build_spec(&cli) {
        Ok(spec) => spec,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    };
    match run_experiment(&spec) {
        Ok(rows) => {
            print_table(&rows);
            if let Some(dir) = &spec.output_dir {
                eprintln!("wrote {} rows to {}", rows.len(), dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(ExperimentError::Runtime { partial, policy, scenario, sr, seed, message }) => {
            eprintln!("runtime error in {policy} {scenario} sr={sr} seed={seed}: {message}");
            eprintln!("flushing {} completed rows", partial.len());
            pinsched_cli::flush_partial(&spec, &partial);
            print_table(&partial);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
