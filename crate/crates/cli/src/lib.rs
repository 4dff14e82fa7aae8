//! Experiment runner behind the `pinsched` binary: expands a spec into a
//! (policy × subscription-ratio × seed) sweep, feeds every policy the
//! identical arrival schedule, and writes one metrics row per run plus
//! optional trace files.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use pinsched::scenarios::{ScenarioConfig, ScenarioError};
use pinsched::sim::{export_trace, run, SimConfig, SimError};
use pinsched::{
    compute_metrics, generate, GroundTruthMode, Policy, RunMetrics, ScenarioKind, WorkloadProfile,
};

/// Output encoding for the metrics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// One full experiment request.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Profile document path; `None` uses the bundled default profile.
    pub profile: Option<PathBuf>,
    pub scenario: ScenarioKind,
    pub subscription_ratios: Vec<f64>,
    /// Activation batch size (dynamic scenario only).
    pub batch_size: usize,
    pub policies: Vec<Policy>,
    pub seeds: Vec<u64>,
    pub ground_truth: GroundTruthMode,
    pub output_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub write_traces: bool,
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioKind) -> Self {
        ExperimentSpec {
            profile: None,
            scenario,
            subscription_ratios: vec![0.5, 1.0, 1.5, 2.0],
            batch_size: 12,
            policies: Policy::ALL.to_vec(),
            seeds: vec![0],
            ground_truth: GroundTruthMode::PairwiseProduct,
            output_dir: None,
            format: OutputFormat::Csv,
            write_traces: false,
        }
    }
}

/// One metrics row of the sweep output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub policy: Policy,
    pub scenario: String,
    pub sr: f64,
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub mean_normalized_performance: f64,
    pub total_core_hours: f64,
    pub batch_mean_performance: Option<f64>,
    pub latency_mean_performance: Option<f64>,
    pub streaming_mean_performance: Option<f64>,
    /// Ratio against the RRS run of the same cell; present when RRS is in
    /// the policy list.
    pub performance_over_rrs: Option<f64>,
    pub core_hours_over_rrs: Option<f64>,
}

pub const CSV_HEADER: &str = "policy,scenario,sr,batch_size,seed,mean_normalized_performance,total_core_hours,batch_mean_performance,latency_mean_performance,streaming_mean_performance,performance_over_rrs,core_hours_over_rrs";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Config(String),
    /// A simulation failed mid-sweep; rows completed so far are preserved.
    #[error("runtime failure in {policy} {scenario} sr={sr} seed={seed}: {message}")]
    Runtime {
        policy: Policy,
        scenario: ScenarioKind,
        sr: f64,
        seed: u64,
        message: String,
        partial: Vec<MetricsRow>,
    },
    #[error("failed to write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

/// Renders rows as CSV with a fixed header; floats in shortest round-trip
/// form so re-parsing recovers the exact values.
pub fn rows_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:?},{},{},{:?},{:?},{},{},{},{},{}\n",
            r.policy,
            r.scenario,
            r.sr,
            r.batch_size.map(|b| b.to_string()).unwrap_or_default(),
            r.seed,
            r.mean_normalized_performance,
            r.total_core_hours,
            fmt_opt(r.batch_mean_performance),
            fmt_opt(r.latency_mean_performance),
            fmt_opt(r.streaming_mean_performance),
            fmt_opt(r.performance_over_rrs),
            fmt_opt(r.core_hours_over_rrs),
        ));
    }
    out
}

pub fn rows_to_json(rows: &[MetricsRow]) -> String {
    let mut text = serde_json::to_string_pretty(rows).expect("rows serialize");
    text.push('\n');
    text
}

fn kind_mean(metrics: &RunMetrics, kind: &str) -> Option<f64> {
    metrics.per_kind.get(kind).map(|g| g.mean_normalized_performance)
}

struct Cell {
    policy: Policy,
    sr: f64,
    seed: u64,
}

/// Runs the sweep described by `spec`.
///
/// Every (sr, seed) cell generates one arrival schedule shared by all
/// policies. Rows come back ordered by (policy, sr, seed); relative-to-RRS
/// columns are filled when RRS is part of the sweep. Output files are
/// written to the spec's output directory, overwriting previous runs
/// byte-for-byte identically for identical specs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<MetricsRow>, ExperimentError> {
    if spec.policies.is_empty() {
        return Err(ExperimentError::Config("policy list is empty".into()));
    }
    if spec.seeds.is_empty() {
        return Err(ExperimentError::Config("seed list is empty".into()));
    }
    if spec.subscription_ratios.is_empty() {
        return Err(ExperimentError::Config("subscription ratio list is empty".into()));
    }
    let profile = match &spec.profile {
        Some(path) => WorkloadProfile::from_path(path)
            .map_err(|e| ExperimentError::Config(format!("profile {}: {e}", path.display())))?,
        None => WorkloadProfile::default_fixture(),
    };

    let mut policies = spec.policies.clone();
    policies.sort();
    policies.dedup();
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    // the dynamic scenario has a fixed population; a single pseudo-SR cell
    let mut ratios: Vec<f64> = match spec.scenario {
        ScenarioKind::Dynamic => vec![pinsched::scenarios::DYNAMIC_INSTANCES as f64 / 12.0],
        _ => spec.subscription_ratios.clone(),
    };
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite subscription ratios"));
    ratios.dedup();

    let mut cells = Vec::new();
    for &policy in &policies {
        for &sr in &ratios {
            for &seed in &seeds {
                cells.push(Cell { policy, sr, seed });
            }
        }
    }

    let mut rows: Vec<MetricsRow> = Vec::with_capacity(cells.len());
    let mut traces: Vec<(String, String)> = Vec::new();
    for cell in &cells {
        let mut scenario_cfg = ScenarioConfig::new(spec.scenario);
        scenario_cfg.seed = cell.seed;
        scenario_cfg.subscription_ratio = cell.sr;
        scenario_cfg.dynamic_batch_size = spec.batch_size;

        let mut config = SimConfig::new(cell.policy);
        config.seed = cell.seed;
        config.ground_truth = spec.ground_truth;

        let fail = |message: String, partial: &[MetricsRow]| ExperimentError::Runtime {
            policy: cell.policy,
            scenario: spec.scenario,
            sr: cell.sr,
            seed: cell.seed,
            message,
            partial: partial.to_vec(),
        };

        let schedule = generate(&scenario_cfg, &profile, config.host.core_count())
            .map_err(|e: ScenarioError| ExperimentError::Config(e.to_string()))?;
        let trace = match run(&config, &profile, &schedule) {
            Ok(trace) => trace,
            Err(e @ SimError::Placement { .. }) => return Err(fail(e.to_string(), &rows)),
            Err(e) => return Err(ExperimentError::Config(e.to_string())),
        };
        let metrics = compute_metrics(&trace);
        rows.push(MetricsRow {
            policy: cell.policy,
            scenario: spec.scenario.to_string(),
            sr: cell.sr,
            batch_size: (spec.scenario == ScenarioKind::Dynamic).then_some(spec.batch_size),
            seed: cell.seed,
            mean_normalized_performance: metrics.mean_normalized_performance,
            total_core_hours: metrics.total_core_hours,
            batch_mean_performance: kind_mean(&metrics, "batch"),
            latency_mean_performance: kind_mean(&metrics, "latency_critical"),
            streaming_mean_performance: kind_mean(&metrics, "streaming"),
            performance_over_rrs: None,
            core_hours_over_rrs: None,
        });
        if spec.write_traces {
            let level = match spec.scenario {
                ScenarioKind::Dynamic => format!("b{}", spec.batch_size),
                _ => format!("sr{:?}", cell.sr),
            };
            let name = format!(
                "trace-{}-{}-{}-seed{}.log",
                cell.policy, spec.scenario, level, cell.seed
            );
            traces.push((name, export_trace(&trace, &metrics)));
        }
    }

    if policies.contains(&Policy::Rrs) {
        let baseline: Vec<(f64, u64, f64, f64)> = rows
            .iter()
            .filter(|r| r.policy == Policy::Rrs)
            .map(|r| (r.sr, r.seed, r.mean_normalized_performance, r.total_core_hours))
            .collect();
        for row in &mut rows {
            if let Some(&(_, _, perf, ch)) =
                baseline.iter().find(|(sr, seed, _, _)| *sr == row.sr && *seed == row.seed)
            {
                row.performance_over_rrs = Some(row.mean_normalized_performance / perf);
                row.core_hours_over_rrs = Some(row.total_core_hours / ch);
            }
        }
    }

    if let Some(dir) = &spec.output_dir {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Output {
            path: dir.display().to_string(),
            source,
        })?;
        let (name, payload) = match spec.format {
            OutputFormat::Csv => ("metrics.csv", rows_to_csv(&rows)),
            OutputFormat::Json => ("metrics.json", rows_to_json(&rows)),
        };
        let path = dir.join(name);
        fs::write(&path, payload).map_err(|source| ExperimentError::Output {
            path: path.display().to_string(),
            source,
        })?;
        for (name, payload) in &traces {
            let path = dir.join(name);
            fs::write(&path, payload).map_err(|source| ExperimentError::Output {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    Ok(rows)
}

/// Writes whatever rows a failed sweep produced, so partial results survive
/// a runtime error.
pub fn flush_partial(spec: &ExperimentSpec, rows: &[MetricsRow]) {
    if let Some(dir) = &spec.output_dir {
        if fs::create_dir_all(dir).is_ok() {
            let (name, payload) = match spec.format {
                OutputFormat::Csv => ("metrics.csv", rows_to_csv(rows)),
                OutputFormat::Json => ("metrics.json", rows_to_json(rows)),
            };
            let _ = fs::write(dir.join(name), payload);
        }
    }
}
