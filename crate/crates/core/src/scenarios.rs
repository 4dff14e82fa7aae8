//! Scenario generators and run metrics.
//!
//! Three experiment families: a random mix of all class kinds, a
//! latency-critical-heavy mix, and a dynamic scenario where a fixed
//! population becomes active in consecutive batches. Generators are pure
//! functions of their seed, so every policy can be fed the identical arrival
//! schedule.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::{Phase, ProfileError, WorkloadKind, WorkloadProfile, validate_phases};
use crate::sim::{account_core_hours, ArrivalSchedule, ArrivalSpec, InstanceState, RunTrace, TraceEventKind};

/// Instance population of the dynamic scenario.
pub const DYNAMIC_INSTANCES: usize = 24;
/// Default duration of one activation batch in the dynamic scenario.
pub const DEFAULT_ACTIVATION_WINDOW: f64 = 600.0;
/// Default service lifetime past the last arrival in open-ended scenarios.
pub const DEFAULT_SERVICE_WINDOW: f64 = 900.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("profile has no classes to draw from")]
    NoClasses,
    #[error("no {0} classes available for the requested mix")]
    MissingKind(WorkloadKind),
    #[error("invalid scenario parameter {name}: {value}")]
    BadParam { name: &'static str, value: f64 },
    #[error("dynamic batch size must be 6 or 12, got {0}")]
    BadBatchSize(usize),
    #[error("subscription ratio {sr} yields no instances on {cores} cores")]
    EmptyScenario { sr: f64, cores: usize },
    #[error("scenario document references unknown class {0:?}")]
    UnknownClassName(String),
    #[error("failed to parse scenario document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize scenario document: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Experiment family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Random,
    LatencyHeavy,
    Dynamic,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ScenarioKind::Random => "random",
            ScenarioKind::LatencyHeavy => "latency",
            ScenarioKind::Dynamic => "dynamic",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(ScenarioKind::Random),
            "latency" | "latency_heavy" | "latency-heavy" => Ok(ScenarioKind::LatencyHeavy),
            "dynamic" => Ok(ScenarioKind::Dynamic),
            other => Err(format!("unknown scenario {other:?} (expected random, latency or dynamic)")),
        }
    }
}

/// Per-kind draw weights for the latency-heavy scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixWeights {
    pub latency: f64,
    pub batch: f64,
    pub streaming: f64,
}

impl Default for MixWeights {
    fn default() -> Self {
        MixWeights { latency: 0.70, batch: 0.15, streaming: 0.15 }
    }
}

impl MixWeights {
    fn validate(&self) -> Result<(), ScenarioError> {
        for (name, v) in
            [("latency", self.latency), ("batch", self.batch), ("streaming", self.streaming)]
        {
            if !v.is_finite() || v < 0.0 {
                return Err(ScenarioError::BadParam { name, value: v });
            }
        }
        if self.latency + self.batch + self.streaming <= 0.0 {
            return Err(ScenarioError::BadParam { name: "mix", value: 0.0 });
        }
        Ok(())
    }
}

/// Everything a generator needs besides the profile and the host size.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub subscription_ratio: f64,
    pub seed: u64,
    pub mix: MixWeights,
    pub dynamic_batch_size: usize,
    pub activation_window: f64,
    pub inter_arrival: f64,
    pub service_window: f64,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        ScenarioConfig {
            kind,
            subscription_ratio: 1.0,
            seed: 0,
            mix: MixWeights::default(),
            dynamic_batch_size: 12,
            activation_window: DEFAULT_ACTIVATION_WINDOW,
            inter_arrival: crate::sim::DEFAULT_INTER_ARRIVAL,
            service_window: DEFAULT_SERVICE_WINDOW,
        }
    }

    /// Instances generated on a host with `core_count` cores.
    pub fn total_instances(&self, core_count: usize) -> usize {
        match self.kind {
            ScenarioKind::Dynamic => DYNAMIC_INSTANCES,
            _ => (self.subscription_ratio * core_count as f64).round() as usize,
        }
    }
}

/// Dispatches to the kind-specific generator.
pub fn generate(
    config: &ScenarioConfig,
    profile: &WorkloadProfile,
    core_count: usize,
) -> Result<ArrivalSchedule, ScenarioError> {
    match config.kind {
        ScenarioKind::Random => generate_random(config, profile, core_count),
        ScenarioKind::LatencyHeavy => generate_latency_heavy(config, profile, core_count),
        ScenarioKind::Dynamic => generate_dynamic(config, profile),
    }
}

fn check_common(
    config: &ScenarioConfig,
    profile: &WorkloadProfile,
    core_count: usize,
) -> Result<usize, ScenarioError> {
    if profile.is_empty() {
        return Err(ScenarioError::NoClasses);
    }
    if !config.subscription_ratio.is_finite() || config.subscription_ratio <= 0.0 {
        return Err(ScenarioError::BadParam {
            name: "subscription_ratio",
            value: config.subscription_ratio,
        });
    }
    if !config.inter_arrival.is_finite() || config.inter_arrival < 0.0 {
        return Err(ScenarioError::BadParam {
            name: "inter_arrival",
            value: config.inter_arrival,
        });
    }
    let n = config.total_instances(core_count);
    if n == 0 {
        return Err(ScenarioError::EmptyScenario {
            sr: config.subscription_ratio,
            cores: core_count,
        });
    }
    Ok(n)
}

fn schedule_from_classes(
    classes: Vec<usize>,
    inter_arrival: f64,
    service_window: f64,
) -> ArrivalSchedule {
    let last_arrival = inter_arrival * (classes.len().saturating_sub(1)) as f64;
    ArrivalSchedule {
        arrivals: classes
            .into_iter()
            .enumerate()
            .map(|(i, class_id)| ArrivalSpec {
                class_id,
                arrival_time: i as f64 * inter_arrival,
                phases: None,
            })
            .collect(),
        horizon: Some(last_arrival + service_window),
    }
}

/// Random scenario: round(SR × cores) instances drawn uniformly over all
/// classes, one arrival per inter-arrival interval.
pub fn generate_random(
    config: &ScenarioConfig,
    profile: &WorkloadProfile,
    core_count: usize,
) -> Result<ArrivalSchedule, ScenarioError> {
    let n = check_common(config, profile, core_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let classes: Vec<usize> = (0..n).map(|_| rng.random_range(0..profile.len())).collect();
    Ok(schedule_from_classes(classes, config.inter_arrival, config.service_window))
}

/// Latency-heavy scenario: kinds drawn by weight (latency-critical dominant
/// by default), classes uniform within the drawn kind.
pub fn generate_latency_heavy(
    config: &ScenarioConfig,
    profile: &WorkloadProfile,
    core_count: usize,
) -> Result<ArrivalSchedule, ScenarioError> {
    let n = check_common(config, profile, core_count)?;
    config.mix.validate()?;

    let by_kind = |kind: WorkloadKind| -> Vec<usize> {
        profile.classes.iter().filter(|c| c.kind == kind).map(|c| c.class_id).collect()
    };
    let pools = [
        (WorkloadKind::LatencyCritical, config.mix.latency, by_kind(WorkloadKind::LatencyCritical)),
        (WorkloadKind::Batch, config.mix.batch, by_kind(WorkloadKind::Batch)),
        (WorkloadKind::Streaming, config.mix.streaming, by_kind(WorkloadKind::Streaming)),
    ];
    for (kind, weight, pool) in &pools {
        if *weight > 0.0 && pool.is_empty() {
            return Err(ScenarioError::MissingKind(*kind));
        }
    }
    let total_weight: f64 = pools.iter().map(|(_, w, _)| w).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let classes: Vec<usize> = (0..n)
        .map(|_| {
            let mut draw = rng.random::<f64>() * total_weight;
            for (_, weight, pool) in &pools {
                if draw < *weight && *weight > 0.0 {
                    return pool[rng.random_range(0..pool.len())];
                }
                draw -= weight;
            }
            // numeric edge of the cumulative sum: fall back to the last
            // weighted pool
            let (_, _, pool) = pools.iter().rev().find(|(_, w, _)| *w > 0.0).unwrap();
            pool[rng.random_range(0..pool.len())]
        })
        .collect();
    Ok(schedule_from_classes(classes, config.inter_arrival, config.service_window))
}

/// Dynamic scenario: 24 instances placed at time zero whose phase patterns
/// activate them in consecutive batches of `dynamic_batch_size`, the rest
/// idle. Group membership is a seeded shuffle. Members of a batch wake one
/// inter-arrival step apart and hold their activity for a full window, a
/// sliding handoff that keeps exactly `batch_size` patterns active at any
/// time once the first batch has ramped up; trailing idle padding makes each
/// pattern's cycle outlast the horizon.
pub fn generate_dynamic(
    config: &ScenarioConfig,
    profile: &WorkloadProfile,
) -> Result<ArrivalSchedule, ScenarioError> {
    if profile.is_empty() {
        return Err(ScenarioError::NoClasses);
    }
    if config.dynamic_batch_size != 6 && config.dynamic_batch_size != 12 {
        return Err(ScenarioError::BadBatchSize(config.dynamic_batch_size));
    }
    let window = config.activation_window;
    if !window.is_finite() || window <= 0.0 {
        return Err(ScenarioError::BadParam { name: "activation_window", value: window });
    }
    let stagger = config.inter_arrival;
    if !stagger.is_finite() || stagger < 0.0 || (config.dynamic_batch_size - 1) as f64 * stagger >= window
    {
        return Err(ScenarioError::BadParam { name: "inter_arrival", value: stagger });
    }

    let groups = DYNAMIC_INSTANCES / config.dynamic_batch_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let classes: Vec<usize> =
        (0..DYNAMIC_INSTANCES).map(|_| rng.random_range(0..profile.len())).collect();
    let mut order: Vec<usize> = (0..DYNAMIC_INSTANCES).collect();
    order.shuffle(&mut rng);
    let mut slot_of = [0usize; DYNAMIC_INSTANCES];
    for (slot, &instance) in order.iter().enumerate() {
        slot_of[instance] = slot;
    }

    // Load changes are not synchronized with the scheduler clock: activation
    // boundaries sit half a monitoring interval off the tick grid, so the
    // detection lag is the expected half-window rather than the aligned
    // worst case.
    let offset = stagger / 2.0;
    let arrivals = (0..DYNAMIC_INSTANCES)
        .map(|i| {
            let group = slot_of[i] / config.dynamic_batch_size;
            let rank = slot_of[i] % config.dynamic_batch_size;
            let lead = group as f64 * window + rank as f64 * stagger + offset;
            let mut phases = Vec::with_capacity(3);
            if lead > 0.0 {
                phases.push(Phase::idle(lead));
            }
            phases.push(Phase::active(window));
            phases.push(Phase::idle((groups + 1) as f64 * window));
            ArrivalSpec { class_id: classes[i], arrival_time: 0.0, phases: Some(phases) }
        })
        .collect();
    let horizon =
        groups as f64 * window + (config.dynamic_batch_size - 1) as f64 * stagger + offset;
    Ok(ArrivalSchedule { arrivals, horizon: Some(horizon) })
}

/// Aggregate metrics of a class or kind group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub count: usize,
    pub mean_normalized_performance: f64,
}

/// Headline metrics of one run: mean normalized performance over all
/// instances and total core-hours, with per-class and per-kind breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub policy: crate::scheduler::Policy,
    pub seed: u64,
    pub mean_normalized_performance: f64,
    pub total_core_hours: f64,
    pub per_class: BTreeMap<String, GroupMetrics>,
    pub per_kind: BTreeMap<String, GroupMetrics>,
    pub instance_performance: Vec<f64>,
}

/// Reduces a trace to run metrics.
///
/// Per-instance normalized performance is the time average of 1/slowdown
/// over the instance's running time (for batch jobs this equals isolated
/// runtime / actual active runtime); an instance that never ran scores 1.0.
/// The headline number is the arithmetic mean across instances.
pub fn compute_metrics(trace: &RunTrace) -> RunMetrics {
    #[derive(Clone, Copy)]
    struct Acc {
        state: InstanceState,
        sigma: f64,
        seg_start: f64,
        running_time: f64,
        weighted_perf: f64,
    }
    let mut accs: Vec<Acc> = trace
        .instances
        .iter()
        .map(|_| Acc {
            state: InstanceState::Pending,
            sigma: 1.0,
            seg_start: 0.0,
            running_time: 0.0,
            weighted_perf: 0.0,
        })
        .collect();

    let close = |acc: &mut Acc, now: f64| {
        if acc.state == InstanceState::Running && now > acc.seg_start {
            let dt = now - acc.seg_start;
            acc.running_time += dt;
            acc.weighted_perf += dt / acc.sigma;
        }
        acc.seg_start = now;
    };

    for event in &trace.events {
        match event.kind {
            TraceEventKind::Arrive { .. } | TraceEventKind::Place { .. } => {}
            TraceEventKind::StateChange { instance, state } => {
                let acc = &mut accs[instance];
                close(acc, event.time);
                acc.state = state;
                if state != InstanceState::Running {
                    acc.sigma = 1.0;
                }
            }
            TraceEventKind::Slowdown { instance, value, .. } => {
                let acc = &mut accs[instance];
                close(acc, event.time);
                acc.sigma = value;
            }
        }
    }
    for acc in &mut accs {
        close(acc, trace.end_time);
    }

    let perf: Vec<f64> = accs
        .iter()
        .map(|acc| if acc.running_time > 0.0 { acc.weighted_perf / acc.running_time } else { 1.0 })
        .collect();

    let mut per_class: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    let mut per_kind: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for (meta, &p) in trace.instances.iter().zip(&perf) {
        let c = per_class.entry(meta.class_name.clone()).or_insert((0, 0.0));
        c.0 += 1;
        c.1 += p;
        let k = per_kind.entry(meta.kind.to_string()).or_insert((0, 0.0));
        k.0 += 1;
        k.1 += p;
    }
    let reduce = |m: BTreeMap<String, (usize, f64)>| {
        m.into_iter()
            .map(|(name, (count, sum))| {
                (name, GroupMetrics { count, mean_normalized_performance: sum / count as f64 })
            })
            .collect()
    };

    let mean = if perf.is_empty() { 1.0 } else { perf.iter().sum::<f64>() / perf.len() as f64 };
    RunMetrics {
        policy: trace.policy,
        seed: trace.seed,
        mean_normalized_performance: mean,
        total_core_hours: account_core_hours(trace),
        per_class: reduce(per_class),
        per_kind: reduce(per_kind),
        instance_performance: perf,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
    arrivals: Vec<ArrivalEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrivalEntry {
    class: String,
    time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phases: Option<Vec<Phase>>,
}

/// Serializes a schedule so an exact experiment can be pinned and versioned.
pub fn save_scenario(
    schedule: &ArrivalSchedule,
    profile: &WorkloadProfile,
) -> Result<String, ScenarioError> {
    let doc = ScenarioDocument {
        horizon: schedule.horizon,
        arrivals: schedule
            .arrivals
            .iter()
            .map(|a| ArrivalEntry {
                class: profile.class(a.class_id).name.clone(),
                time: a.arrival_time,
                phases: a.phases.clone(),
            })
            .collect(),
    };
    Ok(toml::to_string_pretty(&doc)?)
}

/// Parses a scenario document, resolving class names against the profile.
pub fn load_scenario(
    text: &str,
    profile: &WorkloadProfile,
) -> Result<ArrivalSchedule, ScenarioError> {
    let doc: ScenarioDocument = toml::from_str(text)?;
    let arrivals = doc
        .arrivals
        .into_iter()
        .map(|entry| {
            let class = profile
                .class_by_name(&entry.class)
                .ok_or_else(|| ScenarioError::UnknownClassName(entry.class.clone()))?;
            if let Some(phases) = &entry.phases {
                validate_phases(phases, "phases")?;
            }
            Ok(ArrivalSpec {
                class_id: class.class_id,
                arrival_time: entry.time,
                phases: entry.phases,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(ArrivalSchedule { arrivals, horizon: doc.horizon })
}
