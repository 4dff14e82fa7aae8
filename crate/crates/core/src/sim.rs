//! Deterministic discrete-time simulator.
//!
//! The driver advances workload lifecycles under a ground-truth interference
//! model, invokes the scheduling tick at a fixed interval and records every
//! lifecycle, placement and slowdown change in a trace. Identical inputs
//! yield bit-identical traces; there is no hidden randomness anywhere in the
//! loop.
//!
//! Time moves from event to event: ticks, arrivals, phase flips, batch
//! completions and the service horizon. Between events every slowdown is
//! constant, so batch progress integrates exactly as dt / slowdown.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::profiles::{
    Phase, PhaseState, SlowdownMatrix, WorkloadClass, WorkloadKind, WorkloadProfile,
    validate_phases,
};
use crate::scheduler::{
    schedule_tick, HostModel, Policy, ScheduleError, SchedulerParams, TickInstance,
    workload_interference,
};
use crate::scenarios::RunMetrics;

/// Default monitoring window and scheduling period, seconds.
pub const DEFAULT_TICK_INTERVAL: f64 = 30.0;
/// Default inter-arrival gap for generated scenarios, seconds.
pub const DEFAULT_INTER_ARRIVAL: f64 = 30.0;

const EVENT_LIMIT: u64 = 50_000_000;
/// Relative slack when deciding that a batch instance has finished.
const COMPLETION_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("arrival schedule is empty")]
    EmptySchedule,
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("arrival {index} references class {class_id}, but the profile has {classes} classes")]
    UnknownClass { index: usize, class_id: usize, classes: usize },
    #[error("arrival {index}: {message}")]
    BadArrival { index: usize, message: String },
    #[error("open-ended scenario: schedule has no batch instances and no horizon is set")]
    OpenEnded,
    #[error("placement failed at t={time}: {source}")]
    Placement {
        time: f64,
        #[source]
        source: ScheduleError,
        /// Trace up to the failure, for post-mortem export.
        trace: Box<RunTrace>,
    },
    #[error("event limit exceeded at t={0}; simulation does not terminate")]
    EventLimit(f64),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// How multi-way slowdown is synthesized from the pairwise matrix. All modes
/// coincide with the measured S[i][j] for a single companion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruthMode {
    /// Product of the pairwise slowdowns (default; heavy co-location
    /// compounds multiplicatively).
    PairwiseProduct,
    /// Worst single pairwise slowdown.
    PairwiseMax,
    /// The scheduler's own estimate (mean of sum and product), for
    /// estimator-versus-truth studies.
    Estimator,
}

impl fmt::Display for GroundTruthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GroundTruthMode::PairwiseProduct => "product",
            GroundTruthMode::PairwiseMax => "max",
            GroundTruthMode::Estimator => "estimator",
        };
        f.write_str(name)
    }
}

/// True slowdown of `class_id` given the classes of its running co-residents.
pub fn ground_truth_slowdown(
    class_id: usize,
    companions: &[usize],
    mode: GroundTruthMode,
    s: &SlowdownMatrix,
) -> f64 {
    if companions.is_empty() {
        return 1.0;
    }
    match mode {
        GroundTruthMode::PairwiseProduct => {
            companions.iter().map(|&j| s.get(class_id, j)).product()
        }
        GroundTruthMode::PairwiseMax => companions
            .iter()
            .map(|&j| s.get(class_id, j))
            .fold(f64::NEG_INFINITY, f64::max),
        GroundTruthMode::Estimator => workload_interference(class_id, companions, s),
    }
}

/// One requested workload start.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSpec {
    pub class_id: usize,
    pub arrival_time: f64,
    /// Per-instance phase pattern; defaults to the class pattern.
    pub phases: Option<Vec<Phase>>,
}

/// A scenario's arrival schedule plus the recommended service horizon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrivalSchedule {
    pub arrivals: Vec<ArrivalSpec>,
    /// Time at which open-ended services wind down, unless the sim config
    /// overrides it.
    pub horizon: Option<f64>,
}

/// Full simulator configuration for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Seed used by the scenario generator; recorded in the trace.
    pub seed: u64,
    /// Scheduling period and monitoring window, seconds.
    pub tick_interval: f64,
    /// Arrival cadence used when generating scenarios, seconds.
    pub inter_arrival: f64,
    pub host: HostModel,
    pub params: SchedulerParams,
    pub ground_truth: GroundTruthMode,
    /// Overrides the schedule's recommended horizon when set.
    pub horizon: Option<f64>,
}

impl SimConfig {
    pub fn new(policy: Policy) -> Self {
        SimConfig {
            seed: 0,
            tick_interval: DEFAULT_TICK_INTERVAL,
            inter_arrival: DEFAULT_INTER_ARRIVAL,
            host: HostModel::default(),
            params: SchedulerParams::new(policy),
            ground_truth: GroundTruthMode::PairwiseProduct,
            horizon: None,
        }
    }
}

/// Lifecycle state of a workload instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceState {
    Pending,
    Running,
    Idle,
    Finished,
}

impl fmt::Display for InstanceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            InstanceState::Pending => "pending",
            InstanceState::Running => "run",
            InstanceState::Idle => "idle",
            InstanceState::Finished => "finish",
        };
        f.write_str(name)
    }
}

/// One logged interval of instantaneous normalized performance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfSegment {
    pub start: f64,
    pub end: f64,
    /// 1 / slowdown over the interval.
    pub value: f64,
}

/// A running VM: class reference, lifecycle state, accumulated progress and
/// the record of its instantaneous performance.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadInstance {
    pub instance_id: usize,
    pub class_id: usize,
    pub arrival_time: f64,
    /// Ordinal in arrival order; drives round-robin placement.
    pub arrival_index: usize,
    pub state: InstanceState,
    /// Seconds of isolated-equivalent work completed (batch only).
    pub progress: f64,
    pub perf_log: Vec<PerfSegment>,
    pub pinned_core: Option<usize>,
    pub service_demand: Option<f64>,
    /// Effective phase pattern (instance override or class pattern),
    /// repeated cyclically.
    pub phases: Vec<Phase>,
    pub finish_time: Option<f64>,
    phase_index: usize,
    next_phase_boundary: f64,
    running_spans: Vec<(f64, f64)>,
    span_open: Option<f64>,
    last_slowdown: Option<f64>,
}

impl WorkloadInstance {
    pub fn new(
        instance_id: usize,
        arrival_index: usize,
        class: &WorkloadClass,
        arrival_time: f64,
        phases_override: Option<Vec<Phase>>,
    ) -> Self {
        WorkloadInstance {
            instance_id,
            class_id: class.class_id,
            arrival_time,
            arrival_index,
            state: InstanceState::Pending,
            progress: 0.0,
            perf_log: Vec::new(),
            pinned_core: None,
            service_demand: class.service_demand,
            phases: phases_override.unwrap_or_else(|| class.phase_pattern.clone()),
            finish_time: None,
            phase_index: 0,
            next_phase_boundary: f64::INFINITY,
            running_spans: Vec::new(),
            span_open: None,
            last_slowdown: None,
        }
    }

    pub fn is_batch(&self) -> bool {
        self.service_demand.is_some()
    }

    fn uniform_pattern(&self) -> bool {
        let first = self.phases[0].state;
        self.phases.iter().all(|p| p.state == first)
    }

    /// Marks the instance as arrived at `now`: its phase clock starts and its
    /// state follows the first phase.
    pub fn arrive(&mut self, now: f64) {
        debug_assert_eq!(self.state, InstanceState::Pending);
        self.phase_index = 0;
        self.next_phase_boundary = if self.uniform_pattern() {
            f64::INFINITY
        } else {
            now + self.phases[0].duration
        };
        match self.phases[0].state {
            PhaseState::Active => {
                self.state = InstanceState::Running;
                self.span_open = Some(now);
            }
            PhaseState::Idle => self.state = InstanceState::Idle,
        }
    }

    fn close_span(&mut self, now: f64) {
        if let Some(start) = self.span_open.take() {
            if now > start {
                self.running_spans.push((start, now));
            }
        }
    }

    fn finish(&mut self, now: f64) {
        self.close_span(now);
        self.state = InstanceState::Finished;
        self.finish_time = Some(now);
        self.pinned_core = None;
        self.last_slowdown = None;
    }

    /// Seconds spent in running state within [window_start, window_end).
    pub fn running_time_in(&self, window_start: f64, window_end: f64) -> f64 {
        let mut total = 0.0;
        for &(s, e) in &self.running_spans {
            total += (e.min(window_end) - s.max(window_start)).max(0.0);
        }
        if let Some(open) = self.span_open {
            total += (window_end - open.max(window_start)).max(0.0);
        }
        total
    }

    fn log_perf(&mut self, start: f64, end: f64, value: f64) {
        if let Some(last) = self.perf_log.last_mut() {
            if last.end == start && last.value == value {
                last.end = end;
                return;
            }
        }
        self.perf_log.push(PerfSegment { start, end, value });
    }
}

/// A state change produced by [`advance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: SimEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimEventKind {
    /// Phase pattern flipped the instance between running and idle.
    PhaseFlip { instance: usize, state: InstanceState },
    /// A batch instance completed its service demand.
    Completed { instance: usize },
    /// The instance's ground-truth slowdown changed.
    SlowdownChanged { instance: usize, core: usize, slowdown: f64 },
}

fn current_slowdown(
    instances: &[WorkloadInstance],
    idx: usize,
    mode: GroundTruthMode,
    s: &SlowdownMatrix,
) -> f64 {
    let inst = &instances[idx];
    let core = match inst.pinned_core {
        Some(core) => core,
        None => return 1.0,
    };
    let companions: Vec<usize> = instances
        .iter()
        .enumerate()
        .filter(|(j, other)| {
            *j != idx && other.state == InstanceState::Running && other.pinned_core == Some(core)
        })
        .map(|(_, other)| other.class_id)
        .collect();
    ground_truth_slowdown(inst.class_id, &companions, mode, s)
}

/// Advances all instances by `dt` seconds of simulated time starting at
/// `now`.
///
/// Running batch instances accrue progress dt / slowdown and become finished
/// when their service demand is met; every running instance logs its
/// instantaneous normalized performance 1 / slowdown; idle instances accrue
/// nothing. Phase boundaries and completions inside the interval are handled
/// at their exact times, so splitting `dt` into sub-intervals never changes
/// the outcome. Returns the state changes in time order.
pub fn advance(
    instances: &mut [WorkloadInstance],
    profile: &WorkloadProfile,
    mode: GroundTruthMode,
    now: f64,
    dt: f64,
) -> Vec<SimEvent> {
    let mut events = Vec::new();
    if dt <= 0.0 {
        return events;
    }
    let end = now + dt;
    let mut t = now;
    let s = &profile.slowdown;

    loop {
        // Slowdowns are piecewise constant from here to the next state change.
        let mut sigmas = vec![1.0; instances.len()];
        for idx in 0..instances.len() {
            if instances[idx].state == InstanceState::Running
                && instances[idx].pinned_core.is_some()
            {
                let sigma = current_slowdown(instances, idx, mode, s);
                sigmas[idx] = sigma;
                if instances[idx].last_slowdown != Some(sigma) {
                    instances[idx].last_slowdown = Some(sigma);
                    events.push(SimEvent {
                        time: t,
                        kind: SimEventKind::SlowdownChanged {
                            instance: instances[idx].instance_id,
                            core: instances[idx].pinned_core.expect("running instances are pinned"),
                            slowdown: sigma,
                        },
                    });
                }
            }
        }

        let mut t_next = end;
        let mut immediate_completion = false;
        for (idx, inst) in instances.iter().enumerate() {
            if inst.state == InstanceState::Finished || inst.state == InstanceState::Pending {
                continue;
            }
            if inst.next_phase_boundary > t && inst.next_phase_boundary < t_next {
                t_next = inst.next_phase_boundary;
            }
            if inst.state == InstanceState::Running && inst.pinned_core.is_some() {
                if let Some(demand) = inst.service_demand {
                    let remaining = demand - inst.progress;
                    if remaining > 0.0 {
                        let t_complete = t + remaining * sigmas[idx];
                        if t_complete <= t {
                            immediate_completion = true;
                        } else if t_complete < t_next {
                            t_next = t_complete;
                        }
                    }
                }
            }
        }

        // Integrate the segment.
        let step = t_next - t;
        if step > 0.0 && !immediate_completion {
            for (idx, inst) in instances.iter_mut().enumerate() {
                if inst.state == InstanceState::Running && inst.pinned_core.is_some() {
                    if inst.service_demand.is_some() {
                        inst.progress += step / sigmas[idx];
                    }
                    inst.log_perf(t, t_next, 1.0 / sigmas[idx]);
                }
            }
            t = t_next;
        }

        // Completions: exact landing plus float-slack detection. A remainder
        // whose wall time underflows against t also counts as done, so the
        // loop always makes progress.
        for (idx, inst) in instances.iter_mut().enumerate() {
            if inst.state == InstanceState::Running && inst.pinned_core.is_some() {
                if let Some(demand) = inst.service_demand {
                    let done = inst.progress >= demand * (1.0 - COMPLETION_EPS)
                        || t + (demand - inst.progress) * sigmas[idx] <= t;
                    if done {
                        inst.progress = demand;
                        inst.finish(t);
                        events.push(SimEvent {
                            time: t,
                            kind: SimEventKind::Completed { instance: inst.instance_id },
                        });
                    }
                }
            }
        }

        // Phase flips due exactly now.
        for inst in instances.iter_mut() {
            if inst.state == InstanceState::Finished || inst.state == InstanceState::Pending {
                continue;
            }
            if inst.next_phase_boundary == t {
                inst.phase_index = (inst.phase_index + 1) % inst.phases.len();
                inst.next_phase_boundary = t + inst.phases[inst.phase_index].duration;
                let new_state = match inst.phases[inst.phase_index].state {
                    PhaseState::Active => InstanceState::Running,
                    PhaseState::Idle => InstanceState::Idle,
                };
                if new_state != inst.state {
                    match new_state {
                        InstanceState::Running => inst.span_open = Some(t),
                        InstanceState::Idle => {
                            inst.close_span(t);
                            inst.last_slowdown = None;
                        }
                        _ => unreachable!(),
                    }
                    inst.state = new_state;
                    events.push(SimEvent {
                        time: t,
                        kind: SimEventKind::PhaseFlip {
                            instance: inst.instance_id,
                            state: new_state,
                        },
                    });
                }
            }
        }

        if t >= end {
            break;
        }
    }
    events
}

/// Instance descriptor embedded in a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    pub instance_id: usize,
    pub class_id: usize,
    pub class_name: String,
    pub kind: WorkloadKind,
    pub arrival_time: f64,
    pub service_demand: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEventKind {
    /// The instance arrived on the host.
    Arrive { instance: usize },
    /// Lifecycle transition (running, idle or finished).
    StateChange { instance: usize, state: InstanceState },
    /// The instance was pinned to a core.
    Place { instance: usize, core: usize },
    /// The instance's ground-truth slowdown changed.
    Slowdown { instance: usize, core: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceEventKind,
}

/// Complete record of one simulation run: configuration echoes, per-instance
/// metadata and the ordered event log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub policy: Policy,
    pub core_count: usize,
    pub idle_core: usize,
    pub seed: u64,
    pub end_time: f64,
    pub instances: Vec<InstanceMeta>,
    pub events: Vec<TraceEvent>,
}

/// Runs the event loop to completion.
///
/// Arrivals enter the host when due; every `tick_interval` the scheduler
/// re-pins all live instances using each instance's CPU usage measured over
/// the last window (class CPU × fraction of the window spent active);
/// between events the physics advance at piecewise-constant slowdown. The
/// run ends when every batch instance has finished and services have wound
/// down at the horizon (services end at the last batch completion when no
/// horizon is set).
pub fn run(
    config: &SimConfig,
    profile: &WorkloadProfile,
    schedule: &ArrivalSchedule,
) -> Result<RunTrace, SimError> {
    if schedule.arrivals.is_empty() {
        return Err(SimError::EmptySchedule);
    }
    if !config.tick_interval.is_finite() || config.tick_interval <= 0.0 {
        return Err(SimError::BadConfig(format!(
            "tick_interval {} must be positive",
            config.tick_interval
        )));
    }
    config.params.validate()?;
    let horizon = config.horizon.or(schedule.horizon);
    if let Some(h) = horizon {
        if !h.is_finite() || h <= 0.0 {
            return Err(SimError::BadConfig(format!("horizon {h} must be positive")));
        }
    }

    // Build instances in arrival order.
    let mut order: Vec<usize> = (0..schedule.arrivals.len()).collect();
    order.sort_by(|&a, &b| {
        schedule.arrivals[a]
            .arrival_time
            .partial_cmp(&schedule.arrivals[b].arrival_time)
            .expect("arrival times must be comparable")
            .then(a.cmp(&b))
    });
    let mut instances: Vec<WorkloadInstance> = Vec::with_capacity(order.len());
    let mut meta = Vec::with_capacity(order.len());
    for (arrival_index, &spec_idx) in order.iter().enumerate() {
        let spec = &schedule.arrivals[spec_idx];
        if spec.class_id >= profile.len() {
            return Err(SimError::UnknownClass {
                index: spec_idx,
                class_id: spec.class_id,
                classes: profile.len(),
            });
        }
        if !spec.arrival_time.is_finite() || spec.arrival_time < 0.0 {
            return Err(SimError::BadArrival {
                index: spec_idx,
                message: format!("arrival time {} must be nonnegative", spec.arrival_time),
            });
        }
        let class = profile.class(spec.class_id);
        if let Some(phases) = &spec.phases {
            validate_phases(phases, "phases").map_err(|e| SimError::BadArrival {
                index: spec_idx,
                message: e.to_string(),
            })?;
            if class.is_batch() && !phases.iter().any(|p| p.state == PhaseState::Active) {
                return Err(SimError::BadArrival {
                    index: spec_idx,
                    message: "batch instance would never become active".to_string(),
                });
            }
        }
        instances.push(WorkloadInstance::new(
            arrival_index,
            arrival_index,
            class,
            spec.arrival_time,
            spec.phases.clone(),
        ));
        meta.push(InstanceMeta {
            instance_id: arrival_index,
            class_id: class.class_id,
            class_name: class.name.clone(),
            kind: class.kind,
            arrival_time: spec.arrival_time,
            service_demand: class.service_demand,
        });
    }
    let has_batch = instances.iter().any(|i| i.is_batch());
    if !has_batch && horizon.is_none() {
        return Err(SimError::OpenEnded);
    }

    let mut events: Vec<TraceEvent> = Vec::new();
    let mut t = 0.0_f64;
    let mut next_tick = 0.0_f64;
    let mut arrival_cursor = 0usize;
    let mut horizon_done = false;
    let mut steps: u64 = 0;

    let push_sim_events = |events: &mut Vec<TraceEvent>, sim_events: Vec<SimEvent>| {
        for ev in sim_events {
            let kind = match ev.kind {
                SimEventKind::PhaseFlip { instance, state } => {
                    TraceEventKind::StateChange { instance, state }
                }
                SimEventKind::Completed { instance } => {
                    TraceEventKind::StateChange { instance, state: InstanceState::Finished }
                }
                SimEventKind::SlowdownChanged { instance, core, slowdown } => {
                    TraceEventKind::Slowdown { instance, core, value: slowdown }
                }
            };
            events.push(TraceEvent { time: ev.time, kind });
        }
    };

    loop {
        if instances.iter().all(|i| i.state == InstanceState::Finished) {
            break;
        }
        steps += 1;
        if steps > EVENT_LIMIT {
            return Err(SimError::EventLimit(t));
        }

        // Wind services down once all batch work is done and nothing else is
        // coming (only when no horizon governs their lifetime).
        let arrivals_done = arrival_cursor >= instances.len();
        if horizon.is_none()
            && arrivals_done
            && instances.iter().filter(|i| i.is_batch()).all(|i| i.state == InstanceState::Finished)
        {
            for inst in instances.iter_mut() {
                if inst.state != InstanceState::Finished {
                    inst.finish(t);
                    events.push(TraceEvent {
                        time: t,
                        kind: TraceEventKind::StateChange {
                            instance: inst.instance_id,
                            state: InstanceState::Finished,
                        },
                    });
                }
            }
            break;
        }

        // Next driver-level event.
        let mut t_next = next_tick;
        if !arrivals_done {
            t_next = t_next.min(instances[arrival_cursor].arrival_time);
        }
        if let Some(h) = horizon {
            if !horizon_done && h >= t {
                t_next = t_next.min(h);
            }
        }
        for inst in &instances {
            if (inst.state == InstanceState::Running || inst.state == InstanceState::Idle)
                && inst.next_phase_boundary > t {
                    t_next = t_next.min(inst.next_phase_boundary);
                }
        }
        for (idx, inst) in instances.iter().enumerate() {
            if inst.state == InstanceState::Running && inst.pinned_core.is_some() {
                if let Some(demand) = inst.service_demand {
                    let remaining = demand - inst.progress;
                    if remaining > 0.0 {
                        let sigma =
                            current_slowdown(&instances, idx, config.ground_truth, &profile.slowdown);
                        let t_complete = t + remaining * sigma;
                        // degenerate remainders are advance()'s business
                        if t_complete > t {
                            t_next = t_next.min(t_complete);
                        }
                    }
                }
            }
        }

        if t_next > t {
            let sim_events =
                advance(&mut instances, profile, config.ground_truth, t, t_next - t);
            push_sim_events(&mut events, sim_events);
            t = t_next;
        }

        // Arrivals due now.
        while arrival_cursor < instances.len()
            && instances[arrival_cursor].arrival_time <= t
        {
            let inst = &mut instances[arrival_cursor];
            inst.arrive(t);
            events.push(TraceEvent {
                time: t,
                kind: TraceEventKind::Arrive { instance: inst.instance_id },
            });
            events.push(TraceEvent {
                time: t,
                kind: TraceEventKind::StateChange {
                    instance: inst.instance_id,
                    state: inst.state,
                },
            });
            // Services arriving after the horizon end immediately.
            if horizon_done && !inst.is_batch() {
                inst.finish(t);
                events.push(TraceEvent {
                    time: t,
                    kind: TraceEventKind::StateChange {
                        instance: inst.instance_id,
                        state: InstanceState::Finished,
                    },
                });
            }
            arrival_cursor += 1;
        }

        // Service horizon.
        if let Some(h) = horizon {
            if !horizon_done && t >= h {
                for inst in instances.iter_mut() {
                    if !inst.is_batch() && inst.state != InstanceState::Finished
                        && inst.state != InstanceState::Pending
                    {
                        inst.finish(t);
                        events.push(TraceEvent {
                            time: t,
                            kind: TraceEventKind::StateChange {
                                instance: inst.instance_id,
                                state: InstanceState::Finished,
                            },
                        });
                    }
                }
                horizon_done = true;
            }
        }

        // Scheduling tick.
        if t == next_tick {
            let live: Vec<TickInstance> = instances
                .iter()
                .filter(|i| {
                    i.state == InstanceState::Running || i.state == InstanceState::Idle
                })
                .map(|i| TickInstance {
                    instance_id: i.instance_id,
                    class_id: i.class_id,
                    arrival_index: i.arrival_index,
                    measured_cpu: measured_cpu(i, profile.class(i.class_id), t, config.tick_interval),
                    pinned_core: i.pinned_core,
                })
                .collect();
            if !live.is_empty() {
                let placement = schedule_tick(&live, profile, &config.params, &config.host)
                    .map_err(|source| SimError::Placement {
                        time: t,
                        source,
                        trace: Box::new(RunTrace {
                            policy: config.params.policy,
                            core_count: config.host.core_count(),
                            idle_core: config.host.idle_core(),
                            seed: config.seed,
                            end_time: t,
                            instances: meta.clone(),
                            events: events.clone(),
                        }),
                    })?;
                for (&instance_id, &core) in &placement.assignments {
                    let inst = &mut instances[instance_id];
                    if inst.pinned_core != Some(core) {
                        inst.pinned_core = Some(core);
                        events.push(TraceEvent {
                            time: t,
                            kind: TraceEventKind::Place { instance: instance_id, core },
                        });
                    }
                }
            }
            next_tick += config.tick_interval;
        }
    }

    Ok(RunTrace {
        policy: config.params.policy,
        core_count: config.host.core_count(),
        idle_core: config.host.idle_core(),
        seed: config.seed,
        end_time: t,
        instances: meta,
        events,
    })
}

/// CPU usage over the monitoring window ending at `now`: the class's CPU
/// demand scaled by the fraction of the window the instance spent active.
/// An instance that arrived exactly now has no history, so its instantaneous
/// state stands in for the measurement.
fn measured_cpu(
    inst: &WorkloadInstance,
    class: &WorkloadClass,
    now: f64,
    window: f64,
) -> f64 {
    if inst.arrival_time >= now {
        return if inst.state == InstanceState::Running { class.utilization.cpu } else { 0.0 };
    }
    let active = inst.running_time_in(now - window, now);
    class.utilization.cpu * (active / window)
}

/// Core-hours consumed over a trace: the time integral of the number of
/// cores hosting at least one running, unfinished workload. A core holding
/// only idle workloads is free to power down and does not count — except
/// under RRS, which cannot tell idle from running and keeps every core with
/// an unfinished workload busy.
pub fn account_core_hours(trace: &RunTrace) -> f64 {
    let mut state: BTreeMap<usize, (InstanceState, Option<usize>)> = BTreeMap::new();
    let mut busy_seconds = 0.0_f64;
    let mut prev_t = 0.0_f64;

    let busy_cores = |state: &BTreeMap<usize, (InstanceState, Option<usize>)>| {
        let mut cores = std::collections::BTreeSet::new();
        for &(inst_state, core) in state.values() {
            let counts = match trace.policy {
                Policy::Rrs => inst_state != InstanceState::Finished,
                _ => inst_state == InstanceState::Running,
            };
            if counts {
                if let Some(core) = core {
                    cores.insert(core);
                }
            }
        }
        cores.len() as f64
    };

    for event in &trace.events {
        if event.time > prev_t {
            busy_seconds += busy_cores(&state) * (event.time - prev_t);
            prev_t = event.time;
        }
        match event.kind {
            TraceEventKind::Arrive { instance } => {
                state.entry(instance).or_insert((InstanceState::Pending, None));
            }
            TraceEventKind::StateChange { instance, state: s } => {
                let entry = state.entry(instance).or_insert((InstanceState::Pending, None));
                entry.0 = s;
                if s == InstanceState::Finished {
                    entry.1 = None;
                }
            }
            TraceEventKind::Place { instance, core } => {
                let entry = state.entry(instance).or_insert((InstanceState::Pending, None));
                entry.1 = Some(core);
            }
            TraceEventKind::Slowdown { .. } => {}
        }
    }
    if trace.end_time > prev_t {
        busy_seconds += busy_cores(&state) * (trace.end_time - prev_t);
    }
    busy_seconds / 3600.0
}

/// Stable text export: header comments, one tab-separated record per event
/// with columns (time, event, instance, core, slowdown), and a final metrics
/// record. Field order is fixed so exports can be diffed.
pub fn export_trace(trace: &RunTrace, metrics: &RunMetrics) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    out.push_str("# pinsched trace v1\n");
    let _ = writeln!(
        out,
        "# policy={} cores={} idle_core={} seed={} end={:?}",
        trace.policy, trace.core_count, trace.idle_core, trace.seed, trace.end_time
    );
    for m in &trace.instances {
        let _ = writeln!(
            out,
            "# instance {} class={} name={} kind={} arrival={:?} demand={}",
            m.instance_id,
            m.class_id,
            m.class_name,
            m.kind,
            m.arrival_time,
            m.service_demand.map(|d| format!("{d:?}")).unwrap_or_else(|| "-".to_string()),
        );
    }
    out.push_str("# columns: time\tevent\tinstance\tcore\tslowdown\n");
    for event in &trace.events {
        let (kind, instance, core, slowdown) = match event.kind {
            TraceEventKind::Arrive { instance } => ("arrive", instance, None, None),
            TraceEventKind::StateChange { instance, state } => {
                let name = match state {
                    InstanceState::Running => "run",
                    InstanceState::Idle => "idle",
                    InstanceState::Finished => "finish",
                    InstanceState::Pending => "pending",
                };
                (name, instance, None, None)
            }
            TraceEventKind::Place { instance, core } => ("place", instance, Some(core), None),
            TraceEventKind::Slowdown { instance, core, value } => {
                ("slowdown", instance, Some(core), Some(value))
            }
        };
        let _ = writeln!(
            out,
            "{:?}\t{}\t{}\t{}\t{}",
            event.time,
            kind,
            instance,
            core.map(|c| c.to_string()).unwrap_or_else(|| "-".to_string()),
            slowdown.map(|v| format!("{v:?}")).unwrap_or_else(|| "-".to_string()),
        );
    }
    let _ = writeln!(
        out,
        "metrics\tmean_normalized_performance={:?}\ttotal_core_hours={:?}",
        metrics.mean_normalized_performance, metrics.total_core_hours
    );
    out
}
