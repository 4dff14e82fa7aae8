//! Consolidation scheduler toolkit.
//!
//! Implements resource-aware (RAS) and interference-aware (IAS) VM-to-core
//! pinning policies next to round-robin (RRS) and CPU-only (CAS) baselines,
//! driven by offline workload profiles (pairwise slowdown and utilization
//! matrices), plus a deterministic discrete-time simulator that replays
//! arrival scenarios against a multicore host and accounts normalized
//! workload performance and core-hours consumed.
//!
//! Modules:
//! - [`profiles`]: workload classes, the slowdown/utilization matrices and
//!   the profile document format.
//! - [`scheduler`]: overload/interference estimators, the four pinning
//!   policies and the per-tick scheduling loop.
//! - [`sim`]: the event-driven simulator, traces and core-hour accounting.
//! - [`scenarios`]: scenario generators and run metrics.

pub mod profiles;
pub mod scenarios;
pub mod scheduler;
pub mod sim;

pub use profiles::{
    build_slowdown_matrix, derive_interference_threshold, MetricOrientation, PerformanceSample,
    Phase, PhaseState, ResourceKind, ResourceScope, SlowdownMatrix, UtilizationVector,
    WorkloadClass, WorkloadKind, WorkloadProfile, DEFAULT_INTERFERENCE_THRESHOLD,
};
pub use scenarios::{
    compute_metrics, generate, generate_dynamic, generate_latency_heavy, generate_random,
    load_scenario, save_scenario, MixWeights, RunMetrics, ScenarioConfig, ScenarioError,
    ScenarioKind,
};
pub use scheduler::{
    cas_select_pinning, core_interference, core_overload, ias_select_pinning, ras_select_pinning,
    rrs_select_pinning, schedule_tick, update_resource_map, workload_interference, CoreState,
    HostModel, Policy, ResourceMap, ScheduleError, SchedulerParams, TickInstance, TickPlacement,
};
pub use sim::{
    account_core_hours, advance, export_trace, ground_truth_slowdown, run, ArrivalSchedule,
    ArrivalSpec, GroundTruthMode, InstanceState, RunTrace, SimConfig, SimError, TraceEvent,
    TraceEventKind, WorkloadInstance,
};
