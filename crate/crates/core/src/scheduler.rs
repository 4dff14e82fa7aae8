//! Placement mathematics and the four pinning policies.
//!
//! The per-tick loop re-pins every workload on the host: instances whose
//! measured CPU fell below the idle cutoff are consolidated onto a dedicated
//! core and treated as consuming nothing, then the running instances are
//! re-placed in arrival order through the active policy's pinning selection.
//!
//! Selection is first-fit with an argmin fallback in all three aware
//! policies: RAS admits a core whose post-placement overload (sum over
//! resources of demand exceeding `thr`) is zero, CAS is RAS restricted to
//! the CPU column, and IAS admits a core whose post-placement interference
//! (worst co-resident's mean of summed and multiplied pairwise slowdowns)
//! stays below the interference threshold. Round-robin ignores monitoring
//! entirely and pins arrival k to core k mod core_count, permanently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::{
    ResourceKind, ResourceScope, SlowdownMatrix, UtilizationVector, WorkloadProfile,
    DEFAULT_INTERFERENCE_THRESHOLD, RESOURCE_COUNT,
};

/// Default per-resource overload threshold (120%).
pub const DEFAULT_OVERLOAD_THRESHOLD: f64 = 1.2;
/// Default idle cutoff: CPU usage below 2.5% over the last window.
pub const DEFAULT_IDLE_CPU_CUTOFF: f64 = 0.025;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("host has no schedulable cores")]
    NoCores,
    #[error("sockets do not partition cores 0..{core_count}: {detail}")]
    BadSockets { core_count: usize, detail: String },
    #[error("idle core {idle_core} out of range for {core_count} cores")]
    BadIdleCore { idle_core: usize, core_count: usize },
    #[error("instance {instance_id} references class {class_id}, but the profile has {classes} classes")]
    UnknownClass { instance_id: usize, class_id: usize, classes: usize },
    #[error("scheduler parameter {name} has invalid value {value}")]
    BadParam { name: &'static str, value: f64 },
}

/// Physical host: cores grouped into sockets, plus the core reserved for
/// idle-workload consolidation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostModel {
    core_count: usize,
    sockets: Vec<Vec<usize>>,
    idle_core: usize,
    socket_of: Vec<usize>,
}

impl HostModel {
    pub fn new(
        core_count: usize,
        sockets: Vec<Vec<usize>>,
        idle_core: usize,
    ) -> Result<Self, ScheduleError> {
        if core_count == 0 {
            return Err(ScheduleError::NoCores);
        }
        if idle_core >= core_count {
            return Err(ScheduleError::BadIdleCore { idle_core, core_count });
        }
        let mut socket_of = vec![usize::MAX; core_count];
        for (sid, socket) in sockets.iter().enumerate() {
            for &core in socket {
                if core >= core_count {
                    return Err(ScheduleError::BadSockets {
                        core_count,
                        detail: format!("socket {sid} lists core {core}"),
                    });
                }
                if socket_of[core] != usize::MAX {
                    return Err(ScheduleError::BadSockets {
                        core_count,
                        detail: format!("core {core} appears in more than one socket"),
                    });
                }
                socket_of[core] = sid;
            }
        }
        if let Some(core) = socket_of.iter().position(|&s| s == usize::MAX) {
            return Err(ScheduleError::BadSockets {
                core_count,
                detail: format!("core {core} belongs to no socket"),
            });
        }
        Ok(HostModel { core_count, sockets, idle_core, socket_of })
    }

    /// Two six-core sockets, idle consolidation on core 0.
    pub fn two_socket_twelve_core() -> Self {
        HostModel::new(12, vec![(0..6).collect(), (6..12).collect()], 0)
            .expect("default host model is valid")
    }

    pub fn core_count(&self) -> usize {
        self.core_count
    }

    pub fn idle_core(&self) -> usize {
        self.idle_core
    }

    pub fn sockets(&self) -> &[Vec<usize>] {
        &self.sockets
    }

    pub fn socket_of(&self, core: usize) -> usize {
        self.socket_of[core]
    }
}

impl Default for HostModel {
    fn default() -> Self {
        Self::two_socket_twelve_core()
    }
}

/// Pinning policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Policy {
    /// Round-robin: arrival k on core k mod core_count, static for life.
    Rrs,
    /// CPU-aware: RAS restricted to the CPU column.
    Cas,
    /// Resource-aware: first core with zero post-placement overload, else
    /// minimal overload increase.
    Ras,
    /// Interference-aware: first core whose post-placement interference is
    /// below the threshold, else minimal post-placement interference.
    Ias,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Rrs, Policy::Cas, Policy::Ras, Policy::Ias];
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Policy::Rrs => "RRS",
            Policy::Cas => "CAS",
            Policy::Ras => "RAS",
            Policy::Ias => "IAS",
        };
        f.write_str(name)
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rrs" => Ok(Policy::Rrs),
            "cas" => Ok(Policy::Cas),
            "ras" => Ok(Policy::Ras),
            "ias" => Ok(Policy::Ias),
            other => Err(format!("unknown policy {other:?} (expected rrs, cas, ras or ias)")),
        }
    }
}

/// Tunables of the scheduling loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    pub policy: Policy,
    /// Per-resource overload threshold: a core is considered full once any
    /// resource's co-pinned demand exceeds this fraction.
    pub thr: f64,
    /// IAS admission threshold.
    pub interference_threshold: f64,
    /// Measured-CPU fraction below which a workload counts as idle.
    pub idle_cpu_cutoff: f64,
    /// Fold socket/server-scoped demand into RAS/CAS overload evaluation
    /// instead of the literal co-pinned-rows-only form. Reporting stays
    /// scoped either way.
    pub scoped_overload: bool,
}

impl SchedulerParams {
    pub fn new(policy: Policy) -> Self {
        SchedulerParams {
            policy,
            thr: DEFAULT_OVERLOAD_THRESHOLD,
            interference_threshold: DEFAULT_INTERFERENCE_THRESHOLD,
            idle_cpu_cutoff: DEFAULT_IDLE_CPU_CUTOFF,
            scoped_overload: false,
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !self.thr.is_finite() || self.thr <= 0.0 {
            return Err(ScheduleError::BadParam { name: "thr", value: self.thr });
        }
        if !self.interference_threshold.is_finite() || self.interference_threshold < 1.0 {
            return Err(ScheduleError::BadParam {
                name: "interference_threshold",
                value: self.interference_threshold,
            });
        }
        if !self.idle_cpu_cutoff.is_finite() || !(0.0..1.0).contains(&self.idle_cpu_cutoff)
            || self.idle_cpu_cutoff == 0.0
        {
            return Err(ScheduleError::BadParam {
                name: "idle_cpu_cutoff",
                value: self.idle_cpu_cutoff,
            });
        }
        Ok(())
    }
}

/// A core with the workload instances currently pinned to it, in arrival
/// order. An instance appears in exactly one core's active set at a time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoreState {
    pub core_id: usize,
    pub active_set: Vec<usize>,
}

fn column_sum(
    core_classes: &[usize],
    extra: Option<usize>,
    rows: &[UtilizationVector],
    kind: ResourceKind,
) -> f64 {
    let mut sum: f64 = core_classes.iter().map(|&c| rows[c].get(kind)).sum();
    if let Some(class) = extra {
        sum += rows[class].get(kind);
    }
    sum
}

fn overload_over(
    core_classes: &[usize],
    extra: Option<usize>,
    rows: &[UtilizationVector],
    thr: f64,
    resources: &[ResourceKind],
) -> f64 {
    resources
        .iter()
        .map(|&kind| (column_sum(core_classes, extra, rows, kind) - thr).max(0.0))
        .sum()
}

/// Core overload: sum over the four resources of the positive excess of the
/// co-pinned classes' demand over `thr`. Zero when every column stays below
/// the threshold.
pub fn core_overload(core_classes: &[usize], rows: &[UtilizationVector], thr: f64) -> f64 {
    overload_over(core_classes, None, rows, thr, &ResourceKind::ALL)
}

/// Interference a workload suffers from its co-located set: the mean of the
/// sum and the product of its pairwise slowdowns against each companion.
/// An empty companion set means the workload runs alone; by convention that
/// is unit slowdown, 1.0.
pub fn workload_interference(subject: usize, companions: &[usize], s: &SlowdownMatrix) -> f64 {
    if companions.is_empty() {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut product = 1.0;
    for &j in companions {
        let v = s.get(subject, j);
        sum += v;
        product *= v;
    }
    (sum + product) / 2.0
}

/// Core interference: the worst workload interference on the core, i.e. the
/// estimate for the co-resident that suffers the most. 0.0 for an empty core
/// so that empty cores are maximally attractive.
pub fn core_interference(core_classes: &[usize], s: &SlowdownMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for (idx, &subject) in core_classes.iter().enumerate() {
        let mut sum = 0.0;
        let mut product = 1.0;
        let mut alone = true;
        for (jdx, &other) in core_classes.iter().enumerate() {
            if jdx != idx {
                let v = s.get(subject, other);
                sum += v;
                product *= v;
                alone = false;
            }
        }
        let wi = if alone { 1.0 } else { (sum + product) / 2.0 };
        worst = worst.max(wi);
    }
    worst
}

fn core_interference_with(
    core_classes: &[usize],
    wload: usize,
    s: &SlowdownMatrix,
) -> f64 {
    let mut with: Vec<usize> = Vec::with_capacity(core_classes.len() + 1);
    with.extend_from_slice(core_classes);
    with.push(wload);
    core_interference(&with, s)
}

/// Round-robin pinning: arrival k goes to core k mod core_count. Never
/// consults monitoring state.
pub fn rrs_select_pinning(arrival_index: usize, core_count: usize) -> usize {
    arrival_index % core_count
}

fn resource_select(
    wload: usize,
    cores: &[Vec<usize>],
    rows: &[UtilizationVector],
    thr: f64,
    resources: &[ResourceKind],
) -> Result<usize, ScheduleError> {
    if cores.is_empty() {
        return Err(ScheduleError::NoCores);
    }
    for (i, core) in cores.iter().enumerate() {
        if overload_over(core, Some(wload), rows, thr, resources) == 0.0 {
            return Ok(i);
        }
    }
    let delta = |core: &Vec<usize>| {
        overload_over(core, Some(wload), rows, thr, resources)
            - overload_over(core, None, rows, thr, resources)
    };
    let mut best = 0;
    let mut best_delta = delta(&cores[0]);
    for (i, core) in cores.iter().enumerate().skip(1) {
        let d = delta(core);
        if d < best_delta {
            best = i;
            best_delta = d;
        }
    }
    Ok(best)
}

/// Resource-aware pinning: the first core whose post-placement overload is
/// zero, otherwise the core whose overload increases the least (ties to the
/// lowest index).
pub fn ras_select_pinning(
    wload: usize,
    cores: &[Vec<usize>],
    rows: &[UtilizationVector],
    thr: f64,
) -> Result<usize, ScheduleError> {
    resource_select(wload, cores, rows, thr, &ResourceKind::ALL)
}

/// CPU-aware pinning: RAS with the overload sum restricted to the CPU column.
pub fn cas_select_pinning(
    wload: usize,
    cores: &[Vec<usize>],
    rows: &[UtilizationVector],
    thr: f64,
) -> Result<usize, ScheduleError> {
    resource_select(wload, cores, rows, thr, &[ResourceKind::Cpu])
}

/// Interference-aware pinning: the first core whose post-placement
/// interference is strictly below the threshold, otherwise the core with the
/// minimum post-placement interference (ties to the lowest index).
pub fn ias_select_pinning(
    wload: usize,
    cores: &[Vec<usize>],
    s: &SlowdownMatrix,
    interference_threshold: f64,
) -> Result<usize, ScheduleError> {
    if cores.is_empty() {
        return Err(ScheduleError::NoCores);
    }
    for (i, core) in cores.iter().enumerate() {
        if core_interference_with(core, wload, s) < interference_threshold {
            return Ok(i);
        }
    }
    let mut best = 0;
    let mut best_interference = core_interference_with(&cores[0], wload, s);
    for (i, core) in cores.iter().enumerate().skip(1) {
        let v = core_interference_with(core, wload, s);
        if v < best_interference {
            best = i;
            best_interference = v;
        }
    }
    Ok(best)
}

/// Per-core demanded utilization totals, accumulated with resource scope:
/// CPU lands on the pinned core, memory bandwidth on every core of the
/// pinned core's socket, disk and network I/O on every core of the server.
/// Tracks the resources the pinned workloads would ideally acquire, used to
/// report the oversubscription degree per resource.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceMap {
    sockets: Vec<Vec<usize>>,
    socket_of: Vec<usize>,
    totals: Vec<[f64; RESOURCE_COUNT]>,
}

impl ResourceMap {
    pub fn new(host: &HostModel) -> Self {
        ResourceMap {
            sockets: host.sockets.clone(),
            socket_of: host.socket_of.clone(),
            totals: vec![[0.0; RESOURCE_COUNT]; host.core_count],
        }
    }

    pub fn core_count(&self) -> usize {
        self.totals.len()
    }

    pub fn total(&self, core: usize, kind: ResourceKind) -> f64 {
        self.totals[core][kind.index()]
    }

    /// Adds one workload's demand, pinned to `core`, with scope fan-out.
    pub fn apply(&mut self, core: usize, u: &UtilizationVector) {
        self.fan_out(core, u, 1.0);
    }

    /// Removes a previously applied workload.
    pub fn remove(&mut self, core: usize, u: &UtilizationVector) {
        self.fan_out(core, u, -1.0);
    }

    fn fan_out(&mut self, core: usize, u: &UtilizationVector, sign: f64) {
        for kind in ResourceKind::ALL {
            let v = sign * u.get(kind);
            match kind.scope() {
                ResourceScope::CoreLocal => self.totals[core][kind.index()] += v,
                ResourceScope::SocketLocal => {
                    for &c in &self.sockets[self.socket_of[core]] {
                        self.totals[c][kind.index()] += v;
                    }
                }
                ResourceScope::ServerGlobal => {
                    for t in &mut self.totals {
                        t[kind.index()] += v;
                    }
                }
            }
        }
    }
}

/// Rebuilds the scoped per-core demand totals from scratch for a placement
/// given as (core, class) pairs.
pub fn update_resource_map(
    placement: &[(usize, usize)],
    rows: &[UtilizationVector],
    host: &HostModel,
) -> ResourceMap {
    let mut map = ResourceMap::new(host);
    for &(core, class) in placement {
        map.apply(core, &rows[class]);
    }
    map
}

fn scoped_overload_at(
    map: &ResourceMap,
    core: usize,
    extra: Option<&UtilizationVector>,
    thr: f64,
    resources: &[ResourceKind],
) -> f64 {
    resources
        .iter()
        .map(|&kind| {
            let mut total = map.total(core, kind);
            if let Some(u) = extra {
                total += u.get(kind);
            }
            (total - thr).max(0.0)
        })
        .sum()
}

fn scoped_resource_select(
    wload: usize,
    map: &ResourceMap,
    rows: &[UtilizationVector],
    thr: f64,
    resources: &[ResourceKind],
) -> Result<usize, ScheduleError> {
    let core_count = map.core_count();
    if core_count == 0 {
        return Err(ScheduleError::NoCores);
    }
    let u = &rows[wload];
    for core in 0..core_count {
        if scoped_overload_at(map, core, Some(u), thr, resources) == 0.0 {
            return Ok(core);
        }
    }
    let delta = |core: usize| {
        scoped_overload_at(map, core, Some(u), thr, resources)
            - scoped_overload_at(map, core, None, thr, resources)
    };
    let mut best = 0;
    let mut best_delta = delta(0);
    for core in 1..core_count {
        let d = delta(core);
        if d < best_delta {
            best = core;
            best_delta = d;
        }
    }
    Ok(best)
}

/// One workload instance as seen by the scheduler at a tick: its class, its
/// arrival ordinal, its CPU usage measured over the last monitoring window
/// and where it is currently pinned (if anywhere). Finished instances are
/// not passed to the scheduler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickInstance {
    pub instance_id: usize,
    pub class_id: usize,
    pub arrival_index: usize,
    pub measured_cpu: f64,
    pub pinned_core: Option<usize>,
}

/// Full placement produced by one scheduling tick.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickPlacement {
    /// instance id → core id, covering every instance handed in.
    pub assignments: BTreeMap<usize, usize>,
    /// Instances classified idle this tick (always empty under RRS).
    pub idle: BTreeSet<usize>,
}

impl TickPlacement {
    /// Per-core active sets in arrival order, for callers that want the
    /// core-state view of the assignment.
    pub fn core_states(&self, instances: &[TickInstance], core_count: usize) -> Vec<CoreState> {
        let mut cores: Vec<CoreState> = (0..core_count)
            .map(|core_id| CoreState { core_id, active_set: Vec::new() })
            .collect();
        let mut sorted: Vec<&TickInstance> = instances.iter().collect();
        sorted.sort_by_key(|i| (i.arrival_index, i.instance_id));
        for inst in sorted {
            if let Some(&core) = self.assignments.get(&inst.instance_id) {
                cores[core].active_set.push(inst.instance_id);
            }
        }
        cores
    }
}

/// One pass of the general scheduling loop.
///
/// Instances with measured CPU below the idle cutoff are pinned to the idle
/// core and contribute nothing to any overload or interference computation;
/// the remaining instances are re-placed from an empty slate in arrival
/// order, each one selected by the active policy with the previously placed
/// instances visible. RRS skips idle detection and keeps static placements.
pub fn schedule_tick(
    instances: &[TickInstance],
    profile: &WorkloadProfile,
    params: &SchedulerParams,
    host: &HostModel,
) -> Result<TickPlacement, ScheduleError> {
    params.validate()?;
    for inst in instances {
        if inst.class_id >= profile.len() {
            return Err(ScheduleError::UnknownClass {
                instance_id: inst.instance_id,
                class_id: inst.class_id,
                classes: profile.len(),
            });
        }
    }

    let mut placement = TickPlacement::default();

    if params.policy == Policy::Rrs {
        for inst in instances {
            let core = inst
                .pinned_core
                .unwrap_or_else(|| rrs_select_pinning(inst.arrival_index, host.core_count()));
            placement.assignments.insert(inst.instance_id, core);
        }
        return Ok(placement);
    }

    let rows = profile.utilization_rows();
    let mut running: Vec<&TickInstance> = Vec::new();
    for inst in instances {
        if inst.measured_cpu < params.idle_cpu_cutoff {
            placement.idle.insert(inst.instance_id);
            placement.assignments.insert(inst.instance_id, host.idle_core());
        } else {
            running.push(inst);
        }
    }
    running.sort_by_key(|i| (i.arrival_index, i.instance_id));

    let mut cores: Vec<Vec<usize>> = vec![Vec::new(); host.core_count()];
    let mut map = ResourceMap::new(host);
    for inst in running {
        let core = match params.policy {
            Policy::Ras if params.scoped_overload => {
                scoped_resource_select(inst.class_id, &map, &rows, params.thr, &ResourceKind::ALL)?
            }
            Policy::Cas if params.scoped_overload => {
                scoped_resource_select(inst.class_id, &map, &rows, params.thr, &[ResourceKind::Cpu])?
            }
            Policy::Ras => ras_select_pinning(inst.class_id, &cores, &rows, params.thr)?,
            Policy::Cas => cas_select_pinning(inst.class_id, &cores, &rows, params.thr)?,
            Policy::Ias => ias_select_pinning(
                inst.class_id,
                &cores,
                &profile.slowdown,
                params.interference_threshold,
            )?,
            Policy::Rrs => unreachable!("RRS handled above"),
        };
        cores[core].push(inst.class_id);
        if params.scoped_overload {
            map.apply(core, &rows[inst.class_id]);
        }
        placement.assignments.insert(inst.instance_id, core);
    }
    Ok(placement)
}
