//! Workload classes and the pairwise slowdown / utilization matrices that
//! parameterize the schedulers and the simulator ground truth.
//!
//! A profile is built offline: every class is measured in isolation and
//! co-pinned with every other class, giving the N×N slowdown matrix `S`
//! (S[i][j] = degradation of class i when sharing a core with class j) and
//! the N×4 utilization matrix `U` (per-class CPU, DiskIO, NetIO and memory
//! bandwidth demand). Profiles are static for the lifetime of a run.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of monitored resource metrics per class.
pub const RESOURCE_COUNT: usize = 4;

/// Interference threshold used by IAS by default, chosen close to the
/// average pairwise slowdown of a random co-scheduled pair. Kept separate
/// from [`derive_interference_threshold`], which returns the raw mean of
/// whatever matrix it is given.
pub const DEFAULT_INTERFERENCE_THRESHOLD: f64 = 1.5;

/// One of the four monitored resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceKind {
    Cpu,
    DiskIo,
    NetIo,
    MemBw,
}

/// Accounting scope of a resource when demand is mapped onto cores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceScope {
    /// Consumed on the pinned core only (CPU).
    CoreLocal,
    /// Shared by every core of the pinned core's socket (memory bandwidth).
    SocketLocal,
    /// Shared by every core of the server (DiskIO, NetIO).
    ServerGlobal,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; RESOURCE_COUNT] = [
        ResourceKind::Cpu,
        ResourceKind::DiskIo,
        ResourceKind::NetIo,
        ResourceKind::MemBw,
    ];

    /// Column index of this resource in a utilization row.
    pub fn index(self) -> usize {
        match self {
            ResourceKind::Cpu => 0,
            ResourceKind::DiskIo => 1,
            ResourceKind::NetIo => 2,
            ResourceKind::MemBw => 3,
        }
    }

    /// The scope mapping is fixed: CPU is core-local, memory bandwidth is
    /// socket-local, disk and network I/O are server-global.
    pub fn scope(self) -> ResourceScope {
        match self {
            ResourceKind::Cpu => ResourceScope::CoreLocal,
            ResourceKind::MemBw => ResourceScope::SocketLocal,
            ResourceKind::DiskIo | ResourceKind::NetIo => ResourceScope::ServerGlobal,
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ResourceKind::Cpu => "cpu",
            ResourceKind::DiskIo => "disk_io",
            ResourceKind::NetIo => "net_io",
            ResourceKind::MemBw => "mem_bw",
        };
        f.write_str(name)
    }
}

/// Per-class isolated resource demand, one fraction in [0, 1] per resource.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilizationVector {
    pub cpu: f64,
    pub disk_io: f64,
    pub net_io: f64,
    pub mem_bw: f64,
}

impl UtilizationVector {
    pub fn new(cpu: f64, disk_io: f64, net_io: f64, mem_bw: f64) -> Self {
        Self { cpu, disk_io, net_io, mem_bw }
    }

    pub const ZERO: UtilizationVector =
        UtilizationVector { cpu: 0.0, disk_io: 0.0, net_io: 0.0, mem_bw: 0.0 };

    pub fn get(&self, kind: ResourceKind) -> f64 {
        match kind {
            ResourceKind::Cpu => self.cpu,
            ResourceKind::DiskIo => self.disk_io,
            ResourceKind::NetIo => self.net_io,
            ResourceKind::MemBw => self.mem_bw,
        }
    }

    pub fn as_array(&self) -> [f64; RESOURCE_COUNT] {
        [self.cpu, self.disk_io, self.net_io, self.mem_bw]
    }

    fn validate(&self, path: &str) -> Result<(), ProfileError> {
        for kind in ResourceKind::ALL {
            let v = self.get(kind);
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(ProfileError::Invalid {
                    path: format!("{path}.{kind}"),
                    message: format!("utilization {v} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

/// Broad behavioural category of a workload class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    Batch,
    LatencyCritical,
    Streaming,
}

impl WorkloadKind {
    pub const ALL: [WorkloadKind; 3] =
        [WorkloadKind::Batch, WorkloadKind::LatencyCritical, WorkloadKind::Streaming];
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            WorkloadKind::Batch => "batch",
            WorkloadKind::LatencyCritical => "latency_critical",
            WorkloadKind::Streaming => "streaming",
        };
        f.write_str(name)
    }
}

/// Whether the class's native performance metric improves downward
/// (completion time) or upward (requests/s, kbps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricOrientation {
    Cost,
    Throughput,
}

/// Activity state driven by a class's phase pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseState {
    Active,
    Idle,
}

/// One segment of a phase pattern. Patterns repeat cyclically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub duration: f64,
    pub state: PhaseState,
}

impl Phase {
    pub fn active(duration: f64) -> Self {
        Phase { duration, state: PhaseState::Active }
    }

    pub fn idle(duration: f64) -> Self {
        Phase { duration, state: PhaseState::Idle }
    }
}

/// Validates a phase pattern: non-empty, strictly positive durations.
pub fn validate_phases(phases: &[Phase], path: &str) -> Result<(), ProfileError> {
    if phases.is_empty() {
        return Err(ProfileError::Invalid {
            path: path.to_string(),
            message: "phase pattern must contain at least one phase".to_string(),
        });
    }
    for (i, phase) in phases.iter().enumerate() {
        if !phase.duration.is_finite() || phase.duration <= 0.0 {
            return Err(ProfileError::Invalid {
                path: format!("{path}[{i}].duration"),
                message: format!("phase duration {} must be strictly positive", phase.duration),
            });
        }
    }
    Ok(())
}

/// A profiled application class.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadClass {
    /// Index of this class in the profile's class list.
    pub class_id: usize,
    pub name: String,
    pub kind: WorkloadKind,
    pub metric_orientation: MetricOrientation,
    /// Isolated demand row of the utilization matrix U.
    pub utilization: UtilizationVector,
    /// Activity pattern, repeated cyclically. A plain batch job is a single
    /// active phase.
    pub phase_pattern: Vec<Phase>,
    /// Seconds of isolated-execution work; batch classes only.
    pub service_demand: Option<f64>,
}

impl WorkloadClass {
    pub fn is_batch(&self) -> bool {
        self.kind == WorkloadKind::Batch
    }

    fn validate(&self, path: &str) -> Result<(), ProfileError> {
        self.utilization.validate(&format!("{path}.utilization"))?;
        validate_phases(&self.phase_pattern, &format!("{path}.phases"))?;
        match (self.kind, self.service_demand) {
            (WorkloadKind::Batch, Some(d)) if d.is_finite() && d > 0.0 => {}
            (WorkloadKind::Batch, Some(d)) => {
                return Err(ProfileError::Invalid {
                    path: format!("{path}.service_demand"),
                    message: format!("service demand {d} must be strictly positive"),
                });
            }
            (WorkloadKind::Batch, None) => {
                return Err(ProfileError::Invalid {
                    path: format!("{path}.service_demand"),
                    message: "batch classes require a service demand".to_string(),
                });
            }
            (_, Some(_)) => {
                return Err(ProfileError::Invalid {
                    path: format!("{path}.service_demand"),
                    message: "service demand is only meaningful for batch classes".to_string(),
                });
            }
            (_, None) => {}
        }
        if self.kind == WorkloadKind::Batch
            && !self.phase_pattern.iter().any(|p| p.state == PhaseState::Active)
        {
            return Err(ProfileError::Invalid {
                path: format!("{path}.phases"),
                message: "batch classes need at least one active phase".to_string(),
            });
        }
        Ok(())
    }
}

/// N×N pairwise slowdown ratios, row-major. `get(i, j)` is the slowdown of
/// class i when co-pinned with class j; every entry is ≥ 1 after orientation
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowdownMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SlowdownMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ProfileError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ProfileError::DimensionMismatch {
                    rows: n,
                    cols: row.len(),
                    classes: n,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 1.0 {
                    return Err(ProfileError::Invalid {
                        path: format!("slowdown[{i}][{j}]"),
                        message: format!("slowdown {v} must be finite and ≥ 1.0"),
                    });
                }
                entries.push(v);
            }
        }
        Ok(SlowdownMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.entries[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    /// Arithmetic mean over all N² entries, diagonal included.
    pub fn mean(&self) -> f64 {
        self.entries.iter().sum::<f64>() / (self.n * self.n) as f64
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One raw profiling measurement. `companion_class_id == None` marks an
/// isolated run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceSample {
    pub class_id: usize,
    pub companion_class_id: Option<usize>,
    /// Raw metric in the class's native unit (seconds, req/s or kbps).
    pub value: f64,
}

/// Errors from profile construction, validation and document I/O.
#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse profile document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize profile document: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("slowdown matrix is {rows}×{cols} but the profile defines {classes} classes")]
    DimensionMismatch { rows: usize, cols: usize, classes: usize },
    #[error("missing {} sample for class {class_id}{}", if companion_class_id.is_some() { "co-location" } else { "isolated" }, companion_class_id.map(|c| format!(" with companion {c}")).unwrap_or_default())]
    MissingSample { class_id: usize, companion_class_id: Option<usize> },
    #[error("duplicate sample for class {class_id} (companion {companion_class_id:?})")]
    DuplicateSample { class_id: usize, companion_class_id: Option<usize> },
    #[error("sample for class {class_id} (companion {companion_class_id:?}) has nonpositive value {value}")]
    InvalidSample { class_id: usize, companion_class_id: Option<usize>, value: f64 },
    #[error("sample references unknown class {class_id} (profile has {classes} classes)")]
    UnknownClass { class_id: usize, classes: usize },
}

/// Cost-oriented view of a raw sample: completion-time-like metrics are used
/// as measured, throughput metrics are inverted so that a larger value always
/// means worse performance.
fn to_cost(orientation: MetricOrientation, value: f64) -> f64 {
    match orientation {
        MetricOrientation::Cost => value,
        MetricOrientation::Throughput => 1.0 / value,
    }
}

/// Builds the pairwise slowdown matrix from raw profiling samples.
///
/// Expects one isolated sample per class and one co-located sample per
/// ordered pair (including a class paired with another instance of itself).
/// Entries come out as cost(i with j) / cost(i isolated); measured speedups
/// (ratio < 1) are clamped to 1.0.
pub fn build_slowdown_matrix(
    samples: &[PerformanceSample],
    classes: &[WorkloadClass],
) -> Result<SlowdownMatrix, ProfileError> {
    let n = classes.len();
    let mut isolated: Vec<Option<f64>> = vec![None; n];
    let mut paired: Vec<Option<f64>> = vec![None; n * n];

    for sample in samples {
        if sample.class_id >= n {
            return Err(ProfileError::UnknownClass { class_id: sample.class_id, classes: n });
        }
        if let Some(companion) = sample.companion_class_id {
            if companion >= n {
                return Err(ProfileError::UnknownClass { class_id: companion, classes: n });
            }
        }
        if !sample.value.is_finite() || sample.value <= 0.0 {
            return Err(ProfileError::InvalidSample {
                class_id: sample.class_id,
                companion_class_id: sample.companion_class_id,
                value: sample.value,
            });
        }
        let cost = to_cost(classes[sample.class_id].metric_orientation, sample.value);
        let slot = match sample.companion_class_id {
            None => &mut isolated[sample.class_id],
            Some(companion) => &mut paired[sample.class_id * n + companion],
        };
        if slot.is_some() {
            return Err(ProfileError::DuplicateSample {
                class_id: sample.class_id,
                companion_class_id: sample.companion_class_id,
            });
        }
        *slot = Some(cost);
    }

    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        let base = isolated[i].ok_or(ProfileError::MissingSample {
            class_id: i,
            companion_class_id: None,
        })?;
        for j in 0..n {
            let with = paired[i * n + j].ok_or(ProfileError::MissingSample {
                class_id: i,
                companion_class_id: Some(j),
            })?;
            rows[i][j] = (with / base).max(1.0);
        }
    }
    SlowdownMatrix::from_rows(&rows)
}

/// Mean of all N² slowdown entries, diagonal included — the profile-derived
/// estimate of the interference threshold.
pub fn derive_interference_threshold(s: &SlowdownMatrix) -> f64 {
    s.mean()
}

/// A loaded, validated profile: the class set plus its slowdown matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadProfile {
    pub classes: Vec<WorkloadClass>,
    pub slowdown: SlowdownMatrix,
}

impl WorkloadProfile {
    pub fn new(
        classes: Vec<WorkloadClass>,
        slowdown: SlowdownMatrix,
    ) -> Result<Self, ProfileError> {
        if slowdown.n() != classes.len() {
            return Err(ProfileError::DimensionMismatch {
                rows: slowdown.n(),
                cols: slowdown.n(),
                classes: classes.len(),
            });
        }
        let mut names = BTreeSet::new();
        for (i, class) in classes.iter().enumerate() {
            if class.class_id != i {
                return Err(ProfileError::Invalid {
                    path: format!("classes[{i}].class_id"),
                    message: format!("class id {} does not match position {i}", class.class_id),
                });
            }
            class.validate(&format!("classes[{i}]"))?;
            if !names.insert(class.name.clone()) {
                return Err(ProfileError::Invalid {
                    path: format!("classes[{i}].name"),
                    message: format!("duplicate class name {:?}", class.name),
                });
            }
        }
        Ok(WorkloadProfile { classes, slowdown })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, class_id: usize) -> &WorkloadClass {
        &self.classes[class_id]
    }

    pub fn class_by_name(&self, name: &str) -> Option<&WorkloadClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Per-class utilization rows, indexed by class id.
    pub fn utilization_rows(&self) -> Vec<UtilizationVector> {
        self.classes.iter().map(|c| c.utilization).collect()
    }

    /// Parses and validates a profile document.
    pub fn from_toml_str(text: &str) -> Result<Self, ProfileError> {
        let doc: ProfileDocument = toml::from_str(text)?;
        doc.into_profile()
    }

    pub fn from_path(path: &Path) -> Result<Self, ProfileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ProfileError> {
        Ok(toml::to_string_pretty(&ProfileDocument::from_profile(self))?)
    }

    /// The bundled default profile: eight synthetic classes modelled on
    /// common cloud benchmarks. The values are configuration, not measured
    /// ground truth.
    pub fn default_fixture() -> Self {
        Self::from_toml_str(DEFAULT_FIXTURE_TOML)
            .expect("bundled default profile fixture must be valid")
    }
}

/// Bundled default profile document; see `fixtures/default.toml`.
pub const DEFAULT_FIXTURE_TOML: &str = include_str!("../fixtures/default.toml");

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDocument {
    classes: Vec<ClassEntry>,
    slowdown: SlowdownEntry,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    name: String,
    kind: WorkloadKind,
    metric: MetricOrientation,
    utilization: UtilizationVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    service_demand: Option<f64>,
    /// Defaults to a single always-active phase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phases: Option<Vec<Phase>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlowdownEntry {
    rows: Vec<Vec<f64>>,
}

impl ProfileDocument {
    fn into_profile(self) -> Result<WorkloadProfile, ProfileError> {
        let class_count = self.classes.len();
        if self.slowdown.rows.len() != class_count
            || self.slowdown.rows.iter().any(|r| r.len() != class_count)
        {
            let cols = self.slowdown.rows.first().map_or(0, |r| r.len());
            return Err(ProfileError::DimensionMismatch {
                rows: self.slowdown.rows.len(),
                cols,
                classes: class_count,
            });
        }
        let classes = self
            .classes
            .into_iter()
            .enumerate()
            .map(|(class_id, entry)| {
                let default_phase = match entry.service_demand {
                    Some(d) if d > 0.0 => vec![Phase::active(d)],
                    _ => vec![Phase::active(1.0)],
                };
                WorkloadClass {
                    class_id,
                    name: entry.name,
                    kind: entry.kind,
                    metric_orientation: entry.metric,
                    utilization: entry.utilization,
                    phase_pattern: entry.phases.unwrap_or(default_phase),
                    service_demand: entry.service_demand,
                }
            })
            .collect();
        let slowdown = SlowdownMatrix::from_rows(&self.slowdown.rows)?;
        WorkloadProfile::new(classes, slowdown)
    }

    fn from_profile(profile: &WorkloadProfile) -> Self {
        ProfileDocument {
            classes: profile
                .classes
                .iter()
                .map(|c| ClassEntry {
                    name: c.name.clone(),
                    kind: c.kind,
                    metric: c.metric_orientation,
                    utilization: c.utilization,
                    service_demand: c.service_demand,
                    phases: Some(c.phase_pattern.clone()),
                })
                .collect(),
            slowdown: SlowdownEntry { rows: profile.slowdown.rows() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cost_class(class_id: usize, name: &str) -> WorkloadClass {
        WorkloadClass {
            class_id,
            name: name.to_string(),
            kind: WorkloadKind::Batch,
            metric_orientation: MetricOrientation::Cost,
            utilization: UtilizationVector::new(0.5, 0.1, 0.1, 0.1),
            phase_pattern: vec![Phase::active(100.0)],
            service_demand: Some(100.0),
        }
    }

    fn throughput_class(class_id: usize, name: &str) -> WorkloadClass {
        WorkloadClass {
            kind: WorkloadKind::Streaming,
            metric_orientation: MetricOrientation::Throughput,
            service_demand: None,
            ..cost_class(class_id, name)
        }
    }

    fn full_samples(values: impl Fn(usize, Option<usize>) -> f64, n: usize) -> Vec<PerformanceSample> {
        let mut samples = Vec::new();
        for i in 0..n {
            samples.push(PerformanceSample {
                class_id: i,
                companion_class_id: None,
                value: values(i, None),
            });
            for j in 0..n {
                samples.push(PerformanceSample {
                    class_id: i,
                    companion_class_id: Some(j),
                    value: values(i, Some(j)),
                });
            }
        }
        samples
    }

    #[test]
    fn slowdown_ratio_for_cost_metric() {
        let classes = vec![cost_class(0, "a"), cost_class(1, "b")];
        let samples = full_samples(
            |i, companion| match (i, companion) {
                (0, None) => 100.0,
                (0, Some(1)) => 150.0,
                (_, _) => 100.0,
            },
            2,
        );
        let s = build_slowdown_matrix(&samples, &classes).unwrap();
        assert_eq!(s.get(0, 1), 1.5);
        assert_eq!(s.get(0, 0), 1.0);
    }

    #[test]
    fn slowdown_ratio_for_throughput_metric_is_reciprocal() {
        let classes = vec![throughput_class(0, "a"), cost_class(1, "b")];
        let samples = full_samples(
            |i, companion| match (i, companion) {
                (0, None) => 200.0,
                (0, Some(1)) => 100.0,
                (0, Some(0)) => 200.0,
                (_, _) => 100.0,
            },
            2,
        );
        let s = build_slowdown_matrix(&samples, &classes).unwrap();
        assert_eq!(s.get(0, 1), 2.0);
        assert_eq!(s.get(0, 0), 1.0);
    }

    #[test]
    fn measured_speedups_clamp_to_one() {
        let classes = vec![cost_class(0, "a"), cost_class(1, "b")];
        let samples = full_samples(
            |i, companion| match (i, companion) {
                (0, Some(1)) => 90.0, // faster than isolated
                _ => 100.0,
            },
            2,
        );
        let s = build_slowdown_matrix(&samples, &classes).unwrap();
        assert_eq!(s.get(0, 1), 1.0);
    }

    #[test]
    fn missing_pair_is_reported_with_the_pair() {
        let classes = vec![cost_class(0, "a"), cost_class(1, "b")];
        let mut samples = full_samples(|_, _| 100.0, 2);
        samples.retain(|s| !(s.class_id == 1 && s.companion_class_id == Some(0)));
        let err = build_slowdown_matrix(&samples, &classes).unwrap_err();
        match err {
            ProfileError::MissingSample { class_id: 1, companion_class_id: Some(0) } => {}
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn nonpositive_sample_is_rejected() {
        let classes = vec![cost_class(0, "a")];
        let samples = vec![PerformanceSample { class_id: 0, companion_class_id: None, value: 0.0 }];
        assert!(matches!(
            build_slowdown_matrix(&samples, &classes),
            Err(ProfileError::InvalidSample { value, .. }) if value == 0.0
        ));
    }

    #[test]
    fn threshold_of_uniform_matrix() {
        let s = SlowdownMatrix::from_rows(&vec![vec![1.0; 3]; 3]).unwrap();
        assert_eq!(derive_interference_threshold(&s), 1.0);
    }

    #[test]
    fn threshold_of_small_matrix() {
        // sum 6.0 over 4 entries
        let s = SlowdownMatrix::from_rows(&[vec![1.0, 2.0], vec![1.5, 1.5]]).unwrap();
        assert_eq!(derive_interference_threshold(&s), 1.5);
    }

    #[test]
    fn default_fixture_loads_with_eight_classes() {
        let profile = WorkloadProfile::default_fixture();
        assert_eq!(profile.len(), 8);
        assert_eq!(profile.slowdown.n(), 8);
        assert!(profile.classes.iter().any(|c| c.kind == WorkloadKind::Batch));
        assert!(profile.classes.iter().any(|c| c.kind == WorkloadKind::LatencyCritical));
        assert!(profile.classes.iter().any(|c| c.kind == WorkloadKind::Streaming));
        // threshold derived from the fixture stays inside the matrix range
        let t = derive_interference_threshold(&profile.slowdown);
        assert!(t >= profile.slowdown.min_entry() && t <= profile.slowdown.max_entry());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut doc: toml::Table = toml::from_str(DEFAULT_FIXTURE_TOML).unwrap();
        let rows = doc["slowdown"]["rows"].as_array_mut().unwrap();
        rows.pop(); // 7×8 with 8 classes
        let text = toml::to_string(&doc).unwrap();
        let err = WorkloadProfile::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, ProfileError::DimensionMismatch { rows: 7, classes: 8, .. }));
    }

    #[test]
    fn out_of_range_utilization_is_rejected_with_path() {
        let mut doc: toml::Table = toml::from_str(DEFAULT_FIXTURE_TOML).unwrap();
        doc["classes"][0]["utilization"]["cpu"] = toml::Value::Float(1.3);
        let text = toml::to_string(&doc).unwrap();
        let err = WorkloadProfile::from_toml_str(&text).unwrap_err();
        match err {
            ProfileError::Invalid { path, .. } => assert_eq!(path, "classes[0].utilization.cpu"),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{DEFAULT_FIXTURE_TOML}\n[extra]\nfoo = 1\n");
        assert!(matches!(WorkloadProfile::from_toml_str(&text), Err(ProfileError::Parse(_))));
    }

    #[test]
    fn batch_class_without_demand_is_rejected() {
        let mut doc: toml::Table = toml::from_str(DEFAULT_FIXTURE_TOML).unwrap();
        let entry = doc["classes"][0].as_table_mut().unwrap();
        assert_eq!(entry["kind"].as_str(), Some("batch"));
        entry.remove("service_demand");
        let text = toml::to_string(&doc).unwrap();
        assert!(matches!(
            WorkloadProfile::from_toml_str(&text),
            Err(ProfileError::Invalid { path, .. }) if path.ends_with("service_demand")
        ));
    }

    #[test]
    fn fixture_round_trips_exactly() {
        let profile = WorkloadProfile::default_fixture();
        let text = profile.to_toml_string().unwrap();
        let reloaded = WorkloadProfile::from_toml_str(&text).unwrap();
        assert_eq!(profile, reloaded);
        // serializing again yields identical bytes
        assert_eq!(text, reloaded.to_toml_string().unwrap());
    }
}
