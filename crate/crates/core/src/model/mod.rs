//! Problem instances, schedules, validation and instance generation.
//!
//! Instances are plain data: jobs with positive rational weights, tasks with
//! positive integral processing times, and optional non-negative integral
//! shuffle volumes. All schedule times in this crate are integers —
//! algorithms never place a task at a fractional time — which keeps every
//! feasibility check exact.

pub mod generate;
mod json;
mod schedule;
pub mod validate;

pub use generate::{generate_instance, GeneratorConfig};
pub use json::{canonical_instance_json, instance_digest, load_instance, parse_instance,
               parse_schedule, save_instance, schedule_json};
pub use schedule::{MergedSchedule, PhaseSchedule, Placement, ScheduledItem};
pub use validate::{validate_phase_schedule, validate_schedule, ValidationMode,
                   ValidationReport, Violation, ViolationKind};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

/// Schedule times and processing times. Integral throughout.
pub type Time = i64;

/// Job identifiers as given in the input; unique within an instance.
pub type JobId = u64;

/// Job weights (and objective values) are exact rationals.
pub type Weight = BigRational;

/// The two task phases of a job.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Map,
    Reduce,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Map => "map",
            Phase::Reduce => "reduce",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A single task: one processing time per processor of its phase's pool,
/// indexed by pool position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub times: Vec<Time>,
}

impl Task {
    /// Processing time on pool processor `proc`.
    pub fn time_on(&self, proc: usize) -> Time {
        self.times[proc]
    }

    /// The largest processing time over the pool.
    pub fn max_time(&self) -> Time {
        self.times.iter().copied().max().unwrap_or(0)
    }
}

/// A job: a weight, its map and reduce tasks, and optionally a shuffle
/// matrix `shuffle[k][r]` holding the volume that map task `k` sends to
/// reduce task `r`. Zero volumes are meaningful — the transfer still has to
/// be placed (instantaneously) and still orders the reduce task after the
/// map task.
#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub id: JobId,
    pub weight: Weight,
    pub map_tasks: Vec<Task>,
    pub reduce_tasks: Vec<Task>,
    pub shuffle: Option<Vec<Vec<Time>>>,
}

impl Job {
    pub fn tasks(&self, phase: Phase) -> &[Task] {
        match phase {
            Phase::Map => &self.map_tasks,
            Phase::Reduce => &self.reduce_tasks,
        }
    }

    /// Total shuffle volume feeding reduce task `r` (0 if the job has no
    /// shuffle matrix).
    pub fn shuffle_total(&self, r: usize) -> Time {
        match &self.shuffle {
            Some(rows) => rows.iter().map(|row| row[r]).sum(),
            None => 0,
        }
    }
}

/// A reference to one task of an instance, usable across schedules and
/// reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskKey {
    pub job: JobId,
    pub phase: Phase,
    pub index: usize,
}

impl std::fmt::Display for TaskKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}[{}] of job {}", self.phase, self.index, self.job)
    }
}

/// A scheduling instance.
///
/// `map_procs` and `reduce_procs` are the processor pools for the two
/// phases, identified by arbitrary non-empty strings. When a processor id
/// appears in both pools the pools are *not disjoint*: map and reduce tasks
/// then compete for that processor, and `pools_disjoint` is false.
/// `input_procs`, when present, pairs one dedicated input processor with
/// each reduce processor (by position); shuffle transfers can then be placed
/// on the input side instead of occupying the reduce processors.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub jobs: Vec<Job>,
    pub map_procs: Vec<String>,
    pub reduce_procs: Vec<String>,
    pub input_procs: Option<Vec<String>>,
    pub pools_disjoint: bool,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
}

impl Instance {
    /// Builds an instance and checks every structural invariant; this is the
    /// only way to obtain one, so downstream code may rely on the
    /// invariants.
    pub fn new(
        jobs: Vec<Job>,
        map_procs: Vec<String>,
        reduce_procs: Vec<String>,
        input_procs: Option<Vec<String>>,
    ) -> Result<Self, ModelError> {
        let map_set: BTreeSet<&str> = map_procs.iter().map(|s| s.as_str()).collect();
        let red_set: BTreeSet<&str> = reduce_procs.iter().map(|s| s.as_str()).collect();
        let pools_disjoint = map_set.is_disjoint(&red_set);
        let inst = Instance { jobs, map_procs, reduce_procs, input_procs, pools_disjoint };
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidInstance(msg));
        if self.jobs.is_empty() {
            return fail("an instance needs at least one job".into());
        }
        check_pool("map_processors", &self.map_procs)?;
        check_pool("reduce_processors", &self.reduce_procs)?;
        if let Some(input) = &self.input_procs {
            check_pool("input_processors", input)?;
            if input.len() != self.reduce_procs.len() {
                return fail(format!(
                    "input_processors must pair 1:1 with reduce_processors \
                     (got {} input, {} reduce)",
                    input.len(),
                    self.reduce_procs.len()
                ));
            }
            // Input processors are physically separate hardware; an id shared
            // with either compute pool would make two pools one machine.
            for id in input {
                if self.map_procs.contains(id) || self.reduce_procs.contains(id) {
                    return fail(format!(
                        "input processor {id:?} also appears in a compute pool"
                    ));
                }
            }
        }

        let mut seen = BTreeSet::new();
        let with_shuffle = self.jobs[0].shuffle.is_some();
        for job in &self.jobs {
            let ctx = format!("job {}", job.id);
            if !seen.insert(job.id) {
                return fail(format!("duplicate job id {}", job.id));
            }
            if !job.weight.is_positive() {
                return fail(format!("{ctx}: weight must be positive"));
            }
            if job.map_tasks.is_empty() || job.reduce_tasks.is_empty() {
                return fail(format!("{ctx}: needs at least one map and one reduce task"));
            }
            for (phase, pool) in [(Phase::Map, &self.map_procs), (Phase::Reduce, &self.reduce_procs)] {
                for (idx, task) in job.tasks(phase).iter().enumerate() {
                    if task.times.len() != pool.len() {
                        return fail(format!(
                            "{ctx}: {phase} task {idx} must give a time for each of the \
                             {} pool processors (got {})",
                            pool.len(),
                            task.times.len()
                        ));
                    }
                    if let Some(&bad) = task.times.iter().find(|&&t| t < 1) {
                        return fail(format!(
                            "{ctx}: {phase} task {idx} has non-positive processing time {bad}"
                        ));
                    }
                }
            }
            if job.shuffle.is_some() != with_shuffle {
                return fail(
                    "either all jobs carry shuffle_times or none do".into(),
                );
            }
            if let Some(rows) = &job.shuffle {
                if rows.len() != job.map_tasks.len() {
                    return fail(format!(
                        "{ctx}: shuffle_times needs one row per map task \
                         (got {} rows for {} map tasks)",
                        rows.len(),
                        job.map_tasks.len()
                    ));
                }
                for (k, row) in rows.iter().enumerate() {
                    if row.len() != job.reduce_tasks.len() {
                        return fail(format!(
                            "{ctx}: shuffle_times row {k} needs one entry per reduce task \
                             (got {} entries for {} reduce tasks)",
                            row.len(),
                            job.reduce_tasks.len()
                        ));
                    }
                    if let Some(&bad) = row.iter().find(|&&t| t < 0) {
                        return fail(format!("{ctx}: negative shuffle volume {bad}"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn pool(&self, phase: Phase) -> &[String] {
        match phase {
            Phase::Map => &self.map_procs,
            Phase::Reduce => &self.reduce_procs,
        }
    }

    /// True when every job carries a shuffle matrix.
    pub fn has_shuffle(&self) -> bool {
        self.jobs[0].shuffle.is_some()
    }

    pub fn job(&self, id: JobId) -> Option<&Job> {
        self.jobs.iter().find(|j| j.id == id)
    }

    /// All tasks of one phase in canonical order: jobs in instance order,
    /// tasks by index.
    pub fn phase_tasks(&self, phase: Phase) -> Vec<TaskKey> {
        let mut out = Vec::new();
        for job in &self.jobs {
            for index in 0..job.tasks(phase).len() {
                out.push(TaskKey { job: job.id, phase, index });
            }
        }
        out
    }

    /// Processing-time vector of a task, indexed by pool position.
    pub fn task_times(&self, key: TaskKey) -> &[Time] {
        let job = self.job(key.job).expect("task key references a job of this instance");
        &job.tasks(key.phase)[key.index].times
    }

    /// Weighted sum of the given per-job completion times over all jobs of
    /// the instance. Panics if a job is missing from the map, as that is
    /// always an internal error.
    pub fn weighted_completion(
        &self,
        completion: &std::collections::BTreeMap<JobId, Time>,
    ) -> Weight {
        let mut total = BigRational::zero();
        for job in &self.jobs {
            let c = completion
                .get(&job.id)
                .unwrap_or_else(|| panic!("no completion time for job {}", job.id));
            total += &job.weight * BigRational::from_integer(BigInt::from(*c));
        }
        total
    }
}

fn check_pool(name: &str, pool: &[String]) -> Result<(), ModelError> {
    if pool.is_empty() {
        return Err(ModelError::InvalidInstance(format!("{name} must not be empty")));
    }
    let mut seen = BTreeSet::new();
    for id in pool {
        if id.is_empty() {
            return Err(ModelError::InvalidInstance(format!(
                "{name} contains an empty processor id"
            )));
        }
        if !seen.insert(id.as_str()) {
            return Err(ModelError::InvalidInstance(format!(
                "{name} contains duplicate processor id {id:?}"
            )));
        }
    }
    Ok(())
}

/// Parses a rational from `"p"` or `"p/q"` (q > 0 after reduction).
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let parse_int = |t: &str| -> Result<BigInt, String> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| format!("invalid integer {t:?} in rational"))
    };
    let r = match s.split_once('/') {
        None => BigRational::from_integer(parse_int(s)?),
        Some((p, q)) => {
            let den = parse_int(q)?;
            if den.is_zero() {
                return Err(format!("zero denominator in rational {s:?}"));
            }
            BigRational::new(parse_int(p)?, den)
        }
    };
    Ok(r)
}

/// Canonical textual form of a rational: `"p"` when integral, else `"p/q"`
/// with q > 0 and gcd(p, q) = 1.
pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
