//! Canonical JSON (de)serialization of instances and schedules.
//!
//! The canonical form has object keys sorted, two-space indentation, a
//! trailing newline and no floating-point numbers: weights are JSON
//! integers or `"p/q"` strings, objectives are always rational strings,
//! and every time value is an integer. `save(load(x))` is a fixpoint, so
//! canonical files round-trip byte-identically.

use super::schedule::{RawPlacement, RawSchedule};
use super::{
    rational_string, Instance, Job, JobId, MergedSchedule, ModelError, Task, Time, Weight,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct RawInstance {
    jobs: Vec<RawJob>,
    map_processors: Vec<String>,
    reduce_processors: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_processors: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RawJob {
    id: JobId,
    weight: Value,
    map_tasks: Vec<RawTask>,
    reduce_tasks: Vec<RawTask>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shuffle_times: Option<Vec<Vec<Time>>>,
}

#[derive(Serialize, Deserialize)]
struct RawTask {
    proc_times: BTreeMap<String, Time>,
}

fn weight_to_value(w: &Weight) -> Value {
    if w.denom().is_one() {
        if let Ok(n) = u64::try_from(w.numer().clone()) {
            return Value::from(n);
        }
    }
    Value::String(rational_string(w))
}

fn weight_from_value(v: &Value) -> Result<Weight, String> {
    match v {
        Value::Number(n) => {
            let i = n
                .as_u64()
                .ok_or_else(|| format!("weight {n} must be a positive integer or a \"p/q\" string"))?;
            Ok(BigRational::from_integer(BigInt::from(i)))
        }
        Value::String(s) => super::parse_rational(s),
        other => Err(format!("weight must be an integer or a \"p/q\" string, got {other}")),
    }
}

fn task_to_raw(task: &Task, pool: &[String]) -> RawTask {
    let proc_times = pool
        .iter()
        .cloned()
        .zip(task.times.iter().copied())
        .collect();
    RawTask { proc_times }
}

fn task_from_raw(raw: &RawTask, pool: &[String], ctx: &str) -> Result<Task, ModelError> {
    if raw.proc_times.len() != pool.len() {
        return Err(ModelError::InvalidInstance(format!(
            "{ctx}: proc_times must list exactly the pool's processors"
        )));
    }
    let mut times = Vec::with_capacity(pool.len());
    for id in pool {
        match raw.proc_times.get(id) {
            Some(&t) => times.push(t),
            None => {
                return Err(ModelError::InvalidInstance(format!(
                    "{ctx}: proc_times is missing processor {id:?}"
                )))
            }
        }
    }
    Ok(Task { times })
}

fn instance_to_raw(inst: &Instance) -> RawInstance {
    RawInstance {
        jobs: inst
            .jobs
            .iter()
            .map(|job| RawJob {
                id: job.id,
                weight: weight_to_value(&job.weight),
                map_tasks: job.map_tasks.iter().map(|t| task_to_raw(t, &inst.map_procs)).collect(),
                reduce_tasks: job
                    .reduce_tasks
                    .iter()
                    .map(|t| task_to_raw(t, &inst.reduce_procs))
                    .collect(),
                shuffle_times: job.shuffle.clone(),
            })
            .collect(),
        map_processors: inst.map_procs.clone(),
        reduce_processors: inst.reduce_procs.clone(),
        input_processors: inst.input_procs.clone(),
    }
}

fn instance_from_raw(raw: RawInstance) -> Result<Instance, ModelError> {
    let mut jobs = Vec::with_capacity(raw.jobs.len());
    for rj in &raw.jobs {
        let ctx = format!("job {}", rj.id);
        let weight = weight_from_value(&rj.weight)
            .map_err(|e| ModelError::InvalidInstance(format!("{ctx}: {e}")))?;
        let map_tasks = rj
            .map_tasks
            .iter()
            .enumerate()
            .map(|(i, t)| task_from_raw(t, &raw.map_processors, &format!("{ctx}, map task {i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let reduce_tasks = rj
            .reduce_tasks
            .iter()
            .enumerate()
            .map(|(i, t)| {
                task_from_raw(t, &raw.reduce_processors, &format!("{ctx}, reduce task {i}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        jobs.push(Job {
            id: rj.id,
            weight,
            map_tasks,
            reduce_tasks,
            shuffle: rj.shuffle_times.clone(),
        });
    }
    Instance::new(jobs, raw.map_processors, raw.reduce_processors, raw.input_processors)
}

/// Renders any serializable value in the canonical layout (sorted keys,
/// two-space indent, trailing newline).
fn canonical_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, ModelError> {
    // Going through `Value` sorts object keys: serde_json's map is a BTreeMap.
    let value: Value = serde_json::to_value(value)?;
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Canonical JSON of an instance.
pub fn canonical_instance_json(inst: &Instance) -> Vec<u8> {
    canonical_bytes(&instance_to_raw(inst)).expect("instances always serialize")
}

/// Hex SHA-256 of the canonical JSON; the identity of an instance.
pub fn instance_digest(inst: &Instance) -> String {
    let hash = Sha256::digest(canonical_instance_json(inst));
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses an instance from JSON bytes and checks all structural invariants.
pub fn parse_instance(bytes: &[u8]) -> Result<Instance, ModelError> {
    let raw: RawInstance = serde_json::from_slice(bytes)?;
    instance_from_raw(raw)
}

pub fn load_instance(path: &Path) -> Result<Instance, ModelError> {
    parse_instance(&std::fs::read(path)?)
}

pub fn save_instance(path: &Path, inst: &Instance) -> Result<(), ModelError> {
    std::fs::write(path, canonical_instance_json(inst))?;
    Ok(())
}

/// Canonical JSON of a merged schedule.
pub fn schedule_json(sched: &MergedSchedule) -> Vec<u8> {
    let raw = RawSchedule {
        placements: sched.placements.iter().map(RawPlacement::from).collect(),
        job_completion: sched
            .job_completion
            .iter()
            .map(|(job, c)| (job.to_string(), *c))
            .collect(),
        objective: rational_string(&sched.objective),
    };
    canonical_bytes(&raw).expect("schedules always serialize")
}

/// Parses a merged schedule from JSON bytes. Structural parse only; use
/// [`super::validate_schedule`] to check it against an instance.
pub fn parse_schedule(bytes: &[u8]) -> Result<MergedSchedule, ModelError> {
    let raw: RawSchedule = serde_json::from_slice(bytes)?;
    let placements = raw
        .placements
        .iter()
        .map(|rp| rp.parse().map_err(ModelError::InvalidSchedule))
        .collect::<Result<Vec<_>, _>>()?;
    let mut job_completion = BTreeMap::new();
    for (k, v) in &raw.job_completion {
        let job: JobId = k
            .parse()
            .map_err(|_| ModelError::InvalidSchedule(format!("bad job id key {k:?}")))?;
        job_completion.insert(job, *v);
    }
    let objective = super::parse_rational(&raw.objective)
        .map_err(ModelError::InvalidSchedule)?;
    Ok(MergedSchedule { placements, job_completion, objective })
}
