//! Merging the two independently computed phase schedules into one feasible
//! schedule of whole jobs.
//!
//! Each job gets a *width*: the larger of its two phase completion times
//! (their sum when the pools share processors). Map processors then replay
//! their assigned tasks back to back in width order, and reduce processors
//! list-schedule theirs using the width as a release time. Small widths go
//! first everywhere, so a job's map work is done by its width and its
//! reduce work within another width — completion at most twice the width.
//! Summed with weights, that certifies the merged objective against the sum
//! of the two phase LP bounds.

use crate::model::validate::{validate_schedule, ValidationMode};
use crate::model::{
    instance_digest, rational_string, Instance, JobId, MergedSchedule, ModelError, Phase,
    PhaseSchedule, Placement, ScheduledItem, Time,
};
use crate::report::RatioReport;
use crate::rounding::{self, RoundingError};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    /// The instance does not fit the requested problem variant.
    #[error("wrong problem variant: {0}")]
    WrongProblem(String),
    /// The schedule came out worse than the factor its construction
    /// guarantees. This is a bug in the solver, never a property of the
    /// instance.
    #[error("certified bound violated: {0}")]
    BoundViolated(String),
    /// A schedule failed its own feasibility re-check before being returned.
    #[error("internal error: {0}")]
    Internal(String),
}

/// Per-job widths, the release values for merging.
pub type WidthVector = BTreeMap<JobId, Time>;

/// Combines the per-phase completion times into widths: the max when the
/// pools are disjoint, the sum when map and reduce tasks may compete for a
/// processor.
pub fn compute_widths(
    map_sched: &PhaseSchedule,
    red_sched: &PhaseSchedule,
    disjoint: bool,
) -> WidthVector {
    let mut widths = WidthVector::new();
    for (&job, &m) in &map_sched.job_completion {
        let r = *red_sched
            .job_completion
            .get(&job)
            .unwrap_or_else(|| panic!("job {job} is missing from the reduce-side schedule"));
        widths.insert(job, if disjoint { m.max(r) } else { m + r });
    }
    widths
}

/// Merges the two phase schedules. Tasks keep their processors; map
/// processors run their tasks back to back from time 0 in ascending
/// `(width, job, index)`, and reduce processors list-schedule theirs with
/// release times: whenever the processor is free, the released task with
/// the smallest `(width, job, index)` starts; when none is released, time
/// jumps to the next release.
///
/// A reduce task's release is its job's width, which also covers the job's
/// merged map completion; on processors hosting both phases (non-disjoint
/// pools) the map block is placed first and reduce releases are additionally
/// clamped to the job's actual merged map completion, which keeps the
/// schedule feasible there too.
pub fn merge_schedules(
    inst: &Instance,
    map_sched: &PhaseSchedule,
    red_sched: &PhaseSchedule,
    widths: &WidthVector,
) -> MergedSchedule {
    let width_of = |job: JobId| -> Time {
        *widths.get(&job).unwrap_or_else(|| panic!("job {job} has no width"))
    };

    // Map side: back to back from 0 in ascending (width, job, index).
    let mut placements: Vec<Placement> = Vec::new();
    let mut map_completion: BTreeMap<JobId, Time> = BTreeMap::new();
    let mut proc_busy_until: BTreeMap<&str, Time> = BTreeMap::new();
    for proc in &inst.map_procs {
        let mut mine: Vec<&Placement> = map_sched
            .placements
            .iter()
            .filter(|p| p.processor == *proc)
            .collect();
        mine.sort_by_key(|p| {
            let key = p.item.task_key().expect("phase schedules contain only tasks");
            (width_of(key.job), key.job, key.index)
        });
        let mut cursor: Time = 0;
        for p in mine {
            let dur = p.end - p.start;
            placements.push(Placement {
                item: p.item,
                processor: proc.clone(),
                start: cursor,
                end: cursor + dur,
            });
            cursor += dur;
            let job = p.item.job();
            let done = map_completion.entry(job).or_insert(0);
            *done = (*done).max(cursor);
        }
        proc_busy_until.insert(proc.as_str(), cursor);
    }

    // Reduce side: per-processor list scheduling with releases.
    let mut job_completion: BTreeMap<JobId, Time> = BTreeMap::new();
    for proc in &inst.reduce_procs {
        struct Item {
            item: ScheduledItem,
            dur: Time,
            release: Time,
            width: Time,
        }
        let mut pending: Vec<Item> = red_sched
            .placements
            .iter()
            .filter(|p| p.processor == *proc)
            .map(|p| {
                let key = p.item.task_key().expect("phase schedules contain only tasks");
                let width = width_of(key.job);
                Item {
                    item: p.item,
                    dur: p.end - p.start,
                    release: width.max(map_completion.get(&key.job).copied().unwrap_or(0)),
                    width,
                }
            })
            .collect();
        // A stable processing order makes the simulation deterministic.
        pending.sort_by_key(|it| {
            let key = it.item.task_key().expect("phase schedules contain only tasks");
            (it.width, key.job, key.index)
        });

        let mut t: Time = proc_busy_until.get(proc.as_str()).copied().unwrap_or(0);
        while !pending.is_empty() {
            let released = pending.iter().position(|it| it.release <= t);
            let next = match released {
                Some(_) => {
                    // `pending` is sorted by the selection key, so the first
                    // released item is the one to start.
                    released.unwrap()
                }
                None => {
                    t = pending.iter().map(|it| it.release).min().expect("pending not empty");
                    pending
                        .iter()
                        .position(|it| it.release <= t)
                        .expect("an item is released at the jump target")
                }
            };
            let it = pending.remove(next);
            let end = t + it.dur;
            placements.push(Placement {
                item: it.item,
                processor: proc.clone(),
                start: t,
                end,
            });
            let done = job_completion.entry(it.item.job()).or_insert(0);
            *done = (*done).max(end);
            t = end;
        }
    }

    let objective = inst.weighted_completion(&job_completion);
    MergedSchedule { placements, job_completion, objective }
}

/// End-to-end solver for instances without shuffle volumes: schedules both
/// phases independently via the LP rounding, merges them, re-validates the
/// result, and certifies the merged objective against 27x the sum of the
/// two LP objectives (which is at most 54x the larger one).
pub fn solve_mr(
    inst: &Instance,
    a: Rational64,
    delta: Rational64,
) -> Result<(MergedSchedule, RatioReport), SolveError> {
    if inst.has_shuffle() {
        return Err(SolveError::WrongProblem(
            "instance carries shuffle volumes; use the msr-same or msr-separate solver".into(),
        ));
    }
    let map_out = rounding::task_scheduling_detailed(inst, Phase::Map, a, delta)?;
    let red_out = rounding::task_scheduling_detailed(inst, Phase::Reduce, a, delta)?;
    let widths = compute_widths(&map_out.schedule, &red_out.schedule, inst.pools_disjoint);
    let merged = merge_schedules(inst, &map_out.schedule, &red_out.schedule, &widths);

    let report = certify(inst, &merged, "mr", map_out.lp_objective, red_out.lp_objective)?;
    Ok((merged, report))
}

/// Re-validates a merged schedule and checks its certified bound, returning
/// the filled-in report. `lp_reduce` is the reduce-side LP objective (of the
/// folded tasks for the shuffle variants) and `bound_factors = (fm, fr)`
/// scale the two LP values into the certified bound `fm*lp_map +
/// fr*lp_reduce`.
pub(crate) fn certify_with(
    inst: &Instance,
    merged: &MergedSchedule,
    variant: &'static str,
    mode: ValidationMode,
    lp_map: f64,
    lp_reduce: f64,
    bound_factors: (f64, f64),
) -> Result<RatioReport, SolveError> {
    let check = validate_schedule(inst, merged, mode);
    if !check.is_valid() {
        return Err(SolveError::Internal(format!(
            "merged schedule failed self-validation: {}",
            check
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }

    let objective_value = merged
        .objective
        .to_f64()
        .ok_or_else(|| SolveError::Internal("objective overflows f64".into()))?;
    let certified_bound = bound_factors.0 * lp_map + bound_factors.1 * lp_reduce;
    // The LP values are floating point, so the comparison gets a hair of
    // relative slack; a real violation of a proven factor is never this
    // close.
    if objective_value > certified_bound * (1.0 + 1e-9) + 1e-9 {
        return Err(SolveError::BoundViolated(format!(
            "objective {objective_value} exceeds the certified bound {certified_bound} \
             ({} x LP_map {lp_map} + {} x LP_reduce {lp_reduce})",
            bound_factors.0, bound_factors.1
        )));
    }

    let lower = lp_map.max(lp_reduce);
    Ok(RatioReport {
        instance: instance_digest(inst),
        variant: variant.to_string(),
        jobs: inst.jobs.len(),
        map_tasks: inst.jobs.iter().map(|j| j.map_tasks.len()).sum(),
        reduce_tasks: inst.jobs.iter().map(|j| j.reduce_tasks.len()).sum(),
        objective: rational_string(&merged.objective),
        objective_value,
        lp_map,
        lp_reduce,
        certified_bound,
        empirical_ratio: if lower > 0.0 { objective_value / lower } else { f64::NAN },
        oracle_objective: None,
        oracle_ratio: None,
        seed: None,
    })
}

fn certify(
    inst: &Instance,
    merged: &MergedSchedule,
    variant: &'static str,
    lp_map: f64,
    lp_reduce: f64,
) -> Result<RatioReport, SolveError> {
    certify_with(inst, merged, variant, ValidationMode::Mr, lp_map, lp_reduce, (27.0, 27.0))
}
