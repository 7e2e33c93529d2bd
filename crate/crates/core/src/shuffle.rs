//! Shuffle transfers: folding them into reduce tasks, expanding them back
//! out of a folded schedule, and the end-to-end solvers for both transfer
//! placement models.
//!
//! The key observation is that when every transfer must run on the
//! processor of its reduce task, any schedule can be normalized so that each
//! reduce task is immediately preceded by its transfers, back to back, with
//! no idle time inside the block: moving a transfer later, right up against
//! its reduce task, never delays anything else and never violates its own
//! release (the map task only needs to finish before the *original*,
//! earlier, start). So the transfer volumes can simply be folded into the
//! reduce processing times, the folded instance solved as a plain two-phase
//! problem, and every folded placement expanded back into a transfer block
//! followed by the reduce task. The expansion changes no completion time.
//!
//! When dedicated input processors exist, transfers can instead run there,
//! freeing the reduce processors. The solver keeps the folded schedule's
//! timing and merely relocates each transfer to the input processor paired
//! with its reduce processor; the objective is unchanged, but the certified
//! factor doubles on the reduce side, because an optimum that may use the
//! extra processors can be up to twice as fast as one that may not: given
//! any schedule using input processors, re-running each reduce task's
//! transfers on the reduce processor right before the task, in a second
//! pass after everything else shifts to make room, at most doubles every
//! completion time.

use crate::merge::{certify_with, compute_widths, merge_schedules, SolveError};
use crate::model::validate::ValidationMode;
use crate::model::{
    Instance, JobId, MergedSchedule, Phase, Placement, ScheduledItem, Time,
};
use crate::report::RatioReport;
use crate::rounding;
use num_rational::Rational64;
use std::collections::BTreeMap;

/// Folds every job's transfer volumes into its reduce tasks: the folded
/// reduce task `r` takes its original time plus the total volume feeding it,
/// on every processor. The volumes stay in the instance, so a folded
/// schedule can be expanded back.
pub fn fold_shuffle(inst: &Instance) -> Result<Instance, SolveError> {
    if !inst.has_shuffle() {
        return Err(SolveError::WrongProblem(
            "instance has no shuffle volumes to fold".into(),
        ));
    }
    let mut folded = inst.clone();
    for job in &mut folded.jobs {
        for r in 0..job.reduce_tasks.len() {
            let extra = job.shuffle_total(r);
            for t in &mut job.reduce_tasks[r].times {
                *t += extra;
            }
        }
    }
    Ok(folded)
}

/// Expands folded reduce placements back into explicit transfers: a folded
/// placement `[s, e)` becomes the task's transfers in ascending map-task
/// order, back to back from `s`, followed by the reduce task itself, ending
/// at `e` exactly. Zero-volume transfers are kept as zero-length placements.
/// Map placements pass through unchanged. No completion time moves.
pub fn expand_transfers(inst: &Instance, folded: &MergedSchedule) -> MergedSchedule {
    let mut placements: Vec<Placement> = Vec::new();
    for p in &folded.placements {
        match p.item {
            ScheduledItem::Reduce { job, index } => {
                let j = inst.job(job).expect("folded schedule references instance jobs");
                let rows = j.shuffle.as_ref().expect("shuffle instance");
                let mut cursor = p.start;
                for (k, row) in rows.iter().enumerate() {
                    let vol = row[index];
                    placements.push(Placement {
                        item: ScheduledItem::Shuffle { job, reduce_index: index, map_index: k },
                        processor: p.processor.clone(),
                        start: cursor,
                        end: cursor + vol,
                    });
                    cursor += vol;
                }
                debug_assert!(cursor <= p.end, "folded placement shorter than its volumes");
                placements.push(Placement {
                    item: p.item,
                    processor: p.processor.clone(),
                    start: cursor,
                    end: p.end,
                });
            }
            _ => placements.push(p.clone()),
        }
    }
    MergedSchedule {
        placements,
        job_completion: folded.job_completion.clone(),
        objective: folded.objective.clone(),
    }
}

/// Moves every transfer to the input processor paired with the reduce
/// processor it sits on, keeping all times. Transfers that shared a reduce
/// processor without overlapping still do not overlap on the input
/// processor, so feasibility and the objective are untouched.
pub fn relocate_to_input_processors(
    inst: &Instance,
    sched: &MergedSchedule,
) -> Result<MergedSchedule, SolveError> {
    let Some(input) = &inst.input_procs else {
        return Err(SolveError::WrongProblem(
            "the separate-transfer variant needs an instance with input processors".into(),
        ));
    };
    let paired: BTreeMap<&str, &str> = inst
        .reduce_procs
        .iter()
        .zip(input)
        .map(|(r, s)| (r.as_str(), s.as_str()))
        .collect();
    let mut placements = sched.placements.clone();
    for p in &mut placements {
        if let ScheduledItem::Shuffle { .. } = p.item {
            let target = paired.get(p.processor.as_str()).ok_or_else(|| {
                SolveError::Internal(format!(
                    "transfer sits on {:?}, which is not a reduce processor",
                    p.processor
                ))
            })?;
            p.processor = target.to_string();
        }
    }
    Ok(MergedSchedule {
        placements,
        job_completion: sched.job_completion.clone(),
        objective: sched.objective.clone(),
    })
}

/// Checks the normal form the solvers promise: each reduce task is
/// immediately preceded by its transfer block — all its transfers on one
/// processor, back to back with no idle inside, ending exactly where the
/// reduce task starts.
pub fn check_block_normal_form(inst: &Instance, sched: &MergedSchedule) -> Result<(), String> {
    let mut transfers: BTreeMap<(JobId, usize), Vec<&Placement>> = BTreeMap::new();
    let mut reduce_start: BTreeMap<(JobId, usize), Time> = BTreeMap::new();
    for p in &sched.placements {
        match p.item {
            ScheduledItem::Shuffle { job, reduce_index, .. } => {
                transfers.entry((job, reduce_index)).or_default().push(p);
            }
            ScheduledItem::Reduce { job, index } => {
                reduce_start.insert((job, index), p.start);
            }
            ScheduledItem::Map { .. } => {}
        }
    }
    for job in &inst.jobs {
        if job.shuffle.is_none() {
            continue;
        }
        for r in 0..job.reduce_tasks.len() {
            let start = *reduce_start
                .get(&(job.id, r))
                .ok_or_else(|| format!("reduce[{r}] of job {} is not placed", job.id))?;
            let mut block = transfers.remove(&(job.id, r)).unwrap_or_default();
            if block.len() != job.map_tasks.len() {
                return Err(format!(
                    "reduce[{r}] of job {}: {} transfers placed, expected {}",
                    job.id,
                    block.len(),
                    job.map_tasks.len()
                ));
            }
            block.sort_by_key(|p| (p.start, p.end));
            let proc = &block[0].processor;
            let mut cursor = block[0].start;
            for p in &block {
                if p.processor != *proc {
                    return Err(format!(
                        "transfer block of reduce[{r}] of job {} spans two processors",
                        job.id
                    ));
                }
                if p.start != cursor {
                    return Err(format!(
                        "transfer block of reduce[{r}] of job {} has idle time at {cursor}",
                        job.id
                    ));
                }
                cursor = p.end;
            }
            if cursor != start {
                return Err(format!(
                    "transfer block of reduce[{r}] of job {} ends at {cursor}, \
                     not at the task's start {start}",
                    job.id
                ));
            }
        }
    }
    Ok(())
}

/// Both shuffle solvers share this pipeline: schedule the map phase and the
/// folded reduce phase independently, merge on widths, expand the folded
/// placements into transfer blocks.
fn fold_solve(
    inst: &Instance,
    a: Rational64,
    delta: Rational64,
) -> Result<(MergedSchedule, f64, f64), SolveError> {
    let folded = fold_shuffle(inst)?;
    let map_out = rounding::task_scheduling_detailed(inst, Phase::Map, a, delta)?;
    let red_out = rounding::task_scheduling_detailed(&folded, Phase::Reduce, a, delta)?;
    let widths = compute_widths(&map_out.schedule, &red_out.schedule, inst.pools_disjoint);
    let merged = merge_schedules(inst, &map_out.schedule, &red_out.schedule, &widths);
    let expanded = expand_transfers(inst, &merged);
    Ok((expanded, map_out.lp_objective, red_out.lp_objective))
}

/// End-to-end solver with transfers on the reduce processors. Certifies the
/// objective against 27x the sum of the map LP and the folded-reduce LP —
/// at most 54x the larger of the two, both lower bounds on the optimum.
pub fn solve_msr_same(
    inst: &Instance,
    a: Rational64,
    delta: Rational64,
) -> Result<(MergedSchedule, RatioReport), SolveError> {
    let (sched, lp_map, lp_reduce) = fold_solve(inst, a, delta)?;
    let report = certify_with(
        inst,
        &sched,
        "msr-same",
        ValidationMode::MsrSame,
        lp_map,
        lp_reduce,
        (27.0, 27.0),
    )?;
    Ok((sched, report))
}

/// End-to-end solver with transfers on dedicated input processors. The
/// schedule is the same-processor one with transfers relocated, so its
/// objective is identical; the certified factor doubles on the reduce side
/// because the folded LP lower-bounds only the same-processor optimum,
/// which can be up to twice the optimum that may use the input processors.
pub fn solve_msr_separate(
    inst: &Instance,
    a: Rational64,
    delta: Rational64,
) -> Result<(MergedSchedule, RatioReport), SolveError> {
    if inst.input_procs.is_none() {
        return Err(SolveError::WrongProblem(
            "the separate-transfer variant needs an instance with input processors".into(),
        ));
    }
    let (same, lp_map, lp_reduce) = fold_solve(inst, a, delta)?;
    let sched = relocate_to_input_processors(inst, &same)?;
    let report = certify_with(
        inst,
        &sched,
        "msr-separate",
        ValidationMode::MsrSeparate,
        lp_map,
        lp_reduce,
        (27.0, 54.0),
    )?;
    Ok((sched, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::solve_mr;
    use crate::model::generate::{generate_instance, GeneratorConfig};
    use crate::model::validate::validate_schedule;
    use crate::model::{Job, Task};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::One;

    fn defaults() -> (Rational64, Rational64) {
        (Rational64::new(3, 2), Rational64::new(1, 2))
    }

    fn two_map_instance() -> Instance {
        Instance::new(
            vec![Job {
                id: 1,
                weight: BigRational::one(),
                map_tasks: vec![Task { times: vec![1] }, Task { times: vec![1] }],
                reduce_tasks: vec![Task { times: vec![1] }],
                shuffle: Some(vec![vec![2], vec![5]]),
            }],
            vec!["m1".into()],
            vec!["r1".into()],
            Some(vec!["s1".into()]),
        )
        .unwrap()
    }

    #[test]
    fn folding_adds_the_feeding_volumes_on_every_processor() {
        let inst = Instance::new(
            vec![Job {
                id: 1,
                weight: BigRational::one(),
                map_tasks: vec![Task { times: vec![1, 1] }, Task { times: vec![1, 1] }],
                reduce_tasks: vec![Task { times: vec![4, 6] }, Task { times: vec![2, 2] }],
                shuffle: Some(vec![vec![3, 0], vec![0, 1]]),
            }],
            vec!["m1".into(), "m2".into()],
            vec!["r1".into(), "r2".into()],
            None,
        )
        .unwrap();
        let folded = fold_shuffle(&inst).unwrap();
        assert_eq!(folded.jobs[0].reduce_tasks[0].times, vec![7, 9]);
        assert_eq!(folded.jobs[0].reduce_tasks[1].times, vec![3, 3]);
        // Maps and volumes are untouched.
        assert_eq!(folded.jobs[0].map_tasks, inst.jobs[0].map_tasks);
        assert_eq!(folded.jobs[0].shuffle, inst.jobs[0].shuffle);
    }

    #[test]
    fn folding_refuses_plain_instances() {
        let mut inst = two_map_instance();
        for job in &mut inst.jobs {
            job.shuffle = None;
        }
        assert!(matches!(fold_shuffle(&inst), Err(SolveError::WrongProblem(_))));
    }

    #[test]
    fn expansion_lays_transfers_back_to_back_before_the_task() {
        let inst = two_map_instance(); // volumes 2 and 5, reduce time 1
        let folded = MergedSchedule {
            placements: vec![Placement {
                item: ScheduledItem::Reduce { job: 1, index: 0 },
                processor: "r1".into(),
                start: 10,
                end: 18,
            }],
            job_completion: [(1, 18)].into_iter().collect(),
            objective: BigRational::from_integer(BigInt::from(18)),
        };
        let out = expand_transfers(&inst, &folded);
        let find = |item: ScheduledItem| {
            let p = out.placements.iter().find(|p| p.item == item).unwrap();
            (p.start, p.end, p.processor.clone())
        };
        assert_eq!(
            find(ScheduledItem::Shuffle { job: 1, reduce_index: 0, map_index: 0 }),
            (10, 12, "r1".to_string())
        );
        assert_eq!(
            find(ScheduledItem::Shuffle { job: 1, reduce_index: 0, map_index: 1 }),
            (12, 17, "r1".to_string())
        );
        assert_eq!(find(ScheduledItem::Reduce { job: 1, index: 0 }), (17, 18, "r1".to_string()));
        assert_eq!(out.job_completion[&1], 18);
    }

    #[test]
    fn solvers_produce_valid_certified_schedules() {
        let (a, delta) = defaults();
        for seed in 0..15u64 {
            let cfg = GeneratorConfig {
                seed,
                jobs: (1, 4),
                map_tasks: (1, 3),
                reduce_tasks: (1, 2),
                map_procs: 2,
                reduce_procs: 2,
                proc_time: (1, 9),
                shuffle_time: Some((0, 6)),
                input_procs: true,
                weight: (1, 4),
            };
            let inst = generate_instance(&cfg).unwrap();

            let (same, report) = solve_msr_same(&inst, a, delta).unwrap();
            assert_eq!(report.variant, "msr-same");
            assert!(validate_schedule(&inst, &same, ValidationMode::MsrSame).is_valid());
            check_block_normal_form(&inst, &same).unwrap();
            assert!(report.objective_value <= report.certified_bound * (1.0 + 1e-9));
            assert!(
                report.objective_value
                    <= 54.0 * report.lp_map.max(report.lp_reduce) * (1.0 + 1e-9)
            );

            let (sep, sep_report) = solve_msr_separate(&inst, a, delta).unwrap();
            assert_eq!(sep_report.variant, "msr-separate");
            assert!(validate_schedule(&inst, &sep, ValidationMode::MsrSeparate).is_valid());
            check_block_normal_form(&inst, &sep).unwrap();
            // Relocation changes processors, never times or the objective.
            assert_eq!(sep.objective, same.objective, "seed {seed}");
            assert_eq!(sep.job_completion, same.job_completion, "seed {seed}");
            assert_eq!(
                sep_report.certified_bound,
                27.0 * sep_report.lp_map + 54.0 * sep_report.lp_reduce
            );
        }
    }

    #[test]
    fn zero_volumes_solve_exactly_like_the_plain_variant() {
        let (a, delta) = defaults();
        for seed in 0..6u64 {
            let cfg = GeneratorConfig {
                seed,
                jobs: (1, 4),
                map_tasks: (1, 3),
                reduce_tasks: (1, 2),
                map_procs: 2,
                reduce_procs: 2,
                proc_time: (1, 9),
                shuffle_time: Some((0, 0)),
                input_procs: false,
                weight: (1, 4),
            };
            let with = generate_instance(&cfg).unwrap();
            let mut without = with.clone();
            for job in &mut without.jobs {
                job.shuffle = None;
            }
            let (msr, _) = solve_msr_same(&with, a, delta).unwrap();
            let (mr, _) = solve_mr(&without, a, delta).unwrap();
            assert_eq!(msr.objective, mr.objective, "seed {seed}");
            assert_eq!(msr.job_completion, mr.job_completion, "seed {seed}");
        }
    }

    #[test]
    fn separate_solver_requires_input_processors() {
        let mut inst = two_map_instance();
        inst.input_procs = None;
        let (a, delta) = defaults();
        assert!(matches!(
            solve_msr_separate(&inst, a, delta),
            Err(SolveError::WrongProblem(_))
        ));
    }

    #[test]
    fn normal_form_checker_rejects_a_gap_before_the_task() {
        let (a, delta) = defaults();
        let inst = two_map_instance();
        let (sched, _) = solve_msr_same(&inst, a, delta).unwrap();
        check_block_normal_form(&inst, &sched).unwrap();
        let mut broken = sched.clone();
        for p in &mut broken.placements {
            if matches!(p.item, ScheduledItem::Shuffle { map_index: 0, .. }) && p.end > p.start {
                p.start -= 1;
                p.end -= 1;
                break;
            }
        }
        assert!(check_block_normal_form(&inst, &broken).is_err());
    }
}
