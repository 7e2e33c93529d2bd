//! Schedule feasibility checking.
//!
//! The validator recomputes everything from the placements and reports *all*
//! violations it finds rather than stopping at the first, so a failing
//! schedule can be diagnosed in one pass. It never panics on malformed
//! input: unknown tasks, processors or jobs become violations.

use super::{
    Instance, JobId, MergedSchedule, Phase, PhaseSchedule, Placement, ScheduledItem, Time, Weight,
};
use std::collections::BTreeMap;

/// Which problem variant a schedule claims to solve. The variants differ in
/// whether shuffle transfers appear and where they may be placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationMode {
    /// Map and reduce tasks only; reduce tasks wait for all map tasks of
    /// their job; no shuffle placements allowed.
    Mr,
    /// Shuffle transfers run on the processor executing their reduce task.
    MsrSame,
    /// Shuffle transfers run on the input processor paired with the
    /// processor executing their reduce task.
    MsrSeparate,
}

impl ValidationMode {
    pub fn name(self) -> &'static str {
        match self {
            ValidationMode::Mr => "mr",
            ValidationMode::MsrSame => "msr-same",
            ValidationMode::MsrSeparate => "msr-separate",
        }
    }
}

impl std::str::FromStr for ValidationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mr" => Ok(ValidationMode::Mr),
            "msr-same" => Ok(ValidationMode::MsrSame),
            "msr-separate" => Ok(ValidationMode::MsrSeparate),
            other => Err(format!(
                "unknown problem variant {other:?} (expected mr, msr-same or msr-separate)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// A placement references a job, task index or processor the instance
    /// does not have, or an item the mode does not allow.
    UnknownReference,
    /// A task or required shuffle transfer is not placed.
    Missing,
    /// An item is placed more than once (preemption is not allowed).
    Duplicate,
    /// A placement starts before time 0 or its length is not the item's
    /// processing time on that processor.
    BadInterval,
    /// A map/reduce task sits on a processor outside its phase's pool, or a
    /// shuffle sits on a processor other than the one its variant demands.
    WrongProcessor,
    /// Two placements on one processor overlap in time.
    Overlap,
    /// A precedence constraint between items of a job is violated.
    Precedence,
    /// A stored completion time or the stored objective does not match the
    /// value recomputed from the placements.
    Inconsistent,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

/// The outcome of validating a schedule. `objective` and `job_completion`
/// are recomputed from the placements (present only when every task was
/// placed exactly once) and are trustworthy even when the stored ones are
/// not.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub objective: Option<Weight>,
    pub job_completion: BTreeMap<JobId, Time>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Checker<'a> {
    inst: &'a Instance,
    violations: Vec<Violation>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, kind: ViolationKind, detail: String) {
        self.violations.push(Violation { kind, detail });
    }

    /// Checks interval sanity and pool membership of one placement; returns
    /// false if the placement cannot even be attributed to the instance.
    fn check_placement(&mut self, p: &Placement, mode: ValidationMode) -> bool {
        let Some(job) = self.inst.job(p.item.job()) else {
            self.push(ViolationKind::UnknownReference, format!("{}: no such job", p.item));
            return false;
        };
        if p.start < 0 {
            self.push(ViolationKind::BadInterval, format!("{} starts at {}", p.item, p.start));
        }
        match p.item {
            ScheduledItem::Map { index, .. } | ScheduledItem::Reduce { index, .. } => {
                let phase = match p.item {
                    ScheduledItem::Map { .. } => Phase::Map,
                    _ => Phase::Reduce,
                };
                let tasks = job.tasks(phase);
                if index >= tasks.len() {
                    self.push(
                        ViolationKind::UnknownReference,
                        format!("{}: job has only {} {} tasks", p.item, tasks.len(), phase),
                    );
                    return false;
                }
                let pool = self.inst.pool(phase);
                let Some(pos) = pool.iter().position(|id| *id == p.processor) else {
                    self.push(
                        ViolationKind::WrongProcessor,
                        format!("{} runs on {:?}, outside the {} pool", p.item, p.processor, phase),
                    );
                    return false;
                };
                let expect = tasks[index].time_on(pos);
                if p.end - p.start != expect {
                    self.push(
                        ViolationKind::BadInterval,
                        format!(
                            "{} occupies [{}, {}) on {:?} but needs {} time units there",
                            p.item, p.start, p.end, p.processor, expect
                        ),
                    );
                }
            }
            ScheduledItem::Shuffle { reduce_index, map_index, .. } => {
                if mode == ValidationMode::Mr {
                    self.push(
                        ViolationKind::UnknownReference,
                        format!("{}: variant mr does not schedule shuffles", p.item),
                    );
                    return false;
                }
                let Some(rows) = &job.shuffle else {
                    self.push(
                        ViolationKind::UnknownReference,
                        format!("{}: job has no shuffle volumes", p.item),
                    );
                    return false;
                };
                if map_index >= job.map_tasks.len() || reduce_index >= job.reduce_tasks.len() {
                    self.push(
                        ViolationKind::UnknownReference,
                        format!("{}: indices out of range", p.item),
                    );
                    return false;
                }
                let expect = rows[map_index][reduce_index];
                if p.end - p.start != expect {
                    self.push(
                        ViolationKind::BadInterval,
                        format!(
                            "{} occupies [{}, {}) but has volume {}",
                            p.item, p.start, p.end, expect
                        ),
                    );
                }
            }
        }
        true
    }

    /// Pairwise overlap on each processor, zero-length placements excluded.
    fn check_overlaps(&mut self, placements: &[Placement]) {
        let mut by_proc: BTreeMap<&str, Vec<&Placement>> = BTreeMap::new();
        for p in placements {
            if p.end > p.start {
                by_proc.entry(p.processor.as_str()).or_default().push(p);
            }
        }
        for (proc, mut ps) in by_proc {
            ps.sort_by_key(|p| (p.start, p.end));
            for w in ps.windows(2) {
                if w[1].start < w[0].end {
                    self.push(
                        ViolationKind::Overlap,
                        format!(
                            "on {:?}: {} [{}, {}) overlaps {} [{}, {})",
                            proc, w[0].item, w[0].start, w[0].end, w[1].item, w[1].start, w[1].end
                        ),
                    );
                }
            }
        }
    }
}

/// Validates a merged schedule against an instance under the given variant.
pub fn validate_schedule(
    inst: &Instance,
    sched: &MergedSchedule,
    mode: ValidationMode,
) -> ValidationReport {
    let mut ck = Checker { inst, violations: Vec::new() };

    if mode != ValidationMode::Mr && !inst.has_shuffle() {
        ck.push(
            ViolationKind::UnknownReference,
            format!("variant {} needs an instance with shuffle volumes", mode.name()),
        );
    }
    if mode == ValidationMode::MsrSeparate && inst.input_procs.is_none() {
        ck.push(
            ViolationKind::UnknownReference,
            "variant msr-separate needs an instance with input processors".into(),
        );
    }

    // Catalogue placements per item and check each in isolation.
    let mut seen: BTreeMap<ScheduledItem, &Placement> = BTreeMap::new();
    for p in &sched.placements {
        if !ck.check_placement(p, mode) {
            continue;
        }
        if seen.insert(p.item, p).is_some() {
            ck.push(
                ViolationKind::Duplicate,
                format!("{} is placed more than once", p.item),
            );
        }
    }

    // Every task exactly once; every shuffle transfer exactly once when the
    // variant has them.
    let mut complete = true;
    for job in &inst.jobs {
        for (index, _) in job.map_tasks.iter().enumerate() {
            if !seen.contains_key(&ScheduledItem::Map { job: job.id, index }) {
                complete = false;
                ck.push(ViolationKind::Missing, format!("map[{index}] of job {} is not placed", job.id));
            }
        }
        for (index, _) in job.reduce_tasks.iter().enumerate() {
            if !seen.contains_key(&ScheduledItem::Reduce { job: job.id, index }) {
                complete = false;
                ck.push(
                    ViolationKind::Missing,
                    format!("reduce[{index}] of job {} is not placed", job.id),
                );
            }
        }
        if mode != ValidationMode::Mr && job.shuffle.is_some() {
            for map_index in 0..job.map_tasks.len() {
                for reduce_index in 0..job.reduce_tasks.len() {
                    let item =
                        ScheduledItem::Shuffle { job: job.id, reduce_index, map_index };
                    if !seen.contains_key(&item) {
                        complete = false;
                        ck.push(ViolationKind::Missing, format!("{item} is not placed"));
                    }
                }
            }
        }
    }

    ck.check_overlaps(&sched.placements);

    // Variant-specific processor rules for shuffles, and precedence.
    let reduce_proc_of = |job: JobId, r: usize| -> Option<&Placement> {
        seen.get(&ScheduledItem::Reduce { job, index: r }).copied()
    };
    for (&item, &p) in &seen {
        match item {
            ScheduledItem::Shuffle { job, reduce_index, map_index } => {
                if let Some(rp) = reduce_proc_of(job, reduce_index) {
                    let want = match mode {
                        ValidationMode::Mr => unreachable!("filtered by check_placement"),
                        ValidationMode::MsrSame => Some(rp.processor.clone()),
                        ValidationMode::MsrSeparate => {
                            let input = inst.input_procs.as_deref().unwrap_or(&[]);
                            inst.reduce_procs
                                .iter()
                                .position(|id| *id == rp.processor)
                                .and_then(|pos| input.get(pos).cloned())
                        }
                    };
                    match want {
                        Some(want) if want == p.processor => {}
                        Some(want) => ck.push(
                            ViolationKind::WrongProcessor,
                            format!(
                                "{item} runs on {:?} but its reduce task runs on {:?}, \
                                 so it belongs on {want:?}",
                                p.processor, rp.processor
                            ),
                        ),
                        None => {}
                    }
                    // Data must be complete before the reduce task starts.
                    if rp.start < p.end {
                        ck.push(
                            ViolationKind::Precedence,
                            format!(
                                "reduce[{reduce_index}] of job {job} starts at {} before its \
                                 {item} finishes at {}",
                                rp.start, p.end
                            ),
                        );
                    }
                }
                // A transfer cannot start before its map task finishes.
                if let Some(mp) = seen.get(&ScheduledItem::Map { job, index: map_index }) {
                    if p.start < mp.end {
                        ck.push(
                            ViolationKind::Precedence,
                            format!(
                                "{item} starts at {} before map[{map_index}] of job {job} \
                                 finishes at {}",
                                p.start, mp.end
                            ),
                        );
                    }
                }
            }
            ScheduledItem::Reduce { job, .. } if mode == ValidationMode::Mr => {
                // Without explicit shuffles the reduce task waits for every
                // map task of its job directly.
                if let Some(j) = inst.job(job) {
                    for map_index in 0..j.map_tasks.len() {
                        if let Some(mp) = seen.get(&ScheduledItem::Map { job, index: map_index }) {
                            if p.start < mp.end {
                                ck.push(
                                    ViolationKind::Precedence,
                                    format!(
                                        "{item} starts at {} before map[{map_index}] of its job \
                                         finishes at {}",
                                        p.start, mp.end
                                    ),
                                );
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }

    // Recompute completions and the objective; compare with the stored ones.
    let mut job_completion: BTreeMap<JobId, Time> = BTreeMap::new();
    if complete {
        for job in &inst.jobs {
            let c = (0..job.reduce_tasks.len())
                .filter_map(|index| seen.get(&ScheduledItem::Reduce { job: job.id, index }))
                .map(|p| p.end)
                .max()
                .unwrap_or(0);
            job_completion.insert(job.id, c);
        }
    }
    let objective = if complete {
        Some(inst.weighted_completion(&job_completion))
    } else {
        None
    };

    for (job, &stored) in &sched.job_completion {
        match job_completion.get(job) {
            Some(&actual) if actual == stored => {}
            Some(&actual) => ck.push(
                ViolationKind::Inconsistent,
                format!("job {job}: stored completion {stored} but placements end at {actual}"),
            ),
            None if inst.job(*job).is_none() => ck.push(
                ViolationKind::UnknownReference,
                format!("completion entry for unknown job {job}"),
            ),
            None => {}
        }
    }
    if complete {
        for job in &inst.jobs {
            if !sched.job_completion.contains_key(&job.id) {
                ck.push(
                    ViolationKind::Inconsistent,
                    format!("job {}: no stored completion time", job.id),
                );
            }
        }
    }
    if let Some(obj) = &objective {
        if *obj != sched.objective {
            ck.push(
                ViolationKind::Inconsistent,
                format!(
                    "stored objective {} but placements give {}",
                    super::rational_string(&sched.objective),
                    super::rational_string(obj)
                ),
            );
        }
    }

    ValidationReport { violations: ck.violations, objective, job_completion }
}

/// Validates a single-phase schedule: every task of the phase exactly once,
/// valid intervals on pool processors, no overlap, completions consistent.
/// Cross-phase precedence does not apply here.
pub fn validate_phase_schedule(
    inst: &Instance,
    phase: Phase,
    sched: &PhaseSchedule,
) -> ValidationReport {
    let mut ck = Checker { inst, violations: Vec::new() };
    if sched.phase != phase {
        ck.push(
            ViolationKind::Inconsistent,
            format!("schedule is tagged {} but was validated as {}", sched.phase, phase),
        );
    }

    let mut seen: BTreeMap<(JobId, usize), &Placement> = BTreeMap::new();
    for p in &sched.placements {
        let ok_kind = matches!(
            (phase, p.item),
            (Phase::Map, ScheduledItem::Map { .. }) | (Phase::Reduce, ScheduledItem::Reduce { .. })
        );
        if !ok_kind {
            ck.push(
                ViolationKind::UnknownReference,
                format!("{} does not belong in a {} phase schedule", p.item, phase),
            );
            continue;
        }
        if !ck.check_placement(p, ValidationMode::Mr) {
            continue;
        }
        let key = p.item.task_key().expect("map/reduce items carry a task key");
        if seen.insert((key.job, key.index), p).is_some() {
            ck.push(ViolationKind::Duplicate, format!("{} is placed more than once", p.item));
        }
    }

    let mut complete = true;
    for key in inst.phase_tasks(phase) {
        if !seen.contains_key(&(key.job, key.index)) {
            complete = false;
            ck.push(ViolationKind::Missing, format!("{key} is not placed"));
        }
    }
    ck.check_overlaps(&sched.placements);

    let mut job_completion: BTreeMap<JobId, Time> = BTreeMap::new();
    if complete {
        for ((job, _), p) in &seen {
            let c = job_completion.entry(*job).or_insert(p.end);
            *c = (*c).max(p.end);
        }
        for ((job, index), p) in &seen {
            match sched.task_completion.get(&(*job, *index)) {
                Some(&stored) if stored == p.end => {}
                Some(&stored) => ck.push(
                    ViolationKind::Inconsistent,
                    format!(
                        "{} of job {job}: stored completion {stored}, placement ends at {}",
                        phase, p.end
                    ),
                ),
                None => ck.push(
                    ViolationKind::Inconsistent,
                    format!("{phase}[{index}] of job {job}: no stored completion"),
                ),
            }
        }
        for (job, &c) in &job_completion {
            if sched.job_completion.get(job) != Some(&c) {
                ck.push(
                    ViolationKind::Inconsistent,
                    format!("job {job}: stored phase completion differs from recomputed {c}"),
                );
            }
        }
    }

    let objective = if complete {
        Some(inst.weighted_completion(&job_completion))
    } else {
        None
    };
    ValidationReport { violations: ck.violations, objective, job_completion }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Job, Task};
    use num_rational::BigRational;

    /// Two disjoint pools, one job: map 3 on m1, reduce 2 on r1, shuffle 1.
    fn inst() -> Instance {
        Instance::new(
            vec![Job {
                id: 1,
                weight: BigRational::from_integer(1.into()),
                map_tasks: vec![Task { times: vec![3] }],
                reduce_tasks: vec![Task { times: vec![2] }],
                shuffle: Some(vec![vec![1]]),
            }],
            vec!["m1".into()],
            vec!["r1".into()],
            Some(vec!["s1".into()]),
        )
        .unwrap()
    }

    fn place(item: ScheduledItem, proc: &str, start: Time, end: Time) -> Placement {
        Placement { item, processor: proc.into(), start, end }
    }

    fn msr_same_schedule() -> MergedSchedule {
        MergedSchedule {
            placements: vec![
                place(ScheduledItem::Map { job: 1, index: 0 }, "m1", 0, 3),
                place(ScheduledItem::Shuffle { job: 1, reduce_index: 0, map_index: 0 }, "r1", 3, 4),
                place(ScheduledItem::Reduce { job: 1, index: 0 }, "r1", 4, 6),
            ],
            job_completion: [(1, 6)].into_iter().collect(),
            objective: BigRational::from_integer(6.into()),
        }
    }

    #[test]
    fn accepts_feasible_msr_same_schedule() {
        let report = validate_schedule(&inst(), &msr_same_schedule(), ValidationMode::MsrSame);
        assert!(report.is_valid(), "unexpected violations: {:?}", report.violations);
        assert_eq!(report.objective, Some(BigRational::from_integer(6.into())));
    }

    #[test]
    fn flags_shuffle_before_its_map_task() {
        let mut sched = msr_same_schedule();
        sched.placements[1].start = 2;
        sched.placements[1].end = 3;
        let report = validate_schedule(&inst(), &sched, ValidationMode::MsrSame);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Precedence));
    }

    #[test]
    fn flags_reduce_before_shuffle_data_arrives() {
        let mut sched = msr_same_schedule();
        sched.placements[2].start = 3;
        sched.placements[2].end = 5;
        sched.job_completion.insert(1, 5);
        sched.objective = BigRational::from_integer(5.into());
        let report = validate_schedule(&inst(), &sched, ValidationMode::MsrSame);
        // The reduce both overlaps the shuffle on r1 and starts too early.
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Precedence));
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Overlap));
    }

    #[test]
    fn flags_shuffle_on_wrong_processor_for_each_variant() {
        // msr-same: shuffle must share the reduce task's processor.
        let mut sched = msr_same_schedule();
        sched.placements[1].processor = "s1".into();
        let report = validate_schedule(&inst(), &sched, ValidationMode::MsrSame);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::WrongProcessor));

        // msr-separate: shuffle must sit on the paired input processor.
        let report = validate_schedule(&inst(), &sched, ValidationMode::MsrSeparate);
        assert!(report.is_valid(), "unexpected: {:?}", report.violations);
        let mut wrong = msr_same_schedule();
        wrong.placements[1].processor = "r1".into();
        let report = validate_schedule(&inst(), &wrong, ValidationMode::MsrSeparate);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::WrongProcessor));
    }

    #[test]
    fn mr_mode_rejects_shuffle_placements_and_checks_map_precedence() {
        let sched = msr_same_schedule();
        let report = validate_schedule(&inst(), &sched, ValidationMode::Mr);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::UnknownReference));

        let mut no_shuffle = inst();
        for job in &mut no_shuffle.jobs {
            job.shuffle = None;
        }
        let early_reduce = MergedSchedule {
            placements: vec![
                place(ScheduledItem::Map { job: 1, index: 0 }, "m1", 0, 3),
                place(ScheduledItem::Reduce { job: 1, index: 0 }, "r1", 1, 3),
            ],
            job_completion: [(1, 3)].into_iter().collect(),
            objective: BigRational::from_integer(3.into()),
        };
        let report = validate_schedule(&no_shuffle, &early_reduce, ValidationMode::Mr);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Precedence));
    }

    #[test]
    fn flags_missing_and_duplicate_items() {
        let mut sched = msr_same_schedule();
        let dup = sched.placements[0].clone();
        sched.placements.push(dup);
        let report = validate_schedule(&inst(), &sched, ValidationMode::MsrSame);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Duplicate));

        sched.placements.drain(0..2);
        let report = validate_schedule(&inst(), &sched, ValidationMode::MsrSame);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Missing));
        assert!(report.objective.is_none());
    }

    #[test]
    fn flags_tampered_objective_and_wrong_duration() {
        let mut sched = msr_same_schedule();
        sched.objective = BigRational::from_integer(5.into());
        let report = validate_schedule(&inst(), &sched, ValidationMode::MsrSame);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Inconsistent));

        let mut sched = msr_same_schedule();
        sched.placements[0].end = 4; // map takes 3 on m1
        let report = validate_schedule(&inst(), &sched, ValidationMode::MsrSame);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::BadInterval));
    }

    #[test]
    fn zero_volume_shuffles_may_share_an_instant() {
        let mut zero = inst();
        zero.jobs[0].shuffle = Some(vec![vec![0]]);
        let sched = MergedSchedule {
            placements: vec![
                place(ScheduledItem::Map { job: 1, index: 0 }, "m1", 0, 3),
                place(ScheduledItem::Shuffle { job: 1, reduce_index: 0, map_index: 0 }, "r1", 3, 3),
                place(ScheduledItem::Reduce { job: 1, index: 0 }, "r1", 3, 5),
            ],
            job_completion: [(1, 5)].into_iter().collect(),
            objective: BigRational::from_integer(5.into()),
        };
        let report = validate_schedule(&zero, &sched, ValidationMode::MsrSame);
        assert!(report.is_valid(), "unexpected: {:?}", report.violations);
    }

    #[test]
    fn phase_validator_accepts_and_rejects() {
        let inst = inst();
        let good = PhaseSchedule::from_placements(
            Phase::Map,
            vec![place(ScheduledItem::Map { job: 1, index: 0 }, "m1", 0, 3)],
        );
        assert!(validate_phase_schedule(&inst, Phase::Map, &good).is_valid());

        let wrong_pool = PhaseSchedule::from_placements(
            Phase::Map,
            vec![place(ScheduledItem::Map { job: 1, index: 0 }, "r1", 0, 3)],
        );
        let report = validate_phase_schedule(&inst, Phase::Map, &wrong_pool);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::WrongProcessor));
    }
}
