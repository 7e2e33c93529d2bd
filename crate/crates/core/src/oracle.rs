//! Exact optima for tiny instances by exhaustive search.
//!
//! The search enumerates every task-to-processor assignment together with
//! every per-processor execution order, by inserting items one at a time
//! into every position of every allowed processor's sequence. For one fixed
//! assignment-plus-order, earliest-start timing (each item starts at the
//! later of its processor's previous end and its release) is optimal,
//! because the objective is regular: delaying any task never helps. The
//! minimum over all configurations is therefore the true optimum.
//!
//! The engine counts every evaluated configuration as a *leaf* and refuses
//! (rather than truncates) when the cap is exceeded: a truncated search is
//! not an oracle. Weighted objectives are computed exactly in scaled
//! integers, so reported optima carry no floating-point error.
//!
//! Zero-volume shuffle transfers are handled as pure release constraints:
//! they occupy no processor time, so enumerating their positions would
//! multiply the search space without changing any completion time. The
//! witness schedule still carries them as zero-length placements at their
//! reduce task's start.
//!
//! Everything here is sequential; the search is a depth-first walk whose
//! leaf order defines which of several equal-value optima is returned (the
//! first one found).

use crate::model::{Instance, JobId, MergedSchedule, Phase, PhaseSchedule, Placement, ScheduledItem, Time};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use std::collections::BTreeMap;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Default leaf cap: roughly a second of search on one core.
pub const DEFAULT_MAX_LEAVES: u64 = 10_000_000;

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    pub max_leaves: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_leaves: DEFAULT_MAX_LEAVES }
    }
}

/// Which shuffle execution model to solve exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShuffleModel {
    /// Transfers run on the processor of their reduce task.
    Same,
    /// Transfers run on the input processor paired with that processor.
    Separate,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("search space exceeds the cap of {cap} configurations")]
    CapHit { cap: u64 },
    #[error("oracle cannot handle this instance: {0}")]
    Unsupported(String),
}

/// Exact optimum of a full problem variant, with a witness schedule.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub objective: BigRational,
    pub schedule: MergedSchedule,
    /// Number of configurations evaluated (the whole space, since the
    /// search never truncates).
    pub leaves: u64,
    pub elapsed: Duration,
}

/// Exact optimum of a single phase in isolation.
#[derive(Clone, Debug)]
pub struct PhaseOracleResult {
    pub objective: BigRational,
    pub schedule: PhaseSchedule,
    pub leaves: u64,
    pub elapsed: Duration,
}

/// Exact optimum of the transfer-plus-reduce stage alone (all map work
/// already done at time zero). The witness is a bare placement list: this
/// sub-problem has no instance-level schedule form.
#[derive(Clone, Debug)]
pub struct ShuffleReduceOptimum {
    pub objective: BigRational,
    pub placements: Vec<Placement>,
    pub leaves: u64,
    pub elapsed: Duration,
}

// ---------------------------------------------------------------------------
// Search engine.

/// How an item picks its processor.
#[derive(Clone, Debug)]
enum ProcRule {
    /// Any of the listed universe processors.
    Fixed(Vec<usize>),
    /// The processor already chosen for another item (shuffles following
    /// their reduce task in the same-processor model).
    SameAs(usize),
    /// The input processor paired with another item's processor.
    PairedInput(usize),
}

struct SearchItem {
    ident: ScheduledItem,
    /// Duration on each universe processor (transfer times are processor
    /// independent; task times are only meaningful on allowed processors).
    dur: Vec<Time>,
    rule: ProcRule,
    /// Whether this item's end defines its job's completion time.
    counts: bool,
}

struct Search<'a> {
    items: &'a [SearchItem],
    /// Universe processor names, timing passes run in this order: map
    /// processors, then input processors, then reduce processors.
    procs: &'a [String],
    /// `paired_input[p]` is the input processor for reduce processor `p`.
    paired_input: Vec<Option<usize>>,
    /// Scaled integer weight per job id.
    weight: BTreeMap<JobId, i128>,
    /// Positive-transfer items per reduce item id.
    shuffles_of_reduce: Vec<Vec<usize>>,
    /// Reduce release also waits for all the job's maps (release edges of
    /// the zero-volume transfers are subsumed by this).
    job_ids: Vec<JobId>,
    /// Item id of each map task, when the map stage is searched.
    map_item: BTreeMap<(JobId, usize), usize>,

    seqs: Vec<Vec<usize>>,
    item_proc: Vec<usize>,
    leaves: u64,
    cap: u64,
    best: Option<(i128, Vec<Vec<usize>>)>,

    // Scratch for the timing pass, indexed by item id.
    end_of: Vec<Time>,
    timed: Vec<bool>,
}

const UNPLACED: usize = usize::MAX;

impl<'a> Search<'a> {
    fn allowed_procs(&self, item: usize) -> Vec<usize> {
        match &self.items[item].rule {
            ProcRule::Fixed(ps) => ps.clone(),
            ProcRule::SameAs(other) => vec![self.item_proc[*other]],
            ProcRule::PairedInput(other) => {
                let p = self.item_proc[*other];
                vec![self.paired_input[p].expect("reduce processor has a paired input processor")]
            }
        }
    }

    fn run(&mut self) -> Result<(), OracleError> {
        self.place(0)
    }

    fn place(&mut self, i: usize) -> Result<(), OracleError> {
        if i == self.items.len() {
            self.leaves += 1;
            if self.leaves > self.cap {
                return Err(OracleError::CapHit { cap: self.cap });
            }
            if let Some(obj) = self.time_config(None) {
                if self.best.as_ref().map_or(true, |(b, _)| obj < *b) {
                    self.best = Some((obj, self.seqs.clone()));
                }
            }
            return Ok(());
        }
        for p in self.allowed_procs(i) {
            for pos in 0..=self.seqs[p].len() {
                self.seqs[p].insert(pos, i);
                self.item_proc[i] = p;
                self.place(i + 1)?;
                self.seqs[p].remove(pos);
                self.item_proc[i] = UNPLACED;
            }
        }
        Ok(())
    }

    /// Earliest-start timing of the current configuration. Returns the
    /// scaled objective, or `None` when the per-processor order is
    /// infeasible (a reduce task sequenced before one of its transfers).
    /// With `record`, also emits the placements.
    fn time_config(&mut self, mut record: Option<&mut Vec<Placement>>) -> Option<i128> {
        for t in &mut self.timed {
            *t = false;
        }
        let mut job_maps_done: BTreeMap<JobId, Time> = BTreeMap::new();
        let mut completion: BTreeMap<JobId, Time> = BTreeMap::new();

        for p in 0..self.procs.len() {
            let mut cursor: Time = 0;
            for idx in 0..self.seqs[p].len() {
                let id = self.seqs[p][idx];
                let item = &self.items[id];
                let release: Time = match item.ident {
                    ScheduledItem::Map { .. } => 0,
                    ScheduledItem::Shuffle { job, map_index, .. } => {
                        // End of the feeding map task; zero when the map
                        // stage is not part of this search.
                        self.map_end(job, map_index)
                    }
                    ScheduledItem::Reduce { job, .. } => {
                        let mut r = job_maps_done.get(&job).copied().unwrap_or(0);
                        for &sh in &self.shuffles_of_reduce[id] {
                            if !self.timed[sh] {
                                return None; // transfer sequenced after its reduce
                            }
                            r = r.max(self.end_of[sh]);
                        }
                        r
                    }
                };
                let start = cursor.max(release);
                let end = start + item.dur[p];
                self.end_of[id] = end;
                self.timed[id] = true;
                cursor = end;

                let job = item.ident.job();
                if let ScheduledItem::Map { .. } = item.ident {
                    let done = job_maps_done.entry(job).or_insert(0);
                    *done = (*done).max(end);
                }
                if item.counts {
                    let c = completion.entry(job).or_insert(0);
                    *c = (*c).max(end);
                }
                if let Some(out) = record.as_deref_mut() {
                    out.push(Placement {
                        item: item.ident,
                        processor: self.procs[p].clone(),
                        start,
                        end,
                    });
                }
            }
        }

        let mut obj: i128 = 0;
        for job in &self.job_ids {
            let c = completion
                .get(job)
                .copied()
                .expect("every job has a completion-bearing item");
            let w = self.weight[job];
            obj = obj
                .checked_add(w.checked_mul(c as i128).expect("scaled objective overflows"))
                .expect("scaled objective overflows");
        }
        Some(obj)
    }

    fn map_end(&self, job: JobId, map_index: usize) -> Time {
        match self.map_item.get(&(job, map_index)) {
            // Map processors are timed first, so the end is always known.
            Some(&id) if self.timed[id] => self.end_of[id],
            Some(_) => 0,
            // Map stage not part of this search: all map work done at 0.
            None => 0,
        }
    }
}

/// Scales all job weights to integers, returning `(per-job scaled weight,
/// common denominator)`.
fn scaled_weights(inst: &Instance) -> Result<(BTreeMap<JobId, i128>, BigInt), OracleError> {
    let mut lcm = BigInt::one();
    for job in &inst.jobs {
        lcm = lcm.lcm(job.weight.denom());
    }
    let mut out = BTreeMap::new();
    for job in &inst.jobs {
        let scaled = (&job.weight * BigRational::from_integer(lcm.clone()))
            .to_integer();
        let w = scaled.to_i128().ok_or_else(|| {
            OracleError::Unsupported(format!("weight of job {} overflows the search", job.id))
        })?;
        out.insert(job.id, w);
    }
    Ok((out, lcm))
}

struct SearchSetup {
    items: Vec<SearchItem>,
    procs: Vec<String>,
    paired_input: Vec<Option<usize>>,
    shuffles_of_reduce: Vec<Vec<usize>>,
    map_item: BTreeMap<(JobId, usize), usize>,
}

/// Runs the search and materializes the witness placements of the best
/// configuration.
fn search(
    inst: &Instance,
    setup: SearchSetup,
    cfg: &OracleConfig,
) -> Result<(BigRational, Vec<Placement>, u64, Duration), OracleError> {
    let t0 = Instant::now();
    let (weight, lcm) = scaled_weights(inst)?;
    let n = setup.items.len();
    let mut s = Search {
        items: &setup.items,
        procs: &setup.procs,
        paired_input: setup.paired_input,
        weight,
        shuffles_of_reduce: setup.shuffles_of_reduce,
        job_ids: inst.jobs.iter().map(|j| j.id).collect(),
        map_item: setup.map_item,
        seqs: vec![Vec::new(); setup.procs.len()],
        item_proc: vec![UNPLACED; n],
        leaves: 0,
        cap: cfg.max_leaves,
        best: None,
        end_of: vec![0; n],
        timed: vec![false; n],
    };
    s.run()?;
    let leaves = s.leaves;
    let (obj, best_seqs) = s
        .best
        .take()
        .ok_or_else(|| OracleError::Unsupported("no feasible configuration exists".into()))?;
    s.seqs = best_seqs;
    let mut placements = Vec::new();
    let re_obj = s.time_config(Some(&mut placements)).expect("best configuration re-times");
    debug_assert_eq!(re_obj, obj);
    let objective = BigRational::new(BigInt::from(obj), lcm);
    Ok((objective, placements, leaves, t0.elapsed()))
}

fn fixed(ids: std::ops::Range<usize>) -> ProcRule {
    ProcRule::Fixed(ids.collect())
}

// ---------------------------------------------------------------------------
// Public oracles.

/// Exact optimum for scheduling one phase's tasks alone on its pool.
pub fn brute_force_phase(
    inst: &Instance,
    phase: Phase,
    cfg: &OracleConfig,
) -> Result<PhaseOracleResult, OracleError> {
    let pool = inst.pool(phase).to_vec();
    let items: Vec<SearchItem> = inst
        .phase_tasks(phase)
        .into_iter()
        .map(|key| SearchItem {
            ident: match phase {
                Phase::Map => ScheduledItem::Map { job: key.job, index: key.index },
                Phase::Reduce => ScheduledItem::Reduce { job: key.job, index: key.index },
            },
            dur: inst.task_times(key).to_vec(),
            rule: fixed(0..pool.len()),
            counts: true,
        })
        .collect();
    let n = items.len();
    let setup = SearchSetup {
        items,
        procs: pool,
        paired_input: Vec::new(),
        shuffles_of_reduce: vec![Vec::new(); n],
        map_item: BTreeMap::new(),
    };
    let (objective, placements, leaves, elapsed) = search(inst, setup, cfg)?;
    Ok(PhaseOracleResult {
        objective,
        schedule: PhaseSchedule::from_placements(phase, placements),
        leaves,
        elapsed,
    })
}

/// Exact optimum of the two-phase problem without transfer volumes.
pub fn brute_force_mr(inst: &Instance, cfg: &OracleConfig) -> Result<OracleResult, OracleError> {
    if inst.has_shuffle() {
        return Err(OracleError::Unsupported(
            "instance carries shuffle volumes; use the shuffle-aware oracle".into(),
        ));
    }
    let setup = mr_setup(inst, None)?;
    let (objective, placements, leaves, elapsed) = search(inst, setup, cfg)?;
    let schedule = merged_from(inst, placements);
    debug_assert_eq!(schedule.objective, objective);
    Ok(OracleResult { objective, schedule, leaves, elapsed })
}

/// Exact optimum of the full problem with transfers, in either shuffle
/// model. The witness carries zero-volume transfers as zero-length
/// placements at their reduce task's start.
pub fn brute_force_msr(
    inst: &Instance,
    model: ShuffleModel,
    cfg: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    if !inst.has_shuffle() {
        return Err(OracleError::Unsupported(
            "instance has no shuffle volumes; use the plain two-phase oracle".into(),
        ));
    }
    let setup = mr_setup(inst, Some(model))?;
    let (objective, placements, leaves, elapsed) = search(inst, setup, cfg)?;
    let placements = with_zero_transfers(inst, placements, model);
    let schedule = merged_from(inst, placements);
    debug_assert_eq!(schedule.objective, objective);
    Ok(OracleResult { objective, schedule, leaves, elapsed })
}

/// Exact optimum of the transfer-plus-reduce stage alone: every map is
/// already finished at time zero, so transfers have no release constraints
/// and the whole stage competes only for processors.
pub fn brute_force_shuffle_reduce(
    inst: &Instance,
    model: ShuffleModel,
    cfg: &OracleConfig,
) -> Result<ShuffleReduceOptimum, OracleError> {
    if !inst.has_shuffle() {
        return Err(OracleError::Unsupported("instance has no shuffle volumes".into()));
    }
    let setup = stage_setup(inst, model, false)?;
    let (objective, placements, leaves, elapsed) = search(inst, setup, cfg)?;
    let placements = with_zero_transfers(inst, placements, model);
    Ok(ShuffleReduceOptimum { objective, placements, leaves, elapsed })
}

// ---------------------------------------------------------------------------
// Setup helpers.

/// Items and processor universe for the full problem: maps, then reduces,
/// then positive transfers (`shuffle_model` selects where transfers run;
/// `None` means a plain two-phase instance).
fn mr_setup(inst: &Instance, shuffle_model: Option<ShuffleModel>) -> Result<SearchSetup, OracleError> {
    if !inst.pools_disjoint {
        return Err(OracleError::Unsupported(
            "pools share a processor; exhaustive cross-phase ordering is not supported".into(),
        ));
    }
    // A plain two-phase instance has no volumes, so stage_setup adds no
    // transfer items and the model choice is inert.
    stage_setup(inst, shuffle_model.unwrap_or(ShuffleModel::Same), true)
}

/// Builds the search space. `with_maps` includes the map stage (full
/// problem); without it the map work is all done at time zero (the
/// transfer-plus-reduce stage problem).
fn stage_setup(
    inst: &Instance,
    model: ShuffleModel,
    with_maps: bool,
) -> Result<SearchSetup, OracleError> {
    let needs_input = inst.has_shuffle() && model == ShuffleModel::Separate;
    if needs_input && inst.input_procs.is_none() {
        return Err(OracleError::Unsupported(
            "the separate-transfer model needs input processors".into(),
        ));
    }

    let mut procs: Vec<String> = Vec::new();
    let map_base = 0;
    if with_maps {
        procs.extend(inst.map_procs.iter().cloned());
    }
    let input_base = procs.len();
    if needs_input {
        procs.extend(inst.input_procs.as_ref().unwrap().iter().cloned());
    }
    let reduce_base = procs.len();
    procs.extend(inst.reduce_procs.iter().cloned());
    let mut paired_input = vec![None; procs.len()];
    if needs_input {
        for i in 0..inst.reduce_procs.len() {
            paired_input[reduce_base + i] = Some(input_base + i);
        }
    }

    let mut items: Vec<SearchItem> = Vec::new();
    let mut map_item: BTreeMap<(JobId, usize), usize> = BTreeMap::new();
    if with_maps {
        for key in inst.phase_tasks(Phase::Map) {
            map_item.insert((key.job, key.index), items.len());
            items.push(SearchItem {
                ident: ScheduledItem::Map { job: key.job, index: key.index },
                dur: widen(inst.task_times(key), map_base, procs.len()),
                rule: fixed(map_base..map_base + inst.map_procs.len()),
                counts: false,
            });
        }
    }
    let mut reduce_item: BTreeMap<(JobId, usize), usize> = BTreeMap::new();
    for key in inst.phase_tasks(Phase::Reduce) {
        reduce_item.insert((key.job, key.index), items.len());
        items.push(SearchItem {
            ident: ScheduledItem::Reduce { job: key.job, index: key.index },
            dur: widen(inst.task_times(key), reduce_base, procs.len()),
            rule: fixed(reduce_base..reduce_base + inst.reduce_procs.len()),
            counts: true,
        });
    }
    let mut shuffles_of_reduce = vec![Vec::new(); items.len()];
    if inst.has_shuffle() {
        for job in &inst.jobs {
            let rows = job.shuffle.as_ref().unwrap();
            for (k, row) in rows.iter().enumerate() {
                for (r, &t) in row.iter().enumerate() {
                    if t == 0 {
                        continue; // release-only; subsumed by the map stage
                    }
                    let red = reduce_item[&(job.id, r)];
                    let rule = match model {
                        ShuffleModel::Same => ProcRule::SameAs(red),
                        ShuffleModel::Separate => ProcRule::PairedInput(red),
                    };
                    shuffles_of_reduce.push(Vec::new());
                    shuffles_of_reduce[red].push(items.len());
                    items.push(SearchItem {
                        ident: ScheduledItem::Shuffle {
                            job: job.id,
                            reduce_index: r,
                            map_index: k,
                        },
                        dur: vec![t; procs.len()],
                        rule,
                        counts: false,
                    });
                }
            }
        }
    }
    shuffles_of_reduce.resize(items.len(), Vec::new());
    Ok(SearchSetup { items, procs, paired_input, shuffles_of_reduce, map_item })
}

/// Places a pool-local duration vector into universe coordinates.
fn widen(times: &[Time], base: usize, n: usize) -> Vec<Time> {
    let mut out = vec![0; n];
    out[base..base + times.len()].copy_from_slice(times);
    out
}

/// Adds the zero-volume transfers to a witness: each sits, with zero
/// length, at its reduce task's start on the processor the model dictates.
fn with_zero_transfers(
    inst: &Instance,
    mut placements: Vec<Placement>,
    model: ShuffleModel,
) -> Vec<Placement> {
    let reduce_pos: BTreeMap<(JobId, usize), (String, Time)> = placements
        .iter()
        .filter_map(|p| match p.item {
            ScheduledItem::Reduce { job, index } => {
                Some(((job, index), (p.processor.clone(), p.start)))
            }
            _ => None,
        })
        .collect();
    let input_of: BTreeMap<&str, &str> = match (model, &inst.input_procs) {
        (ShuffleModel::Separate, Some(inputs)) => inst
            .reduce_procs
            .iter()
            .zip(inputs)
            .map(|(r, s)| (r.as_str(), s.as_str()))
            .collect(),
        _ => BTreeMap::new(),
    };
    for job in &inst.jobs {
        let Some(rows) = &job.shuffle else { continue };
        for (k, row) in rows.iter().enumerate() {
            for (r, &t) in row.iter().enumerate() {
                if t != 0 {
                    continue;
                }
                let (proc, start) = &reduce_pos[&(job.id, r)];
                let proc = match model {
                    ShuffleModel::Same => proc.clone(),
                    ShuffleModel::Separate => input_of[proc.as_str()].to_string(),
                };
                placements.push(Placement {
                    item: ScheduledItem::Shuffle { job: job.id, reduce_index: r, map_index: k },
                    processor: proc,
                    start: *start,
                    end: *start,
                });
            }
        }
    }
    placements
}

/// Wraps witness placements as a full schedule with exact objective.
fn merged_from(inst: &Instance, placements: Vec<Placement>) -> MergedSchedule {
    let mut job_completion: BTreeMap<JobId, Time> = BTreeMap::new();
    for p in &placements {
        if let ScheduledItem::Reduce { job, .. } = p.item {
            let c = job_completion.entry(job).or_insert(0);
            *c = (*c).max(p.end);
        }
    }
    let objective = inst.weighted_completion(&job_completion);
    MergedSchedule { placements, job_completion, objective }
}
