//! Rounding an optimal fractional LP solution into a single-phase schedule.
//!
//! The pipeline: solve the interval-indexed LP, group tasks into geometric
//! *completion classes* by their fractional completion times, filter each
//! task's mass down to the intervals its class allows (rescaling what
//! remains into a fractional assignment), round each class's fractional
//! assignment to an integral one with a matching argument, and lay the
//! classes out back to back in class order. A final left shift removes the
//! idle the block layout leaves behind.
//!
//! Two a-priori guarantees drive everything and are re-checked at runtime:
//! a task of class `l` keeps at least an `(a-1)/a` share of its mass, and
//! each class's integral load on a processor stays within the fractional
//! class load bound plus one task.

use crate::lp::{self, FractionalSolution, IntervalGrid, LpError, LpModel};
use crate::model::{Instance, JobId, Phase, PhaseSchedule, Placement, ScheduledItem, Time};
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error("the class scale a must be greater than 1, got {0}")]
    BadScale(Rational64),
    #[error(transparent)]
    Lp(#[from] LpError),
    /// An internal guarantee failed. This is a bug, never a property of the
    /// input, and callers should treat it as fatal.
    #[error("rounding invariant violated: {0}")]
    Invariant(String),
}

/// Mass below this is treated as solver dust and dropped.
const DUST: f64 = 1e-12;

/// Tasks grouped by completion class: class `l >= 1` holds the tasks whose
/// scaled fractional completion `a * C` lies in `((1+δ)^(l-1), (1+δ)^l]`;
/// class 0 (scaled completion <= 1) stays empty for a > 1 because
/// fractional completions are at least 1.
#[derive(Clone, Debug)]
pub struct ClassPartition {
    pub a: Rational64,
    /// class level -> positions into the solution's task list.
    pub classes: BTreeMap<usize, Vec<usize>>,
}

fn check_scale(a: Rational64) -> Result<(), RoundingError> {
    if a <= Rational64::one() {
        return Err(RoundingError::BadScale(a));
    }
    Ok(())
}

/// The class of a scaled completion value. Exact boundary values may land a
/// hair above their interval in floating point, so boundaries are fuzzed
/// upward; either side keeps every guarantee, the fuzz only makes the
/// choice deterministic and faithful to exact arithmetic in the common case.
fn class_of(grid: &IntervalGrid, v: f64) -> Result<usize, RoundingError> {
    const FUZZ: f64 = 1.0 + 1e-9;
    if v <= FUZZ {
        return Ok(0);
    }
    let mut l = 1usize;
    let mut upper = grid.upper_f(1.min(grid.levels()));
    loop {
        if v <= upper * FUZZ {
            return Ok(l);
        }
        l += 1;
        if l > grid.levels() + 64 {
            return Err(RoundingError::Invariant(format!(
                "scaled completion {v} ran away past the grid"
            )));
        }
        upper = if l <= grid.levels() {
            grid.upper_f(l)
        } else {
            upper * grid.upper_f(1)
        };
    }
}

/// Splits the solution's tasks into completion classes under scale `a`.
pub fn partition_classes(
    grid: &IntervalGrid,
    sol: &FractionalSolution,
    a: Rational64,
) -> Result<ClassPartition, RoundingError> {
    check_scale(a)?;
    let a_f = a.to_f64().expect("scale fits in f64");
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (t, &c) in sol.task_completion.iter().enumerate() {
        let l = class_of(grid, a_f * c)?;
        classes.entry(l).or_default().push(t);
    }
    Ok(ClassPartition { a, classes })
}

/// A fractional assignment per class: each task's kept mass, folded over
/// intervals and renormalized to exactly 1, as processor shares.
#[derive(Clone, Debug)]
pub struct FilteredAssignment {
    /// class level -> tasks as (task position, sparse processor shares),
    /// tasks ordered by (job id, task index).
    pub classes: BTreeMap<usize, Vec<(usize, Vec<(usize, f64)>)>>,
}

/// Folds one task's mass over intervals `0..=l`, returning the surviving
/// total and the per-processor shares renormalized to sum to 1.
fn kept_shares(mass: &[(usize, usize, f64)], l: usize) -> (f64, Vec<(usize, f64)>) {
    let mut kept: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total = 0.0;
    for &(p, lev, v) in mass {
        if lev <= l && v > DUST {
            *kept.entry(p).or_insert(0.0) += v;
            total += v;
        }
    }
    let shares = kept.into_iter().map(|(p, v)| (p, v / total)).collect();
    (total, shares)
}

/// Drops each task's mass outside intervals `0..=l` of its class `l` and
/// rescales the rest into processor shares summing to 1. At least an
/// `(a-1)/a` share survives the filter for every task — that is what the
/// classes are for — and the fractional per-class processor loads stay
/// within `T_l = a/(a-1) * (1+δ)^l`; both facts are re-checked here.
pub fn filter_and_scale(
    model: &LpModel,
    sol: &FractionalSolution,
    part: &ClassPartition,
) -> Result<FilteredAssignment, RoundingError> {
    let grid = &model.grid;
    let a_f = part.a.to_f64().expect("scale fits in f64");
    let keep_share = (a_f - 1.0) / a_f;
    let load_factor = a_f / (a_f - 1.0);

    let mut classes = BTreeMap::new();
    for (&l, members) in &part.classes {
        let mut members = members.clone();
        members.sort_by_key(|&t| (sol.tasks[t].job, sol.tasks[t].index));

        let upper_l = grid.power(l).to_f64().expect("power fits in f64");
        let mut tasks = Vec::with_capacity(members.len());
        let mut load = vec![0.0f64; model.n_procs()];
        for t in members {
            let (total, shares) = kept_shares(&sol.mass[t], l);
            if total + 1e-7 < keep_share {
                return Err(RoundingError::Invariant(format!(
                    "task {} of class {l} keeps only {total} of its mass, expected {keep_share}",
                    sol.tasks[t]
                )));
            }
            for &(p, share) in &shares {
                // Supported processors fit the task inside the class's
                // deadline; this is structural (mass columns only exist from
                // the fitting interval on) but cheap to re-assert.
                debug_assert!(
                    BigRational::from_integer(BigInt::from(model.task_time(t, p)))
                        <= grid.power(l),
                    "support leaked past the class deadline"
                );
                load[p] += share * model.task_time(t, p) as f64;
            }
            tasks.push((t, shares));
        }
        let t_l = load_factor * upper_l;
        for (p, &ld) in load.iter().enumerate() {
            if ld > t_l * (1.0 + 1e-9) + 1e-9 {
                return Err(RoundingError::Invariant(format!(
                    "fractional load {ld} of class {l} on processor {p} exceeds {t_l}"
                )));
            }
        }
        classes.insert(l, tasks);
    }
    Ok(FilteredAssignment { classes })
}

#[derive(Clone, Debug)]
struct Edge {
    task: usize,
    slot: usize,
    mass: f64,
    alive: bool,
}

/// Finds one cycle as an edge-id sequence in path order (consecutive edges
/// share a node, the ends share one too), or `None` for a forest.
/// Deterministic: nodes and adjacency are scanned in index order.
fn find_cycle(edges: &[Edge], adj: &[Vec<usize>], n_nodes: usize, nt: usize) -> Option<Vec<usize>> {
    let other = |e: &Edge, v: usize| if e.task == v { nt + e.slot } else { e.task };
    let mut visited = vec![false; n_nodes];
    let mut parent_edge = vec![usize::MAX; n_nodes];
    for root in 0..n_nodes {
        if visited[root] || adj[root].is_empty() {
            continue;
        }
        visited[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let Some(&e) = adj[v].get(*next) else {
                stack.pop();
                continue;
            };
            *next += 1;
            if !edges[e].alive || e == parent_edge[v] {
                continue;
            }
            let u = other(&edges[e], v);
            if !visited[u] {
                visited[u] = true;
                parent_edge[u] = e;
                stack.push((u, 0));
            } else {
                // Undirected DFS: an edge to a visited vertex is a back
                // edge, so u is an ancestor of v. Close the cycle u ~> v —e→ u.
                let mut cycle = Vec::new();
                let mut w = v;
                while w != u {
                    let pe = parent_edge[w];
                    cycle.push(pe);
                    w = other(&edges[pe], w);
                }
                cycle.push(e);
                return Some(cycle);
            }
        }
    }
    None
}

/// Rounds one class's fractional assignment to an integral one.
///
/// Each processor gets `ceil(total share)` unit slots; shares are poured
/// into the slots in order of non-increasing processing time (ties by the
/// given task order), the resulting task–slot graph is reduced to a forest
/// by cancelling cycles, and the forest is matched leaf by leaf. Every slot
/// takes at most one task from its own support, so a processor's integral
/// load exceeds its fractional load by at most one task's processing time.
///
/// `tasks` holds `(task position, processor shares summing to 1)`, and the
/// slice order is the tie-break order. Returns `(task position, processor)`
/// in the same order.
pub fn round_class(
    tasks: &[(usize, Vec<(usize, f64)>)],
    size: &dyn Fn(usize, usize) -> Time,
    n_procs: usize,
) -> Result<Vec<(usize, usize)>, RoundingError> {
    let nt = tasks.len();
    if nt == 0 {
        return Ok(Vec::new());
    }

    // Unit slots per processor.
    let mut share_total = vec![0.0f64; n_procs];
    for (_, shares) in tasks {
        for &(p, v) in shares {
            share_total[p] += v;
        }
    }
    let mut slots_of = vec![(0usize, 0usize); n_procs]; // (first slot id, count)
    let mut n_slots = 0usize;
    for p in 0..n_procs {
        let k = if share_total[p] <= DUST {
            0
        } else {
            ((share_total[p] - 1e-9).ceil().max(1.0)) as usize
        };
        slots_of[p] = (n_slots, k);
        n_slots += k;
    }
    let n_nodes = nt + n_slots;

    // Pour the shares: per processor, tasks by non-increasing size, filling
    // slot after slot. The last slot absorbs rounding dust beyond its unit
    // capacity; real mass cannot exceed it because ceil(total) slots exist.
    let mut edges: Vec<Edge> = Vec::new();
    for p in 0..n_procs {
        let (first, k) = slots_of[p];
        if k == 0 {
            continue;
        }
        let mut members: Vec<(usize, f64)> = tasks
            .iter()
            .enumerate()
            .filter_map(|(i, (_, shares))| {
                shares.iter().find(|&&(sp, _)| sp == p).map(|&(_, v)| (i, v))
            })
            .collect();
        members.sort_by_key(|&(i, _)| (std::cmp::Reverse(size(tasks[i].0, p)), i));
        let mut slot = 0usize;
        let mut fill = 0.0f64;
        for (i, share) in members {
            let mut rem = share;
            while rem > DUST {
                let cap = if slot + 1 >= k { f64::INFINITY } else { 1.0 };
                let take = rem.min(cap - fill);
                if take > DUST {
                    edges.push(Edge { task: i, slot: first + slot, mass: take, alive: true });
                }
                fill += take;
                rem -= take;
                if fill >= cap - DUST && slot + 1 < k {
                    slot += 1;
                    fill = 0.0;
                }
            }
        }
    }

    let rebuild_adj = |edges: &[Edge]| -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n_nodes];
        for (e, edge) in edges.iter().enumerate() {
            if edge.alive {
                adj[edge.task].push(e);
                adj[nt + edge.slot].push(e);
            }
        }
        adj
    };

    // Cancel cycles: shift mass around each cycle with alternating signs
    // (task totals and slot loads are preserved because consecutive cycle
    // edges share a node) until an edge empties. Each round removes at
    // least one edge, so this terminates.
    loop {
        let adj = rebuild_adj(&edges);
        let Some(cycle) = find_cycle(&edges, &adj, n_nodes, nt) else { break };
        debug_assert!(cycle.len() % 2 == 0, "bipartite cycles have even length");
        let eps = cycle
            .iter()
            .skip(1)
            .step_by(2)
            .map(|&e| edges[e].mass)
            .fold(f64::INFINITY, f64::min);
        for (pos, &e) in cycle.iter().enumerate() {
            if pos % 2 == 0 {
                edges[e].mass += eps;
            } else {
                edges[e].mass -= eps;
                if edges[e].mass <= DUST {
                    edges[e].alive = false;
                }
            }
        }
    }

    // Match the forest leaf by leaf. A leaf task carries (almost) all its
    // unit mass on its single edge, so its slot is saturated and takes it;
    // a leaf slot has exactly one candidate left. Removing a matched pair
    // only frees capacity elsewhere, so the forest stays matchable.
    let mut degree = vec![0usize; n_nodes];
    for edge in edges.iter().filter(|e| e.alive) {
        degree[edge.task] += 1;
        degree[nt + edge.slot] += 1;
    }
    let mut adj = rebuild_adj(&edges);
    let mut assigned: Vec<Option<usize>> = vec![None; nt];
    loop {
        let leaf_task = (0..nt).find(|&v| degree[v] == 1 && assigned[v].is_none());
        let pick = if let Some(v) = leaf_task {
            let e = *adj[v]
                .iter()
                .find(|&&e| edges[e].alive)
                .expect("degree-one node has an alive edge");
            Some((v, edges[e].slot))
        } else {
            (0..n_slots)
                .find(|&s| degree[nt + s] == 1)
                .map(|s| {
                    let e = *adj[nt + s]
                        .iter()
                        .find(|&&e| edges[e].alive)
                        .expect("degree-one node has an alive edge");
                    (edges[e].task, s)
                })
        };
        let Some((task, slot)) = pick else { break };
        let kill = |e: usize, edges: &mut [Edge], degree: &mut [usize]| {
            if edges[e].alive {
                edges[e].alive = false;
                degree[edges[e].task] -= 1;
                degree[nt + edges[e].slot] -= 1;
            }
        };
        if assigned[task].is_some() {
            // Dust pointed a slot at an already-matched task; drop the edge.
            let e = *adj[nt + slot].iter().find(|&&e| edges[e].alive).expect("alive edge");
            kill(e, &mut edges, &mut degree);
            adj = rebuild_adj(&edges);
            continue;
        }
        assigned[task] = Some(slot);
        for e in adj[task].clone() {
            kill(e, &mut edges, &mut degree);
        }
        for e in adj[nt + slot].clone() {
            kill(e, &mut edges, &mut degree);
        }
        adj = rebuild_adj(&edges);
    }
    if edges.iter().any(|e| e.alive) {
        return Err(RoundingError::Invariant(
            "rounding graph kept a cycle after cancellation".into(),
        ));
    }

    let mut slot_proc = vec![0usize; n_slots];
    for p in 0..n_procs {
        let (first, k) = slots_of[p];
        for s in first..first + k {
            slot_proc[s] = p;
        }
    }
    let mut out = Vec::with_capacity(nt);
    for (i, (t, _)) in tasks.iter().enumerate() {
        match assigned[i] {
            Some(slot) => out.push((*t, slot_proc[slot])),
            None => {
                return Err(RoundingError::Invariant(format!(
                    "task at position {t} lost its mass during rounding"
                )))
            }
        }
    }
    Ok(out)
}

/// Everything one phase run produces: the final schedule, the LP evidence
/// it was rounded from, and the completion times before the final left
/// shift (the per-task guarantee is stated against those).
#[derive(Clone, Debug)]
pub struct PhaseOutcome {
    pub schedule: PhaseSchedule,
    pub lp_objective: f64,
    pub fractional: FractionalSolution,
    pub pre_compaction: BTreeMap<(JobId, usize), Time>,
}

/// Solves one phase end to end: LP, classes, filter, per-class rounding,
/// block layout in class order, left-shift compaction.
pub fn task_scheduling(
    inst: &Instance,
    phase: Phase,
    a: Rational64,
    delta: Rational64,
) -> Result<PhaseSchedule, RoundingError> {
    Ok(task_scheduling_detailed(inst, phase, a, delta)?.schedule)
}

/// As [`task_scheduling`], returning the LP evidence too.
pub fn task_scheduling_detailed(
    inst: &Instance,
    phase: Phase,
    a: Rational64,
    delta: Rational64,
) -> Result<PhaseOutcome, RoundingError> {
    check_scale(a)?;
    let (model, sol) = lp::phase_lp(inst, phase, delta)?;
    let part = partition_classes(&model.grid, &sol, a)?;
    let fa = filter_and_scale(&model, &sol, &part)?;

    let a_big = BigRational::new(BigInt::from(*a.numer()), BigInt::from(*a.denom()));
    let one = BigRational::one();
    // Integral per-class load bound: T_l plus one task, (a/(a-1) + 1)(1+δ)^l.
    let load_bound_factor = &a_big / (&a_big - &one) + &one;

    let pool = inst.pool(phase);
    let n_procs = pool.len();
    let mut placements: Vec<Placement> = Vec::new();
    let mut pre_compaction: BTreeMap<(JobId, usize), Time> = BTreeMap::new();
    let mut offset: Time = 0;
    for (&l, class_tasks) in &fa.classes {
        let assign = round_class(class_tasks, &|t, p| model.task_time(t, p), n_procs)?;
        let mut per_proc: Vec<Vec<usize>> = vec![Vec::new(); n_procs];
        for &(t, p) in &assign {
            per_proc[p].push(t); // keeps (job id, task index) order within the class
        }

        let bound = &load_bound_factor * model.grid.power(l);
        let mut span: Time = 0;
        for (p, ts) in per_proc.iter().enumerate() {
            let load: Time = ts.iter().map(|&t| model.task_time(t, p)).sum();
            if BigRational::from_integer(BigInt::from(load)) > bound {
                return Err(RoundingError::Invariant(format!(
                    "integral load {load} of class {l} on processor {p} exceeds {bound}"
                )));
            }
            let mut cur = offset;
            for &t in ts {
                let key = model.tasks[t];
                let dur = model.task_time(t, p);
                let item = match phase {
                    Phase::Map => ScheduledItem::Map { job: key.job, index: key.index },
                    Phase::Reduce => ScheduledItem::Reduce { job: key.job, index: key.index },
                };
                placements.push(Placement {
                    item,
                    processor: pool[p].clone(),
                    start: cur,
                    end: cur + dur,
                });
                cur += dur;
                pre_compaction.insert((key.job, key.index), cur);
            }
            span = span.max(cur - offset);
        }
        offset += span;
    }

    compact(&mut placements);
    Ok(PhaseOutcome {
        schedule: PhaseSchedule::from_placements(phase, placements),
        lp_objective: sol.objective,
        fractional: sol,
        pre_compaction,
    })
}

/// Left-shifts every placement as far as its processor allows, preserving
/// per-processor order. Completion times only improve.
fn compact(placements: &mut [Placement]) {
    let mut by_proc: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in placements.iter().enumerate() {
        by_proc.entry(p.processor.clone()).or_default().push(i);
    }
    for (_, mut idxs) in by_proc {
        idxs.sort_by_key(|&i| (placements[i].start, placements[i].end));
        let mut cursor: Time = 0;
        for i in idxs {
            let dur = placements[i].end - placements[i].start;
            placements[i].start = cursor;
            placements[i].end = cursor + dur;
            cursor += dur;
        }
    }
}
