//! Schedule types shared by all solvers.

use super::{JobId, Phase, TaskKey, Time};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// What occupies a slice of processor time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScheduledItem {
    Map { job: JobId, index: usize },
    Reduce { job: JobId, index: usize },
    /// The transfer from map task `map_index` to reduce task `reduce_index`
    /// of `job`. Zero-volume transfers are still placed, with `start == end`.
    Shuffle { job: JobId, reduce_index: usize, map_index: usize },
}

impl ScheduledItem {
    pub fn job(&self) -> JobId {
        match *self {
            ScheduledItem::Map { job, .. }
            | ScheduledItem::Reduce { job, .. }
            | ScheduledItem::Shuffle { job, .. } => job,
        }
    }

    /// The map/reduce task this item belongs to (a shuffle belongs to its
    /// reduce task's phase only in the sense of destination; it is not a
    /// task, so this returns `None` for shuffles).
    pub fn task_key(&self) -> Option<TaskKey> {
        match *self {
            ScheduledItem::Map { job, index } => {
                Some(TaskKey { job, phase: Phase::Map, index })
            }
            ScheduledItem::Reduce { job, index } => {
                Some(TaskKey { job, phase: Phase::Reduce, index })
            }
            ScheduledItem::Shuffle { .. } => None,
        }
    }
}

impl std::fmt::Display for ScheduledItem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ScheduledItem::Map { job, index } => write!(f, "map[{index}] of job {job}"),
            ScheduledItem::Reduce { job, index } => write!(f, "reduce[{index}] of job {job}"),
            ScheduledItem::Shuffle { job, reduce_index, map_index } => write!(
                f,
                "shuffle[{map_index}->{reduce_index}] of job {job}"
            ),
        }
    }
}

/// One contiguous, non-preempted execution of an item on a processor over
/// `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub item: ScheduledItem,
    pub processor: String,
    pub start: Time,
    pub end: Time,
}

/// A schedule of the tasks of a single phase, ignoring the other phase and
/// any shuffle volumes. Produced by the single-phase solver and by the
/// phase oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSchedule {
    pub phase: Phase,
    pub placements: Vec<Placement>,
    /// Completion time of each task of the phase, keyed by (job, index).
    pub task_completion: BTreeMap<(JobId, usize), Time>,
    /// Per job, the completion time of its last task of this phase.
    pub job_completion: BTreeMap<JobId, Time>,
}

impl PhaseSchedule {
    /// Derives the completion maps from the placements.
    pub fn from_placements(phase: Phase, placements: Vec<Placement>) -> Self {
        let mut task_completion = BTreeMap::new();
        let mut job_completion: BTreeMap<JobId, Time> = BTreeMap::new();
        for p in &placements {
            if let Some(key) = p.item.task_key() {
                debug_assert_eq!(key.phase, phase);
                task_completion.insert((key.job, key.index), p.end);
                let c = job_completion.entry(key.job).or_insert(p.end);
                *c = (*c).max(p.end);
            }
        }
        PhaseSchedule { phase, placements, task_completion, job_completion }
    }
}

/// A complete schedule of an instance: all map tasks, all reduce tasks, and
/// (for the shuffle problem variants) all shuffle transfers.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedSchedule {
    pub placements: Vec<Placement>,
    pub job_completion: BTreeMap<JobId, Time>,
    /// Weighted sum of job completion times, exact.
    pub objective: num_rational::BigRational,
}

// ---------------------------------------------------------------------------
// JSON form. Placements serialize flat with a "kind" discriminator so that
// schedule files stay greppable; completion maps key jobs by their decimal
// id and the objective is a canonical rational string.

#[derive(Serialize, Deserialize)]
pub(crate) struct RawPlacement {
    pub kind: String,
    pub job: JobId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduce_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_index: Option<usize>,
    pub processor: String,
    pub start: Time,
    pub end: Time,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RawSchedule {
    pub placements: Vec<RawPlacement>,
    pub job_completion: BTreeMap<String, Time>,
    pub objective: String,
}

impl From<&Placement> for RawPlacement {
    fn from(p: &Placement) -> Self {
        let (kind, job, index, reduce_index, map_index) = match p.item {
            ScheduledItem::Map { job, index } => ("map", job, Some(index), None, None),
            ScheduledItem::Reduce { job, index } => ("reduce", job, Some(index), None, None),
            ScheduledItem::Shuffle { job, reduce_index, map_index } => {
                ("shuffle", job, None, Some(reduce_index), Some(map_index))
            }
        };
        RawPlacement {
            kind: kind.to_string(),
            job,
            index,
            reduce_index,
            map_index,
            processor: p.processor.clone(),
            start: p.start,
            end: p.end,
        }
    }
}

impl RawPlacement {
    pub fn parse(&self) -> Result<Placement, String> {
        let item = match self.kind.as_str() {
            "map" => ScheduledItem::Map {
                job: self.job,
                index: self.index.ok_or("map placement without task index")?,
            },
            "reduce" => ScheduledItem::Reduce {
                job: self.job,
                index: self.index.ok_or("reduce placement without task index")?,
            },
            "shuffle" => ScheduledItem::Shuffle {
                job: self.job,
                reduce_index: self.reduce_index.ok_or("shuffle placement without reduce_index")?,
                map_index: self.map_index.ok_or("shuffle placement without map_index")?,
            },
            other => return Err(format!("unknown placement kind {other:?}")),
        };
        Ok(Placement {
            item,
            processor: self.processor.clone(),
            start: self.start,
            end: self.end,
        })
    }
}
