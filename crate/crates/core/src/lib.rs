//! Weighted completion-time scheduling for jobs made of map, shuffle and
//! reduce tasks on unrelated processors.
//!
//! An [`model::Instance`] describes a set of weighted jobs. Each job owns one
//! or more map tasks and one or more reduce tasks; processing times are
//! *unrelated*, i.e. every task carries its own time per processor.
//! Optionally, each (map task, reduce task) pair of a job carries a data
//! transfer ("shuffle") volume that has to move after the map task finishes
//! and before the reduce task starts. A job completes when its last reduce
//! task does, and the objective throughout is the weighted sum of job
//! completion times.
//!
//! The crate is organised as a pipeline:
//!
//! * [`model`] — instance and schedule types, canonical JSON
//!   (de)serialization, a schedule validator and a seeded instance generator.
//! * [`lp`] — an interval-indexed linear program whose optimum lower-bounds
//!   the optimal weighted completion time of a single phase.
//! * [`rounding`] — rounds an optimal fractional LP solution into a
//!   single-phase schedule with a constant-factor guarantee.
//! * [`merge`] — combines a map-phase and a reduce-phase schedule into one
//!   schedule of the whole instance that respects map-before-reduce
//!   precedence, losing at most a factor two.
//! * [`shuffle`] — folds shuffle volumes into their reduce tasks, expands
//!   them back out of a solved schedule, and hosts the end-to-end solvers
//!   for both shuffle placements (on the reduce processors, or on dedicated
//!   input processors).
//! * [`oracle`] — exhaustive optimal solvers for small instances, used to
//!   measure empirical approximation ratios against the true optimum.
//! * [`report`] — the per-run summary record emitted by the solvers.

pub mod lp;
pub mod merge;
pub mod model;
pub mod oracle;
pub mod report;
pub mod rounding;
pub mod shuffle;

pub use model::{Instance, Job, JobId, Phase, Task, TaskKey, Time};
pub use report::RatioReport;
