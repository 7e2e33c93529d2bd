//! An interval-indexed LP lower bound for single-phase weighted completion
//! time on unrelated processors.
//!
//! Time is covered by geometrically growing intervals: index 0 is the
//! degenerate interval `[1, 1]`, and index `l >= 1` covers
//! `((1+delta)^(l-1), (1+delta)^l]`. A fractional variable
//! `y[task, proc, l]` says which share of a task finishes on which
//! processor within which interval. Completion-time variables (one per
//! task, one per job) are tied to the mass by lower-endpoint coefficients,
//! which makes the LP optimum a lower bound on the optimal weighted
//! completion time of the phase — fractional relaxations only ever
//! underestimate.
//!
//! The model deliberately keeps its exact structure around: every row can
//! be reproduced with rational coefficients (see [`LpModel::exact_row`]),
//! so integral schedules can be checked against the LP exactly and the
//! MPS export is a faithful rendering of the float program handed to the
//! solver.

pub mod simplex;

use crate::model::{Instance, JobId, ModelError, Phase, TaskKey, Time};
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use simplex::{Constraint, Program, Relation, SimplexError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("delta must lie strictly between 0 and 1, got {0}")]
    BadDelta(Rational64),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("LP solve failed: {0}")]
    Solver(#[from] SimplexError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// The geometric time grid of one LP. Interval 0 is `[1, 1]`; interval
/// `l >= 1` is `((1+delta)^(l-1), (1+delta)^l]`. `levels` is the smallest
/// L >= 1 with `(1+delta)^(L-1) >= t_max`, where `t_max` (the sum over
/// tasks of their largest processing time) bounds the makespan of any
/// left-shifted schedule, so intervals `0..=levels` cover every reasonable
/// completion time.
#[derive(Clone, Debug)]
pub struct IntervalGrid {
    pub delta: Rational64,
    pub t_max: i128,
    levels: usize,
    /// `upper[l] = (1+delta)^l` for `l = 0..=levels`.
    upper: Vec<BigRational>,
    upper_f: Vec<f64>,
}

impl IntervalGrid {
    /// The highest interval index L.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Exact upper endpoint of interval `l` (`l <= levels`).
    pub fn upper(&self, l: usize) -> &BigRational {
        &self.upper[l]
    }

    pub fn upper_f(&self, l: usize) -> f64 {
        self.upper_f[l]
    }

    /// `(1+delta)^l` for any `l`, extending beyond the grid when asked.
    pub fn power(&self, l: usize) -> BigRational {
        if l < self.upper.len() {
            return self.upper[l].clone();
        }
        let base = &self.upper[1];
        let mut v = self.upper[self.levels].clone();
        for _ in self.levels..l {
            v *= base;
        }
        v
    }

    /// Exact coefficient of interval `l` in the completion-time rows: the
    /// lower endpoint for `l >= 1`, and 1 for the degenerate interval 0.
    pub fn lower_coeff(&self, l: usize) -> BigRational {
        if l == 0 {
            BigRational::one()
        } else {
            self.upper[l - 1].clone()
        }
    }

    pub fn lower_coeff_f(&self, l: usize) -> f64 {
        if l == 0 {
            1.0
        } else {
            self.upper_f[l - 1]
        }
    }

    /// The interval containing integral time `t >= 1`: the smallest `l`
    /// with `upper(l) >= t`. Panics when `t` lies beyond the grid, which
    /// cannot happen for completion times of left-shifted schedules.
    pub fn interval_for(&self, t: Time) -> usize {
        assert!(t >= 1, "completion times are at least 1, got {t}");
        let t = BigRational::from_integer(BigInt::from(t));
        self.upper
            .iter()
            .position(|u| *u >= t)
            .unwrap_or_else(|| panic!("time {t} beyond the grid (t_max {})", self.t_max))
    }
}

/// Builds the grid for one phase of an instance.
pub fn build_grid(inst: &Instance, phase: Phase, delta: Rational64) -> Result<IntervalGrid, LpError> {
    if !delta.is_positive() || delta >= Rational64::one() {
        return Err(LpError::BadDelta(delta));
    }
    let t_max: i128 = inst
        .phase_tasks(phase)
        .iter()
        .map(|&key| inst.task_times(key).iter().copied().max().unwrap_or(0) as i128)
        .sum();
    Ok(grid_for_t_max(t_max, delta))
}

pub(crate) fn grid_for_t_max(t_max: i128, delta: Rational64) -> IntervalGrid {
    let base = BigRational::one()
        + BigRational::new(BigInt::from(*delta.numer()), BigInt::from(*delta.denom()));
    let t_max_rat = BigRational::from_integer(BigInt::from(t_max));
    // levels = smallest L >= 1 with base^(L-1) >= t_max.
    let mut upper = vec![BigRational::one()];
    while upper[upper.len() - 1] < t_max_rat {
        let next = &upper[upper.len() - 1] * &base;
        upper.push(next);
    }
    let levels = (upper.len() - 1).max(0) + 1; // one interval past the covering power
    upper.push(&upper[upper.len() - 1] * &base);
    debug_assert_eq!(upper.len(), levels + 1);
    let upper_f = upper.iter().map(|u| u.to_f64().expect("grid endpoint fits in f64")).collect();
    IntervalGrid { delta, t_max, levels, upper, upper_f }
}

/// Column roles of the LP, in column order: all mass columns, then one
/// completion column per task, then one per job.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpCol {
    /// Share of `task` finishing on `proc` within interval `level`.
    Mass { task: usize, proc: usize, level: usize },
    /// Fractional completion time of `task`.
    TaskCompletion { task: usize },
    /// Fractional completion time of the job at `job_pos` (the maximum of
    /// its tasks' completions, enforced one-sidedly).
    JobCompletion { job_pos: usize },
}

/// Row roles of the LP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpRow {
    /// Each task is fully assigned: its mass sums to at least 1.
    AssignFully { task: usize },
    /// A job completes no earlier than each of its tasks.
    JobAfterTask { task: usize },
    /// Mass in interval `l` contributes at least the interval's lower
    /// endpoint to the task's completion time.
    CompletionMass { task: usize },
    /// Work finishing on `proc` by the end of interval `level` fits into
    /// `[0, (1+delta)^level]`.
    Capacity { proc: usize, level: usize },
}

/// The interval-indexed LP of one phase.
pub struct LpModel {
    pub phase: Phase,
    pub grid: IntervalGrid,
    /// Tasks in canonical order (jobs in instance order, tasks by index);
    /// column/row `task` indices point here.
    pub tasks: Vec<TaskKey>,
    /// Jobs in instance order; `job_pos` indices point here.
    pub job_ids: Vec<JobId>,
    pub cols: Vec<LpCol>,
    pub rows: Vec<LpRow>,
    /// Per task, its mass columns as `(proc, level, col)`, sorted.
    mass_cols: Vec<Vec<(usize, usize, usize)>>,
    /// Processing time of each task on each pool processor.
    times: Vec<Vec<Time>>,
    n_procs: usize,
    /// Job position of each task.
    job_pos: Vec<usize>,
    /// Weight of each job as f64 (for the solver objective).
    weights_f: Vec<f64>,
    first_c: usize,
    first_cd: usize,
}

/// Builds the LP for one phase. Column elimination is structural: a mass
/// column exists only when the task fits inside the interval on that
/// processor (`p <= (1+delta)^level`), so any supported assignment respects
/// the processing-time bound by construction.
pub fn build_lp(inst: &Instance, phase: Phase, delta: Rational64) -> Result<LpModel, LpError> {
    let grid = build_grid(inst, phase, delta)?;
    let tasks = inst.phase_tasks(phase);
    let job_ids: Vec<JobId> = inst.jobs.iter().map(|j| j.id).collect();
    let job_pos: Vec<usize> = tasks
        .iter()
        .map(|key| job_ids.iter().position(|&id| id == key.job).expect("task's job exists"))
        .collect();
    let times: Vec<Vec<Time>> = tasks.iter().map(|&key| inst.task_times(key).to_vec()).collect();
    let n_procs = inst.pool(phase).len();

    let mut cols = Vec::new();
    let mut mass_cols = vec![Vec::new(); tasks.len()];
    for (t, task_times) in times.iter().enumerate() {
        for (proc, &p) in task_times.iter().enumerate() {
            let p_rat = BigRational::from_integer(BigInt::from(p));
            for level in 0..=grid.levels() {
                if p_rat <= *grid.upper(level) {
                    mass_cols[t].push((proc, level, cols.len()));
                    cols.push(LpCol::Mass { task: t, proc, level });
                }
            }
        }
    }
    let first_c = cols.len();
    for t in 0..tasks.len() {
        cols.push(LpCol::TaskCompletion { task: t });
    }
    let first_cd = cols.len();
    for j in 0..job_ids.len() {
        cols.push(LpCol::JobCompletion { job_pos: j });
    }

    let mut rows = Vec::new();
    for t in 0..tasks.len() {
        rows.push(LpRow::AssignFully { task: t });
    }
    for t in 0..tasks.len() {
        rows.push(LpRow::JobAfterTask { task: t });
    }
    for t in 0..tasks.len() {
        rows.push(LpRow::CompletionMass { task: t });
    }
    for proc in 0..n_procs {
        for level in 0..=grid.levels() {
            rows.push(LpRow::Capacity { proc, level });
        }
    }

    let weights_f = inst
        .jobs
        .iter()
        .map(|j| {
            j.weight
                .to_f64()
                .ok_or_else(|| LpError::Numerical(format!("weight of job {} overflows f64", j.id)))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(LpModel {
        phase,
        grid,
        tasks,
        job_ids,
        cols,
        rows,
        mass_cols,
        times,
        n_procs,
        job_pos,
        weights_f,
        first_c,
        first_cd,
    })
}

impl LpModel {
    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    /// Size of the pool this phase schedules on.
    pub fn n_procs(&self) -> usize {
        self.n_procs
    }

    /// Processing time of task `task` (canonical order) on pool processor `proc`.
    pub fn task_time(&self, task: usize, proc: usize) -> Time {
        self.times[task][proc]
    }

    pub fn col_mass(&self, task: usize, proc: usize, level: usize) -> Option<usize> {
        self.mass_cols[task]
            .iter()
            .find(|&&(p, l, _)| p == proc && l == level)
            .map(|&(_, _, c)| c)
    }

    pub fn col_task_completion(&self, task: usize) -> usize {
        self.first_c + task
    }

    pub fn col_job_completion(&self, job_pos: usize) -> usize {
        self.first_cd + job_pos
    }

    /// One row with exact rational coefficients, `(entries, relation, rhs)`.
    pub fn exact_row(&self, row: usize) -> (Vec<(usize, BigRational)>, Relation, BigRational) {
        let one = BigRational::one;
        match self.rows[row] {
            LpRow::AssignFully { task } => {
                let entries = self.mass_cols[task].iter().map(|&(_, _, c)| (c, one())).collect();
                (entries, Relation::Ge, one())
            }
            LpRow::JobAfterTask { task } => (
                vec![
                    (self.col_job_completion(self.job_pos[task]), one()),
                    (self.col_task_completion(task), -one()),
                ],
                Relation::Ge,
                BigRational::zero(),
            ),
            LpRow::CompletionMass { task } => {
                let mut entries: Vec<(usize, BigRational)> = self.mass_cols[task]
                    .iter()
                    .map(|&(_, l, c)| (c, self.grid.lower_coeff(l)))
                    .collect();
                entries.push((self.col_task_completion(task), -one()));
                (entries, Relation::Le, BigRational::zero())
            }
            LpRow::Capacity { proc, level } => {
                let mut entries = Vec::new();
                for (t, cols) in self.mass_cols.iter().enumerate() {
                    let p = BigRational::from_integer(BigInt::from(self.times[t][proc]));
                    for &(cp, l, c) in cols {
                        if cp == proc && l <= level {
                            entries.push((c, p.clone()));
                        }
                    }
                }
                (entries, Relation::Le, self.grid.upper(level).clone())
            }
        }
    }

    /// The float program handed to the solver; a straight rendering of the
    /// exact rows.
    pub fn program(&self) -> Program {
        let mut objective = vec![0.0; self.cols.len()];
        for (j, &w) in self.weights_f.iter().enumerate() {
            objective[self.col_job_completion(j)] = w;
        }
        let constraints = (0..self.rows.len())
            .map(|r| {
                let (entries, rel, rhs) = self.exact_row(r);
                Constraint {
                    coeffs: entries
                        .into_iter()
                        .map(|(c, v)| (c, v.to_f64().expect("coefficient fits in f64")))
                        .collect(),
                    rel,
                    rhs: rhs.to_f64().expect("rhs fits in f64"),
                }
            })
            .collect();
        Program { n_vars: self.cols.len(), objective, constraints }
    }
}

/// An optimal fractional solution of one phase LP.
#[derive(Clone, Debug)]
pub struct FractionalSolution {
    pub objective: f64,
    pub tasks: Vec<TaskKey>,
    pub job_ids: Vec<JobId>,
    /// Per task: `(proc, level, value)` for every existing mass column.
    pub mass: Vec<Vec<(usize, usize, f64)>>,
    /// Fractional completion time per task (same order as `tasks`).
    pub task_completion: Vec<f64>,
    /// Fractional completion time per job (same order as `job_ids`).
    pub job_completion: Vec<f64>,
}

/// Solves the LP to optimality and re-verifies every row of the solution
/// within a 1e-9 relative feasibility tolerance. A violated row means the
/// solver went numerically astray; that is an error, never a silent return.
pub fn solve_lp(model: &LpModel) -> Result<FractionalSolution, LpError> {
    let program = model.program();
    let sol = simplex::solve(&program)?;

    for r in 0..model.rows.len() {
        let c = &program.constraints[r];
        let lhs: f64 = c.coeffs.iter().map(|&(j, v)| v * sol.x[j]).sum();
        let scale = 1.0_f64.max(lhs.abs()).max(c.rhs.abs());
        let tol = 1e-9 * scale;
        let ok = match c.rel {
            Relation::Le => lhs <= c.rhs + tol,
            Relation::Ge => lhs >= c.rhs - tol,
            Relation::Eq => (lhs - c.rhs).abs() <= tol,
        };
        if !ok {
            return Err(LpError::Numerical(format!(
                "row {:?} violated after solve: lhs {lhs}, rhs {}",
                model.rows[r], c.rhs
            )));
        }
    }

    let mass = model
        .mass_cols
        .iter()
        .map(|cols| cols.iter().map(|&(p, l, c)| (p, l, sol.x[c])).collect())
        .collect();
    let task_completion =
        (0..model.tasks.len()).map(|t| sol.x[model.col_task_completion(t)]).collect();
    let job_completion =
        (0..model.job_ids.len()).map(|j| sol.x[model.col_job_completion(j)]).collect();
    Ok(FractionalSolution {
        objective: sol.objective,
        tasks: model.tasks.clone(),
        job_ids: model.job_ids.clone(),
        mass,
        task_completion,
        job_completion,
    })
}

/// Convenience: build and solve the phase LP, returning the model too.
pub fn phase_lp(
    inst: &Instance,
    phase: Phase,
    delta: Rational64,
) -> Result<(LpModel, FractionalSolution), LpError> {
    let model = build_lp(inst, phase, delta)?;
    let sol = solve_lp(&model)?;
    Ok((model, sol))
}

/// Writes the model as MPS text (free format, minimizing; coefficients are
/// the same f64 values the embedded solver sees) for cross-checking with an
/// external solver.
pub fn write_mps(model: &LpModel, out: &mut dyn std::io::Write) -> std::io::Result<()> {
    let col_name = |c: &LpCol| match *c {
        LpCol::Mass { task, proc, level } => format!("Y{task}_{proc}_{level}"),
        LpCol::TaskCompletion { task } => format!("C{task}"),
        LpCol::JobCompletion { job_pos } => format!("CD{job_pos}"),
    };
    let row_name = |r: &LpRow| match *r {
        LpRow::AssignFully { task } => format!("FULL{task}"),
        LpRow::JobAfterTask { task } => format!("JOBC{task}"),
        LpRow::CompletionMass { task } => format!("CMPL{task}"),
        LpRow::Capacity { proc, level } => format!("CAP{proc}_{level}"),
    };
    let num = |v: f64| {
        if v == v.trunc() && v.abs() < 1e15 {
            format!("{}", v as i64)
        } else {
            format!("{v:.17}")
        }
    };

    writeln!(out, "NAME {}_LP", model.phase.name().to_uppercase())?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N COST")?;
    for r in &model.rows {
        let tag = match r {
            LpRow::AssignFully { .. } | LpRow::JobAfterTask { .. } => "G",
            LpRow::CompletionMass { .. } | LpRow::Capacity { .. } => "L",
        };
        writeln!(out, " {tag} {}", row_name(r))?;
    }

    // Gather entries per column (MPS is column-major).
    let mut per_col: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.cols.len()];
    for (ri, r) in model.rows.iter().enumerate() {
        let (entries, _, _) = model.exact_row(ri);
        for (c, v) in entries {
            per_col[c].push((row_name(r), v.to_f64().expect("coefficient fits in f64")));
        }
    }
    for (j, &w) in model.weights_f.iter().enumerate() {
        per_col[model.col_job_completion(j)].push(("COST".into(), w));
    }

    writeln!(out, "COLUMNS")?;
    for (c, entries) in per_col.iter().enumerate() {
        let name = col_name(&model.cols[c]);
        for (row, v) in entries {
            writeln!(out, "    {name} {row} {}", num(*v))?;
        }
    }

    writeln!(out, "RHS")?;
    for (ri, r) in model.rows.iter().enumerate() {
        let (_, _, rhs) = model.exact_row(ri);
        let rhs = rhs.to_f64().expect("rhs fits in f64");
        if rhs != 0.0 {
            writeln!(out, "    RHS {} {}", row_name(r), num(rhs))?;
        }
    }
    writeln!(out, "ENDATA")?;
    Ok(())
}
