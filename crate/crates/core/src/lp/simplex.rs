//! A dense two-phase primal simplex solver.
//!
//! This is deliberately a plain tableau implementation: the programs built
//! in this crate are small (hundreds of rows, a few thousand columns), and
//! a transparent solver that is easy to audit beats a fast one here.
//! Determinism matters more than speed: pivoting uses fixed tie-breaking
//! (lowest column / lowest basic variable), so the same program always
//! yields bit-identical solutions.

/// Relation of one constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One row `sum coeffs · x  (<=|>=|=)  rhs` with sparse coefficients.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

/// Minimize `objective · x` subject to the constraints and `x >= 0`.
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimplexError {
    #[error("the program is infeasible")]
    Infeasible,
    #[error("the program is unbounded")]
    Unbounded,
    #[error("iteration limit exceeded (cycling or numerical trouble)")]
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub objective: f64,
    pub x: Vec<f64>,
}

const EPS: f64 = 1e-9;
/// Smallest tableau entry worth pivoting on. Entries below this are treated
/// as zero by the ratio test: after many pivots the tableau carries noise
/// of roughly EPS size, and pivoting on a noise entry admits a linearly
/// dependent column into the basis, which corrupts the rest of the solve.
/// The programs built here are well scaled (coefficients between 2/3 and a
/// few hundred), so a genuine entry this small does not occur.
const PIVOT_TOL: f64 = 1e-7;
/// Consecutive non-improving pivots tolerated before switching to Bland's
/// rule, which cannot cycle.
const STALL_LIMIT: u32 = 64;

struct Tableau {
    /// Constraint rows, each `n_total` coefficients.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Reduced costs of all columns under the current basis.
    reduced: Vec<f64>,
    objective: f64,
    /// Basic column of each row.
    basis: Vec<usize>,
    /// Whether each column is currently basic. A basic column's reduced
    /// cost is exactly zero mathematically, but the stored one drifts; this
    /// keeps a drifted basic column from re-entering (which would corrupt
    /// the basis).
    in_basis: Vec<bool>,
    n_total: usize,
    /// Columns that may never enter the basis (artificials in phase 2).
    banned_from: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        debug_assert!(piv.abs() > EPS);
        let inv = 1.0 / piv;
        for v in &mut self.rows[row] {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor == 0.0 {
                continue;
            }
            let target = &mut self.rows[i];
            for (t, p) in target.iter_mut().zip(&pivot_row) {
                *t -= factor * p;
            }
            target[col] = 0.0; // exact, avoids residue
            self.rhs[i] -= factor * pivot_rhs;
            if self.rhs[i].abs() < 1e-12 {
                self.rhs[i] = 0.0;
            }
        }
        let rfac = self.reduced[col];
        if rfac != 0.0 {
            for (r, p) in self.reduced.iter_mut().zip(&pivot_row) {
                *r -= rfac * p;
            }
            self.reduced[col] = 0.0;
            self.objective += rfac * pivot_rhs;
        }
        self.in_basis[self.basis[row]] = false;
        self.basis[row] = col;
        self.in_basis[col] = true;
    }

    /// Entering column under Dantzig's rule (most negative reduced cost,
    /// lowest index on ties) or Bland's rule (lowest index with negative
    /// reduced cost).
    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n_total {
            if j >= self.banned_from {
                break;
            }
            if self.in_basis[j] {
                continue;
            }
            let r = self.reduced[j];
            if r < -EPS {
                if bland {
                    return Some(j);
                }
                if best.map_or(true, |(_, br)| r < br) {
                    best = Some((j, r));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Leaving row by the minimum ratio test; ties go to the row whose basic
    /// variable has the lowest index (lexicographic safeguard).
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows.len() {
            let a = self.rows[i][col];
            if a > PIVOT_TOL {
                let ratio = self.rhs[i] / a;
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - EPS
                            || (ratio < br + EPS && self.basis[i] < self.basis[bi])
                        {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn run(&mut self, max_iters: u64) -> Result<(), SimplexError> {
        let mut bland = false;
        let mut stall = 0u32;
        for _ in 0..max_iters {
            let Some(col) = self.entering(bland) else {
                return Ok(());
            };
            let Some(row) = self.leaving(col) else {
                return Err(SimplexError::Unbounded);
            };
            let before = self.objective;
            self.pivot(row, col);
            if self.objective < before - 1e-12 {
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall >= STALL_LIMIT {
                    bland = true;
                }
            }
        }
        Err(SimplexError::IterationLimit)
    }

    /// Installs reduced costs for the given column costs under the current
    /// basis.
    fn price(&mut self, cost: &[f64]) {
        self.reduced.copy_from_slice(cost);
        self.objective = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.rows[i];
                for (r, a) in self.reduced.iter_mut().zip(row) {
                    *r -= cb * a;
                }
                self.objective += cb * self.rhs[i];
            }
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }
}

/// Solves the program to a basic optimal solution.
pub fn solve(p: &Program) -> Result<Solution, SimplexError> {
    assert_eq!(p.objective.len(), p.n_vars, "objective length must match n_vars");
    if p.constraints.is_empty() {
        // With x >= 0 and nothing else, each variable sits at 0 unless its
        // cost rewards growing it, which would be unbounded.
        if p.objective.iter().any(|&c| c < -EPS) {
            return Err(SimplexError::Unbounded);
        }
        return Ok(Solution { objective: 0.0, x: vec![0.0; p.n_vars] });
    }

    let m = p.constraints.len();
    // Column layout: structural | slack/surplus | artificial.
    let mut n_slack = 0usize;
    for c in &p.constraints {
        if c.rel != Relation::Eq {
            n_slack += 1;
        }
    }
    let n_total = p.n_vars + n_slack + m; // at most one artificial per row
    let mut rows = vec![vec![0.0; n_total]; m];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![usize::MAX; m];
    let mut slack_at = p.n_vars;
    let mut art_at = p.n_vars + n_slack;
    let mut n_art = 0usize;

    for (i, c) in p.constraints.iter().enumerate() {
        // Normalize to rhs >= 0 so the initial basis is feasible.
        let flip = c.rhs < 0.0;
        let sgn = if flip { -1.0 } else { 1.0 };
        for &(j, v) in &c.coeffs {
            assert!(j < p.n_vars, "constraint references column {j} out of {}", p.n_vars);
            rows[i][j] += sgn * v;
        }
        rhs[i] = sgn * c.rhs;
        let rel = match (c.rel, flip) {
            (Relation::Eq, _) => Relation::Eq,
            (r, false) => r,
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
        };
        match rel {
            Relation::Le => {
                rows[i][slack_at] = 1.0;
                basis[i] = slack_at;
                slack_at += 1;
            }
            Relation::Ge => {
                rows[i][slack_at] = -1.0;
                slack_at += 1;
                rows[i][art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
                n_art += 1;
            }
            Relation::Eq => {
                rows[i][art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
                n_art += 1;
            }
        }
    }

    // Pristine copies: pivoting drifts the tableau, so the returned point is
    // re-derived from these at the end.
    let a0 = rows.clone();
    let b0 = rhs.clone();

    let mut in_basis = vec![false; n_total];
    for &b in &basis {
        in_basis[b] = true;
    }
    let mut t = Tableau {
        rows,
        rhs,
        reduced: vec![0.0; n_total],
        objective: 0.0,
        basis,
        in_basis,
        n_total,
        banned_from: n_total,
    };
    let max_iters = 2_000 + 50 * (m as u64 + n_total as u64);

    if n_art > 0 {
        // Phase 1: minimize the artificial total.
        let mut cost = vec![0.0; n_total];
        for j in (p.n_vars + n_slack)..(p.n_vars + n_slack + n_art) {
            cost[j] = 1.0;
        }
        t.price(&cost);
        t.run(max_iters)?;
        if t.objective > 1e-7 {
            return Err(SimplexError::Infeasible);
        }
        // Drive leftover artificials out of the basis where possible, on the
        // largest eligible entry. A row that offers no pivot is redundant:
        // its remaining entries are pivoting noise, and phase-2 pivots would
        // slowly leak real mass into the pinned artificial through them, so
        // the whole row is snapped to exact zeros instead.
        for i in 0..m {
            if t.basis[i] >= p.n_vars + n_slack {
                let col = (0..p.n_vars + n_slack)
                    .max_by(|&a, &b| {
                        t.rows[i][a].abs().partial_cmp(&t.rows[i][b].abs()).expect("finite")
                    })
                    .expect("programs have at least one column");
                if t.rows[i][col].abs() > PIVOT_TOL {
                    t.pivot(i, col);
                } else {
                    for j in 0..p.n_vars + n_slack {
                        t.rows[i][j] = 0.0;
                    }
                    t.rhs[i] = 0.0;
                }
            }
        }
    }
    t.banned_from = p.n_vars + n_slack;

    // Phase 2: the real objective.
    let mut cost = vec![0.0; n_total];
    cost[..p.n_vars].copy_from_slice(&p.objective);
    t.price(&cost);
    t.run(max_iters)?;

    // The tableau's rhs accumulates rounding error over hundreds of pivots.
    // The basis itself is the discrete result of the solve; its variable
    // values are re-derived from the pristine constraint data, so the
    // returned point satisfies the rows to fresh-solve accuracy.
    let mut x = vec![0.0; p.n_vars];
    match basic_values(&a0, &b0, &t.basis) {
        Some(y) => {
            for (k, &b) in t.basis.iter().enumerate() {
                if b < p.n_vars {
                    x[b] = y[k].max(0.0);
                }
            }
        }
        None => {
            // A numerically singular basis should not happen; fall back to
            // the tableau's own values rather than failing the solve.
            for (i, &b) in t.basis.iter().enumerate() {
                if b < p.n_vars {
                    x[b] = t.rhs[i].max(0.0);
                }
            }
        }
    }
    let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(Solution { objective, x })
}

/// Solves `B y = b` for the values of the basic variables, where column `k`
/// of `B` is the full constraint column of `basis[k]`. Plain Gaussian
/// elimination with partial pivoting; deterministic (first maximal pivot
/// wins). Returns `None` when the basis matrix is numerically singular.
fn basic_values(a: &[Vec<f64>], b: &[f64], basis: &[usize]) -> Option<Vec<f64>> {
    let m = a.len();
    let mut work = vec![vec![0.0f64; m + 1]; m];
    for i in 0..m {
        for (k, &col) in basis.iter().enumerate() {
            work[i][k] = a[i][col];
        }
        work[i][m] = b[i];
    }
    for col in 0..m {
        let mut piv = col;
        for r in col + 1..m {
            if work[r][col].abs() > work[piv][col].abs() {
                piv = r;
            }
        }
        if work[piv][col].abs() < 1e-12 {
            return None;
        }
        work.swap(col, piv);
        let inv = 1.0 / work[col][col];
        for r in col + 1..m {
            let f = work[r][col] * inv;
            if f == 0.0 {
                continue;
            }
            work[r][col] = 0.0;
            for j in col + 1..=m {
                let upper = work[col][j];
                work[r][j] -= f * upper;
            }
        }
    }
    let mut y = vec![0.0f64; m];
    for col in (0..m).rev() {
        let mut v = work[col][m];
        for j in col + 1..m {
            v -= work[col][j] * y[j];
        }
        y[col] = v / work[col][col];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn con(coeffs: &[(usize, f64)], rel: Relation, rhs: f64) -> Constraint {
        Constraint { coeffs: coeffs.to_vec(), rel, rhs }
    }

    #[test]
    fn maximizes_via_negated_costs() {
        // max x + 2y s.t. x + y <= 4, x <= 2, y <= 3  ->  (1, 3), value 7.
        let p = Program {
            n_vars: 2,
            objective: vec![-1.0, -2.0],
            constraints: vec![
                con(&[(0, 1.0), (1, 1.0)], Relation::Le, 4.0),
                con(&[(0, 1.0)], Relation::Le, 2.0),
                con(&[(1, 1.0)], Relation::Le, 3.0),
            ],
        };
        let s = solve(&p).unwrap();
        assert!((s.objective + 7.0).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.x[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn handles_ge_and_eq_rows() {
        // min 2x + 3y s.t. x + y = 10, y >= 4: all mass shifts to the
        // cheaper x until the >= row pins y, so (6, 4) with value 24.
        let p = Program {
            n_vars: 2,
            objective: vec![2.0, 3.0],
            constraints: vec![
                con(&[(0, 1.0), (1, 1.0)], Relation::Eq, 10.0),
                con(&[(1, 1.0)], Relation::Ge, 4.0),
            ],
        };
        let s = solve(&p).unwrap();
        assert!((s.objective - 24.0).abs() < 1e-9);
        assert!((s.x[0] - 6.0).abs() < 1e-9);
        assert!((s.x[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        // x <= -1 with x >= 0.
        let p = Program {
            n_vars: 1,
            objective: vec![1.0],
            constraints: vec![con(&[(0, 1.0)], Relation::Le, -1.0)],
        };
        assert_eq!(solve(&p).unwrap_err(), SimplexError::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // min -x s.t. x >= 1.
        let p = Program {
            n_vars: 1,
            objective: vec![-1.0],
            constraints: vec![con(&[(0, 1.0)], Relation::Ge, 1.0)],
        };
        assert_eq!(solve(&p).unwrap_err(), SimplexError::Unbounded);
    }

    #[test]
    fn negative_rhs_rows_are_normalized() {
        // -x - y <= -2 is x + y >= 2; min x + y -> 2.
        let p = Program {
            n_vars: 2,
            objective: vec![1.0, 1.0],
            constraints: vec![con(&[(0, -1.0), (1, -1.0)], Relation::Le, -2.0)],
        };
        let s = solve(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn survives_a_degenerate_program() {
        // Beale's classic cycling example (degenerate under naive pivoting).
        let p = Program {
            n_vars: 4,
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            constraints: vec![
                con(&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0),
                con(&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0),
                con(&[(2, 1.0)], Relation::Le, 1.0),
            ],
        };
        let s = solve(&p).unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9, "got {}", s.objective);
    }

    #[test]
    fn empty_program_is_trivial() {
        let p = Program { n_vars: 3, objective: vec![1.0, 0.0, 2.0], constraints: vec![] };
        let s = solve(&p).unwrap();
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.x, vec![0.0, 0.0, 0.0]);
    }
}
