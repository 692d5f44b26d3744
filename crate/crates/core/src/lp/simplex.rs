//! Embedded dense simplex solver for bounded-variable LPs.
//!
//! Two-phase primal simplex on the full tableau. Every row gets a slack
//! column, rows whose slack cannot absorb the initial residual get an
//! artificial column, and phase 1 minimizes the artificial sum. Pricing is
//! Dantzig with lowest-index tie-breaking; after a run of degenerate pivots
//! the solver switches to Bland's rule until the objective moves again, so
//! termination does not depend on luck. All choices are deterministic:
//! identical problem bytes produce identical solutions.
//!
//! At termination the basic values are recomputed from the original data
//! through a fresh LU factorization of the basis, which removes the drift
//! a long tableau run accumulates, and the solution is checked against the
//! original rows and bounds. A check failure triggers one deterministic
//! retry under Bland's rule from the start; if that also fails the solver
//! reports failure instead of returning a wrong answer.

use super::{LpProblem, LpSolution, LpStatus, Relation, Sense};
use crate::linalg::{Lu, Mat};

const EPS_REDUCED: f64 = 1e-9;
const EPS_PIVOT: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const STALL_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column sitting at zero.
    FreeNb,
}

struct Tableau {
    m: usize,
    ncols: usize,
    n_struct: usize,
    /// m x ncols, row-major.
    t: Vec<f64>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<ColState>,
    basis: Vec<usize>,
    /// Artificial columns: (column index, row, sign).
    artificials: Vec<(usize, usize, f64)>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    bland: bool,
    stall: usize,
    iterations: usize,
    max_iterations: usize,
}

enum StepResult {
    Optimal,
    Unbounded,
    Progress,
}

pub fn solve(problem: &LpProblem, feas_tol: f64) -> LpSolution {
    match run(problem, feas_tol, false) {
        Ok(sol) => sol,
        Err(_) => match run(problem, feas_tol, true) {
            Ok(sol) => sol,
            Err(_) => LpSolution {
                status: LpStatus::SolverFailure,
                objective: f64::NAN,
                values: vec![f64::NAN; problem.n_vars()],
                feasibility_tol: feas_tol,
            },
        },
    }
}

fn run(problem: &LpProblem, feas_tol: f64, bland_from_start: bool) -> Result<LpSolution, String> {
    let n = problem.n_vars();
    let mut tab = Tableau::build(problem, bland_from_start);

    // phase 1: minimize the artificial sum
    if !tab.artificials.is_empty() {
        let mut c1 = vec![0.0; tab.ncols];
        for &(col, _, _) in &tab.artificials {
            c1[col] = 1.0;
        }
        tab.cost = c1;
        tab.refresh_reduced();
        match tab.iterate()? {
            StepResult::Optimal => {}
            StepResult::Unbounded => return Err("phase 1 unbounded".to_string()),
            StepResult::Progress => unreachable!(),
        }
        let infeas: f64 = tab.artificials.iter().map(|&(col, _, _)| tab.x[col]).sum();
        if infeas > PHASE1_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                values: vec![f64::NAN; n],
                feasibility_tol: feas_tol,
            });
        }
        tab.expel_artificials();
    }

    // phase 2: the real objective
    let sign = match problem.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut c2 = vec![0.0; tab.ncols];
    for j in 0..n {
        c2[j] = problem.objective[j] * sign;
    }
    tab.cost = c2;
    tab.refresh_reduced();
    let status = match tab.iterate()? {
        StepResult::Optimal => LpStatus::Optimal,
        StepResult::Unbounded => LpStatus::Unbounded,
        StepResult::Progress => unreachable!(),
    };

    if status == LpStatus::Unbounded {
        return Ok(LpSolution {
            status,
            objective: f64::NAN,
            values: vec![f64::NAN; n],
            feasibility_tol: feas_tol,
        });
    }

    tab.refactorize(problem);
    let values: Vec<f64> = tab.x[..n].to_vec();
    let violation = problem.max_violation(&values);
    if violation > feas_tol {
        return Err(format!("post-check violation {violation:.3e}"));
    }
    let objective: f64 = (0..n).map(|j| problem.objective[j] * values[j]).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        values,
        feasibility_tol: feas_tol,
    })
}

impl Tableau {
    fn build(problem: &LpProblem, bland: bool) -> Tableau {
        let n = problem.n_vars();
        let m = problem.rows.len();

        let mut lower: Vec<f64> = problem.vars.iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = problem.vars.iter().map(|v| v.upper).collect();
        // slack bounds by relation
        for row in &problem.rows {
            let (lo, hi) = match row.rel {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
        }

        // initial nonbasic placement: finite bound nearest zero, free at 0
        let mut x = vec![0.0; n + m];
        let mut state = vec![ColState::AtLower; n + m];
        for j in 0..n + m {
            let (lo, hi) = (lower[j], upper[j]);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => {
                    if lo.abs() <= hi.abs() {
                        x[j] = lo;
                        state[j] = ColState::AtLower;
                    } else {
                        x[j] = hi;
                        state[j] = ColState::AtUpper;
                    }
                }
                (true, false) => {
                    x[j] = lo;
                    state[j] = ColState::AtLower;
                }
                (false, true) => {
                    x[j] = hi;
                    state[j] = ColState::AtUpper;
                }
                (false, false) => {
                    x[j] = 0.0;
                    state[j] = ColState::FreeNb;
                }
            }
        }

        // residuals decide slack-vs-artificial starts
        let mut residual = vec![0.0; m];
        for (i, row) in problem.rows.iter().enumerate() {
            let mut v = row.rhs;
            for &(col, c) in &row.terms {
                v -= c * x[col];
            }
            residual[i] = v;
        }

        let mut basis = Vec::with_capacity(m);
        let mut artificials = Vec::new();
        let mut art_cols: Vec<(usize, f64, f64)> = Vec::new(); // (row, sign, value)
        for i in 0..m {
            let s = n + i;
            let v = residual[i];
            if v >= lower[s] && v <= upper[s] {
                x[s] = v;
                state[s] = ColState::Basic;
                basis.push(s);
            } else {
                let clamped = v.clamp(lower[s], upper[s]);
                x[s] = clamped;
                state[s] = if lower[s].is_finite() && clamped == lower[s] {
                    ColState::AtLower
                } else {
                    ColState::AtUpper
                };
                let d = v - clamped;
                art_cols.push((i, d.signum(), d.abs()));
                basis.push(usize::MAX); // placeholder, fixed below
            }
        }

        let ncols = n + m + art_cols.len();
        let mut t = vec![0.0; m * ncols];
        for (i, row) in problem.rows.iter().enumerate() {
            for &(col, c) in &row.terms {
                t[i * ncols + col] = c;
            }
            t[i * ncols + n + i] = 1.0;
        }
        for (k, &(row, sign, value)) in art_cols.iter().enumerate() {
            let col = n + m + k;
            t[row * ncols + col] = sign;
            // the starting tableau must be B^{-1} A, so a row whose
            // artificial enters with -1 gets sign-normalized
            if sign < 0.0 {
                for j in 0..ncols {
                    t[row * ncols + j] = -t[row * ncols + j];
                }
            }
            lower.push(0.0);
            upper.push(f64::INFINITY);
            x.push(value);
            state.push(ColState::Basic);
            basis[row] = col;
            artificials.push((col, row, sign));
        }

        let max_iterations = 20_000 + 50 * (m + ncols);
        Tableau {
            m,
            ncols,
            n_struct: n,
            t,
            rhs: problem.rows.iter().map(|r| r.rhs).collect(),
            lower,
            upper,
            x,
            state,
            basis,
            artificials,
            cost: vec![0.0; ncols],
            reduced: vec![0.0; ncols],
            bland,
            stall: 0,
            iterations: 0,
            max_iterations,
        }
    }

    #[inline]
    fn t(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    /// Recompute reduced costs from scratch: d = c - c_B' T.
    fn refresh_reduced(&mut self) {
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for j in 0..self.ncols {
                    self.reduced[j] -= cb * row[j];
                }
            }
        }
        for i in 0..self.m {
            self.reduced[self.basis[i]] = 0.0;
        }
    }

    fn iterate(&mut self) -> Result<StepResult, String> {
        let mut since_refresh = 0usize;
        loop {
            match self.step() {
                StepResult::Progress => {
                    self.iterations += 1;
                    since_refresh += 1;
                    if since_refresh >= 200 {
                        self.refresh_reduced();
                        since_refresh = 0;
                    }
                    if self.iterations >= self.max_iterations {
                        return Err(format!("iteration limit {} reached", self.max_iterations));
                    }
                }
                other => return Ok(other),
            }
        }
    }

    /// One pricing + ratio-test + pivot/flip step.
    fn step(&mut self) -> StepResult {
        // pricing
        let mut entering: Option<(usize, f64, f64)> = None; // (col, |d|, dir)
        for j in 0..self.ncols {
            let st = self.state[j];
            if st == ColState::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced[j];
            let dir = match st {
                ColState::AtLower => {
                    if d < -EPS_REDUCED {
                        1.0
                    } else {
                        continue;
                    }
                }
                ColState::AtUpper => {
                    if d > EPS_REDUCED {
                        -1.0
                    } else {
                        continue;
                    }
                }
                ColState::FreeNb => {
                    if d < -EPS_REDUCED {
                        1.0
                    } else if d > EPS_REDUCED {
                        -1.0
                    } else {
                        continue;
                    }
                }
                ColState::Basic => unreachable!(),
            };
            if self.bland {
                entering = Some((j, d.abs(), dir));
                break; // lowest eligible index
            }
            match entering {
                Some((_, best, _)) if d.abs() <= best => {}
                _ => entering = Some((j, d.abs(), dir)),
            }
        }
        let Some((q, _, dir)) = entering else {
            return StepResult::Optimal;
        };

        // ratio test over basic rows
        let mut best_delta = f64::INFINITY;
        let mut leave: Option<usize> = None;
        for i in 0..self.m {
            let a = self.t(i, q);
            if a.abs() <= EPS_PIVOT {
                continue;
            }
            let slope = -dir * a; // d x_basis(i) per unit step
            let b = self.basis[i];
            let delta = if slope > 0.0 {
                if self.upper[b].is_finite() {
                    ((self.upper[b] - self.x[b]) / slope).max(0.0)
                } else {
                    continue;
                }
            } else {
                if !self.lower[b].is_finite() {
                    continue;
                }
                ((self.lower[b] - self.x[b]) / slope).max(0.0)
            };
            let take = match leave {
                None => delta < best_delta,
                Some(r) => {
                    if delta < best_delta - 1e-12 {
                        true
                    } else if delta <= best_delta + 1e-12 {
                        if self.bland {
                            self.basis[i] < self.basis[r]
                        } else {
                            let cur = self.t(r, q).abs();
                            a.abs() > cur + 1e-12
                                || ((a.abs() - cur).abs() <= 1e-12 && self.basis[i] < self.basis[r])
                        }
                    } else {
                        false
                    }
                }
            };
            if take {
                best_delta = best_delta.min(delta);
                leave = Some(i);
            }
        }

        let own_range = self.upper[q] - self.lower[q]; // may be inf
        let limit = own_range.min(best_delta);
        if limit.is_infinite() {
            return StepResult::Unbounded;
        }
        let step = limit.max(0.0);

        // stall bookkeeping: switch to Bland after a degenerate run
        let dz = self.reduced[q] * dir * step;
        if dz.abs() <= 1e-12 {
            self.stall += 1;
            if self.stall > STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.stall = 0;
        }

        if own_range <= best_delta {
            // bound flip: the entering variable crosses to its other bound
            self.apply_motion(q, dir, step);
            self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            self.state[q] = match self.state[q] {
                ColState::AtLower => ColState::AtUpper,
                ColState::AtUpper => ColState::AtLower,
                other => other,
            };
            return StepResult::Progress;
        }

        let r = leave.expect("finite ratio must have a leaving row");
        self.apply_motion(q, dir, step);
        let slope_r = -dir * self.t(r, q);
        let leaving = self.basis[r];
        // the leaving variable lands on the bound it was moving toward
        if slope_r > 0.0 {
            self.x[leaving] = self.upper[leaving];
            self.state[leaving] = ColState::AtUpper;
        } else {
            self.x[leaving] = self.lower[leaving];
            self.state[leaving] = ColState::AtLower;
        }
        self.state[q] = ColState::Basic;
        self.basis[r] = q;
        self.pivot(r, q);
        StepResult::Progress
    }

    /// Move the entering column by `step` and update all basic values.
    fn apply_motion(&mut self, q: usize, dir: f64, step: f64) {
        if step == 0.0 {
            return;
        }
        for i in 0..self.m {
            let a = self.t(i, q);
            if a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= dir * a * step;
            }
        }
        self.x[q] += dir * step;
    }

    /// Gaussian pivot on (r, q): row r normalized, q eliminated elsewhere.
    fn pivot(&mut self, r: usize, q: usize) {
        let ncols = self.ncols;
        let pivot = self.t[r * ncols + q];
        let inv = 1.0 / pivot;
        for j in 0..ncols {
            self.t[r * ncols + j] *= inv;
        }
        self.t[r * ncols + q] = 1.0;
        let pivot_row = self.t[r * ncols..(r + 1) * ncols].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.t[i * ncols + q];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.t[i * ncols..(i + 1) * ncols];
            for j in 0..ncols {
                row[j] -= factor * pivot_row[j];
            }
            row[q] = 0.0;
        }
        let dfac = self.reduced[q];
        if dfac != 0.0 {
            for j in 0..ncols {
                self.reduced[j] -= dfac * pivot_row[j];
            }
            self.reduced[q] = 0.0;
        }
    }

    /// After phase 1: pivot zero-valued basic artificials out where a real
    /// pivot element exists; redundant rows keep their artificial pinned
    /// at [0, 0].
    fn expel_artificials(&mut self) {
        let art_start = self.n_struct + self.m;
        for i in 0..self.m {
            let b = self.basis[i];
            if b < art_start {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..art_start {
                if self.state[j] == ColState::Basic {
                    continue;
                }
                let a = self.t(i, j).abs();
                if a > EPS_PIVOT {
                    match best {
                        Some((_, cur)) if a <= cur => {}
                        _ => best = Some((j, a)),
                    }
                }
            }
            if let Some((j, _)) = best {
                // degenerate pivot: basis change at the same point
                self.state[b] = ColState::AtLower;
                self.x[b] = 0.0;
                self.state[j] = ColState::Basic;
                self.basis[i] = j;
                self.pivot(i, j);
            }
        }
        // no artificial may ever re-enter
        for &(col, _, _) in &self.artificials {
            self.lower[col] = 0.0;
            self.upper[col] = 0.0;
            if self.state[col] != ColState::Basic {
                self.x[col] = 0.0;
            }
        }
    }

    /// Recompute basic values from original data via a fresh LU solve.
    fn refactorize(&mut self, problem: &LpProblem) {
        let m = self.m;
        if m == 0 {
            return;
        }
        let n = self.n_struct;
        let mut bmat = Mat::zeros(m, m);
        for (k, &b) in self.basis.iter().enumerate() {
            if b < n {
                for (i, row) in problem.rows.iter().enumerate() {
                    for &(col, c) in &row.terms {
                        if col == b {
                            bmat[(i, k)] = c;
                        }
                    }
                }
            } else if b < n + m {
                bmat[(b - n, k)] = 1.0;
            } else {
                let &(_, row, sign) = self
                    .artificials
                    .iter()
                    .find(|&&(col, _, _)| col == b)
                    .expect("artificial bookkeeping");
                bmat[(row, k)] = sign;
            }
        }
        let mut basic_flags = vec![false; self.ncols];
        for &b in &self.basis {
            basic_flags[b] = true;
        }
        let mut rhs_adj = self.rhs.clone();
        for (i, row) in problem.rows.iter().enumerate() {
            for &(col, c) in &row.terms {
                if !basic_flags[col] {
                    rhs_adj[i] -= c * self.x[col];
                }
            }
            let s = n + i;
            if !basic_flags[s] {
                rhs_adj[i] -= self.x[s];
            }
        }
        if let Some(lu) = Lu::factor(&bmat) {
            let xb = lu.solve(&rhs_adj);
            for (k, &b) in self.basis.iter().enumerate() {
                self.x[b] = xb[k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::lp::{LpProblem, LpStatus, Relation, Sense, VarId};
    use crate::rng::SeededRng;

    fn status(lp: &LpProblem) -> LpStatus {
        lp.solve().unwrap().status
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        lp.set_objective(x, -1.0);
        assert_eq!(status(&lp), LpStatus::Unbounded);
    }

    #[test]
    fn pure_box_problem() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", -2.0, 5.0);
        let y = lp.add_var("y", 1.0, 4.0);
        lp.set_objective(x, 1.0);
        lp.set_objective(y, -1.0);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.value(x), -2.0);
        assert_eq!(sol.value(y), 4.0);
    }

    #[test]
    fn equality_rows_and_free_vars() {
        // min x + y s.t. x + 2y = 4, x - y = 1 -> x = 2, y = 1
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY);
        lp.add_row("a", [(x, 1.0), (y, 2.0)], Relation::Eq, 4.0);
        lp.add_row("b", [(x, 1.0), (y, -1.0)], Relation::Eq, 1.0);
        lp.set_objective(x, 1.0);
        lp.set_objective(y, 1.0);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert!((sol.value(x) - 2.0).abs() < 1e-9);
        assert!((sol.value(y) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // classic degenerate LP that cycles under naive Dantzig pricing
        let mut lp = LpProblem::new();
        let x1 = lp.add_var("x1", 0.0, f64::INFINITY);
        let x2 = lp.add_var("x2", 0.0, f64::INFINITY);
        let x3 = lp.add_var("x3", 0.0, f64::INFINITY);
        let x4 = lp.add_var("x4", 0.0, f64::INFINITY);
        lp.add_row(
            "r1",
            [(x1, 0.25), (x2, -60.0), (x3, -0.04), (x4, 9.0)],
            Relation::Le,
            0.0,
        );
        lp.add_row(
            "r2",
            [(x1, 0.5), (x2, -90.0), (x3, -0.02), (x4, 3.0)],
            Relation::Le,
            0.0,
        );
        lp.add_row("r3", [(x3, 1.0)], Relation::Le, 1.0);
        lp.set_objective(x1, -0.75);
        lp.set_objective(x2, 150.0);
        lp.set_objective(x3, -0.02);
        lp.set_objective(x4, 6.0);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        // optimum -1/20 at x = (0.04, 0, 1, 0)
        assert!((sol.objective - (-0.05)).abs() < 1e-9, "obj {}", sol.objective);
    }

    #[test]
    fn maximization_sense() {
        // max 3x + 2y s.t. x + y <= 4, x <= 2 -> 10 at (2, 2)
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 0.0, 2.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY);
        lp.add_row("cap", [(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.set_objective(x, 3.0);
        lp.set_objective(y, 2.0);
        lp.set_sense(Sense::Max);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 10.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_variables_respected() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 0.0, 10.0);
        let y = lp.add_var("y", 0.0, 10.0);
        lp.add_row("sum", [(x, 1.0), (y, 1.0)], Relation::Eq, 7.0);
        lp.fix_var(x, 3.0);
        lp.set_objective(y, 1.0);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert!((sol.value(y) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn negative_lower_bounds() {
        // min x + y with x in [-5, -1], y free, x + y >= -2
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", -5.0, -1.0);
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY);
        lp.add_row("r", [(x, 1.0), (y, 1.0)], Relation::Ge, -2.0);
        lp.set_objective(x, 1.0);
        lp.set_objective(y, 1.0);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - (-2.0)).abs() < 1e-9);
    }

    /// Brute-force oracle: enumerate all candidate vertices (intersections
    /// of d active constraints drawn from rows and bounds), keep feasible
    /// ones, take the best objective.
    fn brute_force_min(lp: &LpProblem) -> Option<f64> {
        use crate::linalg::{solve, Mat};
        let n = lp.n_vars();
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        for row in &lp.rows {
            let mut a = vec![0.0; n];
            for &(v, c) in &row.terms {
                a[v] = c;
            }
            planes.push((a, row.rhs));
        }
        for (j, v) in lp.vars.iter().enumerate() {
            if v.lower.is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                planes.push((a, v.lower));
            }
            if v.upper.is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                planes.push((a, v.upper));
            }
        }
        let k = planes.len();
        let mut best: Option<f64> = None;
        fn combos(
            k: usize,
            n: usize,
            start: usize,
            idx: &mut Vec<usize>,
            f: &mut impl FnMut(&[usize]),
        ) {
            if idx.len() == n {
                f(idx);
                return;
            }
            for i in start..k {
                idx.push(i);
                combos(k, n, i + 1, idx, f);
                idx.pop();
            }
        }
        let mut idx = Vec::new();
        combos(k, n, 0, &mut idx, &mut |active: &[usize]| {
            let rows: Vec<Vec<f64>> = active.iter().map(|&i| planes[i].0.clone()).collect();
            let rhs: Vec<f64> = active.iter().map(|&i| planes[i].1).collect();
            let a = Mat::from_rows(&rows);
            if let Some(x) = solve(&a, &rhs) {
                if lp.max_violation(&x) < 1e-7 {
                    let obj: f64 = (0..x.len()).map(|j| lp.objective[j] * x[j]).sum();
                    best = Some(match best {
                        None => obj,
                        Some(b) => b.min(obj),
                    });
                }
            }
        });
        best
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = SeededRng::new(42);
        let mut solved = 0;
        for case in 0..60 {
            let n = 2 + (case % 2); // 2 or 3 vars
            let mut lp = LpProblem::new();
            let vars: Vec<VarId> = (0..n)
                .map(|j| lp.add_var(format!("x{j}"), -2.0 - rng.uniform(), 2.0 + rng.uniform()))
                .collect();
            let n_rows = 2 + rng.usize_below(3);
            for r in 0..n_rows {
                let terms: Vec<(VarId, f64)> =
                    vars.iter().map(|&v| (v, rng.range(-1.0, 1.0))).collect();
                let rhs = rng.range(0.1, 2.0);
                lp.add_row(format!("r{r}"), terms, Relation::Le, rhs);
            }
            for &v in &vars {
                lp.set_objective(v, rng.range(-1.0, 1.0));
            }
            let sol = lp.solve().unwrap();
            let brute = brute_force_min(&lp);
            match (sol.status, brute) {
                (LpStatus::Optimal, Some(b)) => {
                    assert!(
                        (sol.objective - b).abs() < 1e-6,
                        "case {case}: simplex {} vs brute {}",
                        sol.objective,
                        b
                    );
                    solved += 1;
                }
                (LpStatus::Infeasible, None) => {}
                (s, b) => panic!("case {case}: simplex {s:?} vs brute {b:?}"),
            }
        }
        assert!(solved > 30, "too few solvable cases: {solved}");
    }

    #[test]
    fn rhs_relaxation_monotonicity() {
        // weak-duality spot check: relaxing <= rows never worsens a min
        let mut rng = SeededRng::new(7);
        for case in 0..30 {
            let n = 2 + (case % 3);
            let mut lp = LpProblem::new();
            let vars: Vec<VarId> = (0..n)
                .map(|j| lp.add_var(format!("x{j}"), -3.0, 3.0))
                .collect();
            for r in 0..(n + 1) {
                let terms: Vec<(VarId, f64)> =
                    vars.iter().map(|&v| (v, rng.range(-1.0, 1.0))).collect();
                lp.add_row(format!("r{r}"), terms, Relation::Le, rng.range(0.2, 1.5));
            }
            for &v in &vars {
                lp.set_objective(v, rng.range(-1.0, 1.0));
            }
            let base = lp.solve().unwrap();
            if !base.is_optimal() {
                continue;
            }
            let mut relaxed = lp.clone();
            for row in &mut relaxed.rows {
                row.rhs += rng.range(0.0, 0.5);
            }
            let rel = relaxed.solve().unwrap();
            assert!(rel.is_optimal());
            assert!(
                rel.objective <= base.objective + 1e-7,
                "case {case}: relaxation worsened {} -> {}",
                base.objective,
                rel.objective
            );
        }
    }

    #[test]
    fn deterministic_solutions() {
        let mut rng = SeededRng::new(99);
        let mut lp = LpProblem::new();
        let vars: Vec<VarId> = (0..6)
            .map(|j| lp.add_var(format!("x{j}"), -1.0, 1.0))
            .collect();
        for r in 0..8 {
            let terms: Vec<(VarId, f64)> =
                vars.iter().map(|&v| (v, rng.range(-1.0, 1.0))).collect();
            lp.add_row(format!("r{r}"), terms, Relation::Le, rng.range(0.1, 1.0));
        }
        for &v in &vars {
            lp.set_objective(v, rng.range(-1.0, 1.0));
        }
        let a = lp.solve().unwrap();
        let b = lp.solve().unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
