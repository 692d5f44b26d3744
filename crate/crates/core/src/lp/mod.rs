//! Generic linear-program representation and solve contract.
//!
//! Every optimization in the crate — operating regions, dispatch envelopes,
//! tie bounds, facet pushes, coordination, oracles — is assembled as an
//! [`LpProblem`] and solved by the embedded deterministic simplex in
//! [`simplex`]. The contract: exact status at the stated tolerance,
//! identical bytes in → identical values out.

mod simplex;

pub mod regional;

use crate::error::{Error, Result};

/// Column handle into an [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub struct LpVar {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub name: String,
    /// Sparse coefficients, sorted by column with no duplicates.
    pub terms: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub vars: Vec<LpVar>,
    pub rows: Vec<LpRow>,
    /// Dense objective, one coefficient per variable.
    pub objective: Vec<f64>,
    pub sense: Sense,
}

impl Default for LpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl LpProblem {
    pub fn new() -> Self {
        LpProblem {
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Min,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.vars.push(LpVar {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(0.0);
        VarId(self.vars.len() - 1)
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] = coeff;
    }

    pub fn add_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] += coeff;
    }

    pub fn clear_objective(&mut self) {
        self.objective.fill(0.0);
    }

    pub fn set_sense(&mut self, sense: Sense) {
        self.sense = sense;
    }

    /// Add a row. Terms are combined and sorted; zero coefficients dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        rel: Relation,
        rhs: f64,
    ) -> usize {
        let mut combined: Vec<(usize, f64)> = Vec::new();
        for (v, c) in terms {
            combined.push((v.0, c));
        }
        combined.sort_by_key(|&(v, _)| v);
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(combined.len());
        for (v, c) in combined {
            if let Some(last) = terms.last_mut() {
                if last.0 == v {
                    last.1 += c;
                    continue;
                }
            }
            terms.push((v, c));
        }
        terms.retain(|&(_, c)| c != 0.0);
        self.rows.push(LpRow {
            name: name.into(),
            terms,
            rel,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    pub fn fix_var(&mut self, var: VarId, value: f64) {
        self.set_bounds(var, value, value);
    }

    /// Check structural invariants: referenced variables exist, no NaN or
    /// infinite coefficients, finite right-hand sides, bounds ordered.
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(Error::MalformedLp(format!("variable {} has NaN bound", v.name)));
            }
            if v.lower > v.upper {
                return Err(Error::MalformedLp(format!(
                    "variable {} has lower {} > upper {}",
                    v.name, v.lower, v.upper
                )));
            }
            if !self.objective[i].is_finite() {
                return Err(Error::MalformedLp(format!(
                    "objective coefficient of {} is not finite",
                    v.name
                )));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(Error::MalformedLp(format!("row {} has non-finite rhs", row.name)));
            }
            for &(v, c) in &row.terms {
                if v >= self.vars.len() {
                    return Err(Error::MalformedLp(format!(
                        "row {} references unknown column {}",
                        row.name, v
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::MalformedLp(format!(
                        "row {} has non-finite coefficient on {}",
                        row.name, self.vars[v].name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Solve with the default feasibility tolerance.
    pub fn solve(&self) -> Result<LpSolution> {
        self.validate()?;
        Ok(simplex::solve(self, crate::FEAS_TOL))
    }

    /// Row activity `a_i . x` for a candidate point.
    pub fn row_activity(&self, row: &LpRow, x: &[f64]) -> f64 {
        row.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Largest absolute constraint/bound violation of a candidate point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, v) in self.vars.iter().enumerate() {
            if v.lower.is_finite() {
                worst = worst.max(v.lower - x[i]);
            }
            if v.upper.is_finite() {
                worst = worst.max(x[i] - v.upper);
            }
        }
        for row in &self.rows {
            let act = self.row_activity(row, x);
            let gap = match row.rel {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// Debug dump in fixed-column MPS format for cross-checking with
    /// external tools. Columns get generated names (`C000001`, ...) to fit
    /// the fixed-field width; row names likewise.
    pub fn to_mps(&self, name: &str) -> String {
        let mut out = String::new();
        let push_fields = |out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str| {
            // classic fixed columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
            let mut line = String::new();
            line.push(' ');
            line.push_str(&format!("{f1:<2} "));
            line.push_str(&format!("{f2:<9} "));
            line.push_str(&format!("{f3:<9} "));
            line.push_str(&format!("{f4:<14} "));
            line.push_str(&format!("{f5:<9} "));
            line.push_str(f6);
            out.push_str(line.trim_end());
            out.push('\n');
        };
        out.push_str(&format!("NAME          {name}\n"));
        out.push_str("ROWS\n");
        push_fields(&mut out, "N", "OBJ", "", "", "", "");
        for (i, row) in self.rows.iter().enumerate() {
            let tag = match row.rel {
                Relation::Le => "L",
                Relation::Eq => "E",
                Relation::Ge => "G",
            };
            push_fields(&mut out, tag, &format!("R{:06}", i), "", "", "", "");
        }
        out.push_str("COLUMNS\n");
        // objective sign: MPS minimizes; flip for max problems
        let obj_sign = match self.sense {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        };
        let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vars.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(v, c) in &row.terms {
                col_rows[v].push((i, c));
            }
        }
        for (j, entries) in col_rows.iter().enumerate() {
            let cname = format!("C{:06}", j);
            let obj = self.objective[j] * obj_sign;
            if obj != 0.0 {
                push_fields(&mut out, "", &cname, "OBJ", &format!("{obj:.12e}"), "", "");
            }
            for &(i, c) in entries {
                push_fields(
                    &mut out,
                    "",
                    &cname,
                    &format!("R{:06}", i),
                    &format!("{c:.12e}"),
                    "",
                    "",
                );
            }
        }
        out.push_str("RHS\n");
        for (i, row) in self.rows.iter().enumerate() {
            if row.rhs != 0.0 {
                push_fields(
                    &mut out,
                    "",
                    "RHS",
                    &format!("R{:06}", i),
                    &format!("{:.12e}", row.rhs),
                    "",
                    "",
                );
            }
        }
        out.push_str("BOUNDS\n");
        for (j, v) in self.vars.iter().enumerate() {
            let cname = format!("C{:06}", j);
            if v.lower == v.upper {
                push_fields(&mut out, "FX", "BND", &cname, &format!("{:.12e}", v.lower), "", "");
                continue;
            }
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (false, false) => push_fields(&mut out, "FR", "BND", &cname, "", "", ""),
                (true, false) => {
                    // default lower bound in MPS is 0; emit anyway for clarity
                    push_fields(&mut out, "LO", "BND", &cname, &format!("{:.12e}", v.lower), "", "");
                }
                (false, true) => {
                    push_fields(&mut out, "MI", "BND", &cname, "", "", "");
                    push_fields(&mut out, "UP", "BND", &cname, &format!("{:.12e}", v.upper), "", "");
                }
                (true, true) => {
                    push_fields(&mut out, "LO", "BND", &cname, &format!("{:.12e}", v.lower), "", "");
                    push_fields(&mut out, "UP", "BND", &cname, &format!("{:.12e}", v.upper), "", "");
                }
            }
        }
        out.push_str("ENDATA\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Numerical failure; never silently reported as a wrong answer.
    SolverFailure,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// One value per problem variable (meaningful when status is Optimal).
    pub values: Vec<f64>,
    pub feasibility_tol: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    /// Extracts the values of a list of variables.
    pub fn values_of(&self, vars: &[VarId]) -> Vec<f64> {
        vars.iter().map(|&v| self.value(v)).collect()
    }

    /// Convert into a `Result`, mapping non-optimal statuses to errors.
    pub fn into_optimal(self, context: &str) -> Result<LpSolution> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible => Err(Error::Infeasible {
                context: context.to_string(),
            }),
            LpStatus::Unbounded => Err(Error::Unbounded {
                context: context.to_string(),
            }),
            LpStatus::SolverFailure => Err(Error::SolverFailure(context.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_x_with_lower_row() {
        // min x s.t. x >= 3
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        lp.add_row("r", [(x, 1.0)], Relation::Ge, 3.0);
        lp.set_objective(x, 1.0);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert!((sol.value(x) - 3.0).abs() < 1e-9);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        // max x s.t. x <= 1, x >= 2
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        lp.add_row("hi", [(x, 1.0)], Relation::Le, 1.0);
        lp.add_row("lo", [(x, 1.0)], Relation::Ge, 2.0);
        lp.set_objective(x, 1.0);
        lp.set_sense(Sense::Max);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn textbook_simplex_case() {
        // min -x - y s.t. x + y <= 1, x, y >= 0  ->  objective -1
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        let y = lp.add_var("y", 0.0, f64::INFINITY);
        lp.add_row("cap", [(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
        lp.set_objective(x, -1.0);
        lp.set_objective(y, -1.0);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - (-1.0)).abs() < 1e-9);
        assert!((sol.value(x) + sol.value(y) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_rejected() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 0.0, 1.0);
        lp.add_row("bad", [(x, 1.0)], Relation::Le, f64::INFINITY);
        assert!(matches!(lp.solve(), Err(Error::MalformedLp(_))));
    }

    #[test]
    fn mps_dump_structure() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 0.0, 2.0);
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY);
        lp.add_row("r0", [(x, 1.0), (y, -2.0)], Relation::Le, 5.0);
        lp.set_objective(x, 1.0);
        let mps = lp.to_mps("test");
        assert!(mps.starts_with("NAME"));
        for section in ["ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
            assert!(mps.contains(section), "missing {section}");
        }
        assert!(mps.contains("R000000"));
        assert!(mps.contains("C000000"));
        assert!(mps.contains(" FR "));
    }
}
