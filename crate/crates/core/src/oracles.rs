//! Independent ground-truth machinery.
//!
//! Everything here exists to check the fast paths from a different route:
//! exact Fourier-Motzkin projection against the vertex search, a grid
//! brute force against the closed-form minimax fit, Dirichlet sampling
//! with per-point feasibility solves against the region guarantees, and
//! the centralized baseline against the decentralized coordination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::CaseFile;
use crate::lp::regional::{build_all_matrices, build_op1, check_point_feasibility};
use crate::lp::{LpProblem, LpSolution, LpStatus, Relation, Sense, VarId};
use crate::model::matrices::NetworkMatrices;
use crate::model::RegionNetwork;
use crate::par::{map_indexed, Parallelism};
use crate::projection::SecurityRegion;
use crate::rng::SeededRng;
use crate::FEAS_TOL;

/// One inequality `coeffs . x <= rhs` over dense coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IneqRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// A dense inequality system `A x <= b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IneqSystem {
    pub n_vars: usize,
    pub rows: Vec<IneqRow>,
}

impl IneqSystem {
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| crate::linalg::dot(&r.coeffs, x) - r.rhs)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Wrap into an LpProblem with free variables (rows only).
    pub fn to_lp(&self) -> (LpProblem, Vec<VarId>) {
        let mut lp = LpProblem::new();
        let vars: Vec<VarId> = (0..self.n_vars)
            .map(|j| lp.add_var(format!("x{j}"), f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        for (i, row) in self.rows.iter().enumerate() {
            let terms: Vec<(VarId, f64)> = vars
                .iter()
                .zip(&row.coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            lp.add_row(format!("r{i}"), terms, Relation::Le, row.rhs);
        }
        (lp, vars)
    }
}

/// Blowup guards for the exact projection.
const FME_MAX_VARS: usize = 12;
const FME_MAX_ROWS: usize = 40;
const FME_MAX_INTERMEDIATE: usize = 4000;

/// Exact Fourier-Motzkin elimination of `eliminate` (indices into the
/// system's variables), with LP-based redundancy pruning after each
/// elimination step. The result is over the remaining variables in their
/// original relative order.
pub fn fourier_motzkin_project(
    system: &IneqSystem,
    eliminate: &[usize],
) -> Result<(IneqSystem, Vec<usize>)> {
    if system.n_vars > FME_MAX_VARS || system.rows.len() > FME_MAX_ROWS {
        return Err(Error::FmeBlowup(format!(
            "{} vars x {} rows exceeds the exact-projection guard ({FME_MAX_VARS} x {FME_MAX_ROWS})",
            system.n_vars,
            system.rows.len()
        )));
    }
    let mut keep: Vec<usize> = (0..system.n_vars).filter(|j| !eliminate.contains(j)).collect();
    let mut rows: Vec<IneqRow> = system.rows.clone();
    let mut live: Vec<usize> = (0..system.n_vars).collect(); // original index per column

    for &target in eliminate {
        let col = live
            .iter()
            .position(|&orig| orig == target)
            .expect("eliminate indices must be distinct and valid");
        let tol = 1e-11;
        let mut lower: Vec<&IneqRow> = Vec::new(); // coeff < 0: row gives a lower bound
        let mut upper: Vec<&IneqRow> = Vec::new();
        let mut neutral: Vec<IneqRow> = Vec::new();
        for row in &rows {
            let c = row.coeffs[col];
            if c > tol {
                upper.push(row);
            } else if c < -tol {
                lower.push(row);
            } else {
                let mut nr = row.clone();
                nr.coeffs.remove(col);
                neutral.push(nr);
            }
        }
        let mut next = neutral;
        for lo in &lower {
            for up in &upper {
                // positive combination cancelling the target column
                let a = up.coeffs[col];
                let b = -lo.coeffs[col];
                let mut coeffs: Vec<f64> = Vec::with_capacity(rows[0].coeffs.len() - 1);
                for (j, (&cu, &cl)) in up.coeffs.iter().zip(&lo.coeffs).enumerate() {
                    if j != col {
                        coeffs.push(b * cu + a * cl);
                    }
                }
                let rhs = b * up.rhs + a * lo.rhs;
                next.push(IneqRow { coeffs, rhs });
            }
        }
        if next.len() > FME_MAX_INTERMEDIATE {
            return Err(Error::FmeBlowup(format!(
                "elimination produced {} rows (guard {FME_MAX_INTERMEDIATE})",
                next.len()
            )));
        }
        live.remove(col);
        rows = normalize_rows(next)?;
        rows = prune_redundant(rows, live.len())?;
    }

    keep.sort_unstable();
    Ok((
        IneqSystem {
            n_vars: live.len(),
            rows,
        },
        keep,
    ))
}

/// Scale rows to unit norm, drop trivial rows, detect contradictions,
/// dedup syntactic twins.
fn normalize_rows(rows: Vec<IneqRow>) -> Result<Vec<IneqRow>> {
    let mut out: Vec<IneqRow> = Vec::new();
    for mut row in rows {
        let norm = row.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-11 {
            if row.rhs < -1e-9 {
                // 0 <= negative: the system is infeasible; keep one
                // contradictory marker row so callers see it
                return Ok(vec![IneqRow {
                    coeffs: row.coeffs.iter().map(|_| 0.0).collect(),
                    rhs: -1.0,
                }]);
            }
            continue; // trivially true
        }
        for c in &mut row.coeffs {
            *c /= norm;
        }
        row.rhs /= norm;
        let dup = out.iter().any(|r| {
            (r.rhs - row.rhs).abs() < 1e-9
                && r.coeffs
                    .iter()
                    .zip(&row.coeffs)
                    .all(|(a, b)| (a - b).abs() < 1e-9)
        });
        if !dup {
            out.push(row);
        }
    }
    Ok(out)
}

/// Drop rows whose maximum over the remaining system stays below their
/// right-hand side (LP per row; unbounded keeps the row).
fn prune_redundant(rows: Vec<IneqRow>, n_vars: usize) -> Result<Vec<IneqRow>> {
    if rows.len() <= 1 {
        return Ok(rows);
    }
    let mut kept: Vec<IneqRow> = Vec::new();
    for i in 0..rows.len() {
        let mut lp = LpProblem::new();
        let vars: Vec<VarId> = (0..n_vars)
            .map(|j| lp.add_var(format!("x{j}"), f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        for (k, row) in rows.iter().enumerate() {
            if k == i {
                continue;
            }
            let terms: Vec<(VarId, f64)> = vars
                .iter()
                .zip(&row.coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            lp.add_row(format!("r{k}"), terms, Relation::Le, row.rhs);
        }
        for (j, &v) in vars.iter().enumerate() {
            lp.set_objective(v, rows[i].coeffs[j]);
        }
        lp.set_sense(Sense::Max);
        let sol = lp.solve()?;
        let redundant = match sol.status {
            LpStatus::Optimal => sol.objective <= rows[i].rhs + 1e-9,
            LpStatus::Unbounded => false,
            LpStatus::Infeasible => false, // the rest is already empty; keep
            LpStatus::SolverFailure => {
                return Err(Error::SolverFailure("FME redundancy probe".into()))
            }
        };
        if !redundant {
            kept.push(rows[i].clone());
        }
    }
    if kept.is_empty() {
        // everything was mutually redundant (the region is the whole
        // space or rows were equivalent); keep one representative
        kept.push(rows[0].clone());
    }
    Ok(kept)
}

/// Brute-force reference for the minimax affine fit: inner maximization
/// exact over box vertices, outer minimization by iterated grid
/// refinement of the common slope down to 1e-7.
pub fn minmax_bruteforce(coefficients: &[f64], upper: &[f64], lower: &[f64]) -> (f64, f64, f64) {
    let s = coefficients.len();
    assert!(s >= 1 && s <= 4, "brute force is for S <= 4");

    let eval = |a0: f64| -> (f64, f64) {
        // max and min of sum (a_s - a0) x_s over the box
        let mut hi = 0.0;
        let mut lo = 0.0;
        for i in 0..s {
            let c = coefficients[i] - a0;
            let (u, l) = (upper[i], lower[i]);
            hi += if c >= 0.0 { c * u } else { c * l };
            lo += if c >= 0.0 { c * l } else { c * u };
        }
        // optimal intercept centers the residual band
        let b0 = 0.5 * (hi + lo);
        let eps = 0.5 * (hi - lo);
        (b0, eps)
    };

    let mut lo_a = coefficients.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi_a = coefficients.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi_a - lo_a < 1e-12 {
        let (b0, eps) = eval(lo_a);
        return (lo_a, b0, eps);
    }
    let mut best_a = lo_a;
    for _round in 0..6 {
        let steps = 400;
        let mut best_eps = f64::INFINITY;
        for k in 0..=steps {
            let a0 = lo_a + (hi_a - lo_a) * k as f64 / steps as f64;
            let (_, eps) = eval(a0);
            if eps < best_eps {
                best_eps = eps;
                best_a = a0;
            }
        }
        let width = (hi_a - lo_a) / steps as f64;
        lo_a = best_a - 2.0 * width;
        hi_a = best_a + 2.0 * width;
        if width < 1e-8 {
            break;
        }
    }
    let (b0, eps) = eval(best_a);
    (best_a, b0, eps)
}

/// Feasibility counts from sampling a region's interior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleReport {
    pub total: usize,
    pub feasible: usize,
    pub infeasible: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// First few infeasible sample points (coupling coordinates per
    /// period), capped.
    pub infeasible_points: Vec<Vec<Vec<f64>>>,
}

const INFEASIBLE_CAP: usize = 16;

/// Draw `n` random points from the Cartesian product of the per-period
/// regions (Dirichlet vertex weights, seeded) and check each against the
/// full original constraints. Vertex witnesses are mixed with the same
/// weights, so every sample maps to concrete per-tie flows.
pub fn sample_and_check(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    regions: &[SecurityRegion],
    n: usize,
    seed: u64,
    mode: Parallelism,
) -> Result<SampleReport> {
    assert_eq!(regions.len(), network.n_t, "one region per period");
    for r in regions {
        assert!(
            r.n_vertices() >= 1,
            "region {} t={} has no vertices",
            r.region_id,
            r.t
        );
    }
    let outcomes: Vec<Result<(bool, Vec<Vec<f64>>)>> = map_indexed(mode, n, |s| {
        let mut rng = SeededRng::substream(seed, s as u64);
        let mut flows: Vec<Vec<f64>> = Vec::with_capacity(network.n_t);
        let mut zs: Vec<f64> = Vec::with_capacity(network.n_t);
        let mut coords: Vec<Vec<f64>> = Vec::with_capacity(network.n_t);
        for region in regions {
            let weights = rng.dirichlet(region.n_vertices());
            let mut tie = vec![0.0; network.n_ties()];
            let mut z = 0.0;
            let mut coord = vec![0.0; region.dim()];
            for (i, w) in weights.iter().enumerate() {
                for (k, v) in region.witnesses[i].tie.iter().enumerate() {
                    tie[k] += w * v;
                }
                z += w * region.witnesses[i].z;
                for (k, v) in region.vertices[i].iter().enumerate() {
                    coord[k] += w * v;
                }
            }
            flows.push(tie);
            zs.push(z);
            coords.push(coord);
        }
        let ok = check_point_feasibility(network, mats, &flows, &zs)?;
        Ok((ok, coords))
    });

    let mut feasible = 0usize;
    let mut infeasible = 0usize;
    let mut bad_points = Vec::new();
    for outcome in outcomes {
        let (ok, coords) = outcome?;
        if ok {
            feasible += 1;
        } else {
            infeasible += 1;
            if bad_points.len() < INFEASIBLE_CAP {
                bad_points.push(coords);
            }
        }
    }
    Ok(SampleReport {
        total: n,
        feasible,
        infeasible,
        seed,
        tolerance: FEAS_TOL,
        infeasible_points: bad_points,
    })
}

/// Negative-control variant: scale each region's vertices (and witness
/// couplings) by `factor` about the vertex centroid before sampling.
pub fn inflate_region(region: &SecurityRegion, factor: f64) -> SecurityRegion {
    let mut out = region.clone();
    let d = region.dim();
    let n = region.n_vertices() as f64;
    let mut centroid = vec![0.0; d];
    for v in &region.vertices {
        for (k, c) in centroid.iter_mut().enumerate() {
            *c += v[k] / n;
        }
    }
    let n_tie = region.witnesses[0].tie.len();
    let mut tie_centroid = vec![0.0; n_tie];
    let mut z_centroid = 0.0;
    for w in &region.witnesses {
        for (k, c) in tie_centroid.iter_mut().enumerate() {
            *c += w.tie[k] / n;
        }
        z_centroid += w.z / n;
    }
    for (v, w) in out.vertices.iter_mut().zip(&mut out.witnesses) {
        for k in 0..d {
            v[k] = centroid[k] + factor * (v[k] - centroid[k]);
        }
        for k in 0..n_tie {
            w.tie[k] = tie_centroid[k] + factor * (w.tie[k] - tie_centroid[k]);
        }
        w.z = z_centroid + factor * (w.z - z_centroid);
    }
    out
}

/// Centralized curtailment baseline: objective and per-region dispatch.
pub fn solve_centralized_op1(case: &CaseFile) -> Result<(f64, LpSolution)> {
    let mats = build_all_matrices(case)?;
    let (lp, _) = build_op1(case, &mats, None)?;
    let sol = lp.solve()?.into_optimal("centralized baseline")?;
    Ok((sol.objective, sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], rhs: f64) -> IneqRow {
        IneqRow { coeffs: coeffs.to_vec(), rhs }
    }

    #[test]
    fn hand_elimination() {
        // eliminate y from {y <= 1, -y <= 0, x - y <= 0} -> {x <= 1}
        let sys = IneqSystem {
            n_vars: 2,
            rows: vec![
                row(&[0.0, 1.0], 1.0),
                row(&[0.0, -1.0], 0.0),
                row(&[1.0, -1.0], 0.0),
            ],
        };
        let (proj, kept) = fourier_motzkin_project(&sys, &[1]).unwrap();
        assert_eq!(kept, vec![0]);
        assert_eq!(proj.n_vars, 1);
        assert_eq!(proj.rows.len(), 1);
        // normalized x <= 1
        assert!((proj.rows[0].coeffs[0] - 1.0).abs() < 1e-9);
        assert!((proj.rows[0].rhs - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eliminate_nothing_is_identity_modulo_pruning() {
        let sys = IneqSystem {
            n_vars: 2,
            rows: vec![row(&[1.0, 0.0], 1.0), row(&[0.0, 1.0], 2.0)],
        };
        let (proj, kept) = fourier_motzkin_project(&sys, &[]).unwrap();
        assert_eq!(kept, vec![0, 1]);
        assert_eq!(proj.rows.len(), 2);
    }

    #[test]
    fn blowup_guard_refuses() {
        let sys = IneqSystem {
            n_vars: 13,
            rows: vec![row(&[0.0; 13], 1.0)],
        };
        assert!(matches!(
            fourier_motzkin_project(&sys, &[0]),
            Err(Error::FmeBlowup(_))
        ));
    }

    #[test]
    fn projection_preserves_membership() {
        // box with a diagonal cut; eliminating one variable keeps exactly
        // the shadow
        let sys = IneqSystem {
            n_vars: 3,
            rows: vec![
                row(&[1.0, 0.0, 0.0], 1.0),
                row(&[-1.0, 0.0, 0.0], 1.0),
                row(&[0.0, 1.0, 0.0], 1.0),
                row(&[0.0, -1.0, 0.0], 1.0),
                row(&[0.0, 0.0, 1.0], 0.5),
                row(&[0.0, 0.0, -1.0], 0.5),
                row(&[1.0, 1.0, 1.0], 1.2),
            ],
        };
        let (proj, _) = fourier_motzkin_project(&sys, &[2]).unwrap();
        // points inside the shadow: some z in [-0.5, 0.5] satisfies
        // x + y + z <= 1.2, i.e. x + y <= 1.7
        for (x, y, inside) in [
            (0.9, 0.7, true),
            (1.0, 0.69, true),
            (0.95, 0.9, false),
            (-1.0, -1.0, true),
            (1.1, 0.0, false),
        ] {
            let ok = proj.max_violation(&[x, y]) <= 1e-9;
            assert_eq!(ok, inside, "({x},{y})");
        }
    }

    #[test]
    fn bruteforce_single_member() {
        let (a0, b0, eps) = minmax_bruteforce(&[2.5], &[3.0], &[0.0]);
        assert!((a0 - 2.5).abs() < 1e-9);
        assert!(b0.abs() < 1e-9);
        assert!(eps.abs() < 1e-9);
    }

    #[test]
    fn bruteforce_two_member_unit_box() {
        let (_, _, eps) = minmax_bruteforce(&[1.0, 2.0], &[1.0, 1.0], &[0.0, 0.0]);
        assert!((eps - 0.5).abs() < 1e-6);
    }

    #[test]
    fn bruteforce_equal_coefficients() {
        let (_, _, eps) = minmax_bruteforce(&[1.5, 1.5, 1.5], &[2.0, 3.0, 1.0], &[0.0, 0.0, 0.0]);
        assert!(eps.abs() < 1e-9);
    }

    #[test]
    fn centralized_baseline_zero_renewables() {
        let mut case = crate::cases::ieee9_case(1);
        for site in &mut case.regions[0].renewables {
            site.profile = vec![0.0];
        }
        let (obj, _) = solve_centralized_op1(&case).unwrap();
        assert!(obj.abs() < 1e-9);
    }
}
