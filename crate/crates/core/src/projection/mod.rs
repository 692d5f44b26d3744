//! Vertex-search projection of an LP's feasible set onto few coordinates.
//!
//! The projection of a polytope is explored from inside: axis-extreme LPs
//! seed a vertex set, its hull's facet normals become push directions,
//! each push LP either certifies a facet as supporting or produces a new
//! boundary point, and the loop stops when a sweep adds nothing (the hull
//! is then exact) or the relative volume change drops below the
//! threshold. Every kept point carries the full LP solution it came from,
//! so downstream consumers get a feasibility witness per vertex.
//!
//! Rank-deficient projections (pinned coordinates, forced equalities) are
//! detected by probing the orthogonal complement of the seed's affine
//! hull; the search then runs inside that flat and reports the embedding.

pub mod hull;

use serde::{Deserialize, Serialize};

use crate::aggregation::{AggregationPlan, MinMaxFit, ReducedPeriodVars, TieBounds};
use crate::envelope::DispatchEnvelope;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::lp::regional::Witness;
use crate::lp::{LpProblem, LpSolution, LpStatus, Sense, VarId};
use crate::model::matrices::NetworkMatrices;
use crate::model::RegionNetwork;
use crate::par::{map_indexed, Parallelism};
use hull::{convex_hull, dedup_halfspaces, AffineFrame, Hull, HullOutcome};

/// `normal . y <= offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Dual-representation convex body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub halfspaces: Vec<Halfspace>,
    /// Geometric tolerance the representations were built at.
    pub tolerance: f64,
    /// Triangulated facets (vertex list indices) for volume computation;
    /// empty for degenerate bodies.
    #[serde(default)]
    pub simplices: Vec<Vec<usize>>,
}

impl Polytope {
    /// Exact hull of a full-dimensional point set. Degenerate input is an
    /// error carrying its affine hull rank.
    pub fn from_points(points: &[Vec<f64>], tolerance: f64) -> Result<Polytope> {
        match convex_hull(points, tolerance) {
            HullOutcome::Full(h) => Ok(Polytope::from_hull(&h, points, tolerance)),
            HullOutcome::Degenerate(frame) => Err(Error::Degenerate(format!(
                "points span an affine subspace of rank {} < {}",
                frame.rank(),
                points[0].len()
            ))),
        }
    }

    fn from_hull(h: &Hull, points: &[Vec<f64>], tolerance: f64) -> Polytope {
        let vertices: Vec<Vec<f64>> =
            h.vertex_indices.iter().map(|&i| points[i].clone()).collect();
        let remap: std::collections::BTreeMap<usize, usize> = h
            .vertex_indices
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let simplices = h
            .facets
            .iter()
            .map(|f| f.vertices.iter().map(|v| remap[v]).collect())
            .collect();
        let halfspaces = dedup_halfspaces(&h.facets, 1e-7)
            .into_iter()
            .map(|(normal, offset)| Halfspace { normal, offset })
            .collect();
        Polytope {
            dim: h.dim,
            vertices,
            halfspaces,
            tolerance,
            simplices,
        }
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.halfspaces
            .iter()
            .all(|h| dot(&h.normal, y) <= h.offset + tol)
    }

    /// Simplex-decomposition volume; 0 for degenerate bodies.
    pub fn volume(&self) -> f64 {
        if self.simplices.is_empty() {
            return 0.0;
        }
        let d = self.dim;
        let mut centroid = vec![0.0; d];
        for v in &self.vertices {
            for (i, c) in centroid.iter_mut().enumerate() {
                *c += v[i];
            }
        }
        for c in &mut centroid {
            *c /= self.vertices.len() as f64;
        }
        let factorial: f64 = (1..=d).map(|k| k as f64).product();
        let mut total = 0.0;
        for s in &self.simplices {
            let mut m = crate::linalg::Mat::zeros(d, d);
            for (r, &v) in s.iter().enumerate() {
                for j in 0..d {
                    m[(r, j)] = self.vertices[v][j] - centroid[j];
                }
            }
            total += crate::linalg::det(&m).abs() / factorial;
        }
        total
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    /// Relative volume-change stopping threshold.
    pub volume_tol: f64,
    /// Sweep cap; exhaustion returns `converged = false`.
    pub max_iters: usize,
    pub mode: Parallelism,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            volume_tol: 1e-3,
            max_iters: 50,
            mode: Parallelism::default(),
        }
    }
}

/// Scaled vertex dedup tolerance.
const DEDUP_TOL: f64 = 1e-7;
/// Facet-push improvement threshold.
const PUSH_TOL: f64 = 1e-7;

/// Result of projecting an LP's feasible set onto `coords`.
#[derive(Debug, Clone)]
pub struct ProjectedRegion {
    pub dim: usize,
    /// Hull vertices in projection coordinates (full space).
    pub vertices: Vec<Vec<f64>>,
    /// Full-space halfspaces (lifted facets plus flat equalities when the
    /// region is rank-deficient).
    pub halfspaces: Vec<Halfspace>,
    /// Full LP solutions, one per vertex.
    pub witnesses: Vec<Vec<f64>>,
    pub frame: Option<AffineFrame>,
    pub converged: bool,
    pub sweeps: usize,
    /// Working-space hull volume per sweep (monotone nondecreasing).
    pub volume_history: Vec<f64>,
    /// Full-space volume: 0 when the region is flat.
    pub volume: f64,
    pub tolerance: f64,
}

impl ProjectedRegion {
    pub fn to_polytope(&self) -> Polytope {
        Polytope {
            dim: self.dim,
            vertices: self.vertices.clone(),
            halfspaces: self.halfspaces.clone(),
            tolerance: self.tolerance,
            simplices: Vec::new(),
        }
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.halfspaces
            .iter()
            .all(|h| dot(&h.normal, y) <= h.offset + tol)
    }
}

fn solve_direction(
    base: &LpProblem,
    coords: &[VarId],
    direction: &[f64],
    context: &str,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut lp = base.clone();
    lp.clear_objective();
    for (k, &v) in coords.iter().enumerate() {
        if direction[k] != 0.0 {
            lp.set_objective(v, direction[k]);
        }
    }
    lp.set_sense(Sense::Max);
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {
            let point = sol.values_of(coords);
            Ok((point, sol.values, sol.objective))
        }
        LpStatus::Infeasible => Err(Error::EmptyRegion {
            context: context.to_string(),
        }),
        LpStatus::Unbounded => Err(Error::Unbounded {
            context: format!("{context}: the region must be bounded"),
        }),
        LpStatus::SolverFailure => Err(Error::SolverFailure(context.to_string())),
    }
}

/// Axis-extreme seed: minimum and maximum of each projection coordinate
/// (2 * dim LPs), with their full-solution witnesses.
pub fn axis_extremes(
    lp: &LpProblem,
    coords: &[VarId],
    mode: Parallelism,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let d = coords.len();
    let results: Vec<Result<(Vec<f64>, Vec<f64>, f64)>> = map_indexed(mode, 2 * d, |task| {
        let k = task / 2;
        let sign = if task % 2 == 0 { -1.0 } else { 1.0 };
        let mut dir = vec![0.0; d];
        dir[k] = sign;
        solve_direction(lp, coords, &dir, &format!("axis extreme {k}"))
    });
    let mut points = Vec::new();
    let mut witnesses = Vec::new();
    for r in results {
        let (p, w, _) = r?;
        points.push(p);
        witnesses.push(w);
    }
    Ok((points, witnesses))
}

/// One facet push: maximize the facet normal over the region. Returns the
/// optimum, the optimizer's projection coordinates and full solution.
pub fn facet_push(
    lp: &LpProblem,
    coords: &[VarId],
    normal: &[f64],
    context: &str,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (point, witness, obj) = solve_direction(lp, coords, normal, context)?;
    Ok((obj, point, witness))
}

fn dedup_key(point: &[f64], scale: f64) -> Vec<i64> {
    point
        .iter()
        .map(|&v| (v / (DEDUP_TOL * scale)).round() as i64)
        .collect()
}

fn facet_key(normal: &[f64], offset: f64) -> Vec<i64> {
    let mut key: Vec<i64> = normal.iter().map(|&v| (v / 1e-9).round() as i64).collect();
    key.push((offset / 1e-6).round() as i64);
    key
}

/// Iterative vertex-search projection (the full loop).
pub fn project_region(
    base: &LpProblem,
    coords: &[VarId],
    opts: &ProjectionOptions,
) -> Result<ProjectedRegion> {
    let d = coords.len();
    assert!(d >= 1, "projection needs at least one coordinate");

    // seed with axis extremes, dropping duplicates
    let (seed_points, seed_witnesses) = axis_extremes(base, coords, opts.mode)?;
    let scale = seed_points
        .iter()
        .flat_map(|p| p.iter())
        .fold(1.0f64, |s, &v| s.max(v.abs()));
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut witnesses: Vec<Vec<f64>> = Vec::new();
    let mut seen: std::collections::HashSet<Vec<i64>> = Default::default();
    for (p, w) in seed_points.into_iter().zip(seed_witnesses) {
        if seen.insert(dedup_key(&p, scale)) {
            points.push(p);
            witnesses.push(w);
        }
    }

    // establish the affine rank, probing the complement of the seed span
    let mut frame: Option<AffineFrame> = None;
    for _round in 0..=d {
        match convex_hull(&points, DEDUP_TOL) {
            HullOutcome::Full(_) => {
                frame = None;
                break;
            }
            HullOutcome::Degenerate(f) => {
                let mut extended = false;
                for dir in f.complement() {
                    for sign in [1.0, -1.0] {
                        let push: Vec<f64> = dir.iter().map(|v| sign * v).collect();
                        let (_, point, witness) = facet_push(base, coords, &push, "rank probe")?;
                        if f.residual(&point) > DEDUP_TOL * scale * 10.0
                            && seen.insert(dedup_key(&point, scale))
                        {
                            points.push(point);
                            witnesses.push(witness);
                            extended = true;
                        }
                    }
                    if extended {
                        break;
                    }
                }
                if !extended {
                    frame = Some(f);
                    break;
                }
            }
        }
    }

    // working coordinates: identity, or the flat's local frame
    let mut work_points: Vec<Vec<f64>> = match &frame {
        None => points.clone(),
        Some(f) => points.iter().map(|p| f.project(p)).collect(),
    };
    let rank = work_points[0].len();

    if rank == 0 {
        // the region is a single point
        let vertex = points[0].clone();
        let witness = witnesses[0].clone();
        let mut halfspaces = Vec::new();
        if let Some(f) = &frame {
            for dir in f.complement() {
                let b = dot(&dir, &vertex);
                halfspaces.push(Halfspace { normal: dir.clone(), offset: b });
                halfspaces.push(Halfspace {
                    normal: dir.iter().map(|v| -v).collect(),
                    offset: -b,
                });
            }
        }
        return Ok(ProjectedRegion {
            dim: d,
            vertices: vec![vertex],
            halfspaces,
            witnesses: vec![witness],
            frame,
            converged: true,
            sweeps: 0,
            volume_history: vec![0.0],
            volume: 0.0,
            tolerance: DEDUP_TOL * scale,
        });
    }

    let mut certified: std::collections::HashSet<Vec<i64>> = Default::default();
    let mut volume_history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut sweeps = 0usize;
    let hull = loop {
        let hull = match convex_hull(&work_points, DEDUP_TOL) {
            HullOutcome::Full(h) => h,
            HullOutcome::Degenerate(_) => {
                return Err(Error::Degenerate(
                    "working point set lost full rank during the sweep".into(),
                ))
            }
        };
        let volume = hull.volume(&work_points);
        if let Some(&prev) = volume_history.last() {
            if opts.volume_tol > 0.0 && prev > 0.0 && (volume - prev) / prev < opts.volume_tol {
                volume_history.push(volume);
                converged = true;
                break hull;
            }
        }
        volume_history.push(volume);
        if sweeps >= opts.max_iters {
            break hull;
        }
        sweeps += 1;

        // push every not-yet-certified facet (batched; order fixed)
        let pending: Vec<(Vec<f64>, f64)> = {
            let mut seen_facets = std::collections::HashSet::new();
            hull.facets
                .iter()
                .filter(|f| !certified.contains(&facet_key(&f.normal, f.offset)))
                .filter(|f| seen_facets.insert(facet_key(&f.normal, f.offset)))
                .map(|f| (f.normal.clone(), f.offset))
                .collect()
        };
        let pushes: Vec<Result<(f64, Vec<f64>, Vec<f64>)>> =
            map_indexed(opts.mode, pending.len(), |k| {
                let (normal, _) = &pending[k];
                // lift the working normal into projection coordinates
                let (dir, shift) = match &frame {
                    None => (normal.clone(), 0.0),
                    Some(f) => {
                        let mut g = vec![0.0; d];
                        for (i, b) in f.basis.iter().enumerate() {
                            for (j, v) in g.iter_mut().enumerate() {
                                *v += normal[i] * b[j];
                            }
                        }
                        let shift = dot(&g, &f.origin);
                        (g, shift)
                    }
                };
                facet_push(base, coords, &dir, "facet push")
                    .map(|(obj, p, w)| (obj - shift, p, w))
            });

        let mut grew = false;
        for (k, push) in pushes.into_iter().enumerate() {
            let (value, point, witness) = push?;
            let (normal, offset) = &pending[k];
            if value <= offset + PUSH_TOL * scale {
                certified.insert(facet_key(normal, *offset));
                continue;
            }
            if seen.insert(dedup_key(&point, scale)) {
                let wp = match &frame {
                    None => point.clone(),
                    Some(f) => f.project(&point),
                };
                points.push(point);
                witnesses.push(witness);
                work_points.push(wp);
                grew = true;
            }
        }
        if !grew {
            converged = true;
            // hull unchanged by this sweep: it is final
            break hull;
        }
    };

    // assemble full-space representations
    let vertices: Vec<Vec<f64>> =
        hull.vertex_indices.iter().map(|&i| points[i].clone()).collect();
    let kept_witnesses: Vec<Vec<f64>> =
        hull.vertex_indices.iter().map(|&i| witnesses[i].clone()).collect();
    let mut halfspaces: Vec<Halfspace> = dedup_halfspaces(&hull.facets, 1e-7)
        .into_iter()
        .map(|(normal, offset)| match &frame {
            None => Halfspace { normal, offset },
            Some(f) => {
                let mut g = vec![0.0; d];
                for (i, b) in f.basis.iter().enumerate() {
                    for (j, v) in g.iter_mut().enumerate() {
                        *v += normal[i] * b[j];
                    }
                }
                let offset = offset + dot(&g, &f.origin);
                Halfspace { normal: g, offset }
            }
        })
        .collect();
    if let Some(f) = &frame {
        for dir in f.complement() {
            let b = dot(&dir, &f.origin);
            halfspaces.push(Halfspace { normal: dir.clone(), offset: b });
            halfspaces.push(Halfspace {
                normal: dir.iter().map(|v| -v).collect(),
                offset: -b,
            });
        }
    }
    let volume = if frame.is_none() {
        *volume_history.last().expect("at least one sweep")
    } else {
        0.0
    };

    Ok(ProjectedRegion {
        dim: d,
        vertices,
        halfspaces,
        witnesses: kept_witnesses,
        frame,
        converged,
        sweeps,
        volume_history,
        volume,
        tolerance: DEDUP_TOL * scale,
    })
}

/// Options for computing one (region, period) security region.
#[derive(Debug, Clone, Copy)]
pub struct RegionOptions {
    pub volume_tol: f64,
    pub max_iters: usize,
    pub mode: Parallelism,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions {
            volume_tol: 1e-3,
            max_iters: 50,
            mode: Parallelism::default(),
        }
    }
}

/// One period's tie-line security region over (aggregated flows, z),
/// with per-vertex feasibility witnesses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecurityRegion {
    pub region_id: String,
    pub t: usize,
    /// Group labels fixing the coordinate order (z is the final axis).
    pub labels: Vec<String>,
    pub vertices: Vec<Vec<f64>>,
    pub halfspaces: Vec<Halfspace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<AffineFrame>,
    pub witnesses: Vec<Witness>,
    pub converged: bool,
    pub sweeps: usize,
    pub volume: f64,
    pub volume_history: Vec<f64>,
    pub tolerance: f64,
}

impl SecurityRegion {
    pub fn dim(&self) -> usize {
        self.labels.len() + 1
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        self.halfspaces
            .iter()
            .all(|h| dot(&h.normal, point) <= h.offset + tol)
    }
}

/// Compute one (region, period) security region by vertex search over the
/// reduced operating set.
#[allow(clippy::too_many_arguments)]
pub fn compute_region(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    envelope: &DispatchEnvelope,
    plan: &AggregationPlan,
    fit: &MinMaxFit,
    bounds: &TieBounds,
    t: usize,
    opts: &RegionOptions,
) -> Result<SecurityRegion> {
    let mut lp = LpProblem::new();
    let vars: ReducedPeriodVars = crate::aggregation::build_reduced_region(
        &mut lp, network, mats, envelope, plan, fit, bounds, t, "yr", None,
    )?;
    let mut coords: Vec<VarId> = vars.group_flow.clone();
    coords.push(vars.period.z);

    let popts = ProjectionOptions {
        volume_tol: opts.volume_tol,
        max_iters: opts.max_iters,
        mode: opts.mode,
    };
    let region = project_region(&lp, &coords, &popts).map_err(|e| match e {
        Error::EmptyRegion { .. } => Error::EmptyRegion {
            context: format!("region `{}` period {t}", network.region_id),
        },
        other => other,
    })?;

    let witnesses: Vec<Witness> = region
        .witnesses
        .iter()
        .map(|values| {
            let sol = LpSolution {
                status: LpStatus::Optimal,
                objective: 0.0,
                values: values.clone(),
                feasibility_tol: crate::FEAS_TOL,
            };
            crate::lp::regional::extract_witness(&sol, &vars.period)
        })
        .collect();

    Ok(SecurityRegion {
        region_id: network.region_id.clone(),
        t,
        labels: plan.labels.clone(),
        vertices: region.vertices,
        halfspaces: region.halfspaces,
        frame: region.frame,
        witnesses,
        converged: region.converged,
        sweeps: region.sweeps,
        volume: region.volume,
        volume_history: region.volume_history,
        tolerance: region.tolerance,
    })
}
