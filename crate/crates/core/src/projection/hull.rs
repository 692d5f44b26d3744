//! Incremental convex hull in small dimension (d <= 6 in practice).
//!
//! Beneath-beyond with triangulated facets: start from a full-dimensional
//! simplex of extreme points, insert the farthest outside point, replace
//! the visible facet set with a cone from the new point over the horizon
//! ridges. Points within tolerance of the hull boundary are never
//! inserted, so the vertex list is exactly the extreme points of the
//! input. Everything (insertion order, ridge maps, facet lists) is kept
//! deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::{det, dot, nullspace_direction, Mat};

/// Orthonormal affine frame for rank-deficient point sets: `project` maps
/// into local coordinates, `lift` maps back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFrame {
    pub origin: Vec<f64>,
    /// Orthonormal rows spanning the affine hull (rank x dim).
    pub basis: Vec<Vec<f64>>,
}

impl AffineFrame {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        self.basis.iter().map(|b| dot(b, &centered)).collect()
    }

    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (k, b) in self.basis.iter().enumerate() {
            for (i, v) in x.iter_mut().enumerate() {
                *v += y[k] * b[i];
            }
        }
        x
    }

    /// Orthonormal directions spanning the orthogonal complement.
    pub fn complement(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut dirs: Vec<Vec<f64>> = self.basis.clone();
        let mut out = Vec::new();
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            for b in &dirs {
                let c = dot(b, &e);
                for (j, v) in e.iter_mut().enumerate() {
                    *v -= c * b[j];
                }
            }
            let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-9 {
                for v in &mut e {
                    *v /= norm;
                }
                dirs.push(e.clone());
                out.push(e);
            }
        }
        out
    }

    /// Distance from a point to the affine subspace.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let y = self.project(x);
        let back = self.lift(&y);
        x.iter()
            .zip(&back)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A triangulated hull facet: `normal . x <= offset`, tight at `vertices`.
#[derive(Debug, Clone)]
pub struct HullFacet {
    pub vertices: Vec<usize>,
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct Hull {
    pub dim: usize,
    /// Extreme points of the input set, ascending.
    pub vertex_indices: Vec<usize>,
    /// Simplicial facets (hyperplanes may repeat across coplanar facets).
    pub facets: Vec<HullFacet>,
}

#[derive(Debug)]
pub enum HullOutcome {
    Full(Hull),
    /// Input spans an affine subspace of lower dimension.
    Degenerate(AffineFrame),
}

/// Deduplicated halfspace list of a hull.
pub fn dedup_halfspaces(facets: &[HullFacet], tol: f64) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for f in facets {
        let dup = out.iter().any(|(n, b)| {
            (b - f.offset).abs() <= tol * (1.0 + b.abs())
                && n.iter()
                    .zip(&f.normal)
                    .all(|(a, c)| (a - c).abs() <= tol)
        });
        if !dup {
            out.push((f.normal.clone(), f.offset));
        }
    }
    out
}

impl Hull {
    /// Volume by simplex decomposition from the vertex centroid.
    pub fn volume(&self, points: &[Vec<f64>]) -> f64 {
        let d = self.dim;
        if self.facets.is_empty() {
            return 0.0;
        }
        let mut centroid = vec![0.0; d];
        for &v in &self.vertex_indices {
            for (i, c) in centroid.iter_mut().enumerate() {
                *c += points[v][i];
            }
        }
        for c in &mut centroid {
            *c /= self.vertex_indices.len() as f64;
        }
        let mut total = 0.0;
        let factorial: f64 = (1..=d).map(|k| k as f64).product();
        for f in &self.facets {
            let mut m = Mat::zeros(d, d);
            for (r, &v) in f.vertices.iter().enumerate() {
                for j in 0..d {
                    m[(r, j)] = points[v][j] - centroid[j];
                }
            }
            total += det(&m).abs() / factorial;
        }
        total
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.facets
            .iter()
            .all(|f| dot(&f.normal, x) <= f.offset + tol)
    }
}

/// Scale-aware tolerance for a point set.
fn scale_of(points: &[Vec<f64>]) -> f64 {
    let mut s = 1.0f64;
    for p in points {
        for &v in p {
            s = s.max(v.abs());
        }
    }
    s
}

/// Greedy affine-independent seed: returns (indices, orthonormal basis of
/// the span). Stops early when no point extends the span beyond `tol`.
fn affine_seed(points: &[Vec<f64>], tol: f64) -> (Vec<usize>, Vec<Vec<f64>>) {
    let d = points[0].len();
    // lexicographically smallest point anchors everything deterministically
    let mut first = 0usize;
    for (i, p) in points.iter().enumerate() {
        if lex_less(p, &points[first]) {
            first = i;
        }
    }
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < d {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (i, p) in points.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            // residual after removing the current span
            let mut r: Vec<f64> = p.iter().zip(&points[first]).map(|(a, b)| a - b).collect();
            for b in &basis {
                let c = dot(b, &r);
                for (j, v) in r.iter_mut().enumerate() {
                    *v -= c * b[j];
                }
            }
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            match &best {
                Some((_, bestnorm, _)) if norm <= *bestnorm => {}
                _ => best = Some((i, norm, r)),
            }
        }
        match best {
            Some((i, norm, mut r)) if norm > tol => {
                for v in &mut r {
                    *v /= norm;
                }
                basis.push(r);
                chosen.push(i);
            }
            _ => break,
        }
    }
    (chosen, basis)
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Hyperplane through `d` points, oriented away from `interior`.
fn facet_plane(points: &[Vec<f64>], verts: &[usize], interior: &[f64]) -> Option<(Vec<f64>, f64)> {
    let base = &points[verts[0]];
    let mut normal = if verts.len() == 1 {
        // 1-D facets are single points; the hyperplane is a coordinate
        vec![1.0]
    } else {
        let rows: Vec<Vec<f64>> = verts[1..]
            .iter()
            .map(|&v| points[v].iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        nullspace_direction(&rows)?
    };
    let mut offset = dot(&normal, base);
    if dot(&normal, interior) > offset {
        for v in &mut normal {
            *v = -*v;
        }
        offset = -offset;
    }
    Some((normal, offset))
}

/// Incremental convex hull. Points must all share one dimension; duplicate
/// points are fine (they are simply never extreme).
pub fn convex_hull(points: &[Vec<f64>], tol: f64) -> HullOutcome {
    assert!(!points.is_empty());
    let d = points[0].len();
    let scale = scale_of(points);
    let eps = tol * scale;

    let (seed, basis) = affine_seed(points, eps);
    if basis.len() < d {
        let origin = points[seed[0]].clone();
        return HullOutcome::Degenerate(AffineFrame { origin, basis });
    }

    // interior reference point: centroid of the seed simplex
    let mut interior = vec![0.0; d];
    for &v in &seed {
        for (i, c) in interior.iter_mut().enumerate() {
            *c += points[v][i];
        }
    }
    for c in &mut interior {
        *c /= seed.len() as f64;
    }

    // initial simplex: one facet per d-subset of the d+1 seed points
    let mut facets: Vec<HullFacet> = Vec::new();
    for skip in 0..seed.len() {
        let verts: Vec<usize> = seed
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != skip)
            .map(|(_, &v)| v)
            .collect();
        let mut verts = verts;
        verts.sort_unstable();
        if let Some((normal, offset)) = facet_plane(points, &verts, &interior) {
            facets.push(HullFacet { vertices: verts, normal, offset });
        }
    }

    // insert the farthest outside point until none remains
    let mut active: Vec<bool> = vec![true; points.len()];
    for &v in &seed {
        active[v] = false;
    }
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if !active[i] {
                continue;
            }
            let mut worst = f64::NEG_INFINITY;
            for f in &facets {
                let excess = dot(&f.normal, p) - f.offset;
                worst = worst.max(excess);
                // no early break: worst-facet distance picks insertion order
            }
            if worst > eps {
                match best {
                    Some((_, cur)) if worst <= cur => {}
                    _ => best = Some((i, worst)),
                }
            } else {
                active[i] = false; // inside or on boundary: never extreme
            }
        }
        let Some((apex, _)) = best else { break };
        active[apex] = false;

        let visible: Vec<usize> = facets
            .iter()
            .enumerate()
            .filter(|(_, f)| dot(&f.normal, &points[apex]) > f.offset + eps)
            .map(|(k, _)| k)
            .collect();
        if visible.is_empty() {
            continue;
        }
        // ridge -> facets map over all current facets
        let mut ridge_map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (k, f) in facets.iter().enumerate() {
            for skip in 0..f.vertices.len() {
                let ridge: Vec<usize> = f
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != skip)
                    .map(|(_, &v)| v)
                    .collect();
                ridge_map.entry(ridge).or_default().push(k);
            }
        }
        let is_visible = |k: usize| visible.binary_search(&k).is_ok();
        let mut new_facets: Vec<HullFacet> = Vec::new();
        for (ridge, owners) in &ridge_map {
            let vis_count = owners.iter().filter(|&&k| is_visible(k)).count();
            if vis_count == 1 && owners.len() == 2 {
                let mut verts = ridge.clone();
                verts.push(apex);
                verts.sort_unstable();
                if let Some((normal, offset)) = facet_plane(points, &verts, &interior) {
                    new_facets.push(HullFacet { vertices: verts, normal, offset });
                }
            }
        }
        let mut keep = Vec::with_capacity(facets.len());
        for (k, f) in facets.drain(..).enumerate() {
            if !is_visible(k) {
                keep.push(f);
            }
        }
        keep.extend(new_facets);
        facets = keep;
    }

    let mut vertex_indices: Vec<usize> = facets.iter().flat_map(|f| f.vertices.clone()).collect();
    vertex_indices.sort_unstable();
    vertex_indices.dedup();

    HullOutcome::Full(Hull { dim: d, vertex_indices, facets })
}
