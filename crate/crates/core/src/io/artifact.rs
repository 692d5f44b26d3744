//! Region artifact persistence and plot-data export.
//!
//! A region artifact is the publishable product of the per-region stage:
//! envelope, aggregation plan, per-period tightened bounds, fitted models
//! and security regions, stamped with provenance (case hash, tool version,
//! options). Artifacts round-trip losslessly through JSON; provenance
//! timestamps are the only non-deterministic field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coordination::{PipelineReport, RegionBundle};
use crate::error::{Error, Result};
use crate::io::CaseFile;
use crate::projection::SecurityRegion;

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    pub case_hash: String,
    pub tool_version: String,
    pub options: ArtifactOptions,
    /// Wall-clock stamp; informational only and excluded from
    /// determinism comparisons.
    pub generated_at: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ArtifactOptions {
    pub volume_tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionArtifact {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub bundle: RegionBundle,
}

impl RegionArtifact {
    pub fn new(bundle: RegionBundle, case: &CaseFile, options: ArtifactOptions) -> Self {
        RegionArtifact {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            provenance: Provenance {
                case_hash: case.canonical_hash(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                options,
                generated_at: now_rfc3339(),
            },
            bundle,
        }
    }

    /// Provenance guard: the artifact must have been generated from this
    /// exact case (canonical hash).
    pub fn check_provenance(&self, case: &CaseFile) -> Result<()> {
        if self.schema_version != ARTIFACT_SCHEMA_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported artifact schema version {}",
                self.schema_version
            )));
        }
        let hash = case.canonical_hash();
        if self.provenance.case_hash != hash {
            return Err(Error::Artifact(format!(
                "artifact for region `{}` was generated from a different case (hash {} != {})",
                self.bundle.region_id, self.provenance.case_hash, hash
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<RegionArtifact> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Seconds-resolution RFC 3339 stamp without external clock crates.
fn now_rfc3339() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    // days since epoch -> civil date (Howard Hinnant's algorithm)
    let days = (secs / 86_400) as i64;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, rem % 3600 / 60, rem % 60);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = if month <= 2 { y + 1 } else { y };
    format!("{year:04}-{month:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}

/// Write a coordination/pipeline report as JSON.
pub fn write_report(report: &PipelineReport, path: impl AsRef<Path>) -> Result<()> {
    let mut s = serde_json::to_string_pretty(report).expect("serializable");
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// 2-D plot data for one period's region: the vertex coordinates on the
/// chosen axes plus the polygon of their planar hull, CSV-formatted for
/// external figure tooling.
pub fn slice_csv(region: &SecurityRegion, axis_x: usize, axis_y: usize) -> Result<String> {
    let d = region.dim();
    if axis_x >= d || axis_y >= d || axis_x == axis_y {
        return Err(Error::Artifact(format!(
            "slice axes ({axis_x}, {axis_y}) out of range for dimension {d}"
        )));
    }
    let label = |a: usize| {
        if a + 1 == d {
            "z".to_string()
        } else {
            format!("group_{}", region.labels[a])
        }
    };
    let mut out = String::new();
    out.push_str(&format!("kind,{},{}\n", label(axis_x), label(axis_y)));
    let pts: Vec<Vec<f64>> = region
        .vertices
        .iter()
        .map(|v| vec![v[axis_x], v[axis_y]])
        .collect();
    for p in &pts {
        out.push_str(&format!("vertex,{:.9},{:.9}\n", p[0], p[1]));
    }
    // planar hull polygon in drawing order
    for p in planar_hull(&pts) {
        out.push_str(&format!("hull,{:.9},{:.9}\n", p[0], p[1]));
    }
    Ok(out)
}

/// Gift-wrapping hull of 2-D points in counter-clockwise order.
fn planar_hull(pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut start = 0usize;
    for (i, p) in pts.iter().enumerate() {
        if (p[0], p[1]) < (pts[start][0], pts[start][1]) {
            start = i;
        }
    }
    let mut order = Vec::new();
    let mut current = start;
    loop {
        order.push(current);
        let mut next = (current + 1) % pts.len();
        for cand in 0..pts.len() {
            if cand == current {
                continue;
            }
            let cross = (pts[next][0] - pts[current][0]) * (pts[cand][1] - pts[current][1])
                - (pts[next][1] - pts[current][1]) * (pts[cand][0] - pts[current][0]);
            let further = cross.abs() < 1e-12
                && ((pts[cand][0] - pts[current][0]).powi(2)
                    + (pts[cand][1] - pts[current][1]).powi(2)
                    > (pts[next][0] - pts[current][0]).powi(2)
                        + (pts[next][1] - pts[current][1]).powi(2));
            if cross < -1e-12 || further {
                next = cand;
            }
        }
        current = next;
        if current == start || order.len() > pts.len() {
            break;
        }
    }
    order.into_iter().map(|i| pts[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::lp::regional::build_all_matrices;
    use crate::projection::RegionOptions;

    fn sample_artifact() -> (CaseFile, RegionArtifact) {
        let case = cases::ieee9_aggregated_case();
        let mats = build_all_matrices(&case).unwrap();
        let bundle = crate::coordination::build_region_bundle(
            &case.regions[0],
            &mats["ieee9"],
            &RegionOptions::default(),
        )
        .unwrap();
        let artifact = RegionArtifact::new(
            bundle,
            &case,
            ArtifactOptions { volume_tol: 1e-3, max_iters: 50 },
        );
        (case, artifact)
    }

    #[test]
    fn artifact_roundtrip_is_idempotent() {
        let (_, artifact) = sample_artifact();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        artifact.write(&path).unwrap();
        let loaded = RegionArtifact::read(&path).unwrap();
        let again = dir.path().join("r2.json");
        loaded.write(&again).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&again).unwrap()
        );
    }

    #[test]
    fn provenance_mismatch_detected() {
        let (case, artifact) = sample_artifact();
        artifact.check_provenance(&case).unwrap();
        let mut other = case.clone();
        other.regions[0].demands[0].profile[0] += 1.0;
        assert!(artifact.check_provenance(&other).is_err());
    }

    #[test]
    fn slice_export_has_vertices_and_hull() {
        let (_, artifact) = sample_artifact();
        let region = &artifact.bundle.periods[0].region;
        let csv = slice_csv(region, 0, 2).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("kind,group_e,z"));
        let vertices = lines.iter().filter(|l| l.starts_with("vertex,")).count();
        let hull = lines.iter().filter(|l| l.starts_with("hull,")).count();
        assert_eq!(vertices, region.n_vertices());
        assert!(hull >= 3);
        assert!(slice_csv(region, 0, 9).is_err());
    }

    #[test]
    fn timestamp_shape() {
        let ts = now_rfc3339();
        // 2026-08-09T12:34:56Z
        assert_eq!(ts.len(), 20, "{ts}");
        assert!(ts.ends_with('Z'));
        assert!(ts.contains('T'));
        assert!(ts.starts_with("20"), "{ts}");
    }
}
