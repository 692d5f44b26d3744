//! Case-file ingestion: schema, parsing, validation, scenario overrides.
//!
//! A case file is one JSON document per interconnection: top-level `n_T`,
//! `regions[]`, `interconnection[]`, and optional `scenarios[]` carrying
//! renewable/demand profile overrides. Powers are decimal MW; susceptance
//! and reactance per-unit on `base_mva`.

pub mod artifact;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coordination::{InterconnectionModel, TieLineRecord};
use crate::error::{Error, Result, Violation};
use crate::model::RegionNetwork;

pub const SCHEMA_VERSION: u32 = 1;

fn default_base_mva() -> f64 {
    100.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CaseFile {
    pub schema_version: u32,
    #[serde(rename = "n_T")]
    pub n_t: usize,
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    pub regions: Vec<RegionNetwork>,
    #[serde(default)]
    pub interconnection: Vec<TieLineRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<Scenario>,
}

/// Per-scenario profile overrides (site order matches the region lists).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub regions: Vec<ScenarioOverride>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioOverride {
    pub region_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renewables: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<Vec<f64>>>,
}

impl CaseFile {
    /// Fill region period counts from the top level and run all checks.
    pub fn normalize_and_validate(&mut self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(Violation::new(
                "/schema_version",
                format!("unsupported schema version {}", self.schema_version),
            ));
        }
        if self.n_t == 0 {
            out.push(Violation::new("/n_T", "period count must be at least 1"));
        }
        if !(self.base_mva > 0.0) {
            out.push(Violation::new("/base_mva", "base must be positive"));
        }
        if self.regions.is_empty() {
            out.push(Violation::new("/regions", "at least one region required"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for (i, region) in self.regions.iter_mut().enumerate() {
            if region.n_t == 0 {
                region.n_t = self.n_t;
            } else if region.n_t != self.n_t {
                out.push(Violation::new(
                    format!("/regions/{i}/n_T"),
                    format!("region period count {} conflicts with case n_T {}", region.n_t, self.n_t),
                ));
            }
            if !ids.insert(region.region_id.clone()) {
                out.push(Violation::new(
                    format!("/regions/{i}/region_id"),
                    format!("duplicate region id `{}`", region.region_id),
                ));
            }
        }
        for (i, region) in self.regions.iter().enumerate() {
            out.extend(region.validate(&format!("/regions/{i}")));
        }
        out.extend(InterconnectionModel::validate(self));
        for (s, scenario) in self.scenarios.iter().enumerate() {
            for (o, ovr) in scenario.regions.iter().enumerate() {
                let path = format!("/scenarios/{s}/regions/{o}");
                let Some(region) = self.regions.iter().find(|r| r.region_id == ovr.region_id) else {
                    out.push(Violation::new(
                        format!("{path}/region_id"),
                        format!("unknown region `{}`", ovr.region_id),
                    ));
                    continue;
                };
                for (field, profiles, expected) in [
                    ("renewables", &ovr.renewables, region.renewables.len()),
                    ("demands", &ovr.demands, region.demands.len()),
                ] {
                    if let Some(profiles) = profiles {
                        if profiles.len() != expected {
                            out.push(Violation::new(
                                format!("{path}/{field}"),
                                format!("{} profiles given, region has {} sites", profiles.len(), expected),
                            ));
                        }
                        for (k, p) in profiles.iter().enumerate() {
                            if p.len() != self.n_t {
                                out.push(Violation::new(
                                    format!("{path}/{field}/{k}"),
                                    format!("profile length {} does not match n_T = {}", p.len(), self.n_t),
                                ));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn region(&self, region_id: &str) -> Result<&RegionNetwork> {
        self.regions
            .iter()
            .find(|r| r.region_id == region_id)
            .ok_or_else(|| Error::UnknownRegion(region_id.to_string()))
    }

    /// Apply a named scenario's profile overrides, returning a new case
    /// without the scenario list.
    pub fn apply_scenario(&self, name: &str) -> Result<CaseFile> {
        let scenario = self
            .scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::CaseField {
                path: "/scenarios".into(),
                message: format!("no scenario named `{name}`"),
            })?;
        let mut out = self.clone();
        for ovr in &scenario.regions {
            let region = out
                .regions
                .iter_mut()
                .find(|r| r.region_id == ovr.region_id)
                .expect("validated scenario");
            if let Some(renewables) = &ovr.renewables {
                for (site, profile) in region.renewables.iter_mut().zip(renewables) {
                    site.profile = profile.clone();
                }
            }
            if let Some(demands) = &ovr.demands {
                for (site, profile) in region.demands.iter_mut().zip(demands) {
                    site.profile = profile.clone();
                }
            }
        }
        out.scenarios.clear();
        Ok(out)
    }

    /// Hash of the canonical serialization; whitespace and key formatting
    /// of the source file do not matter.
    pub fn canonical_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("serializable");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn interconnection_model(&self) -> InterconnectionModel {
        InterconnectionModel::new(self.interconnection.clone())
    }
}

/// Parse and validate a case file from disk. Schema violations come back
/// with JSON-pointer-style paths; syntax errors with line/column.
pub fn parse_case(path: impl AsRef<Path>) -> Result<CaseFile> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_case_str(&text)
}

pub fn parse_case_str(text: &str) -> Result<CaseFile> {
    let mut case: CaseFile = serde_json::from_str(text)?;
    let violations = case.normalize_and_validate();
    if violations.is_empty() {
        Ok(case)
    } else {
        Err(Error::Validation(violations))
    }
}

/// Serialize a case with stable formatting (used by round-trip checks and
/// the bundled case writer).
pub fn case_to_string(case: &CaseFile) -> String {
    let mut s = serde_json::to_string_pretty(case).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    #[test]
    fn bundled_cases_validate() {
        for mut case in [
            cases::ieee9_case(2),
            cases::ieee9_aggregated_case(),
            cases::two_region_case(),
        ] {
            let report = case.normalize_and_validate();
            assert!(report.is_empty(), "{report:?}");
        }
    }

    #[test]
    fn parse_round_trip_is_idempotent() {
        let case = cases::two_region_case();
        let s1 = case_to_string(&case);
        let parsed = parse_case_str(&s1).unwrap();
        let s2 = case_to_string(&parsed);
        assert_eq!(s1, s2);
    }

    #[test]
    fn missing_reference_bus_is_field_addressed() {
        let case = cases::ieee9_case(1);
        let mut value: serde_json::Value = serde_json::to_value(&case).unwrap();
        value["regions"][0].as_object_mut().unwrap().remove("reference_bus");
        let text = serde_json::to_string(&value).unwrap();
        let err = parse_case_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("reference_bus"), "{msg}");
    }

    #[test]
    fn canonical_hash_ignores_whitespace() {
        let case = cases::ieee9_case(1);
        let compact = serde_json::to_string(&case).unwrap();
        let pretty = case_to_string(&case);
        let a = parse_case_str(&compact).unwrap().canonical_hash();
        let b = parse_case_str(&pretty).unwrap().canonical_hash();
        assert_eq!(a, b);
    }

    #[test]
    fn scenario_override_applies() {
        let mut case = cases::ieee9_case(2);
        case.scenarios.push(Scenario {
            name: "windy".into(),
            regions: vec![ScenarioOverride {
                region_id: case.regions[0].region_id.clone(),
                renewables: Some(vec![vec![200.0, 220.0], vec![150.0, 160.0]]),
                demands: None,
            }],
        });
        assert!(case.normalize_and_validate().is_empty());
        let applied = case.apply_scenario("windy").unwrap();
        assert_eq!(applied.regions[0].renewables[0].profile, vec![200.0, 220.0]);
        assert!(applied.scenarios.is_empty());
        assert!(case.apply_scenario("missing").is_err());
    }

    #[test]
    fn inconsistent_port_orientation_rejected() {
        let mut case = cases::two_region_case();
        // flip one port's orientation so it disagrees with the record
        let rec = case.interconnection[0].clone();
        let region = case.regions.iter_mut().find(|r| r.region_id == rec.to_region).unwrap();
        let port = region
            .tie_lines
            .iter_mut()
            .find(|p| p.border_bus == rec.to_bus)
            .unwrap();
        port.orientation = -port.orientation;
        let report = case.normalize_and_validate();
        assert!(report.iter().any(|v| v.message.contains("record direction implies")));
    }
}
