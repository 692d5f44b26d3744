//! Domain types for a multi-period DC regional network.
//!
//! A [`RegionNetwork`] is one operator's system: buses, branches,
//! generators, renewable and demand sites with per-period profiles, and
//! tie-line ports at border buses. All powers are MW on a common base;
//! susceptance and reactance are per-unit. Tie-line flow is a directed
//! variable shared with the neighbouring system; each port's `orientation`
//! says whether positive flow enters this region (+1) or leaves it (-1),
//! and the region's power balance uses that sign.

pub mod matrices;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Violation;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Bus {
    pub id: String,
    #[serde(default)]
    pub is_border: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Branch {
    pub from: String,
    pub to: String,
    /// Per-unit susceptance (1/x).
    pub susceptance: f64,
    /// MW, `flow_min <= 0 <= flow_max` by sign convention.
    pub flow_min: f64,
    pub flow_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Generator {
    pub bus: String,
    pub cap_min: f64,
    pub cap_max: f64,
    /// Nonnegative magnitudes, MW per period.
    pub ramp_up: f64,
    pub ramp_down: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RenewableSite {
    pub bus: String,
    /// Maximum available power per period, MW.
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DemandSite {
    pub bus: String,
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TieLinePort {
    pub border_bus: String,
    /// Aggregation group label; one group per border interface.
    pub group: String,
    pub flow_min: f64,
    pub flow_max: f64,
    /// +1 when positive directed flow enters this region, -1 otherwise.
    pub orientation: i8,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RegionNetwork {
    pub region_id: String,
    /// Period count; filled from the case file's top-level value when the
    /// region entry omits it.
    #[serde(rename = "n_T", default)]
    pub n_t: usize,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub renewables: Vec<RenewableSite>,
    #[serde(default)]
    pub demands: Vec<DemandSite>,
    #[serde(default)]
    pub tie_lines: Vec<TieLinePort>,
    pub reference_bus: String,
}

impl RegionNetwork {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_ties(&self) -> usize {
        self.tie_lines.len()
    }

    /// Bus id -> index map (declaration order).
    pub fn bus_index(&self) -> BTreeMap<&str, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect()
    }

    /// Sorted distinct group labels; fixes the coordinate order of the
    /// aggregated region.
    pub fn group_labels(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.tie_lines.iter().map(|p| p.group.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Total available renewable power at period `t` (the epigraph
    /// ceiling).
    pub fn total_renewable(&self, t: usize) -> f64 {
        self.renewables.iter().map(|r| r.profile[t]).sum()
    }

    pub fn total_demand(&self, t: usize) -> f64 {
        self.demands.iter().map(|d| d.profile[t]).sum()
    }

    /// Check every type invariant; returns one violation per finding with
    /// a JSON-pointer-style location. An empty report means valid.
    pub fn validate(&self, path_prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let p = |s: &str| format!("{path_prefix}{s}");

        if self.n_t == 0 {
            out.push(Violation::new(p("/n_T"), "period count must be at least 1"));
        }

        let mut seen = BTreeSet::new();
        for (i, bus) in self.buses.iter().enumerate() {
            if !seen.insert(bus.id.as_str()) {
                out.push(Violation::new(
                    p(&format!("/buses/{i}/id")),
                    format!("duplicate bus id `{}`", bus.id),
                ));
            }
        }
        let index = self.bus_index();

        if !index.contains_key(self.reference_bus.as_str()) {
            out.push(Violation::new(
                p("/reference_bus"),
                format!("reference bus `{}` does not exist", self.reference_bus),
            ));
        }

        for (i, br) in self.branches.iter().enumerate() {
            for (field, bus) in [("from", &br.from), ("to", &br.to)] {
                if !index.contains_key(bus.as_str()) {
                    out.push(Violation::new(
                        p(&format!("/branches/{i}/{field}")),
                        format!("unknown bus `{bus}`"),
                    ));
                }
            }
            if !(br.susceptance > 0.0) {
                out.push(Violation::new(
                    p(&format!("/branches/{i}/susceptance")),
                    "susceptance must be positive",
                ));
            }
            if !(br.flow_min <= 0.0 && 0.0 <= br.flow_max) {
                out.push(Violation::new(
                    p(&format!("/branches/{i}")),
                    "flow limits must satisfy flow_min <= 0 <= flow_max",
                ));
            }
        }

        for (i, g) in self.generators.iter().enumerate() {
            if !index.contains_key(g.bus.as_str()) {
                out.push(Violation::new(
                    p(&format!("/generators/{i}/bus")),
                    format!("unknown bus `{}`", g.bus),
                ));
            }
            if !(0.0 <= g.cap_min && g.cap_min <= g.cap_max) {
                out.push(Violation::new(
                    p(&format!("/generators/{i}")),
                    "capacities must satisfy 0 <= cap_min <= cap_max",
                ));
            }
            if g.ramp_up < 0.0 || g.ramp_down < 0.0 {
                out.push(Violation::new(
                    p(&format!("/generators/{i}")),
                    "ramp rates are stored as nonnegative magnitudes",
                ));
            }
        }

        let profiled: Vec<(&str, usize, &str, &[f64])> = self
            .renewables
            .iter()
            .enumerate()
            .map(|(i, s)| ("renewables", i, s.bus.as_str(), s.profile.as_slice()))
            .chain(
                self.demands
                    .iter()
                    .enumerate()
                    .map(|(i, s)| ("demands", i, s.bus.as_str(), s.profile.as_slice())),
            )
            .collect();
        for (kind, i, bus, profile) in profiled {
            if !index.contains_key(bus) {
                out.push(Violation::new(
                    p(&format!("/{kind}/{i}/bus")),
                    format!("unknown bus `{bus}`"),
                ));
            }
            if self.n_t > 0 && profile.len() != self.n_t {
                out.push(Violation::new(
                    p(&format!("/{kind}/{i}/profile")),
                    format!(
                        "profile length {} does not match n_T = {}",
                        profile.len(),
                        self.n_t
                    ),
                ));
            }
            if profile.iter().any(|&v| v < 0.0) {
                out.push(Violation::new(
                    p(&format!("/{kind}/{i}/profile")),
                    "profile entries must be nonnegative",
                ));
            }
        }

        // border-bus / tie-port bijection: one tie-line per border bus
        let mut port_count: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, port) in self.tie_lines.iter().enumerate() {
            match index.get(port.border_bus.as_str()) {
                None => out.push(Violation::new(
                    p(&format!("/tie_lines/{i}/border_bus")),
                    format!("unknown bus `{}`", port.border_bus),
                )),
                Some(&b) => {
                    if !self.buses[b].is_border {
                        out.push(Violation::new(
                            p(&format!("/tie_lines/{i}/border_bus")),
                            format!("bus `{}` is not marked as border", port.border_bus),
                        ));
                    }
                }
            }
            *port_count.entry(port.border_bus.as_str()).or_insert(0) += 1;
            if port.flow_min > port.flow_max {
                out.push(Violation::new(
                    p(&format!("/tie_lines/{i}")),
                    "flow_min must not exceed flow_max",
                ));
            }
            if port.orientation != 1 && port.orientation != -1 {
                out.push(Violation::new(
                    p(&format!("/tie_lines/{i}/orientation")),
                    "orientation must be +1 or -1",
                ));
            }
            if port.group.is_empty() {
                out.push(Violation::new(
                    p(&format!("/tie_lines/{i}/group")),
                    "group label must not be empty",
                ));
            }
        }
        for (bus, count) in &port_count {
            if *count > 1 {
                out.push(Violation::new(
                    p("/tie_lines"),
                    format!("one tie-line per border bus: bus `{bus}` hosts {count} ports"),
                ));
            }
        }
        for (i, bus) in self.buses.iter().enumerate() {
            if bus.is_border && !port_count.contains_key(bus.id.as_str()) {
                out.push(Violation::new(
                    p(&format!("/buses/{i}")),
                    format!("border bus `{}` has no tie-line port", bus.id),
                ));
            }
        }

        // ties in one group must share orientation: the aggregated balance
        // term carries one sign per group
        let mut group_sign: BTreeMap<&str, i8> = BTreeMap::new();
        for (i, port) in self.tie_lines.iter().enumerate() {
            match group_sign.get(port.group.as_str()) {
                None => {
                    group_sign.insert(port.group.as_str(), port.orientation);
                }
                Some(&s) if s != port.orientation => {
                    out.push(Violation::new(
                        p(&format!("/tie_lines/{i}/orientation")),
                        format!(
                            "group `{}` mixes orientations; ties at one border interface must share direction",
                            port.group
                        ),
                    ));
                }
                _ => {}
            }
        }

        // connectivity over buses and branches
        if !self.buses.is_empty() && out.is_empty() {
            let n = self.buses.len();
            let mut adj = vec![Vec::new(); n];
            for br in &self.branches {
                let (f, t) = (index[br.from.as_str()], index[br.to.as_str()]);
                adj[f].push(t);
                adj[t].push(f);
            }
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            if seen.iter().any(|&s| !s) {
                out.push(Violation::new(p("/branches"), "network graph is not connected"));
            }
        }

        out
    }
}

/// Report-style validation entry point: all type invariants checked,
/// violations listed with locations.
pub fn validate_network(network: &RegionNetwork) -> Vec<Violation> {
    network.validate("")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    #[test]
    fn bundled_case_is_valid() {
        let net = cases::ieee9(2);
        assert!(validate_network(&net).is_empty());
    }

    #[test]
    fn double_port_on_border_bus_rejected() {
        let mut net = cases::ieee9(1);
        let mut extra = net.tie_lines[0].clone();
        extra.group = "x".into();
        net.tie_lines.push(extra);
        let report = validate_network(&net);
        assert!(
            report
                .iter()
                .any(|v| v.message.contains("one tie-line per border bus")),
            "{report:?}"
        );
    }

    #[test]
    fn profile_length_mismatch_detected() {
        let mut net = cases::ieee9(2);
        net.demands[0].profile.pop();
        let report = validate_network(&net);
        assert!(report.iter().any(|v| v.message.contains("does not match n_T")));
        assert!(report.iter().any(|v| v.path.contains("/demands/0/profile")));
    }

    #[test]
    fn disconnected_graph_detected() {
        let mut net = cases::ieee9(1);
        net.branches.truncate(3);
        let report = validate_network(&net);
        assert!(report.iter().any(|v| v.message.contains("not connected")));
    }

    #[test]
    fn mixed_orientation_group_rejected() {
        let mut net = cases::ieee9(1);
        net.tie_lines[0].group = "g".into();
        net.tie_lines[1].group = "g".into();
        net.tie_lines[1].orientation = -1;
        let report = validate_network(&net);
        assert!(report.iter().any(|v| v.message.contains("mixes orientations")));
    }
}
