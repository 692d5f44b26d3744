//! Bundled and synthetic test systems.
//!
//! `ieee9*` builds a 9-bus-style network on the classic WSCC topology with
//! four tie-lines at buses 1, 3, 7 and 9. `two_region_case` is a small
//! surplus/deficit pair joined by one tie-line, and `sandwich_case`
//! generates randomized variants of that pair for property sweeps.

use crate::coordination::TieLineRecord;
use crate::io::{CaseFile, SCHEMA_VERSION};
use crate::model::{Branch, Bus, DemandSite, Generator, RegionNetwork, RenewableSite, TieLinePort};
use crate::rng::SeededRng;

fn bus(id: &str, is_border: bool) -> Bus {
    Bus { id: id.into(), is_border }
}

fn branch(from: &str, to: &str, x: f64, limit: f64) -> Branch {
    Branch {
        from: from.into(),
        to: to.into(),
        susceptance: 1.0 / x,
        flow_min: -limit,
        flow_max: limit,
    }
}

fn take(profile: &[f64], n_t: usize) -> Vec<f64> {
    profile.iter().copied().take(n_t).collect()
}

/// 9-bus-style region with four tie-lines in singleton groups.
pub fn ieee9(n_t: usize) -> RegionNetwork {
    assert!(n_t >= 1 && n_t <= 2, "bundled profiles cover up to two periods");
    let port = |busid: &str, group: &str| TieLinePort {
        border_bus: busid.into(),
        group: group.into(),
        flow_min: -80.0,
        flow_max: 80.0,
        orientation: 1,
    };
    RegionNetwork {
        region_id: "ieee9".into(),
        n_t,
        buses: vec![
            bus("b1", true),
            bus("b2", false),
            bus("b3", true),
            bus("b4", false),
            bus("b5", false),
            bus("b6", false),
            bus("b7", true),
            bus("b8", false),
            bus("b9", true),
        ],
        branches: vec![
            branch("b1", "b4", 0.0576, 250.0),
            branch("b2", "b7", 0.0625, 250.0),
            branch("b3", "b9", 0.0586, 250.0),
            branch("b4", "b5", 0.085, 180.0),
            branch("b4", "b6", 0.092, 180.0),
            branch("b5", "b7", 0.161, 120.0),
            branch("b6", "b9", 0.17, 120.0),
            branch("b7", "b8", 0.072, 180.0),
            branch("b8", "b9", 0.1008, 180.0),
        ],
        generators: vec![
            Generator { bus: "b1".into(), cap_min: 10.0, cap_max: 250.0, ramp_up: 60.0, ramp_down: 60.0 },
            Generator { bus: "b2".into(), cap_min: 10.0, cap_max: 200.0, ramp_up: 50.0, ramp_down: 50.0 },
            Generator { bus: "b3".into(), cap_min: 10.0, cap_max: 130.0, ramp_up: 40.0, ramp_down: 40.0 },
        ],
        renewables: vec![
            RenewableSite { bus: "b6".into(), profile: take(&[70.0, 110.0], n_t) },
            RenewableSite { bus: "b8".into(), profile: take(&[60.0, 90.0], n_t) },
        ],
        demands: vec![
            DemandSite { bus: "b5".into(), profile: take(&[125.0, 110.0], n_t) },
            DemandSite { bus: "b6".into(), profile: take(&[90.0, 80.0], n_t) },
            DemandSite { bus: "b8".into(), profile: take(&[100.0, 95.0], n_t) },
        ],
        tie_lines: vec![
            port("b1", "g1"),
            port("b3", "g3"),
            port("b7", "g7"),
            port("b9", "g9"),
        ],
        reference_bus: "b4".into(),
    }
}

/// Single-period 9-bus-style region with the four tie-lines in two groups:
/// buses 3 and 7 aggregate into group `e`, buses 1 and 9 into group `w`.
pub fn ieee9_aggregated() -> RegionNetwork {
    let mut net = ieee9(1);
    for port in &mut net.tie_lines {
        port.group = match port.border_bus.as_str() {
            "b3" | "b7" => "e".into(),
            _ => "w".into(),
        };
    }
    net
}

pub fn ieee9_case(n_t: usize) -> CaseFile {
    CaseFile {
        schema_version: SCHEMA_VERSION,
        n_t,
        base_mva: 100.0,
        regions: vec![ieee9(n_t)],
        interconnection: vec![],
        scenarios: vec![],
    }
}

pub fn ieee9_aggregated_case() -> CaseFile {
    CaseFile {
        schema_version: SCHEMA_VERSION,
        n_t: 1,
        base_mva: 100.0,
        regions: vec![ieee9_aggregated()],
        interconnection: vec![],
        scenarios: vec![],
    }
}

/// Two-region surplus/deficit pair: `R1` has more renewable power than it
/// can absorb, `R2` has almost none; one tie-line joins their border buses.
///
/// Device placement makes the shared angle frame workable: the exporter's
/// renewable sits at its border bus (lifting the border angle), the
/// importer's demand sits at its border bus (pulling it down), so the
/// coupling row crosses both regions' reachable angle lines inside the
/// tie-flow window. One generator and one renewable per region keep each
/// region vertex's witness dispatch unique.
pub fn two_region_case() -> CaseFile {
    CaseFile {
        schema_version: SCHEMA_VERSION,
        n_t: 2,
        base_mva: 100.0,
        regions: vec![
            triangle_region("R1", TriangleSpec {
                susceptance: 10.0,
                gen_cap: 150.0,
                border_site: Site::Renewable([95.0, 135.0]),
                inner_site: Site::Demand([60.0, 65.0]),
                tie_limit: 70.0,
                orientation: -1,
            }),
            triangle_region("R2", TriangleSpec {
                susceptance: 10.0,
                gen_cap: 170.0,
                border_site: Site::Demand([95.0, 105.0]),
                inner_site: Site::Renewable([10.0, 6.0]),
                tie_limit: 70.0,
                orientation: 1,
            }),
        ],
        interconnection: vec![TieLineRecord {
            from_region: "R1".into(),
            from_bus: "b1".into(),
            to_region: "R2".into(),
            to_bus: "b1".into(),
            reactance: 0.1,
            orientation: 1,
        }],
        scenarios: vec![],
    }
}

enum Site {
    Renewable([f64; 2]),
    Demand([f64; 2]),
}

struct TriangleSpec {
    susceptance: f64,
    gen_cap: f64,
    border_site: Site,
    inner_site: Site,
    tie_limit: f64,
    orientation: i8,
}

/// Three-bus region: border bus `b1` with the tie port, generator at the
/// reference bus `b2`, one site at `b1` and one at `b3`.
fn triangle_region(id: &str, spec: TriangleSpec) -> RegionNetwork {
    let edge = |from: &str, to: &str, b: f64| Branch {
        from: from.into(),
        to: to.into(),
        susceptance: b,
        flow_min: -300.0,
        flow_max: 300.0,
    };
    let mut renewables = Vec::new();
    let mut demands = Vec::new();
    for (bus, site) in [("b1", spec.border_site), ("b3", spec.inner_site)] {
        match site {
            Site::Renewable(p) => renewables.push(RenewableSite { bus: bus.into(), profile: p.to_vec() }),
            Site::Demand(p) => demands.push(DemandSite { bus: bus.into(), profile: p.to_vec() }),
        }
    }
    RegionNetwork {
        region_id: id.into(),
        n_t: 2,
        buses: vec![bus("b1", true), bus("b2", false), bus("b3", false)],
        branches: vec![
            edge("b1", "b2", spec.susceptance),
            edge("b2", "b3", spec.susceptance),
            edge("b1", "b3", spec.susceptance),
        ],
        generators: vec![Generator {
            bus: "b2".into(),
            cap_min: 0.0,
            cap_max: spec.gen_cap,
            ramp_up: spec.gen_cap,
            ramp_down: spec.gen_cap,
        }],
        renewables,
        demands,
        tie_lines: vec![TieLinePort {
            border_bus: "b1".into(),
            group: "x".into(),
            flow_min: -spec.tie_limit,
            flow_max: spec.tie_limit,
            orientation: spec.orientation,
        }],
        reference_bus: "b2".into(),
    }
}

/// Randomized two-region surplus/deficit case for property sweeps, built
/// on the same template as [`two_region_case`]. The parameter ranges keep
/// the coupling crossing inside the tie window for every seed.
pub fn sandwich_case(seed: u64) -> CaseFile {
    let mut rng = SeededRng::new(seed.wrapping_mul(0x9e37_79b9).wrapping_add(seed));
    let tie_limit = rng.range(72.0, 85.0);

    let dem1 = [rng.range(40.0, 60.0), rng.range(40.0, 60.0)];
    let ren1 = [dem1[0] + rng.range(20.0, 35.0), dem1[1] + rng.range(20.0, 35.0)];
    let dem2 = [rng.range(60.0, 85.0), rng.range(60.0, 85.0)];
    let ren2 = [rng.range(5.0, 15.0), rng.range(5.0, 15.0)];

    let r1 = triangle_region("R1", TriangleSpec {
        susceptance: rng.range(8.0, 12.0),
        gen_cap: rng.range(80.0, 120.0),
        border_site: Site::Renewable(ren1),
        inner_site: Site::Demand(dem1),
        tie_limit,
        orientation: -1,
    });
    let r2 = triangle_region("R2", TriangleSpec {
        susceptance: rng.range(8.0, 12.0),
        gen_cap: dem2[0].max(dem2[1]) + rng.range(20.0, 60.0),
        border_site: Site::Demand(dem2),
        inner_site: Site::Renewable(ren2),
        tie_limit,
        orientation: 1,
    });
    CaseFile {
        schema_version: SCHEMA_VERSION,
        n_t: 2,
        base_mva: 100.0,
        regions: vec![r1, r2],
        interconnection: vec![TieLineRecord {
            from_region: "R1".into(),
            from_bus: "b1".into(),
            to_region: "R2".into(),
            to_bus: "b1".into(),
            reactance: rng.range(0.08, 0.12),
            orientation: 1,
        }],
        scenarios: vec![],
    }
}
