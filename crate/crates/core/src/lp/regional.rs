//! Regional operating-region LP fragments and the centralized baseline.
//!
//! One period's operating set couples generation, curtailment, directed
//! tie flows, border angles and the curtailment epigraph variable `z`:
//!
//! * power balance with orientation-signed tie injections,
//! * border angles as a linear map of injections,
//! * branch flow limits through the PTDF rows,
//! * dispatch bounds (capacities, a fixed envelope, or envelope variables
//!   when the envelope itself is being optimized),
//! * tie-flow and angle boxes, curtailment box, epigraph row.
//!
//! Ramp rows link consecutive periods and are emitted only for the full
//! multi-period set; the per-period set omits them by construction.

use std::collections::BTreeMap;

use crate::envelope::DispatchEnvelope;
use crate::error::{Error, Result};
use crate::io::CaseFile;
use crate::lp::{LpProblem, LpSolution, LpStatus, Relation, Sense, VarId};
use crate::model::matrices::NetworkMatrices;
use crate::model::RegionNetwork;
use crate::FEAS_TOL;

/// How generator bounds enter a period fragment.
#[derive(Clone, Copy)]
pub enum DispatchBounds<'a> {
    /// Physical capacities; the full original constraint set.
    Capacity,
    /// A computed envelope's per-period levels.
    Envelope(&'a DispatchEnvelope),
    /// Envelope levels as LP variables (used while computing the envelope).
    EnvelopeVars {
        level_min: &'a [Vec<VarId>],
        level_max: &'a [Vec<VarId>],
    },
}

/// Column handles of one region-period fragment.
#[derive(Debug, Clone)]
pub struct PeriodVars {
    pub gen: Vec<VarId>,
    pub curtail: Vec<VarId>,
    pub tie: Vec<VarId>,
    pub angle: Vec<VarId>,
    pub z: VarId,
}

/// Emit one period's constraint set. Multi-period callers add
/// [`add_ramp_rows`] between consecutive fragments.
///
/// `shared_ties`: pre-created directed flow variables (one per physical
/// tie) when the fragment joins a multi-region problem; the port's box is
/// intersected onto the existing bounds. `None` creates fresh tie columns.
pub fn build_period_fragment(
    lp: &mut LpProblem,
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    t: usize,
    dispatch: DispatchBounds<'_>,
    shared_ties: Option<&[VarId]>,
    prefix: &str,
) -> PeriodVars {
    let n_gen = network.generators.len();
    let n_ren = network.renewables.len();
    let n_tie = network.tie_lines.len();

    let gen: Vec<VarId> = network
        .generators
        .iter()
        .enumerate()
        .map(|(g, unit)| {
            let (lo, hi) = match dispatch {
                DispatchBounds::Capacity | DispatchBounds::EnvelopeVars { .. } => {
                    (unit.cap_min, unit.cap_max)
                }
                DispatchBounds::Envelope(env) => (env.level_min[t][g], env.level_max[t][g]),
            };
            lp.add_var(format!("{prefix}.g{g}"), lo, hi)
        })
        .collect();
    if let DispatchBounds::EnvelopeVars { level_min, level_max } = dispatch {
        for g in 0..n_gen {
            lp.add_row(
                format!("{prefix}.gub{g}"),
                [(gen[g], 1.0), (level_max[t][g], -1.0)],
                Relation::Le,
                0.0,
            );
            lp.add_row(
                format!("{prefix}.glb{g}"),
                [(gen[g], -1.0), (level_min[t][g], 1.0)],
                Relation::Le,
                0.0,
            );
        }
    }

    let curtail: Vec<VarId> = network
        .renewables
        .iter()
        .enumerate()
        .map(|(r, site)| lp.add_var(format!("{prefix}.c{r}"), 0.0, site.profile[t]))
        .collect();

    let tie: Vec<VarId> = match shared_ties {
        Some(vars) => {
            assert_eq!(vars.len(), n_tie);
            for (i, port) in network.tie_lines.iter().enumerate() {
                let v = vars[i];
                let lo = lp.vars[v.0].lower.max(port.flow_min);
                let hi = lp.vars[v.0].upper.min(port.flow_max);
                lp.set_bounds(v, lo, hi);
            }
            vars.to_vec()
        }
        None => network
            .tie_lines
            .iter()
            .enumerate()
            .map(|(i, port)| lp.add_var(format!("{prefix}.tie{i}"), port.flow_min, port.flow_max))
            .collect(),
    };

    let angle: Vec<VarId> = (0..n_tie)
        .map(|p| {
            lp.add_var(
                format!("{prefix}.th{p}"),
                -std::f64::consts::PI,
                std::f64::consts::PI,
            )
        })
        .collect();

    let ceiling = network.total_renewable(t);
    let z = lp.add_var(format!("{prefix}.z"), 0.0, ceiling);

    // power balance: gen + signed ties - curtailment = demand - renewables
    let mut balance: Vec<(VarId, f64)> = Vec::with_capacity(n_gen + n_tie + n_ren);
    for &v in &gen {
        balance.push((v, 1.0));
    }
    for (i, &v) in tie.iter().enumerate() {
        balance.push((v, mats.port_sign[i]));
    }
    for &v in &curtail {
        balance.push((v, -1.0));
    }
    let rhs = network.total_demand(t) - network.total_renewable(t);
    lp.add_row(format!("{prefix}.bal"), balance, Relation::Eq, rhs);

    // border angles as a map of injections
    for p in 0..n_tie {
        let mut terms: Vec<(VarId, f64)> = vec![(angle[p], 1.0)];
        for g in 0..n_gen {
            terms.push((gen[g], -mats.angle_coeff_gen(p, g)));
        }
        for i in 0..n_tie {
            terms.push((tie[i], -mats.angle_coeff_tie(p, i)));
        }
        for r in 0..n_ren {
            terms.push((curtail[r], mats.angle_coeff_ren(p, r)));
        }
        lp.add_row(
            format!("{prefix}.ang{p}"),
            terms,
            Relation::Eq,
            mats.angle_constant(network, p, t),
        );
    }

    // branch flow limits through the PTDF rows
    for (l, br) in network.branches.iter().enumerate() {
        let mut terms: Vec<(VarId, f64)> = Vec::with_capacity(n_gen + n_tie + n_ren);
        for g in 0..n_gen {
            terms.push((gen[g], mats.flow_coeff_gen(l, g)));
        }
        for i in 0..n_tie {
            terms.push((tie[i], mats.flow_coeff_tie(l, i)));
        }
        for r in 0..n_ren {
            terms.push((curtail[r], -mats.flow_coeff_ren(l, r)));
        }
        let constant = mats.branch_flow_constant(network, l, t);
        lp.add_row(
            format!("{prefix}.fu{l}"),
            terms.clone(),
            Relation::Le,
            br.flow_max - constant,
        );
        lp.add_row(
            format!("{prefix}.fl{l}"),
            terms,
            Relation::Ge,
            br.flow_min - constant,
        );
    }

    // curtailment epigraph: total curtailment <= z <= total renewables
    let mut epi: Vec<(VarId, f64)> = curtail.iter().map(|&v| (v, 1.0)).collect();
    epi.push((z, -1.0));
    lp.add_row(format!("{prefix}.epi"), epi, Relation::Le, 0.0);

    PeriodVars { gen, curtail, tie, angle, z }
}

/// Ramp rows between two consecutive periods' fragments.
pub fn add_ramp_rows(
    lp: &mut LpProblem,
    network: &RegionNetwork,
    prev: &PeriodVars,
    cur: &PeriodVars,
    prefix: &str,
) {
    for (g, unit) in network.generators.iter().enumerate() {
        lp.add_row(
            format!("{prefix}.rup{g}"),
            [(cur.gen[g], 1.0), (prev.gen[g], -1.0)],
            Relation::Le,
            unit.ramp_up,
        );
        lp.add_row(
            format!("{prefix}.rdn{g}"),
            [(cur.gen[g], -1.0), (prev.gen[g], 1.0)],
            Relation::Le,
            unit.ramp_down,
        );
    }
}

/// Multi-period operating set for one region.
///
/// `include_ramps = true` gives the full set (generation levels linked
/// across periods); `false` gives the per-period Cartesian factors and
/// requires an envelope, whose levels replace the ramp coupling.
pub fn build_operating_region(
    lp: &mut LpProblem,
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    dispatch: DispatchBounds<'_>,
    include_ramps: bool,
) -> Result<Vec<PeriodVars>> {
    if !include_ramps && !matches!(dispatch, DispatchBounds::Envelope(_)) {
        return Err(Error::MalformedLp(
            "per-period decomposition requires a dispatch envelope".into(),
        ));
    }
    let mut periods = Vec::with_capacity(network.n_t);
    for t in 0..network.n_t {
        let prefix = format!("{}.t{t}", network.region_id);
        let vars = build_period_fragment(lp, network, mats, t, dispatch, None, &prefix);
        periods.push(vars);
    }
    if include_ramps {
        for t in 1..network.n_t {
            let prefix = format!("{}.t{t}", network.region_id);
            let (prev, cur) = (periods[t - 1].clone(), periods[t].clone());
            add_ramp_rows(lp, network, &prev, &cur, &prefix);
        }
    }
    Ok(periods)
}

/// Per-region bookkeeping of a multi-region problem.
#[derive(Debug, Clone)]
pub struct RegionLp {
    pub region_id: String,
    pub periods: Vec<PeriodVars>,
}

/// The centralized curtailment-minimization baseline over all regions and
/// the coupling rows linking shared directed tie flows to border angles.
///
/// Generator bounds come from `envelopes` when given (the decomposed
/// reading of the problem) and from capacities otherwise (the original
/// baseline).
pub fn build_op1(
    case: &CaseFile,
    mats: &BTreeMap<String, NetworkMatrices>,
    envelopes: Option<&BTreeMap<String, DispatchEnvelope>>,
) -> Result<(LpProblem, Vec<RegionLp>)> {
    let mut lp = LpProblem::new();
    let n_t = case.n_t;

    // shared directed flow variables, one per physical tie and period
    let mut shared: BTreeMap<(String, String), Vec<VarId>> = BTreeMap::new();
    for (k, rec) in case.interconnection.iter().enumerate() {
        let vars: Vec<VarId> = (0..n_t)
            .map(|t| lp.add_var(format!("tie{k}.t{t}"), f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        shared.insert((rec.from_region.clone(), rec.from_bus.clone()), vars.clone());
        shared.insert((rec.to_region.clone(), rec.to_bus.clone()), vars);
    }

    let mut regions = Vec::new();
    for network in &case.regions {
        let m = &mats[&network.region_id];
        let dispatch = match envelopes {
            Some(envs) => DispatchBounds::Envelope(&envs[&network.region_id]),
            None => DispatchBounds::Capacity,
        };
        let mut periods = Vec::with_capacity(n_t);
        for t in 0..n_t {
            let tie_vars: Vec<VarId> = network
                .tie_lines
                .iter()
                .enumerate()
                .map(|(i, port)| {
                    match shared.get(&(network.region_id.clone(), port.border_bus.clone())) {
                        Some(vars) => vars[t],
                        None => lp.add_var(
                            format!("{}.t{t}.tie{i}", network.region_id),
                            port.flow_min,
                            port.flow_max,
                        ),
                    }
                })
                .collect();
            let prefix = format!("{}.t{t}", network.region_id);
            let vars =
                build_period_fragment(&mut lp, network, m, t, dispatch, Some(&tie_vars), &prefix);
            periods.push(vars);
        }
        for t in 1..n_t {
            let prefix = format!("{}.t{t}", network.region_id);
            let (prev, cur) = (periods[t - 1].clone(), periods[t].clone());
            add_ramp_rows(&mut lp, network, &prev, &cur, &prefix);
        }
        for vars in &periods {
            lp.add_objective(vars.z, 1.0);
        }
        regions.push(RegionLp {
            region_id: network.region_id.clone(),
            periods,
        });
    }

    // coupling: directed flow = orientation * base * (theta_from - theta_to) / x
    for (k, rec) in case.interconnection.iter().enumerate() {
        let from_region = case.region(&rec.from_region)?;
        let to_region = case.region(&rec.to_region)?;
        let from_port = port_index(from_region, &rec.from_bus)?;
        let to_port = port_index(to_region, &rec.to_bus)?;
        let from_lp = regions
            .iter()
            .find(|r| r.region_id == rec.from_region)
            .expect("region built");
        let to_lp = regions
            .iter()
            .find(|r| r.region_id == rec.to_region)
            .expect("region built");
        let coeff = rec.orientation as f64 * case.base_mva / rec.reactance;
        for t in 0..n_t {
            let flow = shared[&(rec.from_region.clone(), rec.from_bus.clone())][t];
            lp.add_row(
                format!("couple{k}.t{t}"),
                [
                    (flow, 1.0),
                    (from_lp.periods[t].angle[from_port], -coeff),
                    (to_lp.periods[t].angle[to_port], coeff),
                ],
                Relation::Eq,
                0.0,
            );
        }
    }

    lp.set_sense(Sense::Min);
    Ok((lp, regions))
}

pub fn port_index(network: &RegionNetwork, bus: &str) -> Result<usize> {
    network
        .tie_lines
        .iter()
        .position(|p| p.border_bus == bus)
        .ok_or_else(|| {
            Error::EndpointMismatch(format!(
                "region `{}` has no tie-line port at bus `{bus}`",
                network.region_id
            ))
        })
}

/// Feasibility of a coupling point against the full original constraint
/// set: tie flows fixed per period, and the minimum attainable total
/// curtailment must not exceed the point's per-period `z`.
pub fn check_point_feasibility(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    tie_flows: &[Vec<f64>],
    z_values: &[f64],
) -> Result<bool> {
    assert_eq!(tie_flows.len(), network.n_t);
    assert_eq!(z_values.len(), network.n_t);
    for t in 0..network.n_t {
        assert_eq!(tie_flows[t].len(), network.n_ties());
        // the epigraph ceiling is part of the region definition
        if z_values[t] > network.total_renewable(t) + FEAS_TOL || z_values[t] < -FEAS_TOL {
            return Ok(false);
        }
    }
    let mut lp = LpProblem::new();
    let periods = build_operating_region(&mut lp, network, mats, DispatchBounds::Capacity, true)?;
    for t in 0..network.n_t {
        for (i, &v) in periods[t].tie.iter().enumerate() {
            let val = tie_flows[t][i];
            let port = &network.tie_lines[i];
            if val < port.flow_min - FEAS_TOL || val > port.flow_max + FEAS_TOL {
                return Ok(false);
            }
            lp.fix_var(v, val);
        }
        lp.fix_var(periods[t].z, z_values[t].clamp(0.0, network.total_renewable(t)));
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        LpStatus::Unbounded => Err(Error::Unbounded {
            context: "feasibility check".into(),
        }),
        LpStatus::SolverFailure => Err(Error::SolverFailure("feasibility check".into())),
    }
}

/// Minimum total curtailment with every tie flow pinned to zero: the
/// no-exchange baseline, summed over the given regions.
pub fn islanded_objective(
    case: &CaseFile,
    mats: &BTreeMap<String, NetworkMatrices>,
) -> Result<f64> {
    let mut total = 0.0;
    for network in &case.regions {
        let m = &mats[&network.region_id];
        let mut lp = LpProblem::new();
        let periods = build_operating_region(&mut lp, network, m, DispatchBounds::Capacity, true)?;
        for vars in &periods {
            for &tie in &vars.tie {
                lp.fix_var(tie, 0.0);
            }
            lp.add_objective(vars.z, 1.0);
        }
        let sol = lp
            .solve()?
            .into_optimal(&format!("islanded solve for region `{}`", network.region_id))?;
        total += sol.objective;
    }
    Ok(total)
}

/// Convenience: matrices for every region of a case.
pub fn build_all_matrices(case: &CaseFile) -> Result<BTreeMap<String, NetworkMatrices>> {
    let mut out = BTreeMap::new();
    for network in &case.regions {
        out.insert(
            network.region_id.clone(),
            NetworkMatrices::build(network, case.base_mva)?,
        );
    }
    Ok(out)
}

/// One feasible interior point of a period's operating set.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Witness {
    pub gen: Vec<f64>,
    pub curtail: Vec<f64>,
    pub tie: Vec<f64>,
    pub angle: Vec<f64>,
    pub z: f64,
}

/// Extract a full witness from a solution for one period's fragment.
pub fn extract_witness(sol: &LpSolution, vars: &PeriodVars) -> Witness {
    Witness {
        gen: sol.values_of(&vars.gen),
        curtail: sol.values_of(&vars.curtail),
        tie: sol.values_of(&vars.tie),
        angle: sol.values_of(&vars.angle),
        z: sol.value(vars.z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    #[test]
    fn balanced_system_needs_no_curtailment() {
        // demand equals renewable availability, zero tie flow -> z = 0 ok
        let mut net = cases::ieee9(1);
        net.generators.iter_mut().for_each(|g| g.cap_min = 0.0);
        net.renewables = vec![
            crate::model::RenewableSite { bus: "b6".into(), profile: vec![90.0] },
            crate::model::RenewableSite { bus: "b8".into(), profile: vec![100.0] },
        ];
        net.demands = vec![
            crate::model::DemandSite { bus: "b6".into(), profile: vec![90.0] },
            crate::model::DemandSite { bus: "b8".into(), profile: vec![100.0] },
        ];
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let mut lp = LpProblem::new();
        let periods =
            build_operating_region(&mut lp, &net, &mats, DispatchBounds::Capacity, true).unwrap();
        for &tie in &periods[0].tie {
            lp.fix_var(tie, 0.0);
        }
        lp.fix_var(periods[0].z, 0.0);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal(), "{:?}", sol.status);
    }

    #[test]
    fn impossible_demand_is_infeasible() {
        let mut net = cases::ieee9(1);
        for d in &mut net.demands {
            d.profile = vec![10_000.0];
        }
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let mut lp = LpProblem::new();
        let _ =
            build_operating_region(&mut lp, &net, &mats, DispatchBounds::Capacity, true).unwrap();
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn ieee9_feasible_and_solvable() {
        let case = cases::ieee9_case(2);
        let mats = build_all_matrices(&case).unwrap();
        let (lp, regions) = build_op1(&case, &mats, None).unwrap();
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal(), "{:?}", sol.status);
        assert!(sol.objective >= -1e-9);
        let w = extract_witness(&sol, &regions[0].periods[0]);
        assert_eq!(w.gen.len(), 3);
        assert_eq!(w.tie.len(), 4);
    }

    #[test]
    fn op1_single_region_no_ties_reduces_to_regional_lp() {
        let mut case = cases::ieee9_case(1);
        case.regions[0].tie_lines.clear();
        for b in &mut case.regions[0].buses {
            b.is_border = false;
        }
        let mats = build_all_matrices(&case).unwrap();
        let (lp, _) = build_op1(&case, &mats, None).unwrap();
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());

        // the islanded objective is the same thing for a no-tie region
        let islanded = islanded_objective(&case, &mats).unwrap();
        assert!((sol.objective - islanded).abs() < 1e-7);
    }

    #[test]
    fn zero_renewables_give_zero_objective() {
        let mut case = cases::ieee9_case(1);
        for site in &mut case.regions[0].renewables {
            site.profile = vec![0.0];
        }
        let mats = build_all_matrices(&case).unwrap();
        let (lp, _) = build_op1(&case, &mats, None).unwrap();
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert!(sol.objective.abs() < 1e-9);
    }

    #[test]
    fn coupled_exchange_beats_islanding() {
        // two regions, one with surplus renewables: coupling strictly
        // reduces total curtailment
        let case = cases::two_region_case();
        let mats = build_all_matrices(&case).unwrap();
        let (lp, _) = build_op1(&case, &mats, None).unwrap();
        let coupled = lp.solve().unwrap();
        assert!(coupled.is_optimal(), "{:?}", coupled.status);
        let islanded = islanded_objective(&case, &mats).unwrap();
        assert!(
            coupled.objective < islanded - 1.0,
            "coupled {} vs islanded {islanded}",
            coupled.objective
        );
    }

    #[test]
    fn out_of_box_point_infeasible() {
        let net = cases::ieee9(1);
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        // tie flow beyond the port box
        let flows = vec![vec![500.0, 0.0, 0.0, 0.0]];
        let ok = check_point_feasibility(&net, &mats, &flows, &[50.0]).unwrap();
        assert!(!ok);
        // z above the renewable ceiling
        let flows = vec![vec![0.0; 4]];
        let ceiling = net.total_renewable(0);
        let ok = check_point_feasibility(&net, &mats, &flows, &[ceiling + 1.0]).unwrap();
        assert!(!ok);
    }

    #[test]
    fn zero_point_feasible_on_bundled_case() {
        let net = cases::ieee9(2);
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let flows = vec![vec![0.0; 4], vec![0.0; 4]];
        let z = vec![net.total_renewable(0), net.total_renewable(1)];
        assert!(check_point_feasibility(&net, &mats, &flows, &z).unwrap());
    }
}
