//! Inter-region coupling over security regions: one coordination LP fixes
//! every tie flow and border angle, then each region recovers its own
//! dispatch with the coupling pinned.
//!
//! The coupling reformulation works on region artifacts alone: per region
//! and period, a convex-weight vector over the region's vertices ties the
//! aggregated flows, the border angles (through the per-vertex witnesses)
//! and the curtailment budget together; the directed tie flows are linked
//! to border angles through the tie reactances and constrained by the
//! recovery boxes. One LP minimizes the total curtailment budget across
//! all regions — no iteration, no further message exchange.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregation::{
    build_aggregation_matrix, build_approx_model, compute_tie_bounds, AggregationPlan, MinMaxFit,
    TieBounds,
};
use crate::envelope::{compute_envelope, DispatchEnvelope};
use crate::error::{Error, Result, Violation};
use crate::io::CaseFile;
use crate::lp::regional::{
    build_all_matrices, build_operating_region, port_index, DispatchBounds,
};
use crate::lp::{LpProblem, LpStatus, Relation, Sense, VarId};
use crate::model::matrices::NetworkMatrices;
use crate::model::RegionNetwork;
use crate::oracles::{sample_and_check, SampleReport};
use crate::projection::{compute_region, RegionOptions, SecurityRegion};

fn default_orientation() -> i8 {
    1
}

/// One physical tie-line between two modeled regions. The directed flow
/// variable is positive from `from_bus` toward `to_bus` when `orientation`
/// is +1 (reversed when -1), so the to-side port imports at positive flow.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TieLineRecord {
    pub from_region: String,
    pub from_bus: String,
    pub to_region: String,
    pub to_bus: String,
    /// Per-unit reactance of the tie-line.
    pub reactance: f64,
    #[serde(default = "default_orientation")]
    pub orientation: i8,
}

/// Resolved interconnection: the record list plus validation helpers.
#[derive(Debug, Clone)]
pub struct InterconnectionModel {
    pub records: Vec<TieLineRecord>,
}

impl InterconnectionModel {
    pub fn new(records: Vec<TieLineRecord>) -> Self {
        InterconnectionModel { records }
    }

    /// Structural checks against a case: endpoints exist as border buses
    /// with ports, reactances positive, port orientations consistent with
    /// the record direction.
    pub fn validate(case: &CaseFile) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen_endpoints: std::collections::BTreeSet<(String, String)> = Default::default();
        for (i, rec) in case.interconnection.iter().enumerate() {
            let path = format!("/interconnection/{i}");
            if !(rec.reactance > 0.0) {
                out.push(Violation::new(
                    format!("{path}/reactance"),
                    "reactance must be positive",
                ));
            }
            if rec.orientation != 1 && rec.orientation != -1 {
                out.push(Violation::new(
                    format!("{path}/orientation"),
                    "orientation must be +1 or -1",
                ));
            }
            if rec.from_region == rec.to_region {
                out.push(Violation::new(
                    path.clone(),
                    "tie-line endpoints must be in different regions",
                ));
            }
            for (field, region_id, bus_id, expect_sign) in [
                ("from", &rec.from_region, &rec.from_bus, -rec.orientation),
                ("to", &rec.to_region, &rec.to_bus, rec.orientation),
            ] {
                let Some(region) = case.regions.iter().find(|r| &r.region_id == region_id) else {
                    out.push(Violation::new(
                        format!("{path}/{field}_region"),
                        format!("unknown region `{region_id}`"),
                    ));
                    continue;
                };
                let Some(port) = region.tie_lines.iter().find(|p| &p.border_bus == bus_id)
                else {
                    out.push(Violation::new(
                        format!("{path}/{field}_bus"),
                        format!("region `{region_id}` has no tie-line port at bus `{bus_id}`"),
                    ));
                    continue;
                };
                if port.orientation != expect_sign {
                    out.push(Violation::new(
                        format!("{path}/{field}_bus"),
                        format!(
                            "port orientation at `{region_id}`/`{bus_id}` is {} but the record direction implies {}",
                            port.orientation, expect_sign
                        ),
                    ));
                }
                if !seen_endpoints.insert((region_id.clone(), bus_id.clone())) {
                    out.push(Violation::new(
                        format!("{path}/{field}_bus"),
                        format!(
                            "border bus `{region_id}`/`{bus_id}` appears in more than one record"
                        ),
                    ));
                }
            }
        }
        out
    }
}

/// Everything one region publishes: envelope, aggregation, and per-period
/// security regions with tightened bounds and fitted models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionBundle {
    pub region_id: String,
    pub envelope: DispatchEnvelope,
    pub plan: AggregationPlan,
    pub periods: Vec<PeriodBundle>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodBundle {
    pub bounds: TieBounds,
    pub fit: MinMaxFit,
    pub region: SecurityRegion,
}

/// Full per-region stage of the pipeline: envelope, grouping, tightened
/// bounds, fitted model and the vertex-searched region for every period.
pub fn build_region_bundle(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    opts: &RegionOptions,
) -> Result<RegionBundle> {
    let envelope = compute_envelope(network, mats).map_err(|e| e.at_stage("envelope"))?;
    let plan = build_aggregation_matrix(network).map_err(|e| e.at_stage("aggregation"))?;
    let mut periods = Vec::with_capacity(network.n_t);
    for t in 0..network.n_t {
        let bounds = compute_tie_bounds(network, mats, &envelope, t, opts.mode)
            .map_err(|e| e.at_stage("tie-bounds"))?;
        let fit = build_approx_model(mats, &plan, &bounds);
        let region = compute_region(network, mats, &envelope, &plan, &fit, &bounds, t, opts)
            .map_err(|e| e.at_stage("region-projection"))?;
        periods.push(PeriodBundle { bounds, fit, region });
    }
    Ok(RegionBundle {
        region_id: network.region_id.clone(),
        envelope,
        plan,
        periods,
    })
}

/// Coordination outcome: per region and period the convex weights, fixed
/// coupling values and curtailment budgets, plus the recovered dispatch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordinationSolution {
    pub objective: f64,
    pub regions: Vec<RegionCoordination>,
    /// Non-iterative contract: exactly one coordination LP solve.
    pub lp_solves: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionCoordination {
    pub region_id: String,
    pub periods: Vec<PeriodCoordination>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodCoordination {
    /// Vertex weights, aligned with the region artifact's vertex list.
    pub weights: Vec<f64>,
    pub group_flow: Vec<f64>,
    pub tie_flow: Vec<f64>,
    pub border_angle: Vec<f64>,
    pub z: f64,
}

/// Emit one tie-line's coupling rows for all periods: the shared directed
/// flow equals orientation * base * (theta_from - theta_to) / x.
pub fn build_coupling_rows(
    lp: &mut LpProblem,
    record: &TieLineRecord,
    base_mva: f64,
    flow_vars: &[VarId],
    from_angles: &[VarId],
    to_angles: &[VarId],
    label: &str,
) {
    let coeff = record.orientation as f64 * base_mva / record.reactance;
    for (t, &flow) in flow_vars.iter().enumerate() {
        lp.add_row(
            format!("{label}.t{t}"),
            [
                (flow, 1.0),
                (from_angles[t], -coeff),
                (to_angles[t], coeff),
            ],
            Relation::Eq,
            0.0,
        );
    }
}

struct CoordVars {
    weights: Vec<Vec<VarId>>,     // [t][vertex]
    group_flow: Vec<Vec<VarId>>,  // [t][group]
    tie_flow: Vec<Vec<VarId>>,    // [t][port]
    angle: Vec<Vec<VarId>>,       // [t][port]
    z: Vec<VarId>,                // [t]
}

fn build_coordination_lp(
    case: &CaseFile,
    bundles: &BTreeMap<String, RegionBundle>,
    drop_record: Option<usize>,
) -> Result<(LpProblem, BTreeMap<String, CoordVars>)> {
    let n_t = case.n_t;
    let mut lp = LpProblem::new();

    // shared directed tie variables
    let mut shared: BTreeMap<(String, String), Vec<VarId>> = BTreeMap::new();
    for (k, rec) in case.interconnection.iter().enumerate() {
        let vars: Vec<VarId> = (0..n_t)
            .map(|t| lp.add_var(format!("tie{k}.t{t}"), f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        shared.insert((rec.from_region.clone(), rec.from_bus.clone()), vars.clone());
        shared.insert((rec.to_region.clone(), rec.to_bus.clone()), vars);
    }

    let mut all_vars: BTreeMap<String, CoordVars> = BTreeMap::new();
    for network in &case.regions {
        let bundle = bundles
            .get(&network.region_id)
            .ok_or_else(|| Error::Artifact(format!("missing artifact for region `{}`", network.region_id)))?;
        if bundle.periods.len() != n_t {
            return Err(Error::Artifact(format!(
                "artifact for `{}` covers {} periods, case has {n_t}",
                network.region_id,
                bundle.periods.len()
            )));
        }
        let rid = &network.region_id;
        let k = bundle.plan.n_groups();
        let n_tie = network.n_ties();
        let mut vars = CoordVars {
            weights: Vec::with_capacity(n_t),
            group_flow: Vec::with_capacity(n_t),
            tie_flow: Vec::with_capacity(n_t),
            angle: Vec::with_capacity(n_t),
            z: Vec::with_capacity(n_t),
        };
        for t in 0..n_t {
            let period = &bundle.periods[t];
            let region = &period.region;
            if !region.converged {
                return Err(Error::Artifact(format!(
                    "region `{rid}` period {t} did not converge; refusing to coordinate on it"
                )));
            }
            let s = region.n_vertices();
            let weights: Vec<VarId> = (0..s)
                .map(|i| lp.add_var(format!("{rid}.t{t}.w{i}"), 0.0, f64::INFINITY))
                .collect();
            let group_flow: Vec<VarId> = (0..k)
                .map(|j| {
                    lp.add_var(
                        format!("{rid}.t{t}.agg{j}"),
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                    )
                })
                .collect();
            // recovery boxes on the original tie flows; shared variables
            // intersect both sides' boxes
            let tie_flow: Vec<VarId> = (0..n_tie)
                .map(|i| {
                    let lo = period.bounds.lower[i];
                    let hi = period.bounds.upper[i];
                    let drop_box = matches!(drop_record, Some(dk)
                        if record_touches(case, dk, rid, &network.tie_lines[i].border_bus));
                    match shared.get(&(rid.clone(), network.tie_lines[i].border_bus.clone())) {
                        Some(vs) => {
                            let v = vs[t];
                            if !drop_box {
                                let cur_lo = lp.vars[v.0].lower.max(lo);
                                let cur_hi = lp.vars[v.0].upper.min(hi);
                                lp.set_bounds(v, cur_lo, cur_hi);
                            } else {
                                let port = &network.tie_lines[i];
                                let cur_lo = lp.vars[v.0].lower.max(port.flow_min);
                                let cur_hi = lp.vars[v.0].upper.min(port.flow_max);
                                lp.set_bounds(v, cur_lo, cur_hi);
                            }
                            v
                        }
                        None => lp.add_var(format!("{rid}.t{t}.tie{i}"), lo, hi),
                    }
                })
                .collect();
            let angle: Vec<VarId> = (0..n_tie)
                .map(|p| {
                    lp.add_var(
                        format!("{rid}.t{t}.th{p}"),
                        -std::f64::consts::PI,
                        std::f64::consts::PI,
                    )
                })
                .collect();
            let ceiling = network.total_renewable(t);
            let z = lp.add_var(format!("{rid}.t{t}.z"), 0.0, ceiling);

            // convex-combination rows over the region's vertices
            let dim = region.dim();
            for j in 0..k {
                let mut terms: Vec<(VarId, f64)> = vec![(group_flow[j], 1.0)];
                for (i, &w) in weights.iter().enumerate() {
                    terms.push((w, -region.vertices[i][j]));
                }
                lp.add_row(format!("{rid}.t{t}.mixp{j}"), terms, Relation::Eq, 0.0);
            }
            {
                let mut terms: Vec<(VarId, f64)> = vec![(z, 1.0)];
                for (i, &w) in weights.iter().enumerate() {
                    terms.push((w, -region.vertices[i][dim - 1]));
                }
                lp.add_row(format!("{rid}.t{t}.mixz"), terms, Relation::Eq, 0.0);
            }
            for p in 0..n_tie {
                let mut terms: Vec<(VarId, f64)> = vec![(angle[p], 1.0)];
                for (i, &w) in weights.iter().enumerate() {
                    terms.push((w, -region.witnesses[i].angle[p]));
                }
                lp.add_row(format!("{rid}.t{t}.mixa{p}"), terms, Relation::Eq, 0.0);
            }
            lp.add_row(
                format!("{rid}.t{t}.simplex"),
                weights.iter().map(|&w| (w, 1.0)),
                Relation::Eq,
                1.0,
            );
            // aggregation consistency on the original flows
            for (j, ports) in bundle.plan.members.iter().enumerate() {
                let mut terms: Vec<(VarId, f64)> = vec![(group_flow[j], 1.0)];
                for &i in ports {
                    terms.push((tie_flow[i], -1.0));
                }
                lp.add_row(format!("{rid}.t{t}.agg{j}"), terms, Relation::Eq, 0.0);
            }
            lp.add_objective(z, 1.0);

            vars.weights.push(weights);
            vars.group_flow.push(group_flow);
            vars.tie_flow.push(tie_flow);
            vars.angle.push(angle);
            vars.z.push(z);
        }
        all_vars.insert(rid.clone(), vars);
    }

    // coupling rows per interconnection record
    for (kx, rec) in case.interconnection.iter().enumerate() {
        if drop_record == Some(kx) {
            continue;
        }
        let from_net = case.region(&rec.from_region)?;
        let to_net = case.region(&rec.to_region)?;
        let fp = port_index(from_net, &rec.from_bus)?;
        let tp = port_index(to_net, &rec.to_bus)?;
        let flow_vars: Vec<VarId> = (0..n_t)
            .map(|t| shared[&(rec.from_region.clone(), rec.from_bus.clone())][t])
            .collect();
        let from_angles: Vec<VarId> = (0..n_t)
            .map(|t| all_vars[&rec.from_region].angle[t][fp])
            .collect();
        let to_angles: Vec<VarId> = (0..n_t)
            .map(|t| all_vars[&rec.to_region].angle[t][tp])
            .collect();
        build_coupling_rows(
            &mut lp,
            rec,
            case.base_mva,
            &flow_vars,
            &from_angles,
            &to_angles,
            &format!("couple{kx}"),
        );
    }

    lp.set_sense(Sense::Min);
    Ok((lp, all_vars))
}

fn record_touches(case: &CaseFile, record: usize, region_id: &str, bus: &str) -> bool {
    let rec = &case.interconnection[record];
    (rec.from_region == region_id && rec.from_bus == bus)
        || (rec.to_region == region_id && rec.to_bus == bus)
}

/// Solve the one-shot coordination LP over all regions' artifacts.
///
/// On infeasibility the conflicting tie-lines are identified by drop-one
/// re-solves (each record's coupling rows and box removed in turn).
pub fn solve_coordination(
    case: &CaseFile,
    bundles: &BTreeMap<String, RegionBundle>,
) -> Result<CoordinationSolution> {
    let (lp, vars) = build_coordination_lp(case, bundles, None)?;
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            // drop-one probing to locate the conflict
            let mut implicated = Vec::new();
            for k in 0..case.interconnection.len() {
                if let Ok((probe, _)) = build_coordination_lp(case, bundles, Some(k)) {
                    if let Ok(psol) = probe.solve() {
                        if psol.status == LpStatus::Optimal {
                            let rec = &case.interconnection[k];
                            implicated.push(format!(
                                "{}/{} <-> {}/{}",
                                rec.from_region, rec.from_bus, rec.to_region, rec.to_bus
                            ));
                        }
                    }
                }
            }
            let detail = if implicated.is_empty() {
                "regions' security regions do not intersect through the coupling rows".to_string()
            } else {
                format!("conflicting tie-lines: {}", implicated.join(", "))
            };
            return Err(Error::Infeasible {
                context: format!("coordination LP infeasible; {detail}"),
            });
        }
        other => return Err(Error::SolverFailure(format!("coordination ended {other:?}"))),
    }

    let mut regions = Vec::new();
    for network in &case.regions {
        let v = &vars[&network.region_id];
        let mut periods = Vec::with_capacity(case.n_t);
        for t in 0..case.n_t {
            periods.push(PeriodCoordination {
                weights: sol.values_of(&v.weights[t]),
                group_flow: sol.values_of(&v.group_flow[t]),
                tie_flow: sol.values_of(&v.tie_flow[t]),
                border_angle: sol.values_of(&v.angle[t]),
                z: sol.value(v.z[t]),
            });
        }
        regions.push(RegionCoordination {
            region_id: network.region_id.clone(),
            periods,
        });
    }
    Ok(CoordinationSolution {
        objective: sol.objective,
        regions,
        lp_solves: 1,
    })
}

/// Recovered per-region dispatch after coordination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveredDispatch {
    pub region_id: String,
    pub objective: f64,
    /// Per period: generation, curtailment, realized z.
    pub gen: Vec<Vec<f64>>,
    pub curtail: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub lp_solves: usize,
}

/// Regional recovery: the full original constraint set with tie flows and
/// border angles pinned to the coordination solution. Per the inner
/// approximation guarantees this must be feasible; an infeasible outcome
/// is surfaced as a hard invariant error.
pub fn recover_regional_dispatch(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    fixed_flows: &[Vec<f64>],
    fixed_angles: &[Vec<f64>],
) -> Result<RecoveredDispatch> {
    let mut lp = LpProblem::new();
    let periods = build_operating_region(&mut lp, network, mats, DispatchBounds::Capacity, true)?;
    for t in 0..network.n_t {
        for (i, &v) in periods[t].tie.iter().enumerate() {
            lp.fix_var(v, fixed_flows[t][i]);
        }
        for (p, &v) in periods[t].angle.iter().enumerate() {
            lp.fix_var(v, fixed_angles[t][p]);
        }
        lp.add_objective(periods[t].z, 1.0);
    }
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::RecoveryInfeasible {
            region: network.region_id.clone(),
            context: format!(
                "status {:?} with coupling fixed; the inner-approximation guarantee was violated",
                sol.status
            ),
        });
    }
    Ok(RecoveredDispatch {
        region_id: network.region_id.clone(),
        objective: sol.objective,
        gen: periods.iter().map(|p| sol.values_of(&p.gen)).collect(),
        curtail: periods.iter().map(|p| sol.values_of(&p.curtail)).collect(),
        z: periods.iter().map(|p| sol.value(p.z)).collect(),
        lp_solves: 1,
    })
}

/// Options for the full pipeline run.
#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub region: RegionOptions,
    /// Per-region sampling feasibility counter size (0 disables).
    pub samples: usize,
    pub seed: u64,
    /// Also solve the centralized baseline for comparison.
    pub include_op1: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            region: RegionOptions::default(),
            samples: 200,
            seed: 7,
            include_op1: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct StageTimings {
    pub regions_ms: f64,
    pub coordination_ms: f64,
    pub recovery_ms: f64,
    pub sampling_ms: f64,
}

/// Full-run report: objectives under no-exchange (F1) and coordinated
/// exchange (F2), optional centralized baseline, per-region couplings and
/// recovered dispatch, sampling feasibility counters, stage timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub objective: f64,
    pub islanded_objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op1_objective: Option<f64>,
    pub coordination: CoordinationSolution,
    pub recovered: Vec<RecoveredDispatch>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<SampleReport>,
    pub timings: StageTimings,
}

/// The whole flow on one case: per-region bundles, coordination, recovery,
/// baselines and feasibility counters.
pub fn run_pipeline(
    case: &CaseFile,
    opts: &PipelineOptions,
) -> Result<(PipelineReport, BTreeMap<String, RegionBundle>)> {
    let mats = build_all_matrices(case).map_err(|e| e.at_stage("matrices"))?;
    let mut timings = StageTimings::default();

    let t0 = Instant::now();
    let mut bundles = BTreeMap::new();
    for network in &case.regions {
        let bundle = build_region_bundle(network, &mats[&network.region_id], &opts.region)?;
        bundles.insert(network.region_id.clone(), bundle);
    }
    timings.regions_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let coordination =
        solve_coordination(case, &bundles).map_err(|e| e.at_stage("coordination"))?;
    timings.coordination_ms = t1.elapsed().as_secs_f64() * 1e3;

    let t2 = Instant::now();
    let mut recovered = Vec::new();
    for (network, rc) in case.regions.iter().zip(&coordination.regions) {
        let flows: Vec<Vec<f64>> = rc.periods.iter().map(|p| p.tie_flow.clone()).collect();
        let angles: Vec<Vec<f64>> = rc.periods.iter().map(|p| p.border_angle.clone()).collect();
        let rec = recover_regional_dispatch(network, &mats[&network.region_id], &flows, &angles)
            .map_err(|e| e.at_stage("recovery"))?;
        recovered.push(rec);
    }
    timings.recovery_ms = t2.elapsed().as_secs_f64() * 1e3;

    let islanded_objective =
        crate::lp::regional::islanded_objective(case, &mats).map_err(|e| e.at_stage("islanded"))?;
    let op1_objective = if opts.include_op1 {
        let (lp, _) = crate::lp::regional::build_op1(case, &mats, None)
            .map_err(|e| e.at_stage("baseline"))?;
        Some(
            lp.solve()?
                .into_optimal("centralized baseline")
                .map_err(|e| e.at_stage("baseline"))?
                .objective,
        )
    } else {
        None
    };

    let t3 = Instant::now();
    let mut samples = Vec::new();
    if opts.samples > 0 {
        for network in &case.regions {
            let bundle = &bundles[&network.region_id];
            let regions: Vec<SecurityRegion> =
                bundle.periods.iter().map(|p| p.region.clone()).collect();
            let report = sample_and_check(
                network,
                &mats[&network.region_id],
                &regions,
                opts.samples,
                opts.seed,
                opts.region.mode,
            )
            .map_err(|e| e.at_stage("sampling"))?;
            samples.push(report);
        }
    }
    timings.sampling_ms = t3.elapsed().as_secs_f64() * 1e3;

    let report = PipelineReport {
        objective: coordination.objective,
        islanded_objective,
        op1_objective,
        coordination,
        recovered,
        samples,
        timings,
    };
    Ok((report, bundles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::FEAS_TOL;

    fn bundles_for(case: &CaseFile, opts: &RegionOptions) -> BTreeMap<String, RegionBundle> {
        let mats = build_all_matrices(case).unwrap();
        case.regions
            .iter()
            .map(|n| {
                (
                    n.region_id.clone(),
                    build_region_bundle(n, &mats[&n.region_id], opts).unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn coupling_row_zero_angle_difference_means_zero_flow() {
        let mut lp = LpProblem::new();
        let flow = lp.add_var("f", -100.0, 100.0);
        let th_a = lp.add_var("a", -1.0, 1.0);
        let th_b = lp.add_var("b", -1.0, 1.0);
        let rec = TieLineRecord {
            from_region: "p".into(),
            from_bus: "x".into(),
            to_region: "q".into(),
            to_bus: "y".into(),
            reactance: 0.1,
            orientation: 1,
        };
        build_coupling_rows(&mut lp, &rec, 100.0, &[flow], &[th_a], &[th_b], "c");
        lp.fix_var(th_a, 0.3);
        lp.fix_var(th_b, 0.3);
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert!(sol.value(flow).abs() < 1e-9);
    }

    #[test]
    fn coupling_row_matches_reactance_division() {
        // x = 0.1 pu, angle difference 0.05 rad, base 100 -> 50 MW
        let mut lp = LpProblem::new();
        let flow = lp.add_var("f", -100.0, 100.0);
        let th_a = lp.add_var("a", -1.0, 1.0);
        let th_b = lp.add_var("b", -1.0, 1.0);
        let rec = TieLineRecord {
            from_region: "p".into(),
            from_bus: "x".into(),
            to_region: "q".into(),
            to_bus: "y".into(),
            reactance: 0.1,
            orientation: 1,
        };
        build_coupling_rows(&mut lp, &rec, 100.0, &[flow], &[th_a], &[th_b], "c");
        lp.fix_var(th_a, 0.05);
        lp.fix_var(th_b, 0.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value(flow) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn single_region_coordination_hits_region_infimum() {
        // no interconnection: the optimum is the region's lowest z vertex
        let case = cases::ieee9_aggregated_case();
        let opts = RegionOptions { volume_tol: 0.0, max_iters: 100, ..Default::default() };
        let bundles = bundles_for(&case, &opts);
        let sol = solve_coordination(&case, &bundles).unwrap();
        assert_eq!(sol.lp_solves, 1);
        let min_vertex_z = bundles["ieee9"].periods[0]
            .region
            .vertices
            .iter()
            .map(|v| v[2])
            .fold(f64::INFINITY, f64::min);
        assert!(
            (sol.objective - min_vertex_z).abs() < 1e-6,
            "objective {} vs min vertex z {min_vertex_z}",
            sol.objective
        );
    }

    #[test]
    fn convex_combination_identity_holds() {
        let case = cases::two_region_case();
        let opts = RegionOptions { volume_tol: 0.0, max_iters: 100, ..Default::default() };
        let bundles = bundles_for(&case, &opts);
        let sol = solve_coordination(&case, &bundles).unwrap();
        for rc in &sol.regions {
            let bundle = &bundles[&rc.region_id];
            for (t, pc) in rc.periods.iter().enumerate() {
                let region = &bundle.periods[t].region;
                let k = region.labels.len();
                // weights reproduce the coupling values exactly
                let mut z = 0.0;
                let mut pg = vec![0.0; k];
                let mut th = vec![0.0; pc.border_angle.len()];
                for (i, w) in pc.weights.iter().enumerate() {
                    z += w * region.vertices[i][k];
                    for j in 0..k {
                        pg[j] += w * region.vertices[i][j];
                    }
                    for p in 0..th.len() {
                        th[p] += w * region.witnesses[i].angle[p];
                    }
                }
                assert!((z - pc.z).abs() < 1e-9);
                for j in 0..k {
                    assert!((pg[j] - pc.group_flow[j]).abs() < 1e-9);
                }
                for p in 0..th.len() {
                    assert!((th[p] - pc.border_angle[p]).abs() < 1e-9);
                }
                // weights on the simplex
                let total: f64 = pc.weights.iter().sum();
                assert!((total - 1.0).abs() < 1e-9);
                assert!(pc.weights.iter().all(|&w| w >= -1e-12));
            }
        }
    }

    #[test]
    fn recovery_matches_vertex_witness() {
        // coupling fixed at a region vertex: recovery reproduces that
        // vertex's z within tolerance (lower-envelope vertices)
        let case = cases::ieee9_aggregated_case();
        let net = &case.regions[0];
        let mats = build_all_matrices(&case).unwrap();
        let m = &mats[&net.region_id];
        let opts = RegionOptions { volume_tol: 0.0, max_iters: 100, ..Default::default() };
        let bundle = build_region_bundle(net, m, &opts).unwrap();
        let region = &bundle.periods[0].region;
        // pick the vertex with the smallest z
        let (best, _) = region
            .vertices
            .iter()
            .enumerate()
            .min_by(|a, b| a.1[2].partial_cmp(&b.1[2]).unwrap())
            .unwrap();
        let w = &region.witnesses[best];
        let rec =
            recover_regional_dispatch(net, m, &[w.tie.clone()], &[w.angle.clone()]).unwrap();
        assert_eq!(rec.lp_solves, 1);
        assert!(
            (rec.z[0] - w.z).abs() < 1e-6,
            "recovered z {} vs vertex z {}",
            rec.z[0],
            w.z
        );
    }

    #[test]
    fn two_region_pipeline_sandwich() {
        let case = cases::two_region_case();
        let opts = PipelineOptions {
            region: RegionOptions { volume_tol: 0.0, max_iters: 100, ..Default::default() },
            samples: 50,
            seed: 3,
            include_op1: true,
        };
        let (report, _) = run_pipeline(&case, &opts).unwrap();
        let op1 = report.op1_objective.unwrap();
        assert!(
            report.islanded_objective >= report.objective - FEAS_TOL,
            "islanded {} < coordination {}",
            report.islanded_objective,
            report.objective
        );
        assert!(
            report.objective >= op1 - FEAS_TOL,
            "coordination {} < op1 {op1}",
            report.objective
        );
        // coordination must actually help on this surplus/deficit pair
        assert!(report.objective < report.islanded_objective - 1.0);
        // recovery totals stay within the coordinated budgets
        for (rc, rec) in report.coordination.regions.iter().zip(&report.recovered) {
            let budget: f64 = rc.periods.iter().map(|p| p.z).sum();
            assert!(rec.objective <= budget + 1e-6);
        }
        // sampling found nothing infeasible
        for s in &report.samples {
            assert_eq!(s.infeasible, 0);
        }
        // non-iterative contract
        assert_eq!(report.coordination.lp_solves, 1);
        assert!(report.recovered.iter().all(|r| r.lp_solves == 1));
    }

    #[test]
    fn unconverged_artifact_rejected() {
        let case = cases::ieee9_aggregated_case();
        let opts = RegionOptions { volume_tol: 0.0, max_iters: 100, ..Default::default() };
        let mut bundles = bundles_for(&case, &opts);
        bundles.get_mut("ieee9").unwrap().periods[0].region.converged = false;
        let err = solve_coordination(&case, &bundles).unwrap_err();
        assert!(err.to_string().contains("did not converge"), "{err}");
    }

    #[test]
    fn infeasible_demand_fails_at_envelope_stage() {
        let mut case = cases::ieee9_case(1);
        for d in &mut case.regions[0].demands {
            d.profile = vec![10_000.0];
        }
        let err = run_pipeline(&case, &PipelineOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("envelope"), "{msg}");
    }
}
