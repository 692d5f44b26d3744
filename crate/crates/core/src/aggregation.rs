//! Tie-line grouping, minimax linear fits, and the reduced operating set.
//!
//! Tie-lines at one border interface aggregate into a single equivalent
//! flow. Every PTDF row's tie term is then approximated, per group, by an
//! affine function of the group total with a certified worst-case error:
//! over the box of recovery bounds the slope is a weighted median of the
//! member coefficients (weights = box widths), the intercept centers the
//! residual, and the error bound is half the weighted absolute deviation.
//! Branch limits tightened by those bounds make the reduced set an inner
//! estimation: any point of it maps back to flows feasible for the
//! original constraints.

use serde::{Deserialize, Serialize};

use crate::envelope::DispatchEnvelope;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::lp::regional::{build_period_fragment, DispatchBounds, PeriodVars};
use crate::lp::{LpProblem, Relation, Sense, VarId};
use crate::model::matrices::NetworkMatrices;
use crate::model::RegionNetwork;
use crate::par::{map_indexed, Parallelism};

/// Partition of tie-line ports into border-interface groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationPlan {
    /// Sorted group labels; index = coordinate order of the aggregated
    /// flows.
    pub labels: Vec<String>,
    /// Port indices per group.
    pub members: Vec<Vec<usize>>,
    /// Orientation shared by a group's ports (validated homogeneous).
    pub group_sign: Vec<f64>,
    /// Group index of each port.
    pub group_of: Vec<usize>,
}

impl AggregationPlan {
    pub fn n_groups(&self) -> usize {
        self.labels.len()
    }

    /// 0/1 membership matrix, groups x ports.
    pub fn matrix(&self, n_ports: usize) -> Mat {
        let mut m = Mat::zeros(self.n_groups(), n_ports);
        for (j, ports) in self.members.iter().enumerate() {
            for &i in ports {
                m[(j, i)] = 1.0;
            }
        }
        m
    }

    /// Group totals of a port-flow vector.
    pub fn aggregate(&self, flows: &[f64]) -> Vec<f64> {
        self.members
            .iter()
            .map(|ports| ports.iter().map(|&i| flows[i]).sum())
            .collect()
    }
}

/// Build the membership structure from the ports' group labels.
pub fn build_aggregation_matrix(network: &RegionNetwork) -> Result<AggregationPlan> {
    if network.tie_lines.is_empty() {
        return Err(Error::EndpointMismatch(format!(
            "region `{}` has no tie-line ports to aggregate",
            network.region_id
        )));
    }
    let labels = network.group_labels();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];
    let mut group_of = vec![0usize; network.n_ties()];
    let mut group_sign = vec![0.0; labels.len()];
    for (i, port) in network.tie_lines.iter().enumerate() {
        let j = labels
            .iter()
            .position(|l| *l == port.group)
            .expect("label set built from ports");
        members[j].push(i);
        group_of[i] = j;
        group_sign[j] = port.orientation as f64;
    }
    if members.iter().any(|m| m.is_empty()) {
        return Err(Error::EndpointMismatch("empty tie-line group".into()));
    }
    Ok(AggregationPlan {
        labels,
        members,
        group_sign,
        group_of,
    })
}

/// Tightened per-tie recovery bounds for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Minimum and maximum of each tie flow subject to the per-period
/// operating set under the envelope (2 LPs per tie-line).
pub fn compute_tie_bounds(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    envelope: &DispatchEnvelope,
    t: usize,
    mode: Parallelism,
) -> Result<TieBounds> {
    let n_tie = network.n_ties();
    let mut base = LpProblem::new();
    let vars = build_period_fragment(
        &mut base,
        network,
        mats,
        t,
        DispatchBounds::Envelope(envelope),
        None,
        "tb",
    );
    let solved: Vec<Result<f64>> = map_indexed(mode, 2 * n_tie, |task| {
        let i = task / 2;
        let maximize = task % 2 == 1;
        let mut lp = base.clone();
        lp.set_objective(vars.tie[i], 1.0);
        lp.set_sense(if maximize { Sense::Max } else { Sense::Min });
        let sol = lp.solve()?.into_optimal(&format!(
            "tie bound {} for port {i} at t={t}",
            if maximize { "max" } else { "min" }
        ))?;
        Ok(sol.value(vars.tie[i]))
    });
    let mut lower = vec![0.0; n_tie];
    let mut upper = vec![0.0; n_tie];
    for (task, value) in solved.into_iter().enumerate() {
        let v = value.map_err(|e| match e {
            Error::Infeasible { .. } => Error::EmptyRegion {
                context: format!("region `{}` period {t}", network.region_id),
            },
            other => other,
        })?;
        if task % 2 == 0 {
            lower[task / 2] = v;
        } else {
            upper[task / 2] = v;
        }
    }
    for i in 0..n_tie {
        let port = &network.tie_lines[i];
        lower[i] = lower[i].max(port.flow_min);
        upper[i] = upper[i].min(port.flow_max);
        if lower[i] > upper[i] {
            let mid = 0.5 * (lower[i] + upper[i]);
            lower[i] = mid;
            upper[i] = mid;
        }
    }
    Ok(TieBounds { lower, upper })
}

/// Best uniform affine fit of `sum_s a_s x_s` by `a0 * sum_s x_s + b0`
/// over the box `lower <= x <= upper`, returned as `(a0, b0, eps)` with
/// `eps` the certified worst-case absolute error.
///
/// The box is shifted to zero lower bounds, the slope is the weighted
/// median of the coefficients with the box widths as weights (smallest
/// optimal index on ties), the intercept centers the residual, and the
/// shift is folded back into the intercept afterward.
pub fn minimax_fit(coefficients: &[f64], upper: &[f64], lower: &[f64]) -> (f64, f64, f64) {
    let n = coefficients.len();
    assert!(n > 0, "fit needs at least one member");
    assert_eq!(upper.len(), n);
    assert_eq!(lower.len(), n);

    let widths: Vec<f64> = upper
        .iter()
        .zip(lower)
        .map(|(&u, &l)| (u - l).max(0.0))
        .collect();

    // stable sort by coefficient, original index breaks ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        coefficients[i]
            .partial_cmp(&coefficients[j])
            .unwrap()
            .then(i.cmp(&j))
    });
    let a_sorted: Vec<f64> = order.iter().map(|&i| coefficients[i]).collect();
    let w_sorted: Vec<f64> = order.iter().map(|&i| widths[i]).collect();
    let total_w: f64 = w_sorted.iter().sum();

    let a0 = if total_w <= 0.0 {
        // degenerate box: any slope is exact; take the smallest coefficient
        a_sorted[0]
    } else {
        // weighted median: smallest c with lambda_c <= 0 <= lambda_{c+1},
        // lambda_j = sum_{s<j} w_s - sum_{s>=j} w_s (1-based)
        let mut prefix = 0.0;
        let mut pick = n - 1;
        for c in 0..n {
            let lambda_c = prefix - (total_w - prefix);
            let lambda_c1 = (prefix + w_sorted[c]) - (total_w - prefix - w_sorted[c]);
            if lambda_c <= 0.0 && lambda_c1 >= 0.0 {
                pick = c;
                break;
            }
            prefix += w_sorted[c];
        }
        a_sorted[pick]
    };

    let mut b0_shifted = 0.0;
    let mut eps = 0.0;
    for s in 0..n {
        b0_shifted += 0.5 * (a_sorted[s] - a0) * w_sorted[s];
        eps += 0.5 * (a_sorted[s] - a0).abs() * w_sorted[s];
    }
    // fold the zero-lower-bound shift back into the intercept
    let shift: f64 = (0..n).map(|s| (coefficients[s] - a0) * lower[s]).sum();
    (a0, b0_shifted + shift, eps)
}

/// Affine fit of one group's tie term on one PTDF row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub slope: f64,
    pub intercept: f64,
    pub error: f64,
}

/// Per-branch-row fits and assembled error bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxFit {
    /// `rows[l].len() == n_groups`; one fit per (branch row, group).
    pub rows: Vec<Vec<GroupFit>>,
}

impl MinMaxFit {
    pub fn row_error(&self, l: usize) -> f64 {
        self.rows[l].iter().map(|g| g.error).sum()
    }

    pub fn row_intercept(&self, l: usize) -> f64 {
        self.rows[l].iter().map(|g| g.intercept).sum()
    }
}

/// Fit every branch row's tie term per group on the tightened boxes.
pub fn build_approx_model(
    mats: &NetworkMatrices,
    plan: &AggregationPlan,
    bounds: &TieBounds,
) -> MinMaxFit {
    let n_branch = mats.ptdf.rows;
    let rows = (0..n_branch)
        .map(|l| {
            plan.members
                .iter()
                .map(|ports| {
                    let coeffs: Vec<f64> =
                        ports.iter().map(|&i| mats.flow_coeff_tie(l, i)).collect();
                    let upper: Vec<f64> = ports.iter().map(|&i| bounds.upper[i]).collect();
                    let lower: Vec<f64> = ports.iter().map(|&i| bounds.lower[i]).collect();
                    let (slope, intercept, error) = minimax_fit(&coeffs, &upper, &lower);
                    GroupFit { slope, intercept, error }
                })
                .collect()
        })
        .collect();
    MinMaxFit { rows }
}

/// Column handles of one reduced region-period fragment: the plain
/// operating variables plus per-group aggregated flows.
#[derive(Debug, Clone)]
pub struct ReducedPeriodVars {
    pub period: PeriodVars,
    pub group_flow: Vec<VarId>,
}

/// Emit the reduced per-period operating set: aggregation rows, group-sum
/// balance, fitted branch rows tightened by the error bounds, recovery
/// boxes on the original tie flows, and the untouched angle / dispatch /
/// curtailment / epigraph structure.
#[allow(clippy::too_many_arguments)]
pub fn build_reduced_region(
    lp: &mut LpProblem,
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    envelope: &DispatchEnvelope,
    plan: &AggregationPlan,
    fit: &MinMaxFit,
    bounds: &TieBounds,
    t: usize,
    prefix: &str,
    shared_ties: Option<&[VarId]>,
) -> Result<ReducedPeriodVars> {
    let n_gen = network.generators.len();
    let n_ren = network.renewables.len();
    let n_tie = network.n_ties();
    let k = plan.n_groups();

    // the error bound must leave a nonempty flow window on every row
    for (l, br) in network.branches.iter().enumerate() {
        let eps = fit.row_error(l);
        if br.flow_max - eps < br.flow_min + eps {
            return Err(Error::AggregationTooCoarse { row: l, eps });
        }
    }

    let gen: Vec<VarId> = network
        .generators
        .iter()
        .enumerate()
        .map(|(g, _)| {
            lp.add_var(
                format!("{prefix}.g{g}"),
                envelope.level_min[t][g],
                envelope.level_max[t][g],
            )
        })
        .collect();
    let curtail: Vec<VarId> = network
        .renewables
        .iter()
        .enumerate()
        .map(|(r, site)| lp.add_var(format!("{prefix}.c{r}"), 0.0, site.profile[t]))
        .collect();
    // recovery boxes replace the plain port boxes
    let tie: Vec<VarId> = match shared_ties {
        Some(vars) => {
            assert_eq!(vars.len(), n_tie);
            for i in 0..n_tie {
                let v = vars[i];
                let lo = lp.vars[v.0].lower.max(bounds.lower[i]);
                let hi = lp.vars[v.0].upper.min(bounds.upper[i]);
                lp.set_bounds(v, lo, hi);
            }
            vars.to_vec()
        }
        None => (0..n_tie)
            .map(|i| lp.add_var(format!("{prefix}.tie{i}"), bounds.lower[i], bounds.upper[i]))
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
    let group_flow: Vec<VarId> = plan
        .members
        .iter()
        .enumerate()
        .map(|(j, ports)| {
            let lo: f64 = ports.iter().map(|&i| bounds.lower[i]).sum();
            let hi: f64 = ports.iter().map(|&i| bounds.upper[i]).sum();
            lp.add_var(format!("{prefix}.agg{j}"), lo, hi)
        })
        .collect();

    // aggregation rows: group flow = sum of member flows
    for (j, ports) in plan.members.iter().enumerate() {
        let mut terms: Vec<(VarId, f64)> = vec![(group_flow[j], 1.0)];
        for &i in ports {
            terms.push((tie[i], -1.0));
        }
        lp.add_row(format!("{prefix}.map{j}"), terms, Relation::Eq, 0.0);
    }

    // balance over group totals (one orientation per group)
    let mut balance: Vec<(VarId, f64)> = Vec::with_capacity(n_gen + k + n_ren);
    for &v in &gen {
        balance.push((v, 1.0));
    }
    for j in 0..k {
        balance.push((group_flow[j], plan.group_sign[j]));
    }
    for &v in &curtail {
        balance.push((v, -1.0));
    }
    let rhs = network.total_demand(t) - network.total_renewable(t);
    lp.add_row(format!("{prefix}.bal"), balance, Relation::Eq, rhs);

    // border angles keep the exact map over the original flows
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

    // fitted branch rows, tightened by the certified error bound
    for (l, br) in network.branches.iter().enumerate() {
        let mut terms: Vec<(VarId, f64)> = Vec::with_capacity(n_gen + k + n_ren);
        for g in 0..n_gen {
            terms.push((gen[g], mats.flow_coeff_gen(l, g)));
        }
        for j in 0..k {
            terms.push((group_flow[j], fit.rows[l][j].slope));
        }
        for r in 0..n_ren {
            terms.push((curtail[r], -mats.flow_coeff_ren(l, r)));
        }
        let constant = mats.branch_flow_constant(network, l, t) + fit.row_intercept(l);
        let eps = fit.row_error(l);
        lp.add_row(
            format!("{prefix}.fu{l}"),
            terms.clone(),
            Relation::Le,
            br.flow_max - eps - constant,
        );
        lp.add_row(
            format!("{prefix}.fl{l}"),
            terms,
            Relation::Ge,
            br.flow_min + eps - constant,
        );
    }

    // curtailment epigraph
    let mut epi: Vec<(VarId, f64)> = curtail.iter().map(|&v| (v, 1.0)).collect();
    epi.push((z, -1.0));
    lp.add_row(format!("{prefix}.epi"), epi, Relation::Le, 0.0);

    Ok(ReducedPeriodVars {
        period: PeriodVars { gen, curtail, tie, angle, z },
        group_flow,
    })
}
