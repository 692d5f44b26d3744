//! Per-period dispatch levels that make ramp constraints redundant.
//!
//! The envelope LP maximizes the total width of per-generator dispatch
//! windows subject to (a) one feasible operating point per period inside
//! the window and (b) cross-period window compatibility with the ramp
//! rates: any point of period t's window is reachable from any point of
//! period t-1's window. Within such windows the multi-period operating set
//! factors into a Cartesian product of per-period sets, which is what lets
//! each period's coupling region be computed independently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::regional::{build_period_fragment, DispatchBounds};
use crate::lp::{LpProblem, LpStatus, Relation, Sense, VarId};
use crate::model::matrices::NetworkMatrices;
use crate::model::RegionNetwork;
use crate::par::{map_indexed, Parallelism};
use crate::rng::SeededRng;

/// Per-generator, per-period dispatch windows, indexed `[t][g]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchEnvelope {
    pub level_min: Vec<Vec<f64>>,
    pub level_max: Vec<Vec<f64>>,
}

impl DispatchEnvelope {
    pub fn n_periods(&self) -> usize {
        self.level_min.len()
    }

    /// Window-chain residuals: every entry must be nonnegative for a valid
    /// envelope (capacity containment, window ordering, ramp compatibility
    /// between consecutive periods).
    pub fn chain_residuals(&self, network: &RegionNetwork) -> Vec<f64> {
        let mut out = Vec::new();
        for (t, (mins, maxs)) in self.level_min.iter().zip(&self.level_max).enumerate() {
            for (g, unit) in network.generators.iter().enumerate() {
                out.push(mins[g] - unit.cap_min);
                out.push(unit.cap_max - maxs[g]);
                out.push(maxs[g] - mins[g]);
                if t >= 1 {
                    out.push(unit.ramp_up - (maxs[g] - self.level_min[t - 1][g]));
                    out.push(unit.ramp_down - (self.level_max[t - 1][g] - mins[g]));
                }
            }
        }
        out
    }

    /// Widened copy for negative-control experiments: each window grows by
    /// `factor` ramp rates on both sides, clamped to capacities. For any
    /// factor > 0 the result may break the ramp-compatibility chain.
    pub fn widened(&self, network: &RegionNetwork, factor: f64) -> DispatchEnvelope {
        let mut out = self.clone();
        for t in 0..out.n_periods() {
            for (g, unit) in network.generators.iter().enumerate() {
                out.level_min[t][g] = (out.level_min[t][g] - factor * unit.ramp_down).max(unit.cap_min);
                out.level_max[t][g] = (out.level_max[t][g] + factor * unit.ramp_up).min(unit.cap_max);
            }
        }
        out
    }
}

/// Solve the width-maximizing envelope LP. Errors when no envelope exists,
/// reporting which period blocks (or the cross-period coupling).
pub fn compute_envelope(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
) -> Result<DispatchEnvelope> {
    let n_t = network.n_t;
    let n_gen = network.generators.len();
    let mut lp = LpProblem::new();

    let level_min: Vec<Vec<VarId>> = (0..n_t)
        .map(|t| {
            network
                .generators
                .iter()
                .enumerate()
                .map(|(g, u)| lp.add_var(format!("lvlmin.t{t}.g{g}"), u.cap_min, u.cap_max))
                .collect()
        })
        .collect();
    let level_max: Vec<Vec<VarId>> = (0..n_t)
        .map(|t| {
            network
                .generators
                .iter()
                .enumerate()
                .map(|(g, u)| lp.add_var(format!("lvlmax.t{t}.g{g}"), u.cap_min, u.cap_max))
                .collect()
        })
        .collect();

    // window ordering and ramp compatibility across consecutive periods
    for t in 0..n_t {
        for g in 0..n_gen {
            lp.add_row(
                format!("ord.t{t}.g{g}"),
                [(level_min[t][g], 1.0), (level_max[t][g], -1.0)],
                Relation::Le,
                0.0,
            );
        }
    }
    for t in 1..n_t {
        for (g, unit) in network.generators.iter().enumerate() {
            lp.add_row(
                format!("chainup.t{t}.g{g}"),
                [(level_max[t][g], 1.0), (level_min[t - 1][g], -1.0)],
                Relation::Le,
                unit.ramp_up,
            );
            lp.add_row(
                format!("chaindn.t{t}.g{g}"),
                [(level_max[t - 1][g], 1.0), (level_min[t][g], -1.0)],
                Relation::Le,
                unit.ramp_down,
            );
        }
    }

    // one feasible operating point per period, inside the window
    let dispatch = DispatchBounds::EnvelopeVars {
        level_min: &level_min,
        level_max: &level_max,
    };
    for t in 0..n_t {
        let prefix = format!("env.{}.t{t}", network.region_id);
        build_period_fragment(&mut lp, network, mats, t, dispatch, None, &prefix);
    }

    for t in 0..n_t {
        for g in 0..n_gen {
            lp.add_objective(level_max[t][g], 1.0);
            lp.add_objective(level_min[t][g], -1.0);
        }
    }
    lp.set_sense(Sense::Max);

    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::EnvelopeInfeasible {
                context: diagnose_envelope_failure(network, mats),
            });
        }
        other => {
            return Err(Error::SolverFailure(format!(
                "envelope LP ended with {other:?}"
            )))
        }
    }

    let mut env = DispatchEnvelope {
        level_min: level_min
            .iter()
            .map(|row| row.iter().map(|&v| sol.value(v)).collect())
            .collect(),
        level_max: level_max
            .iter()
            .map(|row| row.iter().map(|&v| sol.value(v)).collect())
            .collect(),
    };
    // snap out LP-tolerance noise so downstream bounds stay ordered
    for t in 0..n_t {
        for g in 0..n_gen {
            if env.level_min[t][g] > env.level_max[t][g] {
                let mid = 0.5 * (env.level_min[t][g] + env.level_max[t][g]);
                env.level_min[t][g] = mid;
                env.level_max[t][g] = mid;
            }
        }
    }
    Ok(env)
}

/// Which period (or the coupling) makes the envelope LP infeasible.
fn diagnose_envelope_failure(network: &RegionNetwork, mats: &NetworkMatrices) -> String {
    for t in 0..network.n_t {
        let mut lp = LpProblem::new();
        build_period_fragment(
            &mut lp,
            network,
            mats,
            t,
            DispatchBounds::Capacity,
            None,
            "probe",
        );
        match lp.solve() {
            Ok(sol) if sol.status == LpStatus::Infeasible => {
                return format!(
                    "period {t} admits no feasible operating point even at full capacity bounds"
                );
            }
            _ => {}
        }
    }
    "every period is feasible in isolation; the ramp-compatibility rows block the envelope".into()
}

/// Sampling report for the time-period decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub samples: usize,
    pub ramp_violations: usize,
    pub max_violation_mw: f64,
    pub seed: u64,
}

/// Draw per-period operating points independently (each feasible for its
/// period's set under the envelope) and count ramp violations across every
/// consecutive pair. A valid envelope must produce zero.
///
/// Sample 0 stresses the windows deterministically (alternating full-up /
/// full-down dispatch objectives); the rest use seeded random objectives.
pub fn verify_decomposition(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    envelope: &DispatchEnvelope,
    samples: usize,
    seed: u64,
) -> Result<DecompositionReport> {
    verify_decomposition_mode(network, mats, envelope, samples, seed, Parallelism::default())
}

pub fn verify_decomposition_mode(
    network: &RegionNetwork,
    mats: &NetworkMatrices,
    envelope: &DispatchEnvelope,
    samples: usize,
    seed: u64,
    mode: Parallelism,
) -> Result<DecompositionReport> {
    let n_t = network.n_t;
    let trajectories: Vec<Result<Vec<Vec<f64>>>> = map_indexed(mode, samples, |s| {
        let mut rng = SeededRng::substream(seed, s as u64);
        let mut gens: Vec<Vec<f64>> = Vec::with_capacity(n_t);
        for t in 0..n_t {
            let mut lp = LpProblem::new();
            let vars = build_period_fragment(
                &mut lp,
                network,
                mats,
                t,
                DispatchBounds::Envelope(envelope),
                None,
                "sample",
            );
            if s == 0 {
                // adversarial swing: push all generators up on even
                // periods, down on odd ones
                let sign = if t % 2 == 0 { -1.0 } else { 1.0 };
                for &g in &vars.gen {
                    lp.set_objective(g, sign);
                }
            } else if s == 1 {
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                for &g in &vars.gen {
                    lp.set_objective(g, sign);
                }
            } else {
                for j in 0..lp.n_vars() {
                    lp.set_objective(VarId(j), rng.range(-1.0, 1.0));
                }
            }
            let sol = lp
                .solve()?
                .into_optimal(&format!("per-period sample t={t}"))?;
            gens.push(sol.values_of(&vars.gen));
        }
        Ok(gens)
    });

    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for traj in trajectories {
        let gens = traj?;
        for t in 1..n_t {
            for (g, unit) in network.generators.iter().enumerate() {
                let delta = gens[t][g] - gens[t - 1][g];
                let over = (delta - unit.ramp_up).max(-unit.ramp_down - delta);
                if over > crate::FEAS_TOL {
                    violations += 1;
                    worst = worst.max(over);
                }
            }
        }
    }
    Ok(DecompositionReport {
        samples,
        ramp_violations: violations,
        max_violation_mw: worst,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::lp::regional::build_all_matrices;

    #[test]
    fn generous_ramps_give_full_capacity_box() {
        let mut net = cases::ieee9(2);
        for g in &mut net.generators {
            g.ramp_up = g.cap_max - g.cap_min;
            g.ramp_down = g.cap_max - g.cap_min;
        }
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let env = compute_envelope(&net, &mats).unwrap();
        for t in 0..2 {
            for (g, unit) in net.generators.iter().enumerate() {
                assert!((env.level_min[t][g] - unit.cap_min).abs() < 1e-6);
                assert!((env.level_max[t][g] - unit.cap_max).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn two_period_toy_respects_ramp_chain() {
        // one generator, cap [0, 100], ramp 10, 2 periods
        let mut net = cases::ieee9(2);
        net.generators = vec![crate::model::Generator {
            bus: "b1".into(),
            cap_min: 0.0,
            cap_max: 100.0,
            ramp_up: 10.0,
            ramp_down: 10.0,
        }];
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let env = compute_envelope(&net, &mats).unwrap();
        assert!(env.level_max[1][0] - env.level_min[0][0] <= 10.0 + 1e-6);
        assert!(env.level_max[0][0] - env.level_min[1][0] <= 10.0 + 1e-6);
        assert!(env.chain_residuals(&net).iter().all(|&r| r >= -1e-6));
    }

    #[test]
    fn single_period_envelope_is_capacity_box() {
        let net = cases::ieee9(1);
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let env = compute_envelope(&net, &mats).unwrap();
        for (g, unit) in net.generators.iter().enumerate() {
            assert!((env.level_min[0][g] - unit.cap_min).abs() < 1e-6);
            assert!((env.level_max[0][g] - unit.cap_max).abs() < 1e-6);
        }
    }

    #[test]
    fn sampled_trajectories_have_no_ramp_violations() {
        let net = cases::ieee9(2);
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let env = compute_envelope(&net, &mats).unwrap();
        let report = verify_decomposition(&net, &mats, &env, 50, 7).unwrap();
        assert_eq!(report.ramp_violations, 0, "{report:?}");
    }

    #[test]
    fn widened_envelope_breaks_ramps() {
        // negative control: doubling the windows beyond the ramp chain
        // must produce violations under adversarial sampling
        let net = cases::ieee9(2);
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let env = compute_envelope(&net, &mats).unwrap();
        let widened = env.widened(&net, 2.0);
        let report = verify_decomposition(&net, &mats, &widened, 50, 7).unwrap();
        assert!(report.ramp_violations > 0, "{report:?}");
    }

    #[test]
    fn infeasible_region_reports_blocking_period() {
        let mut net = cases::ieee9(1);
        for d in &mut net.demands {
            d.profile = vec![10_000.0];
        }
        let mats = NetworkMatrices::build(&net, 100.0).unwrap();
        let err = compute_envelope(&net, &mats).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("period 0"), "{msg}");
    }

    #[test]
    fn envelope_from_case_helper_builds() {
        let case = cases::two_region_case();
        let mats = build_all_matrices(&case).unwrap();
        for region in &case.regions {
            let env = compute_envelope(region, &mats[&region.region_id]).unwrap();
            assert!(env.chain_residuals(region).iter().all(|&r| r >= -1e-6));
        }
    }
}
