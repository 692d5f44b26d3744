//! Constant matrices of the DC model: PTDF, border-angle map, incidences.
//!
//! Topology is fixed across periods, so one build per region serves every
//! period. Angles are relative to the region's reference bus; the reduced
//! susceptance matrix (reference row/column removed) is inverted once and
//! reused for both the PTDF assembly and the border-angle rows.
//!
//! Sign conventions: an injection vector is MW into a bus; demand
//! incidence carries -1 and a tie-line port contributes `orientation` at
//! its border bus, so a directed tie flow enters one region and leaves the
//! other through the same shared variable.

use super::RegionNetwork;
use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Debug, Clone)]
pub struct NetworkMatrices {
    pub n_buses: usize,
    pub reference: usize,
    pub base_mva: f64,
    /// Branch x bus sensitivity of MW flow to bus injection, reference
    /// grounded.
    pub ptdf: Mat,
    /// Border-port x bus map from injections to border angles (radians).
    pub angle_map: Mat,
    /// Zero-padded reduced inverse: bus angles = x_red . injections.
    pub x_red: Mat,
    /// Device -> bus index vectors.
    pub gen_bus: Vec<usize>,
    pub ren_bus: Vec<usize>,
    pub dem_bus: Vec<usize>,
    pub port_bus: Vec<usize>,
    /// Signed tie injection: +1 imports at the border bus, -1 exports.
    pub port_sign: Vec<f64>,
    /// Branch endpoints as bus indices.
    pub branch_ends: Vec<(usize, usize)>,
}

impl NetworkMatrices {
    /// Assemble everything for one region. Errors when the reduced
    /// susceptance matrix is singular (disconnected network).
    pub fn build(network: &RegionNetwork, base_mva: f64) -> Result<NetworkMatrices> {
        let x_red = reduced_inverse(network, base_mva)?;
        let ptdf = build_ptdf_from_inverse(network, base_mva, &x_red);
        let angle_map = build_angle_map_from_inverse(network, &x_red);
        let index = network.bus_index();
        Ok(NetworkMatrices {
            n_buses: network.n_buses(),
            reference: index[network.reference_bus.as_str()],
            base_mva,
            ptdf,
            angle_map,
            x_red,
            gen_bus: network.generators.iter().map(|g| index[g.bus.as_str()]).collect(),
            ren_bus: network.renewables.iter().map(|r| index[r.bus.as_str()]).collect(),
            dem_bus: network.demands.iter().map(|d| index[d.bus.as_str()]).collect(),
            port_bus: network
                .tie_lines
                .iter()
                .map(|p| index[p.border_bus.as_str()])
                .collect(),
            port_sign: network.tie_lines.iter().map(|p| p.orientation as f64).collect(),
            branch_ends: network
                .branches
                .iter()
                .map(|b| (index[b.from.as_str()], index[b.to.as_str()]))
                .collect(),
        })
    }

    /// PTDF column block for generators: branch flow per MW of generation.
    pub fn flow_coeff_gen(&self, branch: usize, gen: usize) -> f64 {
        self.ptdf[(branch, self.gen_bus[gen])]
    }

    /// PTDF column block for tie ports, orientation folded in.
    pub fn flow_coeff_tie(&self, branch: usize, port: usize) -> f64 {
        self.port_sign[port] * self.ptdf[(branch, self.port_bus[port])]
    }

    pub fn flow_coeff_ren(&self, branch: usize, site: usize) -> f64 {
        self.ptdf[(branch, self.ren_bus[site])]
    }

    pub fn flow_coeff_dem(&self, branch: usize, site: usize) -> f64 {
        -self.ptdf[(branch, self.dem_bus[site])]
    }

    pub fn angle_coeff_gen(&self, port: usize, gen: usize) -> f64 {
        self.angle_map[(port, self.gen_bus[gen])]
    }

    pub fn angle_coeff_tie(&self, port: usize, other: usize) -> f64 {
        self.port_sign[other] * self.angle_map[(port, self.port_bus[other])]
    }

    pub fn angle_coeff_ren(&self, port: usize, site: usize) -> f64 {
        self.angle_map[(port, self.ren_bus[site])]
    }

    pub fn angle_coeff_dem(&self, port: usize, site: usize) -> f64 {
        -self.angle_map[(port, self.dem_bus[site])]
    }

    /// Constant of a branch row at period `t`: the flow produced by the
    /// fixed renewable availability and demand profiles alone.
    pub fn branch_flow_constant(&self, network: &RegionNetwork, branch: usize, t: usize) -> f64 {
        let mut c = 0.0;
        for (s, site) in network.renewables.iter().enumerate() {
            c += self.flow_coeff_ren(branch, s) * site.profile[t];
        }
        for (s, site) in network.demands.iter().enumerate() {
            c += self.flow_coeff_dem(branch, s) * site.profile[t];
        }
        c
    }

    /// Constant of a border-angle row at period `t`.
    pub fn angle_constant(&self, network: &RegionNetwork, port: usize, t: usize) -> f64 {
        let mut c = 0.0;
        for (s, site) in network.renewables.iter().enumerate() {
            c += self.angle_coeff_ren(port, s) * site.profile[t];
        }
        for (s, site) in network.demands.iter().enumerate() {
            c += self.angle_coeff_dem(port, s) * site.profile[t];
        }
        c
    }

    /// Direct DC solve: bus angles for a given injection vector (MW).
    /// Any imbalance is absorbed at the reference bus.
    pub fn solve_angles(&self, injections: &[f64]) -> Vec<f64> {
        self.x_red.mul_vec(injections)
    }

    /// Branch MW flows for a given injection vector via direct solve.
    pub fn solve_flows(&self, network: &RegionNetwork, injections: &[f64]) -> Vec<f64> {
        let theta = self.solve_angles(injections);
        network
            .branches
            .iter()
            .zip(&self.branch_ends)
            .map(|(br, &(f, t))| self.base_mva * br.susceptance * (theta[f] - theta[t]))
            .collect()
    }
}

/// Zero-padded inverse of the reduced susceptance matrix (MW/rad units):
/// `angles = x_red . injections`, reference row and column zero.
fn reduced_inverse(network: &RegionNetwork, base_mva: f64) -> Result<Mat> {
    let n = network.n_buses();
    let index = network.bus_index();
    let reference = *index
        .get(network.reference_bus.as_str())
        .ok_or_else(|| Error::DisconnectedNetwork {
            region: network.region_id.clone(),
        })?;

    // susceptance Laplacian in MW per radian
    let mut lap = Mat::zeros(n, n);
    for br in &network.branches {
        let (f, t) = (index[br.from.as_str()], index[br.to.as_str()]);
        let b = base_mva * br.susceptance;
        lap[(f, f)] += b;
        lap[(t, t)] += b;
        lap[(f, t)] -= b;
        lap[(t, f)] -= b;
    }

    // remove reference row/column, invert, re-embed
    let keep: Vec<usize> = (0..n).filter(|&i| i != reference).collect();
    let mut red = Mat::zeros(n - 1, n - 1);
    for (i, &bi) in keep.iter().enumerate() {
        for (j, &bj) in keep.iter().enumerate() {
            red[(i, j)] = lap[(bi, bj)];
        }
    }
    let inv = red.inverse().ok_or_else(|| Error::DisconnectedNetwork {
        region: network.region_id.clone(),
    })?;
    let mut x = Mat::zeros(n, n);
    for (i, &bi) in keep.iter().enumerate() {
        for (j, &bj) in keep.iter().enumerate() {
            x[(bi, bj)] = inv[(i, j)];
        }
    }
    Ok(x)
}

/// PTDF with the reference bus grounded: sensitivity of each branch's MW
/// flow to a 1 MW injection at each bus (withdrawn at the reference).
pub fn build_ptdf(network: &RegionNetwork, base_mva: f64) -> Result<Mat> {
    let x = reduced_inverse(network, base_mva)?;
    Ok(build_ptdf_from_inverse(network, base_mva, &x))
}

fn build_ptdf_from_inverse(network: &RegionNetwork, base_mva: f64, x: &Mat) -> Mat {
    let index = network.bus_index();
    let n = network.n_buses();
    let mut s = Mat::zeros(network.branches.len(), n);
    for (l, br) in network.branches.iter().enumerate() {
        let (f, t) = (index[br.from.as_str()], index[br.to.as_str()]);
        let b = base_mva * br.susceptance;
        for j in 0..n {
            s[(l, j)] = b * (x[(f, j)] - x[(t, j)]);
        }
    }
    s
}

/// Border-angle map: rows of the reduced inverse restricted to the border
/// buses, in tie-port order. A border bus that doubles as the reference
/// gets an all-zero row (its angle is pinned).
pub fn build_border_angle_map(network: &RegionNetwork, base_mva: f64) -> Result<Mat> {
    let x = reduced_inverse(network, base_mva)?;
    Ok(build_angle_map_from_inverse(network, &x))
}

fn build_angle_map_from_inverse(network: &RegionNetwork, x: &Mat) -> Mat {
    let index = network.bus_index();
    let n = network.n_buses();
    let mut map = Mat::zeros(network.tie_lines.len(), n);
    for (p, port) in network.tie_lines.iter().enumerate() {
        let b = index[port.border_bus.as_str()];
        for j in 0..n {
            map[(p, j)] = x[(b, j)];
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Branch, Bus, RegionNetwork, TieLinePort};
    use crate::rng::SeededRng;

    fn two_bus(b: f64) -> RegionNetwork {
        RegionNetwork {
            region_id: "two".into(),
            n_t: 1,
            buses: vec![
                Bus { id: "b1".into(), is_border: true },
                Bus { id: "b2".into(), is_border: false },
            ],
            branches: vec![Branch {
                from: "b1".into(),
                to: "b2".into(),
                susceptance: b,
                flow_min: -100.0,
                flow_max: 100.0,
            }],
            generators: vec![],
            renewables: vec![],
            demands: vec![],
            tie_lines: vec![TieLinePort {
                border_bus: "b1".into(),
                group: "g".into(),
                flow_min: -10.0,
                flow_max: 10.0,
                orientation: 1,
            }],
            reference_bus: "b2".into(),
        }
    }

    fn triangle() -> RegionNetwork {
        let branch = |from: &str, to: &str| Branch {
            from: from.into(),
            to: to.into(),
            susceptance: 5.0,
            flow_min: -100.0,
            flow_max: 100.0,
        };
        RegionNetwork {
            region_id: "tri".into(),
            n_t: 1,
            buses: vec![
                Bus { id: "b1".into(), is_border: false },
                Bus { id: "b2".into(), is_border: false },
                Bus { id: "b3".into(), is_border: false },
            ],
            branches: vec![branch("b1", "b2"), branch("b2", "b3"), branch("b1", "b3")],
            generators: vec![],
            renewables: vec![],
            demands: vec![],
            tie_lines: vec![],
            reference_bus: "b3".into(),
        }
    }

    #[test]
    fn single_path_carries_all_flow() {
        // two buses, one line: injection at bus 1 withdrawn at reference
        let net = two_bus(8.0);
        let ptdf = build_ptdf(&net, 1.0).unwrap();
        assert!((ptdf[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_column_is_zero() {
        let net = two_bus(8.0);
        let ptdf = build_ptdf(&net, 1.0).unwrap();
        assert_eq!(ptdf[(0, 1)], 0.0);
    }

    #[test]
    fn triangle_splits_two_thirds_one_third() {
        // equal susceptance triangle: inject at 1, withdraw at 3 (= ref)
        let net = triangle();
        let mats = NetworkMatrices::build(&net, 1.0).unwrap();
        let inj = vec![1.0, 0.0, -1.0];
        let flows = mats.solve_flows(&net, &inj);
        // direct line b1-b3 carries 2/3, detour b1-b2-b3 carries 1/3
        assert!((flows[2] - 2.0 / 3.0).abs() < 1e-9, "{flows:?}");
        assert!((flows[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((flows[1] - 1.0 / 3.0).abs() < 1e-9);
        // PTDF route agrees with the direct solve
        for l in 0..net.branches.len() {
            let via_ptdf: f64 = (0..3).map(|j| mats.ptdf[(l, j)] * inj[j]).sum();
            assert!((via_ptdf - flows[l]).abs() < 1e-9);
        }
    }

    #[test]
    fn two_bus_angle_is_p_over_b() {
        // inject p at the non-reference border bus: angle = p / b
        let net = two_bus(4.0);
        let map = build_border_angle_map(&net, 1.0).unwrap();
        let p = 3.0;
        let theta = map[(0, 0)] * p;
        assert!((theta - p / 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_injection_zero_angles() {
        let net = triangle();
        let mats = NetworkMatrices::build(&net, 1.0).unwrap();
        let theta = mats.solve_angles(&[0.0, 0.0, 0.0]);
        assert!(theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn disconnected_network_is_singular() {
        let mut net = triangle();
        net.branches.clear();
        assert!(matches!(
            build_ptdf(&net, 1.0),
            Err(Error::DisconnectedNetwork { .. })
        ));
    }

    #[test]
    fn angle_map_matches_direct_solve_on_random_networks() {
        // random connected graphs, random injections: border-angle rows
        // reproduce a full independent DC solve
        let mut rng = SeededRng::new(11);
        for case in 0..20 {
            let n = 4 + case % 4;
            let mut net = RegionNetwork {
                region_id: format!("r{case}"),
                n_t: 1,
                buses: (0..n)
                    .map(|i| Bus { id: format!("b{i}"), is_border: i < 2 })
                    .collect(),
                branches: Vec::new(),
                generators: vec![],
                renewables: vec![],
                demands: vec![],
                tie_lines: (0..2)
                    .map(|i| TieLinePort {
                        border_bus: format!("b{i}"),
                        group: format!("g{i}"),
                        flow_min: -10.0,
                        flow_max: 10.0,
                        orientation: 1,
                    })
                    .collect(),
                reference_bus: format!("b{}", n - 1),
            };
            // spanning tree plus a few chords
            for i in 1..n {
                let parent = rng.usize_below(i);
                net.branches.push(Branch {
                    from: format!("b{parent}"),
                    to: format!("b{i}"),
                    susceptance: rng.range(2.0, 20.0),
                    flow_min: -100.0,
                    flow_max: 100.0,
                });
            }
            for _ in 0..2 {
                let a = rng.usize_below(n);
                let b = rng.usize_below(n);
                if a != b {
                    net.branches.push(Branch {
                        from: format!("b{a}"),
                        to: format!("b{b}"),
                        susceptance: rng.range(2.0, 20.0),
                        flow_min: -100.0,
                        flow_max: 100.0,
                    });
                }
            }
            let mats = NetworkMatrices::build(&net, 100.0).unwrap();

            // independent oracle: nalgebra solve of the reduced system
            let index = net.bus_index();
            let refb = index[net.reference_bus.as_str()];
            let mut inj: Vec<f64> = (0..n).map(|_| rng.range(-50.0, 50.0)).collect();
            let total: f64 = inj.iter().sum();
            inj[refb] -= total; // balanced set

            let keep: Vec<usize> = (0..n).filter(|&i| i != refb).collect();
            let mut lap = nalgebra::DMatrix::<f64>::zeros(n - 1, n - 1);
            for br in &net.branches {
                let (f, t) = (index[br.from.as_str()], index[br.to.as_str()]);
                let b = 100.0 * br.susceptance;
                for (ri, &bi) in keep.iter().enumerate() {
                    for (rj, &bj) in keep.iter().enumerate() {
                        let mut v = 0.0;
                        if bi == f && bj == f {
                            v += b;
                        }
                        if bi == t && bj == t {
                            v += b;
                        }
                        if (bi == f && bj == t) || (bi == t && bj == f) {
                            v -= b;
                        }
                        lap[(ri, rj)] += v;
                    }
                }
            }
            let rhs = nalgebra::DVector::from_iterator(n - 1, keep.iter().map(|&i| inj[i]));
            let sol = lap.lu().solve(&rhs).expect("connected");
            let mut theta = vec![0.0; n];
            for (ri, &bi) in keep.iter().enumerate() {
                theta[bi] = sol[ri];
            }

            for (p, port) in net.tie_lines.iter().enumerate() {
                let b = index[port.border_bus.as_str()];
                let via_map: f64 = (0..n).map(|j| mats.angle_map[(p, j)] * inj[j]).sum();
                assert!(
                    (via_map - theta[b]).abs() < 1e-9,
                    "case {case}: port {p} {} vs {}",
                    via_map,
                    theta[b]
                );
            }

            // PTDF consistency across a random cut: the net flow over cut
            // branches equals the net injection crossing it
            let side: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.5).collect();
            if side.iter().any(|&s| s) && side.iter().any(|&s| !s) {
                let flows = mats.solve_flows(&net, &inj);
                let mut cut_flow = 0.0;
                for (l, br) in net.branches.iter().enumerate() {
                    let (f, t) = (index[br.from.as_str()], index[br.to.as_str()]);
                    if side[f] && !side[t] {
                        cut_flow += flows[l];
                    } else if !side[f] && side[t] {
                        cut_flow -= flows[l];
                    }
                }
                let side_injection: f64 = (0..n).filter(|&i| side[i]).map(|i| inj[i]).sum();
                assert!(
                    (cut_flow - side_injection).abs() < 1e-8,
                    "case {case}: cut flow {cut_flow} vs injection {side_injection}"
                );
            }
        }
    }

    #[test]
    fn angle_map_linearity() {
        let net = triangle();
        let mats = NetworkMatrices::build(&net, 1.0).unwrap();
        let u = vec![1.0, -2.0, 1.0];
        let v = vec![0.5, 0.25, -0.75];
        let (a, b) = (2.5, -1.25);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = mats.solve_angles(&combo);
        let tu = mats.solve_angles(&u);
        let tv = mats.solve_angles(&v);
        for i in 0..3 {
            assert!((lhs[i] - (a * tu[i] + b * tv[i])).abs() < 1e-12);
        }
    }
}
