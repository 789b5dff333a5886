//! Bundled example networks, so experiments and tests run without external
//! files.

use crate::channel::ChannelProcess;
use crate::config::NetworkConfig;
use crate::pairs::PairMatrix;

/// A named, ready-to-run network plus its default channel process.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub config: NetworkConfig,
    pub process: ChannelProcess,
}

/// Names accepted wherever a config file path is expected.
pub const SCENARIO_NAMES: [&str; 3] = ["paper-n4", "paper-n5-fixed", "paper-n5-varying"];

/// Looks up a bundled scenario by name.
pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "paper-n4" => Some(paper_n4()),
        "paper-n5-fixed" => Some(paper_n5_fixed()),
        "paper-n5-varying" => Some(paper_n5_varying()),
        _ => None,
    }
}

/// 4 nodes, capacity 2, direct rate matrix, constant channel. The worked
/// example: rates 100..600 with pairs (1,3) and (2,3) the most productive.
pub fn paper_n4() -> Scenario {
    let skr = PairMatrix::from_rows(&[
        vec![0.0, 100.0, 200.0, 300.0],
        vec![100.0, 0.0, 400.0, 500.0],
        vec![200.0, 400.0, 0.0, 600.0],
        vec![300.0, 500.0, 600.0, 0.0],
    ])
    .expect("static matrix is valid");
    let config = NetworkConfig::direct(4, 2, skr).expect("static config is valid");
    let process = ChannelProcess::fixed(config.base_state());
    Scenario {
        name: "paper-n4",
        description: "4-node direct-rate example, capacity 2, constant channel",
        config,
        process,
    }
}

fn n5_config() -> NetworkConfig {
    let distances = PairMatrix::from_rows(&[
        vec![0.0, 50.0, 80.0, 20.0, 100.0],
        vec![50.0, 0.0, 30.0, 60.0, 90.0],
        vec![80.0, 30.0, 0.0, 70.0, 40.0],
        vec![20.0, 60.0, 70.0, 0.0, 10.0],
        vec![100.0, 90.0, 40.0, 10.0, 0.0],
    ])
    .expect("static matrix is valid");
    let qber = PairMatrix::from_rows(&[
        vec![0.0, 0.02, 0.03, 0.005, 0.04],
        vec![0.02, 0.0, 0.015, 0.025, 0.035],
        vec![0.03, 0.015, 0.0, 0.03, 0.02],
        vec![0.005, 0.025, 0.03, 0.0, 0.005],
        vec![0.04, 0.035, 0.02, 0.005, 0.0],
    ])
    .expect("static matrix is valid");
    NetworkConfig::physics(5, 2, 0.2, 1e6, distances, qber).expect("static config is valid")
}

/// 5 nodes, capacity 2, physics-mode rates (0.2 dB/km fiber, 1 MHz source),
/// constant channel.
pub fn paper_n5_fixed() -> Scenario {
    let config = n5_config();
    let process = ChannelProcess::fixed(config.base_state());
    Scenario {
        name: "paper-n5-fixed",
        description: "5-node physics example, capacity 2, constant channel",
        config,
        process,
    }
}

/// Same 5-node network with the QBER random walk: every 100 steps each
/// pair's QBER shifts by a uniform draw from [-0.005, +0.005], clipped to
/// [0, 0.5].
pub fn paper_n5_varying() -> Scenario {
    let config = n5_config();
    let process = ChannelProcess::perturbation_walk(config.base_state(), 0.005, 100)
        .expect("static parameters are valid");
    Scenario {
        name: "paper-n5-varying",
        description: "5-node physics example, capacity 2, QBER perturbation walk",
        config,
        process,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_name() {
        for name in SCENARIO_NAMES {
            let sc = by_name(name).unwrap();
            assert_eq!(sc.name, name);
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn n4_matrix_matches_the_example() {
        let sc = paper_n4();
        let rates = crate::skr::skr_if_pumped(&sc.config, &sc.config.base_state());
        let expect = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0];
        for ((p, v), want) in rates.entries().zip(expect) {
            assert_eq!(v, want, "pair {p}");
        }
    }

    #[test]
    fn n5_tables_round_trip() {
        let sc = paper_n5_fixed();
        let d = sc.config.distances_km().unwrap();
        assert_eq!(d.get(3, 4), 10.0);
        assert_eq!(d.get(0, 4), 100.0);
        let q = sc.config.base_qber().unwrap();
        assert_eq!(q.get(0, 3), 0.005);
        assert_eq!(q.get(1, 4), 0.035);
    }

    #[test]
    fn varying_scenario_walks() {
        let mut sc = paper_n5_varying();
        let mut rng = crate::channel::RngState::new(1);
        let a = sc.process.sample(1, &mut rng);
        let b = sc.process.sample(100, &mut rng);
        assert_ne!(a, b);
    }
}
