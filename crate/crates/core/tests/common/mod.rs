#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lagrange_swarm::dynamics::TwoLinkArmParams;
use lagrange_swarm::graph::{DirectedGraph, Edge};
use lagrange_swarm::scenario::{Scenario, ScenarioConfig};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn load_config(name: &str) -> ScenarioConfig {
    let (cfg, _) = ScenarioConfig::load(&scenario_dir().join(name)).expect("bundled scenario parses");
    cfg
}

pub fn build(cfg: &ScenarioConfig) -> Scenario {
    cfg.build(&scenario_dir()).expect("bundled scenario builds")
}

/// The five arms used throughout the bundled scenarios.
pub fn table_agents() -> Vec<TwoLinkArmParams> {
    let rows: [[f64; 8]; 5] = [
        [0.5, 0.4, 0.4, 0.3, 0.2, 0.15, 0.1, 0.05],
        [0.2, 0.4, 0.6, 0.1, 0.35, 0.08, 0.15, 0.08],
        [0.5, 0.4, 0.4, 0.3, 0.2, 0.15, 0.1, 0.05],
        [1.0, 0.6, 0.45, 0.8, 0.2, 0.4, 0.15, 0.5],
        [0.25, 0.4, 0.8, 0.5, 0.3, 0.1, 0.45, 0.15],
    ];
    rows.iter()
        .map(|r| TwoLinkArmParams {
            m1: r[0],
            m2: r[1],
            l1: r[2],
            l2: r[3],
            lc1: r[4],
            lc2: r[5],
            i1: r[6],
            i2: r[7],
            gravity_accel: 9.81,
        })
        .collect()
}

/// Random weighted digraph on `n` followers that contains a spanning tree
/// rooted at the leader, plus some extra follower edges.
pub fn random_rooted_graph(n: usize, rng: &mut impl Rng) -> DirectedGraph {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut placed = vec![0usize];
    let mut edges = Vec::new();
    for &node in &order {
        let parent = placed[rng.gen_range(0..placed.len())];
        edges.push(Edge {
            src: parent,
            dst: node,
            weight: rng.gen_range(0.1..10.0),
        });
        placed.push(node);
    }
    let extra = rng.gen_range(0..=n * n / 2 + 1);
    for _ in 0..extra {
        let src = rng.gen_range(0..=n);
        let dst = rng.gen_range(1..=n);
        if src != dst && !edges.iter().any(|e| e.src == src && e.dst == dst) {
            edges.push(Edge {
                src,
                dst,
                weight: rng.gen_range(0.1..10.0),
            });
        }
    }
    DirectedGraph::from_edges(n, &edges).unwrap()
}
