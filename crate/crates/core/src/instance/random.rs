//! Small random instances for tests and experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_scenarios, Demand, Edge, Module, NetworkInstance};

/// Size limits for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomParams {
    pub max_nodes: usize,
    pub max_edges: usize,
    pub max_demands: usize,
    pub max_modules: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_nodes: 6,
            max_edges: 9,
            max_demands: 4,
            max_modules: 2,
        }
    }
}

/// A connected random instance with integer data and its filtered N-1
/// scenarios. Every edge has at least one module.
pub fn random_instance(params: &RandomParams, seed: u64) -> NetworkInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=params.max_nodes.max(3));
    let max_pairs = n * (n - 1) / 2;
    let most = params.max_edges.clamp(n - 1, max_pairs);
    // at least one cycle when the limits allow it, so some failures survive
    let m = rng.gen_range(n.min(most)..=most);
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();

    // random spanning tree, then extra distinct pairs
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut pairs: Vec<(usize, usize)> = (1..n)
        .map(|i| (order[rng.gen_range(0..i)], order[i]))
        .collect();
    let mut rest: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| !pairs.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)))
        .collect();
    rest.shuffle(&mut rng);
    pairs.extend(rest.into_iter().take(m - pairs.len()));

    let edges = pairs
        .iter()
        .enumerate()
        .map(|(k, &(u, v))| {
            let count = rng.gen_range(1..=params.max_modules.max(1));
            let modules = (0..count)
                .map(|_| Module {
                    capacity: f64::from(rng.gen_range(2..=10)),
                    cost: f64::from(rng.gen_range(1..=10)),
                })
                .collect();
            Edge {
                id: format!("e{k}"),
                u,
                v,
                preinstalled: if rng.gen_bool(0.3) { f64::from(rng.gen_range(1..=4)) } else { 0.0 },
                modules,
            }
        })
        .collect();
    let demands = (0..rng.gen_range(1..=params.max_demands.max(1)))
        .map(|_| {
            let s = rng.gen_range(0..n);
            let t = (s + rng.gen_range(1..n)) % n;
            Demand {
                source: s,
                target: t,
                value: f64::from(rng.gen_range(1..=8)),
            }
        })
        .collect();
    let mut inst = NetworkInstance {
        name: format!("random_{seed}"),
        nodes,
        edges,
        demands,
        scenarios: Vec::new(),
    };
    build_scenarios(&mut inst);
    inst
}
