//! Synthetic instances assembled from pieces of existing networks.

use std::collections::{HashMap, VecDeque};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_scenarios, Demand, Edge, NetworkInstance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationParams {
    /// Number of subgraphs to merge, 2 to 5.
    pub count_subgraphs: usize,
    /// Fraction of each source's nodes kept by the BFS, within [0.45, 0.65].
    pub proportion: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            count_subgraphs: 2,
            proportion: 0.5,
        }
    }
}

/// Highest-degree node; ties go to the smallest node id.
fn hub(inst: &NetworkInstance, members: impl Iterator<Item = usize>) -> Option<usize> {
    let deg = inst.degree();
    members.max_by(|&a, &b| {
        deg[a]
            .cmp(&deg[b])
            .then_with(|| inst.nodes[b].cmp(&inst.nodes[a]))
    })
}

/// BFS node set of size `ceil(p * |V|)` (or the whole component if smaller),
/// neighbors visited in ascending id order.
fn bfs_nodes(inst: &NetworkInstance, proportion: f64) -> Vec<usize> {
    let target = (proportion * inst.nodes.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    let Some(start) = hub(inst, 0..inst.nodes.len()) else {
        return Vec::new();
    };
    let mut adj = inst.adjacency(&[]);
    for list in &mut adj {
        list.sort_by(|a, b| inst.nodes[a.0].cmp(&inst.nodes[b.0]));
    }
    let mut seen = vec![false; inst.nodes.len()];
    let mut order = vec![start];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &adj[x] {
            if order.len() >= target {
                return order;
            }
            if !seen[y] {
                seen[y] = true;
                order.push(y);
                queue.push_back(y);
            }
        }
    }
    order
}

struct Piece {
    /// Node indices of the merged instance.
    nodes: Vec<usize>,
    /// Edge indices of the merged instance.
    edges: Vec<usize>,
}

/// Builds a merged instance from BFS subgraphs of randomly chosen sources.
///
/// Node and edge ids are prefixed with `g<k>_` for the k-th subgraph; the
/// connector between subgraphs `k` and `k+1` has id `c<k>` and joins their
/// highest-degree nodes.
pub fn generate_instance(
    sources: &[NetworkInstance],
    params: &GenerationParams,
    seed: u64,
) -> Result<NetworkInstance> {
    if !(2..=5).contains(&params.count_subgraphs) {
        return Err(Error::Generation(format!(
            "subgraph count {} outside 2..=5",
            params.count_subgraphs
        )));
    }
    if !(0.45..=0.65).contains(&params.proportion) {
        return Err(Error::Generation(format!(
            "proportion {} outside [0.45, 0.65]",
            params.proportion
        )));
    }
    if sources.is_empty() {
        return Err(Error::Generation("no source instances".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<usize> = if sources.len() >= params.count_subgraphs {
        let mut picked = sample(&mut rng, sources.len(), params.count_subgraphs).into_vec();
        picked.sort_unstable();
        picked
    } else {
        (0..params.count_subgraphs)
            .map(|_| rng.gen_range(0..sources.len()))
            .collect()
    };

    let mut merged = NetworkInstance {
        name: format!(
            "gen_k{}_p{}_s{seed}",
            params.count_subgraphs, params.proportion
        ),
        nodes: Vec::new(),
        edges: Vec::new(),
        demands: Vec::new(),
        scenarios: Vec::new(),
    };
    let mut pieces = Vec::new();
    for (k, &src_idx) in chosen.iter().enumerate() {
        let src = &sources[src_idx];
        let keep = bfs_nodes(src, params.proportion);
        if keep.is_empty() {
            return Err(Error::Generation(format!("empty subgraph from {}", src.name)));
        }
        let mut map = HashMap::new();
        let mut piece = Piece {
            nodes: Vec::new(),
            edges: Vec::new(),
        };
        let mut kept_sorted = keep.clone();
        kept_sorted.sort_unstable();
        for &v in &kept_sorted {
            map.insert(v, merged.nodes.len());
            piece.nodes.push(merged.nodes.len());
            merged.nodes.push(format!("g{k}_{}", src.nodes[v]));
        }
        for e in &src.edges {
            if let (Some(&u), Some(&v)) = (map.get(&e.u), map.get(&e.v)) {
                piece.edges.push(merged.edges.len());
                merged.edges.push(Edge {
                    id: format!("g{k}_{}", e.id),
                    u,
                    v,
                    preinstalled: e.preinstalled,
                    modules: e.modules.clone(),
                });
            }
        }
        for d in &src.demands {
            if let (Some(&s), Some(&t)) = (map.get(&d.source), map.get(&d.target)) {
                merged.demands.push(Demand {
                    source: s,
                    target: t,
                    value: d.value,
                });
            }
        }
        pieces.push(piece);
    }

    let hubs: Vec<usize> = pieces
        .iter()
        .map(|p| hub(&merged, p.nodes.iter().copied()).expect("non-empty piece"))
        .collect();
    for k in 0..pieces.len() - 1 {
        let (a, b) = (hubs[k], hubs[k + 1]);
        let donor = pieces[k]
            .edges
            .iter()
            .chain(&pieces[k + 1].edges)
            .map(|&e| &merged.edges[e])
            .filter(|e| (e.u == a || e.v == a || e.u == b || e.v == b) && !e.modules.is_empty())
            .fold(None::<&Edge>, |best, e| {
                let total = |e: &Edge| e.modules.iter().map(|m| m.capacity).sum::<f64>();
                match best {
                    Some(b) if total(b) >= total(e) => Some(b),
                    _ => Some(e),
                }
            })
            .or_else(|| {
                merged
                    .edges
                    .iter()
                    .filter(|e| !e.modules.is_empty())
                    .max_by(|x, y| {
                        let tx: f64 = x.modules.iter().map(|m| m.capacity).sum();
                        let ty: f64 = y.modules.iter().map(|m| m.capacity).sum();
                        tx.total_cmp(&ty)
                    })
            })
            .ok_or_else(|| Error::Generation("no edge with modules to copy for a connector".into()))?;
        let modules = donor.modules.clone();
        merged.edges.push(Edge {
            id: format!("c{k}"),
            u: a,
            v: b,
            preinstalled: 0.0,
            modules,
        });
    }

    if !merged.demands_connected(&[]) {
        return Err(Error::Generation("merged base graph disconnects a demand".into()));
    }
    merged.validate()?;
    build_scenarios(&mut merged);
    Ok(merged)
}
