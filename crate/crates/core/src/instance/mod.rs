//! Network design problem data.
//!
//! An instance is an undirected graph whose edges carry preinstalled capacity
//! and a list of installable capacity modules, a set of point-to-point demands
//! and a list of failure scenarios. Nodes, edges and scenarios are referenced
//! by position everywhere inside the crate; string ids only matter for file
//! formats and reports.

mod betweenness;
mod generate;
mod native;
mod random;
mod sndlib;

pub use betweenness::edge_betweenness;
pub use generate::{generate_instance, GenerationParams};
pub use native::{parse_instance, parse_instance_with_warnings, to_native_string};
pub use random::{random_instance, RandomParams};
pub use sndlib::{parse_sndlib, parse_sndlib_with_warnings};

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub capacity: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub u: usize,
    pub v: usize,
    pub preinstalled: f64,
    pub modules: Vec<Module>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub source: usize,
    pub target: usize,
    pub value: f64,
}

impl Demand {
    /// Net supply of this demand at `node`: `+value` at the source, `-value`
    /// at the target, zero elsewhere.
    pub fn supply(&self, node: usize) -> f64 {
        if node == self.source {
            self.value
        } else if node == self.target {
            -self.value
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub failed_edges: Vec<usize>,
}

impl Scenario {
    pub fn fails(&self, edge: usize) -> bool {
        self.failed_edges.contains(&edge)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    pub name: String,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    pub demands: Vec<Demand>,
    pub scenarios: Vec<Scenario>,
}

/// Flat indexing of the `(edge, module)` pairs, edge-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleLayout {
    offsets: Vec<usize>,
}

impl ModuleLayout {
    pub fn new(instance: &NetworkInstance) -> Self {
        let mut offsets = Vec::with_capacity(instance.edges.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for e in &instance.edges {
            acc += e.modules.len();
            offsets.push(acc);
        }
        ModuleLayout { offsets }
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, edge: usize, module: usize) -> usize {
        debug_assert!(self.offsets[edge] + module < self.offsets[edge + 1]);
        self.offsets[edge] + module
    }

    /// Flat indices belonging to `edge`.
    pub fn edge_range(&self, edge: usize) -> std::ops::Range<usize> {
        self.offsets[edge]..self.offsets[edge + 1]
    }

    /// Inverse of [`ModuleLayout::index`].
    pub fn locate(&self, flat: usize) -> (usize, usize) {
        let edge = match self.offsets.binary_search(&flat) {
            Ok(mut i) => {
                // skip edges without modules that share the same offset
                while self.offsets[i + 1] == flat {
                    i += 1;
                }
                i
            }
            Err(i) => i - 1,
        };
        (edge, flat - self.offsets[edge])
    }
}

impl NetworkInstance {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn module_layout(&self) -> ModuleLayout {
        ModuleLayout::new(self)
    }

    /// Number of directed arcs; edge `e` induces arcs `2e` (u→v) and `2e+1` (v→u).
    pub fn arc_count(&self) -> usize {
        2 * self.edges.len()
    }

    /// Tail and head node of a directed arc.
    pub fn arc_endpoints(&self, arc: usize) -> (usize, usize) {
        let e = &self.edges[arc / 2];
        if arc.is_multiple_of(2) {
            (e.u, e.v)
        } else {
            (e.v, e.u)
        }
    }

    /// Installed capacity of `edge` under the module vector `design`.
    pub fn capacity(&self, layout: &ModuleLayout, design: &[u32], edge: usize) -> f64 {
        let e = &self.edges[edge];
        e.preinstalled
            + e.modules
                .iter()
                .zip(layout.edge_range(edge))
                .map(|(m, k)| m.capacity * f64::from(design[k]))
                .sum::<f64>()
    }

    pub fn design_cost(&self, design: &[u32]) -> f64 {
        self.edges
            .iter()
            .flat_map(|e| e.modules.iter())
            .zip(design)
            .map(|(m, &y)| m.cost * f64::from(y))
            .sum()
    }

    pub fn degree(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Adjacency lists of `(neighbor, edge)`, ignoring the edges in `failed`.
    pub fn adjacency(&self, failed: &[usize]) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            if failed.contains(&k) {
                continue;
            }
            adj[e.u].push((e.v, k));
            adj[e.v].push((e.u, k));
        }
        adj
    }

    /// True when every demand's endpoints are connected once `failed` is removed.
    pub fn demands_connected(&self, failed: &[usize]) -> bool {
        let adj = self.adjacency(failed);
        let mut component = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for start in 0..self.nodes.len() {
            if component[start] != usize::MAX {
                continue;
            }
            component[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &(y, _) in &adj[x] {
                    if component[y] == usize::MAX {
                        component[y] = next;
                        queue.push_back(y);
                    }
                }
            }
            next += 1;
        }
        self.demands
            .iter()
            .all(|d| component[d.source] == component[d.target])
    }

    /// Checks every structural invariant, naming the offending entity.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut seen_nodes = HashSet::new();
        for id in &self.nodes {
            if !seen_nodes.insert(id.as_str()) {
                return Err(Error::validation(format!("node {id}"), "duplicate node id"));
            }
        }
        let mut pairs = HashSet::new();
        let mut edge_ids = HashSet::new();
        for e in &self.edges {
            let entity = format!("edge {}", e.id);
            if !edge_ids.insert(e.id.as_str()) {
                return Err(Error::validation(entity, "duplicate edge id"));
            }
            if e.u >= n || e.v >= n {
                return Err(Error::validation(entity, "endpoint not in node list"));
            }
            if e.u == e.v {
                return Err(Error::validation(entity, "self loop"));
            }
            if !pairs.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::validation(entity, "parallel edge between the same node pair"));
            }
            if !(e.preinstalled >= 0.0) || !e.preinstalled.is_finite() {
                return Err(Error::validation(entity, "preinstalled capacity must be finite and >= 0"));
            }
            if e.modules.is_empty() && e.preinstalled <= 0.0 {
                return Err(Error::validation(entity, "no modules and no preinstalled capacity"));
            }
            for m in &e.modules {
                if !(m.capacity > 0.0) || !m.capacity.is_finite() {
                    return Err(Error::validation(entity, "module capacity must be > 0"));
                }
                if !(m.cost >= 0.0) || !m.cost.is_finite() {
                    return Err(Error::validation(entity, "module cost must be >= 0"));
                }
            }
        }
        for (k, d) in self.demands.iter().enumerate() {
            let entity = format!("demand {k}");
            if d.source >= n || d.target >= n {
                return Err(Error::validation(entity, "endpoint not in node list"));
            }
            if d.source == d.target {
                return Err(Error::validation(entity, "source equals target"));
            }
            if !(d.value > 0.0) || !d.value.is_finite() {
                return Err(Error::validation(entity, "demand value must be > 0"));
            }
        }
        if !self.demands_connected(&[]) {
            return Err(Error::validation(
                self.name.clone(),
                "base graph does not connect every demand pair",
            ));
        }
        let mut scenario_ids = HashSet::new();
        for s in &self.scenarios {
            let entity = format!("scenario {}", s.id);
            if !scenario_ids.insert(s.id.as_str()) {
                return Err(Error::validation(entity, "duplicate scenario id"));
            }
            if s.failed_edges.is_empty() {
                return Err(Error::validation(entity, "empty failure set"));
            }
            if s.failed_edges.iter().any(|&e| e >= self.edges.len()) {
                return Err(Error::validation(entity, "failed edge not in edge list"));
            }
            if !self.demands_connected(&s.failed_edges) {
                return Err(Error::validation(entity, "failure disconnects a demand pair"));
            }
        }
        Ok(())
    }

    /// Edge index by id.
    pub fn edge_index(&self) -> HashMap<&str, usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(k, e)| (e.id.as_str(), k))
            .collect()
    }
}

/// One single-edge failure scenario per edge, in edge order.
pub fn n_minus_one_scenarios(instance: &NetworkInstance) -> Vec<Scenario> {
    instance
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| Scenario {
            id: format!("fail_{}", e.id),
            failed_edges: vec![k],
        })
        .collect()
}

/// Keeps only the scenarios under which every demand stays routable
/// topologically.
pub fn filter_scenarios(instance: &NetworkInstance, scenarios: Vec<Scenario>) -> Vec<Scenario> {
    scenarios
        .into_iter()
        .filter(|s| instance.demands_connected(&s.failed_edges))
        .collect()
}

/// Replaces the instance's scenarios by the filtered N-1 set and returns the
/// number of scenarios dropped.
pub fn build_scenarios(instance: &mut NetworkInstance) -> usize {
    let all = n_minus_one_scenarios(instance);
    let total = all.len();
    instance.scenarios = filter_scenarios(instance, all);
    total - instance.scenarios.len()
}

/// Reads an instance file. JSON documents are read in the native format,
/// anything else as SNDlib text; an unnamed SNDlib network takes the file
/// stem as its name.
pub fn load_instance(path: &Path) -> Result<NetworkInstance> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return parse_instance(&text);
    }
    let mut inst = parse_sndlib(&text)?;
    if inst.name.is_empty() {
        inst.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(inst)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn instance(
        nodes: &[&str],
        edges: &[(&str, &str, f64, &[(f64, f64)])],
        demands: &[(&str, &str, f64)],
    ) -> NetworkInstance {
        let nodes: Vec<String> = nodes.iter().map(|s| s.to_string()).collect();
        let idx = |s: &str| nodes.iter().position(|n| n == s).unwrap();
        let edges = edges
            .iter()
            .map(|(u, v, pre, mods)| Edge {
                id: format!("{u}{v}"),
                u: idx(u),
                v: idx(v),
                preinstalled: *pre,
                modules: mods
                    .iter()
                    .map(|&(capacity, cost)| Module { capacity, cost })
                    .collect(),
            })
            .collect();
        let demands = demands
            .iter()
            .map(|(s, t, value)| Demand {
                source: idx(s),
                target: idx(t),
                value: *value,
            })
            .collect();
        let mut inst = NetworkInstance {
            name: "fixture".into(),
            nodes,
            edges,
            demands,
            scenarios: Vec::new(),
        };
        build_scenarios(&mut inst);
        inst
    }

    /// Triangle A,B,C, one module (5, 1) per edge, demand A→B of 5.
    pub fn triangle() -> NetworkInstance {
        instance(
            &["A", "B", "C"],
            &[
                ("A", "B", 0.0, &[(5.0, 1.0)]),
                ("A", "C", 0.0, &[(5.0, 1.0)]),
                ("C", "B", 0.0, &[(5.0, 1.0)]),
            ],
            &[("A", "B", 5.0)],
        )
    }
}
