//! The native JSON instance format.

use serde::{Deserialize, Serialize};

use super::{build_scenarios, Demand, Edge, Module, NetworkInstance, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    name: String,
    nodes: Vec<String>,
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    demands: Vec<DemandDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scenarios: Option<Vec<ScenarioDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: String,
    u: String,
    v: String,
    #[serde(default)]
    preinstalled: f64,
    #[serde(default)]
    modules: Vec<ModuleDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleDoc {
    capacity: f64,
    cost: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandDoc {
    source: String,
    target: String,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    id: String,
    failed_edges: Vec<String>,
}

/// Parses a native document, logging any warnings.
pub fn parse_instance(text: &str) -> Result<NetworkInstance> {
    let (inst, warnings) = parse_instance_with_warnings(text)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(inst)
}

/// Parses a native document. When the document has no `scenarios` field, the
/// N-1 scenarios are built and filtered; a warning is returned for every
/// dropped scenario count and for an empty scenario list.
pub fn parse_instance_with_warnings(text: &str) -> Result<(NetworkInstance, Vec<String>)> {
    let doc: Document = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let mut warnings = Vec::new();
    let node_of = |id: &str, entity: &str| {
        doc.nodes
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| Error::validation(entity, format!("unknown node {id}")))
    };
    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in &doc.edges {
        let entity = format!("edge {}", e.id);
        edges.push(Edge {
            id: e.id.clone(),
            u: node_of(&e.u, &entity)?,
            v: node_of(&e.v, &entity)?,
            preinstalled: e.preinstalled,
            modules: e
                .modules
                .iter()
                .map(|m| Module {
                    capacity: m.capacity,
                    cost: m.cost,
                })
                .collect(),
        });
    }
    let mut demands = Vec::with_capacity(doc.demands.len());
    for (k, d) in doc.demands.iter().enumerate() {
        let entity = format!("demand {k}");
        demands.push(Demand {
            source: node_of(&d.source, &entity)?,
            target: node_of(&d.target, &entity)?,
            value: d.value,
        });
    }
    let mut inst = NetworkInstance {
        name: doc.name.clone(),
        nodes: doc.nodes.clone(),
        edges,
        demands,
        scenarios: Vec::new(),
    };
    match &doc.scenarios {
        Some(list) => {
            let index = inst.edge_index();
            let mut scenarios = Vec::with_capacity(list.len());
            for s in list {
                let failed = s
                    .failed_edges
                    .iter()
                    .map(|id| {
                        index.get(id.as_str()).copied().ok_or_else(|| {
                            Error::validation(format!("scenario {}", s.id), format!("unknown edge {id}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                scenarios.push(Scenario {
                    id: s.id.clone(),
                    failed_edges: failed,
                });
            }
            inst.scenarios = scenarios;
            inst.validate()?;
        }
        None => {
            inst.scenarios.clear();
            inst.validate()?;
            let dropped = build_scenarios(&mut inst);
            if dropped > 0 {
                warnings.push(format!(
                    "{}: {dropped} N-1 scenarios disconnect a demand and were removed",
                    inst.name
                ));
            }
            if inst.scenarios.is_empty() {
                warnings.push(format!("{}: no failure scenarios remain", inst.name));
            }
        }
    }
    Ok((inst, warnings))
}

/// Renders an instance in the native format, scenarios included.
pub fn to_native_string(instance: &NetworkInstance) -> String {
    let doc = Document {
        name: instance.name.clone(),
        nodes: instance.nodes.clone(),
        edges: instance
            .edges
            .iter()
            .map(|e| EdgeDoc {
                id: e.id.clone(),
                u: instance.nodes[e.u].clone(),
                v: instance.nodes[e.v].clone(),
                preinstalled: e.preinstalled,
                modules: e
                    .modules
                    .iter()
                    .map(|m| ModuleDoc {
                        capacity: m.capacity,
                        cost: m.cost,
                    })
                    .collect(),
            })
            .collect(),
        demands: instance
            .demands
            .iter()
            .map(|d| DemandDoc {
                source: instance.nodes[d.source].clone(),
                target: instance.nodes[d.target].clone(),
                value: d.value,
            })
            .collect(),
        scenarios: Some(
            instance
                .scenarios
                .iter()
                .map(|s| ScenarioDoc {
                    id: s.id.clone(),
                    failed_edges: s
                        .failed_edges
                        .iter()
                        .map(|&k| instance.edges[k].id.clone())
                        .collect(),
                })
                .collect(),
        ),
    };
    serde_json::to_string_pretty(&doc).expect("instance serialization cannot fail")
}
