//! Grid graph, segment-class catalog, and fault insertion.
//!
//! The grid is an undirected graph whose vertices are converter stations and
//! line junctions and whose edges are homogeneous line segments. A fault
//! splits its edge in two around an added fault node; the fault distance
//! `d_f` is measured from the endpoint that was declared first, which makes
//! the `i < j` convention unambiguous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineparams::{lossless_surge_impedance, propagation_speed, DistributedParams, MmcEquivalent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassId(pub u32);

/// Physical kind of a line segment; decides the surge-impedance
/// approximation and the default fault-resistance validity range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Overhead,
    Cable,
}

#[derive(Debug, Clone)]
pub struct SegmentClass {
    pub id: String,
    pub kind: SegmentKind,
    pub params: DistributedParams,
    /// Step-table class this segment draws its behavioral filters from.
    pub step_table: String,
    /// Soil resistivity of the corridor (Ω·m); needed only when the step
    /// table carries a resistivity axis.
    pub soil_resistivity: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    /// Busbar with a converter station attached.
    Station(MmcEquivalent),
    /// Passive junction between segments.
    Junction,
    /// Inserted fault node; never present in a pre-fault graph.
    Fault,
}

#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub id: String,
    /// Endpoint with the lower declaration index.
    pub a: NodeId,
    /// Endpoint with the higher declaration index.
    pub b: NodeId,
    pub length_km: f64,
    pub class: ClassId,
}

/// Validated immutable grid graph. Node declaration order is preserved and
/// defines the ordering used by the fault-distance convention.
#[derive(Debug, Clone)]
pub struct GridGraph {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    pub classes: Vec<SegmentClass>,
}

/// Raw grid description before validation, as parsed from a config file.
#[derive(Debug, Clone, Default)]
pub struct GridSpecInput {
    pub classes: Vec<SegmentClass>,
    pub nodes: Vec<NodeSpec>,
    /// (edge id, node id a, node id b, length km, class id)
    pub edges: Vec<(String, String, String, f64, String)>,
}

impl GridGraph {
    pub fn node_index(&self, id: &str) -> Result<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.id == id)
            .map(|i| NodeId(i as u32))
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn edge_index(&self, id: &str) -> Result<EdgeId> {
        self.edges
            .iter()
            .position(|e| e.id == id)
            .map(|i| EdgeId(i as u32))
            .ok_or_else(|| Error::UnknownEdge(id.to_string()))
    }

    pub fn class(&self, c: ClassId) -> &SegmentClass {
        &self.classes[c.0 as usize]
    }

    pub fn edge(&self, e: EdgeId) -> &EdgeSpec {
        &self.edges[e.0 as usize]
    }

    pub fn node(&self, n: NodeId) -> &NodeSpec {
        &self.nodes[n.0 as usize]
    }

    /// Propagation speed on an edge (km/s).
    pub fn edge_speed(&self, e: EdgeId) -> f64 {
        propagation_speed(&self.class(self.edge(e).class).params)
    }

    /// Real lossless surge impedance of an edge (Ω).
    pub fn edge_zs_lossless(&self, e: EdgeId) -> f64 {
        lossless_surge_impedance(&self.class(self.edge(e).class).params)
    }
}

/// Estimation target: fault inception time, faulty edge, distance from the
/// lower-indexed endpoint, fault resistance, and pre-fault voltage.
#[derive(Debug, Clone, Copy)]
pub struct FaultParams {
    pub t_f_s: f64,
    pub edge: EdgeId,
    pub d_f_km: f64,
    pub r_f_ohm: f64,
    pub v_bf_v: f64,
}

/// Which side of the split a fault-adjacent edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultSide {
    /// Toward the lower-indexed endpoint; length is `d_f`.
    Low,
    /// Toward the higher-indexed endpoint; length is `d_edge - d_f`.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FEdgeKind {
    Fixed,
    Split(FaultSide),
}

/// Edge of the faulted graph. Fault-adjacent edges carry no stored length;
/// it is derived from `d_f` so the two halves always sum exactly to the
/// original length.
#[derive(Debug, Clone)]
pub struct FaultedEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub class: ClassId,
    pub kind: FEdgeKind,
    fixed_length_km: f64,
}

#[derive(Debug, Clone)]
pub struct FaultedGraph {
    pub base: GridGraph,
    pub fault_node: NodeId,
    pub faulty_edge: EdgeId,
    pub faulty_edge_length_km: f64,
    pub edges: Vec<FaultedEdge>,
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

impl FaultedGraph {
    pub fn node_count(&self) -> usize {
        self.base.nodes.len() + 1
    }

    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, usize)] {
        &self.adjacency[n.0 as usize]
    }

    pub fn edge_length(&self, idx: usize, d_f: f64) -> f64 {
        let e = &self.edges[idx];
        match e.kind {
            FEdgeKind::Fixed => e.fixed_length_km,
            FEdgeKind::Split(FaultSide::Low) => d_f,
            FEdgeKind::Split(FaultSide::High) => self.faulty_edge_length_km - d_f,
        }
    }

    pub fn edge_speed(&self, idx: usize) -> f64 {
        propagation_speed(&self.base.class(self.edges[idx].class).params)
    }

    pub fn edge_zs_lossless(&self, idx: usize) -> f64 {
        lossless_surge_impedance(&self.base.class(self.edges[idx].class).params)
    }

    /// Index of the faulted-graph edge between two adjacent nodes, if any.
    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.neighbors(a).iter().find(|(n, _)| *n == b).map(|(_, i)| *i)
    }

    pub fn node_label(&self, n: NodeId) -> &str {
        if n == self.fault_node {
            "q_f"
        } else {
            &self.base.node(n).id
        }
    }
}

/// Validates a raw grid description into a [`GridGraph`].
pub fn build_grid(spec: &GridSpecInput) -> Result<GridGraph> {
    let mut seen = std::collections::HashSet::new();
    for c in &spec.classes {
        if !seen.insert(c.id.clone()) {
            return Err(Error::DuplicateId(c.id.clone()));
        }
        c.params.validate()?;
    }
    let mut seen = std::collections::HashSet::new();
    for n in &spec.nodes {
        if !seen.insert(n.id.clone()) {
            return Err(Error::DuplicateId(n.id.clone()));
        }
        if matches!(n.kind, NodeKind::Fault) {
            return Err(Error::Config(format!(
                "node `{}`: fault nodes cannot appear in a pre-fault graph",
                n.id
            )));
        }
        if let NodeKind::Station(m) = &n.kind {
            m.validate()?;
        }
    }

    let node_pos = |id: &str, edge: &str| -> Result<NodeId> {
        spec.nodes
            .iter()
            .position(|n| n.id == id)
            .map(|i| NodeId(i as u32))
            .ok_or_else(|| Error::DanglingNode {
                edge: edge.to_string(),
                node: id.to_string(),
            })
    };
    let class_pos = |id: &str, edge: &str| -> Result<ClassId> {
        spec.classes
            .iter()
            .position(|c| c.id == id)
            .map(|i| ClassId(i as u32))
            .ok_or_else(|| Error::DanglingClass {
                edge: edge.to_string(),
                class: id.to_string(),
            })
    };

    let mut edges = Vec::with_capacity(spec.edges.len());
    let mut seen_ids = std::collections::HashSet::new();
    let mut seen_pairs = std::collections::HashSet::new();
    for (id, na, nb, length, class) in &spec.edges {
        if !seen_ids.insert(id.clone()) {
            return Err(Error::DuplicateId(id.clone()));
        }
        let a = node_pos(na, id)?;
        let b = node_pos(nb, id)?;
        if a == b {
            return Err(Error::SelfLoop(id.clone()));
        }
        if *length <= 0.0 {
            return Err(Error::NonPositiveLength(id.clone(), *length));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !seen_pairs.insert((lo, hi)) {
            return Err(Error::ParallelEdge(na.clone(), nb.clone()));
        }
        edges.push(EdgeSpec {
            id: id.clone(),
            a: lo,
            b: hi,
            length_km: *length,
            class: class_pos(class, id)?,
        });
    }

    let graph = GridGraph {
        nodes: spec.nodes.clone(),
        edges,
        classes: spec.classes.clone(),
    };

    // Connectivity check by flood fill from node 0.
    if !graph.nodes.is_empty() {
        let n = graph.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for e in &graph.edges {
            adj[e.a.0 as usize].push(e.b.0 as usize);
            adj[e.b.0 as usize].push(e.a.0 as usize);
        }
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(i) = visited.iter().position(|v| !v) {
            return Err(Error::Disconnected(graph.nodes[i].id.clone()));
        }
    }

    Ok(graph)
}

/// Inserts a fault node on `e_f` at `d_f` km from the lower-indexed
/// endpoint. The base graph is untouched; the result carries its own copy.
pub fn insert_fault(
    g: &GridGraph,
    e_f: EdgeId,
    d_f_km: f64,
    r_f_ohm: f64,
    t_f_s: f64,
    v_bf_v: f64,
) -> Result<(FaultedGraph, FaultParams)> {
    if e_f.0 as usize >= g.edges.len() {
        return Err(Error::UnknownEdge(format!("#{}", e_f.0)));
    }
    let edge = g.edge(e_f).clone();
    if !(d_f_km > 0.0 && d_f_km < edge.length_km) {
        return Err(Error::FaultAtNode {
            edge: edge.id.clone(),
            d_f: d_f_km,
            length: edge.length_km,
        });
    }
    if r_f_ohm < 0.0 {
        return Err(Error::Config(format!("fault resistance must be >= 0, got {r_f_ohm}")));
    }

    let fault_node = NodeId(g.nodes.len() as u32);
    let mut edges: Vec<FaultedEdge> = g
        .edges
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != e_f.0 as usize)
        .map(|(_, e)| FaultedEdge {
            a: e.a,
            b: e.b,
            class: e.class,
            kind: FEdgeKind::Fixed,
            fixed_length_km: e.length_km,
        })
        .collect();
    edges.push(FaultedEdge {
        a: edge.a,
        b: fault_node,
        class: edge.class,
        kind: FEdgeKind::Split(FaultSide::Low),
        fixed_length_km: 0.0,
    });
    edges.push(FaultedEdge {
        a: fault_node,
        b: edge.b,
        class: edge.class,
        kind: FEdgeKind::Split(FaultSide::High),
        fixed_length_km: 0.0,
    });

    let mut adjacency = vec![Vec::new(); g.nodes.len() + 1];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.a.0 as usize].push((e.b, i));
        adjacency[e.b.0 as usize].push((e.a, i));
    }
    // Deterministic neighbor order regardless of edge declaration order.
    for adj in &mut adjacency {
        adj.sort_by_key(|(n, _)| *n);
    }

    let fg = FaultedGraph {
        base: g.clone(),
        fault_node,
        faulty_edge: e_f,
        faulty_edge_length_km: edge.length_km,
        edges,
        adjacency,
    };
    let params = FaultParams {
        t_f_s,
        edge: e_f,
        d_f_km,
        r_f_ohm,
        v_bf_v,
    };
    Ok((fg, params))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn ohl_class(id: &str) -> SegmentClass {
        SegmentClass {
            id: id.to_string(),
            kind: SegmentKind::Overhead,
            params: DistributedParams {
                r_ohm_per_km: 0.872,
                l_h_per_km: 1.84e-3,
                c_f_per_km: 7.68e-9,
                g_s_per_km: 0.2e-9,
                reference_frequency_hz: 1000.0,
            },
            step_table: id.to_string(),
            soil_resistivity: None,
        }
    }

    pub fn cable_class(id: &str) -> SegmentClass {
        SegmentClass {
            id: id.to_string(),
            kind: SegmentKind::Cable,
            params: DistributedParams {
                r_ohm_per_km: 0.102,
                l_h_per_km: 0.123e-3,
                c_f_per_km: 241e-9,
                g_s_per_km: -0.4e-9,
                reference_frequency_hz: 1000.0,
            },
            step_table: id.to_string(),
            soil_resistivity: None,
        }
    }

    pub fn station() -> MmcEquivalent {
        MmcEquivalent {
            r_ohm: 0.4,
            l_h: 8.1e-3,
            c_f: 391e-6,
        }
    }

    /// Four-station meshed grid: stations q1..q4, junctions q5..q8 on the
    /// hybrid line between q1 and q4.
    pub fn four_station_grid() -> GridGraph {
        let mut spec = GridSpecInput::default();
        spec.classes = vec![ohl_class("ohl"), cable_class("cable")];
        for i in 1..=4 {
            spec.nodes.push(NodeSpec {
                id: format!("q{i}"),
                kind: NodeKind::Station(station()),
            });
        }
        for i in 5..=8 {
            spec.nodes.push(NodeSpec {
                id: format!("q{i}"),
                kind: NodeKind::Junction,
            });
        }
        let e = |id: &str, a: &str, b: &str, len: f64, class: &str| {
            (id.to_string(), a.to_string(), b.to_string(), len, class.to_string())
        };
        spec.edges = vec![
            e("e12", "q1", "q2", 200.0, "ohl"),
            e("e13", "q1", "q3", 180.0, "ohl"),
            e("e24", "q2", "q4", 150.0, "cable"),
            e("e15", "q1", "q5", 120.0, "ohl"),
            e("e56", "q5", "q6", 20.0, "cable"),
            e("e67", "q6", "q7", 100.0, "ohl"),
            e("e78", "q7", "q8", 20.0, "cable"),
            e("e84", "q8", "q4", 40.0, "ohl"),
        ];
        build_grid(&spec).unwrap()
    }
}
