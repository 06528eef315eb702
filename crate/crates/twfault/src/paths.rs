//! Traveling-wave path enumeration on the faulted graph.
//!
//! A path is a node sequence from the fault node to the observation node;
//! consecutive nodes must be adjacent. Enumeration is a best-first frontier
//! expansion keyed on accumulated delay, so paths come out in arrival order
//! with deterministic lexicographic tie-breaking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{FEdgeKind, FaultSide, FaultedGraph, NodeId};

/// Hard cap on frontier expansions before giving up with `path-explosion`.
pub const EXPANSION_CAP: usize = 2_000_000;

/// One traveling-wave path with cached delay decomposition.
///
/// The total delay is affine in the fault distance:
/// `τ(d_f) = fixed + (m_low·d_f + m_high·(D - d_f)) / c_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Node sequence, starting at the source (usually the fault node).
    pub nodes: Vec<NodeId>,
    /// Edge index (into the faulted graph) of each hop.
    pub hops: Vec<usize>,
    /// Traversals of the low-side split edge (length `d_f`).
    pub m_low: u32,
    /// Traversals of the high-side split edge (length `D - d_f`).
    pub m_high: u32,
    /// Delay contributed by edges not adjacent to the fault (s).
    pub fixed_delay_s: f64,
}

impl Path {
    fn from_nodes(fg: &FaultedGraph, nodes: Vec<NodeId>) -> Self {
        let mut hops = Vec::with_capacity(nodes.len() - 1);
        let mut m_low = 0u32;
        let mut m_high = 0u32;
        let mut fixed = 0.0;
        for pair in nodes.windows(2) {
            let e = fg
                .edge_between(pair[0], pair[1])
                .expect("consecutive path nodes must be adjacent");
            hops.push(e);
            match fg.edges[e].kind {
                FEdgeKind::Fixed => fixed += fg.edge_length(e, 0.0) / fg.edge_speed(e),
                FEdgeKind::Split(FaultSide::Low) => m_low += 1,
                FEdgeKind::Split(FaultSide::High) => m_high += 1,
            }
        }
        Path {
            nodes,
            hops,
            m_low,
            m_high,
            fixed_delay_s: fixed,
        }
    }

    /// Total propagation delay for a given fault distance (s).
    pub fn delay(&self, fg: &FaultedGraph, d_f_km: f64) -> f64 {
        let c = fg.edge_speed(fg.edges.len() - 1); // split edges share the faulty class
        let d_total = fg.faulty_edge_length_km;
        self.fixed_delay_s
            + (self.m_low as f64 * d_f_km + self.m_high as f64 * (d_total - d_f_km)) / c
    }

    /// `∂τ/∂d_f = (m_low - m_high) / c_f`.
    pub fn delay_slope(&self, fg: &FaultedGraph) -> f64 {
        let c = fg.edge_speed(fg.edges.len() - 1);
        (self.m_low as f64 - self.m_high as f64) / c
    }
}

/// Total propagation delay along a path (s). Standalone form of
/// [`Path::delay`] for callers holding only the node sequence.
pub fn path_delay(fg: &FaultedGraph, path: &Path, d_f_km: f64) -> f64 {
    path.delay(fg, d_f_km)
}

/// Delay or count budget for enumeration. Exactly one bound applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathBudget {
    /// Keep paths with delay strictly below this bound (s).
    TauMax(f64),
    /// Keep the given number of smallest-delay paths.
    NMax(usize),
}

struct Frontier {
    delay: f64,
    nodes: Vec<NodeId>,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.delay == other.delay && self.nodes == other.nodes
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap on (delay, lexicographic node sequence).
        other
            .delay
            .total_cmp(&self.delay)
            .then_with(|| other.nodes.cmp(&self.nodes))
    }
}

/// Enumerates all paths from `from` to `to` admitted by the budget, sorted
/// by (delay, lexicographic node sequence).
pub fn enumerate_paths(
    fg: &FaultedGraph,
    from: NodeId,
    to: NodeId,
    budget: PathBudget,
    d_f_km: f64,
) -> Result<Vec<Path>> {
    let bound = match budget {
        PathBudget::TauMax(t) => t,
        PathBudget::NMax(_) => f64::INFINITY,
    };
    let want = match budget {
        PathBudget::TauMax(_) => usize::MAX,
        PathBudget::NMax(n) => n,
    };

    let mut heap = BinaryHeap::new();
    heap.push(Frontier {
        delay: 0.0,
        nodes: vec![from],
    });
    let mut out = Vec::new();
    let mut expansions = 0usize;

    while let Some(item) = heap.pop() {
        if item.nodes.len() > 1 && *item.nodes.last().unwrap() == to {
            out.push(Path::from_nodes(fg, item.nodes.clone()));
            if out.len() >= want {
                break;
            }
        }
        let last = *item.nodes.last().unwrap();
        for &(next, edge) in fg.neighbors(last) {
            let hop = fg.edge_length(edge, d_f_km) / fg.edge_speed(edge);
            let delay = item.delay + hop;
            if delay < bound {
                expansions += 1;
                if expansions > EXPANSION_CAP {
                    return Err(Error::PathExplosion(EXPANSION_CAP));
                }
                let mut nodes = item.nodes.clone();
                nodes.push(next);
                heap.push(Frontier { delay, nodes });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::{ohl_class, station};
    use crate::grid::{build_grid, insert_fault, GridSpecInput, NodeKind, NodeSpec};
    use approx::assert_relative_eq;

    /// Two-station single-edge grid with a fault at `d_f`.
    fn point_to_point(d_f: f64) -> FaultedGraph {
        let spec = GridSpecInput {
            classes: vec![ohl_class("ohl")],
            nodes: vec![
                NodeSpec {
                    id: "a".into(),
                    kind: NodeKind::Station(station()),
                },
                NodeSpec {
                    id: "b".into(),
                    kind: NodeKind::Station(station()),
                },
            ],
            edges: vec![("e".into(), "a".into(), "b".into(), 120.0, "ohl".into())],
        };
        let g = build_grid(&spec).unwrap();
        let e = g.edge_index("e").unwrap();
        insert_fault(&g, e, d_f, 1.0, 0.0, 320e3).unwrap().0
    }

    #[test]
    fn direct_path_delay_matches_distance_over_speed() {
        let fg = point_to_point(100.0);
        let relay = NodeId(0);
        let paths =
            enumerate_paths(&fg, fg.fault_node, relay, PathBudget::NMax(1), 100.0).unwrap();
        let c = fg.base.edge_speed(fg.faulty_edge);
        assert_relative_eq!(paths[0].delay(&fg, 100.0), 100.0 / c, max_relative = 1e-12);
        assert_relative_eq!(paths[0].delay(&fg, 100.0), 375.9e-6, max_relative = 1e-3);
    }

    #[test]
    fn single_reflection_triples_the_traversal() {
        let fg = point_to_point(40.0);
        let relay = NodeId(0);
        let c = fg.base.edge_speed(fg.faulty_edge);
        let paths = enumerate_paths(
            &fg,
            fg.fault_node,
            relay,
            PathBudget::TauMax(3.5 * 40.0 / c),
            40.0,
        )
        .unwrap();
        // (q_f, a) and (q_f, a, q_f, a).
        assert_eq!(paths.len(), 2);
        assert_relative_eq!(paths[1].delay(&fg, 40.0), 3.0 * 40.0 / c, max_relative = 1e-12);
        assert_eq!(paths[1].m_low, 3);
    }

    #[test]
    fn path_touching_both_split_edges_once_has_zero_slope() {
        let fg = point_to_point(60.0);
        // a -> q_f -> b crosses both halves once; the delay no longer
        // depends on where the fault sits.
        let p = Path::from_nodes(&fg, vec![NodeId(0), fg.fault_node, NodeId(1)]);
        assert_eq!((p.m_low, p.m_high), (1, 1));
        assert_eq!(p.delay_slope(&fg), 0.0);
        assert_relative_eq!(p.delay(&fg, 60.0), p.delay(&fg, 20.0), max_relative = 1e-12);
    }

    #[test]
    fn budget_below_first_arrival_is_empty() {
        let fg = point_to_point(100.0);
        let relay = NodeId(0);
        let c = fg.base.edge_speed(fg.faulty_edge);
        let paths = enumerate_paths(
            &fg,
            fg.fault_node,
            relay,
            PathBudget::TauMax(0.5 * 100.0 / c),
            100.0,
        )
        .unwrap();
        assert!(paths.is_empty());
    }

    /// Exhaustive depth-first oracle over node sequences.
    fn brute_force(
        fg: &FaultedGraph,
        from: NodeId,
        to: NodeId,
        tau_max: f64,
        d_f: f64,
    ) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        let mut stack = vec![(vec![from], 0.0f64)];
        while let Some((seq, delay)) = stack.pop() {
            if seq.len() > 1 && *seq.last().unwrap() == to && delay < tau_max {
                out.push(seq.clone());
            }
            for &(next, edge) in fg.neighbors(*seq.last().unwrap()) {
                let d = delay + fg.edge_length(edge, d_f) / fg.edge_speed(edge);
                if d < tau_max {
                    let mut s = seq.clone();
                    s.push(next);
                    stack.push((s, d));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn three_node_chain_matches_brute_force() {
        // q_f - a - q_s with unit-ish delays per hop.
        let spec = GridSpecInput {
            classes: vec![ohl_class("ohl")],
            nodes: vec![
                NodeSpec {
                    id: "start".into(),
                    kind: NodeKind::Junction,
                },
                NodeSpec {
                    id: "mid".into(),
                    kind: NodeKind::Junction,
                },
                NodeSpec {
                    id: "qs".into(),
                    kind: NodeKind::Station(station()),
                },
            ],
            edges: vec![
                ("e1".into(), "start".into(), "mid".into(), 100.0, "ohl".into()),
                ("e2".into(), "mid".into(), "qs".into(), 100.0, "ohl".into()),
            ],
        };
        let g = build_grid(&spec).unwrap();
        let (fg, _) = insert_fault(&g, g.edge_index("e1").unwrap(), 99.9999, 1.0, 0.0, 1.0).unwrap();
        // Hop unit: delay of one 100 km edge; the fault sits (numerically) at
        // the "start" end's far side, so q_f ~ mid in hop terms.
        let c = g.edge_speed(g.edge_index("e1").unwrap());
        let hop = 100.0 / c;
        let tau_max = 4.5 * hop;
        let qs = g.node_index("qs").unwrap();
        let got = enumerate_paths(&fg, fg.fault_node, qs, PathBudget::TauMax(tau_max), 99.9999)
            .unwrap();
        let mut got_seqs: Vec<Vec<NodeId>> = got.iter().map(|p| p.nodes.clone()).collect();
        got_seqs.sort();
        let want = brute_force(&fg, fg.fault_node, qs, tau_max, 99.9999);
        assert_eq!(got_seqs, want);
        for p in &got {
            assert!(p.delay(&fg, 99.9999) < tau_max);
        }
    }

    #[test]
    fn count_budget_is_a_prefix_of_the_delay_ordering() {
        let fg = point_to_point(30.0);
        let relay = NodeId(0);
        let all = enumerate_paths(&fg, fg.fault_node, relay, PathBudget::NMax(12), 30.0).unwrap();
        for k in 1..=all.len() {
            let prefix =
                enumerate_paths(&fg, fg.fault_node, relay, PathBudget::NMax(k), 30.0).unwrap();
            assert_eq!(prefix.as_slice(), &all[..k]);
        }
        // Delays are non-decreasing.
        for w in all.windows(2) {
            assert!(w[0].delay(&fg, 30.0) <= w[1].delay(&fg, 30.0));
        }
    }

    #[test]
    fn larger_budget_is_a_superset() {
        let fg = point_to_point(30.0);
        let relay = NodeId(0);
        let c = fg.base.edge_speed(fg.faulty_edge);
        let small = enumerate_paths(
            &fg,
            fg.fault_node,
            relay,
            PathBudget::TauMax(4.0 * 120.0 / c),
            30.0,
        )
        .unwrap();
        let large = enumerate_paths(
            &fg,
            fg.fault_node,
            relay,
            PathBudget::TauMax(6.0 * 120.0 / c),
            30.0,
        )
        .unwrap();
        assert!(large.len() >= small.len());
        for p in &small {
            assert!(large.iter().any(|q| q.nodes == p.nodes));
        }
    }
}
