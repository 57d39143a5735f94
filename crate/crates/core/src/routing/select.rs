//! Least-cost route selection combining hop count and residual energy.
//!
//! Entering node `v` from `u` costs `1 + beta * (1 - E_v)`, where `E_v` is
//! the energy `u` holds for `v` in its table. A node may relay only when
//! that record is fresh and strictly above the exhaustion threshold. The
//! destination is always enterable; with no fresh record it is charged as
//! empty (`E = 0`). Among equal-cost routes the lexicographically smallest
//! node sequence wins.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{invalid, Error, Result};
use crate::routing::graph::{NetworkGraph, NodeId};
use crate::routing::table::EnergyTable;

/// Costs closer than this are considered equal and broken by node order.
pub const COST_QUANTUM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RouteQuery {
    pub src: NodeId,
    pub dst: NodeId,
    pub beta: f64,
    /// Residual energy at or below which a node is not used as a relay.
    pub exhaust_threshold: f64,
    /// Time at which table freshness is judged.
    pub now: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<NodeId>,
    pub cost: f64,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Nodes strictly between source and destination.
    pub fn relays(&self) -> &[NodeId] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    /// `A>B>C` rendering used in event logs.
    pub fn display_path(&self) -> String {
        self.nodes
            .iter()
            .map(NodeId::as_str)
            .collect::<Vec<_>>()
            .join(">")
    }
}

/// Cost of stepping `from -> to`, or `None` if `to` may not be entered.
pub fn edge_cost(
    tables: &BTreeMap<NodeId, EnergyTable>,
    from: &NodeId,
    to: &NodeId,
    query: &RouteQuery,
) -> Option<f64> {
    if *to == query.src {
        return None;
    }
    let energy = tables.get(from).and_then(|t| t.fresh_energy(to, query.now));
    let energy = if *to == query.dst {
        energy.unwrap_or(0.0)
    } else {
        energy.filter(|e| *e > query.exhaust_threshold)?
    };
    Some(1.0 + query.beta * (1.0 - energy))
}

fn quantized(cost: f64) -> i64 {
    (cost / COST_QUANTUM).round() as i64
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Label {
    key: i64,
    path: Vec<NodeId>,
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best route from `query.src` to `query.dst`, or `None` when no route
/// satisfies the relay constraints.
pub fn select_route(
    graph: &NetworkGraph,
    tables: &BTreeMap<NodeId, EnergyTable>,
    query: &RouteQuery,
) -> Result<Option<Route>> {
    for id in [&query.src, &query.dst] {
        if !graph.contains(id) {
            return Err(Error::UnknownNode(id.to_string()));
        }
    }
    if query.src == query.dst {
        return Err(invalid("dst", "source and destination coincide"));
    }
    if !(query.beta.is_finite() && query.beta >= 0.0) {
        return Err(invalid("beta", format!("must be finite and >= 0, got {}", query.beta)));
    }

    // Label-correcting search over (quantized cost, path). Labels only
    // ever improve under a strict total order on finitely many simple
    // paths, so the loop terminates; with non-negative costs it settles
    // like Dijkstra.
    let mut best: BTreeMap<NodeId, (f64, Label)> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    let start = Label {
        key: 0,
        path: vec![query.src.clone()],
    };
    best.insert(query.src.clone(), (0.0, start.clone()));
    heap.push(Reverse((start, 0.0f64.to_bits())));

    while let Some(Reverse((label, cost_bits))) = heap.pop() {
        let node = label.path.last().expect("paths are non-empty").clone();
        if best.get(&node).map(|(_, l)| l) != Some(&label) {
            continue;
        }
        if node == query.dst {
            continue;
        }
        let cost = f64::from_bits(cost_bits);
        for next in graph.neighbors(&node) {
            if label.path.contains(next) {
                continue;
            }
            let Some(step) = edge_cost(tables, &node, next, query) else {
                continue;
            };
            let total = cost + step;
            let mut path = label.path.clone();
            path.push(next.clone());
            let candidate = Label {
                key: quantized(total),
                path,
            };
            let improves = best.get(next).is_none_or(|(_, l)| candidate < *l);
            if improves {
                best.insert(next.clone(), (total, candidate.clone()));
                heap.push(Reverse((candidate, total.to_bits())));
            }
        }
    }

    Ok(best.remove(&query.dst).map(|(cost, label)| Route {
        nodes: label.path,
        cost,
    }))
}
