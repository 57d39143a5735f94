//! Static undirected topology of alive nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::battery::BatteryState;
use crate::error::{invalid, Error, Result};
use crate::onoff::{NodeState, OnOffParams};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Physical state of one node as tracked by the scenario runner.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub battery: BatteryState,
    pub activity: OnOffParams,
    pub state: NodeState,
}

impl NodeRecord {
    /// Alive while the SOD stays below `death_threshold`.
    pub fn is_alive(&self, death_threshold: f64) -> bool {
        self.battery.sod() < death_threshold
    }
}

/// Undirected links between alive nodes. Removing a node drops its links.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkGraph {
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl NetworkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from node names and links.
    pub fn from_links<'a>(
        nodes: impl IntoIterator<Item = &'a str>,
        links: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut graph = Self::new();
        for n in nodes {
            graph.add_node(NodeId::from(n))?;
        }
        for (a, b) in links {
            graph.add_link(&NodeId::from(a), &NodeId::from(b))?;
        }
        Ok(graph)
    }

    pub fn add_node(&mut self, id: NodeId) -> Result<()> {
        if id.as_str().is_empty() {
            return Err(invalid("node", "id must not be empty"));
        }
        if self.adjacency.contains_key(&id) {
            return Err(invalid("node", format!("duplicate id `{id}`")));
        }
        self.adjacency.insert(id, BTreeSet::new());
        Ok(())
    }

    pub fn add_link(&mut self, a: &NodeId, b: &NodeId) -> Result<()> {
        if a == b {
            return Err(invalid("link", format!("self-link on `{a}`")));
        }
        for id in [a, b] {
            if !self.adjacency.contains_key(id) {
                return Err(Error::UnknownNode(id.to_string()));
            }
        }
        self.adjacency.get_mut(a).expect("checked").insert(b.clone());
        self.adjacency.get_mut(b).expect("checked").insert(a.clone());
        Ok(())
    }

    /// Removes a node and every link touching it.
    pub fn remove_node(&mut self, id: &NodeId) -> bool {
        let Some(neighbors) = self.adjacency.remove(id) else {
            return false;
        };
        for n in neighbors {
            if let Some(set) = self.adjacency.get_mut(&n) {
                set.remove(id);
            }
        }
        true
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.adjacency.contains_key(id)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.adjacency.keys()
    }

    /// Neighbors in ascending id order.
    pub fn neighbors(&self, id: &NodeId) -> impl Iterator<Item = &NodeId> {
        self.adjacency.get(id).into_iter().flatten()
    }

    /// Each undirected link once, as `(smaller, larger)`.
    pub fn links(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.adjacency
            .iter()
            .flat_map(|(a, set)| set.iter().filter(move |b| a < *b).map(move |b| (a, b)))
    }
}
