//! Per-node view of neighbor residual energy.

use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::routing::codec::{decode_energy, HelloCodec};
use crate::routing::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub energy: f64,
    pub timestamp: f64,
}

/// Latest decoded energy for each neighbor. Records older than the
/// staleness horizon read as absent.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    staleness: f64,
    records: BTreeMap<NodeId, EnergyRecord>,
}

impl EnergyTable {
    /// `staleness` may be infinite to keep records forever.
    pub fn new(staleness: f64) -> Result<Self> {
        if staleness.is_nan() || staleness <= 0.0 {
            return Err(invalid("staleness", format!("must be > 0, got {staleness}")));
        }
        Ok(Self {
            staleness,
            records: BTreeMap::new(),
        })
    }

    pub fn staleness(&self) -> f64 {
        self.staleness
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Raw record regardless of age.
    pub fn get(&self, neighbor: &NodeId) -> Option<&EnergyRecord> {
        self.records.get(neighbor)
    }

    pub fn is_fresh(&self, record: &EnergyRecord, now: f64) -> bool {
        now - record.timestamp <= self.staleness
    }

    /// Energy of `neighbor` if its record is no older than the horizon.
    pub fn fresh_energy(&self, neighbor: &NodeId, now: f64) -> Option<f64> {
        self.records
            .get(neighbor)
            .filter(|r| self.is_fresh(r, now))
            .map(|r| r.energy)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &EnergyRecord)> {
        self.records.iter()
    }

    /// Replaces or inserts the record for `neighbor`.
    pub fn insert(&mut self, neighbor: NodeId, energy: f64, timestamp: f64) {
        self.records.insert(neighbor, EnergyRecord { energy, timestamp });
    }

    pub fn remove(&mut self, neighbor: &NodeId) -> Option<EnergyRecord> {
        self.records.remove(neighbor)
    }
}

/// Table after decoding a HELLO from `neighbor` received with `delay`.
pub fn update_energy_table(
    table: &EnergyTable,
    neighbor: &NodeId,
    delay: f64,
    now: f64,
    codec: &HelloCodec,
) -> Result<EnergyTable> {
    let energy = decode_energy(codec, delay)?;
    let mut next = table.clone();
    next.insert(neighbor.clone(), energy, now);
    Ok(next)
}
