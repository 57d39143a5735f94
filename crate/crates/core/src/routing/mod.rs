//! Energy-aware neighbor tracking and route selection.
//!
//! Every node advertises its residual energy through the instant at which
//! it sends its HELLO beacon inside a period ([`codec`]). Receivers invert
//! the delay and keep per-neighbor energy records ([`table`]). Routes are
//! chosen by a least-cost search that charges each hop `1 + beta * (1 - E)`
//! and refuses to relay through nodes whose energy is low or unknown
//! ([`select`]).

pub mod codec;
pub mod graph;
pub mod select;
pub mod table;

pub use codec::{
    collision_probability, collision_probability_slots, decode_energy, encode_delay, DelayMapping,
    HelloCodec,
};
pub use graph::{NetworkGraph, NodeId, NodeRecord};
pub use select::{edge_cost, select_route, Route, RouteQuery};
pub use table::{update_energy_table, EnergyRecord, EnergyTable};
