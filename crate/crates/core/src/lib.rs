//! Stochastic battery discharge and energy-aware routing for ad hoc
//! network nodes.
//!
//! Nodes alternate between ON and OFF according to a two-state
//! continuous-time Markov chain ([`onoff`]). The total ON time over a
//! horizon has a closed-form approximate law ([`occupancy`]) and an exact
//! law computed by dynamic programming ([`occupation`]). Batteries discharge
//! only while ON ([`battery`]). Residual energy is advertised through the
//! send instant of HELLO beacons and feeds an energy-aware route selection
//! ([`routing`]), tied together by an event-driven scenario runner
//! ([`scenario`]).

pub mod battery;
pub mod error;
pub mod occupancy;
pub mod occupation;
pub mod onoff;
pub mod quadrature;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod stats;

pub use battery::{
    discharge_current, expected_consumed_fraction, predict_lifetime, sod_continuous, sod_modulated,
    BatteryState, ConsumptionEstimate, Gassing, SodModel,
};
pub use error::{Error, Result};
pub use occupancy::{
    density_curve, mean_on_time, normalization_constant, on_time_cdf, on_time_density,
    DensityCurve, OccupancySpec,
};
pub use occupation::{exact_occupation_distribution, OccupationLaw};
pub use onoff::{
    sample_trajectory, sojourn_survival, total_on_time, NodeState, OnOffParams, Segment, Trajectory,
};
pub use routing::{
    collision_probability, decode_energy, encode_delay, select_route, update_energy_table,
    EnergyTable, HelloCodec, NetworkGraph, NodeId, NodeRecord, Route, RouteQuery,
};
pub use scenario::{run_scenario, ScenarioConfig, ScenarioOutcome};

/// Version string written into artifact headers.
pub const TOOL_VERSION: &str = concat!("manet-energy ", env!("CARGO_PKG_VERSION"));
