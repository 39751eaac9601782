//! Shared domain types for the measurement pipeline: addresses, prefixes,
//! AS identifiers, agent capabilities, and the observed-graph abstraction
//! that carries per-edge observation statistics at the IP, router, and AS
//! levels.

mod caps;
mod error;
mod graph;
mod ip;

pub use caps::Capability;
pub use error::CoreError;
pub use graph::{EdgeKey, GraphLevel, NodeKey, ObservationStats, ObservedGraph};
pub use ip::{AsId, Ip, Prefix};

/// Seconds since the simulation epoch. There is no wall-clock anywhere in
/// the pipeline; every timestamp is a virtual-clock reading.
pub type Timestamp = u64;

pub const SECONDS_PER_DAY: u64 = 86_400;

/// Day index of a timestamp, counted from the simulation epoch.
pub fn day_of(ts: Timestamp) -> u64 {
    ts / SECONDS_PER_DAY
}
