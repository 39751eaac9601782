//! Turns the measurement store into topology:
//!
//! - the IP graph, straight from adjacent traceroute hops, with silent
//!   hops kept as anonymous nodes named by their responding neighbors and
//!   a hop index;
//! - the router graph, by merging interface aliases discovered through
//!   probe/response address coupling on pings;
//! - the AS graph, by two-tier address resolution (longest prefix match,
//!   then a registry directory) with a minimum-measurement edge filter.
//!
//! Plus discovery attribution (which agent found each AS edge, and when)
//! and vantage-count ablation over the same store.

mod alias;
mod discovery;
mod graphs;
mod prefix_db;

pub use alias::{alias_resolve, AliasSets};
pub use discovery::{discovery_log, vantage_ablation, AblationPoint, DiscoveryEntry, DiscoveryLog};
pub use graphs::{build_as_graph, build_ip_graph, build_router_graph, AsGraphOutput, ResolutionStats};
pub use prefix_db::{resolve_as, PrefixDb, Resolution, WhoisDirectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("ablation needs 1 <= k <= {available} source ASes, got {k}")]
    BadAblationSize { k: usize, available: usize },
    #[error("expected an {expected}-level graph")]
    WrongGraphLevel { expected: &'static str },
}
