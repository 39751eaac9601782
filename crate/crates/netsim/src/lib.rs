//! Deterministic simulated internet.
//!
//! A [`GroundTruthTopology`] holds the AS relationship graph (customer-provider
//! and peer-peer edges), per-AS routers with their interfaces, and prefix
//! assignments. Routing follows the valley-free policy shape with
//! customer > peer > provider route preference, so links between peripheral
//! peers are invisible to BGP collection at distant vantage points while
//! remaining traversable by probes sourced inside either peer.
//!
//! Everything is a pure function of (topology, inputs): the topology is
//! immutable after generation and identical seeds reproduce identical
//! topologies byte for byte.

mod error;
mod generate;
mod prefixes;
mod probe;
mod route;
mod topology;

pub use error::NetsimError;
pub use generate::{generate_topology, two_stub_fixture};
pub use prefixes::{whois_directory, PrefixTable};
pub use probe::{hop_distance, ping, traceroute, Hop, PingResult, ProbeKind, TraceResult};
pub use route::{bgp_collect, route, RouteTables};
pub use topology::{
    AsRecord, BorderLink, GenParams, GroundTruthTopology, IntraLink, Relation, RouterId,
    RouterRecord, Tier,
};
