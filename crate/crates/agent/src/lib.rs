//! The measurement agent. Pulls scripts from the coordinator, executes
//! them on the script interpreter with probe commands bound to the
//! simulated network, and reports result batches. Every probe first takes
//! a token from a rate bucket sized so the politeness bound (at most
//! `rate_limit` probes in any sliding simulated minute) holds exactly.

mod bucket;
mod config;
mod fleet;
mod runtime;

pub use bucket::TokenBucket;
pub use config::AgentConfig;
pub use fleet::{build_fleet, parse_placement, place_agents, run_fleet, FleetOutcome};
pub use runtime::{Agent, AgentError, CycleOutcome, ProbeLogEntry};
