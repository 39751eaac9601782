//! Central management for the measurement fleet.
//!
//! Experiments sit in three tiers of FIFO queues (whole system, per AS,
//! per agent) and are handed to agents bottom up. All communication is
//! initiated by agents: they register, poll for scripts, and report
//! result batches; the coordinator never contacts an agent. Reported
//! batches are acknowledged after a raw append to the measurement store;
//! a background stage parses them later, resolves source ASes, and keeps
//! the per-agent reliability/mobility/capability profiles current.

mod coordinator;
mod error;
mod profiles;
mod queues;
mod store;
mod types;
mod wire;

pub use coordinator::{Coordinator, CoordinatorConfig, IngestCounters, LocalHandle};
pub use error::CoordinatorError;
pub use profiles::{classify_mobility, classify_reliability};
pub use queues::ExperimentQueues;
pub use store::{read_store, QuarantineEntry, StoreReadOutcome, StoreWriter};
pub use types::{
    AgentId, AgentProfile, Assignment, CoordinatorApi, ExperimentSpec, Initiator, MessageEvent,
    MeasurementRecord, Mobility, Payload, Scope,
};
pub use wire::{serve, Message, WireClient};
