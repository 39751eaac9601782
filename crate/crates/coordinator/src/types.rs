use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use tracemap_core::{AsId, Capability, Ip, Prefix, Timestamp};
use tracemap_netsim::{PingResult, TraceResult};

use crate::CoordinatorError;

pub type AgentId = String;

/// Which queue an experiment sits in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    Global,
    PerAs(AsId),
    PerAgent(AgentId),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub scope: Scope,
    pub script: String,
    pub required_caps: BTreeSet<Capability>,
    /// How many distinct agents should run this experiment.
    pub replication: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub experiment_id: String,
    pub script: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mobility {
    Stationary,
    BiHomed,
    Mobile,
}

/// What the coordinator remembers about an agent: nothing but rank,
/// reliability, mobility, top source prefixes, and capabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: AgentId,
    /// Join-order index, 1-based: the 38th agent to register has rank 38.
    pub rank: u32,
    pub daily_reliable: bool,
    pub weekly_reliable: bool,
    pub mobility: Mobility,
    /// Up to two /24s, by descending record count.
    pub top_prefixes: Vec<(Prefix, u64)>,
    pub capabilities: BTreeSet<Capability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Trace(TraceResult),
    Ping(PingResult),
}

/// One measurement as stored, one per line. `source_as` is empty until
/// ingest stage two resolves it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub measurement_id: u64,
    pub agent_id: AgentId,
    pub agent_rank: u32,
    pub source_ip: Ip,
    pub source_as: Option<AsId>,
    pub timestamp: Timestamp,
    pub experiment_id: String,
    pub payload: Payload,
}

impl MeasurementRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Initiator {
    Agent(AgentId),
    Coordinator,
}

/// Audit entry for the pull-only invariant: every message the system
/// handles is recorded with its initiator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageEvent {
    pub initiator: Initiator,
    pub kind: &'static str,
}

/// The agent-facing surface, shared by the in-process handle and the
/// socket client so agents run identically in either mode.
pub trait CoordinatorApi {
    fn register(
        &mut self,
        agent_id: &str,
        token: &str,
        source_ip: Ip,
        capabilities: &BTreeSet<Capability>,
    ) -> Result<u32, CoordinatorError>;

    fn poll(
        &mut self,
        agent_id: &str,
        token: &str,
        budget: u32,
    ) -> Result<Vec<Assignment>, CoordinatorError>;

    fn report(
        &mut self,
        agent_id: &str,
        token: &str,
        lines: Vec<String>,
    ) -> Result<u64, CoordinatorError>;
}
