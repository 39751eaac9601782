use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use tracemap_core::{day_of, AsId, Capability, Ip, Prefix};

use crate::profiles::{classify_mobility, classify_reliability};
use crate::queues::ExperimentQueues;
use crate::store::{QuarantineEntry, StoreWriter};
use crate::types::{CoordinatorApi, Initiator, MessageEvent};
use crate::{
    AgentId, AgentProfile, Assignment, CoordinatorError, ExperimentSpec, MeasurementRecord,
    Mobility,
};

pub type AsResolver = Arc<dyn Fn(Ip) -> Option<AsId> + Send + Sync>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestCounters {
    pub acked: u64,
    pub stored: u64,
    pub parsed: u64,
    pub quarantined: u64,
}

#[derive(Clone)]
pub struct CoordinatorConfig {
    pub store_path: PathBuf,
    /// Pre-shared per-agent tokens; with None the first REGISTER pins the
    /// token for that agent id.
    pub expected_tokens: Option<BTreeMap<AgentId, String>>,
}

struct AgentState {
    rank: u32,
    token: String,
    capabilities: BTreeSet<Capability>,
    current_as: Option<AsId>,
    active_days: BTreeSet<u64>,
    prefix_tally: BTreeMap<Prefix, u64>,
    seen_ids: BTreeSet<u64>,
    last_contact_day: u64,
}

/// The management process. All mutating entry points correspond to one
/// agent-initiated message; none of them contacts an agent.
pub struct Coordinator {
    queues: ExperimentQueues,
    agents: BTreeMap<AgentId, AgentState>,
    store: StoreWriter,
    pending: VecDeque<(AgentId, String)>,
    resolved: Vec<MeasurementRecord>,
    quarantine: Vec<QuarantineEntry>,
    counters: IngestCounters,
    resolver: Option<AsResolver>,
    message_log: Vec<MessageEvent>,
    expected_tokens: Option<BTreeMap<AgentId, String>>,
    next_rank: u32,
}

impl Coordinator {
    pub fn new(config: CoordinatorConfig) -> Result<Self, CoordinatorError> {
        Ok(Coordinator {
            queues: ExperimentQueues::new(),
            agents: BTreeMap::new(),
            store: StoreWriter::open(&config.store_path)?,
            pending: VecDeque::new(),
            resolved: Vec::new(),
            quarantine: Vec::new(),
            counters: IngestCounters::default(),
            resolver: None,
            message_log: Vec::new(),
            expected_tokens: config.expected_tokens,
            next_rank: 0,
        })
    }

    /// Install the address-to-AS resolver used by ingest stage two.
    pub fn set_resolver(&mut self, resolver: AsResolver) {
        self.resolver = Some(resolver);
    }

    pub fn enqueue(&mut self, spec: ExperimentSpec) -> Result<usize, CoordinatorError> {
        self.queues.enqueue(spec)
    }

    pub fn queues_empty(&self) -> bool {
        self.queues.is_empty()
    }

    pub fn counters(&self) -> IngestCounters {
        self.counters
    }

    pub fn message_log(&self) -> &[MessageEvent] {
        &self.message_log
    }

    pub fn quarantined(&self) -> &[QuarantineEntry] {
        &self.quarantine
    }

    pub fn store_path(&self) -> PathBuf {
        self.store.path().to_path_buf()
    }

    pub fn registered_agents(&self) -> impl Iterator<Item = &AgentId> {
        self.agents.keys()
    }

    fn auth(&self, agent_id: &str, token: &str) -> Result<(), CoordinatorError> {
        let state = self
            .agents
            .get(agent_id)
            .ok_or_else(|| CoordinatorError::RegistrationRequired(agent_id.to_string()))?;
        if state.token != token {
            return Err(CoordinatorError::AuthFailed(agent_id.to_string()));
        }
        Ok(())
    }

    pub fn register(
        &mut self,
        agent_id: &str,
        token: &str,
        source_ip: Ip,
        capabilities: &BTreeSet<Capability>,
    ) -> Result<u32, CoordinatorError> {
        self.message_log.push(MessageEvent {
            initiator: Initiator::Agent(agent_id.to_string()),
            kind: "REGISTER",
        });
        if let Some(expected) = &self.expected_tokens {
            match expected.get(agent_id) {
                Some(t) if t == token => {}
                _ => return Err(CoordinatorError::AuthFailed(agent_id.to_string())),
            }
        }
        let current_as = self.resolver.as_ref().and_then(|r| r(source_ip));
        if let Some(state) = self.agents.get_mut(agent_id) {
            // re-registration refreshes capabilities and location only
            if state.token != token {
                return Err(CoordinatorError::AuthFailed(agent_id.to_string()));
            }
            state.capabilities = capabilities.clone();
            state.current_as = current_as;
            return Ok(state.rank);
        }
        self.next_rank += 1;
        self.agents.insert(
            agent_id.to_string(),
            AgentState {
                rank: self.next_rank,
                token: token.to_string(),
                capabilities: capabilities.clone(),
                current_as,
                active_days: BTreeSet::new(),
                prefix_tally: BTreeMap::new(),
                seen_ids: BTreeSet::new(),
                last_contact_day: 0,
            },
        );
        Ok(self.next_rank)
    }

    pub fn poll(
        &mut self,
        agent_id: &str,
        token: &str,
        budget: u32,
    ) -> Result<Vec<Assignment>, CoordinatorError> {
        self.message_log.push(MessageEvent {
            initiator: Initiator::Agent(agent_id.to_string()),
            kind: "POLL",
        });
        self.auth(agent_id, token)?;
        let state = self.agents.get(agent_id).expect("authenticated");
        let (agent_as, caps) = (state.current_as, state.capabilities.clone());
        Ok(self.queues.next_for(agent_id, agent_as, &caps, budget))
    }

    /// Ingest stage one: append the raw batch to the store and
    /// acknowledge. Parsing happens later; the batch is never partially
    /// lost because the append covers every line before the ack.
    pub fn report(
        &mut self,
        agent_id: &str,
        token: &str,
        lines: Vec<String>,
    ) -> Result<u64, CoordinatorError> {
        self.message_log.push(MessageEvent {
            initiator: Initiator::Agent(agent_id.to_string()),
            kind: "REPORT",
        });
        self.auth(agent_id, token)?;
        let n = lines.len() as u64;
        for line in &lines {
            self.store.append_line(line)?;
        }
        self.store.flush()?;
        self.counters.stored += n;
        for line in lines {
            self.pending.push_back((agent_id.to_string(), line));
        }
        self.counters.acked += n;
        Ok(n)
    }

    /// Ingest stage two: parse up to `limit` pending lines in arrival
    /// order, resolve source ASes, and update agent activity. Returns how
    /// many lines were consumed.
    pub fn process_pending(&mut self, limit: usize) -> usize {
        let mut done = 0;
        while done < limit {
            let Some((agent_id, line)) = self.pending.pop_front() else { break };
            done += 1;
            match MeasurementRecord::from_line(&line) {
                Ok(mut record) => {
                    self.counters.parsed += 1;
                    if record.source_as.is_none() {
                        record.source_as =
                            self.resolver.as_ref().and_then(|r| r(record.source_ip));
                    }
                    let mut fresh = true;
                    if let Some(state) = self.agents.get_mut(&agent_id) {
                        // duplicates count as parsed but never double
                        // into the profile
                        fresh = state.seen_ids.insert(record.measurement_id);
                        if fresh {
                            let day = day_of(record.timestamp);
                            state.active_days.insert(day);
                            state.last_contact_day = state.last_contact_day.max(day);
                            let p24 = Prefix::containing(record.source_ip, 24);
                            *state.prefix_tally.entry(p24).or_default() += 1;
                        }
                    }
                    if fresh {
                        self.resolved.push(record);
                    }
                }
                Err(e) => {
                    self.counters.quarantined += 1;
                    self.quarantine.push(QuarantineEntry {
                        line_number: 0,
                        reason: e.to_string(),
                        raw: line,
                    });
                }
            }
        }
        done
    }

    pub fn drain_pending(&mut self) -> usize {
        self.process_pending(usize::MAX)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Hand the parsed, source-AS-resolved records to the next pipeline
    /// stage. Duplicate measurement ids were already dropped.
    pub fn take_resolved(&mut self) -> Vec<MeasurementRecord> {
        std::mem::take(&mut self.resolved)
    }

    /// Current profile of an agent, derived from everything parsed so
    /// far. Reliability windows end at the agent's most recent active day.
    pub fn profile(&self, agent_id: &str) -> Option<AgentProfile> {
        let state = self.agents.get(agent_id)?;
        let current_day = state.active_days.iter().next_back().copied().unwrap_or(0);
        let (daily, weekly) = classify_reliability(&state.active_days, current_day);
        let (mobility, top_prefixes) = if state.prefix_tally.is_empty() {
            (Mobility::Stationary, Vec::new())
        } else {
            classify_mobility(&state.prefix_tally)
        };
        Some(AgentProfile {
            agent_id: agent_id.to_string(),
            rank: state.rank,
            daily_reliable: daily,
            weekly_reliable: weekly,
            mobility,
            top_prefixes,
            capabilities: state.capabilities.clone(),
        })
    }

    /// Drop per-agent queues for agents whose last parsed activity is
    /// older than `idle_horizon_days` before `now_day`.
    pub fn expire_idle_agents(&mut self, now_day: u64, idle_horizon_days: u64) -> usize {
        let agents = &self.agents;
        self.queues.expire_agent_queues(|id| {
            agents
                .get(id)
                .map(|s| s.last_contact_day + idle_horizon_days < now_day)
                .unwrap_or(false)
        })
    }
}

/// In-process handle implementing the agent-facing API on a shared
/// coordinator.
#[derive(Clone)]
pub struct LocalHandle(pub Arc<Mutex<Coordinator>>);

impl CoordinatorApi for LocalHandle {
    fn register(
        &mut self,
        agent_id: &str,
        token: &str,
        source_ip: Ip,
        capabilities: &BTreeSet<Capability>,
    ) -> Result<u32, CoordinatorError> {
        self.0
            .lock()
            .unwrap()
            .register(agent_id, token, source_ip, capabilities)
    }

    fn poll(
        &mut self,
        agent_id: &str,
        token: &str,
        budget: u32,
    ) -> Result<Vec<Assignment>, CoordinatorError> {
        self.0.lock().unwrap().poll(agent_id, token, budget)
    }

    fn report(
        &mut self,
        agent_id: &str,
        token: &str,
        lines: Vec<String>,
    ) -> Result<u64, CoordinatorError> {
        self.0.lock().unwrap().report(agent_id, token, lines)
    }
}
