use std::collections::{BTreeMap, BTreeSet, VecDeque};

use tracemap_core::{AsId, Capability};

use crate::{AgentId, Assignment, CoordinatorError, ExperimentSpec, Scope};

#[derive(Debug)]
struct QueuedSpec {
    spec: ExperimentSpec,
    remaining: u32,
    assigned: BTreeSet<AgentId>,
}

/// Three-tier FIFO experiment queues. Delivery is bottom up: an agent's
/// own queue first, then its AS queue, then the system queue. A spec
/// stays queued until its replication count is used up, but never goes
/// to the same agent twice.
#[derive(Debug, Default)]
pub struct ExperimentQueues {
    global: VecDeque<QueuedSpec>,
    per_as: BTreeMap<AsId, VecDeque<QueuedSpec>>,
    per_agent: BTreeMap<AgentId, VecDeque<QueuedSpec>>,
}

impl ExperimentQueues {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validate and append a spec to its scope's queue, returning the
    /// queue position. Planning gets immediate feedback: a script that
    /// does not parse never enters a queue.
    pub fn enqueue(&mut self, spec: ExperimentSpec) -> Result<usize, CoordinatorError> {
        tracemap_penny::parse(&spec.script)?;
        if spec.replication == 0 {
            return Err(CoordinatorError::BadReplication);
        }
        let queued = QueuedSpec {
            remaining: spec.replication,
            assigned: BTreeSet::new(),
            spec,
        };
        let queue = match &queued.spec.scope {
            Scope::Global => &mut self.global,
            Scope::PerAs(asid) => self.per_as.entry(*asid).or_default(),
            Scope::PerAgent(agent) => self.per_agent.entry(agent.clone()).or_default(),
        };
        queue.push_back(queued);
        Ok(queue.len() - 1)
    }

    /// Fill up to `budget` assignments for an agent, bottom up, skipping
    /// specs whose capability requirements the agent fails.
    pub fn next_for(
        &mut self,
        agent_id: &str,
        agent_as: Option<AsId>,
        capabilities: &BTreeSet<Capability>,
        budget: u32,
    ) -> Vec<Assignment> {
        let mut out = Vec::new();
        let mut budget = budget as usize;

        let take = |queue: &mut VecDeque<QueuedSpec>, out: &mut Vec<Assignment>, budget: &mut usize| {
            for q in queue.iter_mut() {
                if *budget == 0 {
                    break;
                }
                if q.assigned.contains(agent_id) {
                    continue;
                }
                if !q.spec.required_caps.is_subset(capabilities) {
                    continue;
                }
                q.assigned.insert(agent_id.to_string());
                q.remaining -= 1;
                out.push(Assignment {
                    experiment_id: q.spec.id.clone(),
                    script: q.spec.script.clone(),
                });
                *budget -= 1;
            }
            queue.retain(|q| q.remaining > 0);
        };

        if let Some(queue) = self.per_agent.get_mut(agent_id) {
            take(queue, &mut out, &mut budget);
        }
        if let Some(asid) = agent_as {
            if let Some(queue) = self.per_as.get_mut(&asid) {
                take(queue, &mut out, &mut budget);
            }
        }
        take(&mut self.global, &mut out, &mut budget);
        out
    }

    /// Drop the dedicated queues of agents idle past the horizon. Policy,
    /// not protocol: per-agent work for an agent that never returns would
    /// otherwise sit forever.
    pub fn expire_agent_queues(&mut self, idle: impl Fn(&AgentId) -> bool) -> usize {
        let stale: Vec<AgentId> = self
            .per_agent
            .keys()
            .filter(|id| idle(id))
            .cloned()
            .collect();
        let mut dropped = 0;
        for id in stale {
            if let Some(q) = self.per_agent.remove(&id) {
                dropped += q.len();
            }
        }
        dropped
    }

    pub fn pending_counts(&self) -> (usize, usize, usize) {
        (
            self.per_agent.values().map(VecDeque::len).sum(),
            self.per_as.values().map(VecDeque::len).sum(),
            self.global.len(),
        )
    }

    pub fn is_empty(&self) -> bool {
        let (a, b, c) = self.pending_counts();
        a + b + c == 0
    }
}
