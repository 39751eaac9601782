use std::cell::RefCell;
use std::rc::Rc;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use tracemap_coordinator::{Assignment, CoordinatorApi, CoordinatorError, MeasurementRecord, Payload};
use tracemap_core::{Capability, Ip, Timestamp};
use tracemap_netsim::{hop_distance, ping, traceroute, GroundTruthTopology, ProbeKind};
use tracemap_penny::{execute, CommandRegistry, ExecOptions, PennyError, Value, VirtualClock};

use crate::{AgentConfig, TokenBucket};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("agent must register before running cycles")]
    NotRegistered,
    #[error(transparent)]
    Coordinator(#[from] CoordinatorError),
    #[error("assigned script failed to parse: {0}")]
    Script(#[from] PennyError),
}

/// One probe emission, kept for politeness audits.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeLogEntry {
    pub timestamp: Timestamp,
    pub source: Ip,
    pub command: &'static str,
    pub target: Ip,
    pub experiment_id: String,
}

#[derive(Debug, Default)]
pub struct CycleOutcome {
    pub assignments_run: usize,
    pub records_reported: u64,
    pub batches: usize,
    pub script_errors: Vec<(String, String)>,
}

struct ProbeShared {
    bucket: TokenBucket,
    rank: u32,
    seq: u64,
    records: Vec<MeasurementRecord>,
    probe_log: Vec<ProbeLogEntry>,
    experiment_id: String,
}

/// A single measurement agent bound to one simulated host. The agent owns
/// its virtual clock; all its probes and waits advance that clock only.
pub struct Agent {
    config: Arc<AgentConfig>,
    topo: Arc<GroundTruthTopology>,
    clock: VirtualClock,
    rng: ChaCha8Rng,
    rank: Option<u32>,
    shared: Rc<RefCell<ProbeShared>>,
}

impl Agent {
    pub fn new(config: AgentConfig, topo: Arc<GroundTruthTopology>) -> Self {
        let clock = VirtualClock::new(config.start_time, config.local_offset);
        let bucket = TokenBucket::per_minute(config.rate_limit_per_min, config.start_time);
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x61_67_65_6e_74);
        Agent {
            shared: Rc::new(RefCell::new(ProbeShared {
                bucket,
                rank: 0,
                seq: 0,
                records: Vec::new(),
                probe_log: Vec::new(),
                experiment_id: String::new(),
            })),
            config: Arc::new(config),
            topo,
            clock,
            rng,
            rank: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.config.agent_id
    }

    pub fn rank(&self) -> Option<u32> {
        self.rank
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn probe_log(&self) -> Vec<ProbeLogEntry> {
        self.shared.borrow().probe_log.clone()
    }

    pub fn register(&mut self, api: &mut dyn CoordinatorApi) -> Result<u32, AgentError> {
        let rank = api.register(
            &self.config.agent_id,
            &self.config.token,
            self.config.home_interface,
            &self.config.capabilities,
        )?;
        self.rank = Some(rank);
        self.shared.borrow_mut().rank = rank;
        Ok(rank)
    }

    /// Command registry bound to this agent's probes. Commands whose
    /// capability the agent lacks are not registered at all, so scripts
    /// requiring them fail fast at dispatch.
    pub fn probe_commands(&self) -> CommandRegistry {
        let mut registry = CommandRegistry::new();
        let commands: [(&'static str, Capability, ProbeKind, bool); 4] = [
            ("Ping", Capability::IcmpPing, ProbeKind::Icmp, false),
            ("UdpPing", Capability::UdpPing, ProbeKind::Udp, false),
            ("Traceroute", Capability::IcmpTraceroute, ProbeKind::Icmp, true),
            ("UdpTraceroute", Capability::UdpTraceroute, ProbeKind::Udp, true),
        ];
        for (name, cap, kind, is_trace) in commands {
            if !self.config.capabilities.contains(&cap) {
                continue;
            }
            let topo = self.topo.clone();
            let shared = self.shared.clone();
            let config = self.config.clone();
            registry
                .register(
                    name,
                    1,
                    Some(cap),
                    self.config.probe_cost_secs,
                    Box::new(move |ctx, args| {
                        let target = args[0].as_ip()?;
                        let mut sh = shared.borrow_mut();
                        sh.bucket.acquire(ctx.clock);
                        let now = ctx.clock.now();
                        let source = config.interface_at(now);
                        let probe_err =
                            |e: tracemap_netsim::NetsimError| PennyError::Type(e.to_string());
                        let (payload, value) = if is_trace {
                            let res = traceroute(&topo, source, target, kind).map_err(probe_err)?;
                            let hops = res.hops.len() as i64;
                            (Payload::Trace(res), Value::int(hops))
                        } else {
                            let res = ping(&topo, source, target, kind).map_err(probe_err)?;
                            // synthetic RTT: hop count x 10ms plus jitter,
                            // -1 for silence
                            let rtt = match res.responder {
                                Some(_) => {
                                    let hops =
                                        hop_distance(&topo, source, target).unwrap_or(0) as i64;
                                    hops * 10 + ctx.rng.gen_range(0..3)
                                }
                                None => -1,
                            };
                            (Payload::Ping(res), Value::int(rtt))
                        };
                        sh.seq += 1;
                        let record = MeasurementRecord {
                            measurement_id: ((sh.rank as u64) << 32) | sh.seq,
                            agent_id: config.agent_id.clone(),
                            agent_rank: sh.rank,
                            source_ip: source,
                            source_as: None,
                            timestamp: now,
                            experiment_id: sh.experiment_id.clone(),
                            payload,
                        };
                        sh.records.push(record);
                        let entry = ProbeLogEntry {
                            timestamp: now,
                            source,
                            command: name,
                            target,
                            experiment_id: sh.experiment_id.clone(),
                        };
                        sh.probe_log.push(entry);
                        Ok(value)
                    }),
                )
                .expect("probe command names are distinct");
        }
        registry
    }

    fn poll_with_backoff(
        &mut self,
        api: &mut dyn CoordinatorApi,
    ) -> Result<Vec<Assignment>, AgentError> {
        let mut attempt: u32 = 0;
        loop {
            match api.poll(
                &self.config.agent_id,
                &self.config.token,
                self.config.poll_budget,
            ) {
                Ok(assignments) => return Ok(assignments),
                Err(e) => {
                    if attempt >= 5 {
                        return Err(e.into());
                    }
                    // exponential backoff, factor capped at 16 intervals,
                    // with seeded jitter; no probe runs while unassigned
                    let factor = (1u64 << attempt).min(16);
                    let base = self.config.poll_interval_secs * factor;
                    let jitter = self.rng.gen_range(0..=self.config.poll_interval_secs / 2);
                    self.clock.advance(base + jitter);
                    attempt += 1;
                }
            }
        }
    }

    /// One poll/execute/report cycle. Every assigned script runs on the
    /// interpreter with this agent's probe commands; results flush in
    /// batches capped at `batch_size`, and always at script completion.
    pub fn run_cycle(&mut self, api: &mut dyn CoordinatorApi) -> Result<CycleOutcome, AgentError> {
        if self.rank.is_none() {
            return Err(AgentError::NotRegistered);
        }
        let assignments = self.poll_with_backoff(api)?;
        let mut outcome = CycleOutcome::default();
        for assignment in assignments {
            let script = tracemap_penny::parse(&assignment.script)?;
            self.shared.borrow_mut().experiment_id = assignment.experiment_id.clone();
            let mut registry = self.probe_commands();
            let opts = ExecOptions {
                capabilities: self.config.capabilities.clone(),
                seed: self.config.seed ^ self.shared.borrow().seq,
                ..ExecOptions::default()
            };
            if let Err(e) = execute(&script, &mut registry, &mut self.clock, &opts) {
                outcome
                    .script_errors
                    .push((assignment.experiment_id.clone(), e.to_string()));
            }
            outcome.assignments_run += 1;
            self.flush(api, &mut outcome)?;
        }
        Ok(outcome)
    }

    fn flush(
        &mut self,
        api: &mut dyn CoordinatorApi,
        outcome: &mut CycleOutcome,
    ) -> Result<(), AgentError> {
        let records = std::mem::take(&mut self.shared.borrow_mut().records);
        for chunk in records.chunks(self.config.batch_size.max(1)) {
            let lines: Vec<String> = chunk.iter().map(MeasurementRecord::to_line).collect();
            let acked = api.report(&self.config.agent_id, &self.config.token, lines)?;
            outcome.records_reported += acked;
            outcome.batches += 1;
        }
        Ok(())
    }
}
