use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use tracemap_agent::{Agent, AgentConfig};
use tracemap_coordinator::{
    classify_mobility, read_store, Coordinator, CoordinatorApi, CoordinatorConfig,
    CoordinatorError, ExperimentSpec, Payload, Scope,
};
use tracemap_core::{Capability, Ip, Prefix};
use tracemap_netsim::{generate_topology, GenParams, GroundTruthTopology};

fn topo() -> Arc<GroundTruthTopology> {
    let params = GenParams {
        n_core: 3,
        n_middle: 4,
        n_stub: 12,
        peer_link_fraction: 0.3,
        n_regions: 2,
        ..GenParams::default()
    };
    Arc::new(generate_topology(&params, 42).unwrap())
}

struct Harness {
    _dir: tempfile::TempDir,
    handle: tracemap_coordinator::LocalHandle,
    coordinator: Arc<Mutex<Coordinator>>,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let coordinator = Arc::new(Mutex::new(
        Coordinator::new(CoordinatorConfig {
            store_path: dir.path().join("store.log"),
            expected_tokens: None,
        })
        .unwrap(),
    ));
    Harness {
        _dir: dir,
        handle: tracemap_coordinator::LocalHandle(coordinator.clone()),
        coordinator,
    }
}

fn global_spec(id: &str, script: String) -> ExperimentSpec {
    ExperimentSpec {
        id: id.into(),
        scope: Scope::Global,
        script,
        required_caps: BTreeSet::new(),
        replication: 1,
    }
}

fn ping_sweep_script(targets: &[Ip]) -> String {
    let mut s = String::new();
    for t in targets {
        s.push_str(&format!("Ping({t})\n"));
    }
    s.push_str("return 0\n");
    s
}

#[test]
fn rate_limit_holds_on_a_sliding_window() {
    let topo = topo();
    let h = harness();
    let targets: Vec<Ip> = topo.all_interfaces().into_iter().take(100).collect();
    h.coordinator
        .lock()
        .unwrap()
        .enqueue(global_spec("sweep", ping_sweep_script(&targets)))
        .unwrap();

    let mut config = AgentConfig::basic("a1", topo.ases[0].routers[0].default_interface);
    config.rate_limit_per_min = 10;
    let mut agent = Agent::new(config, topo);
    let mut api = h.handle.clone();
    agent.register(&mut api).unwrap();
    let out = agent.run_cycle(&mut api).unwrap();
    assert_eq!(out.records_reported, 100);

    let log = agent.probe_log();
    assert_eq!(log.len(), 100);
    // politeness: no half-open simulated minute holds more than 10 probes
    for e in &log {
        let in_window = log
            .iter()
            .filter(|f| f.timestamp >= e.timestamp && f.timestamp < e.timestamp + 60)
            .count();
        assert!(in_window <= 10, "window at t={} holds {in_window}", e.timestamp);
    }
    // 100 probes at 10 per minute keep the agent busy at least 10 minutes
    let elapsed = log.last().unwrap().timestamp - log[0].timestamp;
    assert!(elapsed >= 9 * 60 + 54, "elapsed only {elapsed}s");

    // a within-budget burst fits one minute: first 10 probes span < 60s
    assert!(log[9].timestamp - log[0].timestamp < 60);
}

#[test]
fn per_script_probe_order_is_preserved() {
    let topo = topo();
    let h = harness();
    let ifaces = topo.all_interfaces();
    let first: Vec<Ip> = ifaces.iter().copied().take(5).collect();
    let second: Vec<Ip> = ifaces.iter().copied().skip(5).take(5).collect();
    {
        let mut c = h.coordinator.lock().unwrap();
        c.enqueue(global_spec("s1", ping_sweep_script(&first))).unwrap();
        c.enqueue(global_spec("s2", ping_sweep_script(&second))).unwrap();
    }
    let mut agent = Agent::new(
        AgentConfig::basic("a1", topo.ases[0].routers[0].default_interface),
        topo,
    );
    let mut api = h.handle.clone();
    agent.register(&mut api).unwrap();
    agent.run_cycle(&mut api).unwrap();

    let log = agent.probe_log();
    let proj = |exp: &str| -> Vec<Ip> {
        log.iter()
            .filter(|e| e.experiment_id == exp)
            .map(|e| e.target)
            .collect()
    };
    assert_eq!(proj("s1"), first);
    assert_eq!(proj("s2"), second);
}

#[test]
fn capability_missing_commands_are_not_registered() {
    let topo = topo();
    let mut config = AgentConfig::basic("a1", topo.ases[0].routers[0].default_interface);
    config.capabilities = BTreeSet::from([Capability::IcmpPing, Capability::IcmpTraceroute]);
    let agent = Agent::new(config, topo);
    let registry = agent.probe_commands();
    assert!(registry.contains("Ping"));
    assert!(registry.contains("Traceroute"));
    assert!(!registry.contains("UdpPing"));
    assert!(!registry.contains("UdpTraceroute"));
}

#[test]
fn negative_ping_results_are_still_reported() {
    let topo = topo();
    let h = harness();
    h.coordinator
        .lock()
        .unwrap()
        .enqueue(global_spec("nx", "Ping(203.0.113.1)\nreturn 0\n".into()))
        .unwrap();
    let mut agent = Agent::new(
        AgentConfig::basic("a1", topo.ases[0].routers[0].default_interface),
        topo,
    );
    let mut api = h.handle.clone();
    agent.register(&mut api).unwrap();
    let out = agent.run_cycle(&mut api).unwrap();
    assert_eq!(out.records_reported, 1);

    let store_path = h.coordinator.lock().unwrap().store_path();
    let read = read_store(&store_path).unwrap();
    let Payload::Ping(p) = &read.records[0].payload else {
        panic!("expected ping payload")
    };
    assert_eq!(p.responder, None);
}

#[test]
fn traceroute_records_project_from_the_home_as() {
    let topo = topo();
    let h = harness();
    let dst = topo.ases.last().unwrap().routers[0].default_interface;
    h.coordinator
        .lock()
        .unwrap()
        .enqueue(global_spec("tr", format!("Traceroute({dst})\nreturn 0\n")))
        .unwrap();
    let home_as = topo.ases[0].id;
    let mut agent = Agent::new(
        AgentConfig::basic("a1", topo.ases[0].routers[0].default_interface),
        topo.clone(),
    );
    let mut api = h.handle.clone();
    agent.register(&mut api).unwrap();
    agent.run_cycle(&mut api).unwrap();

    let store_path = h.coordinator.lock().unwrap().store_path();
    let read = read_store(&store_path).unwrap();
    let rec = &read.records[0];
    let Payload::Trace(trace) = &rec.payload else { panic!() };
    // source plus hops, AS-projected with duplicates collapsed, starts at
    // the agent's AS
    let mut projection = vec![topo.find_iface(rec.source_ip).unwrap().0];
    for hop in &trace.hops {
        if let tracemap_netsim::Hop::Known(ip) = hop {
            let asid = topo.find_iface(*ip).unwrap().0;
            if projection.last() != Some(&asid) {
                projection.push(asid);
            }
        }
    }
    assert_eq!(projection[0], home_as);
    assert!(projection.len() >= 2);
}

#[test]
fn mobility_schedule_reaches_the_profile() {
    let topo = topo();
    let h = harness();
    let targets: Vec<Ip> = topo.all_interfaces().into_iter().take(20).collect();
    h.coordinator
        .lock()
        .unwrap()
        .enqueue(global_spec("sweep", ping_sweep_script(&targets)))
        .unwrap();

    let home = topo.ases[0].routers[0].default_interface;
    let away = topo.ases[1].routers[0].default_interface;
    let mut config = AgentConfig::basic("roamer", home);
    config.rate_limit_per_min = 10;
    // switch interfaces halfway through the sweep
    config.roaming = vec![(9 * 6, away)];
    let mut agent = Agent::new(config, topo.clone());
    let mut api = h.handle.clone();
    agent.register(&mut api).unwrap();
    agent.run_cycle(&mut api).unwrap();

    // records carry the interface active at emission time
    let store_path = h.coordinator.lock().unwrap().store_path();
    let read = read_store(&store_path).unwrap();
    let mut tally = std::collections::BTreeMap::new();
    for r in &read.records {
        *tally.entry(Prefix::containing(r.source_ip, 24)).or_insert(0u64) += 1;
    }
    let (mobility, top) = classify_mobility(&tally);
    assert_eq!(mobility, tracemap_coordinator::Mobility::BiHomed);
    assert_eq!(top.len(), 2);
    assert!(read.records.iter().any(|r| r.source_ip == home));
    assert!(read.records.iter().any(|r| r.source_ip == away));
}

/// Coordinator double that fails the first N polls.
struct Flaky {
    inner: tracemap_coordinator::LocalHandle,
    failures_left: u32,
    polls_seen: u32,
}

impl CoordinatorApi for Flaky {
    fn register(
        &mut self,
        agent_id: &str,
        token: &str,
        source_ip: Ip,
        capabilities: &BTreeSet<Capability>,
    ) -> Result<u32, CoordinatorError> {
        self.inner.register(agent_id, token, source_ip, capabilities)
    }

    fn poll(
        &mut self,
        agent_id: &str,
        token: &str,
        budget: u32,
    ) -> Result<Vec<tracemap_coordinator::Assignment>, CoordinatorError> {
        self.polls_seen += 1;
        if self.failures_left > 0 {
            self.failures_left -= 1;
            return Err(CoordinatorError::Protocol("connection refused".into()));
        }
        self.inner.poll(agent_id, token, budget)
    }

    fn report(
        &mut self,
        agent_id: &str,
        token: &str,
        lines: Vec<String>,
    ) -> Result<u64, CoordinatorError> {
        self.inner.report(agent_id, token, lines)
    }
}

#[test]
fn unreachable_coordinator_backs_off_without_probing() {
    let topo = topo();
    let h = harness();
    h.coordinator
        .lock()
        .unwrap()
        .enqueue(global_spec("one", "Ping(10.1.0.1)\nreturn 0\n".into()))
        .unwrap();
    let mut agent = Agent::new(
        AgentConfig::basic("a1", topo.ases[0].routers[0].default_interface),
        topo,
    );
    let mut api = Flaky {
        inner: h.handle.clone(),
        failures_left: 3,
        polls_seen: 0,
    };
    agent.register(&mut api).unwrap();
    let before = agent.now();
    let out = agent.run_cycle(&mut api).unwrap();
    assert_eq!(out.assignments_run, 1, "work resumed after the outage");
    // three failed polls back off 1x, 2x, 4x the poll interval minimum
    assert!(agent.now() - before >= 7 * 60, "no backoff happened");
    assert_eq!(api.polls_seen, 4);
    // no probe ran while unassigned: every probe followed the last retry
    assert!(agent.probe_log().iter().all(|e| e.timestamp >= before));
}
