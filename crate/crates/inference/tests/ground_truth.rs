//! Inference checked against the simulator's ground truth: alias sets
//! must refine (and with full coverage equal) the true interface
//! partition, the AS graph must see the policy-hidden stub peer link from
//! inside, and nested vantage ablation must be monotone.

use std::collections::{BTreeMap, BTreeSet};

use tracemap_coordinator::{MeasurementRecord, Payload};
use tracemap_core::{AsId, Ip, NodeKey};
use tracemap_inference::{
    alias_resolve, build_as_graph, build_ip_graph, build_router_graph, vantage_ablation, PrefixDb,
    WhoisDirectory,
};
use tracemap_netsim::{
    bgp_collect, generate_topology, ping, traceroute, two_stub_fixture, GenParams,
    GroundTruthTopology, PrefixTable, ProbeKind, RouterId,
};

fn record(id: u64, rank: u32, ts: u64, src: Ip, src_as: AsId, payload: Payload) -> MeasurementRecord {
    MeasurementRecord {
        measurement_id: id,
        agent_id: format!("a{rank}"),
        agent_rank: rank,
        source_ip: src,
        source_as: Some(src_as),
        timestamp: ts,
        experiment_id: "e".into(),
        payload,
    }
}

/// Ping every interface from a few vantage ASes, with no blocking.
fn full_ping_survey(topo: &GroundTruthTopology, vantages: &[AsId]) -> Vec<MeasurementRecord> {
    let mut records = Vec::new();
    let mut id = 0;
    for (rank0, &v) in vantages.iter().enumerate() {
        let src = topo.as_record(v).unwrap().routers[0].default_interface;
        for target in topo.all_interfaces() {
            let res = ping(topo, src, target, ProbeKind::Udp).unwrap();
            id += 1;
            records.push(record(
                id,
                rank0 as u32 + 1,
                id,
                src,
                v,
                Payload::Ping(res),
            ));
        }
    }
    records
}

#[test]
fn full_survey_recovers_the_exact_interface_partition() {
    let params = GenParams {
        n_core: 3,
        n_middle: 3,
        n_stub: 10,
        peer_link_fraction: 0.3,
        n_regions: 2,
        ..GenParams::default()
    };
    let topo = generate_topology(&params, 11).unwrap();
    let records = full_ping_survey(&topo, &[AsId(1), AsId(7), AsId(12)]);
    let mut aliases = alias_resolve(records.iter());

    // ground truth partition: interfaces grouped by owning router
    let mut truth: BTreeMap<(AsId, RouterId), BTreeSet<Ip>> = BTreeMap::new();
    for iface in topo.all_interfaces() {
        let owner = topo.find_iface(iface).unwrap();
        truth.entry(owner).or_default().insert(iface);
    }
    let inferred = aliases.sets();
    assert_eq!(inferred.len(), truth.len());
    let truth_sets: BTreeSet<BTreeSet<Ip>> = truth.into_values().collect();
    let inferred_sets: BTreeSet<BTreeSet<Ip>> = inferred.into_values().collect();
    assert_eq!(inferred_sets, truth_sets);
}

#[test]
fn partial_survey_refines_the_true_partition() {
    let params = GenParams {
        n_core: 3,
        n_middle: 2,
        n_stub: 6,
        ..GenParams::default()
    };
    let topo = generate_topology(&params, 13).unwrap();
    // survey only every third interface: merges must still stay inside
    // one ground-truth router
    let src = topo.ases[0].routers[0].default_interface;
    let mut records = Vec::new();
    for (i, target) in topo.all_interfaces().into_iter().enumerate() {
        if i % 3 != 0 {
            continue;
        }
        let res = ping(&topo, src, target, ProbeKind::Udp).unwrap();
        records.push(record(i as u64, 1, i as u64, src, AsId(1), Payload::Ping(res)));
    }
    let mut aliases = alias_resolve(records.iter());
    for (_, members) in aliases.sets() {
        let owners: BTreeSet<_> = members
            .iter()
            .map(|ip| topo.find_iface(*ip).unwrap())
            .collect();
        assert_eq!(owners.len(), 1, "alias set crossed a router: {members:?}");
    }
}

#[test]
fn router_graph_shrinks_but_never_grows() {
    let params = GenParams {
        n_core: 3,
        n_middle: 3,
        n_stub: 8,
        peer_link_fraction: 0.2,
        ..GenParams::default()
    };
    let topo = generate_topology(&params, 17).unwrap();

    // traceroute full mesh of default interfaces from three vantages
    let mut records = Vec::new();
    let mut id = 0;
    for &v in &[AsId(1), AsId(5), AsId(10)] {
        let src = topo.as_record(v).unwrap().routers[0].default_interface;
        for rec in &topo.ases {
            for router in &rec.routers {
                let res = traceroute(&topo, src, router.default_interface, ProbeKind::Icmp).unwrap();
                id += 1;
                records.push(record(id, 1, id, src, v, Payload::Trace(res)));
            }
        }
    }
    records.extend(full_ping_survey(&topo, &[AsId(1), AsId(5), AsId(10)]));

    let ip_graph = build_ip_graph(records.iter());
    let mut aliases = alias_resolve(records.iter());
    let router_graph = build_router_graph(&ip_graph, &mut aliases);

    let known_nodes = ip_graph
        .nodes()
        .filter(|n| matches!(n, NodeKey::Known(_)))
        .count();
    let known_edges = ip_graph
        .edges()
        .filter(|(k, _)| {
            matches!(k.a(), NodeKey::Known(_)) && matches!(k.b(), NodeKey::Known(_))
        })
        .count();
    assert!(router_graph.node_count() <= known_nodes);
    assert!(router_graph.edge_count() <= known_edges);
    assert!(router_graph.edge_count() > 0);

    // with full alias coverage every router edge joins two true routers
    for (key, _) in router_graph.edges() {
        let (NodeKey::Router(a), NodeKey::Router(b)) = (key.a(), key.b()) else {
            panic!()
        };
        assert_ne!(
            topo.find_iface(a).unwrap(),
            topo.find_iface(b).unwrap()
        );
    }
}

#[test]
fn stub_peer_edge_seen_by_probes_but_not_by_bgp() {
    for seed in 0..5 {
        let topo = two_stub_fixture(seed);
        let (a, b) = (AsId(4), AsId(5));
        let table = PrefixTable::build(&topo);
        let db = PrefixDb::from_entries(&table.entries);
        let whois = WhoisDirectory::new();

        // an agent in stub A traces toward stub B twice
        let src = topo.as_record(a).unwrap().routers[0].default_interface;
        let dst = topo.as_record(b).unwrap().routers[0].default_interface;
        let records: Vec<MeasurementRecord> = (0..2)
            .map(|i| {
                let res = traceroute(&topo, src, dst, ProbeKind::Icmp).unwrap();
                record(i, 1, i, src, a, Payload::Trace(res))
            })
            .collect();
        let out = build_as_graph(records.iter(), &db, &whois, 2);
        assert!(
            out.graph.has_edge(NodeKey::As(a), NodeKey::As(b)),
            "seed {seed}: probes from inside must see the peer link"
        );
        for core in [AsId(1), AsId(2), AsId(3)] {
            assert!(
                !bgp_collect(&topo, core).contains(&(a, b)),
                "seed {seed}: BGP at core vantage must not"
            );
        }
    }
}

#[test]
fn nested_ablation_is_monotone_and_exhaustive_at_full_k() {
    let params = GenParams {
        n_core: 3,
        n_middle: 3,
        n_stub: 14,
        peer_link_fraction: 0.4,
        n_regions: 2,
        ..GenParams::default()
    };
    let topo = generate_topology(&params, 23).unwrap();
    let table = PrefixTable::build(&topo);
    let db = PrefixDb::from_entries(&table.entries);
    let whois = WhoisDirectory::new();

    // agents in 6 ASes, each tracing to every AS representative
    let vantages: Vec<AsId> = topo.as_ids().filter(|a| a.0 % 3 == 1).collect();
    let mut records = Vec::new();
    let mut id = 0;
    for (rank0, &v) in vantages.iter().enumerate() {
        let src = topo.as_record(v).unwrap().routers[0].default_interface;
        for rec in &topo.ases {
            let dst = rec.routers[0].default_interface;
            for _ in 0..2 {
                let res = traceroute(&topo, src, dst, ProbeKind::Icmp).unwrap();
                id += 1;
                records.push(record(id, rank0 as u32 + 1, id, src, v, Payload::Trace(res)));
            }
        }
    }

    let ks: Vec<usize> = (1..=vantages.len()).collect();
    let points = vantage_ablation(&records, &ks, 8, 2, &db, &whois, 99).unwrap();
    for w in points.windows(2) {
        assert!(
            w[1].mean_edges >= w[0].mean_edges,
            "mean not monotone: {points:?}"
        );
        assert!(w[1].min_edges >= w[0].min_edges);
    }
    // k = all sources reproduces the full graph exactly, in every trial
    let full = build_as_graph(records.iter(), &db, &whois, 2).graph.edge_count();
    let last = points.last().unwrap();
    assert_eq!(last.min_edges, full);
    assert_eq!(last.max_edges, full);

    assert!(matches!(
        vantage_ablation(&records, &[0], 2, 2, &db, &whois, 1),
        Err(tracemap_inference::InferenceError::BadAblationSize { .. })
    ));
}
