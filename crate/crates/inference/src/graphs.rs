use std::collections::BTreeSet;

use tracemap_coordinator::{MeasurementRecord, Payload};
use tracemap_core::{AsId, EdgeKey, GraphLevel, Ip, NodeKey, ObservedGraph};
use tracemap_netsim::Hop;

use crate::prefix_db::{resolve_as, PrefixDb, Resolution, WhoisDirectory};
use crate::AliasSets;

/// IP-level graph from traceroute records: every adjacent hop pair is an
/// edge. A run of k silent hops between responding addresses P and N
/// becomes the chain of anonymous nodes (P, N, 1..k), so the same gap
/// pattern maps to the same nodes in every trace. Leading and trailing
/// silence is dropped. Records without a resolvable source AS are skipped
/// (edges carry the set of source ASes that saw them).
pub fn build_ip_graph<'a>(
    records: impl IntoIterator<Item = &'a MeasurementRecord>,
) -> ObservedGraph {
    let mut graph = ObservedGraph::new(GraphLevel::Ip);
    for r in records {
        let Payload::Trace(trace) = &r.payload else { continue };
        let Some(src_as) = r.source_as else { continue };
        let known = |h: &Hop| matches!(h, Hop::Known(_));
        let Some(first) = trace.hops.iter().position(known) else { continue };
        let last = trace.hops.iter().rposition(known).expect("some hop is known");

        let mut nodes: Vec<NodeKey> = Vec::with_capacity(last - first + 1);
        let mut gap = 0u32;
        let mut prev_known: Option<Ip> = None;
        for hop in &trace.hops[first..=last] {
            match hop {
                Hop::Known(ip) => {
                    if gap > 0 {
                        let prev = prev_known.expect("gap follows a known hop");
                        for index in 1..=gap {
                            nodes.push(NodeKey::Anonymous {
                                prev,
                                next: *ip,
                                index,
                            });
                        }
                        gap = 0;
                    }
                    nodes.push(NodeKey::Known(*ip));
                    prev_known = Some(*ip);
                }
                Hop::NoReply => gap += 1,
            }
        }

        let mut seen: BTreeSet<EdgeKey> = BTreeSet::new();
        for w in nodes.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            let key = EdgeKey::new(w[0], w[1]).expect("distinct endpoints");
            if seen.insert(key) {
                graph
                    .add_observation(w[0], w[1], src_as, r.timestamp, r.agent_rank)
                    .expect("distinct endpoints");
            }
        }
    }
    graph
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ResolutionStats {
    pub known_hops: u64,
    pub lpm_hits: u64,
    pub whois_hits: u64,
    pub unresolved: u64,
    /// Trace records skipped because their source AS never resolved.
    pub skipped_records: u64,
}

#[derive(Debug)]
pub struct AsGraphOutput {
    pub graph: ObservedGraph,
    pub stats: ResolutionStats,
}

/// AS-level graph: resolve every responding hop to an AS, collapse
/// consecutive duplicates, and observe each adjacent distinct pair.
/// Silent or unresolved hops break adjacency — no edge ever spans a hop
/// we could not attribute. The result keeps only edges seen by at least
/// `min_measurements` distinct measurements.
pub fn build_as_graph<'a>(
    records: impl IntoIterator<Item = &'a MeasurementRecord>,
    db: &PrefixDb,
    whois: &WhoisDirectory,
    min_measurements: u64,
) -> AsGraphOutput {
    let mut graph = ObservedGraph::new(GraphLevel::As);
    let mut stats = ResolutionStats::default();
    for r in records {
        let Payload::Trace(trace) = &r.payload else { continue };
        let src_as = r
            .source_as
            .or_else(|| resolve_as(r.source_ip, db, whois).as_id());
        let Some(src_as) = src_as else {
            stats.skipped_records += 1;
            continue;
        };

        // segments of consecutive attributable hops; the source AS heads
        // the first segment unless silence precedes the first known hop
        let mut segments: Vec<Vec<AsId>> = Vec::new();
        let mut current: Vec<AsId> = vec![src_as];
        for hop in &trace.hops {
            match hop {
                Hop::Known(ip) => {
                    stats.known_hops += 1;
                    match resolve_as(*ip, db, whois) {
                        Resolution::Lpm(a) => {
                            stats.lpm_hits += 1;
                            current.push(a);
                        }
                        Resolution::Whois(a) => {
                            stats.whois_hits += 1;
                            current.push(a);
                        }
                        Resolution::Unresolved => {
                            stats.unresolved += 1;
                            segments.push(std::mem::take(&mut current));
                        }
                    }
                }
                Hop::NoReply => segments.push(std::mem::take(&mut current)),
            }
        }
        segments.push(current);

        let mut seen: BTreeSet<EdgeKey> = BTreeSet::new();
        for segment in segments {
            let mut collapsed: Vec<AsId> = Vec::with_capacity(segment.len());
            for asid in segment {
                if collapsed.last() != Some(&asid) {
                    collapsed.push(asid);
                }
            }
            for w in collapsed.windows(2) {
                let (a, b) = (NodeKey::As(w[0]), NodeKey::As(w[1]));
                let key = EdgeKey::new(a, b).expect("collapsed pairs are distinct");
                if seen.insert(key) {
                    graph
                        .add_observation(a, b, src_as, r.timestamp, r.agent_rank)
                        .expect("collapsed pairs are distinct");
                }
            }
        }
    }
    AsGraphOutput {
        graph: graph.filter_edges(min_measurements),
        stats,
    }
}

/// Router-level graph: alias sets name routers by their lowest interface
/// address; only edges between responding addresses participate, parallel
/// edges merge with their observation statistics summed, and edges whose
/// endpoints merge into one router disappear.
pub fn build_router_graph(ip_graph: &ObservedGraph, aliases: &mut AliasSets) -> ObservedGraph {
    let mut graph = ObservedGraph::new(GraphLevel::Router);
    for (key, stats) in ip_graph.edges() {
        let (NodeKey::Known(a), NodeKey::Known(b)) = (key.a(), key.b()) else {
            continue;
        };
        let ra = NodeKey::Router(aliases.canonical(a));
        let rb = NodeKey::Router(aliases.canonical(b));
        if ra == rb {
            continue;
        }
        graph.merge_edge(ra, rb, stats.clone()).expect("distinct routers");
    }
    graph
}
