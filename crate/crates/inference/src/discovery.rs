use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tracemap_coordinator::MeasurementRecord;
use tracemap_core::{day_of, AsId, GraphLevel, NodeKey, ObservedGraph};

use crate::prefix_db::{PrefixDb, WhoisDirectory};
use crate::{build_as_graph, InferenceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscoveryEntry {
    /// Day index of the earliest observation.
    pub first_day: u64,
    /// Rank of the agent that made that observation.
    pub agent_rank: u32,
    pub measurement_count: u64,
    pub source_as_count: usize,
}

pub type DiscoveryLog = BTreeMap<(AsId, AsId), DiscoveryEntry>;

/// Attribution of every AS edge to its discoverer, plus the per-edge
/// robustness inputs (how many source ASes saw it, how many measurements
/// carried it).
pub fn discovery_log(as_graph: &ObservedGraph) -> Result<DiscoveryLog, InferenceError> {
    if as_graph.level() != GraphLevel::As {
        return Err(InferenceError::WrongGraphLevel { expected: "as" });
    }
    let mut log = DiscoveryLog::new();
    for (key, stats) in as_graph.edges() {
        let (NodeKey::As(a), NodeKey::As(b)) = (key.a(), key.b()) else {
            continue;
        };
        log.insert(
            (a.min(b), a.max(b)),
            DiscoveryEntry {
                first_day: day_of(stats.first_seen),
                agent_rank: stats.first_agent_rank,
                measurement_count: stats.measurement_count,
                source_as_count: stats.source_ases.len(),
            },
        );
    }
    Ok(log)
}

/// One discovery entry per line, tab separated:
/// `AS<a> AS<b> first_day agent_rank measurement_count source_as_count`.
pub fn discovery_log_to_text(log: &DiscoveryLog) -> String {
    let mut out = String::from("edge_a\tedge_b\tfirst_day\tagent_rank\tmeasurements\tsource_ases\n");
    for ((a, b), e) in log {
        writeln!(
            out,
            "AS{a}\tAS{b}\t{}\t{}\t{}\t{}",
            e.first_day, e.agent_rank, e.measurement_count, e.source_as_count
        )
        .expect("string write");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationPoint {
    pub k: usize,
    pub mean_edges: f64,
    pub min_edges: usize,
    pub max_edges: usize,
}

/// Mean discovered AS edges when only `k` source ASes contribute records,
/// for each k, over `trials` seeded draws. Within one trial the samples
/// are nested (prefixes of one permutation), so the per-trial curve is
/// monotone non-decreasing by construction.
pub fn vantage_ablation(
    records: &[MeasurementRecord],
    ks: &[usize],
    trials: usize,
    min_measurements: u64,
    db: &PrefixDb,
    whois: &WhoisDirectory,
    seed: u64,
) -> Result<Vec<AblationPoint>, InferenceError> {
    let sources: Vec<AsId> = records
        .iter()
        .filter_map(|r| r.source_as)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for &k in ks {
        if k == 0 || k > sources.len() {
            return Err(InferenceError::BadAblationSize {
                k,
                available: sources.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_k: BTreeMap<usize, Vec<usize>> = ks.iter().map(|&k| (k, Vec::new())).collect();
    for _ in 0..trials {
        let mut order = sources.clone();
        order.shuffle(&mut rng);
        for &k in ks {
            let sample: BTreeSet<AsId> = order[..k].iter().copied().collect();
            let subset: Vec<&MeasurementRecord> = records
                .iter()
                .filter(|r| r.source_as.map(|a| sample.contains(&a)).unwrap_or(false))
                .collect();
            let out = build_as_graph(subset.into_iter(), db, whois, min_measurements);
            per_k.get_mut(&k).unwrap().push(out.graph.edge_count());
        }
    }
    Ok(per_k
        .into_iter()
        .map(|(k, counts)| AblationPoint {
            k,
            mean_edges: counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64,
            min_edges: counts.iter().copied().min().unwrap_or(0),
            max_edges: counts.iter().copied().max().unwrap_or(0),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tracemap_core::Ip;

    #[test]
    fn first_observation_wins_attribution() {
        let mut g = ObservedGraph::new(GraphLevel::As);
        let (a, b) = (NodeKey::As(AsId(1)), NodeKey::As(AsId(2)));
        // day 5 by rank 2 arrives before day 3 by rank 38 in the stream,
        // but attribution still goes to the earliest day
        g.add_observation(a, b, AsId(9), 5 * 86_400, 2).unwrap();
        g.add_observation(a, b, AsId(9), 3 * 86_400, 38).unwrap();
        let log = discovery_log(&g).unwrap();
        let e = log[&(AsId(1), AsId(2))];
        assert_eq!((e.first_day, e.agent_rank), (3, 38));
        assert_eq!(e.measurement_count, 2);
    }

    #[test]
    fn single_agent_owns_every_edge() {
        let mut g = ObservedGraph::new(GraphLevel::As);
        for i in 2..6u32 {
            g.add_observation(
                NodeKey::As(AsId(1)),
                NodeKey::As(AsId(i)),
                AsId(1),
                100 * i as u64,
                1,
            )
            .unwrap();
        }
        let log = discovery_log(&g).unwrap();
        assert!(log.values().all(|e| e.agent_rank == 1));
    }

    #[test]
    fn wrong_level_is_rejected() {
        let mut g = ObservedGraph::new(GraphLevel::Ip);
        g.add_observation(
            NodeKey::Known(Ip(1)),
            NodeKey::Known(Ip(2)),
            AsId(1),
            0,
            1,
        )
        .unwrap();
        assert!(discovery_log(&g).is_err());
    }
}
