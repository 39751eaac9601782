use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracemap_core::{AsId, Ip, Prefix};

use crate::topology::{sub_seed, AsRecord, BorderLink, GenParams, IntraLink, RouterRecord, Tier};
use crate::{GroundTruthTopology, NetsimError, RouterId};

const PREFIX_BASE: u32 = 0x0a00_0000; // 10.0.0.0
/// Host numbers at or above this stay unallocated so a trailing /24 can be
/// delegated without covering any real interface.
const HOST_CAP: u32 = 0xff00;
const MAX_INTRA_DEGREE: usize = 6;

struct IfaceAlloc {
    base: u32,
    next: u32,
}

impl IfaceAlloc {
    fn new(prefix: Prefix) -> Self {
        IfaceAlloc {
            base: prefix.base().0,
            next: 1,
        }
    }

    fn take(&mut self) -> Result<Ip, NetsimError> {
        if self.next >= HOST_CAP {
            return Err(NetsimError::Generation(
                "address space of a /16 exhausted; reduce routers per AS".into(),
            ));
        }
        let ip = Ip(self.base + self.next);
        self.next += 1;
        Ok(ip)
    }
}

fn check_fraction(name: &str, v: f64) -> Result<(), NetsimError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(NetsimError::Generation(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

/// Generate a ground-truth topology. Deterministic for a fixed
/// (params, seed) pair: core ASes form a peer clique, middle ASes buy
/// transit from the core or earlier middles, stubs buy transit from core
/// or middle ASes, and same-region stub pairs get direct peer links with
/// probability `peer_link_fraction`.
pub fn generate_topology(
    params: &GenParams,
    seed: u64,
) -> Result<GroundTruthTopology, NetsimError> {
    if params.n_core < 3 {
        return Err(NetsimError::Generation(format!(
            "need at least 3 core ASes, got {}",
            params.n_core
        )));
    }
    for (name, v) in [
        ("peer_link_fraction", params.peer_link_fraction),
        ("intra_extra_link_prob", params.intra_extra_link_prob),
        ("anonymous_router_fraction", params.anonymous_router_fraction),
        ("icmp_block_fraction", params.icmp_block_fraction),
        ("udp_block_fraction", params.udp_block_fraction),
        ("subprefix_fraction", params.subprefix_fraction),
        ("interface_omission_fraction", params.interface_omission_fraction),
        ("whois_coverage", params.whois_coverage),
    ] {
        check_fraction(name, v)?;
    }
    if params.n_regions == 0 {
        return Err(NetsimError::Generation("n_regions must be positive".into()));
    }
    for (name, (lo, hi)) in [
        ("core_routers", params.core_routers),
        ("middle_routers", params.middle_routers),
        ("stub_routers", params.stub_routers),
    ] {
        if lo == 0 || lo > hi {
            return Err(NetsimError::Generation(format!(
                "{name} range ({lo}, {hi}) is invalid"
            )));
        }
    }
    let n_total = params.n_core as u64 + params.n_middle as u64 + params.n_stub as u64;
    if n_total > 60_000 {
        return Err(NetsimError::Generation(format!(
            "{n_total} ASes exceed the /16-per-AS address plan"
        )));
    }

    let tier_of = |id: u32| -> Tier {
        if id <= params.n_core {
            Tier::Core
        } else if id <= params.n_core + params.n_middle {
            Tier::Middle
        } else {
            Tier::Stub
        }
    };

    // AS skeletons: prefix, region tag, probe blocking.
    let mut rng_as = ChaCha8Rng::seed_from_u64(sub_seed(seed, "as-flags"));
    let mut ases: Vec<AsRecord> = Vec::with_capacity(n_total as usize);
    for id in 1..=n_total as u32 {
        let base = Ip(PREFIX_BASE + (id << 16));
        let prefix = Prefix::new(base, 16).expect("aligned by construction");
        ases.push(AsRecord {
            id: AsId(id),
            tier: tier_of(id),
            prefix,
            region: rng_as.gen_range(0..params.n_regions),
            blocks_icmp: rng_as.gen_bool(params.icmp_block_fraction),
            blocks_udp: rng_as.gen_bool(params.udp_block_fraction),
            routers: Vec::new(),
        });
    }

    // Relationships.
    let mut rng_rel = ChaCha8Rng::seed_from_u64(sub_seed(seed, "relations"));
    let mut relations = Vec::new();
    let core_ids: Vec<AsId> = (1..=params.n_core).map(AsId).collect();
    for i in 0..core_ids.len() {
        for j in i + 1..core_ids.len() {
            relations.push(crate::Relation::PeerPeer {
                a: core_ids[i],
                b: core_ids[j],
            });
        }
    }
    let middle_ids: Vec<AsId> = (params.n_core + 1..=params.n_core + params.n_middle)
        .map(AsId)
        .collect();
    for (idx, &m) in middle_ids.iter().enumerate() {
        let mut candidates = core_ids.clone();
        candidates.extend_from_slice(&middle_ids[..idx]);
        let count = rng_rel.gen_range(1..=2usize).min(candidates.len());
        let mut chosen: Vec<AsId> = candidates
            .choose_multiple(&mut rng_rel, count)
            .copied()
            .collect();
        chosen.sort_unstable();
        for p in chosen {
            relations.push(crate::Relation::CustomerProvider { a: m, b: p });
        }
    }
    let stub_ids: Vec<AsId> = (params.n_core + params.n_middle + 1..=n_total as u32)
        .map(AsId)
        .collect();
    let transit: Vec<AsId> = core_ids.iter().chain(&middle_ids).copied().collect();
    for &s in &stub_ids {
        let count = rng_rel.gen_range(1..=2usize).min(transit.len());
        let mut chosen: Vec<AsId> = transit
            .choose_multiple(&mut rng_rel, count)
            .copied()
            .collect();
        chosen.sort_unstable();
        for p in chosen {
            relations.push(crate::Relation::CustomerProvider { a: s, b: p });
        }
    }
    // Same-region stub peering.
    let mut rng_peer = ChaCha8Rng::seed_from_u64(sub_seed(seed, "stub-peers"));
    for region in 0..params.n_regions {
        let members: Vec<AsId> = stub_ids
            .iter()
            .filter(|&&s| ases[(s.0 - 1) as usize].region == region)
            .copied()
            .collect();
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                if rng_peer.gen_bool(params.peer_link_fraction) {
                    relations.push(crate::Relation::PeerPeer {
                        a: members[i],
                        b: members[j],
                    });
                }
            }
        }
    }

    // Routers and intra-AS links.
    let mut rng_router = ChaCha8Rng::seed_from_u64(sub_seed(seed, "routers"));
    let mut allocs: Vec<IfaceAlloc> = ases.iter().map(|a| IfaceAlloc::new(a.prefix)).collect();
    for (pos, rec) in ases.iter_mut().enumerate() {
        let (lo, hi) = match rec.tier {
            Tier::Core => params.core_routers,
            Tier::Middle => params.middle_routers,
            Tier::Stub => params.stub_routers,
        };
        let count = rng_router.gen_range(lo..=hi) as usize;
        for rid in 0..count {
            let default_interface = allocs[pos].take()?;
            rec.routers.push(RouterRecord {
                id: RouterId(rid as u32),
                interfaces: vec![default_interface],
                default_interface,
                intra_links: Vec::new(),
                border_links: Vec::new(),
                responds_to_traceroute: !rng_router.gen_bool(params.anonymous_router_fraction),
            });
        }
        let link = |rec: &mut AsRecord,
                        allocs: &mut Vec<IfaceAlloc>,
                        i: usize,
                        j: usize|
         -> Result<(), NetsimError> {
            let iface_i = allocs[pos].take()?;
            let iface_j = allocs[pos].take()?;
            rec.routers[i].intra_links.push(IntraLink {
                peer: RouterId(j as u32),
                iface: iface_i,
            });
            rec.routers[i].interfaces.push(iface_i);
            rec.routers[j].intra_links.push(IntraLink {
                peer: RouterId(i as u32),
                iface: iface_j,
            });
            rec.routers[j].interfaces.push(iface_j);
            Ok(())
        };
        // spanning tree, then sparse extra links under a degree cap
        for j in 1..count {
            let parent = rng_router.gen_range(0..j);
            link(rec, &mut allocs, parent, j)?;
        }
        for i in 0..count {
            for j in i + 1..count {
                if rec.routers[i].intra_links.iter().any(|l| l.peer.0 == j as u32) {
                    continue;
                }
                if rec.routers[i].intra_links.len() >= MAX_INTRA_DEGREE
                    || rec.routers[j].intra_links.len() >= MAX_INTRA_DEGREE
                {
                    continue;
                }
                if rng_router.gen_bool(params.intra_extra_link_prob) {
                    link(rec, &mut allocs, i, j)?;
                }
            }
        }
    }

    // Border links, one router pair per relationship edge.
    let mut rng_border = ChaCha8Rng::seed_from_u64(sub_seed(seed, "borders"));
    for rel in &relations {
        let (a, b) = rel.endpoints();
        let (pa, pb) = ((a.0 - 1) as usize, (b.0 - 1) as usize);
        let ra = rng_border.gen_range(0..ases[pa].routers.len());
        let rb = rng_border.gen_range(0..ases[pb].routers.len());
        let iface_a = allocs[pa].take()?;
        let iface_b = allocs[pb].take()?;
        ases[pa].routers[ra].border_links.push(BorderLink {
            peer_as: b,
            peer_router: RouterId(rb as u32),
            iface: iface_a,
        });
        ases[pa].routers[ra].interfaces.push(iface_a);
        ases[pb].routers[rb].border_links.push(BorderLink {
            peer_as: a,
            peer_router: RouterId(ra as u32),
            iface: iface_b,
        });
        ases[pb].routers[rb].interfaces.push(iface_b);
    }

    let topo = GroundTruthTopology::new(seed, params.clone(), ases, relations);
    topo.validate()?;
    Ok(topo)
}

/// The canonical two-stub scenario: a core clique plus two stubs in the
/// same region joined by a direct peer link that is never announced
/// upward. Stub ASes are the two highest ids.
pub fn two_stub_fixture(seed: u64) -> GroundTruthTopology {
    let params = GenParams {
        n_core: 3,
        n_middle: 0,
        n_stub: 2,
        peer_link_fraction: 1.0,
        n_regions: 1,
        subprefix_fraction: 0.0,
        ..GenParams::default()
    };
    let topo = generate_topology(&params, seed).expect("fixture parameters are valid");
    debug_assert!(topo.peer_edges().contains(&(AsId(4), AsId(5))));
    topo
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet, VecDeque};

    #[test]
    fn three_core_clique() {
        let topo = generate_topology(&GenParams::default(), 1).unwrap();
        assert_eq!(topo.ases.len(), 3);
        assert_eq!(topo.peer_edges().len(), 3);
        assert!(topo.relations.iter().all(|r| matches!(r, crate::Relation::PeerPeer { .. })));
    }

    #[test]
    fn zero_peer_fraction_means_no_stub_edges() {
        let params = GenParams {
            n_core: 3,
            n_middle: 2,
            n_stub: 10,
            peer_link_fraction: 0.0,
            ..GenParams::default()
        };
        let topo = generate_topology(&params, 5).unwrap();
        let stub_min = 6; // core 1..3, middle 4..5
        assert!(topo
            .peer_edges()
            .iter()
            .all(|&(a, b)| a.0 < stub_min || b.0 < stub_min));
    }

    #[test]
    fn unsatisfiable_params_rejected() {
        let params = GenParams {
            n_core: 2,
            ..GenParams::default()
        };
        assert!(generate_topology(&params, 1).is_err());
        let params = GenParams {
            peer_link_fraction: 1.5,
            ..GenParams::default()
        };
        assert!(generate_topology(&params, 1).is_err());
    }

    /// Independent DFS/BFS oracle for acyclicity of the provider
    /// hierarchy and connectivity of the relationship graph.
    #[test]
    fn provider_dag_and_connectivity_oracle() {
        let params = GenParams {
            n_core: 3,
            n_middle: 5,
            n_stub: 50,
            peer_link_fraction: 0.3,
            ..GenParams::default()
        };
        let topo = generate_topology(&params, 7).unwrap();

        let mut up: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        let mut undirected: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for rec in &topo.ases {
            up.entry(rec.id.0).or_default();
            undirected.entry(rec.id.0).or_default();
        }
        for rel in &topo.relations {
            let (a, b) = rel.endpoints();
            undirected.get_mut(&a.0).unwrap().push(b.0);
            undirected.get_mut(&b.0).unwrap().push(a.0);
            if let crate::Relation::CustomerProvider { a, b } = rel {
                up.get_mut(&a.0).unwrap().push(b.0);
            }
        }
        // recursive-style cycle check with explicit colors
        fn has_cycle(n: u32, up: &BTreeMap<u32, Vec<u32>>, color: &mut BTreeMap<u32, u8>) -> bool {
            color.insert(n, 1);
            for &p in &up[&n] {
                match color.get(&p) {
                    Some(1) => return true,
                    Some(_) => {}
                    None => {
                        if has_cycle(p, up, color) {
                            return true;
                        }
                    }
                }
            }
            color.insert(n, 2);
            false
        }
        let mut color = BTreeMap::new();
        for &n in up.keys() {
            if !color.contains_key(&n) {
                assert!(!has_cycle(n, &up, &mut color), "provider cycle at AS{n}");
            }
        }
        let start = *undirected.keys().next().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(cur) = queue.pop_front() {
            for &n in &undirected[&cur] {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        assert_eq!(seen.len(), topo.ases.len(), "relationship graph disconnected");
    }

    #[test]
    fn generation_is_deterministic() {
        let params = GenParams {
            n_core: 3,
            n_middle: 4,
            n_stub: 20,
            peer_link_fraction: 0.4,
            anonymous_router_fraction: 0.1,
            icmp_block_fraction: 0.2,
            ..GenParams::default()
        };
        let a = generate_topology(&params, 99).unwrap();
        let b = generate_topology(&params, 99).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = generate_topology(&params, 100).unwrap();
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn topology_text_roundtrip() {
        let params = GenParams {
            n_core: 3,
            n_middle: 2,
            n_stub: 8,
            peer_link_fraction: 0.5,
            ..GenParams::default()
        };
        let topo = generate_topology(&params, 3).unwrap();
        let text = topo.to_text();
        let back = GroundTruthTopology::from_text(&text).unwrap();
        assert_eq!(topo, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn two_stub_fixture_shape() {
        for seed in 0..5 {
            let topo = two_stub_fixture(seed);
            assert_eq!(topo.ases.len(), 5);
            assert!(topo.peer_edges().contains(&(AsId(4), AsId(5))));
            for stub in [AsId(4), AsId(5)] {
                assert!(!topo.providers(stub).is_empty());
                assert!(topo.providers(stub).iter().all(|p| p.0 <= 3));
            }
        }
    }
}
