use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use tracemap_core::AsId;

use crate::GroundTruthTopology;

/// Per-destination routing state: for every AS, the best pure
/// customer-chain path to the destination and the best valley-free tail
/// of any shape. Paths are stored head first, destination last.
pub struct RouteTables<'t> {
    topo: &'t GroundTruthTopology,
    dst: AsId,
    down: BTreeMap<AsId, Vec<AsId>>,
    tail: BTreeMap<AsId, Vec<AsId>>,
}

impl<'t> RouteTables<'t> {
    pub fn new(topo: &'t GroundTruthTopology, dst: AsId) -> Self {
        assert!(topo.as_record(dst).is_some(), "destination AS exists");

        // Pure-down paths: x reaches dst through a chain of
        // provider-to-customer steps. Layered BFS from dst keeps, per
        // node, the shortest path with lexicographic tie-break.
        let mut down: BTreeMap<AsId, Vec<AsId>> = BTreeMap::new();
        down.insert(dst, vec![dst]);
        let mut frontier = vec![dst];
        while !frontier.is_empty() {
            let mut cand: BTreeMap<AsId, Vec<AsId>> = BTreeMap::new();
            for &x in &frontier {
                let base = down[&x].clone();
                for &p in topo.providers(x) {
                    if down.contains_key(&p) {
                        continue;
                    }
                    let mut path = Vec::with_capacity(base.len() + 1);
                    path.push(p);
                    path.extend_from_slice(&base);
                    match cand.get_mut(&p) {
                        Some(best) if *best <= path => {}
                        Some(best) => *best = path,
                        None => {
                            cand.insert(p, path);
                        }
                    }
                }
            }
            frontier = cand.keys().copied().collect();
            down.extend(cand);
        }

        // Best tail of shape up*, at most one peer step, then down*.
        // Dijkstra on (length, lexicographic path); up-step relaxation
        // runs from a settled node to its customers.
        let mut heap: BinaryHeap<Reverse<(usize, Vec<AsId>)>> = BinaryHeap::new();
        for path in down.values() {
            heap.push(Reverse((path.len(), path.clone())));
        }
        for x in topo.as_ids() {
            for &y in topo.peers(x) {
                if let Some(dp) = down.get(&y) {
                    let mut path = Vec::with_capacity(dp.len() + 1);
                    path.push(x);
                    path.extend_from_slice(dp);
                    heap.push(Reverse((path.len(), path)));
                }
            }
        }
        let mut tail: BTreeMap<AsId, Vec<AsId>> = BTreeMap::new();
        while let Some(Reverse((len, path))) = heap.pop() {
            let head = path[0];
            if tail.contains_key(&head) {
                continue;
            }
            for &c in topo.customers(head) {
                if !tail.contains_key(&c) {
                    let mut next = Vec::with_capacity(len + 1);
                    next.push(c);
                    next.extend_from_slice(&path);
                    heap.push(Reverse((len + 1, next)));
                }
            }
            tail.insert(head, path);
        }

        RouteTables {
            topo,
            dst,
            down,
            tail,
        }
    }

    pub fn dst(&self) -> AsId {
        self.dst
    }

    /// Best policy-compliant path from `src` to the destination:
    /// customer-learned beat peer-learned beat provider-learned routes,
    /// then shorter paths, then the lexicographically smallest AS
    /// sequence.
    pub fn path_from(&self, src: AsId) -> Option<Vec<AsId>> {
        if src == self.dst {
            return Some(vec![src]);
        }
        if let Some(p) = self.down.get(&src) {
            return Some(p.clone());
        }
        let better = |best: &mut Option<Vec<AsId>>, cand: Vec<AsId>| {
            let replace = match best {
                Some(b) => (cand.len(), &cand) < (b.len(), b),
                None => true,
            };
            if replace {
                *best = Some(cand);
            }
        };
        let mut best: Option<Vec<AsId>> = None;
        for &y in self.topo.peers(src) {
            if let Some(dp) = self.down.get(&y) {
                let mut path = Vec::with_capacity(dp.len() + 1);
                path.push(src);
                path.extend_from_slice(dp);
                better(&mut best, path);
            }
        }
        if best.is_some() {
            return best;
        }
        for &p in self.topo.providers(src) {
            if let Some(t) = self.tail.get(&p) {
                let mut path = Vec::with_capacity(t.len() + 1);
                path.push(src);
                path.extend_from_slice(t);
                better(&mut best, path);
            }
        }
        best
    }
}

/// Best valley-free path between two ASes, or None when export policy
/// leaves the destination unreachable.
pub fn route(topo: &GroundTruthTopology, src: AsId, dst: AsId) -> Option<Vec<AsId>> {
    assert!(topo.as_record(src).is_some(), "source AS exists");
    RouteTables::new(topo, dst).path_from(src)
}

/// Steady-state BGP-style collection at a vantage AS: the union of edges
/// appearing on the best advertised path from every AS toward the
/// vantage. Export policy hides routes learned from peers or providers
/// from everyone but customers, so a peripheral peer link is visible only
/// at its endpoints and their customer subtrees.
pub fn bgp_collect(topo: &GroundTruthTopology, vantage: AsId) -> BTreeSet<(AsId, AsId)> {
    let tables = RouteTables::new(topo, vantage);
    let mut edges = BTreeSet::new();
    for x in topo.as_ids() {
        if x == vantage {
            continue;
        }
        if let Some(path) = tables.path_from(x) {
            for w in path.windows(2) {
                edges.insert((w[0].min(w[1]), w[0].max(w[1])));
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{generate_topology, two_stub_fixture, GenParams};

    /// Exhaustive enumeration of simple valley-free paths, preferring
    /// (route class at the source, length, lexicographic sequence). The
    /// implementation must agree with this everywhere.
    fn brute_force_route(
        topo: &GroundTruthTopology,
        src: AsId,
        dst: AsId,
    ) -> Option<Vec<AsId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Phase {
            Up,
            Down,
        }
        fn class_rank(topo: &GroundTruthTopology, first: AsId, second: AsId) -> usize {
            if topo.customers(first).contains(&second) {
                0 // learned from a customer
            } else if topo.peers(first).contains(&second) {
                1
            } else {
                2
            }
        }
        fn dfs(
            topo: &GroundTruthTopology,
            cur: AsId,
            dst: AsId,
            phase: Phase,
            path: &mut Vec<AsId>,
            found: &mut Vec<Vec<AsId>>,
        ) {
            if cur == dst {
                found.push(path.clone());
                return;
            }
            if path.len() > topo.ases.len() {
                return;
            }
            let step = |next: AsId, phase: Phase, path: &mut Vec<AsId>, found: &mut Vec<Vec<AsId>>| {
                if path.contains(&next) {
                    return;
                }
                path.push(next);
                dfs(topo, next, dst, phase, path, found);
                path.pop();
            };
            if phase == Phase::Up {
                for &p in topo.providers(cur) {
                    step(p, Phase::Up, path, found);
                }
                for &y in topo.peers(cur) {
                    step(y, Phase::Down, path, found);
                }
            }
            for &c in topo.customers(cur) {
                step(c, Phase::Down, path, found);
            }
        }
        if src == dst {
            return Some(vec![src]);
        }
        let mut found = Vec::new();
        let mut path = vec![src];
        dfs(topo, src, dst, Phase::Up, &mut path, &mut found);
        found
            .into_iter()
            .min_by_key(|p| (class_rank(topo, p[0], p[1]), p.len(), p.clone()))
    }

    #[test]
    fn identity_route() {
        let topo = two_stub_fixture(1);
        assert_eq!(route(&topo, AsId(4), AsId(4)), Some(vec![AsId(4)]));
    }

    #[test]
    fn peered_stubs_use_direct_link() {
        for seed in 0..5 {
            let topo = two_stub_fixture(seed);
            assert_eq!(
                route(&topo, AsId(4), AsId(5)),
                Some(vec![AsId(4), AsId(5)]),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let params = GenParams {
            n_core: 3,
            n_middle: 5,
            n_stub: 12,
            peer_link_fraction: 0.4,
            n_regions: 2,
            ..GenParams::default()
        };
        let topo = generate_topology(&params, 17).unwrap();
        for src in topo.as_ids() {
            for dst in topo.as_ids() {
                assert_eq!(
                    route(&topo, src, dst),
                    brute_force_route(&topo, src, dst),
                    "src={src} dst={dst}"
                );
            }
        }
    }

    #[test]
    fn routes_are_valley_free() {
        let params = GenParams {
            n_core: 4,
            n_middle: 8,
            n_stub: 40,
            peer_link_fraction: 0.3,
            ..GenParams::default()
        };
        let topo = generate_topology(&params, 23).unwrap();
        let mut checked = 0;
        for src in topo.as_ids() {
            for dst in topo.as_ids() {
                let Some(path) = route(&topo, src, dst) else { continue };
                // once a provider->customer or peer step happens, only
                // provider->customer steps may follow
                let mut descending = false;
                for w in path.windows(2) {
                    let up = topo.providers(w[0]).contains(&w[1]);
                    let peer = topo.peers(w[0]).contains(&w[1]);
                    let down = topo.customers(w[0]).contains(&w[1]);
                    assert!(up || peer || down, "non-edge step in {path:?}");
                    if descending {
                        assert!(down, "valley in {path:?}");
                    }
                    if peer || down {
                        descending = true;
                    }
                }
                checked += 1;
            }
        }
        assert!(checked > 2000);
    }

    #[test]
    fn local_peer_edge_visible_only_from_inside() {
        for seed in 0..10 {
            let topo = two_stub_fixture(seed);
            let peer_edge = (AsId(4), AsId(5));
            for vantage in [AsId(1), AsId(2), AsId(3)] {
                let edges = bgp_collect(&topo, vantage);
                assert!(
                    !edges.contains(&peer_edge),
                    "seed {seed}: stub peer link leaked to core vantage {vantage}"
                );
            }
            for vantage in [AsId(4), AsId(5)] {
                let edges = bgp_collect(&topo, vantage);
                assert!(
                    edges.contains(&peer_edge),
                    "seed {seed}: stub peer link invisible at its endpoint {vantage}"
                );
            }
        }
    }

    #[test]
    fn collected_edges_subset_of_ground_truth() {
        let params = GenParams {
            n_core: 3,
            n_middle: 4,
            n_stub: 25,
            peer_link_fraction: 0.5,
            ..GenParams::default()
        };
        let topo = generate_topology(&params, 31).unwrap();
        let truth = topo.as_edges();
        for vantage in topo.as_ids() {
            assert!(bgp_collect(&topo, vantage).is_subset(&truth));
        }
    }
}
