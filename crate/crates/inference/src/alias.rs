use std::collections::{BTreeMap, BTreeSet};

use tracemap_core::Ip;
use tracemap_coordinator::{MeasurementRecord, Payload};

/// Disjoint sets over interface addresses. The canonical representative
/// of a set is its smallest member, independent of union order.
#[derive(Debug, Default, Clone)]
pub struct AliasSets {
    parent: BTreeMap<Ip, Ip>,
}

impl AliasSets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, ip: Ip) {
        self.parent.entry(ip).or_insert(ip);
    }

    pub fn find(&mut self, ip: Ip) -> Ip {
        self.add(ip);
        let mut root = ip;
        while self.parent[&root] != root {
            root = self.parent[&root];
        }
        // path compression
        let mut cur = ip;
        while self.parent[&cur] != root {
            let next = self.parent[&cur];
            self.parent.insert(cur, root);
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: Ip, b: Ip) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller address becomes the root, keeping representatives
            // stable under any merge order
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent.insert(hi, lo);
        }
    }

    pub fn same_set(&mut self, a: Ip, b: Ip) -> bool {
        self.find(a) == self.find(b)
    }

    /// Lowest member of the set containing `ip` (the set's canonical
    /// name). Because unions root at the minimum, this is just find.
    pub fn canonical(&mut self, ip: Ip) -> Ip {
        self.find(ip)
    }

    /// All sets keyed by canonical member, including singletons for every
    /// address ever added.
    pub fn sets(&mut self) -> BTreeMap<Ip, BTreeSet<Ip>> {
        let members: Vec<Ip> = self.parent.keys().copied().collect();
        let mut out: BTreeMap<Ip, BTreeSet<Ip>> = BTreeMap::new();
        for ip in members {
            let root = self.find(ip);
            out.entry(root).or_default().insert(ip);
        }
        out
    }

    pub fn set_size(&mut self, ip: Ip) -> usize {
        let root = self.find(ip);
        let members: Vec<Ip> = self.parent.keys().copied().collect();
        members.into_iter().filter(|&m| self.find(m) == root).count()
    }
}

/// Group interfaces by probe/response coupling: every ping answered from
/// a different address joins its target and responder into one set.
/// Targets that answered for themselves still enter as singletons.
pub fn alias_resolve<'a>(
    records: impl IntoIterator<Item = &'a MeasurementRecord>,
) -> AliasSets {
    let mut sets = AliasSets::new();
    for r in records {
        let Payload::Ping(ping) = &r.payload else { continue };
        let Some(responder) = ping.responder else { continue };
        sets.add(ping.target);
        sets.add(responder);
        sets.union(ping.target, responder);
    }
    sets
}
