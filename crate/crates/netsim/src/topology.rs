use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use tracemap_core::{AsId, Ip, Prefix};

use crate::NetsimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Core,
    Middle,
    Stub,
}

/// AS relationship edge. `CustomerProvider` is directed: `a` buys transit
/// from `b`. `PeerPeer` edges are stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    CustomerProvider { a: AsId, b: AsId },
    PeerPeer { a: AsId, b: AsId },
}

impl Relation {
    pub fn endpoints(&self) -> (AsId, AsId) {
        match *self {
            Relation::CustomerProvider { a, b } | Relation::PeerPeer { a, b } => (a, b),
        }
    }
}

/// Router index within its AS.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct RouterId(pub u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntraLink {
    pub peer: RouterId,
    /// Interface on this router facing `peer`.
    pub iface: Ip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderLink {
    pub peer_as: AsId,
    pub peer_router: RouterId,
    /// Interface on this router facing the remote AS.
    pub iface: Ip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterRecord {
    pub id: RouterId,
    pub interfaces: Vec<Ip>,
    pub default_interface: Ip,
    pub intra_links: Vec<IntraLink>,
    pub border_links: Vec<BorderLink>,
    pub responds_to_traceroute: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsRecord {
    pub id: AsId,
    pub tier: Tier,
    pub prefix: Prefix,
    /// Geographic grouping tag; drives stub peering placement.
    pub region: u32,
    pub blocks_icmp: bool,
    pub blocks_udp: bool,
    pub routers: Vec<RouterRecord>,
}

/// Topology generation parameters. All random choices derive from the
/// generation seed, never from these values' addresses or iteration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_core: u32,
    pub n_middle: u32,
    pub n_stub: u32,
    /// Probability that a same-region stub pair gets a direct peer link.
    pub peer_link_fraction: f64,
    pub n_regions: u32,
    pub core_routers: (u32, u32),
    pub middle_routers: (u32, u32),
    pub stub_routers: (u32, u32),
    /// Probability of each extra intra-AS link beyond the spanning tree.
    pub intra_extra_link_prob: f64,
    /// Fraction of routers that never answer traceroute probes.
    pub anonymous_router_fraction: f64,
    pub icmp_block_fraction: f64,
    pub udp_block_fraction: f64,
    /// Fraction of ASes that delegate a /24 sub-block to another AS in the
    /// announced prefix table.
    pub subprefix_fraction: f64,
    /// Fraction of interfaces deliberately left uncovered by the prefix
    /// table, forcing directory fallback.
    pub interface_omission_fraction: f64,
    /// Fraction of omitted interfaces the simulated registry knows about.
    pub whois_coverage: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_core: 3,
            n_middle: 0,
            n_stub: 0,
            peer_link_fraction: 0.0,
            n_regions: 8,
            core_routers: (5, 15),
            middle_routers: (3, 8),
            stub_routers: (1, 3),
            intra_extra_link_prob: 0.3,
            anonymous_router_fraction: 0.0,
            icmp_block_fraction: 0.0,
            udp_block_fraction: 0.0,
            subprefix_fraction: 0.1,
            interface_omission_fraction: 0.0,
            whois_coverage: 0.5,
        }
    }
}

/// The simulated internet's ground truth. Immutable after generation;
/// derived lookup structures are built lazily and never serialized.
#[derive(Debug, Serialize, Deserialize)]
pub struct GroundTruthTopology {
    pub seed: u64,
    pub params: GenParams,
    /// Ordered by AS id.
    pub ases: Vec<AsRecord>,
    pub relations: Vec<Relation>,
    #[serde(skip)]
    index: OnceLock<TopoIndex>,
}

impl Clone for GroundTruthTopology {
    fn clone(&self) -> Self {
        GroundTruthTopology {
            seed: self.seed,
            params: self.params.clone(),
            ases: self.ases.clone(),
            relations: self.relations.clone(),
            index: OnceLock::new(),
        }
    }
}

impl PartialEq for GroundTruthTopology {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.params == other.params
            && self.ases == other.ases
            && self.relations == other.relations
    }
}

#[derive(Debug)]
pub(crate) struct TopoIndex {
    pub as_pos: BTreeMap<AsId, usize>,
    pub iface_owner: BTreeMap<Ip, (AsId, RouterId)>,
    pub prefix_owner: BTreeMap<u32, AsId>,
    pub providers: BTreeMap<AsId, Vec<AsId>>,
    pub customers: BTreeMap<AsId, Vec<AsId>>,
    pub peers: BTreeMap<AsId, Vec<AsId>>,
    /// For each directed relationship pair (a, b): the border router in `a`
    /// and the border router in `b` carrying the inter-AS link.
    pub border: BTreeMap<(AsId, AsId), (RouterId, RouterId)>,
}

impl GroundTruthTopology {
    pub fn new(
        seed: u64,
        params: GenParams,
        ases: Vec<AsRecord>,
        relations: Vec<Relation>,
    ) -> Self {
        GroundTruthTopology {
            seed,
            params,
            ases,
            relations,
            index: OnceLock::new(),
        }
    }

    pub(crate) fn index(&self) -> &TopoIndex {
        self.index.get_or_init(|| {
            let mut as_pos = BTreeMap::new();
            let mut iface_owner = BTreeMap::new();
            let mut prefix_owner = BTreeMap::new();
            let mut providers: BTreeMap<AsId, Vec<AsId>> = BTreeMap::new();
            let mut customers: BTreeMap<AsId, Vec<AsId>> = BTreeMap::new();
            let mut peers: BTreeMap<AsId, Vec<AsId>> = BTreeMap::new();
            let mut border = BTreeMap::new();
            for (pos, rec) in self.ases.iter().enumerate() {
                as_pos.insert(rec.id, pos);
                prefix_owner.insert(rec.prefix.base().0, rec.id);
                providers.entry(rec.id).or_default();
                customers.entry(rec.id).or_default();
                peers.entry(rec.id).or_default();
                for router in &rec.routers {
                    for &iface in &router.interfaces {
                        iface_owner.insert(iface, (rec.id, router.id));
                    }
                    for bl in &router.border_links {
                        border.insert((rec.id, bl.peer_as), (router.id, bl.peer_router));
                    }
                }
            }
            for rel in &self.relations {
                match *rel {
                    Relation::CustomerProvider { a, b } => {
                        providers.entry(a).or_default().push(b);
                        customers.entry(b).or_default().push(a);
                    }
                    Relation::PeerPeer { a, b } => {
                        peers.entry(a).or_default().push(b);
                        peers.entry(b).or_default().push(a);
                    }
                }
            }
            for v in providers.values_mut() {
                v.sort_unstable();
            }
            for v in customers.values_mut() {
                v.sort_unstable();
            }
            for v in peers.values_mut() {
                v.sort_unstable();
            }
            TopoIndex {
                as_pos,
                iface_owner,
                prefix_owner,
                providers,
                customers,
                peers,
                border,
            }
        })
    }

    pub fn as_ids(&self) -> impl Iterator<Item = AsId> + '_ {
        self.ases.iter().map(|a| a.id)
    }

    pub fn as_record(&self, id: AsId) -> Option<&AsRecord> {
        let pos = *self.index().as_pos.get(&id)?;
        Some(&self.ases[pos])
    }

    pub fn router(&self, id: AsId, rid: RouterId) -> &RouterRecord {
        let rec = self.as_record(id).expect("AS exists");
        &rec.routers[rid.0 as usize]
    }

    /// Owning (AS, router) of an interface address, if any.
    pub fn find_iface(&self, ip: Ip) -> Option<(AsId, RouterId)> {
        self.index().iface_owner.get(&ip).copied()
    }

    /// AS whose assigned /16 contains the address.
    pub fn as_of_ip(&self, ip: Ip) -> Option<AsId> {
        if let Some((asid, _)) = self.find_iface(ip) {
            return Some(asid);
        }
        let base = Prefix::containing(ip, 16).base().0;
        self.index().prefix_owner.get(&base).copied()
    }

    pub fn providers(&self, id: AsId) -> &[AsId] {
        self.index().providers.get(&id).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn customers(&self, id: AsId) -> &[AsId] {
        self.index().customers.get(&id).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn peers(&self, id: AsId) -> &[AsId] {
        self.index().peers.get(&id).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Border routers carrying the link between two related ASes:
    /// (router inside `a`, router inside `b`).
    pub fn border_routers(&self, a: AsId, b: AsId) -> Option<(RouterId, RouterId)> {
        self.index().border.get(&(a, b)).copied()
    }

    pub fn blocks(&self, id: AsId, kind: crate::ProbeKind) -> bool {
        let rec = self.as_record(id).expect("AS exists");
        match kind {
            crate::ProbeKind::Icmp => rec.blocks_icmp,
            crate::ProbeKind::Udp => rec.blocks_udp,
        }
    }

    /// All interface addresses in ascending order.
    pub fn all_interfaces(&self) -> Vec<Ip> {
        let mut out: Vec<Ip> = self.index().iface_owner.keys().copied().collect();
        out.sort_unstable();
        out
    }

    /// Undirected ground-truth AS adjacency, with relation kind.
    pub fn as_edges(&self) -> BTreeSet<(AsId, AsId)> {
        self.relations
            .iter()
            .map(|r| {
                let (a, b) = r.endpoints();
                (a.min(b), a.max(b))
            })
            .collect()
    }

    pub fn peer_edges(&self) -> BTreeSet<(AsId, AsId)> {
        self.relations
            .iter()
            .filter_map(|r| match *r {
                Relation::PeerPeer { a, b } => Some((a.min(b), a.max(b))),
                _ => None,
            })
            .collect()
    }

    /// Shortest intra-AS router path, endpoints inclusive. Ties broken by
    /// visiting neighbors in router-id order.
    pub fn intra_path(&self, id: AsId, from: RouterId, to: RouterId) -> Vec<RouterId> {
        if from == to {
            return vec![from];
        }
        let rec = self.as_record(id).expect("AS exists");
        let mut parent: BTreeMap<RouterId, RouterId> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        parent.insert(from, from);
        while let Some(cur) = queue.pop_front() {
            if cur == to {
                break;
            }
            let mut neighbors: Vec<RouterId> = rec.routers[cur.0 as usize]
                .intra_links
                .iter()
                .map(|l| l.peer)
                .collect();
            neighbors.sort_unstable();
            for n in neighbors {
                parent.entry(n).or_insert_with(|| {
                    queue.push_back(n);
                    cur
                });
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = *parent.get(&cur).expect("intra-AS graph is connected");
            path.push(cur);
        }
        path.reverse();
        path
    }

    /// Interface on router (id, rid) facing the given previous hop.
    pub(crate) fn facing_iface(&self, id: AsId, rid: RouterId, prev: (AsId, RouterId)) -> Ip {
        let router = self.router(id, rid);
        if prev.0 == id {
            router
                .intra_links
                .iter()
                .find(|l| l.peer == prev.1)
                .map(|l| l.iface)
                .expect("intra link exists along path")
        } else {
            router
                .border_links
                .iter()
                .find(|l| l.peer_as == prev.0 && l.peer_router == prev.1)
                .map(|l| l.iface)
                .expect("border link exists along path")
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes") + "\n"
    }

    pub fn from_text(text: &str) -> Result<Self, NetsimError> {
        let topo: GroundTruthTopology =
            serde_json::from_str(text).map_err(|e| NetsimError::Format(e.to_string()))?;
        topo.validate()?;
        Ok(topo)
    }

    /// Check structural invariants: connected relationship graph, acyclic
    /// provider hierarchy, provider coverage for non-core ASes, interface
    /// uniqueness and prefix containment, intra-AS connectivity, and
    /// border-link symmetry.
    pub fn validate(&self) -> Result<(), NetsimError> {
        let fail = |msg: String| Err(NetsimError::Validation(msg));
        if self.ases.is_empty() {
            return fail("no ASes".into());
        }
        // unique ids, sorted
        for w in self.ases.windows(2) {
            if w[0].id >= w[1].id {
                return fail("AS records not strictly ordered by id".into());
            }
        }
        // provider hierarchy acyclic (DFS from each node over provider edges)
        let mut state: BTreeMap<AsId, u8> = BTreeMap::new(); // 1 = open, 2 = done
        let mut stack: Vec<(AsId, usize)> = Vec::new();
        for start in self.as_ids() {
            if state.contains_key(&start) {
                continue;
            }
            stack.push((start, 0));
            state.insert(start, 1);
            while let Some((node, i)) = stack.pop() {
                let provs = self.providers(node);
                if i < provs.len() {
                    stack.push((node, i + 1));
                    let next = provs[i];
                    match state.get(&next) {
                        Some(1) => return fail(format!("provider cycle through AS{next}")),
                        Some(_) => {}
                        None => {
                            state.insert(next, 1);
                            stack.push((next, 0));
                        }
                    }
                } else {
                    state.insert(node, 2);
                }
            }
        }
        // non-core ASes have a provider
        for rec in &self.ases {
            if rec.tier != Tier::Core && self.providers(rec.id).is_empty() {
                return fail(format!("AS{} has no provider", rec.id));
            }
        }
        // connectivity of the relationship graph
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([self.ases[0].id]);
        seen.insert(self.ases[0].id);
        while let Some(cur) = queue.pop_front() {
            let neighbors = self
                .providers(cur)
                .iter()
                .chain(self.customers(cur))
                .chain(self.peers(cur));
            for &n in neighbors {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        if seen.len() != self.ases.len() {
            return fail("relationship graph is not connected".into());
        }
        // interfaces unique and inside the AS prefix, default present
        let mut all_ifaces = BTreeSet::new();
        for rec in &self.ases {
            for router in &rec.routers {
                if !router.interfaces.contains(&router.default_interface) {
                    return fail(format!(
                        "AS{} router {} default interface not in interface list",
                        rec.id, router.id.0
                    ));
                }
                for &iface in &router.interfaces {
                    if !rec.prefix.contains(iface) {
                        return fail(format!("interface {iface} outside AS{} prefix", rec.id));
                    }
                    if !all_ifaces.insert(iface) {
                        return fail(format!("duplicate interface {iface}"));
                    }
                }
            }
            // intra-AS connectivity
            if !rec.routers.is_empty() {
                let reach = self.intra_reach(rec);
                if reach != rec.routers.len() {
                    return fail(format!("AS{} intra-AS router graph disconnected", rec.id));
                }
            }
        }
        // border link symmetry
        for rec in &self.ases {
            for router in &rec.routers {
                for bl in &router.border_links {
                    let remote = self
                        .as_record(bl.peer_as)
                        .ok_or_else(|| {
                            NetsimError::Validation(format!("border link to unknown {}", bl.peer_as))
                        })?
                        .routers
                        .get(bl.peer_router.0 as usize)
                        .ok_or_else(|| {
                            NetsimError::Validation("border link to unknown router".into())
                        })?;
                    if !remote
                        .border_links
                        .iter()
                        .any(|r| r.peer_as == rec.id && r.peer_router == router.id)
                    {
                        return fail(format!(
                            "asymmetric border link AS{}:{} -> AS{}:{}",
                            rec.id, router.id.0, bl.peer_as, bl.peer_router.0
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn intra_reach(&self, rec: &AsRecord) -> usize {
        let mut seen = BTreeSet::from([RouterId(0)]);
        let mut queue = VecDeque::from([RouterId(0)]);
        while let Some(cur) = queue.pop_front() {
            for link in &rec.routers[cur.0 as usize].intra_links {
                if seen.insert(link.peer) {
                    queue.push_back(link.peer);
                }
            }
        }
        seen.len()
    }
}

/// Mix a stage tag into the topology seed so each generation stage draws
/// from an independent deterministic stream.
pub(crate) fn sub_seed(seed: u64, tag: &str) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for b in tag.bytes() {
        h = h.wrapping_mul(0x100_0000_01b3).wrapping_add(b as u64);
        h ^= h >> 29;
    }
    h
}
