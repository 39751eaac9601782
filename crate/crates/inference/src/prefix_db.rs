use std::collections::BTreeMap;

use tracemap_core::{AsId, Ip, Prefix};

/// Exact-match secondary directory consulted only when longest-prefix
/// matching fails.
pub type WhoisDirectory = BTreeMap<Ip, AsId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// Resolved, with the tier that answered.
    Lpm(AsId),
    Whois(AsId),
    Unresolved,
}

impl Resolution {
    pub fn as_id(self) -> Option<AsId> {
        match self {
            Resolution::Lpm(a) | Resolution::Whois(a) => Some(a),
            Resolution::Unresolved => None,
        }
    }
}

#[derive(Debug, Default)]
struct Node {
    children: [Option<Box<Node>>; 2],
    value: Option<AsId>,
}

/// Binary trie over announced prefixes; lookup walks the address bits and
/// keeps the deepest value seen, mimicking a router's forwarding
/// decision. Re-inserting a prefix overwrites its owner.
#[derive(Debug, Default)]
pub struct PrefixDb {
    root: Node,
    len: usize,
}

impl PrefixDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: &[(Prefix, AsId)]) -> Self {
        let mut db = PrefixDb::new();
        for &(p, a) in entries {
            db.insert(p, a);
        }
        db
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, prefix: Prefix, owner: AsId) {
        let mut node = &mut self.root;
        let bits = prefix.base().0;
        for depth in 0..prefix.length() {
            let bit = ((bits >> (31 - depth)) & 1) as usize;
            node = node.children[bit].get_or_insert_with(Box::default);
        }
        if node.value.replace(owner).is_none() {
            self.len += 1;
        }
    }

    /// Owner of the longest announced prefix containing `ip`.
    pub fn lookup(&self, ip: Ip) -> Option<AsId> {
        let mut node = &self.root;
        let mut best = node.value;
        for depth in 0..32 {
            let bit = ((ip.0 >> (31 - depth)) & 1) as usize;
            match &node.children[bit] {
                Some(child) => {
                    node = child;
                    if node.value.is_some() {
                        best = node.value;
                    }
                }
                None => break,
            }
        }
        best
    }
}

/// Two-tier address resolution: longest prefix match, then the directory.
/// A miss on both is data, not an error.
pub fn resolve_as(ip: Ip, db: &PrefixDb, whois: &WhoisDirectory) -> Resolution {
    if let Some(a) = db.lookup(ip) {
        return Resolution::Lpm(a);
    }
    if let Some(&a) = whois.get(&ip) {
        return Resolution::Whois(a);
    }
    Resolution::Unresolved
}
