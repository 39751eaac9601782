use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracemap_core::{AsId, Ip, Prefix};

use crate::topology::sub_seed;
use crate::GroundTruthTopology;

/// The announced prefix table plus the interfaces deliberately left
/// uncovered by any announcement.
#[derive(Debug, Clone)]
pub struct PrefixTable {
    pub entries: Vec<(Prefix, AsId)>,
    pub omitted: Vec<Ip>,
}

impl PrefixTable {
    /// Build the announcement table for a topology. Each AS announces its
    /// /16; a seeded share of ASes additionally delegates its trailing /24
    /// (which never holds interfaces) to some other AS, keeping
    /// longest-prefix selection nontrivial. A seeded share of interfaces
    /// is excluded from coverage by splitting the announcement around
    /// them, so resolving those addresses must fall back to the
    /// directory.
    pub fn build(topo: &GroundTruthTopology) -> PrefixTable {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(topo.seed, "prefix-table"));
        let params = &topo.params;
        let mut entries = Vec::new();
        let mut omitted = Vec::new();
        let as_ids: Vec<AsId> = topo.as_ids().collect();
        for rec in &topo.ases {
            let mut excluded = Vec::new();
            for router in &rec.routers {
                for &iface in &router.interfaces {
                    if rng.gen_bool(params.interface_omission_fraction) {
                        excluded.push(iface);
                    }
                }
            }
            if excluded.is_empty() {
                entries.push((rec.prefix, rec.id));
            } else {
                cover_excluding(rec.prefix, &excluded, &mut entries, rec.id);
                omitted.extend_from_slice(&excluded);
            }
            if params.subprefix_fraction > 0.0
                && as_ids.len() > 1
                && rng.gen_bool(params.subprefix_fraction)
            {
                let delegate = loop {
                    let cand = as_ids[rng.gen_range(0..as_ids.len())];
                    if cand != rec.id {
                        break cand;
                    }
                };
                let tail = Ip(rec.prefix.base().0 | 0xff00);
                let sub = Prefix::new(tail, 24).expect("aligned /24");
                entries.push((sub, delegate));
            }
        }
        PrefixTable { entries, omitted }
    }
}

/// Announce `prefix` minus the excluded single addresses, as the minimal
/// set of sub-prefixes.
fn cover_excluding(
    prefix: Prefix,
    excluded: &[Ip],
    out: &mut Vec<(Prefix, AsId)>,
    owner: AsId,
) {
    let inside: Vec<Ip> = excluded.iter().copied().filter(|&ip| prefix.contains(ip)).collect();
    if inside.is_empty() {
        out.push((prefix, owner));
        return;
    }
    if prefix.length() == 32 {
        return;
    }
    let half_len = prefix.length() + 1;
    let lo = Prefix::containing(prefix.base(), half_len);
    let hi = Prefix::containing(Ip(prefix.base().0 | (1 << (32 - half_len as u32))), half_len);
    cover_excluding(lo, &inside, out, owner);
    cover_excluding(hi, &inside, out, owner);
}

/// Simulated registry: exact address-to-AS entries covering a seeded
/// share of the interfaces the prefix table misses.
pub fn whois_directory(topo: &GroundTruthTopology, omitted: &[Ip]) -> BTreeMap<Ip, AsId> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(topo.seed, "whois"));
    let mut dir = BTreeMap::new();
    for &ip in omitted {
        if rng.gen_bool(topo.params.whois_coverage) {
            let owner = topo.as_of_ip(ip).expect("omitted interface has an owner");
            dir.insert(ip, owner);
        }
    }
    dir
}
