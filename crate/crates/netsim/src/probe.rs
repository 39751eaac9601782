use serde::{Deserialize, Serialize};
use tracemap_core::Ip;

use crate::route::RouteTables;
use crate::{GroundTruthTopology, NetsimError, RouterId};
use tracemap_core::AsId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeKind {
    Icmp,
    Udp,
}

/// One traceroute hop: the responding interface, or silence. A hop stays
/// silent when its router never answers traceroute or its AS filters the
/// probe kind; silence carries no address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hop {
    Known(Ip),
    NoReply,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub src: Ip,
    pub dst: Ip,
    pub hops: Vec<Hop>,
    pub probe_kind: ProbeKind,
    pub reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PingResult {
    pub src: Ip,
    pub target: Ip,
    pub responder: Option<Ip>,
    pub probe_kind: ProbeKind,
}

/// Full router-level walk from the source interface toward `dst`:
/// the source router first, then every router crossed. When `dst` is not
/// an interface the walk ends at the entry router of its AS.
fn expand_router_path(
    topo: &GroundTruthTopology,
    src_as: AsId,
    src_router: RouterId,
    dst: Ip,
) -> Option<Vec<(AsId, RouterId)>> {
    let dst_owner = topo.find_iface(dst);
    let dst_as = dst_owner.map(|(a, _)| a).or_else(|| topo.as_of_ip(dst))?;
    let as_path = RouteTables::new(topo, dst_as).path_from(src_as)?;

    let mut routers: Vec<(AsId, RouterId)> = vec![(src_as, src_router)];
    let mut cur = (src_as, src_router);
    for w in as_path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (exit_r, entry_r) = topo
            .border_routers(a, b)
            .expect("routed step follows a relationship edge");
        for r in topo.intra_path(a, cur.1, exit_r).into_iter().skip(1) {
            routers.push((a, r));
        }
        routers.push((b, entry_r));
        cur = (b, entry_r);
    }
    if let Some((da, dr)) = dst_owner {
        for r in topo.intra_path(da, cur.1, dr).into_iter().skip(1) {
            routers.push((da, r));
        }
    }
    Some(routers)
}

/// Number of router hops from a source interface to `dst`, or None when
/// unroutable. Used for the synthetic RTT model.
pub fn hop_distance(topo: &GroundTruthTopology, src_iface: Ip, dst: Ip) -> Option<u32> {
    let (src_as, src_router) = topo.find_iface(src_iface)?;
    let routers = expand_router_path(topo, src_as, src_router, dst)?;
    Some((routers.len() - 1) as u32)
}

/// Simulated traceroute. Every crossed router reports the interface
/// facing the previous hop; non-responding routers and probe-filtering
/// ASes yield NoReply hops. The result is unreached when the destination
/// AS filters the probe kind, the address is not an interface, or policy
/// routing offers no path.
pub fn traceroute(
    topo: &GroundTruthTopology,
    src_iface: Ip,
    dst: Ip,
    kind: ProbeKind,
) -> Result<TraceResult, NetsimError> {
    let (src_as, src_router) = topo
        .find_iface(src_iface)
        .ok_or(NetsimError::UnknownInterface(src_iface))?;
    let unreached = |hops| TraceResult {
        src: src_iface,
        dst,
        hops,
        probe_kind: kind,
        reached: false,
    };
    let Some(routers) = expand_router_path(topo, src_as, src_router, dst) else {
        return Ok(unreached(Vec::new()));
    };
    let dst_owner = topo.find_iface(dst);

    let mut hops = Vec::with_capacity(routers.len().saturating_sub(1));
    for i in 1..routers.len() {
        let (asid, rid) = routers[i];
        let rec = topo.router(asid, rid);
        if !rec.responds_to_traceroute || topo.blocks(asid, kind) {
            hops.push(Hop::NoReply);
        } else {
            hops.push(Hop::Known(topo.facing_iface(asid, rid, routers[i - 1])));
        }
    }
    let reached = match dst_owner {
        Some((da, _)) => !topo.blocks(da, kind),
        None => false,
    };
    if routers.len() == 1 {
        // destination sits on the source router itself
        if reached {
            hops.push(Hop::Known(dst));
        }
        return Ok(TraceResult {
            src: src_iface,
            dst,
            hops,
            probe_kind: kind,
            reached,
        });
    }
    Ok(TraceResult {
        src: src_iface,
        dst,
        hops,
        probe_kind: kind,
        reached,
    })
}

/// Simulated ping. A responding router answers from the interface facing
/// the direction the probe came from when the path enters it through a
/// link; otherwise (the probe never crosses a link, i.e. the target is on
/// the local router) it answers from its default interface. Filtered
/// kinds, unknown addresses, and policy-unreachable targets all yield no
/// responder.
pub fn ping(
    topo: &GroundTruthTopology,
    src_iface: Ip,
    target: Ip,
    kind: ProbeKind,
) -> Result<PingResult, NetsimError> {
    let (src_as, src_router) = topo
        .find_iface(src_iface)
        .ok_or(NetsimError::UnknownInterface(src_iface))?;
    let responder = (|| {
        let (target_as, target_router) = topo.find_iface(target)?;
        if topo.blocks(target_as, kind) {
            return None;
        }
        if (target_as, target_router) == (src_as, src_router) {
            return Some(topo.router(target_as, target_router).default_interface);
        }
        let routers = expand_router_path(topo, src_as, src_router, target)?;
        let n = routers.len();
        debug_assert!(n >= 2);
        debug_assert_eq!(routers[n - 1], (target_as, target_router));
        Some(topo.facing_iface(target_as, target_router, routers[n - 2]))
    })();
    Ok(PingResult {
        src: src_iface,
        target,
        responder,
        probe_kind: kind,
    })
}
