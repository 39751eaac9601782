use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CoreError;

/// Probe capabilities an agent may or may not have. `TcpSyn` is tracked as
/// a capability flag only; no TCP probe is implemented.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Capability {
    IcmpTraceroute,
    UdpTraceroute,
    IcmpPing,
    UdpPing,
    TcpSyn,
}

impl Capability {
    pub const ALL: [Capability; 5] = [
        Capability::IcmpTraceroute,
        Capability::UdpTraceroute,
        Capability::IcmpPing,
        Capability::UdpPing,
        Capability::TcpSyn,
    ];
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Capability::IcmpTraceroute => "icmp-traceroute",
            Capability::UdpTraceroute => "udp-traceroute",
            Capability::IcmpPing => "icmp-ping",
            Capability::UdpPing => "udp-ping",
            Capability::TcpSyn => "tcp-syn",
        };
        f.write_str(s)
    }
}

impl FromStr for Capability {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s {
            "icmp-traceroute" => Ok(Capability::IcmpTraceroute),
            "udp-traceroute" => Ok(Capability::UdpTraceroute),
            "icmp-ping" => Ok(Capability::IcmpPing),
            "udp-ping" => Ok(Capability::UdpPing),
            "tcp-syn" => Ok(Capability::TcpSyn),
            other => Err(CoreError::ParseCapability(other.to_string())),
        }
    }
}
