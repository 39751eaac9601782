use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use tracemap_core::{Capability, Ip, Timestamp};

/// Per-agent configuration. The roaming schedule lists (switch time,
/// interface) pairs; the interface active at any instant is the last one
/// switched to, starting from `home_interface`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentConfig {
    pub agent_id: String,
    pub token: String,
    pub home_interface: Ip,
    #[serde(default)]
    pub roaming: Vec<(Timestamp, Ip)>,
    pub capabilities: BTreeSet<Capability>,
    /// Probes per simulated minute.
    pub rate_limit_per_min: u32,
    pub batch_size: usize,
    pub poll_budget: u32,
    #[serde(default)]
    pub start_time: Timestamp,
    #[serde(default)]
    pub local_offset: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_probe_cost")]
    pub probe_cost_secs: u64,
    #[serde(default = "default_poll_interval")]
    pub poll_interval_secs: u64,
}

fn default_probe_cost() -> u64 {
    1
}

fn default_poll_interval() -> u64 {
    60
}

impl AgentConfig {
    pub fn basic(agent_id: &str, home_interface: Ip) -> Self {
        AgentConfig {
            agent_id: agent_id.to_string(),
            token: format!("tk-{agent_id}"),
            home_interface,
            roaming: Vec::new(),
            capabilities: Capability::ALL.into_iter().collect(),
            rate_limit_per_min: 60,
            batch_size: 100,
            poll_budget: 8,
            start_time: 0,
            local_offset: 0,
            seed: 0,
            probe_cost_secs: default_probe_cost(),
            poll_interval_secs: default_poll_interval(),
        }
    }

    /// Interface active at `now` under the roaming schedule.
    pub fn interface_at(&self, now: Timestamp) -> Ip {
        let mut active = self.home_interface;
        for &(switch, iface) in &self.roaming {
            if switch <= now {
                active = iface;
            } else {
                break;
            }
        }
        active
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roaming_schedule_selects_by_time() {
        let mut cfg = AgentConfig::basic("a", Ip(1));
        cfg.roaming = vec![(100, Ip(2)), (200, Ip(3))];
        assert_eq!(cfg.interface_at(0), Ip(1));
        assert_eq!(cfg.interface_at(100), Ip(2));
        assert_eq!(cfg.interface_at(150), Ip(2));
        assert_eq!(cfg.interface_at(5000), Ip(3));
    }
}
