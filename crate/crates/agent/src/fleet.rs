use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracemap_coordinator::CoordinatorApi;
use tracemap_core::{AsId, Ip};
use tracemap_netsim::{GroundTruthTopology, Tier};

use crate::{Agent, AgentConfig, AgentError};

/// Parse a placement spec like `"stub:0.5,middle:0.2,core:1.0"` into
/// per-tier selection fractions.
pub fn parse_placement(spec: &str) -> Result<Vec<(Tier, f64)>, String> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (tier, frac) = part
            .split_once(':')
            .ok_or_else(|| format!("bad placement entry `{part}`, expected tier:fraction"))?;
        let tier = match tier {
            "core" => Tier::Core,
            "middle" => Tier::Middle,
            "stub" => Tier::Stub,
            other => return Err(format!("unknown tier `{other}`")),
        };
        let frac: f64 = frac
            .parse()
            .map_err(|_| format!("bad fraction in `{part}`"))?;
        if !(0.0..=1.0).contains(&frac) {
            return Err(format!("fraction out of range in `{part}`"));
        }
        out.push((tier, frac));
    }
    if out.is_empty() {
        return Err("empty placement spec".into());
    }
    Ok(out)
}

/// Choose host ASes by a seeded per-tier sample; each selected AS hosts
/// one agent at its first router's default interface.
pub fn place_agents(
    topo: &GroundTruthTopology,
    placement: &[(Tier, f64)],
    seed: u64,
) -> Vec<(AsId, Ip)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x666c_6565_74);
    let mut out = Vec::new();
    for rec in &topo.ases {
        let Some(&(_, frac)) = placement.iter().find(|(t, _)| *t == rec.tier) else {
            continue;
        };
        if rng.gen_bool(frac) {
            out.push((rec.id, rec.routers[0].default_interface));
        }
    }
    out
}

/// Build one agent per placement slot. `tune` can adjust each config
/// (capabilities, rate limits, roaming) after the defaults are set.
pub fn build_fleet(
    topo: &Arc<GroundTruthTopology>,
    placement: &[(AsId, Ip)],
    seed: u64,
    mut tune: impl FnMut(usize, AsId, &mut AgentConfig),
) -> Vec<Agent> {
    placement
        .iter()
        .enumerate()
        .map(|(i, &(asid, iface))| {
            let mut config = AgentConfig::basic(&format!("agent-as{}", asid.0), iface);
            config.seed = seed ^ ((i as u64 + 1) * 0x9e37_79b9);
            tune(i, asid, &mut config);
            Agent::new(config, topo.clone())
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct FleetOutcome {
    pub total_records: u64,
    pub cycles: usize,
}

/// Drive a fleet sequentially against one coordinator handle: register
/// everyone, then cycle agents round-robin until a full round assigns no
/// work. Each agent lives on its own virtual timeline starting at the
/// common epoch, so this sequential schedule is deterministic while the
/// simulated measurement windows overlap.
pub fn run_fleet(
    agents: &mut [Agent],
    api: &mut dyn CoordinatorApi,
    max_rounds: usize,
) -> Result<FleetOutcome, AgentError> {
    let mut outcome = FleetOutcome::default();
    for agent in agents.iter_mut() {
        agent.register(api)?;
    }
    for _ in 0..max_rounds {
        let mut assigned = 0;
        for agent in agents.iter_mut() {
            let cycle = agent.run_cycle(api)?;
            assigned += cycle.assignments_run;
            outcome.total_records += cycle.records_reported;
        }
        outcome.cycles += 1;
        if assigned == 0 {
            break;
        }
    }
    Ok(outcome)
}
