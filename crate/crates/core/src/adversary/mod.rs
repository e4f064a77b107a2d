//! Packet injection under the `(b, r)` constraint: at most `r·|τ| + b`
//! packets injected during any interval `τ` may have itineraries through any
//! single node.

mod scripts;
mod stochastic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use scripts::{script_sis_reactive_instability, script_tie_blocking, ScriptedScenario, TieScriptKind};
pub use stochastic::{random_path_pool, CyclicAdversary, StochasticAdversary};

use crate::model::{validate_itinerary, NetworkGraph, NodeId};
use crate::rational::Rate;
use crate::{Error, Result};

/// The adversary's rate and burstiness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub rate: Rate,
    pub burstiness: u64,
}

impl AdversarySpec {
    pub fn new(rate: Rate, burstiness: u64) -> Result<Self> {
        if burstiness == 0 {
            return Err(Error::Rate("burstiness must be at least 1".into()));
        }
        Ok(Self { rate, burstiness })
    }
}

/// One injected packet: the round and its full itinerary, source first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionEvent {
    pub round: u64,
    pub itinerary: Vec<NodeId>,
}

impl InjectionEvent {
    pub fn new(round: u64, itinerary: Vec<NodeId>) -> Self {
        Self { round, itinerary }
    }

    pub fn source(&self) -> NodeId {
        self.itinerary[0]
    }
}

/// Checks that events are sorted and every itinerary is a walk of at least
/// one hop in `graph`.
pub fn validate_events(graph: &NetworkGraph, events: &[InjectionEvent]) -> Result<()> {
    if let Some(w) = events.windows(2).find(|w| w[0].round > w[1].round) {
        return Err(Error::Config(format!("injections out of order at round {}", w[1].round)));
    }
    for e in events {
        if e.itinerary.len() < 2 {
            return Err(Error::Itinerary { path: e.itinerary.clone(), reason: "needs at least one hop".into() });
        }
        if !validate_itinerary(graph, &e.itinerary) {
            return Err(Error::Itinerary { path: e.itinerary.clone(), reason: "not a walk in the graph".into() });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Admissibility {
    Pass,
    /// `count` packets through `node` were injected in rounds `start..=end`.
    Fail {
        start: u64,
        end: u64,
        node: NodeId,
        count: u64,
    },
}

impl Admissibility {
    pub fn passed(&self) -> bool {
        matches!(self, Admissibility::Pass)
    }
}

/// Exhaustive admissibility check over all intervals in `0..=horizon`.
///
/// Only intervals starting and ending at an injection round through the node
/// can be tight, so those are the ones scanned. A packet visiting a node
/// twice counts once. The reported violation is the first by
/// `(start, end, node)` among tight intervals.
pub fn check_admissibility(events: &[InjectionEvent], rate: Rate, burstiness: u64, horizon: u64) -> Admissibility {
    // node -> (round -> count)
    let mut per_node: BTreeMap<NodeId, BTreeMap<u64, u64>> = BTreeMap::new();
    for e in events.iter().filter(|e| e.round <= horizon) {
        let mut nodes = e.itinerary.clone();
        nodes.sort_unstable();
        nodes.dedup();
        for v in nodes {
            *per_node.entry(v).or_default().entry(e.round).or_default() += 1;
        }
    }
    let (p, q) = (rate.numer() as u128, rate.denom() as u128);
    let b = burstiness as u128;
    let mut worst: Option<(u64, u64, NodeId, u64)> = None;
    for (&v, counts) in &per_node {
        let rounds: Vec<(u64, u64)> = counts.iter().map(|(&t, &c)| (t, c)).collect();
        'node: for i in 0..rounds.len() {
            if worst.is_some_and(|(s, ..)| s < rounds[i].0) {
                break;
            }
            let mut count = 0u64;
            for &(end, c) in &rounds[i..] {
                count += c;
                let len = (end - rounds[i].0 + 1) as u128;
                if count as u128 * q > p * len + b * q {
                    let cand = (rounds[i].0, end, v, count);
                    if worst.is_none_or(|w| (cand.0, cand.1, cand.2) < (w.0, w.1, w.2)) {
                        worst = Some(cand);
                    }
                    break 'node;
                }
            }
        }
    }
    match worst {
        None => Admissibility::Pass,
        Some((start, end, node, count)) => Admissibility::Fail { start, end, node, count },
    }
}
