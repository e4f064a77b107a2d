//! Transmission oracles.
//!
//! An oracle tells every node, round by round, whether it may transmit.
//! Scripted schedules additionally assert which links are "up", meaning a
//! transmission across them is heard; they are what the instability
//! constructions are written in. Implemented oracles (work-conserving,
//! round-robin, transmitter arrays) only indicate permissions, and hearing is
//! then decided by the radio collision rules.

mod certify;
mod coloring;
mod transmitter;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use certify::{certify_link_latency, certify_node_latency, certify_schedule_link_latency, LatencyVerdict};
pub use coloring::{color_links, latency_schedule, LatencyScheduleOptions};
pub use transmitter::{TransmitterArray, TransmitterVerdict};

use crate::model::{Link, NetworkGraph, NodeId};
use crate::{Error, Result};

/// Whether an oracle only bounds per-link latency, or per-node latency over
/// any link as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityClass {
    LinkLatencyOnly,
    Regular,
}

/// Latency an oracle claims, with its class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyClaim {
    pub h: u64,
    pub class: RegularityClass,
}

/// One round of a scripted schedule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedRound {
    pub permitted: BTreeSet<NodeId>,
    pub up: BTreeSet<Link>,
}

/// Explicit per-round permissions and heard links.
///
/// Rounds without an entry permit nobody. With a `period`, round `t` reads the
/// entry for `t mod period`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedSchedule {
    rounds: BTreeMap<u64, ScriptedRound>,
    period: Option<u64>,
    claimed: Option<LatencyClaim>,
}

impl ScriptedSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn periodic(period: u64) -> Self {
        Self { period: Some(period), ..Self::default() }
    }

    pub fn with_claim(mut self, claim: LatencyClaim) -> Self {
        self.claimed = Some(claim);
        self
    }

    pub fn claim(&self) -> Option<LatencyClaim> {
        self.claimed
    }

    pub fn period(&self) -> Option<u64> {
        self.period
    }

    /// Sets link `(u, w)` up in `round` and permits `u`.
    pub fn set_up(&mut self, round: u64, link: Link) {
        let entry = self.rounds.entry(round).or_default();
        entry.permitted.insert(link.0);
        entry.up.insert(link);
    }

    pub fn permit(&mut self, round: u64, node: NodeId) {
        self.rounds.entry(round).or_default().permitted.insert(node);
    }

    pub fn insert(&mut self, round: u64, entry: ScriptedRound) {
        self.rounds.insert(round, entry);
    }

    pub fn entries(&self) -> impl Iterator<Item = (&u64, &ScriptedRound)> {
        self.rounds.iter()
    }

    pub fn at(&self, round: u64) -> Option<&ScriptedRound> {
        let key = match self.period {
            Some(p) => round % p,
            None => round,
        };
        self.rounds.get(&key)
    }

    pub fn is_up(&self, round: u64, link: Link) -> bool {
        self.at(round).is_some_and(|r| r.up.contains(&link))
    }

    /// Up links must be edges leaving permitted nodes, and no receiver may
    /// have two up links into it in one round (single-port hearing).
    pub fn validate(&self, graph: &NetworkGraph) -> Result<()> {
        if self.period == Some(0) {
            return Err(Error::Oracle("period must be positive".into()));
        }
        for (&round, entry) in &self.rounds {
            if let Some(p) = self.period {
                if round >= p {
                    return Err(Error::Oracle(format!("round {round} outside period {p}")));
                }
            }
            if let Some(&v) = entry.permitted.iter().find(|&&v| v >= graph.node_count()) {
                return Err(Error::NodeOutOfRange { node: v, n: graph.node_count() });
            }
            let mut receivers = BTreeSet::new();
            for &(u, w) in &entry.up {
                if !graph.has_edge(u, w) {
                    return Err(Error::Oracle(format!("round {round}: up link {u}->{w} is not an edge")));
                }
                if !entry.permitted.contains(&u) {
                    return Err(Error::Oracle(format!("round {round}: up link {u}->{w} from a node not permitted")));
                }
                if !receivers.insert(w) {
                    return Err(Error::Oracle(format!("round {round}: node {w} has two up links into it")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleSchedule {
    /// Every node may transmit in every round.
    WorkConserving,
    /// Node `round mod n` holds the token.
    RoundRobin,
    Transmitter(TransmitterArray),
    Scripted(ScriptedSchedule),
}

/// What the oracle says for one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Indication {
    pub permitted: BTreeSet<NodeId>,
    /// Only scripted schedules assert heard links.
    pub up: Option<BTreeSet<Link>>,
}

impl OracleSchedule {
    pub fn kind(&self) -> &'static str {
        match self {
            OracleSchedule::WorkConserving => "work_conserving",
            OracleSchedule::RoundRobin => "round_robin",
            OracleSchedule::Transmitter(_) => "transmitter",
            OracleSchedule::Scripted(_) => "scripted",
        }
    }

    pub fn indicate(&self, round: u64, node_count: usize) -> Indication {
        match self {
            OracleSchedule::WorkConserving => Indication { permitted: (0..node_count).collect(), up: None },
            OracleSchedule::RoundRobin => {
                Indication { permitted: std::iter::once((round % node_count as u64) as NodeId).collect(), up: None }
            }
            OracleSchedule::Transmitter(array) => {
                Indication { permitted: array.permitted(round).into_iter().collect(), up: None }
            }
            OracleSchedule::Scripted(s) => match s.at(round) {
                Some(entry) => Indication { permitted: entry.permitted.clone(), up: Some(entry.up.clone()) },
                None => Indication { permitted: BTreeSet::new(), up: Some(BTreeSet::new()) },
            },
        }
    }

    /// Latency the oracle claims under radio collision rules, if bounded.
    pub fn claimed_latency(&self, node_count: usize) -> Option<LatencyClaim> {
        match self {
            OracleSchedule::WorkConserving => None,
            OracleSchedule::RoundRobin => Some(LatencyClaim { h: node_count as u64, class: RegularityClass::Regular }),
            OracleSchedule::Transmitter(a) => {
                a.verify().passed().then(|| LatencyClaim { h: a.length() as u64, class: RegularityClass::Regular })
            }
            OracleSchedule::Scripted(s) => s.claim(),
        }
    }

    pub fn validate(&self, graph: &NetworkGraph) -> Result<()> {
        match self {
            OracleSchedule::Transmitter(a) if a.node_count() != graph.node_count() => {
                Err(Error::Oracle(format!("transmitter has {} rows for {} nodes", a.node_count(), graph.node_count())))
            }
            OracleSchedule::Scripted(s) => s.validate(graph),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_and_work_conserving() {
        let rr = OracleSchedule::RoundRobin.indicate(7, 3);
        assert_eq!(rr.permitted.into_iter().collect::<Vec<_>>(), vec![1]);
        let wc = OracleSchedule::WorkConserving.indicate(123, 4);
        assert_eq!(wc.permitted.len(), 4);
        assert!(wc.up.is_none());
    }

    #[test]
    fn transmitter_identity_matches_round_robin() {
        let n = 5;
        let tx = OracleSchedule::Transmitter(TransmitterArray::identity(n));
        for t in 0..40 {
            assert_eq!(tx.indicate(t, n), OracleSchedule::RoundRobin.indicate(t, n));
        }
    }

    #[test]
    fn periodic_scripted_schedule() {
        let mut s = ScriptedSchedule::periodic(2);
        s.set_up(0, (0, 1));
        s.set_up(1, (0, 2));
        assert!(s.is_up(10, (0, 1)));
        assert!(s.is_up(11, (0, 2)));
        assert!(!s.is_up(11, (0, 1)));
        let g = NetworkGraph::new(3, &[(0, 1), (0, 2)]).unwrap();
        s.validate(&g).unwrap();
    }

    #[test]
    fn scripted_validation_catches_bad_links() {
        let g = NetworkGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let mut s = ScriptedSchedule::new();
        s.set_up(0, (0, 2));
        assert!(s.validate(&g).is_err());

        let mut s = ScriptedSchedule::new();
        s.set_up(0, (0, 1));
        s.set_up(0, (2, 1));
        assert!(s.validate(&g).is_err(), "two links into node 1");

        let mut s = ScriptedSchedule::new();
        s.insert(0, ScriptedRound { permitted: BTreeSet::new(), up: [(0, 1)].into_iter().collect() });
        assert!(s.validate(&g).is_err(), "tail not permitted");
    }
}
