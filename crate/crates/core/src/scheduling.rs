//! Scheduling policies and tie-breaking regimes.
//!
//! A policy maps each packet to a priority computed from the packet alone
//! (injection round, position on its itinerary, or queue arrival). Among the
//! packets of maximal priority the [`TieBreak`] decides. Who controls ties
//! matters a great deal under reactive hearing control, so tie-breaking is a
//! separate, injectable strategy.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{NodeId, Packet, PacketId};
use crate::rng::{mix, rng_for};
use crate::{Error, Result};

/// What a scheduling policy needs to know about a packet.
pub trait Schedulable {
    fn id(&self) -> PacketId;
    fn injection_round(&self) -> u64;
    fn queue_arrival(&self) -> u64;
    fn hops_traversed(&self) -> usize;
    fn hops_remaining(&self) -> usize;
}

impl Schedulable for Packet {
    fn id(&self) -> PacketId {
        self.id
    }
    fn injection_round(&self) -> u64 {
        self.injection_round
    }
    fn queue_arrival(&self) -> u64 {
        self.queue_arrival
    }
    fn hops_traversed(&self) -> usize {
        self.hop
    }
    fn hops_remaining(&self) -> usize {
        Packet::hops_remaining(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Fifo,
    Lifo,
    /// Shortest-in-system: newest injection first.
    Sis,
    /// Longest-in-system: oldest injection first.
    Lis,
    /// Nearest-to-go: fewest remaining hops first.
    Ntg,
    /// Furthest-to-go.
    Ftg,
    /// Nearest-to-source: fewest traversed hops first.
    Nts,
    /// Furthest-from-source.
    Ffs,
}

impl Policy {
    pub const ALL: [Policy; 8] =
        [Policy::Fifo, Policy::Lifo, Policy::Sis, Policy::Lis, Policy::Ntg, Policy::Ftg, Policy::Nts, Policy::Ffs];

    /// Larger is served first.
    pub fn priority<P: Schedulable + ?Sized>(self, p: &P) -> i64 {
        match self {
            Policy::Fifo => -(p.queue_arrival() as i64),
            Policy::Lifo => p.queue_arrival() as i64,
            Policy::Sis => p.injection_round() as i64,
            Policy::Lis => -(p.injection_round() as i64),
            Policy::Ntg => -(p.hops_remaining() as i64),
            Policy::Ftg => p.hops_remaining() as i64,
            Policy::Nts => -(p.hops_traversed() as i64),
            Policy::Ffs => p.hops_traversed() as i64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::Fifo => "fifo",
            Policy::Lifo => "lifo",
            Policy::Sis => "sis",
            Policy::Lis => "lis",
            Policy::Ntg => "ntg",
            Policy::Ftg => "ftg",
            Policy::Nts => "nts",
            Policy::Ffs => "ffs",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown policy {s:?}")))
    }
}

/// Scripted tie decisions keyed by `(round, node)`.
pub type TieScript = BTreeMap<(u64, NodeId), PacketId>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArbitraryRule {
    /// Lowest packet id wins. Trivially permanent as well.
    FixedId,
    /// A fresh uniform choice per `(round, node)`.
    SeededRandom { seed: u64 },
    /// The scripted packet wins whenever it is among the tied candidates;
    /// otherwise falls back to the lowest id.
    Scripted(TieScript),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermanentRule {
    FixedId,
    /// Each `(node, packet)` pair draws a fixed random rank.
    Seeded {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TieBreak {
    Arbitrary(ArbitraryRule),
    Permanent(PermanentRule),
}

impl TieBreak {
    pub fn name(&self) -> &'static str {
        match self {
            TieBreak::Arbitrary(ArbitraryRule::FixedId) => "fixed_id",
            TieBreak::Arbitrary(ArbitraryRule::SeededRandom { .. }) => "seeded_random",
            TieBreak::Arbitrary(ArbitraryRule::Scripted(_)) => "scripted",
            TieBreak::Permanent(PermanentRule::FixedId) => "permanent",
            TieBreak::Permanent(PermanentRule::Seeded { .. }) => "permanent_seeded",
        }
    }

    pub fn is_permanent(&self) -> bool {
        matches!(self, TieBreak::Permanent(_) | TieBreak::Arbitrary(ArbitraryRule::FixedId))
    }
}

/// Persisted pairwise decisions for permanent tie-breaking.
///
/// Once `p` is ranked above `q` at a node it stays ranked above `q` at that
/// node for the rest of the execution. Decisions at different nodes are
/// independent.
#[derive(Debug, Clone)]
pub struct PermanentOrder {
    rule: PermanentRule,
    decided: HashMap<(NodeId, PacketId, PacketId), bool>,
}

impl PermanentOrder {
    pub fn new(rule: PermanentRule) -> Self {
        Self { rule, decided: HashMap::new() }
    }

    fn rank(&self, node: NodeId, p: PacketId) -> u64 {
        match self.rule {
            PermanentRule::FixedId => u64::MAX - p.0,
            PermanentRule::Seeded { seed } => mix(&[seed, node as u64, p.0]),
        }
    }

    /// Returns `true` iff `p` has priority over `q` at `node`, fixing the
    /// order on first call.
    pub fn record(&mut self, node: NodeId, p: PacketId, q: PacketId) -> bool {
        assert_ne!(p, q, "a packet is not tied with itself");
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        let lo_first = match self.decided.get(&(node, lo, hi)) {
            Some(&d) => d,
            None => {
                let (rl, rh) = (self.rank(node, lo), self.rank(node, hi));
                let d = rl > rh || (rl == rh && lo < hi);
                self.decided.insert((node, lo, hi), d);
                d
            }
        };
        if p == lo {
            lo_first
        } else {
            !lo_first
        }
    }

    pub fn decisions(&self) -> usize {
        self.decided.len()
    }
}

/// A policy plus its tie-breaking state.
#[derive(Debug, Clone)]
pub struct Scheduler {
    policy: Policy,
    tie: TieBreak,
    permanent: Option<PermanentOrder>,
}

impl Scheduler {
    pub fn new(policy: Policy, tie: TieBreak) -> Self {
        let permanent = match &tie {
            TieBreak::Permanent(rule) => Some(PermanentOrder::new(*rule)),
            TieBreak::Arbitrary(_) => None,
        };
        Self { policy, tie, permanent }
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn tie(&self) -> &TieBreak {
        &self.tie
    }

    pub fn permanent_order(&mut self) -> Option<&mut PermanentOrder> {
        self.permanent.as_mut()
    }

    /// Picks the candidate of maximal priority at `node`; ties go to the
    /// tie-breaking regime. `None` iff `candidates` is empty.
    pub fn select<P: Schedulable + ?Sized>(&mut self, node: NodeId, candidates: &[&P], round: u64) -> Option<PacketId> {
        let top = candidates.iter().map(|p| self.policy.priority(*p)).max()?;
        let mut tied: Vec<PacketId> =
            candidates.iter().filter(|p| self.policy.priority(**p) == top).map(|p| p.id()).collect();
        tied.sort_unstable();
        tied.dedup();
        if tied.len() == 1 {
            return Some(tied[0]);
        }
        let choice = match &self.tie {
            TieBreak::Arbitrary(ArbitraryRule::FixedId) => tied[0],
            TieBreak::Arbitrary(ArbitraryRule::SeededRandom { seed }) => {
                let mut rng = rng_for(&[*seed, round, node as u64]);
                tied[rng.gen_range(0..tied.len())]
            }
            TieBreak::Arbitrary(ArbitraryRule::Scripted(script)) => match script.get(&(round, node)) {
                Some(p) if tied.contains(p) => *p,
                _ => tied[0],
            },
            TieBreak::Permanent(_) => {
                let order = self.permanent.as_mut().expect("permanent order present");
                let mut best = tied[0];
                for &c in &tied[1..] {
                    if order.record(node, c, best) {
                        best = c;
                    }
                }
                best
            }
        };
        Some(choice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt(id: u64, injected: u64) -> Packet {
        Packet::new(PacketId(id), injected, vec![0, 1])
    }

    fn pick(s: &mut Scheduler, cands: &[Packet], round: u64) -> Option<PacketId> {
        let refs: Vec<&Packet> = cands.iter().collect();
        s.select(0, &refs, round)
    }

    #[test]
    fn sis_prefers_newest_lis_oldest() {
        let c = [pkt(1, 3), pkt(2, 7)];
        let mut sis = Scheduler::new(Policy::Sis, TieBreak::Arbitrary(ArbitraryRule::FixedId));
        let mut lis = Scheduler::new(Policy::Lis, TieBreak::Arbitrary(ArbitraryRule::FixedId));
        assert_eq!(pick(&mut sis, &c, 10), Some(PacketId(2)));
        assert_eq!(pick(&mut lis, &c, 10), Some(PacketId(1)));
    }

    #[test]
    fn single_and_empty_candidates() {
        for policy in Policy::ALL {
            let mut s = Scheduler::new(policy, TieBreak::Arbitrary(ArbitraryRule::SeededRandom { seed: 3 }));
            assert_eq!(pick(&mut s, &[pkt(9, 1)], 4), Some(PacketId(9)));
            assert_eq!(pick(&mut s, &[], 4), None);
        }
    }

    #[test]
    fn path_based_policies_use_itinerary_position() {
        let mut near = Packet::new(PacketId(1), 0, vec![0, 1, 2, 3]);
        near.advance(1);
        near.advance(2);
        let far = Packet::new(PacketId(2), 0, vec![2, 3, 4, 5]);
        let c = [near, far];
        let tie = || TieBreak::Arbitrary(ArbitraryRule::FixedId);
        assert_eq!(pick(&mut Scheduler::new(Policy::Ntg, tie()), &c, 5), Some(PacketId(1)));
        assert_eq!(pick(&mut Scheduler::new(Policy::Ftg, tie()), &c, 5), Some(PacketId(2)));
        assert_eq!(pick(&mut Scheduler::new(Policy::Nts, tie()), &c, 5), Some(PacketId(2)));
        assert_eq!(pick(&mut Scheduler::new(Policy::Ffs, tie()), &c, 5), Some(PacketId(1)));
        assert_eq!(pick(&mut Scheduler::new(Policy::Fifo, tie()), &c, 5), Some(PacketId(2)));
        assert_eq!(pick(&mut Scheduler::new(Policy::Lifo, tie()), &c, 5), Some(PacketId(1)));
    }

    #[test]
    fn scripted_ties_follow_the_script_only_among_tied() {
        let mut script = TieScript::new();
        script.insert((4, 0), PacketId(2));
        script.insert((5, 0), PacketId(3));
        let mut s = Scheduler::new(Policy::Sis, TieBreak::Arbitrary(ArbitraryRule::Scripted(script)));
        let c = [pkt(1, 2), pkt(2, 2), pkt(3, 1)];
        assert_eq!(pick(&mut s, &c, 4), Some(PacketId(2)));
        // packet 3 is not tied at the top, so the script cannot promote it
        assert_eq!(pick(&mut s, &c, 5), Some(PacketId(1)));
        assert_eq!(pick(&mut s, &c, 6), Some(PacketId(1)));
    }

    #[test]
    fn permanent_order_is_sticky_per_node() {
        let mut order = PermanentOrder::new(PermanentRule::Seeded { seed: 11 });
        let (p, q) = (PacketId(4), PacketId(8));
        let first = order.record(0, p, q);
        for _ in 0..5 {
            assert_eq!(order.record(0, p, q), first);
            assert_eq!(order.record(0, q, p), !first);
        }
        // nodes decide independently; across many nodes both outcomes occur
        let outcomes: Vec<bool> = (1..64).map(|v| order.record(v, p, q)).collect();
        assert!(outcomes.iter().any(|&b| b) && outcomes.iter().any(|&b| !b));
    }

    #[test]
    fn permanent_fixed_id_prefers_lower_id() {
        let mut order = PermanentOrder::new(PermanentRule::FixedId);
        assert!(order.record(3, PacketId(1), PacketId(2)));
        assert!(!order.record(3, PacketId(2), PacketId(1)));
    }

    #[test]
    fn seeded_random_is_a_function_of_round_and_node() {
        let c = [pkt(1, 2), pkt(2, 2), pkt(3, 2), pkt(4, 2)];
        let tie = TieBreak::Arbitrary(ArbitraryRule::SeededRandom { seed: 99 });
        let mut a = Scheduler::new(Policy::Lis, tie.clone());
        let mut b = Scheduler::new(Policy::Lis, tie);
        let xs: Vec<_> = (0..50).map(|t| pick(&mut a, &c, t)).collect();
        let ys: Vec<_> = (0..50).map(|t| pick(&mut b, &c, t)).collect();
        assert_eq!(xs, ys);
        assert!(xs.iter().collect::<std::collections::BTreeSet<_>>().len() > 1);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("edf".parse::<Policy>().is_err());
    }
}
