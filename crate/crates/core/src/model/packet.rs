use std::fmt;

use serde::{Deserialize, Serialize};

use super::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PacketId(pub u64);

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// A source-routed packet. Its class is the round it was injected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub id: PacketId,
    pub injection_round: u64,
    pub itinerary: Vec<NodeId>,
    /// Index into `itinerary` of the node currently holding the packet.
    pub hop: usize,
    /// Round in which the packet entered its current queue.
    pub queue_arrival: u64,
    /// `leave_rounds[i]` is the round the packet was heard crossing hop `i`.
    pub leave_rounds: Vec<u64>,
}

impl Packet {
    pub fn new(id: PacketId, injection_round: u64, itinerary: Vec<NodeId>) -> Self {
        Self { id, injection_round, itinerary, hop: 0, queue_arrival: injection_round, leave_rounds: Vec::new() }
    }

    /// Number of hops on the itinerary.
    pub fn hops(&self) -> usize {
        self.itinerary.len() - 1
    }

    pub fn current(&self) -> NodeId {
        self.itinerary[self.hop]
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.itinerary.get(self.hop + 1).copied()
    }

    pub fn hops_remaining(&self) -> usize {
        self.hops() - self.hop
    }

    pub fn is_at_destination(&self) -> bool {
        self.hop == self.hops()
    }

    /// A packet may move from the round after it entered its queue.
    pub fn is_eligible(&self, round: u64) -> bool {
        self.queue_arrival < round
    }

    /// Records a successful crossing of the next hop in `round`.
    pub fn advance(&mut self, round: u64) {
        debug_assert!(!self.is_at_destination());
        debug_assert!(self.leave_rounds.last().is_none_or(|&t| t < round));
        self.hop += 1;
        self.queue_arrival = round;
        self.leave_rounds.push(round);
    }
}
