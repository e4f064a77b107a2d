use std::collections::{BTreeMap, BTreeSet};

use super::{NetworkGraph, NodeId, Packet, PacketId};
use crate::{Error, Result};

/// Queues and bookkeeping between rounds.
///
/// Each node holds a single insertion-ordered queue. Ordering semantics are
/// the scheduling policy's business, not the container's.
#[derive(Debug, Clone)]
pub struct RoundState {
    pub round: u64,
    queues: Vec<Vec<PacketId>>,
    in_system: BTreeMap<PacketId, Packet>,
    delivered: BTreeMap<PacketId, Packet>,
    injected: u64,
}

impl RoundState {
    pub fn new(node_count: usize) -> Self {
        Self {
            round: 0,
            queues: vec![Vec::new(); node_count],
            in_system: BTreeMap::new(),
            delivered: BTreeMap::new(),
            injected: 0,
        }
    }

    pub fn queue(&self, v: NodeId) -> &[PacketId] {
        &self.queues[v]
    }

    pub fn queue_sizes(&self) -> Vec<usize> {
        self.queues.iter().map(Vec::len).collect()
    }

    pub fn total_queued(&self) -> usize {
        self.in_system.len()
    }

    pub fn injected(&self) -> u64 {
        self.injected
    }

    pub fn delivered_count(&self) -> usize {
        self.delivered.len()
    }

    pub fn packet(&self, id: PacketId) -> Option<&Packet> {
        self.in_system.get(&id)
    }

    pub fn delivered(&self) -> impl Iterator<Item = &Packet> {
        self.delivered.values()
    }

    pub fn in_system(&self) -> impl Iterator<Item = &Packet> {
        self.in_system.values()
    }

    /// Packets at `v` that may be transmitted this round, in queue order.
    pub fn eligible(&self, v: NodeId, round: u64) -> Vec<&Packet> {
        self.queues[v].iter().map(|id| &self.in_system[id]).filter(|p| p.is_eligible(round)).collect()
    }

    pub fn inject(&mut self, packet: Packet) -> Result<()> {
        if self.in_system.contains_key(&packet.id) || self.delivered.contains_key(&packet.id) {
            return Err(Error::DuplicatePacket(packet.id));
        }
        self.injected += 1;
        if packet.is_at_destination() {
            self.delivered.insert(packet.id, packet);
            return Ok(());
        }
        self.queues[packet.current()].push(packet.id);
        self.in_system.insert(packet.id, packet);
        Ok(())
    }

    /// Moves `id` across its next hop. Returns `true` if it was delivered.
    pub fn advance(&mut self, id: PacketId, round: u64) -> bool {
        let packet = self.in_system.get_mut(&id).expect("advancing a packet not in the system");
        let from = packet.current();
        let pos = self.queues[from].iter().position(|&q| q == id).expect("packet missing from queue");
        self.queues[from].remove(pos);
        packet.advance(round);
        if packet.is_at_destination() {
            let packet = self.in_system.remove(&id).expect("present");
            self.delivered.insert(id, packet);
            true
        } else {
            self.queues[packet.current()].push(id);
            false
        }
    }

    /// Checks conservation, uniqueness of queue membership and itinerary
    /// consistency. Used by the engine after every round in debug builds and
    /// by tests.
    pub fn check_invariants(&self, graph: &NetworkGraph) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (v, queue) in self.queues.iter().enumerate() {
            for id in queue {
                if !seen.insert(*id) {
                    return Err(Error::Precondition(format!("{id} queued twice")));
                }
                let p =
                    self.in_system.get(id).ok_or_else(|| Error::Precondition(format!("{id} queued but unknown")))?;
                if p.current() != v {
                    return Err(Error::Precondition(format!("{id} queued at {v} but located at {}", p.current())));
                }
                if self.delivered.contains_key(id) {
                    return Err(Error::Precondition(format!("{id} both queued and delivered")));
                }
            }
        }
        if seen.len() != self.in_system.len() {
            return Err(Error::Precondition("packet in system without a queue".into()));
        }
        if self.injected != (self.in_system.len() + self.delivered.len()) as u64 {
            return Err(Error::Precondition("packet conservation violated".into()));
        }
        for p in self.delivered.values() {
            if p.leave_rounds.len() != p.hops() || !super::validate_itinerary(graph, &p.itinerary) {
                return Err(Error::Precondition(format!("{} delivered off-itinerary", p.id)));
            }
            if p.leave_rounds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Precondition(format!("{} non-increasing hop rounds", p.id)));
            }
        }
        Ok(())
    }
}
