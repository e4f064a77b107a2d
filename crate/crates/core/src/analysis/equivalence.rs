//! Wireline networks and their radio equivalents.
//!
//! Every directed link `e` of a wireline network becomes a radio node `v^e`;
//! `v^e` and `v^f` are adjacent when `e = (x, u)` and `f = (u, y)`, so a
//! packet leaving `e`'s queue can enter `f`'s. Run with a work-conserving
//! oracle and interference-free hearing, the radio network then reproduces
//! the wireline execution queue for queue.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::adversary::InjectionEvent;
use crate::engine::ExecutionTrace;
use crate::model::{NetworkGraph, NodeId, PacketId, WirelineGraph};
use crate::scheduling::{Policy, Schedulable, Scheduler, TieBreak};
use crate::{Error, Result};

/// Link `i` of the wireline graph is radio node `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceMap {
    /// For each radio node, the neighbor that absorbs packets whose last
    /// wireline link it stands for. `None` for isolated nodes.
    pub absorb: Vec<Option<NodeId>>,
}

impl EquivalenceMap {
    pub fn node_of_link(&self, link_index: usize) -> NodeId {
        link_index
    }
}

/// Builds the equivalent radio network of `g`.
pub fn equivalent_network(g: &WirelineGraph) -> Result<(NetworkGraph, EquivalenceMap)> {
    let links = g.links();
    if links.is_empty() {
        return Err(Error::Graph("wireline graph has no links".into()));
    }
    let mut edges = BTreeSet::new();
    for (i, e) in links.iter().enumerate() {
        for (j, f) in links.iter().enumerate() {
            if i != j && e.1 == f.0 {
                edges.insert((i.min(j), i.max(j)));
            }
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    let radio = NetworkGraph::new(links.len(), &edges)?;
    let absorb = (0..links.len())
        .map(|i| {
            let head = links[i].1;
            (0..links.len())
                .find(|&j| j != i && links[j].0 == head)
                .or_else(|| radio.neighbors(i).iter().next().copied())
        })
        .collect();
    Ok((radio, EquivalenceMap { absorb }))
}

/// A wireline injection, with its route given as the sequence of nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirelineInjection {
    pub round: u64,
    pub route: Vec<NodeId>,
}

/// Link indices along a node route.
pub fn route_links(g: &WirelineGraph, route: &[NodeId]) -> Result<Vec<usize>> {
    if route.len() < 2 {
        return Err(Error::Itinerary { path: route.to_vec(), reason: "needs at least one link".into() });
    }
    route
        .windows(2)
        .map(|w| {
            g.link_index((w[0], w[1]))
                .ok_or_else(|| Error::Itinerary { path: route.to_vec(), reason: format!("no link {}->{}", w[0], w[1]) })
        })
        .collect()
}

/// Radio injections equivalent to `injections`: same rounds, the route's
/// links as radio nodes, plus the absorbing hop.
pub fn transform_injections(
    g: &WirelineGraph,
    map: &EquivalenceMap,
    injections: &[WirelineInjection],
) -> Result<Vec<InjectionEvent>> {
    injections
        .iter()
        .map(|inj| {
            let mut path: Vec<NodeId> = route_links(g, &inj.route)?.into_iter().map(|e| map.node_of_link(e)).collect();
            let last = *path.last().expect("non-empty");
            let sink = map.absorb[last].ok_or_else(|| Error::Itinerary {
                path: inj.route.clone(),
                reason: format!("radio node {last} has no neighbor to absorb the packet"),
            })?;
            path.push(sink);
            Ok(InjectionEvent::new(inj.round, path))
        })
        .collect()
}

#[derive(Debug, Clone)]
struct WirelinePacket {
    id: PacketId,
    injection_round: u64,
    links: Vec<usize>,
    hop: usize,
    queue_arrival: u64,
    leave_rounds: Vec<u64>,
}

impl Schedulable for WirelinePacket {
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
        self.links.len() - self.hop
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirelinePacketRecord {
    pub id: PacketId,
    pub injection_round: u64,
    pub links: Vec<usize>,
    pub leave_rounds: Vec<u64>,
    pub delivery_round: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirelineTrace {
    pub policy: Policy,
    pub horizon: u64,
    /// `totals[t]`: packets queued at the end of round `t`.
    pub totals: Vec<usize>,
    /// `queue_sizes[t][e]`: size of link `e`'s queue at the end of round `t`.
    pub queue_sizes: Vec<Vec<usize>>,
    pub packets: Vec<WirelinePacketRecord>,
}

/// Reference simulator for wireline networks: every link forwards one
/// eligible packet per round, chosen by `policy`. Tie-breaking sees link `e`
/// as node `e`, matching the equivalent radio network.
pub fn simulate_wireline(
    g: &WirelineGraph,
    injections: &[WirelineInjection],
    policy: Policy,
    tie: TieBreak,
    horizon: u64,
) -> Result<WirelineTrace> {
    if injections.windows(2).any(|w| w[0].round > w[1].round) {
        return Err(Error::Config("wireline injections out of order".into()));
    }
    let routes: Vec<Vec<usize>> = injections.iter().map(|i| route_links(g, &i.route)).collect::<Result<_>>()?;
    let m = g.links().len();
    let mut scheduler = Scheduler::new(policy, tie);
    let mut packets: BTreeMap<PacketId, WirelinePacket> = BTreeMap::new();
    let mut queues: Vec<Vec<PacketId>> = vec![Vec::new(); m];
    let mut done: Vec<WirelinePacket> = Vec::new();
    let mut totals = Vec::with_capacity(horizon as usize);
    let mut queue_sizes = Vec::with_capacity(horizon as usize);
    let mut next = 0;
    for t in 0..horizon {
        while next < injections.len() && injections[next].round <= t {
            let id = PacketId(next as u64);
            if injections[next].round == t {
                let links = routes[next].clone();
                queues[links[0]].push(id);
                packets.insert(
                    id,
                    WirelinePacket { id, injection_round: t, links, hop: 0, queue_arrival: t, leave_rounds: vec![] },
                );
            }
            next += 1;
        }
        let mut moves = Vec::new();
        for (e, queue) in queues.iter().enumerate() {
            let eligible: Vec<&WirelinePacket> =
                queue.iter().map(|id| &packets[id]).filter(|p| p.queue_arrival < t).collect();
            if let Some(id) = scheduler.select(e, &eligible, t) {
                moves.push((e, id));
            }
        }
        for (e, id) in moves {
            queues[e].retain(|&q| q != id);
            let p = packets.get_mut(&id).expect("queued packet exists");
            p.hop += 1;
            p.queue_arrival = t;
            p.leave_rounds.push(t);
            if p.hop == p.links.len() {
                done.push(packets.remove(&id).expect("present"));
            } else {
                queues[p.links[p.hop]].push(id);
            }
        }
        totals.push(packets.len());
        queue_sizes.push(queues.iter().map(Vec::len).collect());
    }
    let mut records: Vec<WirelinePacketRecord> = done
        .into_iter()
        .map(|p| (p, true))
        .chain(packets.into_values().map(|p| (p, false)))
        .map(|(p, delivered)| WirelinePacketRecord {
            id: p.id,
            injection_round: p.injection_round,
            delivery_round: if delivered { p.leave_rounds.last().copied() } else { None },
            links: p.links,
            leave_rounds: p.leave_rounds,
        })
        .collect();
    records.sort_by_key(|p| p.id);
    Ok(WirelineTrace { policy, horizon, totals, queue_sizes, packets: records })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EquivalenceVerdict {
    Pass {
        rounds: u64,
        packets: usize,
    },
    /// First round, and the queue, where packet membership differs.
    Diverged {
        round: u64,
        queue: usize,
        packet: PacketId,
    },
}

impl EquivalenceVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, EquivalenceVerdict::Pass { .. })
    }
}

/// Queue a packet sits in at the end of round `t`, given the queues it visits
/// and the rounds it leaves them.
fn location(injection_round: u64, queues: &[usize], leave_rounds: &[u64], t: u64) -> Option<usize> {
    if t < injection_round {
        return None;
    }
    let crossed = leave_rounds.iter().filter(|&&l| l <= t).count();
    queues.get(crossed).copied()
}

/// Checks round by round that every packet sits in the equivalent queue in
/// both executions.
///
/// The radio run must use a work-conserving oracle, interference-free
/// hearing and the same policy, and each radio itinerary must be the
/// packet's wireline route followed by one absorbing hop. Violations of
/// these preconditions are errors.
pub fn compare_equivalent_traces(
    wire: &WirelineTrace,
    radio: &ExecutionTrace,
    map: &EquivalenceMap,
) -> Result<EquivalenceVerdict> {
    let pre = |msg: String| Err(Error::Precondition(msg));
    if radio.meta.oracle != "work_conserving" {
        return pre(format!("radio run used a {} oracle", radio.meta.oracle));
    }
    if radio.meta.success != "interference_free" {
        return pre(format!("radio run used {} hearing", radio.meta.success));
    }
    if radio.meta.policy != wire.policy.name() {
        return pre(format!("policies differ: {} vs {}", wire.policy, radio.meta.policy));
    }
    if radio.meta.horizon != wire.horizon {
        return pre(format!("horizons differ: {} vs {}", wire.horizon, radio.meta.horizon));
    }
    if radio.meta.node_count != map.absorb.len() {
        return pre("radio network size does not match the map".into());
    }
    if radio.packets.len() != wire.packets.len() {
        return pre(format!("{} wireline packets but {} radio packets", wire.packets.len(), radio.packets.len()));
    }
    let mut first: Option<(u64, usize, PacketId)> = None;
    for (w, r) in wire.packets.iter().zip(&radio.packets) {
        if w.id != r.id {
            return pre(format!("packet {} has no radio counterpart", w.id));
        }
        let expected: Vec<NodeId> = w.links.iter().map(|&e| map.node_of_link(e)).collect();
        if r.itinerary.len() != expected.len() + 1 || r.itinerary[..expected.len()] != expected[..] {
            return pre(format!("radio itinerary of {} is not equivalent to its route", w.id));
        }
        let mut breakpoints: Vec<u64> = std::iter::once(w.injection_round)
            .chain(std::iter::once(r.injection_round))
            .chain(w.leave_rounds.iter().copied())
            .chain(r.leave_rounds.iter().copied())
            .filter(|&t| t < wire.horizon)
            .collect();
        breakpoints.sort_unstable();
        breakpoints.dedup();
        for t in breakpoints {
            let lw = location(w.injection_round, &w.links, &w.leave_rounds, t);
            let lr = location(r.injection_round, &expected, &r.leave_rounds, t);
            if lw != lr {
                let queue = lw.or(lr).expect("locations differ so one is present");
                if first.is_none_or(|f| (t, queue, w.id) < f) {
                    first = Some((t, queue, w.id));
                }
                break;
            }
        }
    }
    Ok(match first {
        None => EquivalenceVerdict::Pass { rounds: wire.horizon, packets: wire.packets.len() },
        Some((round, queue, packet)) => EquivalenceVerdict::Diverged { round, queue, packet },
    })
}
