//! Round-synchronous execution.
//!
//! Each round runs, in order: injections, oracle indication, selection under
//! the hearing control, success resolution, and queue updates. A packet
//! injected or forwarded in round `t` can move again from round `t + 1`.

mod trace;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use trace::{Attempt, ExecutionTrace, Heard, PacketRecord, RoundRecord, TraceMeta};

use crate::adversary::{validate_events, InjectionEvent};
use crate::model::{Link, NetworkGraph, NodeId, Packet, PacketId, RoundState};
use crate::oracle::OracleSchedule;
use crate::scheduling::{Policy, Scheduler, TieBreak};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HearingControl {
    /// Handshake first: only packets whose next hop will hear are offered,
    /// and nodes without such packets pause.
    Proactive,
    /// Transmit first; a packet stays queued until its next hop hears it.
    Reactive,
}

impl HearingControl {
    pub fn name(self) -> &'static str {
        match self {
            HearingControl::Proactive => "proactive",
            HearingControl::Reactive => "reactive",
        }
    }
}

impl fmt::Display for HearingControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HearingControl {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proactive" => Ok(HearingControl::Proactive),
            "reactive" => Ok(HearingControl::Reactive),
            _ => Err(Error::Config(format!("unknown hearing control {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessModel {
    /// A transmission is heard iff the oracle lists its link as up.
    ScriptedLinks,
    /// `w` hears `v` iff `v` is the only transmitting neighbor of `w` and `w`
    /// is not transmitting itself.
    RadioCollision,
    /// Every transmission reaches its next hop and receivers take any number
    /// of messages per round. Used for networks built from wireline links,
    /// where each node stands for a link with its own queue.
    InterferenceFree,
}

impl SuccessModel {
    pub fn name(self) -> &'static str {
        match self {
            SuccessModel::ScriptedLinks => "scripted_links",
            SuccessModel::RadioCollision => "radio_collision",
            SuccessModel::InterferenceFree => "interference_free",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecutionConfig {
    pub graph: NetworkGraph,
    /// Sorted by round. Packet ids are assigned in this order.
    pub injections: Vec<InjectionEvent>,
    pub policy: Policy,
    pub tie: TieBreak,
    pub oracle: OracleSchedule,
    pub hearing: HearingControl,
    pub success: SuccessModel,
    pub horizon: u64,
    pub seed: u64,
}

impl ExecutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.success == SuccessModel::ScriptedLinks && !matches!(self.oracle, OracleSchedule::Scripted(_)) {
            return Err(Error::Config("scripted_links success needs a scripted oracle".into()));
        }
        self.oracle.validate(&self.graph)?;
        validate_events(&self.graph, &self.injections)
    }
}

/// A running execution that can be advanced one round at a time.
#[derive(Debug)]
pub struct Execution<'a> {
    config: &'a ExecutionConfig,
    state: RoundState,
    scheduler: Scheduler,
    next_event: usize,
    rounds: Vec<RoundRecord>,
}

impl<'a> Execution<'a> {
    pub fn new(config: &'a ExecutionConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: RoundState::new(config.graph.node_count()),
            scheduler: Scheduler::new(config.policy, config.tie.clone()),
            next_event: 0,
            rounds: Vec::with_capacity(config.horizon as usize),
        })
    }

    pub fn state(&self) -> &RoundState {
        &self.state
    }

    pub fn round(&self) -> u64 {
        self.state.round
    }

    pub fn is_finished(&self) -> bool {
        self.state.round >= self.config.horizon
    }

    /// Executes the current round and returns its record.
    pub fn step(&mut self) -> &RoundRecord {
        let cfg = self.config;
        let graph = &cfg.graph;
        let t = self.state.round;

        let mut injected = Vec::new();
        while let Some(e) = cfg.injections.get(self.next_event).filter(|e| e.round <= t) {
            let id = PacketId(self.next_event as u64);
            self.next_event += 1;
            if e.round < t {
                continue;
            }
            self.state.inject(Packet::new(id, t, e.itinerary.clone())).expect("packet ids are unique by construction");
            injected.push(id);
        }

        let indication = cfg.oracle.indicate(t, graph.node_count());
        let up = indication.up.unwrap_or_default();
        let permitted = indication.permitted;

        let mut ready: BTreeSet<Link> = BTreeSet::new();
        let mut busy: BTreeSet<NodeId> = BTreeSet::new();
        for v in graph.nodes() {
            for p in self.state.eligible(v, t) {
                ready.insert((v, p.next_hop().expect("queued packets have a next hop")));
                if permitted.contains(&v) {
                    busy.insert(v);
                }
            }
        }

        let mut attempts = Vec::new();
        for &v in &permitted {
            let eligible = self.state.eligible(v, t);
            let candidates: Vec<&Packet> = match cfg.hearing {
                HearingControl::Reactive => eligible,
                HearingControl::Proactive => {
                    let hearable = hearable(cfg.success, graph, &up, &busy, v);
                    eligible.into_iter().filter(|p| hearable.contains(&p.next_hop().expect("queued"))).collect()
                }
            };
            if let Some(id) = self.scheduler.select(v, &candidates, t) {
                let to = candidates.iter().find(|p| p.id == id).and_then(|p| p.next_hop()).expect("selected");
                attempts.push(Attempt { node: v, packet: id, to });
            }
        }

        let transmitters: BTreeSet<NodeId> = attempts.iter().map(|a| a.node).collect();
        let mut heard = Vec::new();
        let mut collisions = Vec::new();
        match cfg.success {
            SuccessModel::ScriptedLinks => {
                for a in &attempts {
                    if up.contains(&(a.node, a.to)) {
                        heard.push(Heard { receiver: a.to, sender: a.node, packet: a.packet, intended: true });
                    }
                }
            }
            SuccessModel::InterferenceFree => {
                for a in &attempts {
                    heard.push(Heard { receiver: a.to, sender: a.node, packet: a.packet, intended: true });
                }
            }
            SuccessModel::RadioCollision => {
                for a in &attempts {
                    for &x in graph.neighbors(a.node) {
                        if sole_transmitter(graph, &transmitters, x) == Some(a.node) {
                            heard.push(Heard { receiver: x, sender: a.node, packet: a.packet, intended: x == a.to });
                        }
                    }
                }
                for x in graph.nodes() {
                    if graph.neighbors(x).iter().filter(|w| transmitters.contains(w)).count() >= 2 {
                        collisions.push(x);
                    }
                }
            }
        }

        let available: Vec<Link> = ready
            .iter()
            .copied()
            .filter(|&(u, w)| {
                permitted.contains(&u)
                    && match cfg.success {
                        SuccessModel::ScriptedLinks => up.contains(&(u, w)),
                        SuccessModel::InterferenceFree => true,
                        SuccessModel::RadioCollision => {
                            !transmitters.contains(&w)
                                && graph.neighbors(w).iter().all(|x| *x == u || !transmitters.contains(x))
                        }
                    }
            })
            .collect();

        if cfg.success != SuccessModel::InterferenceFree {
            let mut receivers = BTreeSet::new();
            assert!(heard.iter().all(|h| receivers.insert(h.receiver)), "round {t}: a node heard twice");
        }
        if cfg.hearing == HearingControl::Proactive {
            let successes = heard.iter().filter(|h| h.intended).count();
            assert_eq!(successes, attempts.len(), "round {t}: proactive transmission not heard");
        }

        let mut delivered = Vec::new();
        for h in heard.iter().filter(|h| h.intended) {
            if self.state.advance(h.packet, t) {
                delivered.push(h.packet);
            }
        }
        debug_assert!(self.state.check_invariants(graph).is_ok());

        self.rounds.push(RoundRecord {
            round: t,
            injected,
            permitted: permitted.into_iter().collect(),
            ready: ready.into_iter().collect(),
            available,
            attempts,
            heard,
            collisions,
            delivered,
            queue_sizes: self.state.queue_sizes(),
            total: self.state.total_queued(),
        });
        self.state.round += 1;
        self.rounds.last().expect("just pushed")
    }

    pub fn finish(mut self) -> ExecutionTrace {
        while !self.is_finished() {
            self.step();
        }
        let cfg = self.config;
        let mut packets: Vec<PacketRecord> = self
            .state
            .delivered()
            .map(|p| PacketRecord {
                id: p.id,
                injection_round: p.injection_round,
                itinerary: p.itinerary.clone(),
                leave_rounds: p.leave_rounds.clone(),
                delivery_round: p.leave_rounds.last().copied(),
            })
            .chain(self.state.in_system().map(|p| PacketRecord {
                id: p.id,
                injection_round: p.injection_round,
                itinerary: p.itinerary.clone(),
                leave_rounds: p.leave_rounds.clone(),
                delivery_round: None,
            }))
            .collect();
        packets.sort_by_key(|p| p.id);
        ExecutionTrace {
            meta: TraceMeta {
                node_count: cfg.graph.node_count(),
                policy: cfg.policy.name().into(),
                tie: cfg.tie.name().into(),
                oracle: cfg.oracle.kind().into(),
                hearing: cfg.hearing.name().into(),
                success: cfg.success.name().into(),
                horizon: cfg.horizon,
                seed: cfg.seed,
            },
            rounds: self.rounds,
            packets,
        }
    }
}

/// Neighbors of `v` that are guaranteed to hear `v` this round.
///
/// Under radio collisions the transmitters are not known before selection,
/// so every permitted node with an eligible packet (`busy`) is assumed to
/// transmit. Nodes that then pause only remove interference.
fn hearable(
    success: SuccessModel,
    graph: &NetworkGraph,
    up: &BTreeSet<Link>,
    busy: &BTreeSet<NodeId>,
    v: NodeId,
) -> BTreeSet<NodeId> {
    match success {
        SuccessModel::ScriptedLinks => up.iter().filter(|l| l.0 == v).map(|l| l.1).collect(),
        SuccessModel::InterferenceFree => graph.neighbors(v).clone(),
        SuccessModel::RadioCollision => {
            graph.neighbors(v).iter().copied().filter(|&w| sole_transmitter(graph, busy, w) == Some(v)).collect()
        }
    }
}

/// The unique transmitting neighbor of a listening `x`, if there is one.
fn sole_transmitter(graph: &NetworkGraph, transmitters: &BTreeSet<NodeId>, x: NodeId) -> Option<NodeId> {
    if transmitters.contains(&x) {
        return None;
    }
    let mut it = graph.neighbors(x).iter().filter(|w| transmitters.contains(w));
    match (it.next(), it.next()) {
        (Some(&w), None) => Some(w),
        _ => None,
    }
}

/// Runs `config` for its full horizon.
pub fn run(config: &ExecutionConfig) -> Result<ExecutionTrace> {
    Ok(Execution::new(config)?.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ScriptedSchedule;
    use crate::scheduling::ArbitraryRule;

    fn config(graph: NetworkGraph, injections: Vec<InjectionEvent>, oracle: OracleSchedule) -> ExecutionConfig {
        ExecutionConfig {
            graph,
            injections,
            policy: Policy::Fifo,
            tie: TieBreak::Arbitrary(ArbitraryRule::FixedId),
            oracle,
            hearing: HearingControl::Reactive,
            success: SuccessModel::RadioCollision,
            horizon: 10,
            seed: 0,
        }
    }

    #[test]
    fn empty_run_has_zero_queues() {
        let g = NetworkGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let trace = run(&config(g, vec![], OracleSchedule::WorkConserving)).unwrap();
        assert_eq!(trace.rounds.len(), 10);
        assert!(trace.rounds.iter().all(|r| r.total == 0 && r.attempts.is_empty()));
    }

    #[test]
    fn single_link_delivers_next_round() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let mut s = ScriptedSchedule::new();
        s.set_up(1, (0, 1));
        let mut cfg = config(g, vec![InjectionEvent::new(0, vec![0, 1])], OracleSchedule::Scripted(s));
        cfg.success = SuccessModel::ScriptedLinks;
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.rounds[0].total, 1);
        assert_eq!(trace.rounds[1].delivered, vec![PacketId(0)]);
        assert_eq!(trace.packets[0].delivery_round, Some(1));
    }

    #[test]
    fn two_transmitters_collide_at_shared_receiver() {
        // 0 - 1 - 2, both ends send to the middle
        let g = NetworkGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let events = vec![InjectionEvent::new(0, vec![0, 1]), InjectionEvent::new(0, vec![2, 1])];
        let trace = run(&config(g, events, OracleSchedule::WorkConserving)).unwrap();
        let r1 = &trace.rounds[1];
        assert_eq!(r1.attempts.len(), 2);
        assert!(r1.heard.is_empty());
        assert_eq!(r1.collisions, vec![1]);
        assert_eq!(r1.total, 2);
        assert_eq!(trace.deliveries(), 0);
    }

    #[test]
    fn half_duplex_receiver_does_not_hear() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let events = vec![InjectionEvent::new(0, vec![0, 1]), InjectionEvent::new(0, vec![1, 0])];
        let trace = run(&config(g, events, OracleSchedule::WorkConserving)).unwrap();
        assert!(trace.rounds.iter().all(|r| r.heard.is_empty()));
    }

    #[test]
    fn overhearing_neighbors_discard() {
        // star: 0 sends to 1; 2 also hears but is not the recipient
        let g = NetworkGraph::new(3, &[(0, 1), (0, 2)]).unwrap();
        let trace = run(&config(g, vec![InjectionEvent::new(0, vec![0, 1])], OracleSchedule::WorkConserving)).unwrap();
        let r1 = &trace.rounds[1];
        assert_eq!(r1.heard.len(), 2);
        assert_eq!(r1.heard.iter().filter(|h| h.intended).count(), 1);
        assert_eq!(r1.queue_sizes, vec![0, 0, 0]);
    }

    #[test]
    fn proactive_restricts_to_hearable_next_hops() {
        // center 0 with leaves 1, 2; only (0, 1) is up. LIS would pick the
        // older packet to 2, proactive control must send the one to 1.
        let g = NetworkGraph::new(3, &[(0, 1), (0, 2)]).unwrap();
        let mut s = ScriptedSchedule::periodic(1);
        s.set_up(0, (0, 1));
        let events = vec![InjectionEvent::new(0, vec![0, 2]), InjectionEvent::new(1, vec![0, 1])];
        let mut cfg = config(g, events, OracleSchedule::Scripted(s));
        cfg.policy = Policy::Lis;
        cfg.hearing = HearingControl::Proactive;
        cfg.success = SuccessModel::ScriptedLinks;
        let trace = run(&cfg).unwrap();
        assert!(trace.rounds[1].attempts.is_empty(), "nothing hearable yet");
        assert_eq!(trace.rounds[2].attempts, vec![Attempt { node: 0, packet: PacketId(1), to: 1 }]);
    }

    #[test]
    fn reactive_retries_until_heard() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let mut s = ScriptedSchedule::new();
        s.permit(1, 0);
        s.permit(2, 0);
        s.set_up(3, (0, 1));
        let mut cfg = config(g, vec![InjectionEvent::new(0, vec![0, 1])], OracleSchedule::Scripted(s));
        cfg.success = SuccessModel::ScriptedLinks;
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.rounds[1].attempts.len(), 1);
        assert_eq!(trace.rounds[2].attempts.len(), 1);
        assert_eq!(trace.rounds[2].total, 1);
        assert_eq!(trace.packets[0].delivery_round, Some(3));
    }

    #[test]
    fn scripted_links_need_scripted_oracle() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let mut cfg = config(g, vec![], OracleSchedule::RoundRobin);
        cfg.success = SuccessModel::ScriptedLinks;
        assert!(run(&cfg).is_err());
    }

    #[test]
    fn metrics_csv_header() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let trace = run(&config(g, vec![], OracleSchedule::RoundRobin)).unwrap();
        let mut buf = Vec::new();
        trace.write_metrics_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("round,Q_total,node0,node1\n0,0,0,0\n"));
    }
}
