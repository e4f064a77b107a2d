//! Hand-built executions in which reactive hearing control goes wrong.

use std::collections::BTreeSet;

use super::{AdversarySpec, InjectionEvent};
use crate::model::{Link, NetworkGraph, PacketId};
use crate::oracle::{LatencyClaim, RegularityClass, ScriptedRound, ScriptedSchedule};
use crate::rational::Rate;
use crate::scheduling::TieScript;
use crate::{Error, Result};

/// A complete scripted execution: network, injections and oracle, plus the
/// rounds at which the script expects its characteristic state.
#[derive(Debug, Clone)]
pub struct ScriptedScenario {
    pub graph: NetworkGraph,
    pub events: Vec<InjectionEvent>,
    pub schedule: ScriptedSchedule,
    pub tie_script: Option<TieScript>,
    pub spec: AdversarySpec,
    /// Last round of each iteration.
    pub checkpoints: Vec<u64>,
    pub horizon: u64,
}

const U: Link = (0, 1);
const V: Link = (0, 2);

fn other(link: Link) -> Link {
    if link == U {
        V
    } else {
        U
    }
}

/// Newest-first scheduling with reactive hearing and a link-latency oracle of
/// latency `k + 2` on a star with center 0 and leaves 1 and 2.
///
/// Each iteration injects `2b` single-hop packets at the center, one every
/// `k + 1` rounds, alternating between the two leaves. While a packet is the
/// newest one at the center its link stays down, so the center keeps
/// retransmitting it in vain; the other link is up at the first and last
/// round of that window, which keeps both links within latency `k + 2`.
/// Then `b` windows of `k + 2` rounds follow, each ending with both links up,
/// and exactly the `b` newest packets get through. Every iteration lasts
/// `b·(3k + 4)` rounds and leaves `b` more packets queued than the one
/// before. At rate `1/(2k)` the injections are admissible when `k <= 4` and
/// `2b >= k`.
pub fn script_sis_reactive_instability(k: u64, burstiness: u64, iterations: usize) -> Result<ScriptedScenario> {
    if k < 2 {
        return Err(Error::Config(format!("instability script needs k >= 2, got {k}")));
    }
    if burstiness == 0 || iterations == 0 {
        return Err(Error::Config("instability script needs b >= 1 and at least one iteration".into()));
    }
    let graph = NetworkGraph::new(3, &[U, V])?;
    let b = burstiness;
    let mut schedule =
        ScriptedSchedule::new().with_claim(LatencyClaim { h: k + 2, class: RegularityClass::LinkLatencyOnly });

    let mut events = Vec::new();
    let mut checkpoints = Vec::new();
    // links of queued packets, newest last
    let mut stack: Vec<Link> = Vec::new();
    // end of the previous iteration, offset by 2 so that the first one starts
    // injecting at round k - 1
    let mut prev_end: u64 = 0;
    for iteration in 0..iterations {
        let start = prev_end + k + 1 - 2;
        let first_link = match stack.last() {
            None => {
                for t in 0..=start {
                    schedule.set_up(t, U);
                    schedule.set_up(t, V);
                }
                V
            }
            Some(&top) => {
                schedule.set_up(prev_end - 2 + 1, other(top));
                schedule.set_up(start, other(top));
                other(top)
            }
        };
        let mut link = first_link;
        let mut last = start;
        for i in 0..2 * b {
            let t = start + i * (k + 1);
            events.push(InjectionEvent::new(t, vec![0, link.1]));
            stack.push(link);
            if i + 1 < 2 * b {
                schedule.set_up(t + 1, other(link));
                schedule.set_up(t + k + 1, other(link));
            }
            last = t;
            link = other(link);
        }
        for j in 0..b {
            let first = last + 1 + j * (k + 2);
            let end = first + k + 1;
            let top = stack.pop().expect("phase two drains packets that exist");
            schedule.set_up(first, other(top));
            schedule.set_up(end, U);
            schedule.set_up(end, V);
        }
        let end = last + b * (k + 2);
        debug_assert_eq!(end + 2, (iteration as u64 + 1) * b * (3 * k + 4));
        checkpoints.push(end);
        prev_end = end + 2;
    }
    // every round permits the center, also those without up links
    let horizon = checkpoints.last().expect("at least one iteration") + 1;
    for t in 0..horizon {
        schedule.permit(t, 0);
    }
    let spec = AdversarySpec::new(Rate::new(1, 2 * k)?, b)?;
    Ok(ScriptedScenario { graph, events, schedule, tie_script: None, spec, checkpoints, horizon })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieScriptKind {
    /// Always offer the packet whose link is down.
    Blocking,
    /// Always offer the packet whose link is up.
    Favorable,
}

/// Two packets injected together at node 0, one for each neighbor, while the
/// two links take turns being up (latency 2). Under reactive control the
/// blocking tie script offers the wrong packet in every round.
pub fn script_tie_blocking(rounds: u64, kind: TieScriptKind) -> Result<ScriptedScenario> {
    if rounds < 2 {
        return Err(Error::Config(format!("tie blocking needs at least 2 rounds, got {rounds}")));
    }
    let graph = NetworkGraph::new(3, &[U, V])?;
    let mut schedule =
        ScriptedSchedule::periodic(2).with_claim(LatencyClaim { h: 2, class: RegularityClass::LinkLatencyOnly });
    schedule.insert(0, ScriptedRound { permitted: BTreeSet::from([0]), up: BTreeSet::from([U]) });
    schedule.insert(1, ScriptedRound { permitted: BTreeSet::from([0]), up: BTreeSet::from([V]) });
    let events = vec![InjectionEvent::new(0, vec![0, 1]), InjectionEvent::new(0, vec![0, 2])];
    let mut script = TieScript::new();
    for t in 1..rounds {
        // packet 0 rides U, which is up in even rounds
        let u_up = t % 2 == 0;
        let pick = match (kind, u_up) {
            (TieScriptKind::Blocking, true) | (TieScriptKind::Favorable, false) => PacketId(1),
            (TieScriptKind::Blocking, false) | (TieScriptKind::Favorable, true) => PacketId(0),
        };
        script.insert((t, 0), pick);
    }
    let spec = AdversarySpec::new(Rate::ZERO, 2)?;
    Ok(ScriptedScenario {
        graph,
        events,
        schedule,
        tie_script: Some(script),
        spec,
        checkpoints: vec![rounds - 1],
        horizon: rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::check_admissibility;
    use crate::oracle::certify_schedule_link_latency;

    #[test]
    fn instability_script_shape_for_k4() {
        let s = script_sis_reactive_instability(4, 4, 3).unwrap();
        assert_eq!(s.events.len(), 24);
        assert_eq!(s.events[0].round, 3);
        assert_eq!(s.events[0].itinerary, vec![0, 2]);
        assert_eq!(s.events[1].round, 8);
        assert_eq!(s.events[1].itinerary, vec![0, 1]);
        assert_eq!(s.checkpoints, vec![62, 126, 190]);
        assert_eq!(s.spec.rate, Rate::new(1, 8).unwrap());
        s.schedule.validate(&s.graph).unwrap();
    }

    #[test]
    fn instability_script_is_admissible_up_to_k4() {
        for k in 2..=4u64 {
            for b in k.div_ceil(2)..=6 {
                let s = script_sis_reactive_instability(k, b, 6).unwrap();
                let verdict = check_admissibility(&s.events, s.spec.rate, b, s.horizon);
                assert!(verdict.passed(), "k={k} b={b}: {verdict:?}");
            }
        }
    }

    #[test]
    fn instability_script_keeps_latency_k_plus_2() {
        for k in 2..=6 {
            let s = script_sis_reactive_instability(k, 3, 4).unwrap();
            let v = certify_schedule_link_latency(&s.schedule, &[U, V], k + 2, s.horizon);
            assert!(v.passed(), "k={k}: {v:?}");
            let v = certify_schedule_link_latency(&s.schedule, &[U, V], k + 1, s.horizon);
            assert!(!v.passed(), "k={k} should not reach latency k+1");
        }
    }

    #[test]
    fn tie_blocking_script() {
        let s = script_tie_blocking(10, TieScriptKind::Blocking).unwrap();
        let script = s.tie_script.as_ref().unwrap();
        assert_eq!(script[&(1, 0)], PacketId(0));
        assert!(!s.schedule.is_up(1, U));
        assert_eq!(script[&(2, 0)], PacketId(1));
        assert!(!s.schedule.is_up(2, V));
        assert!(script_tie_blocking(1, TieScriptKind::Blocking).is_err());
    }
}
