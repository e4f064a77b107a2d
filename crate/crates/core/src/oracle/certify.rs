//! Latency certification on recorded traces.
//!
//! A link is ready in a round when its tail holds an eligible packet whose
//! next hop crosses it. A window of `h` consecutive rounds in which a link is
//! ready throughout must contain a round where the link carried a packet, or
//! could have: its tail was permitted and the head would have heard it. The
//! second case matters under proactive control, where a node may spend an
//! available slot on another link.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ScriptedSchedule;
use crate::engine::ExecutionTrace;
use crate::model::{Link, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Link(Link),
    Node(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LatencyVerdict {
    Pass,
    /// `subject` went without service in rounds `start..=end`.
    Fail {
        subject: Subject,
        start: u64,
        end: u64,
    },
}

impl LatencyVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, LatencyVerdict::Pass)
    }
}

/// Tracks, per key, the current ready run and the last served round in it.
struct Runs<K: Ord + Copy> {
    open: BTreeMap<K, (u64, Option<u64>)>,
}

impl<K: Ord + Copy> Runs<K> {
    fn new() -> Self {
        Self { open: BTreeMap::new() }
    }

    /// Feeds one round. Returns the first key whose ready run reached `h`
    /// rounds without service.
    fn feed(&mut self, t: u64, h: u64, ready: &BTreeMap<K, bool>) -> Option<K> {
        self.open.retain(|k, _| ready.contains_key(k));
        let mut failed = None;
        for (&k, &ok) in ready {
            let entry = self.open.entry(k).or_insert((t, None));
            if ok {
                entry.1 = Some(t);
            }
            let (start, last_ok) = *entry;
            let window_start = (t + 1).saturating_sub(h).max(start);
            let served = last_ok.is_some_and(|o| o >= window_start);
            if t + 1 - start >= h && !served && failed.is_none() {
                failed = Some(k);
            }
        }
        failed
    }
}

/// Every link with a ready packet throughout `h` consecutive rounds is served
/// in at least one of them.
pub fn certify_link_latency(trace: &ExecutionTrace, h: u64) -> LatencyVerdict {
    assert!(h > 0, "latency must be positive");
    let mut runs = Runs::new();
    for r in &trace.rounds {
        let heard: BTreeSet<Link> = r.successes().map(|x| (x.sender, x.receiver)).collect();
        let available: BTreeSet<Link> = r.available.iter().copied().collect();
        let ready: BTreeMap<Link, bool> =
            r.ready.iter().map(|l| (*l, heard.contains(l) || available.contains(l))).collect();
        if let Some(link) = runs.feed(r.round, h, &ready) {
            return LatencyVerdict::Fail { subject: Subject::Link(link), start: r.round + 1 - h, end: r.round };
        }
    }
    LatencyVerdict::Pass
}

/// Every node with an eligible packet throughout `h` consecutive rounds
/// transmits successfully, or has all its ready links available, in at least
/// one of them.
pub fn certify_node_latency(trace: &ExecutionTrace, h: u64) -> LatencyVerdict {
    assert!(h > 0, "latency must be positive");
    let mut runs = Runs::new();
    for r in &trace.rounds {
        let senders: BTreeSet<NodeId> = r.successes().map(|x| x.sender).collect();
        let available: BTreeSet<Link> = r.available.iter().copied().collect();
        let mut ready: BTreeMap<NodeId, bool> = BTreeMap::new();
        for l in &r.ready {
            let ok = ready.entry(l.0).or_insert(true);
            *ok &= available.contains(l);
        }
        for (v, ok) in ready.iter_mut() {
            *ok |= senders.contains(v);
        }
        if let Some(node) = runs.feed(r.round, h, &ready) {
            return LatencyVerdict::Fail { subject: Subject::Node(node), start: r.round + 1 - h, end: r.round };
        }
    }
    LatencyVerdict::Pass
}

/// Static check of a scripted schedule: each of `links` is up at least once
/// in every `h` consecutive rounds of `0..horizon`.
pub fn certify_schedule_link_latency(
    schedule: &ScriptedSchedule,
    links: &[Link],
    h: u64,
    horizon: u64,
) -> LatencyVerdict {
    assert!(h > 0, "latency must be positive");
    let mut last_up: BTreeMap<Link, Option<u64>> = links.iter().map(|l| (*l, None)).collect();
    for t in 0..horizon {
        for l in links {
            if schedule.is_up(t, *l) {
                last_up.insert(*l, Some(t));
            }
        }
        if t + 1 >= h {
            let window_start = t + 1 - h;
            if let Some((&link, _)) = last_up.iter().find(|(_, u)| !u.is_some_and(|u| u >= window_start)) {
                return LatencyVerdict::Fail { subject: Subject::Link(link), start: window_start, end: t };
            }
        }
    }
    LatencyVerdict::Pass
}
