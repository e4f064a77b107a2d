//! Scripted schedules with a guaranteed link latency.
//!
//! Directed links are colored so that no node has two outgoing links, and no
//! node has two incoming links, of the same color. This is an edge coloring
//! of the bipartite (out-port, in-port) graph, which needs exactly
//! `max_degree` colors. Link `e` of color `c` is then up in every round
//! `t ≡ c (mod h)` for any `h >= max_degree`: each link is up once every
//! `h` rounds, each receiver hears at most one link per round, and each
//! sender has at most one up link per round.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{LatencyClaim, RegularityClass, ScriptedRound, ScriptedSchedule};
use crate::model::{Link, NetworkGraph, NodeId};
use crate::rng::rng_for;
use crate::{Error, Result};

/// Proper coloring of all directed links with colors `0..colors`.
pub fn color_links(graph: &NetworkGraph, colors: usize, seed: u64) -> Result<BTreeMap<Link, usize>> {
    let delta = graph.max_degree();
    if colors < delta {
        return Err(Error::Oracle(format!("{colors} colors cannot cover max degree {delta}")));
    }
    let mut rng = rng_for(&[seed, 0x636f6c]);
    let mut links = graph.links();
    links.shuffle(&mut rng);
    let n = graph.node_count();
    // out_at[u][c] = head of u's outgoing link colored c; in_at[w][c] = its tail
    let mut out_at: Vec<Vec<Option<NodeId>>> = vec![vec![None; colors]; n];
    let mut in_at: Vec<Vec<Option<NodeId>>> = vec![vec![None; colors]; n];
    for (u, w) in links {
        let mut order: Vec<usize> = (0..colors).collect();
        order.shuffle(&mut rng);
        let a = *order.iter().find(|&&c| out_at[u][c].is_none()).expect("free color at sender");
        if in_at[w][a].is_some() {
            let b = *order.iter().find(|&&c| in_at[w][c].is_none()).expect("free color at receiver");
            swap_path(&mut out_at, &mut in_at, w, a, b);
        }
        debug_assert!(out_at[u][a].is_none() && in_at[w][a].is_none());
        out_at[u][a] = Some(w);
        in_at[w][a] = Some(u);
    }
    let mut coloring = BTreeMap::new();
    for (u, row) in out_at.iter().enumerate() {
        for (c, w) in row.iter().enumerate() {
            if let Some(w) = w {
                coloring.insert((u, *w), c);
            }
        }
    }
    Ok(coloring)
}

/// Swaps colors `a` and `b` along the alternating path that starts at the
/// in-port of `start` with color `a`.
fn swap_path(out_at: &mut [Vec<Option<NodeId>>], in_at: &mut [Vec<Option<NodeId>>], start: NodeId, a: usize, b: usize) {
    let mut path: Vec<Link> = Vec::new();
    let mut at_in = start;
    while let Some(u) = in_at[at_in][a] {
        path.push((u, at_in));
        let Some(w) = out_at[u][b] else { break };
        path.push((u, w));
        at_in = w;
    }
    for &(u, w) in &path {
        out_at[u].iter_mut().filter(|c| **c == Some(w)).for_each(|c| *c = None);
        in_at[w].iter_mut().filter(|c| **c == Some(u)).for_each(|c| *c = None);
    }
    for (i, &(u, w)) in path.iter().enumerate() {
        let c = if i % 2 == 0 { b } else { a };
        out_at[u][c] = Some(w);
        in_at[w][c] = Some(u);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LatencyScheduleOptions {
    /// Probability that a free (sender, receiver) slot gets an extra up link.
    pub extra_link_prob: f64,
    /// Probability that a node without an up link is permitted anyway. Such a
    /// node pauses under proactive control and fails under reactive control.
    pub extra_permit_prob: f64,
}

impl Default for LatencyScheduleOptions {
    fn default() -> Self {
        Self { extra_link_prob: 0.3, extra_permit_prob: 0.2 }
    }
}

/// A scripted schedule over rounds `0..horizon` in which every link is up at
/// least once in every `h` consecutive rounds.
pub fn latency_schedule(
    graph: &NetworkGraph,
    h: u64,
    horizon: u64,
    seed: u64,
    opts: LatencyScheduleOptions,
) -> Result<ScriptedSchedule> {
    if h == 0 {
        return Err(Error::Oracle("latency must be positive".into()));
    }
    let coloring = color_links(graph, h as usize, seed)?;
    let mut by_color: Vec<Vec<Link>> = vec![Vec::new(); h as usize];
    for (&link, &c) in &coloring {
        by_color[c].push(link);
    }
    let mut rng = rng_for(&[seed, 0x6c6174]);
    let mut schedule = ScriptedSchedule::new().with_claim(LatencyClaim { h, class: RegularityClass::LinkLatencyOnly });
    let all_links = graph.links();
    for t in 0..horizon {
        let mut entry = ScriptedRound::default();
        let mut senders = BTreeSet::new();
        let mut receivers = BTreeSet::new();
        for &(u, w) in &by_color[(t % h) as usize] {
            entry.up.insert((u, w));
            entry.permitted.insert(u);
            senders.insert(u);
            receivers.insert(w);
        }
        for &(u, w) in &all_links {
            if !senders.contains(&u) && !receivers.contains(&w) && rng.gen_bool(opts.extra_link_prob) {
                entry.up.insert((u, w));
                entry.permitted.insert(u);
                senders.insert(u);
                receivers.insert(w);
            }
        }
        for v in graph.nodes() {
            if !senders.contains(&v) && rng.gen_bool(opts.extra_permit_prob) {
                entry.permitted.insert(v);
            }
        }
        schedule.insert(t, entry);
    }
    Ok(schedule)
}
