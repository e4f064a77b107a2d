//! Seeded random instances for bound and stability campaigns.
//!
//! Every instance is a pure function of its seed: graph, latency, rate,
//! burstiness, oracle schedule and injections.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::adversary::{random_path_pool, AdversarySpec, CyclicAdversary, StochasticAdversary};
use crate::analysis::{even_checkpoints, BoundParams};
use crate::engine::{ExecutionConfig, HearingControl, SuccessModel};
use crate::model::{longest_simple_path_length, NetworkGraph, NodeId, PathLengthMode};
use crate::oracle::{latency_schedule, LatencyScheduleOptions, OracleSchedule};
use crate::rational::Rate;
use crate::rng::rng_for;
use crate::scheduling::{Policy, TieBreak};
use crate::Result;

/// A connected graph on `n` nodes with maximum degree at most `max_degree`
/// (at least 2): a random degree-capped spanning tree plus random extra
/// edges where both ends have spare degree.
pub fn random_graph(n: usize, max_degree: usize, extra_edges: usize, seed: u64) -> Result<NetworkGraph> {
    let cap = max_degree.max(2);
    let mut rng = rng_for(&[seed, n as u64, cap as u64, 0x67]);
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut degree = vec![0usize; n];
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for i in 1..n {
        let open: Vec<NodeId> = order[..i].iter().copied().filter(|&u| degree[u] < cap).collect();
        // a degree-capped tree always has a leaf with spare degree when cap >= 2
        let &u = open.choose(&mut rng).expect("a node with spare degree");
        let w = order[i];
        edges.push((u.min(w), u.max(w)));
        degree[u] += 1;
        degree[w] += 1;
    }
    for _ in 0..extra_edges {
        let u = rng.gen_range(0..n);
        let w = rng.gen_range(0..n);
        let e = (u.min(w), u.max(w));
        if u != w && degree[u] < cap && degree[w] < cap && !edges.contains(&e) {
            edges.push(e);
            degree[u] += 1;
            degree[w] += 1;
        }
    }
    NetworkGraph::new(n, &edges)
}

/// A run whose observed maxima are compared with closed-form bounds.
#[derive(Debug, Clone)]
pub struct BoundCase {
    pub seed: u64,
    pub config: ExecutionConfig,
    pub params: BoundParams,
}

/// Random instance for the latency-oracle bound campaigns.
///
/// `h` is drawn from {2, 3, 4}, the graph has 3 to 8 nodes with maximum
/// degree at most `h`, the oracle is a scripted schedule with link latency
/// `h`, and the rate satisfies `r·h < 1`. Injections come from the token
/// bucket adversary over random simple paths, so `d` (edges on the longest
/// simple path) bounds every itinerary.
pub fn bound_case(
    seed: u64,
    policy: Policy,
    hearing: HearingControl,
    tie: TieBreak,
    horizon: u64,
) -> Result<BoundCase> {
    let mut rng = rng_for(&[seed, 0x626f756e64]);
    let h: u64 = rng.gen_range(2..=4);
    let n: usize = rng.gen_range(3..=8);
    let graph = random_graph(n, h as usize, rng.gen_range(0..=n), rng.gen())?;
    let d = longest_simple_path_length(&graph, PathLengthMode::default())? as u64;
    // r = p/q with p·h < q
    let q: u64 = rng.gen_range(h + 1..=4 * h);
    let p: u64 = rng.gen_range(1..=(q - 1) / h);
    let rate = Rate::new(p, q)?;
    let b: u64 = rng.gen_range(1..=3);
    let spec = AdversarySpec::new(rate, b)?;
    let pool = random_path_pool(&graph, 3 * n, d as usize, rng.gen());
    let attempt_prob = rng.gen_range(0.5..1.0);
    let injections = StochasticAdversary::new(spec, n, pool, rng.gen(), 2, attempt_prob)?.generate(horizon);
    let opts = LatencyScheduleOptions { extra_link_prob: rng.gen_range(0.0..0.5), extra_permit_prob: 0.2 };
    let schedule = latency_schedule(&graph, h, horizon, rng.gen(), opts)?;
    let config = ExecutionConfig {
        graph,
        injections,
        policy,
        tie,
        oracle: OracleSchedule::Scripted(schedule),
        hearing,
        success: SuccessModel::ScriptedLinks,
        horizon,
        seed,
    };
    Ok(BoundCase { seed, config, params: BoundParams { b, r: rate, h, d } })
}

/// A run whose total queue is classified by growth detection.
#[derive(Debug, Clone)]
pub struct StabilityCase {
    pub seed: u64,
    pub config: ExecutionConfig,
    pub spec: AdversarySpec,
    pub checkpoints: Vec<u64>,
}

/// Random instance for the round-robin campaign: 3 to 8 nodes, reactive
/// hearing under radio collisions, the round-robin oracle, rate `1/n` and
/// seeded arbitrary ties. Injections come from the cyclic adversary, so
/// after the initial burst the only randomness left is in tie breaking.
pub fn round_robin_case(seed: u64, policy: Policy, tie: TieBreak, horizon: u64) -> Result<StabilityCase> {
    let mut rng = rng_for(&[seed, 0x7272]);
    let n: usize = rng.gen_range(3..=8);
    let graph = random_graph(n, n - 1, rng.gen_range(0..=n), rng.gen())?;
    let d = longest_simple_path_length(&graph, PathLengthMode::default())?;
    let rate = Rate::new(1, n as u64)?;
    let b: u64 = rng.gen_range(1..=3);
    let spec = AdversarySpec::new(rate, b)?;
    let pool = random_path_pool(&graph, 3 * n, d, rng.gen());
    let injections = CyclicAdversary::new(spec, n, pool)?.generate(horizon);
    let config = ExecutionConfig {
        graph,
        injections,
        policy,
        tie,
        oracle: OracleSchedule::RoundRobin,
        hearing: HearingControl::Reactive,
        success: SuccessModel::RadioCollision,
        horizon,
        seed,
    };
    Ok(StabilityCase { seed, config, spec, checkpoints: even_checkpoints(horizon, 10) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::check_admissibility;
    use crate::oracle::certify_schedule_link_latency;
    use crate::scheduling::ArbitraryRule;

    #[test]
    fn random_graphs_are_connected_and_capped() {
        for seed in 0..50 {
            for cap in 2..=4 {
                let g = random_graph(8, cap, 6, seed).unwrap();
                assert!(g.is_connected());
                assert!(g.max_degree() <= cap);
            }
        }
    }

    #[test]
    fn bound_cases_meet_their_preconditions() {
        for seed in 0..20 {
            let case = bound_case(
                seed,
                Policy::Sis,
                HearingControl::Proactive,
                TieBreak::Arbitrary(ArbitraryRule::FixedId),
                300,
            )
            .unwrap();
            let p = case.params;
            assert!((2..=4).contains(&p.h));
            assert!(p.r.numer() * p.h < p.r.denom(), "r·h < 1");
            assert!(case.config.graph.max_degree() as u64 <= p.h);
            let OracleSchedule::Scripted(s) = &case.config.oracle else { panic!("scripted oracle expected") };
            assert!(certify_schedule_link_latency(s, &case.config.graph.links(), p.h, 300).passed());
            assert!(check_admissibility(&case.config.injections, p.r, p.b, 300).passed());
            assert!(case.config.injections.iter().all(|e| e.itinerary.len() as u64 - 1 <= p.d));
        }
    }

    #[test]
    fn cases_are_reproducible() {
        let tie = TieBreak::Arbitrary(ArbitraryRule::SeededRandom { seed: 1 });
        let a = round_robin_case(5, Policy::Lis, tie.clone(), 200).unwrap();
        let b = round_robin_case(5, Policy::Lis, tie, 200).unwrap();
        assert_eq!(a.config.injections, b.config.injections);
        assert_eq!(a.config.graph, b.config.graph);
    }
}
