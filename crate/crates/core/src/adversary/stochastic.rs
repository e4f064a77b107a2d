use rand::seq::SliceRandom;
use rand::Rng;

use super::{AdversarySpec, InjectionEvent};
use crate::model::{NetworkGraph, NodeId};
use crate::rng::rng_for;
use crate::{Error, Result};

/// Random injections that are admissible by construction.
///
/// Every node owns a token bucket holding up to `b` tokens, starting full and
/// refilled by `r` per round. Injecting a packet costs one token at each
/// distinct node of its itinerary and is skipped if any of them is short.
/// Over an interval of `L` rounds at most `b + r·(L - 1)` tokens can be spent
/// at a node. Tokens are kept scaled by the rate's denominator so the
/// arithmetic is exact.
#[derive(Debug, Clone)]
pub struct StochasticAdversary {
    spec: AdversarySpec,
    pool: Vec<Vec<NodeId>>,
    seed: u64,
    attempts_per_round: usize,
    attempt_prob: f64,
    tokens: Vec<u64>,
    next_round: u64,
}

impl StochasticAdversary {
    pub fn new(
        spec: AdversarySpec,
        node_count: usize,
        pool: Vec<Vec<NodeId>>,
        seed: u64,
        attempts_per_round: usize,
        attempt_prob: f64,
    ) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::Config("stochastic adversary needs a non-empty path pool".into()));
        }
        if let Some(p) = pool.iter().find(|p| p.len() < 2 || p.iter().any(|&v| v >= node_count)) {
            return Err(Error::Itinerary { path: p.clone(), reason: "unusable pool path".into() });
        }
        if !(0.0..=1.0).contains(&attempt_prob) {
            return Err(Error::Config(format!("attempt probability {attempt_prob} outside [0, 1]")));
        }
        let capacity = spec.burstiness * spec.rate.denom();
        Ok(Self {
            spec,
            pool,
            seed,
            attempts_per_round,
            attempt_prob,
            tokens: vec![capacity; node_count],
            next_round: 0,
        })
    }

    pub fn spec(&self) -> AdversarySpec {
        self.spec
    }

    /// Events for `round`. Rounds must be requested in order starting at 0.
    pub fn injections_for(&mut self, round: u64) -> Vec<InjectionEvent> {
        assert_eq!(round, self.next_round, "rounds must be generated in order");
        self.next_round += 1;
        let q = self.spec.rate.denom();
        let capacity = self.spec.burstiness * q;
        if round > 0 {
            for t in &mut self.tokens {
                *t = (*t + self.spec.rate.numer()).min(capacity);
            }
        }
        let mut rng = rng_for(&[self.seed, round, 0x696e6a]);
        let mut out = Vec::new();
        for _ in 0..self.attempts_per_round {
            if !rng.gen_bool(self.attempt_prob) {
                continue;
            }
            let path = self.pool.choose(&mut rng).expect("non-empty pool");
            let mut nodes = path.clone();
            nodes.sort_unstable();
            nodes.dedup();
            if nodes.iter().all(|&v| self.tokens[v] >= q) {
                for v in nodes {
                    self.tokens[v] -= q;
                }
                out.push(InjectionEvent::new(round, path.clone()));
            }
        }
        out
    }

    /// All events for rounds `0..horizon`.
    pub fn generate(mut self, horizon: u64) -> Vec<InjectionEvent> {
        (0..horizon).flat_map(|t| self.injections_for(t)).collect()
    }
}

/// Deterministic token-bucket injections.
///
/// Round 0 spends the initial burst: pool paths are tried in order, again and
/// again, until none fits. Every later round injects at most one packet, the
/// first path that fits when walking the pool cyclically from where the last
/// injection left off. Same buckets and costs as [`StochasticAdversary`].
#[derive(Debug, Clone)]
pub struct CyclicAdversary {
    spec: AdversarySpec,
    pool: Vec<Vec<NodeId>>,
    tokens: Vec<u64>,
    cursor: usize,
    next_round: u64,
}

impl CyclicAdversary {
    pub fn new(spec: AdversarySpec, node_count: usize, pool: Vec<Vec<NodeId>>) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::Config("cyclic adversary needs a non-empty path pool".into()));
        }
        if let Some(p) = pool.iter().find(|p| p.len() < 2 || p.iter().any(|&v| v >= node_count)) {
            return Err(Error::Itinerary { path: p.clone(), reason: "unusable pool path".into() });
        }
        let capacity = spec.burstiness * spec.rate.denom();
        Ok(Self { spec, pool, tokens: vec![capacity; node_count], cursor: 0, next_round: 0 })
    }

    fn try_spend(&mut self, i: usize) -> bool {
        let q = self.spec.rate.denom();
        let mut nodes = self.pool[i].clone();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.iter().all(|&v| self.tokens[v] >= q) {
            for v in nodes {
                self.tokens[v] -= q;
            }
            true
        } else {
            false
        }
    }

    /// Events for `round`. Rounds must be requested in order starting at 0.
    pub fn injections_for(&mut self, round: u64) -> Vec<InjectionEvent> {
        assert_eq!(round, self.next_round, "rounds must be generated in order");
        self.next_round += 1;
        let capacity = self.spec.burstiness * self.spec.rate.denom();
        let mut out = Vec::new();
        if round == 0 {
            let mut progress = true;
            while progress {
                progress = false;
                for i in 0..self.pool.len() {
                    if self.try_spend(i) {
                        out.push(InjectionEvent::new(0, self.pool[i].clone()));
                        progress = true;
                    }
                }
            }
            return out;
        }
        for t in &mut self.tokens {
            *t = (*t + self.spec.rate.numer()).min(capacity);
        }
        for step in 0..self.pool.len() {
            let i = (self.cursor + step) % self.pool.len();
            if self.try_spend(i) {
                self.cursor = (i + 1) % self.pool.len();
                out.push(InjectionEvent::new(round, self.pool[i].clone()));
                break;
            }
        }
        out
    }

    /// All events for rounds `0..horizon`.
    pub fn generate(mut self, horizon: u64) -> Vec<InjectionEvent> {
        (0..horizon).flat_map(|t| self.injections_for(t)).collect()
    }
}

/// Up to `count` distinct random simple paths with `1..=max_hops` hops,
/// built as self-avoiding random walks.
pub fn random_path_pool(graph: &NetworkGraph, count: usize, max_hops: usize, seed: u64) -> Vec<Vec<NodeId>> {
    let mut rng = rng_for(&[seed, 0x706f6f6c]);
    let mut pool: Vec<Vec<NodeId>> = Vec::new();
    let starts: Vec<NodeId> = graph.nodes().filter(|&v| graph.degree(v) > 0).collect();
    if starts.is_empty() || max_hops == 0 {
        return pool;
    }
    for _ in 0..count * 8 {
        if pool.len() >= count {
            break;
        }
        let target = rng.gen_range(1..=max_hops);
        let mut path = vec![*starts.choose(&mut rng).expect("non-empty")];
        while path.len() <= target {
            let last = *path.last().expect("non-empty");
            let next: Vec<NodeId> = graph.neighbors(last).iter().copied().filter(|w| !path.contains(w)).collect();
            match next.choose(&mut rng) {
                Some(&w) => path.push(w),
                None => break,
            }
        }
        if path.len() >= 2 && !pool.contains(&path) {
            pool.push(path);
        }
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::check_admissibility;
    use crate::model::validate_itinerary;
    use crate::rational::Rate;

    fn path4() -> NetworkGraph {
        NetworkGraph::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn zero_rate_spends_the_burst_once() {
        let g = path4();
        let spec = AdversarySpec::new(Rate::ZERO, 1).unwrap();
        let adv = StochasticAdversary::new(spec, 4, vec![vec![0, 1]], 3, 2, 1.0).unwrap();
        let events = adv.generate(50);
        assert_eq!(events.len(), 1);
        assert!(validate_itinerary(&g, &events[0].itinerary));
    }

    #[test]
    fn half_rate_output_is_admissible() {
        let g = path4();
        let spec = AdversarySpec::new(Rate::new(1, 2).unwrap(), 1).unwrap();
        let pool = random_path_pool(&g, 6, 3, 1);
        let events = StochasticAdversary::new(spec, 4, pool, 9, 3, 0.9).unwrap().generate(400);
        assert!(!events.is_empty());
        assert!(check_admissibility(&events, spec.rate, spec.burstiness, 400).passed());
    }

    #[test]
    fn cyclic_spends_burst_then_follows_rate() {
        let spec = AdversarySpec::new(Rate::new(1, 4).unwrap(), 2).unwrap();
        let pool = vec![vec![0, 1], vec![2, 3], vec![1, 2, 3]];
        let events = CyclicAdversary::new(spec, 4, pool).unwrap().generate(400);
        // round 0: one packet per path, then node 1 is out of tokens
        assert_eq!(events.iter().filter(|e| e.round == 0).count(), 3);
        assert!(events
            .iter()
            .filter(|e| e.round > 0)
            .all(|e| events.iter().filter(|x| x.round == e.round).count() == 1));
        assert!(check_admissibility(&events, spec.rate, spec.burstiness, 400).passed());
        assert!(!check_admissibility(&events, spec.rate, 1, 400).passed());
    }

    #[test]
    fn generation_is_deterministic() {
        let g = path4();
        let spec = AdversarySpec::new(Rate::new(1, 3).unwrap(), 2).unwrap();
        let make = || StochasticAdversary::new(spec, 4, random_path_pool(&g, 5, 3, 4), 4, 2, 0.5).unwrap();
        assert_eq!(make().generate(200), make().generate(200));
    }

    #[test]
    fn pool_paths_are_simple_walks() {
        let g = NetworkGraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]).unwrap();
        let pool = random_path_pool(&g, 10, 4, 2);
        assert!(!pool.is_empty());
        for p in pool {
            assert!(validate_itinerary(&g, &p));
            let mut s = p.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), p.len());
            assert!((2..=5).contains(&p.len()));
        }
    }
}
