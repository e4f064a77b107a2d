use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Node names are the integers `0..n` and double as array indices.
pub type NodeId = usize;

/// A directed link `(tail, head)`; radio edges carry one in each direction.
pub type Link = (NodeId, NodeId);

/// Default node limit for exhaustive longest-path search.
pub const EXHAUSTIVE_PATH_LIMIT: usize = 14;

/// Simple undirected graph of transceivers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkGraph {
    n: usize,
    adjacency: Vec<BTreeSet<NodeId>>,
}

impl NetworkGraph {
    pub fn new(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("a network needs at least one node".into()));
        }
        let mut adjacency = vec![BTreeSet::new(); n];
        for &(u, w) in edges {
            for x in [u, w] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { node: x, n });
                }
            }
            if u == w {
                return Err(Error::Graph(format!("self-loop at node {u}")));
            }
            if !adjacency[u].insert(w) {
                return Err(Error::Graph(format!("duplicate edge {u}-{w}")));
            }
            adjacency[w].insert(u);
        }
        Ok(Self { n, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.n
    }

    pub fn neighbors(&self, v: NodeId) -> &BTreeSet<NodeId> {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: NodeId, w: NodeId) -> bool {
        u < self.n && self.adjacency[u].contains(&w)
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// Undirected edges with `u < w`, in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes().flat_map(|u| self.adjacency[u].range(u + 1..).map(move |&w| (u, w))).collect()
    }

    /// Both directions of every edge, in lexicographic order.
    pub fn links(&self) -> Vec<Link> {
        self.nodes().flat_map(|u| self.adjacency[u].iter().map(move |&w| (u, w))).collect()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `true` iff every consecutive pair of `path` is an edge of `graph`.
///
/// Revisiting nodes is allowed. A single-node path is trivially valid.
pub fn validate_itinerary(graph: &NetworkGraph, path: &[NodeId]) -> bool {
    !path.is_empty()
        && path.iter().all(|&v| v < graph.node_count())
        && path.windows(2).all(|w| graph.has_edge(w[0], w[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLengthMode {
    /// Exhaustive search, refused above `limit` nodes.
    Exact { limit: usize },
    /// The trivial bound `n - 1`.
    UpperBound,
}

impl Default for PathLengthMode {
    fn default() -> Self {
        PathLengthMode::Exact { limit: EXHAUSTIVE_PATH_LIMIT }
    }
}

/// Number of edges on the longest simple path of `graph`.
pub fn longest_simple_path_length(graph: &NetworkGraph, mode: PathLengthMode) -> Result<usize> {
    let n = graph.node_count();
    match mode {
        PathLengthMode::UpperBound => Ok(n - 1),
        PathLengthMode::Exact { limit } => {
            if n > limit {
                return Err(Error::SizeGuard { n, limit });
            }
            let mut best = 0;
            let mut on_path = vec![false; n];
            for s in graph.nodes() {
                on_path[s] = true;
                extend(graph, s, 0, &mut on_path, &mut best);
                on_path[s] = false;
                if best == n - 1 {
                    break;
                }
            }
            Ok(best)
        }
    }
}

fn extend(graph: &NetworkGraph, v: NodeId, len: usize, on_path: &mut [bool], best: &mut usize) {
    *best = (*best).max(len);
    for &w in graph.neighbors(v) {
        if !on_path[w] {
            on_path[w] = true;
            extend(graph, w, len + 1, on_path, best);
            on_path[w] = false;
        }
    }
}

/// Directed graph of a classical wireline network; each link owns a queue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirelineGraph {
    n: usize,
    links: Vec<Link>,
}

impl WirelineGraph {
    pub fn new(n: usize, links: &[Link]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(u, w) in links {
            for x in [u, w] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { node: x, n });
                }
            }
            if u == w {
                return Err(Error::Graph(format!("self-loop link {u}->{w}")));
            }
            if !seen.insert((u, w)) {
                return Err(Error::Graph(format!("duplicate link {u}->{w}")));
            }
        }
        Ok(Self { n, links: links.to_vec() })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Links in declaration order; the position is the link's index.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, index: usize) -> Link {
        self.links[index]
    }

    pub fn link_index(&self, link: Link) -> Option<usize> {
        self.links.iter().position(|&l| l == link)
    }

    /// `true` iff consecutive links compose head-to-tail.
    pub fn is_route(&self, route: &[usize]) -> bool {
        !route.is_empty()
            && route.iter().all(|&e| e < self.links.len())
            && route.windows(2).all(|w| self.links[w[0]].1 == self.links[w[1]].0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> NetworkGraph {
        NetworkGraph::new(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn path(n: usize) -> NetworkGraph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        NetworkGraph::new(n, &edges).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(matches!(NetworkGraph::new(2, &[(1, 1)]), Err(Error::Graph(_))));
        assert!(matches!(NetworkGraph::new(2, &[(0, 1), (1, 0)]), Err(Error::Graph(_))));
        assert!(matches!(NetworkGraph::new(2, &[(0, 2)]), Err(Error::NodeOutOfRange { .. })));
        assert!(NetworkGraph::new(0, &[]).is_err());
    }

    #[test]
    fn disconnected_graphs_are_allowed() {
        let g = NetworkGraph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(!g.is_connected());
        assert_eq!(g.edges(), vec![(0, 1), (2, 3)]);
        assert_eq!(g.links(), vec![(0, 1), (1, 0), (2, 3), (3, 2)]);
    }

    #[test]
    fn itinerary_validation() {
        assert!(validate_itinerary(&triangle(), &[0, 1, 2]));
        let edge = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        assert!(validate_itinerary(&edge, &[0, 1, 0]));
        assert!(!validate_itinerary(&edge, &[0, 2]));
        assert!(!validate_itinerary(&edge, &[]));
    }

    #[test]
    fn longest_paths() {
        let exact = PathLengthMode::default();
        let edge = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(longest_simple_path_length(&edge, exact).unwrap(), 1);
        assert_eq!(longest_simple_path_length(&triangle(), exact).unwrap(), 2);
        assert_eq!(longest_simple_path_length(&path(4), exact).unwrap(), 3);
        let star = NetworkGraph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(longest_simple_path_length(&star, exact).unwrap(), 2);
        let lonely = NetworkGraph::new(1, &[]).unwrap();
        assert_eq!(longest_simple_path_length(&lonely, exact).unwrap(), 0);
    }

    #[test]
    fn size_guard_and_fallback() {
        let g = path(6);
        let err = longest_simple_path_length(&g, PathLengthMode::Exact { limit: 5 });
        assert!(matches!(err, Err(Error::SizeGuard { n: 6, limit: 5 })));
        assert_eq!(longest_simple_path_length(&g, PathLengthMode::UpperBound).unwrap(), 5);
    }

    #[test]
    fn wireline_routes() {
        let g = WirelineGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(g.is_route(&[0, 1]));
        assert!(!g.is_route(&[1, 0]));
        assert!(WirelineGraph::new(2, &[(0, 1), (0, 1)]).is_err());
        assert_eq!(g.link_index((1, 2)), Some(1));
    }
}
