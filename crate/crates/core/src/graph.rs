//! Weighted undirected graphs and the edge-set types produced by the solvers.
//!
//! A [`WeightedGraph`] is validated once at construction and never mutated
//! afterwards; solvers build derived graphs instead. Forbidden pairs are simply
//! absent edges.

use crate::error::{Error, Result};

pub type Pair = (usize, usize);

/// Orders a vertex pair as `(min, max)`.
#[inline]
pub fn ordered(u: usize, v: usize) -> Pair {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, cost: f64) -> Self {
        Edge { u, v, cost }
    }

    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    // CSR adjacency: for vertex x, adj[offsets[x]..offsets[x + 1]] holds
    // (neighbour, edge index) sorted by neighbour.
    offsets: Vec<usize>,
    adj: Vec<(u32, u32)>,
}

/// Checks every [`WeightedGraph`] invariant, naming the first offending edge.
pub fn validate_graph(vertex_count: usize, edges: &[Edge]) -> Result<()> {
    WeightedGraph::new(vertex_count, edges.to_vec()).map(|_| ())
}

impl WeightedGraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        assert!(edges.len() < u32::MAX as usize, "too many edges");
        for e in &edges {
            if e.u >= vertex_count || e.v >= vertex_count {
                return Err(Error::IndexOutOfRange(e.u, e.v, vertex_count));
            }
            if e.u == e.v {
                return Err(Error::SelfLoop(e.u, e.v));
            }
            if !(e.cost.is_finite() && e.cost >= 0.0) {
                return Err(Error::NegativeCost(e.u, e.v, e.cost));
            }
        }

        let mut degree = vec![0usize; vertex_count + 1];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut acc = 0;
        for d in &degree[..vertex_count] {
            offsets.push(acc);
            acc += d;
        }
        offsets.push(acc);
        let mut fill = offsets.clone();
        let mut adj = vec![(0u32, 0u32); acc];
        for (k, e) in edges.iter().enumerate() {
            adj[fill[e.u]] = (e.v as u32, k as u32);
            fill[e.u] += 1;
            adj[fill[e.v]] = (e.u as u32, k as u32);
            fill[e.v] += 1;
        }
        for x in 0..vertex_count {
            let list = &mut adj[offsets[x]..offsets[x + 1]];
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
                let e = &edges[w[1].1 as usize];
                return Err(Error::DuplicateEdge(e.u, e.v));
            }
        }

        Ok(WeightedGraph {
            vertex_count,
            edges,
            offsets,
            adj,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    /// Incident edges of `x` as `(neighbour, edge index)`, sorted by neighbour.
    pub fn incident(&self, x: usize) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.adj[self.offsets[x]..self.offsets[x + 1]]
            .iter()
            .map(|&(w, k)| (w as usize, k as usize))
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        if u >= self.vertex_count || v >= self.vertex_count {
            return None;
        }
        let list = &self.adj[self.offsets[u]..self.offsets[u + 1]];
        list.binary_search_by_key(&(v as u32), |&(w, _)| w)
            .ok()
            .map(|i| list[i].1 as usize)
    }

    pub fn cost(&self, u: usize, v: usize) -> Option<f64> {
        self.edge_index(u, v).map(|k| self.edges[k].cost)
    }

    /// Cheapest incident edge cost and the lowest-indexed neighbour attaining it.
    pub fn min_incident(&self, x: usize) -> Option<(f64, usize)> {
        // neighbours are visited in increasing order, so strict `<` keeps the lowest index
        let mut best: Option<(f64, usize)> = None;
        for (w, k) in self.incident(x) {
            let c = self.edges[k].cost;
            if best.is_none_or(|(b, _)| c < b) {
                best = Some((c, w));
            }
        }
        best
    }
}

/// A set of vertex-disjoint edges, stored as ordered pairs sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    pub pairs: Vec<Pair>,
}

impl Matching {
    pub fn from_pairs(pairs: impl IntoIterator<Item = Pair>) -> Self {
        let mut pairs: Vec<Pair> = pairs.into_iter().map(|(u, v)| ordered(u, v)).collect();
        pairs.sort_unstable();
        Matching { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True when the edges are pairwise vertex-disjoint.
    pub fn is_valid(&self, vertex_count: usize) -> bool {
        let mut seen = vec![false; vertex_count];
        for &(u, v) in &self.pairs {
            if u >= vertex_count || v >= vertex_count || u == v || seen[u] || seen[v] {
                return false;
            }
            seen[u] = true;
            seen[v] = true;
        }
        true
    }

    pub fn is_perfect(&self, vertex_count: usize) -> bool {
        2 * self.pairs.len() == vertex_count && self.is_valid(vertex_count)
    }

    /// `mate[v]` for every vertex, `None` when unmatched.
    pub fn mates(&self, vertex_count: usize) -> Vec<Option<usize>> {
        let mut mate = vec![None; vertex_count];
        for &(u, v) in &self.pairs {
            mate[u] = Some(v);
            mate[v] = Some(u);
        }
        mate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCover {
    pub edges: Vec<Pair>,
    pub total_cost: f64,
}

impl EdgeCover {
    /// Builds a cover from graph edges, recomputing its cost.
    pub fn from_pairs(g: &WeightedGraph, pairs: impl IntoIterator<Item = Pair>) -> Result<Self> {
        let mut edges: Vec<Pair> = pairs.into_iter().map(|(u, v)| ordered(u, v)).collect();
        edges.sort_unstable();
        edges.dedup();
        let total_cost = cover_cost(g, &edges)?;
        Ok(EdgeCover { edges, total_cost })
    }

    /// True when every vertex of a graph on `vertex_count` vertices touches an edge.
    pub fn covers(&self, vertex_count: usize) -> bool {
        let mut hit = vec![false; vertex_count];
        for &(u, v) in &self.edges {
            if u >= vertex_count || v >= vertex_count {
                return false;
            }
            hit[u] = true;
            hit[v] = true;
        }
        hit.into_iter().all(|h| h)
    }

    pub fn degrees(&self, vertex_count: usize) -> Vec<usize> {
        let mut deg = vec![0; vertex_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }
}

/// Sum of the costs of `edges` in `g`.
pub fn cover_cost(g: &WeightedGraph, edges: &[Pair]) -> Result<f64> {
    let mut total = 0.0;
    for &(u, v) in edges {
        total += g.cost(u, v).ok_or(Error::UnknownEdge(u, v))?;
    }
    Ok(total)
}
