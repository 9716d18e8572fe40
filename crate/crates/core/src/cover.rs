//! Minimum-cost edge covers via the mirror-graph matching reduction, and the
//! full and pair matchers built on them.
//!
//! Vertex `v` of the input graph has copy `v + n` in the mirror graph.

use crate::blossom::min_weight_perfect_matching;
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::graph::{ordered, Edge, EdgeCover, Matching, Pair, WeightedGraph};
use crate::subclass::Subclassification;

/// Penalty per unit of subclass size beyond two.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CardinalityPenalty(f64);

impl CardinalityPenalty {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(CardinalityPenalty(lambda))
        } else {
            Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )))
        }
    }

    pub fn lambda(self) -> f64 {
        self.0
    }
}

/// Cheapest incident cost and its lowest-indexed neighbour for every vertex.
fn mu(g: &WeightedGraph) -> Result<Vec<(f64, usize)>> {
    (0..g.vertex_count())
        .map(|v| g.min_incident(v).ok_or(Error::IsolatedVertex(v)))
        .collect()
}

/// The graph G plus its copy G′ and one bridge (v, v′) per vertex costing
/// 2μ(v) + 2λ.
pub fn build_mirror_graph(g: &WeightedGraph, lambda: CardinalityPenalty) -> Result<WeightedGraph> {
    let n = g.vertex_count();
    let mu = mu(g)?;
    let mut edges = Vec::with_capacity(2 * g.edge_count() + n);
    edges.extend_from_slice(g.edges());
    edges.extend(g.edges().iter().map(|e| Edge::new(e.u + n, e.v + n, e.cost)));
    edges.extend((0..n).map(|v| Edge::new(v, v + n, 2.0 * mu[v].0 + 2.0 * lambda.lambda())));
    WeightedGraph::new(2 * n, edges)
}

/// Turns a perfect matching of the mirror graph into an edge cover of `g`.
///
/// Copy edges are dropped and every bridge (v, v′) is replaced by the
/// cheapest edge at v, ties going to the lowest-indexed neighbour.
pub fn extract_cover(m: &Matching, g: &WeightedGraph) -> Result<EdgeCover> {
    let n = g.vertex_count();
    let mut pairs: Vec<Pair> = Vec::with_capacity(m.len());
    for &(u, v) in &m.pairs {
        if u < n && v < n {
            pairs.push((u, v));
        } else if u < n && v == u + n {
            let (_, w) = g.min_incident(u).ok_or(Error::IsolatedVertex(u))?;
            pairs.push(ordered(u, w));
        }
    }
    let cover = EdgeCover::from_pairs(g, pairs)?;
    debug_assert!(cover.covers(n));
    Ok(cover)
}

/// Deletes, in lexicographic order, every edge whose endpoints both have
/// degree two or more. Every component of the result is a star.
///
/// One pass suffices: degrees only fall, so an edge kept once stays keepable.
pub fn star_reduce(f: &EdgeCover, g: &WeightedGraph) -> Result<EdgeCover> {
    let n = g.vertex_count();
    let mut edges = f.edges.clone();
    edges.sort_unstable();
    let mut deg = f.degrees(n);
    let mut kept = Vec::with_capacity(edges.len());
    for (u, v) in edges {
        if deg[u] >= 2 && deg[v] >= 2 {
            deg[u] -= 1;
            deg[v] -= 1;
        } else {
            kept.push((u, v));
        }
    }
    EdgeCover::from_pairs(g, kept)
}

/// Minimum-cost edge cover of `g` whose components are stars.
pub fn min_cost_star_cover(g: &WeightedGraph, lambda: CardinalityPenalty) -> Result<EdgeCover> {
    let mirror = build_mirror_graph(g, lambda)?;
    let m = min_weight_perfect_matching(&mirror)?;
    let cover = extract_cover(&m.matching, g)?;
    star_reduce(&cover, g)
}

/// Converts a star-tiled cover into a subclassification; each star's centre
/// becomes the reference, and a lone edge takes its lower endpoint.
pub fn stars_to_subclasses(f: &EdgeCover, n: usize) -> Result<Subclassification> {
    let deg = f.degrees(n);
    let mut groups: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut group_of_centre = vec![usize::MAX; n];
    for &(u, v) in &f.edges {
        let (c, leaf) = if deg[u] >= 2 {
            (u, v)
        } else if deg[v] >= 2 {
            (v, u)
        } else {
            (u.min(v), u.max(v))
        };
        if deg[leaf] >= 2 {
            return Err(Error::InvalidSubclassification(format!(
                "edge ({u}, {v}) joins two vertices of degree two or more"
            )));
        }
        if group_of_centre[c] == usize::MAX {
            group_of_centre[c] = groups.len();
            groups.push((vec![c], c));
        }
        groups[group_of_centre[c]].0.push(leaf);
    }
    Subclassification::new(n, groups, Vec::new())
}

/// Optimal full match: minimises reference-to-member distance summed over
/// subclasses, plus `lambda` times the total subclass size beyond two.
pub fn full_match(d: &DistanceMatrix, lambda: CardinalityPenalty) -> Result<Subclassification> {
    let g = d.to_graph();
    let cover = min_cost_star_cover(&g, lambda)?;
    stars_to_subclasses(&cover, g.vertex_count())
}

/// Optimal pair match. With an odd number of units a phantom unit joins at
/// zero cost, and whichever unit it takes is discarded.
pub fn optimal_pair_match(d: &DistanceMatrix) -> Result<Subclassification> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("pair matching needs 2 units, got {n}")));
    }
    let g = d.to_graph();
    let odd = n % 2 == 1;
    let g = if odd {
        let mut edges = g.edges().to_vec();
        edges.extend((0..n).map(|v| Edge::new(v, n, 0.0)));
        WeightedGraph::new(n + 1, edges)?
    } else {
        g
    };
    let m = match min_weight_perfect_matching(&g) {
        Ok(m) => m,
        Err(Error::NoPerfectMatching) => return Err(Error::Infeasible),
        Err(e) => return Err(e),
    };
    let mut pairs = Vec::with_capacity(n / 2);
    let mut discarded = Vec::new();
    for &(u, v) in &m.matching.pairs {
        if odd && v == n {
            discarded.push(u);
        } else {
            pairs.push((vec![u, v], u));
        }
    }
    Subclassification::new(n, pairs, discarded)
}
