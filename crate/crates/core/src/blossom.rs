//! Minimum-weight perfect matching on general graphs.
//!
//! The engine is the primal-dual blossom algorithm (Edmonds, in the O(n^3)
//! formulation of Galil), run on integer weights so that every comparison is
//! exact. Edge costs are mapped to integers with a power-of-two scale, which
//! is exact for integer-valued costs and loses at most one unit in the last
//! place otherwise.
//!
//! Dense inputs are solved by pricing: the matching is first solved on a
//! sparse candidate set (the cheapest few edges at each vertex), then the
//! final dual solution is checked against every edge of the full graph.
//! Edges with negative reduced cost are added and the solve repeated. When no
//! edge violates dual feasibility the dual solution certifies optimality on
//! the full graph, so the result is exact, not a heuristic.

use crate::error::{Error, Result};
use crate::graph::{Matching, WeightedGraph};

const NONE: usize = usize::MAX;

/// Initial number of cheapest incident edges per vertex kept in the candidate set.
const SEED_DEGREE: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub augmentations: usize,
    pub blossoms_formed: usize,
    /// Solves performed before the dual certificate held on the full graph.
    pub pricing_rounds: usize,
    /// Edges in the candidate set of the final solve.
    pub candidate_edges: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    pub matching: Matching,
    pub total_cost: f64,
    pub stats: SolverStats,
}

/// Maps float costs to exact integer weights for the maximisation engine.
struct WeightScale {
    factor: f64,
    max_scaled: i64,
}

impl WeightScale {
    fn new(g: &WeightedGraph) -> Self {
        let cmax = g.edges().iter().map(|e| e.cost).fold(0.0f64, f64::max);
        // Leave head-room for dual variables: |dual| stays below a small
        // multiple of (vertices * max weight).
        let budget = (1u64 << 61) as f64 / (4.0 * (g.vertex_count() as f64 + 1.0));
        let exp = if cmax > 0.0 {
            (budget / cmax).log2().floor().clamp(-1000.0, 60.0) as i32
        } else {
            0
        };
        let factor = 2f64.powi(exp);
        WeightScale {
            factor,
            max_scaled: (cmax * factor).round() as i64,
        }
    }

    #[inline]
    fn weight(&self, cost: f64) -> i64 {
        // doubled so that all initial duals share parity
        2 * (self.max_scaled - (cost * self.factor).round() as i64)
    }
}

/// Minimum-cost perfect matching of `g`.
///
/// Deterministic for identical input. Fails with [`Error::OddVertexCount`] or
/// [`Error::NoPerfectMatching`] when no perfect matching exists.
pub fn min_weight_perfect_matching(g: &WeightedGraph) -> Result<MatchingResult> {
    let n = g.vertex_count();
    if n % 2 == 1 {
        return Err(Error::OddVertexCount(n));
    }
    if n == 0 {
        return Ok(MatchingResult {
            matching: Matching::default(),
            total_cost: 0.0,
            stats: SolverStats::default(),
        });
    }
    if (0..n).any(|v| g.degree(v) == 0) {
        return Err(Error::NoPerfectMatching);
    }

    let scale = WeightScale::new(g);
    let m = g.edge_count();
    let max_degree = (0..n).map(|v| g.degree(v)).max().unwrap_or(0);

    let mut seed_degree = SEED_DEGREE;
    let mut in_cand = vec![false; m];
    let mut everything = m <= 4 * SEED_DEGREE * n || max_degree <= seed_degree;
    if everything {
        in_cand.iter_mut().for_each(|c| *c = true);
    } else {
        mark_cheapest(g, seed_degree, &mut in_cand);
    }

    let mut rounds = 0;
    loop {
        rounds += 1;
        let cand: Vec<usize> = (0..m).filter(|&k| in_cand[k]).collect();
        let edges: Vec<(usize, usize, i64)> = cand
            .iter()
            .map(|&k| {
                let e = &g.edges()[k];
                (e.u, e.v, scale.weight(e.cost))
            })
            .collect();
        let mut engine = Engine::new(n, &edges);
        engine.run();

        if engine.matched_count() * 2 != n {
            if everything {
                return Err(Error::NoPerfectMatching);
            }
            seed_degree *= 2;
            if seed_degree >= max_degree {
                everything = true;
                in_cand.iter_mut().for_each(|c| *c = true);
            } else {
                mark_cheapest(g, seed_degree, &mut in_cand);
            }
            continue;
        }

        let mut violated = false;
        if !everything {
            let cert = engine.certificate();
            for (k, e) in g.edges().iter().enumerate() {
                if !in_cand[k] && cert.reduced_cost(e.u, e.v, scale.weight(e.cost)) < 0 {
                    in_cand[k] = true;
                    violated = true;
                }
            }
        }
        if violated {
            continue;
        }

        let pairs = engine.pairs();
        let matching = Matching::from_pairs(pairs);
        let total_cost = matching
            .pairs
            .iter()
            .map(|&(u, v)| g.cost(u, v).expect("matched edge exists"))
            .sum();
        return Ok(MatchingResult {
            matching,
            total_cost,
            stats: SolverStats {
                augmentations: engine.augmentations,
                blossoms_formed: engine.blossoms_formed,
                pricing_rounds: rounds,
                candidate_edges: cand.len(),
            },
        });
    }
}

/// Marks the `k` cheapest incident edges of every vertex (ties by neighbour index).
fn mark_cheapest(g: &WeightedGraph, k: usize, in_cand: &mut [bool]) {
    let mut buf: Vec<(f64, usize, usize)> = Vec::new();
    for v in 0..g.vertex_count() {
        buf.clear();
        buf.extend(g.incident(v).map(|(w, e)| (g.edges()[e].cost, w, e)));
        let cmp = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if buf.len() > k {
            buf.select_nth_unstable_by(k - 1, cmp);
            buf.truncate(k);
        }
        for &(_, _, e) in &buf {
            in_cand[e] = true;
        }
    }
}

/// Dual solution of a finished solve, used to price edges outside the candidate set.
struct Certificate {
    dual: Vec<i64>,
    // for each vertex, the chain of enclosing blossoms with positive dual, innermost first
    chains: Vec<Vec<(usize, i64)>>,
    top: Vec<usize>,
}

impl Certificate {
    fn reduced_cost(&self, i: usize, j: usize, w: i64) -> i64 {
        let mut s = self.dual[i] + self.dual[j] - 2 * w;
        if self.top[i] == self.top[j] && self.top[i] != i {
            for &(b, z) in &self.chains[i] {
                if self.chains[j].iter().any(|&(c, _)| c == b) {
                    s += 2 * z;
                }
            }
        }
        s
    }
}

/// Maximum-weight maximum-cardinality matching engine on integer weights.
///
/// Vertex duals are stored doubled so that the slack of edge `k` is
/// `dual[i] + dual[j] - 2 w_k`. Endpoint `p` of edge `k = p / 2` is
/// `edges[k].0` for even `p` and `edges[k].1` for odd `p`; `p ^ 1` is the
/// opposite endpoint.
struct Engine<'a> {
    n: usize,
    edges: &'a [(usize, usize, i64)],
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
    augmentations: usize,
    blossoms_formed: usize,
}

impl<'a> Engine<'a> {
    fn new(n: usize, edges: &'a [(usize, usize, i64)]) -> Self {
        let mut endpoint = Vec::with_capacity(2 * edges.len());
        let mut neighbend = vec![Vec::new(); n];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        // Warm start: each vertex dual is its heaviest incident weight, which
        // is feasible; mutually heaviest edges are then tight.
        let mut dualvar = vec![0i64; 2 * n];
        for &(i, j, w) in edges {
            dualvar[i] = dualvar[i].max(w);
            dualvar[j] = dualvar[j].max(w);
        }
        let mut e = Engine {
            n,
            edges,
            endpoint,
            neighbend,
            mate: vec![NONE; n],
            label: vec![0; 2 * n],
            labelend: vec![NONE; 2 * n],
            inblossom: (0..n).collect(),
            blossomparent: vec![NONE; 2 * n],
            blossomchilds: vec![Vec::new(); 2 * n],
            blossombase: (0..n).chain(std::iter::repeat_n(NONE, n)).collect(),
            blossomendps: vec![Vec::new(); 2 * n],
            bestedge: vec![NONE; 2 * n],
            blossombestedges: vec![None; 2 * n],
            unusedblossoms: (n..2 * n).rev().collect(),
            dualvar,
            allowedge: vec![false; edges.len()],
            queue: Vec::new(),
            augmentations: 0,
            blossoms_formed: 0,
        };
        for v in 0..n {
            if e.mate[v] != NONE {
                continue;
            }
            for idx in 0..e.neighbend[v].len() {
                let p = e.neighbend[v][idx];
                let w = e.endpoint[p];
                if e.mate[w] == NONE && e.slack(p / 2) == 0 {
                    e.mate[v] = p;
                    e.mate[w] = p ^ 1;
                    break;
                }
            }
        }
        e
    }

    #[inline]
    fn slack(&self, k: usize) -> i64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * w
    }

    fn leaves(&self, b: usize, out: &mut Vec<usize>) {
        if b < self.n {
            out.push(b);
        } else {
            for &t in &self.blossomchilds[b] {
                self.leaves(t, out);
            }
        }
    }

    fn leaves_of(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.leaves(b, &mut out);
        out
    }

    fn matched_count(&self) -> usize {
        self.mate.iter().filter(|&&m| m != NONE).count() / 2
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .filter_map(|v| {
                let m = self.mate[v];
                (m != NONE && v < self.endpoint[m]).then(|| (v, self.endpoint[m]))
            })
            .collect()
    }

    fn certificate(&self) -> Certificate {
        let mut chains = vec![Vec::new(); self.n];
        let mut top = vec![0; self.n];
        for v in 0..self.n {
            let mut b = self.blossomparent[v];
            let mut last = v;
            while b != NONE {
                if self.dualvar[b] > 0 {
                    chains[v].push((b, self.dualvar[b]));
                }
                last = b;
                b = self.blossomparent[b];
            }
            top[v] = last;
        }
        Certificate {
            dual: self.dualvar[..self.n].to_vec(),
            chains,
            top,
        }
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let mut leaves = Vec::new();
            self.leaves(b, &mut leaves);
            self.queue.extend(leaves);
        } else if t == 2 {
            let base = self.blossombase[b];
            debug_assert!(self.mate[base] != NONE);
            let mb = self.mate[base];
            self.assign_label(self.endpoint[mb], 1, mb ^ 1);
        }
    }

    /// Traces back from `v` and `w` to find a new blossom base, or `NONE` when
    /// the two paths reach distinct roots (an augmenting path).
    fn scan_blossom(&mut self, mut v: usize, mut w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            debug_assert_eq!(self.label[b], 1);
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                debug_assert_eq!(self.label[b], 2);
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        self.blossoms_formed += 1;
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("blossom slot available");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            path.push(bv);
            endps.push(self.labelend[bv]);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            path.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        debug_assert_eq!(self.label[bb], 1);
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        for leaf in self.leaves_of_children(&path) {
            if self.label[self.inblossom[leaf]] == 2 {
                self.queue.push(leaf);
            }
            self.inblossom[leaf] = b;
        }

        let mut bestedgeto = vec![NONE; 2 * self.n];
        for &sub in &path {
            let lists: Vec<usize> = match self.blossombestedges[sub].take() {
                Some(list) => list,
                None => self
                    .leaves_of(sub)
                    .into_iter()
                    .flat_map(|leaf| self.neighbend[leaf].iter().map(|&p| p / 2))
                    .collect(),
            };
            for kk in lists {
                let (mut i, mut j, _) = self.edges[kk];
                if self.inblossom[j] == b {
                    std::mem::swap(&mut i, &mut j);
                }
                let _ = i;
                let bj = self.inblossom[j];
                if bj != b
                    && self.label[bj] == 1
                    && (bestedgeto[bj] == NONE || self.slack(kk) < self.slack(bestedgeto[bj]))
                {
                    bestedgeto[bj] = kk;
                }
            }
            self.bestedge[sub] = NONE;
        }
        let best: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for &kk in &best {
            if self.bestedge[b] == NONE || self.slack(kk) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = kk;
            }
        }
        self.blossombestedges[b] = Some(best);
        self.blossomchilds[b] = path;
        self.blossomendps[b] = endps;
    }

    fn leaves_of_children(&self, children: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &c in children {
            self.leaves(c, &mut out);
        }
        out
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = NONE;
            if s < self.n {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for leaf in self.leaves_of(s) {
                    self.inblossom[leaf] = s;
                }
            }
        }

        if !endstage && self.label[b] == 2 {
            let endps = self.blossomendps[b].clone();
            let len = childs.len() as isize;
            let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = childs
                .iter()
                .position(|&c| c == entrychild)
                .expect("entry child present") as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 != 0 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            while j != 0 {
                let q = endps[at(j - endptrick as isize)];
                self.label[self.endpoint[p ^ 1]] = 0;
                self.label[self.endpoint[q ^ endptrick ^ 1]] = 0;
                self.assign_label(self.endpoint[p ^ 1], 2, p);
                self.allowedge[q / 2] = true;
                j += jstep;
                p = endps[at(j - endptrick as isize)] ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = childs[at(j)];
            let ep = self.endpoint[p ^ 1];
            self.label[ep] = 2;
            self.label[bv] = 2;
            self.labelend[ep] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while childs[at(j)] != entrychild {
                let bv = childs[at(j)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let found = self
                    .leaves_of(bv)
                    .into_iter()
                    .find(|&leaf| self.label[leaf] != 0);
                if let Some(leaf) = found {
                    debug_assert_eq!(self.label[leaf], 2);
                    self.label[leaf] = 0;
                    let mb = self.mate[self.blossombase[bv]];
                    self.label[self.endpoint[mb]] = 0;
                    self.assign_label(leaf, 2, self.labelend[leaf]);
                }
                j += jstep;
            }
        }

        self.label[b] = 0;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    /// Swaps matched and unmatched edges on the alternating path through
    /// blossom `b` between vertex `v` and the base.
    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.n {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len() as isize;
        let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
        let i = self.blossomchilds[b]
            .iter()
            .position(|&c| c == t)
            .expect("child present");
        let mut j = i as isize;
        let (jstep, endptrick): (isize, usize) = if j & 1 != 0 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t1 = self.blossomchilds[b][at(j)];
            let p = self.blossomendps[b][at(j - endptrick as isize)] ^ endptrick;
            if t1 >= self.n {
                self.augment_blossom(t1, self.endpoint[p]);
            }
            j += jstep;
            let t2 = self.blossomchilds[b][at(j)];
            if t2 >= self.n {
                self.augment_blossom(t2, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    fn augment_matching(&mut self, k: usize) {
        self.augmentations += 1;
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], 1);
                if bs >= self.n {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], 2);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                if bt >= self.n {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn run(&mut self) {
        let n = self.n;
        while self.matched_count() * 2 < n {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|b| *b = NONE);
            for b in n..2 * n {
                self.blossombestedges[b] = None;
            }
            self.allowedge.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..n {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }

            let mut augmented = false;
            loop {
                while let Some(v) = self.queue.pop() {
                    debug_assert_eq!(self.label[self.inblossom[v]], 1);
                    let mut idx = 0;
                    while idx < self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        idx += 1;
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                debug_assert_eq!(self.label[self.inblossom[w]], 2);
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                    if augmented {
                        break;
                    }
                }
                if augmented {
                    break;
                }

                // Smallest dual change that creates a new tight edge or
                // exhausts a T-blossom.
                let mut deltatype = 0u8;
                let mut delta = 0i64;
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                for v in 0..n {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * n {
                    if self.blossomparent[b] == NONE
                        && self.label[b] == 1
                        && self.bestedge[b] != NONE
                    {
                        let kslack = self.slack(self.bestedge[b]);
                        debug_assert_eq!(kslack % 2, 0);
                        let d = kslack / 2;
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && (deltatype == 0 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == 0 {
                    // no augmenting path remains: the matching has maximum cardinality
                    break;
                }

                for v in 0..n {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }

                match deltatype {
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        debug_assert_eq!(self.label[self.inblossom[i]], 1);
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        debug_assert_eq!(self.label[self.inblossom[i]], 1);
                        self.queue.push(i);
                    }
                    4 => self.expand_blossom(deltablossom, false),
                    _ => unreachable!(),
                }
            }

            if !augmented {
                break;
            }
            for b in n..2 * n {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == 1
                    && self.dualvar[b] == 0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
    }
}
