use fullmatch::cover::{min_cost_star_cover, stars_to_subclasses};
use fullmatch::homogeneity::{brute_force_optimum, weighted_measure};
use fullmatch::{
    build_mirror_graph, cover_cost, full_match, mahalanobis_matrix, min_weight_perfect_matching,
    optimal_pair_match, star_reduce, CardinalityPenalty, DistanceMatrix, Edge, EdgeCover, Error,
    Measure, Subclassification, UnitTable, WeightedGraph, WeightingScheme, Weights,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut impl Rng, n: usize, absent: f64, max_cost: u32) -> DistanceMatrix {
    let mut dm = DistanceMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (rng.random::<f64>() >= absent).then(|| rng.random_range(0..=max_cost) as f64);
            dm.set(i, j, v).unwrap();
        }
    }
    dm
}

/// Cheapest edge cover by enumerating every edge subset.
fn brute_force_cover(g: &WeightedGraph) -> Option<f64> {
    let n = g.vertex_count();
    let edges = g.edges();
    let mut best: Option<f64> = None;
    for mask in 0u32..1 << edges.len() {
        let mut hit = 0u32;
        let mut cost = 0.0;
        for (k, e) in edges.iter().enumerate() {
            if mask & (1 << k) != 0 {
                hit |= 1 << e.u | 1 << e.v;
                cost += e.cost;
            }
        }
        if hit == (1 << n) - 1 && best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
    }
    best
}

#[test]
fn star_cover_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for t in 0..300 {
        let n = rng.random_range(2..=6);
        let dm = random_matrix(&mut rng, n, [0.0, 0.3][t % 2], [3, 100][(t / 2) % 2]);
        let g = dm.to_graph();
        match (min_cost_star_cover(&g, CardinalityPenalty::default()), brute_force_cover(&g)) {
            (Ok(c), Some(best)) => {
                assert_eq!(c.total_cost, best, "instance {t}");
                assert!(c.covers(n));
                stars_to_subclasses(&c, n).unwrap();
            }
            (Err(e), None) => assert!(e.is_infeasible(), "instance {t}: {e:?}"),
            (got, want) => panic!("instance {t}: {got:?} vs {want:?}"),
        }
    }
}

#[test]
fn full_match_is_optimal_for_each_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for t in 0..240 {
        let n = rng.random_range(2..=8);
        let dm = random_matrix(&mut rng, n, [0.0, 0.25][t % 2], 100);
        let lambda = [0.0, 0.5, 2.0][t % 3];
        let got = full_match(&dm, CardinalityPenalty::new(lambda).unwrap()).and_then(|pi| {
            weighted_measure(&pi, &dm, WeightingScheme::Suit, Measure::NuStar, Weights::Raw, Some(lambda))
        });
        let want = brute_force_optimum(&dm, WeightingScheme::Suit, Measure::NuStar, Weights::Raw, Some(lambda), 8);
        match (got, want) {
            (Ok(v), Ok((_, best))) => assert!((v - best).abs() <= 1e-9 * best.max(1.0), "instance {t}: {v} vs {best}"),
            (Err(e), Err(Error::Infeasible)) => assert!(e.is_infeasible()),
            (got, want) => panic!("instance {t}: {got:?} vs {want:?}"),
        }
    }
}

#[test]
fn six_units_in_two_triples() {
    let dm = DistanceMatrix::from_fn(6, |i, j| Some(if i / 3 == j / 3 { 1.0 } else { 100.0 })).unwrap();
    let full = full_match(&dm, CardinalityPenalty::default()).unwrap();
    assert_eq!(
        weighted_measure(&full, &dm, WeightingScheme::Suit, Measure::NuStar, Weights::Raw, None),
        Ok(4.0)
    );
    let pairs = optimal_pair_match(&dm).unwrap();
    assert_eq!(pairs.len(), 3);
    assert_eq!(cover_cost(&dm.to_graph(), &pairs.star_edges()), Ok(102.0));
}

#[test]
fn odd_pair_match_discards_the_best_unit_to_drop() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for t in 0..200 {
        let dm = random_matrix(&mut rng, 5, 0.0, 50);
        let pi = optimal_pair_match(&dm).unwrap();
        assert_eq!(pi.discarded().len(), 1);
        assert_eq!(pi.len(), 2);
        let got = cover_cost(&dm.to_graph(), &pi.star_edges()).unwrap();
        // drop each unit in turn and pair the rest every possible way
        let best = (0..5)
            .map(|drop| {
                let rest: Vec<usize> = (0..5).filter(|&i| i != drop).collect();
                let c = |a: usize, b: usize| dm.get(rest[a], rest[b]).unwrap();
                (c(0, 1) + c(2, 3)).min(c(0, 2) + c(1, 3)).min(c(0, 3) + c(1, 2))
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(got, best, "instance {t}");
    }
}

#[test]
fn pair_match_without_admissible_pairing_is_infeasible() {
    let dm = DistanceMatrix::from_fn(4, |i, _| (i == 0).then_some(1.0)).unwrap();
    assert!(optimal_pair_match(&dm).unwrap_err().is_infeasible());
    // a star is still a valid full match
    assert_eq!(full_match(&dm, CardinalityPenalty::default()).unwrap().len(), 1);
}

#[test]
fn mirror_graph_shape() {
    let g = WeightedGraph::new(3, vec![Edge::new(0, 1, 2.0), Edge::new(1, 2, 5.0)]).unwrap();
    let m = build_mirror_graph(&g, CardinalityPenalty::new(0.5).unwrap()).unwrap();
    assert_eq!(m.vertex_count(), 6);
    assert_eq!(m.edge_count(), 7);
    assert_eq!(m.cost(0, 3), Some(5.0));
    assert_eq!(m.cost(1, 4), Some(5.0));
    assert_eq!(m.cost(2, 5), Some(11.0));
    assert_eq!(m.cost(4, 5), Some(5.0));
    let r = min_weight_perfect_matching(&m).unwrap();
    assert!(r.matching.is_perfect(6));
}

/// Random subclassification of `n` units with random references.
fn random_partition(rng: &mut impl Rng, n: usize) -> Subclassification {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut groups = Vec::new();
    let mut rest = &order[..];
    while !rest.is_empty() {
        // never leave a single unit behind
        let take = if rest.len() <= 3 { rest.len() } else { rng.random_range(2..=rest.len().min(7) - 2) };
        let members = rest[..take].to_vec();
        let r = members[rng.random_range(0..take)];
        groups.push((members, r));
        rest = &rest[take..];
    }
    Subclassification::new(n, groups, vec![]).unwrap()
}

#[test]
fn suit_star_measure_equals_induced_cover_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..500 {
        let n = rng.random_range(2..=12);
        let dm = random_matrix(&mut rng, n, 0.0, 1000);
        let pi = random_partition(&mut rng, n);
        let v = weighted_measure(&pi, &dm, WeightingScheme::Suit, Measure::NuStar, Weights::Raw, None).unwrap();
        let c = cover_cost(&dm.to_graph(), &pi.star_edges()).unwrap();
        assert!((v - c).abs() <= 1e-12 * c.max(1.0), "{v} vs {c}");
    }
}

#[test]
fn two_approximation_with_mahalanobis_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for t in 0..60 {
        let n = rng.random_range(4..=8);
        let x = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let u = UnitTable::unnamed((0..n).map(|i| i as f64).collect(), x).unwrap();
        // the unsquared distance is a metric
        let dm = mahalanobis_matrix(&u).unwrap().sqrt();
        let alg = full_match(&dm, CardinalityPenalty::default()).unwrap();
        let v = weighted_measure(&alg, &dm, WeightingScheme::Suit, Measure::Nu, Weights::Raw, None).unwrap();
        let (_, best) = brute_force_optimum(&dm, WeightingScheme::Suit, Measure::Nu, Weights::Raw, None, 8).unwrap();
        assert!(best <= v + 1e-12 && v < 2.0 * best, "instance {t}: {v} vs {best}");
    }
}

proptest! {
    #[test]
    fn star_reduce_keeps_a_cheaper_star_cover(
        n in 2usize..=9,
        costs in proptest::collection::vec(0u32..20, 36),
        extra in proptest::collection::vec(any::<bool>(), 36),
    ) {
        let mut edges = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                edges.push(Edge::new(i, j, costs[k] as f64));
                k += 1;
            }
        }
        let g = WeightedGraph::new(n, edges).unwrap();
        // every vertex's cheapest edge plus a random selection of others
        let mut pairs: Vec<(usize, usize)> = (0..n).map(|v| {
            let (_, w) = g.min_incident(v).unwrap();
            (v.min(w), v.max(w))
        }).collect();
        pairs.extend(g.edges().iter().zip(&extra).filter(|(_, &x)| x).map(|(e, _)| (e.u, e.v)));
        let f = EdgeCover::from_pairs(&g, pairs).unwrap();
        let r = star_reduce(&f, &g).unwrap();
        prop_assert!(r.covers(n));
        prop_assert!(r.total_cost <= f.total_cost);
        prop_assert!(r.edges.iter().all(|e| f.edges.contains(e)));
        let deg = r.degrees(n);
        prop_assert!(r.edges.iter().all(|&(u, v)| deg[u] == 1 || deg[v] == 1));
        prop_assert!(stars_to_subclasses(&r, n).is_ok());
    }
}
