//! Randomization inference for matched clustered designs with a continuous
//! dose, using the double rank sum statistic.
//!
//! Under the sharp null, cluster responses are fixed and the doses within each
//! matched set are exchangeable. A dose carries its global rank with it when
//! permuted, so ranks are computed once and every draw only reorders them.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

/// Sets whose permutation group is at most this large are enumerated exactly.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: String,
    pub dose: f64,
    /// Mean response over the cluster's records.
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredStudy {
    sets: Vec<Vec<Cluster>>,
}

impl ClusteredStudy {
    pub fn new(sets: Vec<Vec<Cluster>>) -> Result<Self> {
        for (k, set) in sets.iter().enumerate() {
            if set.len() < 2 {
                return Err(Error::InvalidStudy(format!(
                    "matched set {k} has {} cluster(s)",
                    set.len()
                )));
            }
            for c in set {
                if !(c.dose.is_finite() && c.response.is_finite()) {
                    return Err(Error::InvalidStudy(format!(
                        "cluster {:?} has a non-finite dose or response",
                        c.id
                    )));
                }
            }
        }
        if sets.is_empty() {
            return Err(Error::InvalidStudy("no matched sets".into()));
        }
        Ok(ClusteredStudy { sets })
    }

    pub fn sets(&self) -> &[Vec<Cluster>] {
        &self.sets
    }

    /// Total number of clusters.
    pub fn len(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Size of the within-set permutation group, saturating at `u64::MAX`.
    pub fn permutation_count(&self) -> u64 {
        self.sets.iter().fold(1u64, |acc, s| {
            let f = (2..=s.len() as u64).fold(1u64, |a, b| a.saturating_mul(b));
            acc.saturating_mul(f)
        })
    }

    fn doses(&self) -> Vec<f64> {
        self.sets.iter().flatten().map(|c| c.dose).collect()
    }

    fn responses(&self) -> Vec<f64> {
        self.sets.iter().flatten().map(|c| c.response).collect()
    }
}

/// Mean response per cluster; input is `(cluster id, records)` in output order.
pub fn aggregate_clusters(records: &[(String, Vec<f64>)]) -> Result<Vec<(String, f64)>> {
    records
        .iter()
        .map(|(id, r)| {
            if r.is_empty() {
                Err(Error::EmptyCluster(id.clone()))
            } else {
                Ok((id.clone(), r.iter().sum::<f64>() / r.len() as f64))
            }
        })
        .collect()
}

/// Ranks 1..=n with tied values sharing the mean of their ranks.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Doubled midranks are integers, so sums of their products are exact.
fn doubled_ranks(values: &[f64]) -> Vec<i64> {
    midranks(values).into_iter().map(|r| (2.0 * r) as i64).collect()
}

/// `T = (1/N²) Σ q1(Z)·q2(R)` over all clusters, with global midranks.
pub fn double_rank_statistic(s: &ClusteredStudy) -> f64 {
    let q1 = doubled_ranks(&s.doses());
    let q2 = doubled_ranks(&s.responses());
    let n = s.len() as f64;
    scaled(q1.iter().zip(&q2).map(|(a, b)| a * b).sum(), n)
}

#[inline]
fn scaled(doubled_sum: i64, n: f64) -> f64 {
    doubled_sum as f64 / (4.0 * n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    /// Small statistics are evidence: higher dose, lower response.
    Less,
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Enumerate when the permutation group is small enough, else sample.
    #[default]
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOptions {
    pub draws: usize,
    pub seed: u64,
    pub alternative: Alternative,
    pub method: Method,
    pub execution: Execution,
}

impl TestOptions {
    pub fn new(draws: usize, seed: u64, alternative: Alternative) -> Self {
        TestOptions {
            draws,
            seed,
            alternative,
            method: Method::Auto,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t_obs: f64,
    pub reference_draws: Vec<f64>,
    pub p_value: f64,
    pub draws: usize,
    pub seed: u64,
    pub alternative: Alternative,
    pub exhaustive: bool,
}

/// Tests the sharp null by permuting doses within matched sets.
///
/// Exhaustive p-values are exact: the enumeration already contains the
/// observed assignment. Sampled p-values add it once,
/// `(1 + #{draws at least as extreme}) / (1 + M)`. Sampled draw `i` uses its
/// own ChaCha stream, so results do not depend on thread count.
pub fn randomization_test(s: &ClusteredStudy, opts: &TestOptions) -> Result<TestResult> {
    let exhaustive = match opts.method {
        Method::Exhaustive => true,
        Method::Sampled => false,
        Method::Auto => s.permutation_count() <= EXHAUSTIVE_LIMIT,
    };
    if !exhaustive && opts.draws == 0 {
        return Err(Error::InvalidParameter("draws must be at least 1".into()));
    }
    let q1 = doubled_ranks(&s.doses());
    let q2 = doubled_ranks(&s.responses());
    let mut offsets = Vec::with_capacity(s.sets.len() + 1);
    let mut acc = 0;
    for set in &s.sets {
        offsets.push(acc);
        acc += set.len();
    }
    offsets.push(acc);
    let n = s.len() as f64;
    let observed: i64 = q1.iter().zip(&q2).map(|(a, b)| a * b).sum();

    let sums: Vec<i64> = if exhaustive {
        if s.permutation_count() > EXHAUSTIVE_LIMIT * 100 {
            return Err(Error::InvalidParameter(format!(
                "{} permutations are too many to enumerate",
                s.permutation_count()
            )));
        }
        enumerate_sums(&q1, &q2, &offsets)
    } else {
        opts.execution.map(opts.draws, |draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(draw as u64);
            let mut perm = q1.clone();
            for k in 0..offsets.len() - 1 {
                perm[offsets[k]..offsets[k + 1]].shuffle(&mut rng);
            }
            perm.iter().zip(&q2).map(|(a, b)| a * b).sum()
        })
    };

    let extreme = sums
        .iter()
        .filter(|&&t| match opts.alternative {
            Alternative::Greater => t >= observed,
            Alternative::Less => t <= observed,
        })
        .count();
    Ok(TestResult {
        t_obs: scaled(observed, n),
        p_value: if exhaustive {
            extreme as f64 / sums.len() as f64
        } else {
            (1 + extreme) as f64 / (1 + sums.len()) as f64
        },
        draws: sums.len(),
        reference_draws: sums.into_iter().map(|t| scaled(t, n)).collect(),
        seed: opts.seed,
        alternative: opts.alternative,
        exhaustive,
    })
}

/// Statistic (doubled-rank scale) for every element of the product of
/// within-set permutation groups, identity first.
fn enumerate_sums(q1: &[i64], q2: &[i64], offsets: &[usize]) -> Vec<i64> {
    let sets = offsets.len() - 1;
    // per-set list of all contributions sum_j q1[perm(j)] * q2[j]
    let per_set: Vec<Vec<i64>> = (0..sets)
        .map(|k| {
            let (a, b) = (offsets[k], offsets[k + 1]);
            permutations(&q1[a..b])
                .into_iter()
                .map(|p| p.iter().zip(&q2[a..b]).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    let mut out = vec![0i64];
    for contributions in per_set {
        let mut next = Vec::with_capacity(out.len() * contributions.len());
        for &base in &out {
            next.extend(contributions.iter().map(|c| base + c));
        }
        out = next;
    }
    out
}

/// All orderings of `items` in lexicographic order of positions.
fn permutations(items: &[i64]) -> Vec<Vec<i64>> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    let mut out = Vec::new();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // next permutation of idx
        let Some(i) = (1..idx.len()).rev().find(|&i| idx[i - 1] < idx[i]) else {
            return out;
        };
        let j = (i..idx.len()).rev().find(|&j| idx[j] > idx[i - 1]).unwrap();
        idx.swap(i - 1, j);
        idx[i..].reverse();
    }
}
