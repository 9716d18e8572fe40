//! Match-quality measures: subclass homogeneity, dose heterogeneity,
//! covariate balance, and an exhaustive optimum for small instances.

use serde::{Deserialize, Serialize};

use crate::distance::{DistanceMatrix, UnitTable};
use crate::error::{Error, Result};
use crate::subclass::Subclassification;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightingScheme {
    /// Every subclass weighs the same.
    Const,
    /// A subclass weighs its size minus one.
    Suit,
}

/// Whether subclass weights are used as is or rescaled to sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weights {
    Raw,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Mean distance over all ordered pairs of members.
    Nu,
    /// Mean distance from the subclass reference to the other members.
    NuStar,
    /// `NuStar` at the best possible reference.
    NuStarMin,
}

/// Mean pairwise distance within a subclass.
pub fn nu(members: &[usize], dm: &DistanceMatrix) -> Result<f64> {
    let n = members.len();
    if n < 2 {
        return Err(Error::SubclassTooSmall);
    }
    let mut sum = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            sum += dm.present(i, j)?;
        }
    }
    Ok(2.0 * sum / (n * (n - 1)) as f64)
}

/// Mean distance from `reference` to the other members.
pub fn nu_star(members: &[usize], reference: usize, dm: &DistanceMatrix) -> Result<f64> {
    let n = members.len();
    if n < 2 {
        return Err(Error::SubclassTooSmall);
    }
    if !members.contains(&reference) {
        return Err(Error::RefNotMember(reference));
    }
    let mut sum = 0.0;
    for &j in members {
        if j != reference {
            sum += dm.present(reference, j)?;
        }
    }
    Ok(sum / (n - 1) as f64)
}

/// Smallest star homogeneity over reference choices, with the reference
/// attaining it (lowest index on ties). References with an absent distance to
/// some member are skipped.
pub fn nu_star_min(members: &[usize], dm: &DistanceMatrix) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    let mut absent = None;
    for &r in members {
        let v = match nu_star(members, r, dm) {
            Ok(v) => v,
            Err(e @ Error::AbsentDistance(..)) => {
                absent = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if best.is_none_or(|(b, br)| v < b || (v == b && r < br)) {
            best = Some((v, r));
        }
    }
    best.ok_or(absent.unwrap_or(Error::SubclassTooSmall))
}

fn raw_weight(scheme: WeightingScheme, size: usize) -> f64 {
    match scheme {
        WeightingScheme::Const => 1.0,
        WeightingScheme::Suit => (size - 1) as f64,
    }
}

/// Weighted sum of a per-subclass measure. When `lambda` is given the
/// cardinality penalty `lambda * sum(|subclass| - 2)` is added.
pub fn weighted_measure(
    pi: &Subclassification,
    dm: &DistanceMatrix,
    scheme: WeightingScheme,
    measure: Measure,
    weights: Weights,
    lambda: Option<f64>,
) -> Result<f64> {
    let blocks: Vec<(&[usize], usize)> = pi
        .subclasses()
        .iter()
        .map(|s| (s.members.as_slice(), s.reference))
        .collect();
    weighted_blocks(&blocks, dm, scheme, measure, weights, lambda)
}

fn block_value(members: &[usize], reference: usize, dm: &DistanceMatrix, measure: Measure) -> Result<f64> {
    match measure {
        Measure::Nu => nu(members, dm),
        Measure::NuStar => nu_star(members, reference, dm),
        Measure::NuStarMin => nu_star_min(members, dm).map(|(v, _)| v),
    }
}

fn weighted_blocks(
    blocks: &[(&[usize], usize)],
    dm: &DistanceMatrix,
    scheme: WeightingScheme,
    measure: Measure,
    weights: Weights,
    lambda: Option<f64>,
) -> Result<f64> {
    let total_weight: f64 = blocks.iter().map(|b| raw_weight(scheme, b.0.len())).sum();
    let scale = match weights {
        Weights::Raw => 1.0,
        Weights::Normalized if total_weight > 0.0 => 1.0 / total_weight,
        Weights::Normalized => 0.0,
    };
    let mut value = 0.0;
    for &(members, reference) in blocks {
        value += raw_weight(scheme, members.len()) * scale * block_value(members, reference, dm, measure)?;
    }
    if let Some(l) = lambda {
        let excess: usize = blocks.iter().map(|b| b.0.len() - 2).sum();
        value += l * excess as f64;
    }
    Ok(value)
}

/// Mean absolute dose difference between the reference and the other members.
pub fn mu_dose(members: &[usize], reference: usize, z: &[f64]) -> Result<f64> {
    if members.len() < 2 {
        return Err(Error::SubclassTooSmall);
    }
    if !members.contains(&reference) {
        return Err(Error::RefNotMember(reference));
    }
    let sum: f64 = members
        .iter()
        .filter(|&&j| j != reference)
        .map(|&j| (z[reference] - z[j]).abs())
        .sum();
    Ok(sum / (members.len() - 1) as f64)
}

/// Covariate means of the high-dose and low-dose halves of a subclass.
///
/// Members with dose at or above the subclass median are "high". Returns
/// `None` when every member is high, which happens only when all doses tie.
pub fn high_low_means(members: &[usize], u: &UnitTable) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut doses: Vec<f64> = members.iter().map(|&m| u.dose[m]).collect();
    doses.sort_by(f64::total_cmp);
    let k = doses.len();
    let median = if k % 2 == 1 {
        doses[k / 2]
    } else {
        (doses[k / 2 - 1] + doses[k / 2]) / 2.0
    };
    let d = u.dim();
    let (mut high, mut low) = (vec![0.0; d], vec![0.0; d]);
    let (mut nh, mut nl) = (0usize, 0usize);
    for &m in members {
        let (acc, count) = if u.dose[m] >= median {
            (&mut high, &mut nh)
        } else {
            (&mut low, &mut nl)
        };
        *count += 1;
        for (c, a) in acc.iter_mut().enumerate() {
            *a += u.covariates[(m, c)];
        }
    }
    if nl == 0 {
        return None;
    }
    high.iter_mut().for_each(|x| *x /= nh as f64);
    low.iter_mut().for_each(|x| *x /= nl as f64);
    Some((high, low))
}

/// Overall balance: for each covariate, the high-minus-low mean difference
/// averaged over subclasses, squared and summed over covariates. Subclasses
/// with no dose variation are skipped.
pub fn balance_ss_groups<'a>(groups: impl IntoIterator<Item = &'a [usize]>, u: &UnitTable) -> f64 {
    let d = u.dim();
    let mut diff = vec![0.0; d];
    let mut count = 0usize;
    for members in groups {
        if let Some((high, low)) = high_low_means(members, u) {
            for c in 0..d {
                diff[c] += high[c] - low[c];
            }
            count += 1;
        }
    }
    if count == 0 {
        return 0.0;
    }
    diff.iter().map(|x| (x / count as f64).powi(2)).sum()
}

pub fn balance_ss(pi: &Subclassification, u: &UnitTable) -> f64 {
    balance_ss_groups(pi.subclasses().iter().map(|s| s.members.as_slice()), u)
}

/// Balance of the unmatched sample, treated as a single subclass.
pub fn prematch_ss(u: &UnitTable) -> f64 {
    let all: Vec<usize> = (0..u.len()).collect();
    balance_ss_groups([all.as_slice()], u)
}

/// Sample quantile with linear interpolation between order statistics
/// (position `p * (n - 1)` in the sorted data).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    /// 25th, 50th, 75th and 90th percentiles of subclass mean pairwise distance.
    pub nu_quantiles: [f64; 4],
    pub hm1: f64,
    pub hm2: f64,
    pub hm3: f64,
    pub hm4: f64,
    /// Minimum, 25th, 50th and 75th percentiles of subclass dose heterogeneity.
    pub mu_quantiles: [f64; 4],
    pub ss: f64,
    pub set_count: usize,
}

/// Summary of a subclassification. `dm` should be the covariate distance
/// without any dose penalty.
pub fn report(pi: &Subclassification, dm: &DistanceMatrix, u: &UnitTable) -> Result<HomogeneityReport> {
    if pi.is_empty() {
        return Err(Error::InvalidSubclassification("no subclasses".into()));
    }
    let mut nus = pi
        .subclasses()
        .iter()
        .map(|s| nu(&s.members, dm))
        .collect::<Result<Vec<_>>>()?;
    nus.sort_by(f64::total_cmp);
    let mut mus = pi
        .subclasses()
        .iter()
        .map(|s| mu_dose(&s.members, s.reference, &u.dose))
        .collect::<Result<Vec<_>>>()?;
    mus.sort_by(f64::total_cmp);
    let hm = |scheme, measure| weighted_measure(pi, dm, scheme, measure, Weights::Normalized, None);
    Ok(HomogeneityReport {
        nu_quantiles: [0.25, 0.5, 0.75, 0.9].map(|p| quantile(&nus, p)),
        hm1: hm(WeightingScheme::Const, Measure::Nu)?,
        hm2: hm(WeightingScheme::Suit, Measure::Nu)?,
        hm3: hm(WeightingScheme::Const, Measure::NuStarMin)?,
        hm4: hm(WeightingScheme::Suit, Measure::NuStarMin)?,
        mu_quantiles: [mus[0], quantile(&mus, 0.25), quantile(&mus, 0.5), quantile(&mus, 0.75)],
        ss: balance_ss(pi, u),
        set_count: pi.len(),
    })
}

/// Largest instance accepted by [`brute_force_optimum`].
pub const BRUTE_FORCE_MAX: usize = 10;

/// Exhaustive minimum over all partitions into subclasses of size two or
/// more (and, for star measures, every reference choice).
///
/// References in the returned subclassification minimise star homogeneity
/// within each subclass.
pub fn brute_force_optimum(
    dm: &DistanceMatrix,
    scheme: WeightingScheme,
    measure: Measure,
    weights: Weights,
    lambda: Option<f64>,
    max_n: usize,
) -> Result<(Subclassification, f64)> {
    let n = dm.len();
    let max = max_n.min(BRUTE_FORCE_MAX);
    if n > max {
        return Err(Error::TooLarge { n, max });
    }
    if n < 2 {
        return Err(Error::SubclassTooSmall);
    }
    // reference choice is free per block, so NuStar reduces to NuStarMin
    let measure = match measure {
        Measure::NuStar => Measure::NuStarMin,
        m => m,
    };
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut failure = None;
    enumerate_partitions((1u32 << n) - 1, &mut blocks, &mut |blocks| {
        let view: Vec<(&[usize], usize)> = blocks.iter().map(|b| (b.as_slice(), b[0])).collect();
        match weighted_blocks(&view, dm, scheme, measure, weights, lambda) {
            Ok(v) => {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, blocks.to_vec()));
                }
            }
            Err(Error::AbsentDistance(..)) => {}
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (value, blocks) = best.ok_or(Error::Infeasible)?;
    let subclasses = blocks
        .into_iter()
        .map(|b| {
            let (_, r) = nu_star_min(&b, dm)?;
            Ok((b, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Subclassification::new(n, subclasses, Vec::new())?, value))
}

/// Calls `visit` once per partition of the set bits of `rest` into blocks of
/// at least two elements.
pub fn enumerate_partitions(
    rest: u32,
    blocks: &mut Vec<Vec<usize>>,
    visit: &mut dyn FnMut(&[Vec<usize>]),
) {
    if rest == 0 {
        visit(blocks);
        return;
    }
    let first = rest.trailing_zeros();
    let others = rest & !(1 << first);
    // every nonempty subset of the others joins `first`
    let mut sub = others;
    while sub != 0 {
        let mut block = vec![first as usize];
        block.extend((0..32).filter(|b| sub & (1 << b) != 0).map(|b| b as usize));
        blocks.push(block);
        enumerate_partitions(others & !sub, blocks, visit);
        blocks.pop();
        sub = (sub - 1) & others;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn constant(n: usize, c: f64) -> DistanceMatrix {
        DistanceMatrix::from_fn(n, |_, _| Some(c)).unwrap()
    }

    #[test]
    fn pair_measures_coincide() {
        let dm = constant(2, 3.0);
        assert_eq!(nu(&[0, 1], &dm), Ok(3.0));
        assert_eq!(nu_star(&[0, 1], 1, &dm), Ok(3.0));
        assert_eq!(nu_star_min(&[0, 1], &dm), Ok((3.0, 0)));
    }

    #[test]
    fn star_uses_reference_row() {
        let dm = DistanceMatrix::from_rows(&[
            vec![0.0, 2.0, 4.0],
            vec![2.0, 0.0, 5.0],
            vec![4.0, 5.0, 0.0],
        ])
        .unwrap();
        assert_eq!(nu_star(&[0, 1, 2], 0, &dm), Ok(3.0));
        assert_eq!(nu_star_min(&[0, 1, 2], &dm), Ok((3.0, 0)));
        assert!((nu(&[0, 1, 2], &dm).unwrap() - 11.0 / 3.0).abs() < 1e-15);
        assert_eq!(nu_star(&[0, 1], 2, &dm), Err(Error::RefNotMember(2)));
    }

    #[test]
    fn dose_heterogeneity() {
        let z = [0.8, 0.5, 0.2];
        assert!((mu_dose(&[0, 1, 2], 0, &z).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(mu_dose(&[0, 1], 0, &[0.3, 0.3]), Ok(0.0));
        let z = [0.1, 0.7];
        assert!((mu_dose(&[0, 1], 1, &z).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn high_and_low_halves() {
        let x = DMatrix::from_column_slice(5, 1, &[1.5, 2.0, 1.0, 1.5, 2.0]);
        let u = UnitTable::unnamed(vec![0.1, 0.2, 0.3, 0.4, 0.5], x).unwrap();
        let (high, low) = high_low_means(&[0, 1, 2, 3, 4], &u).unwrap();
        assert_eq!(high, vec![1.5]);
        assert_eq!(low, vec![1.75]);
    }

    #[test]
    fn single_pair_balance() {
        let x = DMatrix::from_column_slice(2, 1, &[3.0, 5.0]);
        let u = UnitTable::unnamed(vec![0.2, 0.9], x).unwrap();
        let pi = Subclassification::new(2, vec![(vec![0, 1], 0)], vec![]).unwrap();
        assert_eq!(balance_ss(&pi, &u), 4.0);
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert!((quantile(&v, 0.9) - 3.7).abs() < 1e-12);
    }

    #[test]
    fn four_units_have_four_partitions() {
        let mut count = 0;
        enumerate_partitions(0b1111, &mut Vec::new(), &mut |_| count += 1);
        assert_eq!(count, 4);
    }

    #[test]
    fn brute_force_rejects_large_inputs() {
        let dm = constant(12, 1.0);
        assert_eq!(
            brute_force_optimum(&dm, WeightingScheme::Suit, Measure::Nu, Weights::Raw, None, 8)
                .map(|r| r.1),
            Err(Error::TooLarge { n: 12, max: 8 })
        );
    }
}
