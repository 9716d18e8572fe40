use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subclass {
    /// Unit indices in increasing order.
    pub members: Vec<usize>,
    pub reference: usize,
}

impl Subclass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members other than the reference unit.
    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied().filter(move |&m| m != self.reference)
    }
}

/// A partition of units into disjoint subclasses of size at least two.
///
/// `discarded` lists units left out of every subclass; it is empty except for
/// pair matching on an odd number of units, where exactly one unit is dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subclassification {
    subclasses: Vec<Subclass>,
    unit_count: usize,
    discarded: Vec<usize>,
}

impl Subclassification {
    /// Validates and canonicalises: members sorted, subclasses ordered by
    /// smallest member.
    pub fn new(
        unit_count: usize,
        subclasses: Vec<(Vec<usize>, usize)>,
        discarded: Vec<usize>,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidSubclassification(msg));
        let mut owner = vec![usize::MAX; unit_count];
        let mut out = Vec::with_capacity(subclasses.len());
        for (k, (mut members, reference)) in subclasses.into_iter().enumerate() {
            if members.len() < 2 {
                return invalid(format!("subclass {k} has {} member(s)", members.len()));
            }
            members.sort_unstable();
            for &m in &members {
                if m >= unit_count {
                    return invalid(format!("unit {m} is out of range 0..{unit_count}"));
                }
                if owner[m] != usize::MAX {
                    return invalid(format!("unit {m} appears in more than one subclass"));
                }
                owner[m] = k;
            }
            if members.binary_search(&reference).is_err() {
                return Err(Error::RefNotMember(reference));
            }
            out.push(Subclass { members, reference });
        }
        let mut discarded = discarded;
        discarded.sort_unstable();
        for &d in &discarded {
            if d >= unit_count || owner[d] != usize::MAX {
                return invalid(format!("discarded unit {d} is out of range or assigned"));
            }
            owner[d] = usize::MAX - 1;
        }
        if let Some(u) = owner.iter().position(|&o| o == usize::MAX) {
            return invalid(format!("unit {u} is not assigned"));
        }
        out.sort_unstable_by_key(|s| s.members[0]);
        Ok(Subclassification {
            subclasses: out,
            unit_count,
            discarded,
        })
    }

    pub fn subclasses(&self) -> &[Subclass] {
        &self.subclasses
    }

    pub fn unit_count(&self) -> usize {
        self.unit_count
    }

    pub fn discarded(&self) -> &[usize] {
        &self.discarded
    }

    /// Number of subclasses.
    pub fn len(&self) -> usize {
        self.subclasses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subclasses.is_empty()
    }

    /// Subclass index of every unit, `None` for discarded units.
    pub fn labels(&self) -> Vec<Option<usize>> {
        let mut labels = vec![None; self.unit_count];
        for (k, s) in self.subclasses.iter().enumerate() {
            for &m in &s.members {
                labels[m] = Some(k);
            }
        }
        labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.subclasses.iter().map(Subclass::len).collect()
    }

    /// The star edges (reference, leaf) induced by the reference units.
    pub fn star_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .subclasses
            .iter()
            .flat_map(|s| s.leaves().map(move |l| crate::graph::ordered(s.reference, l)))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Same partition with new reference units, one per subclass in order.
    pub fn with_references(&self, refs: &[usize]) -> Result<Self> {
        if refs.len() != self.subclasses.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subclasses.len(),
                found: refs.len(),
            });
        }
        let mut out = self.clone();
        for (s, &r) in out.subclasses.iter_mut().zip(refs) {
            if s.members.binary_search(&r).is_err() {
                return Err(Error::RefNotMember(r));
            }
            s.reference = r;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let s = Subclassification::new(5, vec![(vec![4, 2], 4), (vec![3, 0, 1], 0)], vec![])
            .unwrap();
        assert_eq!(s.subclasses()[0].members, vec![0, 1, 3]);
        assert_eq!(s.subclasses()[1].members, vec![2, 4]);
        assert_eq!(s.labels(), vec![Some(0), Some(0), Some(1), Some(0), Some(1)]);
        assert_eq!(s.star_edges(), vec![(0, 1), (0, 3), (2, 4)]);
    }

    #[test]
    fn rejects_bad_partitions() {
        assert!(Subclassification::new(3, vec![(vec![0], 0)], vec![]).is_err());
        assert!(Subclassification::new(3, vec![(vec![0, 1], 0)], vec![]).is_err());
        assert!(Subclassification::new(4, vec![(vec![0, 1], 0), (vec![1, 2, 3], 2)], vec![])
            .is_err());
        assert_eq!(
            Subclassification::new(2, vec![(vec![0, 1], 5)], vec![]),
            Err(Error::RefNotMember(5))
        );
    }

    #[test]
    fn discarded_unit_is_accounted() {
        let s = Subclassification::new(3, vec![(vec![0, 2], 0)], vec![1]).unwrap();
        assert_eq!(s.discarded(), &[1]);
        assert_eq!(s.labels(), vec![Some(0), None, Some(0)]);
    }
}
