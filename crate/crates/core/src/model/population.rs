use crate::bits::BitMatrix;
use crate::error::{Error, Result};

/// A population of `n` units, each carrying a fixed neighborhood of units.
///
/// Neighborhoods always contain their own unit. The set of unordered pairs
/// whose neighborhoods intersect (the overlap pairs) is computed once at
/// construction and is available both as a sorted pair list and as an O(1)
/// bit lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    n: usize,
    neighborhoods: Vec<Vec<usize>>,
    members: BitMatrix,
    overlap: BitMatrix,
    overlap_pairs: Vec<(usize, usize)>,
    overlap_partners: Vec<Vec<usize>>,
}

impl Population {
    /// Builds a population from per-unit neighborhoods (0-based unit indices).
    /// Each unit is added to its own neighborhood if missing; duplicates are
    /// removed.
    pub fn new(neighborhoods: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighborhoods.len();
        if n < 2 {
            return Err(Error::Invalid(format!(
                "a population needs at least two units, got {n}"
            )));
        }
        let mut members = BitMatrix::new(n);
        let mut sorted = Vec::with_capacity(n);
        for (i, mut nb) in neighborhoods.into_iter().enumerate() {
            if let Some(&bad) = nb.iter().find(|&&k| k >= n) {
                return Err(Error::IndexOutOfRange { index: bad, n });
            }
            nb.push(i);
            nb.sort_unstable();
            nb.dedup();
            for &k in &nb {
                members.set(i, k, true);
            }
            sorted.push(nb);
        }

        // holders[k] = units whose neighborhood contains k
        let mut holders = vec![Vec::new(); n];
        for (i, nb) in sorted.iter().enumerate() {
            for &k in nb {
                holders[k].push(i);
            }
        }
        let mut overlap = BitMatrix::new(n);
        for (i, nb) in sorted.iter().enumerate() {
            for &k in nb {
                for &j in &holders[k] {
                    if j != i {
                        overlap.set(i, j, true);
                    }
                }
            }
        }
        let mut overlap_partners = vec![Vec::new(); n];
        let mut overlap_pairs = Vec::new();
        for (i, partners) in overlap_partners.iter_mut().enumerate() {
            for j in 0..n {
                if overlap.get(i, j) {
                    partners.push(j);
                    if i < j {
                        overlap_pairs.push((i, j));
                    }
                }
            }
        }
        Ok(Self {
            n,
            neighborhoods: sorted,
            members,
            overlap,
            overlap_pairs,
            overlap_partners,
        })
    }

    /// Every unit's neighborhood is just itself; no pair overlaps.
    pub fn isolated(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| vec![i]).collect())
    }

    /// One shared neighborhood containing the whole population.
    pub fn complete(n: usize) -> Result<Self> {
        Self::new(vec![(0..n).collect(); n])
    }

    pub fn n_units(&self) -> usize {
        self.n
    }

    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    /// Whether `k` belongs to the neighborhood of `i`.
    #[inline]
    pub fn contains(&self, i: usize, k: usize) -> bool {
        self.members.get(i, k)
    }

    /// Whether `k` lies in the intersection of the neighborhoods of `i` and `j`.
    #[inline]
    pub fn in_shared(&self, i: usize, j: usize, k: usize) -> bool {
        self.members.get(i, k) && self.members.get(j, k)
    }

    /// Unchecked overlap lookup; `false` on the diagonal.
    #[inline]
    pub fn overlaps(&self, i: usize, j: usize) -> bool {
        self.overlap.get(i, j)
    }

    /// Sorted unordered overlap pairs `(i, j)` with `i < j`.
    pub fn overlap_pairs(&self) -> &[(usize, usize)] {
        &self.overlap_pairs
    }

    /// Sorted list of units whose neighborhood meets that of `i`.
    pub fn overlap_partners(&self, i: usize) -> &[usize] {
        &self.overlap_partners[i]
    }

    pub fn check_unit(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::IndexOutOfRange { index: i, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_unit(i)?;
        self.check_unit(j)?;
        if i == j {
            return Err(Error::SelfPair(i));
        }
        Ok(())
    }
}

/// The overlap indicator c(i, j): 1 iff the neighborhoods of `i` and `j` meet.
pub fn overlap_indicator(pop: &Population, i: usize, j: usize) -> Result<u8> {
    pop.check_pair(i, j)?;
    Ok(pop.overlaps(i, j) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_one() -> Population {
        // {1,2}, {1,2,3}, {2,3} in 1-based labels
        Population::new(vec![vec![0, 1], vec![0, 1, 2], vec![1, 2]]).unwrap()
    }

    #[test]
    fn figure_one_overlaps() {
        let pop = figure_one();
        assert_eq!(overlap_indicator(&pop, 0, 2).unwrap(), 1);
        assert_eq!(overlap_indicator(&pop, 0, 1).unwrap(), 1);
        assert_eq!(pop.overlap_pairs(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn disjoint_neighborhoods_do_not_overlap() {
        let pop = Population::isolated(2).unwrap();
        assert_eq!(overlap_indicator(&pop, 0, 1).unwrap(), 0);
        assert!(pop.overlap_pairs().is_empty());
    }

    #[test]
    fn self_is_inserted_and_sorted() {
        let pop = Population::new(vec![vec![2, 1, 1], vec![], vec![0]]).unwrap();
        assert_eq!(pop.neighborhood(0), &[0, 1, 2]);
        assert_eq!(pop.neighborhood(1), &[1]);
        assert_eq!(pop.neighborhood(2), &[0, 2]);
    }

    #[test]
    fn errors() {
        let pop = figure_one();
        assert_eq!(
            overlap_indicator(&pop, 0, 3),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        );
        assert_eq!(overlap_indicator(&pop, 1, 1), Err(Error::SelfPair(1)));
        assert!(Population::new(vec![vec![5], vec![0]]).is_err());
    }

    #[test]
    fn overlap_pairs_match_brute_force() {
        let nbs = vec![
            vec![0, 3],
            vec![1],
            vec![2, 4],
            vec![3, 5],
            vec![4],
            vec![5, 1],
            vec![6],
        ];
        let pop = Population::new(nbs.clone()).unwrap();
        let mut expected = Vec::new();
        for i in 0..7 {
            for j in (i + 1)..7 {
                let a = pop.neighborhood(i);
                let b = pop.neighborhood(j);
                if a.iter().any(|k| b.contains(k)) {
                    expected.push((i, j));
                }
            }
        }
        assert_eq!(pop.overlap_pairs(), expected.as_slice());
    }
}
