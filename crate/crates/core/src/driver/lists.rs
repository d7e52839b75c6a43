use serde::{Deserialize, Serialize};

/// A nondecreasing multiset of cycle lengths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LengthList {
    entries: Vec<usize>,
}

impl LengthList {
    /// Sorts the entries; zeros are dropped.
    pub fn new(entries: impl Into<Vec<usize>>) -> LengthList {
        let mut entries: Vec<usize> = entries.into();
        entries.retain(|&x| x > 0);
        entries.sort_unstable();
        LengthList { entries }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> usize {
        self.entries.iter().sum()
    }

    pub fn max(&self) -> Option<usize> {
        self.entries.last().copied()
    }

    pub fn min(&self) -> Option<usize> {
        self.entries.first().copied()
    }

    /// Number of entries equal to `m`.
    pub fn count(&self, m: usize) -> usize {
        self.entries.iter().filter(|&&x| x == m).count()
    }

    pub fn odd_count(&self) -> usize {
        self.entries.iter().filter(|&&x| x % 2 == 1).count()
    }

    pub fn odd_sum(&self) -> usize {
        self.entries.iter().filter(|&&x| x % 2 == 1).sum()
    }

    /// Sum of the entries rounded down to even: `sum - odd_count`.
    pub fn even_sum(&self) -> usize {
        self.sum() - self.odd_count()
    }

    /// Largest even entry.
    pub fn max_even(&self) -> Option<usize> {
        self.entries.iter().rev().copied().find(|x| x % 2 == 0)
    }

    /// Sum of all odd entries but the three largest.
    pub fn sigma(&self) -> usize {
        let odd: Vec<usize> = self.entries.iter().copied().filter(|x| x % 2 == 1).collect();
        odd[..odd.len().saturating_sub(3)].iter().sum()
    }

    /// Largest entry at most three times the next one (vacuous below two entries).
    pub fn is_well_behaved(&self) -> bool {
        match self.entries.as_slice() {
            [.., x, y] => *y <= 3 * *x,
            _ => true,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.entries.windows(2).all(|p| p[0] == p[1])
    }

    pub fn contains(&self, m: usize) -> bool {
        self.entries.binary_search(&m).is_ok()
    }

    /// Multiset difference; entries of `other` not present are ignored.
    pub fn without(&self, other: &[usize]) -> LengthList {
        let mut v = self.entries.clone();
        for x in other {
            if let Some(p) = v.iter().position(|y| y == x) {
                v.remove(p);
            }
        }
        LengthList { entries: v }
    }

    pub(crate) fn push(&mut self, x: usize) {
        let p = self.entries.partition_point(|&y| y <= x);
        self.entries.insert(p, x);
    }

    /// Removes one copy of `x`; false if absent.
    pub(crate) fn take(&mut self, x: usize) -> bool {
        match self.entries.binary_search(&x) {
            Ok(p) => {
                self.entries.remove(p);
                true
            }
            Err(_) => false,
        }
    }
}

impl From<Vec<usize>> for LengthList {
    fn from(v: Vec<usize>) -> Self {
        LengthList::new(v)
    }
}

impl std::fmt::Display for LengthList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        let l = LengthList::new(vec![5, 3, 0, 4, 7, 5, 9]);
        assert_eq!(l.entries(), &[3, 4, 5, 5, 7, 9]);
        assert_eq!(l.odd_count(), 5);
        assert_eq!(l.count(5), 2);
        assert_eq!(l.even_sum(), 33 - 5);
        // odd entries 3 5 5 7 9: all but the top three
        assert_eq!(l.sigma(), 8);
        assert!(l.is_well_behaved());
        assert!(!LengthList::new(vec![3, 10]).is_well_behaved());
        assert_eq!(l.without(&[5, 6]).entries(), &[3, 4, 5, 7, 9]);
    }
}
