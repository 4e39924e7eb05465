use std::fmt;

/// Maximum number of variables a [`VarSet`] can address.
pub const MAX_VARIABLES: usize = 64;

/// A set of variable indices packed into a 64-bit mask.
///
/// Ordering is numeric on the mask, which for equal-length encodings is the
/// same as comparing the big-endian byte form used in canonical DAG keys.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarSet(u64);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        VarSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(v: usize) -> Self {
        debug_assert!(v < MAX_VARIABLES);
        VarSet(1 << v)
    }

    /// All indices in `0..n`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_VARIABLES);
        if n == MAX_VARIABLES {
            VarSet(u64::MAX)
        } else {
            VarSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, v: usize) -> bool {
        v < MAX_VARIABLES && self.0 & (1 << v) != 0
    }

    pub fn with(self, v: usize) -> Self {
        VarSet(self.0 | (1 << v))
    }

    pub fn without(self, v: usize) -> Self {
        VarSet(self.0 & !(1 << v))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VarSet) -> Self {
        VarSet(self.0 & other.0)
    }

    pub fn difference(self, other: VarSet) -> Self {
        VarSet(self.0 & !other.0)
    }

    /// Largest member, if any.
    pub fn max_index(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    pub fn iter(self) -> VarSetIter {
        VarSetIter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl FromIterator<usize> for VarSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(VarSet::EMPTY, VarSet::with)
    }
}

impl IntoIterator for VarSet {
    type Item = usize;
    type IntoIter = VarSetIter;

    fn into_iter(self) -> VarSetIter {
        self.iter()
    }
}

/// Ascending iterator over the members of a [`VarSet`].
#[derive(Clone)]
pub struct VarSetIter(u64);

impl Iterator for VarSetIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let v = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(v)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for VarSetIter {}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Iterates all subsets of `set`, including the empty set and `set` itself.
pub fn subsets(set: VarSet) -> impl Iterator<Item = VarSet> {
    let mask = set.bits();
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some((cur.wrapping_sub(mask)) & mask)
        };
        Some(VarSet(cur))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterates_in_ascending_order() {
        let s: VarSet = [5, 1, 3].into_iter().collect();
        assert_eq!(s.to_vec(), vec![1, 3, 5]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.max_index(), Some(5));
        assert_eq!(VarSet::EMPTY.max_index(), None);
    }

    #[test]
    fn subset_enumeration_covers_power_set() {
        let s: VarSet = [0, 2, 4].into_iter().collect();
        let all: Vec<_> = subsets(s).collect();
        assert_eq!(all.len(), 8);
        assert!(all.iter().all(|x| x.is_subset_of(s)));
        assert_eq!(subsets(VarSet::EMPTY).count(), 1);
    }

    #[test]
    fn full_set_edges() {
        assert_eq!(VarSet::full(0), VarSet::EMPTY);
        assert_eq!(VarSet::full(3).to_vec(), vec![0, 1, 2]);
        assert_eq!(VarSet::full(64).len(), 64);
    }
}
