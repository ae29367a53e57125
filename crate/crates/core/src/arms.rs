//! Fixed-capacity arm sets.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Maximum number of arms an instance may have.
pub const MAX_ARMS: usize = 64;

/// A set of arm indices in `[0, 64)`, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ArmSet(u64);

impl ArmSet {
    pub const EMPTY: ArmSet = ArmSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        ArmSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// `{0, 1, ..., k-1}`.
    pub fn full(k: usize) -> Self {
        assert!(k <= MAX_ARMS, "at most {MAX_ARMS} arms");
        if k == MAX_ARMS {
            ArmSet(u64::MAX)
        } else {
            ArmSet((1u64 << k) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < MAX_ARMS);
        ArmSet(1u64 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_ARMS && self.0 & (1u64 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < MAX_ARMS);
        self.0 |= 1u64 << i;
    }

    pub fn remove(&mut self, i: usize) {
        if i < MAX_ARMS {
            self.0 &= !(1u64 << i);
        }
    }

    pub fn with(self, i: usize) -> Self {
        let mut s = self;
        s.insert(i);
        s
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: ArmSet) -> ArmSet {
        ArmSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ArmSet) -> ArmSet {
        ArmSet(self.0 & other.0)
    }

    pub fn difference(self, other: ArmSet) -> ArmSet {
        ArmSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: ArmSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest index, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Indices in ascending order.
    pub fn iter(self) -> ArmIter {
        ArmIter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Sum of `weights[i]` over members, accumulated in ascending index order.
    pub fn weight(self, weights: &[f64]) -> f64 {
        self.iter().map(|i| weights[i]).fold(0.0, |acc, w| acc + w)
    }

    /// Order on sorted index lists: `{0,2} < {1}`, and a prefix sorts first.
    pub fn lex_cmp(self, other: ArmSet) -> Ordering {
        let mut a = self.iter();
        let mut b = other.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) if x != y => return x.cmp(&y),
                _ => {}
            }
        }
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }

    /// `k`-character bitstring; character `i` is `'1'` iff arm `i` is a member.
    pub fn to_bitstring(self, k: usize) -> alloc::string::String {
        (0..k)
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for ArmSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ArmSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ArmSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl<const N: usize> From<[usize; N]> for ArmSet {
    fn from(v: [usize; N]) -> Self {
        v.into_iter().collect()
    }
}

pub struct ArmIter(u64);

impl Iterator for ArmIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for ArmIter {}

/// Subset enumeration by the standard `(x - u) & u` trick.
pub struct Subsets {
    universe: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = ArmSet;

    fn next(&mut self) -> Option<ArmSet> {
        let cur = self.next?;
        self.next = if cur == self.universe {
            None
        } else {
            Some(cur.wrapping_sub(self.universe) & self.universe)
        };
        Some(ArmSet(cur))
    }
}
