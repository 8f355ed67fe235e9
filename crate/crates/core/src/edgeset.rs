use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A set of edge ids of one host graph, stored as a bitmask. Hosts have at
/// most 64 edges.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeSet(u64);

pub const MAX_EDGES: usize = 64;

impl EdgeSet {
    pub const fn empty() -> Self {
        EdgeSet(0)
    }

    pub const fn from_bits(bits: u64) -> Self {
        EdgeSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(e: usize) -> Self {
        assert!(e < MAX_EDGES, "edge id {e} exceeds {MAX_EDGES}");
        EdgeSet(1 << e)
    }

    pub fn contains(self, e: usize) -> bool {
        e < MAX_EDGES && self.0 >> e & 1 == 1
    }

    pub fn insert(&mut self, e: usize) {
        *self = self.union(Self::singleton(e));
    }

    pub fn remove(&mut self, e: usize) {
        if e < MAX_EDGES {
            self.0 &= !(1 << e);
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        EdgeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        EdgeSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        EdgeSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_strict_subset(self, other: Self) -> bool {
        self.is_subset(other) && self != other
    }

    /// Edge ids in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let e = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(e)
            }
        })
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = EdgeSet> {
        let full = self.0;
        let mut sub = 0u64;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = EdgeSet(sub);
            sub = sub.wrapping_sub(full) & full;
            done = sub == 0;
            Some(out)
        })
    }
}

impl FromIterator<usize> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = EdgeSet::empty();
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Serialized as the sorted list of edge ids.
impl Serialize for EdgeSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for EdgeSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(d)?;
        if let Some(&bad) = ids.iter().find(|&&e| e >= MAX_EDGES) {
            return Err(serde::de::Error::custom(format!("edge id {bad} out of range")));
        }
        Ok(ids.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerate_powerset() {
        let s = EdgeSet::from_iter([1, 3, 4]);
        let subs: Vec<EdgeSet> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|x| x.is_subset(s)));
        assert_eq!(EdgeSet::empty().subsets().count(), 1);
    }

    #[test]
    fn json_is_sorted_list() {
        let s = EdgeSet::from_iter([4, 0, 2]);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[0,2,4]");
        let back: EdgeSet = serde_json::from_str("[2,0,4]").unwrap();
        assert_eq!(back, s);
    }
}
