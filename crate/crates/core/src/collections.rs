//! Multisets and the prefix/suffix sequence helpers used across the crate.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A bag: every element maps to a strictly positive multiplicity.
///
/// Backed by a `BTreeMap` so iteration, equality and hashing follow a
/// canonical element order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Deserialize<'de> + Ord"
))]
pub struct Multiset<T: Ord> {
    #[serde(with = "pairs")]
    counts: BTreeMap<T, usize>,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Self {
            counts: BTreeMap::new(),
        }
    }
}

impl<T: Ord + Clone> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, item: T) {
        self.insert_many(item, 1);
    }

    pub fn insert_many(&mut self, item: T, times: usize) {
        if times > 0 {
            *self.counts.entry(item).or_insert(0) += times;
        }
    }

    pub fn count(&self, item: &T) -> usize {
        self.counts.get(item).copied().unwrap_or(0)
    }

    /// `#M`: sum of multiplicities.
    pub fn cardinality(&self) -> usize {
        self.counts.values().sum()
    }

    /// Number of distinct elements (size of the root set).
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, usize)> {
        self.counts.iter().map(|(k, v)| (k, *v))
    }

    /// Per-element minimum, keeping only elements present in both.
    pub fn intersection(&self, other: &Self) -> Self {
        let counts = self
            .counts
            .iter()
            .filter_map(|(k, &a)| {
                let b = other.count(k);
                (b > 0).then(|| (k.clone(), a.min(b)))
            })
            .collect();
        Self { counts }
    }

    /// Per-element maximum.
    pub fn union(&self, other: &Self) -> Self {
        let mut counts = self.counts.clone();
        for (k, &b) in &other.counts {
            let e = counts.entry(k.clone()).or_insert(0);
            *e = (*e).max(b);
        }
        Self { counts }
    }

    /// Disjoint union: per-element sum.
    pub fn sum(&self, other: &Self) -> Self {
        let mut counts = self.counts.clone();
        for (k, &b) in &other.counts {
            *counts.entry(k.clone()).or_insert(0) += b;
        }
        Self { counts }
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for item in iter {
            m.insert(item);
        }
        m
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.counts.iter()).finish()
    }
}

impl<T: Ord + fmt::Display> fmt::Display for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (k, v)) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if *v == 1 {
                write!(f, "{k}")?;
            } else {
                write!(f, "{k}^{v}")?;
            }
        }
        f.write_str("]")
    }
}

/// First `min(k, len)` elements.
pub fn hd<T>(s: &[T], k: usize) -> &[T] {
    &s[..k.min(s.len())]
}

/// Last `min(k, len)` elements.
pub fn tl<T>(s: &[T], k: usize) -> &[T] {
    &s[s.len() - k.min(s.len())..]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hd_and_tl_clip_to_length() {
        let s = [1, 2, 3, 4];
        assert_eq!(hd(&s, 2), &[1, 2]);
        assert_eq!(hd(&s, 9), &s);
        assert!(hd(&s, 0).is_empty());
        assert_eq!(tl(&s, 2), &[3, 4]);
        assert_eq!(tl(&s, 9), &s);
        assert!(tl(&s, 0).is_empty());
    }

    #[test]
    fn intersection_and_sum() {
        let x: Multiset<char> = "aab".chars().collect();
        let y: Multiset<char> = "abbc".chars().collect();
        let i = x.intersection(&y);
        assert_eq!(i.count(&'a'), 1);
        assert_eq!(i.count(&'b'), 1);
        assert_eq!(i.count(&'c'), 0);
        assert_eq!(x.sum(&y).cardinality(), 7);
        assert_eq!(x.union(&y).cardinality(), 5);
    }

    /// Every pair of multisets over {a,b} with multiplicities 0..=3.
    #[test]
    fn laws_hold_on_small_universe() {
        let mut all = Vec::new();
        for a in 0..=3 {
            for b in 0..=3 {
                let mut m = Multiset::new();
                m.insert_many('a', a);
                m.insert_many('b', b);
                all.push(m);
            }
        }
        for x in &all {
            for y in &all {
                assert_eq!(x.sum(y).cardinality(), x.cardinality() + y.cardinality());
                let i = x.intersection(y);
                for e in ['a', 'b'] {
                    assert!(i.count(&e) <= x.count(&e).min(y.count(&e)));
                    assert_eq!(i.count(&e), x.count(&e).min(y.count(&e)));
                }
                assert!(i.iter().all(|(_, c)| c > 0));
            }
        }
    }
}

/// Serializes a map as a list of `[key, value]` pairs. Non-string keys do not
/// survive JSON inside internally tagged enums otherwise.
pub mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K, V, S>(map: &BTreeMap<K, V>, ser: S) -> Result<S::Ok, S::Error>
    where
        K: Serialize,
        V: Serialize,
        S: Serializer,
    {
        ser.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(de: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(de)?.into_iter().collect())
    }
}
