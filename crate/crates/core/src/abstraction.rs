//! State and event representation functions, and the similarity measures
//! used to place non-fitting prefixes near known states.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collections::{tl, Multiset};
use crate::event_log::Event;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown abstraction `{0}` (expected set | multiset | seq, optionally `:<horizon>`)")]
pub struct AbstractionParseError(pub String);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAbstraction {
    /// `f^event(e) = π_A(e)`.
    #[default]
    ActivityName,
}

impl EventAbstraction {
    pub fn represent<'a>(&self, event: &'a Event) -> &'a str {
        match self {
            EventAbstraction::ActivityName => &event.activity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstractionKind {
    Set,
    Multiset,
    Sequence,
}

/// How a prefix is folded into a state. `horizon` keeps only the last `h`
/// events before folding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateAbstraction {
    pub kind: AbstractionKind,
    pub horizon: Option<usize>,
}

impl StateAbstraction {
    pub const fn new(kind: AbstractionKind) -> Self {
        Self {
            kind,
            horizon: None,
        }
    }

    pub const fn with_horizon(kind: AbstractionKind, horizon: usize) -> Self {
        Self {
            kind,
            horizon: Some(horizon),
        }
    }

    pub fn set() -> Self {
        Self::new(AbstractionKind::Set)
    }

    pub fn multiset() -> Self {
        Self::new(AbstractionKind::Multiset)
    }

    pub fn sequence() -> Self {
        Self::new(AbstractionKind::Sequence)
    }

    /// Representation of a prefix given as event labels.
    pub fn represent_labels<S: AsRef<str>>(&self, labels: &[S]) -> StateRepr {
        let window = match self.horizon {
            Some(h) => tl(labels, h),
            None => labels,
        };
        let names = window.iter().map(|s| s.as_ref().to_string());
        match self.kind {
            AbstractionKind::Set => StateRepr::Set(names.collect()),
            AbstractionKind::Multiset => StateRepr::Multiset(names.collect()),
            AbstractionKind::Sequence => StateRepr::Sequence(names.collect()),
        }
    }

    /// `f^state` of a prefix of events.
    pub fn represent(&self, events: &[Event]) -> StateRepr {
        let labels: Vec<&str> = events.iter().map(|e| e.activity.as_str()).collect();
        self.represent_labels(&labels)
    }

    pub fn empty_state(&self) -> StateRepr {
        self.represent_labels::<&str>(&[])
    }

    pub fn similarity(&self) -> Similarity {
        similarity_for(self.kind)
    }
}

impl fmt::Display for StateAbstraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            AbstractionKind::Set => "set",
            AbstractionKind::Multiset => "multiset",
            AbstractionKind::Sequence => "seq",
        };
        match self.horizon {
            Some(h) => write!(f, "{name}:{h}"),
            None => f.write_str(name),
        }
    }
}

impl FromStr for StateAbstraction {
    type Err = AbstractionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AbstractionParseError(s.to_string());
        let (name, horizon) = match s.split_once(':') {
            Some((n, h)) => (n, Some(h.parse::<usize>().map_err(|_| err())?)),
            None => (s, None),
        };
        let kind = match name.trim() {
            "set" => AbstractionKind::Set,
            "multiset" | "bag" => AbstractionKind::Multiset,
            "seq" | "sequence" | "list" => AbstractionKind::Sequence,
            _ => return Err(err()),
        };
        if horizon == Some(0) {
            return Err(err());
        }
        Ok(Self { kind, horizon })
    }
}

/// A state representation. Sets and multisets keep their elements in
/// canonical (sorted) order so equal states compare and hash equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "items", rename_all = "lowercase")]
pub enum StateRepr {
    Set(BTreeSet<String>),
    Multiset(Multiset<String>),
    Sequence(Vec<String>),
}

impl StateRepr {
    pub fn is_empty(&self) -> bool {
        match self {
            StateRepr::Set(s) => s.is_empty(),
            StateRepr::Multiset(m) => m.is_empty(),
            StateRepr::Sequence(v) => v.is_empty(),
        }
    }

    pub fn kind(&self) -> AbstractionKind {
        match self {
            StateRepr::Set(_) => AbstractionKind::Set,
            StateRepr::Multiset(_) => AbstractionKind::Multiset,
            StateRepr::Sequence(_) => AbstractionKind::Sequence,
        }
    }

    pub fn set<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> Self {
        StateRepr::Set(items.into_iter().map(Into::into).collect())
    }

    pub fn sequence<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> Self {
        StateRepr::Sequence(items.into_iter().map(Into::into).collect())
    }
}

impl fmt::Debug for StateRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for StateRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateRepr::Set(s) => {
                write!(f, "{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(","))
            }
            StateRepr::Multiset(m) => write!(f, "{m}"),
            StateRepr::Sequence(v) => write!(f, "<{}>", v.join(",")),
        }
    }
}

/// Jaccard similarity of two sets; 1.0 when both are empty.
pub fn sim_set<T: Ord>(x1: &BTreeSet<T>, x2: &BTreeSet<T>) -> f64 {
    let inter = x1.intersection(x2).count();
    let union = x1.len() + x2.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Multiset Jaccard: Σ min / Σ max; 1.0 when both are empty.
pub fn sim_bag<T: Ord + Clone>(x1: &Multiset<T>, x2: &Multiset<T>) -> f64 {
    let union = x1.union(x2).cardinality();
    if union == 0 {
        1.0
    } else {
        x1.intersection(x2).cardinality() as f64 / union as f64
    }
}

/// `1 - DL(x1, x2) / max(|x1|, |x2|)`; 1.0 when both are empty.
pub fn sim_list<T: Eq + Hash>(x1: &[T], x2: &[T]) -> f64 {
    let longest = x1.len().max(x2.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - damerau_levenshtein(x1, x2) as f64 / longest as f64
}

/// Unrestricted Damerau-Levenshtein distance (insertions, deletions,
/// substitutions and transpositions of adjacent symbols, where transposed
/// symbols may be edited again afterwards).
///
/// Symbols are mapped to dense codes through an [`ActivityCodec`]-style
/// dictionary, so the alphabet is unbounded.
pub fn damerau_levenshtein<T: Eq + Hash>(a: &[T], b: &[T]) -> usize {
    let mut codes: HashMap<&T, usize> = HashMap::new();
    let ca: Vec<usize> = a
        .iter()
        .map(|x| {
            let n = codes.len();
            *codes.entry(x).or_insert(n)
        })
        .collect();
    let cb: Vec<usize> = b
        .iter()
        .map(|x| {
            let n = codes.len();
            *codes.entry(x).or_insert(n)
        })
        .collect();
    damerau_levenshtein_codes(&ca, &cb, codes.len())
}

fn damerau_levenshtein_codes(a: &[usize], b: &[usize], alphabet: usize) -> usize {
    let (n, m) = (a.len(), b.len());
    if n == 0 {
        return m;
    }
    if m == 0 {
        return n;
    }
    let max_dist = n + m;
    let width = m + 2;
    // d[(i + 1) * width + (j + 1)] holds the distance of a[..i] and b[..j].
    let mut d = vec![0usize; (n + 2) * width];
    d[0] = max_dist;
    for i in 0..=n {
        d[(i + 1) * width] = max_dist;
        d[(i + 1) * width + 1] = i;
    }
    for j in 0..=m {
        d[j + 1] = max_dist;
        d[width + j + 1] = j;
    }
    let mut last_row = vec![0usize; alphabet];
    for i in 1..=n {
        let mut last_match_col = 0;
        for j in 1..=m {
            let i1 = last_row[b[j - 1]];
            let j1 = last_match_col;
            let cost = if a[i - 1] == b[j - 1] {
                last_match_col = j;
                0
            } else {
                1
            };
            let sub = d[i * width + j] + cost;
            let ins = d[(i + 1) * width + j] + 1;
            let del = d[i * width + j + 1] + 1;
            let trans = d[i1 * width + j1] + (i - i1 - 1) + 1 + (j - j1 - 1);
            d[(i + 1) * width + j + 1] = sub.min(ins).min(del).min(trans);
        }
        last_row[a[i - 1]] = i;
    }
    d[(n + 1) * width + m + 1]
}

/// Bijective dictionary between activity names and integer symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityCodec {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl ActivityCodec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn encode(&mut self, name: &str) -> u32 {
        if let Some(&c) = self.index.get(name) {
            return c;
        }
        let code = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), code);
        code
    }

    pub fn encode_all<S: AsRef<str>>(&mut self, names: &[S]) -> Vec<u32> {
        names.iter().map(|n| self.encode(n.as_ref())).collect()
    }

    pub fn decode(&self, code: u32) -> Option<&str> {
        self.names.get(code as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

pub type Similarity = fn(&StateRepr, &StateRepr) -> f64;

fn state_sim_set(a: &StateRepr, b: &StateRepr) -> f64 {
    match (a, b) {
        (StateRepr::Set(x), StateRepr::Set(y)) => sim_set(x, y),
        _ => 0.0,
    }
}

fn state_sim_bag(a: &StateRepr, b: &StateRepr) -> f64 {
    match (a, b) {
        (StateRepr::Multiset(x), StateRepr::Multiset(y)) => sim_bag(x, y),
        _ => 0.0,
    }
}

fn state_sim_list(a: &StateRepr, b: &StateRepr) -> f64 {
    match (a, b) {
        (StateRepr::Sequence(x), StateRepr::Sequence(y)) => sim_list(x, y),
        _ => 0.0,
    }
}

/// The similarity matching an abstraction kind. Representations of a
/// different kind score 0.
pub fn similarity_for(kind: AbstractionKind) -> Similarity {
    match kind {
        AbstractionKind::Set => state_sim_set,
        AbstractionKind::Multiset => state_sim_bag,
        AbstractionKind::Sequence => state_sim_list,
    }
}

/// Looks up a similarity by abstraction name (`set`, `multiset`, `seq`).
pub fn similarity_named(name: &str) -> Result<Similarity, AbstractionParseError> {
    Ok(name.parse::<StateAbstraction>()?.similarity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn bag(items: &[(&str, usize)]) -> Multiset<String> {
        let mut m = Multiset::new();
        for (k, n) in items {
            m.insert_many(k.to_string(), *n);
        }
        m
    }

    /// Plain DP over all edit scripts including arbitrary transpositions,
    /// computed by breadth-first search on strings. Only for tiny inputs.
    fn dl_bfs(a: &[u8], b: &[u8]) -> usize {
        use std::collections::{HashSet, VecDeque};
        let alphabet: Vec<u8> = a.iter().chain(b).copied().collect::<BTreeSet<_>>().into_iter().collect();
        let limit = a.len().max(b.len());
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([(a.to_vec(), 0usize)]);
        seen.insert(a.to_vec());
        while let Some((s, d)) = queue.pop_front() {
            if s == b {
                return d;
            }
            if s.len() > limit + 1 {
                continue;
            }
            let mut next = Vec::new();
            for i in 0..=s.len() {
                for &c in &alphabet {
                    let mut t = s.clone();
                    t.insert(i, c);
                    next.push(t);
                }
            }
            for i in 0..s.len() {
                let mut t = s.clone();
                t.remove(i);
                next.push(t);
                for &c in &alphabet {
                    let mut t = s.clone();
                    t[i] = c;
                    next.push(t);
                }
                if i + 1 < s.len() {
                    let mut t = s.clone();
                    t.swap(i, i + 1);
                    next.push(t);
                }
            }
            for t in next {
                if seen.insert(t.clone()) {
                    queue.push_back((t, d + 1));
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn represent_kinds() {
        let labels = ["A", "B", "C"];
        assert_eq!(
            StateAbstraction::set().represent_labels(&labels),
            StateRepr::set(["A", "B", "C"])
        );
        let m = StateAbstraction::multiset().represent_labels(&["a", "b", "b"]);
        assert_eq!(m, StateRepr::Multiset(bag(&[("a", 1), ("b", 2)])));
        for abs in [
            StateAbstraction::set(),
            StateAbstraction::multiset(),
            StateAbstraction::sequence(),
        ] {
            assert!(abs.represent_labels::<&str>(&[]).is_empty());
        }
        let last = StateAbstraction::with_horizon(AbstractionKind::Set, 1);
        assert_eq!(last.represent_labels(&labels), StateRepr::set(["C"]));
        let seq2 = StateAbstraction::with_horizon(AbstractionKind::Sequence, 2);
        assert_eq!(seq2.represent_labels(&labels), StateRepr::sequence(["B", "C"]));
    }

    #[test]
    fn set_similarity_examples() {
        assert_eq!(sim_set(&set(&["A", "D"]), &set(&["A"])), 0.5);
        assert!((sim_set(&set(&["A", "D"]), &set(&["A", "B", "D"])) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sim_set(&set(&["A", "B"]), &set(&["A", "B"])), 1.0);
        assert_eq!(sim_set::<String>(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn bag_similarity_examples() {
        assert_eq!(sim_bag(&bag(&[("a", 1)]), &bag(&[("a", 1)])), 1.0);
        assert!((sim_bag(&bag(&[("a", 2), ("b", 1)]), &bag(&[("a", 1), ("b", 1)])) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sim_bag(&bag(&[("a", 1)]), &bag(&[("b", 1)])), 0.0);
    }

    #[test]
    fn list_similarity_examples() {
        assert!((sim_list(&["a", "b", "c"], &["a", "c", "b"]) - 2.0 / 3.0).abs() < 1e-15);
        assert!((sim_list(&["a", "c"], &["a", "b", "c"]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sim_list(&["x", "y"], &["x", "y"]), 1.0);
        assert_eq!(sim_list::<&str>(&[], &[]), 1.0);
    }

    #[test]
    fn unrestricted_transposition() {
        // "ca" -> "abc" is 2 with unrestricted DL (3 with optimal string alignment)
        assert_eq!(damerau_levenshtein(b"ca", b"abc"), 2);
        assert_eq!(damerau_levenshtein(b"", b"abc"), 3);
        assert_eq!(damerau_levenshtein(b"kitten", b"sitting"), 3);
    }

    #[test]
    fn dl_matches_bfs_oracle() {
        let words: Vec<Vec<u8>> = vec![
            b"".to_vec(),
            b"a".to_vec(),
            b"ab".to_vec(),
            b"ba".to_vec(),
            b"abc".to_vec(),
            b"ca".to_vec(),
            b"cab".to_vec(),
            b"bca".to_vec(),
            b"aab".to_vec(),
        ];
        for x in &words {
            for y in &words {
                assert_eq!(damerau_levenshtein(x, y), dl_bfs(x, y), "{x:?} {y:?}");
            }
        }
    }

    /// All sequences of length <= 4 over {a,b,c}: exhaustive triangle check
    /// on a sample of triples.
    #[test]
    fn triangle_inequality_exhaustive_small() {
        let mut all: Vec<Vec<u8>> = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..4 {
            let mut next = Vec::new();
            for s in &frontier {
                for c in [b'a', b'b', b'c'] {
                    let mut t: Vec<u8> = s.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            all.extend(next.iter().cloned());
            frontier = next;
        }
        let n = all.len();
        let mut dist = vec![0usize; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = damerau_levenshtein(&all[i], &all[j]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_eq!(dist[i * n + j], dist[j * n + i]);
                for k in (0..n).step_by(7) {
                    assert!(dist[i * n + j] <= dist[i * n + k] + dist[k * n + j]);
                }
            }
        }
    }

    #[test]
    fn codec_round_trip() {
        let mut codec = ActivityCodec::new();
        let names = ["Register", "Triage", "Register", "Close"];
        let codes = codec.encode_all(&names);
        assert_eq!(codes, [0, 1, 0, 2]);
        let back: Vec<&str> = codes.iter().map(|&c| codec.decode(c).unwrap()).collect();
        assert_eq!(back, names);
        assert_eq!(codec.len(), 3);
    }

    #[test]
    fn similarity_dispatch() {
        let a = StateRepr::set(["A", "D"]);
        let b = StateRepr::set(["A"]);
        assert_eq!(similarity_for(AbstractionKind::Set)(&a, &b), 0.5);
        assert_eq!(similarity_named("set").unwrap()(&a, &b), 0.5);
        assert_eq!(similarity_named("set").unwrap()(&a, &b), 0.5);
        let s1 = StateRepr::sequence(["a", "b", "c"]);
        let s2 = StateRepr::sequence(["a", "c", "b"]);
        assert!((similarity_named("seq").unwrap()(&s1, &s2) - 2.0 / 3.0).abs() < 1e-15);
        let m1 = StateAbstraction::multiset().represent_labels(&["a"]);
        assert_eq!(similarity_named("multiset").unwrap()(&m1, &m1), 1.0);
        assert!(similarity_named("petri").is_err());
    }

    #[test]
    fn parse_abstraction_names() {
        assert_eq!("set".parse(), Ok(StateAbstraction::set()));
        assert_eq!(
            "seq:3".parse(),
            Ok(StateAbstraction::with_horizon(AbstractionKind::Sequence, 3))
        );
        assert_eq!("multiset".parse(), Ok(StateAbstraction::multiset()));
        assert!("seq:0".parse::<StateAbstraction>().is_err());
        assert!("tree".parse::<StateAbstraction>().is_err());
        assert_eq!(StateAbstraction::with_horizon(AbstractionKind::Set, 1).to_string(), "set:1");
    }

    fn word() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..3, 0..=6)
    }

    proptest! {
        #[test]
        fn similarities_symmetric_bounded(a in word(), b in word()) {
            let la: Vec<String> = a.iter().map(|c| c.to_string()).collect();
            let lb: Vec<String> = b.iter().map(|c| c.to_string()).collect();
            for abs in [StateAbstraction::set(), StateAbstraction::multiset(), StateAbstraction::sequence()] {
                let x = abs.represent_labels(&la);
                let y = abs.represent_labels(&lb);
                let sim = abs.similarity();
                let s = sim(&x, &y);
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert_eq!(s, sim(&y, &x));
                prop_assert_eq!(s == 1.0, x == y);
            }
        }

        #[test]
        fn dl_triangle(a in word(), b in word(), c in word()) {
            let ab = damerau_levenshtein(&a, &b);
            let bc = damerau_levenshtein(&b, &c);
            let ac = damerau_levenshtein(&a, &c);
            prop_assert!(ac <= ab + bc);
        }
    }
}
