//! Countable preorders and their filters.
//!
//! A [`CountablePoset`] is an indexed preorder: validity and order are
//! decidable per index pair, and carriers may be infinite (rule-based), in
//! which case every operation takes an explicit cutoff and answers `Unknown`
//! rather than guessing beyond it. Filters are represented as decreasing
//! sequences ([`FilterStream`]) generating their upward closure; the set-based
//! view exists only for finite posets, where `enumerate_filters` is the
//! brute-force oracle everything else is tested against.

mod enumerate;
pub mod transform;

pub use enumerate::{
    enumerate_filters, enumerate_filters_bounded, filter_set, stream_for_set, uf_count_finite,
    FilterEnumeration,
};

use crate::Verdict3;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Default carrier bound for brute-force enumeration.
pub const DEFAULT_MAX_CARRIER: u64 = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PosetError {
    #[error("membership predicate does not describe a filter on the prefix: {0}")]
    NotAFilter(String),
    #[error("carrier has {0} elements, exceeding the brute-force bound {1}")]
    TooLarge(u64, u64),
    #[error("operation needs a finite poset")]
    NotFinite,
    #[error("sequence is not {0} at index {1}")]
    NotDecreasing(&'static str, usize),
}

#[derive(Clone)]
pub struct CountablePoset {
    inner: Arc<PosetInner>,
}

struct PosetInner {
    name: String,
    /// `Some(n)`: no index >= n is valid.
    size: Option<u64>,
    valid: Box<dyn Fn(u64) -> bool + Send + Sync>,
    leq: Box<dyn Fn(u64, u64) -> bool + Send + Sync>,
    label: Option<Box<dyn Fn(u64) -> String + Send + Sync>>,
}

impl fmt::Debug for CountablePoset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CountablePoset({})", self.inner.name)
    }
}

impl CountablePoset {
    pub fn from_rule(
        name: impl Into<String>,
        size: Option<u64>,
        valid: impl Fn(u64) -> bool + Send + Sync + 'static,
        leq: impl Fn(u64, u64) -> bool + Send + Sync + 'static,
    ) -> Self {
        CountablePoset {
            inner: Arc::new(PosetInner {
                name: name.into(),
                size,
                valid: Box::new(valid),
                leq: Box::new(leq),
                label: None,
            }),
        }
    }

    pub fn with_labels(
        self,
        label: impl Fn(u64) -> String + Send + Sync + 'static,
    ) -> Self {
        let (v, l) = (self.clone(), self.clone());
        CountablePoset {
            inner: Arc::new(PosetInner {
                name: self.inner.name.clone(),
                size: self.inner.size,
                valid: Box::new(move |i| (v.inner.valid)(i)),
                leq: Box::new(move |a, b| (l.inner.leq)(a, b)),
                label: Some(Box::new(label)),
            }),
        }
    }

    /// Finite poset from explicit `a <= b` pairs. Reflexivity is always
    /// added; `close` additionally takes the transitive closure (what the
    /// DSL's `order` items do). With `close = false` the raw relation is
    /// kept, so `check_poset` can surface violations.
    pub fn from_pairs(
        name: impl Into<String>,
        n: u64,
        pairs: &[(u64, u64)],
        close: bool,
    ) -> Self {
        let sz = n as usize;
        let mut m = vec![false; sz * sz];
        for i in 0..sz {
            m[i * sz + i] = true;
        }
        for &(a, b) in pairs {
            assert!(a < n && b < n, "pair ({a},{b}) out of carrier 0..{n}");
            m[a as usize * sz + b as usize] = true;
        }
        if close {
            // Floyd-Warshall style closure
            for k in 0..sz {
                for i in 0..sz {
                    if m[i * sz + k] {
                        for j in 0..sz {
                            if m[k * sz + j] {
                                m[i * sz + j] = true;
                            }
                        }
                    }
                }
            }
        }
        CountablePoset::from_rule(
            name,
            Some(n),
            move |i| i < n,
            move |a, b| m[a as usize * sz + b as usize],
        )
    }

    /// Descending chain `0 > 1 > ... > n-1` (index 0 is the top).
    pub fn chain(n: u64) -> Self {
        CountablePoset::from_rule(format!("chain{n}"), Some(n), move |i| i < n, |a, b| a >= b)
    }

    pub fn antichain(n: u64) -> Self {
        CountablePoset::from_rule(
            format!("antichain{n}"),
            Some(n),
            move |i| i < n,
            |a, b| a == b,
        )
    }

    pub fn empty() -> Self {
        CountablePoset::from_rule("empty", Some(0), |_| false, |_, _| false)
    }

    /// The infinite chain `c_0 > c_1 > ...` with descending labels.
    pub fn omega_chain() -> Self {
        CountablePoset::from_rule("omega-chain", None, |_| true, |a, b| a >= b)
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn finite_size(&self) -> Option<u64> {
        self.inner.size
    }

    pub fn is_valid(&self, i: u64) -> bool {
        if let Some(n) = self.inner.size {
            if i >= n {
                return false;
            }
        }
        (self.inner.valid)(i)
    }

    /// The preorder; only meaningful on valid indices.
    pub fn leq(&self, a: u64, b: u64) -> bool {
        (self.inner.leq)(a, b)
    }

    /// Strict part of the preorder.
    pub fn lt(&self, a: u64, b: u64) -> bool {
        self.leq(a, b) && !self.leq(b, a)
    }

    pub fn equiv(&self, a: u64, b: u64) -> bool {
        self.leq(a, b) && self.leq(b, a)
    }

    pub fn valid_below(&self, cutoff: u64) -> Vec<u64> {
        let hi = match self.inner.size {
            Some(n) => n.min(cutoff),
            None => cutoff,
        };
        (0..hi).filter(|&i| (self.inner.valid)(i)).collect()
    }

    pub fn label(&self, i: u64) -> String {
        match &self.inner.label {
            Some(f) => f(i),
            None => i.to_string(),
        }
    }
}

/// Report from `check_poset`: every reflexivity and transitivity violation
/// among valid indices below the cutoff.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PosetReport {
    pub reflexivity: Vec<u64>,
    pub transitivity: Vec<(u64, u64, u64)>,
}

impl PosetReport {
    pub fn is_preorder(&self) -> bool {
        self.reflexivity.is_empty() && self.transitivity.is_empty()
    }
}

pub fn check_poset(p: &CountablePoset, cutoff: u64) -> PosetReport {
    let idx = p.valid_below(cutoff);
    let mut report = PosetReport::default();
    for &a in &idx {
        if !p.leq(a, a) {
            report.reflexivity.push(a);
        }
    }
    for &a in &idx {
        for &b in &idx {
            if p.leq(a, b) {
                for &c in &idx {
                    if p.leq(b, c) && !p.leq(a, c) {
                        report.transitivity.push((a, b, c));
                    }
                }
            }
        }
    }
    report
}

/// `{p valid below cutoff : ∃q ∈ K, q <= p}`, ascending.
pub fn upward_closure(p: &CountablePoset, k: &[u64], cutoff: u64) -> Vec<u64> {
    p.valid_below(cutoff)
        .into_iter()
        .filter(|&x| k.iter().any(|&q| p.leq(q, x)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Decreasing,
    StrictlyDecreasing,
}

#[derive(Clone)]
enum StreamRep {
    /// `at(n) = v[min(n, len-1)]`; nonempty.
    EventuallyConstant(Arc<Vec<u64>>),
    /// Pure rule; values are memoized per index (walk-style rules recompute
    /// their whole prefix otherwise).
    Rule {
        f: Arc<dyn Fn(usize) -> u64 + Send + Sync>,
        cache: Arc<std::sync::Mutex<std::collections::HashMap<usize, u64>>>,
    },
}

/// A filter presented as a decreasing sequence; denotes `upcl({at(n)})`.
/// Nonempty by construction: a stream always has a first element.
#[derive(Clone)]
pub struct FilterStream {
    kind: FilterKind,
    rep: StreamRep,
}

impl FilterStream {
    pub fn from_vec(kind: FilterKind, stages: Vec<u64>) -> Self {
        assert!(!stages.is_empty(), "a filter stream needs a first element");
        FilterStream {
            kind,
            rep: StreamRep::EventuallyConstant(Arc::new(stages)),
        }
    }

    pub fn constant(p: u64) -> Self {
        FilterStream::from_vec(FilterKind::Decreasing, vec![p])
    }

    pub fn from_fn(kind: FilterKind, f: impl Fn(usize) -> u64 + Send + Sync + 'static) -> Self {
        FilterStream {
            kind,
            rep: StreamRep::Rule {
                f: Arc::new(f),
                cache: Arc::new(std::sync::Mutex::new(std::collections::HashMap::new())),
            },
        }
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn at(&self, n: usize) -> u64 {
        match &self.rep {
            StreamRep::EventuallyConstant(v) => v[n.min(v.len() - 1)],
            StreamRep::Rule { f, cache } => {
                if let Some(&v) = cache.lock().unwrap().get(&n) {
                    return v;
                }
                let v = f(n);
                cache.lock().unwrap().insert(n, v);
                v
            }
        }
    }

    /// `Some(i)` when the stream is known constant from index i on.
    pub fn constant_from(&self) -> Option<usize> {
        match &self.rep {
            StreamRep::EventuallyConstant(v) => Some(v.len() - 1),
            StreamRep::Rule { .. } => None,
        }
    }

    /// Distinct values among the first `depth` stages, in first-seen order.
    pub fn range_upto(&self, depth: usize) -> Vec<u64> {
        let mut out = Vec::new();
        for n in 0..depth {
            let v = self.at(n);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Verifies the decreasing (or strictly decreasing) invariant on a prefix.
    pub fn check(&self, p: &CountablePoset, depth: usize) -> Result<(), PosetError> {
        for n in 0..depth.saturating_sub(1) {
            let (a, b) = (self.at(n), self.at(n + 1));
            match self.kind {
                FilterKind::Decreasing => {
                    if !p.leq(b, a) {
                        return Err(PosetError::NotDecreasing("decreasing", n));
                    }
                }
                FilterKind::StrictlyDecreasing => {
                    if !p.lt(b, a) {
                        return Err(PosetError::NotDecreasing("strictly decreasing", n));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FilterStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FilterStream[")?;
        for n in 0..6 {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.at(n))?;
        }
        write!(f, ",..]")
    }
}

/// Greedy decreasing sequence generating the filter described by `member`
/// on the prefix below `cutoff`.
///
/// Descends strictly whenever the filter allows it (least such element
/// first), otherwise steps to the least element `<=` the current one; this
/// keeps the construction total on principal filters, where the strict
/// variant stalls.
pub fn filter_from_membership(
    p: &CountablePoset,
    member: &dyn Fn(u64) -> bool,
    cutoff: u64,
) -> Result<FilterStream, PosetError> {
    let prefix = p.valid_below(cutoff);
    let f: Vec<u64> = prefix.iter().copied().filter(|&x| member(x)).collect();
    if f.is_empty() {
        return Err(PosetError::NotAFilter("empty on the prefix".into()));
    }
    for &x in &f {
        for &q in &prefix {
            if p.leq(x, q) && !member(q) {
                return Err(PosetError::NotAFilter(format!(
                    "not upward closed: {x} <= {q} but {q} is missing"
                )));
            }
        }
    }
    for &x in &f {
        for &y in &f {
            if !f.iter().any(|&r| p.leq(r, x) && p.leq(r, y)) {
                return Err(PosetError::NotAFilter(format!(
                    "not directed: {x}, {y} have no lower bound inside"
                )));
            }
        }
    }
    let mut seq = vec![f[0]];
    loop {
        let cur = *seq.last().unwrap();
        let next = f
            .iter()
            .copied()
            .find(|&q| p.lt(q, cur))
            .or_else(|| f.iter().copied().find(|&q| p.leq(q, cur)))
            .unwrap_or(cur);
        if next == cur {
            break;
        }
        seq.push(next);
        if seq.len() > f.len() + 1 {
            break; // cannot happen for a genuine filter; guards rule bugs
        }
    }
    Ok(FilterStream::from_vec(FilterKind::Decreasing, seq))
}

/// Verdict of a bounded filter-equality check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterEq {
    /// Mutual domination holds for all indices below the depth.
    EqualAtDepth,
    /// Exhaustively refuted (finite posets only); carries a separating index.
    Distinct(u64),
    Unknown,
}

/// Bounded equality of the filters denoted by two streams: each of the first
/// `depth` stages of one must be dominated by some stage of the other within
/// a fixed scan window (4x depth — witnesses for deep stages of shrinking
/// streams live a few indices further along), both ways.
pub fn filters_equal(
    p: &CountablePoset,
    f: &FilterStream,
    g: &FilterStream,
    depth: usize,
) -> FilterEq {
    assert!(depth >= 1);
    let window = depth * 4;
    let dominated = |a: &FilterStream, b: &FilterStream| {
        (0..depth).all(|i| (0..window).any(|j| p.leq(b.at(j), a.at(i))))
    };
    if dominated(f, g) && dominated(g, f) {
        return FilterEq::EqualAtDepth;
    }
    if p.finite_size().is_some() {
        if let (Some(fs), Some(gs)) = (filter_set(p, f), filter_set(p, g)) {
            if let Some(&w) = fs.symmetric_difference(&gs).min() {
                return FilterEq::Distinct(w);
            }
        }
    }
    FilterEq::Unknown
}

/// Classification of a single filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterClass {
    pub unbounded: Verdict3,
    pub nonprincipal: Verdict3,
    pub maximal: Verdict3,
}

/// Classifies the filter denoted by a stream.
///
/// Exact on finite posets (via the denoted set). On rule-based carriers the
/// verdicts are sound with `Unknown` fallback: a strictly decreasing stream
/// is reported non-principal (and, by the convention used throughout the
/// handy-poset constructions, unbounded); an eventually constant stream
/// denotes the principal filter of its tail value.
pub fn classify_filter(p: &CountablePoset, f: &FilterStream, depth: usize) -> FilterClass {
    if p.finite_size().is_some() {
        if let Some(set) = filter_set(p, f) {
            return classify_set(p, &set);
        }
    }
    let nonprincipal = match (f.kind(), f.constant_from()) {
        (FilterKind::StrictlyDecreasing, _) => Verdict3::Yes,
        (_, Some(_)) => Verdict3::No,
        _ => Verdict3::Unknown,
    };
    let unbounded = match (f.kind(), f.constant_from()) {
        (FilterKind::StrictlyDecreasing, _) => Verdict3::Yes,
        (_, Some(i)) => {
            let tail = f.at(i);
            let window = p.valid_below(depth as u64);
            if window.iter().any(|&r| p.lt(r, tail)) {
                Verdict3::No
            } else {
                Verdict3::Unknown
            }
        }
        _ => Verdict3::Unknown,
    };
    FilterClass {
        unbounded,
        nonprincipal,
        maximal: Verdict3::Unknown,
    }
}

/// Exact classification of a filter given as a set, on a finite poset.
pub fn classify_set(p: &CountablePoset, set: &BTreeSet<u64>) -> FilterClass {
    let all = p.valid_below(p.finite_size().unwrap_or(0));
    let unbounded = !all
        .iter()
        .any(|&r| set.iter().all(|&x| p.lt(r, x)));
    let nonprincipal = set.iter().all(|&x| set.iter().any(|&y| p.lt(y, x)));
    let maximal = all.iter().all(|&r| {
        set.contains(&r)
            || set
                .iter()
                .any(|&x| !all.iter().any(|&t| p.leq(t, r) && p.leq(t, x)))
    });
    FilterClass {
        unbounded: Verdict3::from_bool(unbounded),
        nonprincipal: Verdict3::from_bool(nonprincipal),
        maximal: Verdict3::from_bool(maximal),
    }
}

/// Length of the longest strictly ascending chain above `p` using valid
/// indices below `cutoff`, capped at `cap` (so infinite heights terminate).
pub fn up_chain_len(poset: &CountablePoset, start: u64, cutoff: u64, cap: usize) -> usize {
    fn go(
        poset: &CountablePoset,
        x: u64,
        idx: &[u64],
        cap: usize,
        memo: &mut std::collections::HashMap<u64, usize>,
    ) -> usize {
        if let Some(&h) = memo.get(&x) {
            return h;
        }
        let mut best = 0;
        for &q in idx {
            if poset.lt(x, q) {
                let h = 1 + go(poset, q, idx, cap, memo);
                if h > best {
                    best = h;
                }
                if best >= cap {
                    best = cap;
                    break;
                }
            }
        }
        memo.insert(x, best);
        best
    }
    let idx = poset.valid_below(cutoff);
    let mut memo = std::collections::HashMap::new();
    go(poset, start, &idx, cap, &mut memo)
}
