//! The universal space `P(N)`: filters of finite sets under reverse inclusion,
//! its quasi-metric `d(F,G) = 2^{-min(F\G)}`, and points as increasing stage
//! approximations.
//!
//! Two evaluation regimes coexist and must not be confused. On
//! [`ExplicitSubset`] the metric is exact and every comparison is decidable;
//! this is the regime all oracles run in. On [`PnPoint`] only positive
//! information is available, so distance queries can be *certified from above*
//! but never refuted — `d_upper_at` reflects exactly that.

use crate::rat::{pow2, rat_zero, Rat};
use crate::Verdict3;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PnError {
    #[error("sequence is not effectively left-Cauchy at indices ({0}, {1})")]
    NotLeftCauchy(usize, usize),
    #[error("stage function violated point invariants: {0}")]
    BadStages(String),
}

/// A finite subset of N, stored strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FinSet(Vec<u64>);

impl FinSet {
    pub fn new(mut elems: Vec<u64>) -> Self {
        elems.sort_unstable();
        elems.dedup();
        FinSet(elems)
    }

    pub fn empty() -> Self {
        FinSet(Vec::new())
    }

    pub fn singleton(n: u64) -> Self {
        FinSet(vec![n])
    }

    pub fn elems(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.0.binary_search(&n).is_ok()
    }

    pub fn is_subset(&self, other: &FinSet) -> bool {
        self.0.iter().all(|n| other.contains(*n))
    }

    pub fn union(&self, other: &FinSet) -> FinSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FinSet::new(v)
    }

    /// `self ∩ {0..=bound}`.
    pub fn restrict(&self, bound: u64) -> FinSet {
        FinSet(self.0.iter().copied().filter(|n| *n <= bound).collect())
    }

    pub fn max_elem(&self) -> Option<u64> {
        self.0.last().copied()
    }

    /// Least element of `self \ other`, if any.
    pub fn least_not_in(&self, other: &FinSet) -> Option<u64> {
        self.0.iter().copied().find(|n| !other.contains(*n))
    }

    /// Encodes a finite set as a bitmask (all elements must be < 64).
    pub fn to_mask(&self) -> Option<u64> {
        let mut m = 0u64;
        for &n in &self.0 {
            if n >= 64 {
                return None;
            }
            m |= 1 << n;
        }
        Some(m)
    }

    pub fn from_mask(mut mask: u64) -> FinSet {
        let mut v = Vec::new();
        let mut bit = 0;
        while mask != 0 {
            if mask & 1 == 1 {
                v.push(bit);
            }
            mask >>= 1;
            bit += 1;
        }
        FinSet(v)
    }

    /// Parses `{0,2,5}` (whitespace tolerated) or `{}`.
    pub fn parse(s: &str) -> Option<FinSet> {
        let s = s.trim();
        let inner = s.strip_prefix('{')?.strip_suffix('}')?.trim();
        if inner.is_empty() {
            return Some(FinSet::empty());
        }
        let mut v = Vec::new();
        for part in inner.split(',') {
            v.push(part.trim().parse::<u64>().ok()?);
        }
        Some(FinSet::new(v))
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

/// Reverse inclusion: answers the `t >= s` query, i.e. `t ⊆ s`.
pub fn pfin_order(s: &FinSet, t: &FinSet) -> bool {
    t.is_subset(s)
}

/// A subset of N with decidable membership: either finite, or a total rule
/// that is eventually periodic (`member(n) = member(n + period)` for
/// `n >= bound`). The periodicity window is what makes `⊆` and the exact
/// quasi-metric decidable.
#[derive(Clone)]
pub enum ExplicitSubset {
    Finite(FinSet),
    Rule {
        name: String,
        member: Arc<dyn Fn(u64) -> bool + Send + Sync>,
        bound: u64,
        period: u64,
    },
}

impl ExplicitSubset {
    pub fn finite(s: FinSet) -> Self {
        ExplicitSubset::Finite(s)
    }

    pub fn evens() -> Self {
        ExplicitSubset::Rule {
            name: "evens".into(),
            member: Arc::new(|n| n % 2 == 0),
            bound: 0,
            period: 2,
        }
    }

    /// `{a, a+1, ..., b}` (empty when a > b).
    pub fn range(a: u64, b: u64) -> Self {
        ExplicitSubset::Finite(FinSet((a..=b).collect()))
    }

    pub fn contains(&self, n: u64) -> bool {
        match self {
            ExplicitSubset::Finite(s) => s.contains(n),
            ExplicitSubset::Rule { member, .. } => member(n),
        }
    }

    fn window(&self, other: &ExplicitSubset) -> u64 {
        fn parts(s: &ExplicitSubset) -> (u64, u64) {
            match s {
                ExplicitSubset::Finite(f) => (f.max_elem().map_or(0, |m| m + 1), 1),
                ExplicitSubset::Rule { bound, period, .. } => (*bound, (*period).max(1)),
            }
        }
        let (b1, p1) = parts(self);
        let (b2, p2) = parts(other);
        let lcm = num_integer::lcm(p1, p2);
        b1.max(b2) + lcm
    }

    /// Least element of `self \ other`, deciding emptiness via the
    /// periodicity window.
    pub fn least_not_in(&self, other: &ExplicitSubset) -> Option<u64> {
        (0..self.window(other)).find(|&n| self.contains(n) && !other.contains(n))
    }

    pub fn is_subset(&self, other: &ExplicitSubset) -> bool {
        self.least_not_in(other).is_none()
    }

    pub fn restrict(&self, bound: u64) -> FinSet {
        FinSet((0..=bound).filter(|&n| self.contains(n)).collect())
    }
}

impl fmt::Debug for ExplicitSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExplicitSubset::Finite(s) => write!(f, "finite {s}"),
            ExplicitSubset::Rule { name, .. } => write!(f, "rule {name}"),
        }
    }
}

/// Exact quasi-metric on explicit subsets: `2^{-j}` for the least
/// `j ∈ F \ G`, and `0` when `F ⊆ G`.
pub fn d_exact(f: &ExplicitSubset, g: &ExplicitSubset) -> Rat {
    match f.least_not_in(g) {
        Some(j) => pow2(-(j as i64)),
        None => rat_zero(),
    }
}

/// Exact quasi-metric on finite sets (the common case in sweeps).
pub fn d_exact_fin(f: &FinSet, g: &FinSet) -> Rat {
    match f.least_not_in(g) {
        Some(j) => pow2(-(j as i64)),
        None => rat_zero(),
    }
}

#[derive(Clone)]
enum PointStages {
    /// `q_i = S ∩ {0..i}`; information below every stage is complete.
    Explicit(ExplicitSubset),
    /// Arbitrary stage rule; positive information only. Stages are memoized
    /// (rules built from walks recompute their prefix otherwise).
    Rule {
        f: Arc<dyn Fn(usize) -> FinSet + Send + Sync>,
        cache: Arc<std::sync::Mutex<std::collections::HashMap<usize, FinSet>>>,
    },
}

/// A point of `P(N)`: stages `q_i ⊆ {0..i}`, increasing, denoting `⋃ q_i`.
///
/// `low_complete = Some(s)` records that from stage `s` on the stages are
/// exact truncations (`q_i = x ∩ {0..i}`), which is what allows any negative
/// or distance-upper-bound conclusion about the point.
#[derive(Clone)]
pub struct PnPoint {
    stages: PointStages,
    low_complete: Option<usize>,
}

impl PnPoint {
    pub fn from_explicit(s: &ExplicitSubset) -> PnPoint {
        PnPoint {
            stages: PointStages::Explicit(s.clone()),
            low_complete: Some(0),
        }
    }

    /// Builds from a raw stage rule. The invariants are the caller's
    /// responsibility; `check_invariants` verifies a prefix.
    pub fn from_stage_fn(f: Arc<dyn Fn(usize) -> FinSet + Send + Sync>) -> PnPoint {
        PnPoint {
            stages: PointStages::Rule {
                f,
                cache: Arc::new(std::sync::Mutex::new(std::collections::HashMap::new())),
            },
            low_complete: None,
        }
    }

    pub fn stage(&self, i: usize) -> FinSet {
        match &self.stages {
            PointStages::Explicit(s) => s.restrict(i as u64),
            PointStages::Rule { f, cache } => {
                if let Some(v) = cache.lock().unwrap().get(&i) {
                    return v.clone();
                }
                let v = f(i);
                cache.lock().unwrap().insert(i, v.clone());
                v
            }
        }
    }

    /// The stage-`i` approximation `q_i` (the denoted set is `⋃_i q_i`).
    pub fn union_at(&self, i: usize) -> FinSet {
        self.stage(i)
    }

    pub fn low_complete(&self) -> Option<usize> {
        self.low_complete
    }

    fn with_low_complete(mut self, s: Option<usize>) -> Self {
        self.low_complete = s;
        self
    }

    /// Checks `q_i ⊆ {0..i}` and `q_i ⊆ q_j` for `i <= j < depth`.
    pub fn check_invariants(&self, depth: usize) -> Result<(), PnError> {
        let mut prev = FinSet::empty();
        for i in 0..depth {
            let q = self.stage(i);
            if let Some(m) = q.max_elem() {
                if m > i as u64 {
                    return Err(PnError::BadStages(format!(
                        "stage {i} contains {m} > {i}"
                    )));
                }
            }
            if !prev.is_subset(&q) {
                return Err(PnError::BadStages(format!(
                    "stage {i} does not extend stage {}",
                    i.saturating_sub(1)
                )));
            }
            prev = q;
        }
        Ok(())
    }

    /// Membership of `n` in the denoted set, from stage information alone.
    pub fn member_at(&self, n: u64, stage: usize) -> Verdict3 {
        let q = self.stage(stage);
        if q.contains(n) {
            return Verdict3::Yes;
        }
        match self.low_complete {
            Some(s) if stage >= s && (n as usize) <= stage => Verdict3::No,
            _ => Verdict3::Unknown,
        }
    }
}

impl fmt::Debug for PnPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PnPoint[q8={}]", self.stage(8))
    }
}

/// A sequence of finite sets, the input shape of `pn_limit`. Eventually
/// constant sequences keep the limit computation exact.
#[derive(Clone)]
pub enum FinSetSeq {
    /// `at(n) = v[min(n, len-1)]`; nonempty.
    EventuallyConstant(Arc<Vec<FinSet>>),
    Rule(Arc<dyn Fn(usize) -> FinSet + Send + Sync>),
}

impl FinSetSeq {
    pub fn from_vec(v: Vec<FinSet>) -> FinSetSeq {
        assert!(!v.is_empty(), "sequence needs at least one term");
        FinSetSeq::EventuallyConstant(Arc::new(v))
    }

    pub fn constant(s: FinSet) -> FinSetSeq {
        FinSetSeq::from_vec(vec![s])
    }

    pub fn at(&self, n: usize) -> FinSet {
        match self {
            FinSetSeq::EventuallyConstant(v) => v[n.min(v.len() - 1)].clone(),
            FinSetSeq::Rule(f) => f(n),
        }
    }

    pub fn constant_from(&self) -> Option<usize> {
        match self {
            FinSetSeq::EventuallyConstant(v) => Some(v.len() - 1),
            FinSetSeq::Rule(_) => None,
        }
    }

    /// Checks `d(a_n, a_m) < 2^{-n}` for `0 < n < m <= depth`, i.e.
    /// `a_n ∩ {0..n-1} ⊆ a_m`.
    pub fn check_left_cauchy(&self, depth: usize) -> Result<(), PnError> {
        for n in 1..depth {
            let an = self.at(n);
            let low = an.restrict(n as u64 - 1);
            for m in (n + 1)..=depth {
                if !low.is_subset(&self.at(m)) {
                    return Err(PnError::NotLeftCauchy(n, m));
                }
            }
        }
        Ok(())
    }
}

/// Smyth limit in `P(N)`: stage `q_i := a_{i+1} ∩ {0..i}`.
///
/// Left-Cauchyness gives `a_{i+1} ∩ {0..i} ⊆ a_{i+2}`, so the stages
/// increase; the result satisfies `d(a_{n+1}, limit) < 2^{-n}` for all n.
pub fn pn_limit(seq: &FinSetSeq, check_depth: usize) -> Result<PnPoint, PnError> {
    seq.check_left_cauchy(check_depth)?;
    let low_complete = seq.constant_from();
    let s = seq.clone();
    let point = PnPoint::from_stage_fn(Arc::new(move |i| s.at(i + 1).restrict(i as u64)));
    Ok(point.with_low_complete(low_complete))
}

/// Stage-`i` view of `S` as a point: `q_i = S ∩ {0..i}`.
pub fn point_from_explicit(s: &ExplicitSubset) -> PnPoint {
    PnPoint::from_explicit(s)
}

/// Result of a certified upper-bound query on the point metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpperBound {
    /// `d(x, y) <= 2^{-n}` holds and will keep holding.
    Certified,
    Unknown,
}

/// Certifies `d(x,y) <= 2^{-n}` from stage information.
///
/// Needs `x`'s information below `n` to be complete (otherwise a later stage
/// of `x` could reveal a small witness and break the bound): positive
/// information about `y` can only help, never hurt.
pub fn d_upper_at(x: &PnPoint, y: &PnPoint, n: usize, stage: usize) -> UpperBound {
    assert!(stage >= n, "stage must be at least n");
    if n == 0 {
        return UpperBound::Certified; // d <= 1 always
    }
    let Some(s0) = x.low_complete() else {
        return UpperBound::Unknown;
    };
    let xi = x.stage(s0.max(n - 1)).restrict(n as u64 - 1);
    if xi.is_subset(&y.stage(stage)) {
        UpperBound::Certified
    } else {
        UpperBound::Unknown
    }
}

/// Exact distance from a finite set to the set denoted by a point whose
/// low information is complete. Used by the limit-bound checks.
pub fn d_fin_to_point_exact(a: &FinSet, x: &PnPoint) -> Option<Rat> {
    let s0 = x.low_complete()?;
    let horizon = s0.max(a.max_elem().map_or(0, |m| m as usize));
    let info = x.stage(horizon);
    Some(match a.least_not_in(&info) {
        Some(j) => pow2(-(j as i64)),
        None => rat_zero(),
    })
}
