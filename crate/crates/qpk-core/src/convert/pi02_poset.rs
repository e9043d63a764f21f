//! Π⁰₂ subspaces of `P(N)` as filter spaces, in both refinements: the
//! NP∩UF construction (provable without pruning) and the UF construction
//! with bounded extension search standing in for the paper-level pruning.

use super::ConvertError;
use crate::codes::{BasicOpen, Enumeration, MapCode, OpenCode, Pi02Code, Point, SpaceTag};
use crate::pairing::{pair, unpair};
use crate::pn::{ExplicitSubset, FinSet, PnPoint};
use crate::poset::{CountablePoset, FilterKind, FilterStream};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// A Π⁰₂ set over `P(N)` with explicit constituent basics:
/// `A_n` the complement of `⋃_k N_{closed[n][k]}`, `B_n = ⋃_h N_{open[n][h]}`.
#[derive(Clone, Debug, Default)]
pub struct ExplicitPi02 {
    pub closed_basics: Vec<Vec<FinSet>>,
    pub open_basics: Vec<Vec<FinSet>>,
}

impl ExplicitPi02 {
    pub fn whole() -> Self {
        ExplicitPi02::default()
    }

    pub fn new(pairs: Vec<(Vec<FinSet>, Vec<FinSet>)>) -> Self {
        let (closed, open) = pairs.into_iter().map(|(c, o)| (c, o)).unzip();
        ExplicitPi02 {
            closed_basics: closed,
            open_basics: open,
        }
    }

    pub fn len(&self) -> usize {
        self.closed_basics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closed_basics.is_empty()
    }

    /// Exact membership of an explicit subset in `⋂_{n<upto} (A_n ∪ B_n)`.
    pub fn member(&self, x: &ExplicitSubset, upto: usize) -> bool {
        (0..upto.min(self.len())).all(|n| self.member_one(x, n))
    }

    fn member_one(&self, x: &ExplicitSubset, n: usize) -> bool {
        let in_a = self.closed_basics[n]
            .iter()
            .all(|q| q.elems().iter().any(|&e| !x.contains(e)));
        in_a
            || self.open_basics[n]
                .iter()
                .any(|r| r.elems().iter().all(|&e| x.contains(e)))
    }

    /// Exact membership for finite sets.
    pub fn member_fin(&self, x: &FinSet, upto: usize) -> bool {
        self.member(&ExplicitSubset::finite(x.clone()), upto)
    }

    /// Largest index mentioned by any constituent basic.
    pub fn max_mentioned(&self) -> Option<u64> {
        self.closed_basics
            .iter()
            .chain(self.open_basics.iter())
            .flatten()
            .filter_map(|s| s.max_elem())
            .max()
    }

    pub fn to_code(&self) -> Pi02Code {
        let pairs: Vec<(OpenCode, OpenCode)> = self
            .open_basics
            .iter()
            .zip(&self.closed_basics)
            .map(|(open, closed)| {
                let b = OpenCode::new(
                    SpaceTag::Pn,
                    Enumeration::full(open.iter().cloned().map(BasicOpen::pn_set).collect()),
                );
                let co_a = OpenCode::new(
                    SpaceTag::Pn,
                    Enumeration::full(
                        closed.iter().cloned().map(BasicOpen::pn_set).collect(),
                    ),
                );
                (b, co_a)
            })
            .collect();
        Pi02Code::new(SpaceTag::Pn, Enumeration::explicit(pairs))
    }

    /// Recovers explicit basics from a code whose enumerations are complete
    /// at the given stage.
    pub fn from_code(code: &Pi02Code, stage: usize) -> Result<ExplicitPi02, ConvertError> {
        let (pairs, complete) = code.pairs.at(stage);
        if !complete {
            return Err(ConvertError::MissingConstituents);
        }
        let mut out = ExplicitPi02::default();
        for (b, co_a) in pairs {
            let (open, oc) = b.basics.at(stage);
            let (closed, cc) = co_a.basics.at(stage);
            if !oc || !cc {
                return Err(ConvertError::MissingConstituents);
            }
            let grab = |v: Vec<BasicOpen>| -> Result<Vec<FinSet>, ConvertError> {
                v.into_iter()
                    .map(|b| match b.desc {
                        crate::codes::Descriptor::PnSet(s) => Ok(s),
                        _ => Err(ConvertError::MissingConstituents),
                    })
                    .collect()
            };
            out.open_basics.push(grab(open)?);
            out.closed_basics.push(grab(closed)?);
        }
        Ok(out)
    }
}

/// Result of a Π⁰₂ → poset conversion.
#[derive(Clone)]
pub struct Pi02ToPoset {
    pub poset: CountablePoset,
    /// `f`: filters to points of the subspace.
    pub forward: MapCode,
    /// `g`: points to filters.
    pub backward: MapCode,
    /// Set when the bounded construction is exact for this input.
    pub exact: bool,
}

impl Pi02ToPoset {
    /// Point-level round trip g(f(F)) compared at depth.
    pub fn round_trip_filter(
        &self,
        stream: &FilterStream,
        depth: usize,
    ) -> Result<crate::poset::FilterEq, ConvertError> {
        let pt = Point::PosetFilter {
            poset: self.poset.clone(),
            stream: stream.clone(),
        };
        let img = self.forward.build_point(&pt, depth)?;
        let back = self.backward.build_point(&img, depth)?;
        match back {
            Point::PosetFilter { stream: s, .. } => {
                Ok(crate::poset::filters_equal(&self.poset, stream, &s, depth))
            }
            other => Err(ConvertError::Code(crate::codes::CodeError::BadPoint(
                format!("expected filter, got {other:?}"),
            ))),
        }
    }

    /// Point-level round trip f(g(x)) on an explicit subset: stage-compared.
    pub fn round_trip_point(
        &self,
        x: &ExplicitSubset,
        depth: usize,
    ) -> Result<bool, ConvertError> {
        let pt = Point::PnExplicit(x.clone());
        let fil = self.backward.build_point(&pt, depth)?;
        let img = self.forward.build_point(&fil, depth)?;
        match img {
            Point::Pn(p) => {
                // the reconstructed stages must agree with x below depth
                let got = p.stage(depth);
                Ok(got == x.restrict(depth as u64))
            }
            Point::PnExplicit(s) => Ok(s.restrict(depth as u64) == x.restrict(depth as u64)),
            other => Err(ConvertError::Code(crate::codes::CodeError::BadPoint(
                format!("expected P(N) point, got {other:?}"),
            ))),
        }
    }
}

fn triple_code(i: u64, l: u64, qmask: u64) -> u64 {
    pair(i, pair(l, qmask))
}

fn triple_decode(code: u64) -> (u64, u64, u64) {
    let (i, rest) = unpair(code);
    let (l, qmask) = unpair(rest);
    (i, l, qmask)
}

/// Validity of `(i, l, q)`: for every constituent pair `(n,k) < i`, if the
/// forbidden basic `q_{n,k}` is already inside `q` then some securing basic
/// `r_{n,h}` with `h < l` is inside `q` too.
fn npuf_valid(x: &ExplicitPi02, i: u64, l: u64, q: &FinSet) -> bool {
    for code in 0..i {
        let (n, k) = unpair(code);
        let (n, k) = (n as usize, k as usize);
        if n >= x.closed_basics.len() || k >= x.closed_basics[n].len() {
            continue;
        }
        if x.closed_basics[n][k].is_subset(q) {
            let secured = x.open_basics[n]
                .iter()
                .take(l as usize)
                .any(|r| r.is_subset(q));
            if !secured {
                return false;
            }
        }
    }
    true
}

/// `X ≅ NP(P') ∩ UF(P')` with
/// `P' = {(i,l,q) : ∀(n,k)<i ∃h<l (q_{n,k} ⊆ q → r_{n,h} ⊆ q)}` and
/// `(i,l,q) < (j,k,r) ⟺ l > k ∧ q ⊇ r ∧ i >= j`.
pub fn pi02_to_npuf(x: &ExplicitPi02) -> Pi02ToPoset {
    let xv = x.clone();
    let xo = x.clone();
    let poset = CountablePoset::from_rule(
        "pi02-npuf",
        None,
        move |code| {
            let (i, l, qmask) = triple_decode(code);
            npuf_valid(&xv, i, l, &FinSet::from_mask(qmask))
        },
        move |a, b| {
            if a == b {
                return true;
            }
            let ((ia, la, qa), (ib, lb, qb)) = (triple_decode(a), triple_decode(b));
            let _ = &xo;
            la > lb && (qb & !qa) == 0 && ia >= ib
        },
    );
    let poset = poset.with_labels(|code| {
        let (i, l, q) = triple_decode(code);
        format!("({i},{l},{})", FinSet::from_mask(q))
    });

    let forward = npuf_forward(&poset);
    let backward = npuf_backward(x, &poset);
    Pi02ToPoset {
        poset,
        forward,
        backward,
        exact: true,
    }
}

/// `f(F) = {j : ∃(i,l,q) ∈ F, j ∈ q}` as a staged point.
fn npuf_forward(poset: &CountablePoset) -> MapCode {
    let p_t = poset.clone();
    let triples = Enumeration::rule_open(move |stage| {
        let mut out = Vec::new();
        for code in p_t.valid_below(stage as u64) {
            let (_, _, qmask) = triple_decode(code);
            for &j in FinSet::from_mask(qmask).elems() {
                out.push((
                    0u64,
                    BasicOpen::pn_set(FinSet::singleton(j)),
                    BasicOpen::poset_elem(&p_t, code),
                ));
            }
        }
        out
    });
    MapCode::new(
        SpaceTag::Poset(poset.name().to_string()),
        SpaceTag::Pn,
        triples,
    )
    .with_builder(Arc::new(move |pt, _| {
        let stream = pt
            .as_filter()
            .ok_or_else(|| crate::codes::CodeError::BadPoint("expected a filter".into()))?
            .clone();
        Ok(Point::Pn(PnPoint::from_stage_fn(Arc::new(move |m| {
            let mut acc = FinSet::empty();
            for k in 0..=m {
                let (_, _, qmask) = triple_decode(stream.at(k));
                acc = acc.union(&FinSet::from_mask(qmask));
            }
            acc.restrict(m as u64)
        }))))
    }))
}

/// `g(G)`: the increasing-prefix filter `(i, l_i, q_i)` with
/// `G ∩ {0..n} ⊆ q_n ⊆ G`.
fn npuf_backward(x: &ExplicitPi02, poset: &CountablePoset) -> MapCode {
    let p_t = poset.clone();
    let triples = Enumeration::rule_open(move |stage| {
        p_t.valid_below(stage as u64)
            .into_iter()
            .map(|code| {
                let (_, _, qmask) = triple_decode(code);
                (
                    0u64,
                    BasicOpen::poset_elem(&p_t, code),
                    BasicOpen::pn_set(FinSet::from_mask(qmask)),
                )
            })
            .collect::<Vec<_>>()
    });
    let x = x.clone();
    let p_b = poset.clone();
    MapCode::new(
        SpaceTag::Pn,
        SpaceTag::Poset(poset.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, depth| {
        let point = pt
            .as_pn()
            .ok_or_else(|| crate::codes::CodeError::BadPoint("expected a P(N) point".into()))?;
        let x = x.clone();
        let window = depth.max(4) * 8;
        Ok(Point::PosetFilter {
            poset: p_b.clone(),
            stream: FilterStream::from_fn(FilterKind::StrictlyDecreasing, move |i| {
                // walk: step n picks (n, l_n, q_n) with q strictly growing
                // information and l_n minimal above the previous level
                let mut cur = {
                    let q0 = point.stage(0);
                    let mask = q0.to_mask().unwrap_or(0);
                    triple_code(0, 1, mask)
                };
                for n in 1..=i {
                    let (_, prev_l, prev_q) = triple_decode(cur);
                    let mut found = None;
                    'scan: for w in n..window {
                        let q = point.stage(w);
                        let Some(mask) = q.to_mask() else { continue };
                        if (prev_q & !mask) != 0 {
                            continue; // must extend the previous q
                        }
                        for l in (prev_l + 1)..(prev_l + 1 + window as u64) {
                            if npuf_valid(&x, n as u64, l, &q) {
                                found = Some(triple_code(n as u64, l, mask));
                                break 'scan;
                            }
                        }
                    }
                    match found {
                        Some(c) => cur = c,
                        None => break,
                    }
                }
                cur
            }),
        })
    }))
}

/// Π⁰₂ code recognizing `NP(P) ∩ UF(P)` inside `P(N)` via the filter axioms
/// plus, per element `n`, the open demand `∃m ∈ x (p_n ≰ p_m)`.
pub fn npuf_to_pi02(p: &CountablePoset, cutoff: u64) -> Pi02Code {
    let p = p.clone();
    Pi02Code::new(
        SpaceTag::Pn,
        Enumeration::rule_open(move |stage| {
            let idx = p.valid_below(cutoff);
            let mut pairs = Vec::new();
            // validity
            for l in 0..cutoff {
                if !p.is_valid(l) {
                    pairs.push((
                        OpenCode::empty(SpaceTag::Pn),
                        fixed(vec![FinSet::singleton(l)]),
                    ));
                }
            }
            // upward closure: p ∈ x ∧ p <= q → q ∈ x
            for &a in &idx {
                for &b in &idx {
                    if a != b && p.leq(a, b) {
                        pairs.push((
                            fixed(vec![FinSet::singleton(b)]),
                            fixed(vec![FinSet::singleton(a)]),
                        ));
                    }
                }
            }
            // directedness
            for &a in &idx {
                for &b in &idx {
                    if a > b {
                        continue;
                    }
                    let lows: Vec<FinSet> = idx
                        .iter()
                        .filter(|&&r| p.leq(r, a) && p.leq(r, b))
                        .map(|&r| FinSet::singleton(r))
                        .collect();
                    pairs.push((fixed(lows), fixed(vec![FinSet::new(vec![a, b])])));
                }
            }
            // escape clauses, one per element, staged
            for &n in idx.iter().take(stage) {
                let escapes: Vec<FinSet> = idx
                    .iter()
                    .filter(|&&m| !p.leq(n, m))
                    .map(|&m| FinSet::singleton(m))
                    .collect();
                pairs.push((fixed(escapes), whole()));
            }
            pairs
        }),
    )
}

fn fixed(sets: Vec<FinSet>) -> OpenCode {
    OpenCode::new(
        SpaceTag::Pn,
        Enumeration::full(sets.into_iter().map(BasicOpen::pn_set).collect()),
    )
}

fn whole() -> OpenCode {
    OpenCode::whole(SpaceTag::Pn)
}

/// The UF construction: carrier `(n, q)` with `q ∈ ⋂_{i<=n}(A_i ∪ B_i)`,
/// kept only when a depth-`path_search_depth` increasing extension chain
/// exists within the universe. The exactness flag is set when the
/// constituents mention only indices below the universe bound and the
/// search depth covers the constituent count — then bounded search decides
/// true membership in the pruned poset.
pub fn pi02_to_uf(
    x: &ExplicitPi02,
    path_search_depth: usize,
    universe_bound: u64,
) -> Pi02ToPoset {
    let exact = x.max_mentioned().is_none_or(|m| m < universe_bound)
        && path_search_depth >= x.len();
    let survives = survival_fn(x, path_search_depth, universe_bound);

    let xv = x.clone();
    let sv = survives.clone();
    let poset = CountablePoset::from_rule(
        "pi02-uf",
        None,
        move |code| {
            let (n, qmask) = unpair(code);
            let q = FinSet::from_mask(qmask);
            q.max_elem().is_none_or(|m| m < universe_bound)
                && xv.member_fin(&q, n as usize + 1)
                && sv(n, qmask)
        },
        move |a, b| {
            if a == b {
                return true;
            }
            let ((na, qa), (nb, qb)) = (unpair(a), unpair(b));
            na > nb && (qb & !qa) == 0
        },
    );
    let poset = poset.with_labels(|code| {
        let (n, q) = unpair(code);
        format!("({n},{})", FinSet::from_mask(q))
    });

    let forward = uf_forward(&poset);
    let backward = uf_backward(x, &poset, universe_bound);
    Pi02ToPoset {
        poset,
        forward,
        backward,
        exact,
    }
}

/// Memoized extension search. An increasing chain through the levels exists
/// from `q` iff some superset of `q` inside the universe lies in the
/// intersection truncated at the search depth (the chain may jump to it and
/// stay), so a single superset sweep decides survival.
fn survival_fn(
    x: &ExplicitPi02,
    depth: usize,
    universe_bound: u64,
) -> Arc<dyn Fn(u64, u64) -> bool + Send + Sync> {
    assert!(universe_bound <= 16, "superset sweep needs a small universe");
    let x = x.clone();
    let memo: Mutex<HashMap<u64, bool>> = Mutex::new(HashMap::new());
    Arc::new(move |_n, qmask| {
        if let Some(&v) = memo.lock().unwrap().get(&qmask) {
            return v;
        }
        let full = (1u64 << universe_bound) - 1;
        let rest = full & !qmask;
        // iterate all submasks of `rest`, including 0
        let mut sub = rest;
        let ok = loop {
            if x.member_fin(&FinSet::from_mask(qmask | sub), depth) {
                break true;
            }
            if sub == 0 {
                break false;
            }
            sub = (sub - 1) & rest;
        };
        memo.lock().unwrap().insert(qmask, ok);
        ok
    })
}

fn uf_forward(poset: &CountablePoset) -> MapCode {
    let p_t = poset.clone();
    let triples = Enumeration::rule_open(move |stage| {
        let mut out = Vec::new();
        for code in p_t.valid_below(stage as u64) {
            let (_, qmask) = unpair(code);
            for &j in FinSet::from_mask(qmask).elems() {
                out.push((
                    0u64,
                    BasicOpen::pn_set(FinSet::singleton(j)),
                    BasicOpen::poset_elem(&p_t, code),
                ));
            }
        }
        out
    });
    MapCode::new(
        SpaceTag::Poset(poset.name().to_string()),
        SpaceTag::Pn,
        triples,
    )
    .with_builder(Arc::new(move |pt, _| {
        let stream = pt
            .as_filter()
            .ok_or_else(|| crate::codes::CodeError::BadPoint("expected a filter".into()))?
            .clone();
        Ok(Point::Pn(PnPoint::from_stage_fn(Arc::new(move |m| {
            let mut acc = FinSet::empty();
            for k in 0..=m {
                let (_, qmask) = unpair(stream.at(k));
                acc = acc.union(&FinSet::from_mask(qmask));
            }
            acc.restrict(m as u64)
        }))))
    }))
}

fn uf_backward(x: &ExplicitPi02, poset: &CountablePoset, universe_bound: u64) -> MapCode {
    let p_t = poset.clone();
    let triples = Enumeration::rule_open(move |stage| {
        p_t.valid_below(stage as u64)
            .into_iter()
            .map(|code| {
                let (_, qmask) = unpair(code);
                (
                    0u64,
                    BasicOpen::poset_elem(&p_t, code),
                    BasicOpen::pn_set(FinSet::from_mask(qmask)),
                )
            })
            .collect::<Vec<_>>()
    });
    let _ = x;
    let p_b = poset.clone();
    MapCode::new(
        SpaceTag::Pn,
        SpaceTag::Poset(poset.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, depth| {
        let point = pt
            .as_pn()
            .ok_or_else(|| crate::codes::CodeError::BadPoint("expected a P(N) point".into()))?;
        let p2 = p_b.clone();
        let window = depth.max(4) * 8;
        Ok(Point::PosetFilter {
            poset: p_b.clone(),
            stream: FilterStream::from_fn(FilterKind::Decreasing, move |i| {
                let mut cur = None;
                for n in 0..=i {
                    // information below the universe bound at a wide stage
                    let q = point
                        .stage(window * (n + 1))
                        .restrict(universe_bound.saturating_sub(1));
                    let Some(mask) = q.to_mask() else { continue };
                    let cand = pair(n as u64, mask);
                    let ok = p2.is_valid(cand)
                        && match cur {
                            None => true,
                            Some(prev) => p2.leq(cand, prev),
                        };
                    if ok {
                        cur = Some(cand);
                    }
                }
                cur.unwrap_or_else(|| pair(0, 0))
            }),
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::Membership;
    use crate::poset::FilterEq;

    fn fs(v: &[u64]) -> FinSet {
        FinSet::new(v.to_vec())
    }

    #[test]
    fn whole_space_npuf_reconstructs_points() {
        let x = ExplicitPi02::whole();
        let conv = pi02_to_npuf(&x);
        for mask in [0b1u64, 0b101, 0b1110] {
            let s = ExplicitSubset::finite(FinSet::from_mask(mask));
            assert!(conv.round_trip_point(&s, 8).unwrap(), "mask {mask:#b}");
        }
    }

    #[test]
    fn zero_in_x_constraint() {
        // X = {x : 0 ∈ x}: single pair with A = ∅ (coA = whole) and
        // B = N_{{0}}
        let x = ExplicitPi02::new(vec![(vec![FinSet::empty()], vec![fs(&[0])])]);
        // explicit sweep over subsets of {0..5}
        for mask in 0..64u64 {
            let s = ExplicitSubset::finite(FinSet::from_mask(mask));
            assert_eq!(x.member(&s, 1), mask & 1 == 1);
        }
        let conv = pi02_to_npuf(&x);
        // points containing 0 reconstruct
        assert!(conv
            .round_trip_point(&ExplicitSubset::finite(fs(&[0, 3])), 8)
            .unwrap());
        // validity: a triple whose q already hit the forbidden basic (the
        // empty set is inside everything) must secure B
        assert!(!npuf_valid(&x, 1, 1, &fs(&[1])));
        assert!(npuf_valid(&x, 1, 1, &fs(&[0, 1])));
    }

    #[test]
    fn npuf_filter_round_trip() {
        let x = ExplicitPi02::new(vec![(vec![FinSet::empty()], vec![fs(&[0])])]);
        let conv = pi02_to_npuf(&x);
        // the canonical filter of the point {0,2}: build through backward
        let pt = Point::PnExplicit(ExplicitSubset::finite(fs(&[0, 2])));
        let fil = conv.backward.build_point(&pt, 8).unwrap();
        let stream = fil.as_filter().unwrap().clone();
        stream.check(&conv.poset, 6).unwrap();
        assert_eq!(
            conv.round_trip_filter(&stream, 6).unwrap(),
            FilterEq::EqualAtDepth
        );
    }

    #[test]
    fn npuf_to_pi02_finite_poset_is_empty() {
        // finite posets have no nonprincipal filters; every explicit subset
        // is eventually Out
        let p = CountablePoset::chain(3);
        let code = npuf_to_pi02(&p, 3);
        for mask in 1..8u64 {
            let x = Point::PnExplicit(ExplicitSubset::finite(FinSet::from_mask(mask)));
            assert_eq!(code.member(&x, 4).unwrap(), Membership::Out, "{mask:#b}");
        }
    }

    #[test]
    fn npuf_to_pi02_omega_chain_streams_survive() {
        let p = CountablePoset::omega_chain();
        let code = npuf_to_pi02(&p, 32);
        // the index set of a strictly descending filter keeps extending:
        // a genuine member is never refuted
        let x = Point::Pn(PnPoint::from_stage_fn(Arc::new(|i| {
            FinSet::new((0..=i as u64).collect())
        })));
        for stage in 1..8 {
            assert_ne!(code.member(&x, stage).unwrap(), Membership::Out);
        }
        // a principal filter (eventually constant) violates the escape
        // clause of its own minimum
        let y = Point::PnExplicit(ExplicitSubset::finite(fs(&[0, 1, 2])));
        assert_eq!(code.member(&y, 16).unwrap(), Membership::Out);
    }

    #[test]
    fn pi02_to_uf_whole_space() {
        let x = ExplicitPi02::whole();
        let conv = pi02_to_uf(&x, 6, 4);
        assert!(conv.exact);
        // every (n, q) with q over the universe survives
        for n in 0..3u64 {
            for mask in 0..16u64 {
                assert!(conv.poset.is_valid(pair(n, mask)), "({n},{mask:#b})");
            }
        }
        assert!(conv
            .round_trip_point(&ExplicitSubset::finite(fs(&[1, 3])), 6)
            .unwrap());
    }

    #[test]
    fn pi02_to_uf_matches_extension_oracle() {
        // X = {x : 0 ∈ x} over universe {0..3}
        let x = ExplicitPi02::new(vec![(vec![FinSet::empty()], vec![fs(&[0])])]);
        let conv = pi02_to_uf(&x, 8, 4);
        assert!(conv.exact);
        for n in 0..4u64 {
            for mask in 0..16u64 {
                let q = FinSet::from_mask(mask);
                // oracle: q ∈ ⋂_{i<=n} and some superset (within the
                // universe) lies in the full intersection
                let base = x.member_fin(&q, n as usize + 1);
                let ext = (mask..16).chain([mask]).any(|m2| {
                    (mask & !m2) == 0 && x.member_fin(&FinSet::from_mask(m2), x.len())
                });
                assert_eq!(
                    conv.poset.is_valid(pair(n, mask)),
                    base && ext,
                    "({n},{mask:#b})"
                );
            }
        }
    }

    #[test]
    fn pi02_to_uf_round_trips() {
        let x = ExplicitPi02::new(vec![(vec![FinSet::empty()], vec![fs(&[0])])]);
        let conv = pi02_to_uf(&x, 8, 4);
        for mask in [0b1u64, 0b1011, 0b111] {
            let s = ExplicitSubset::finite(FinSet::from_mask(mask));
            assert!(conv.round_trip_point(&s, 6).unwrap(), "{mask:#b}");
        }
    }
}
