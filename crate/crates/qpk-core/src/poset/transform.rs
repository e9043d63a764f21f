//! Poset-to-poset constructions: handyfication, the NP/UF transforms,
//! bounded pruning, and products. Each construction returns the new poset
//! together with map codes whose builders realize the point-level transform
//! on filter streams.
//!
//! Pair-built posets index elements by Cantor codes; the prefix visible below
//! a cutoff is what all desk-scale checks run on.

use super::{upward_closure, CountablePoset, FilterKind, FilterStream};
use crate::codes::{BasicOpen, CodeError, Enumeration, MapCode, Point, SpaceTag};
use crate::pairing::{decode_tuple, encode_tuple, pair, pair_cutoff, unpair};
use std::collections::BTreeSet;
use std::sync::Arc;

/// Window multiplier for bounded scans inside stream transforms.
const SCAN_FACTOR: usize = 8;

/// An isomorphism between two filter spaces, carried by a pair of map codes
/// with constructive point transforms.
#[derive(Clone)]
pub struct PosetIso {
    pub source: CountablePoset,
    pub target: CountablePoset,
    pub forward: MapCode,
    pub backward: MapCode,
}

impl PosetIso {
    pub fn forward_stream(
        &self,
        stream: &FilterStream,
        depth: usize,
    ) -> Result<FilterStream, CodeError> {
        let pt = Point::PosetFilter {
            poset: self.source.clone(),
            stream: stream.clone(),
        };
        match self.forward.build_point(&pt, depth)? {
            Point::PosetFilter { stream, .. } => Ok(stream),
            other => Err(CodeError::BadPoint(format!(
                "forward image is not a filter point: {other:?}"
            ))),
        }
    }

    pub fn backward_stream(
        &self,
        stream: &FilterStream,
        depth: usize,
    ) -> Result<FilterStream, CodeError> {
        let pt = Point::PosetFilter {
            poset: self.target.clone(),
            stream: stream.clone(),
        };
        match self.backward.build_point(&pt, depth)? {
            Point::PosetFilter { stream, .. } => Ok(stream),
            other => Err(CodeError::BadPoint(format!(
                "backward image is not a filter point: {other:?}"
            ))),
        }
    }

    /// Round trip source→target→source compared at the given depth.
    pub fn round_trip(
        &self,
        stream: &FilterStream,
        depth: usize,
    ) -> Result<super::FilterEq, CodeError> {
        let fwd = self.forward_stream(stream, depth)?;
        let back = self.backward_stream(&fwd, depth)?;
        Ok(super::filters_equal(&self.source, stream, &back, depth))
    }
}

/// Structural handy check: elements below `cutoff` missing a strict
/// predecessor among valid indices below `witness_cutoff` (the prefix
/// extended by one index block).
pub fn handy_check(p: &CountablePoset, cutoff: u64, witness_cutoff: u64) -> Vec<u64> {
    let witnesses = p.valid_below(witness_cutoff);
    p.valid_below(cutoff)
        .into_iter()
        .filter(|&e| !witnesses.iter().any(|&q| p.lt(q, e)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HandyKind {
    /// `UF(P) ≅ UF(P')`.
    UnboundedFilters,
    /// `F(P) ≅ UF(P')`.
    AllFilters,
}

/// A handyfied poset: pair-coded carrier `(p, n)` with the level order
/// `(p,n) < (q,m) ⟺ p ≤ q ∧ n > m`.
#[derive(Clone)]
pub struct Handyfied {
    pub poset: CountablePoset,
    pub iso: PosetIso,
    pub kind: HandyKind,
}

impl Handyfied {
    /// Codes of the valid pairs at a level, first components below `p_bound`.
    pub fn level_elements(&self, level: u64, p_bound: u64) -> Vec<u64> {
        (0..p_bound)
            .map(|p| pair(p, level))
            .filter(|&c| self.poset.is_valid(c))
            .collect()
    }

    /// Number of distinct filters visible at a level: upward closures of the
    /// level elements within the prefix, compared below the level itself so
    /// that equivalent tips (preorder cycles) collapse. For the
    /// unbounded-filter transform this equals `|UF(P)|`; for the all-filters
    /// transform, `|F(P)|`.
    pub fn image_filter_count(&self, level: u64, p_bound: u64) -> usize {
        let cutoff = pair_cutoff(p_bound.max(level));
        let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
        for e in self.level_elements(level, p_bound) {
            let ups: Vec<u64> = upward_closure(&self.poset, &[e], cutoff)
                .into_iter()
                .filter(|&c| unpair(c).1 < level)
                .collect();
            seen.insert(ups);
        }
        seen.len()
    }

    /// Projects a set of pair codes back to the source filter it denotes:
    /// `{p : (p, n) ∈ x for some n}`.
    pub fn source_set(&self, x: &BTreeSet<u64>) -> BTreeSet<u64> {
        x.iter().map(|&code| unpair(code).0).collect()
    }
}

fn poset_point(poset: &CountablePoset, stream: FilterStream) -> Point {
    Point::PosetFilter {
        poset: poset.clone(),
        stream,
    }
}

fn expect_filter(p: &Point) -> Result<(CountablePoset, FilterStream), CodeError> {
    match p {
        Point::PosetFilter { poset, stream } => Ok((poset.clone(), stream.clone())),
        other => Err(CodeError::BadPoint(format!("expected a filter point: {other:?}"))),
    }
}

/// Largest level `n <= cap` such that `(x, n)` is valid in the
/// unbounded-filter handyfication: no strict predecessor of `x` has an
/// index below `n`.
fn uf_level_capacity(p: &CountablePoset, x: u64, cap: u64) -> u64 {
    for q in 0..cap {
        if p.is_valid(q) && p.lt(q, x) {
            return q;
        }
    }
    cap
}

/// Handyfication preserving unbounded filters:
/// `P' = {(p,n) : ∀q<n (q ≮ p)}`, `(p,n) < (q,m) ⟺ p ≤ q ∧ n > m`.
pub fn handyfy_uf(p: &CountablePoset) -> Handyfied {
    let name = format!("{}-handy", p.name());
    let (pv, pl) = (p.clone(), p.clone());
    let size = match p.finite_size() {
        Some(0) => Some(0),
        _ => None,
    };
    let target = CountablePoset::from_rule(
        name.clone(),
        size,
        move |code| {
            let (x, n) = unpair(code);
            pv.is_valid(x) && uf_level_capacity(&pv, x, n) >= n
        },
        move |a, b| {
            if a == b {
                return true;
            }
            let ((xa, na), (xb, nb)) = (unpair(a), unpair(b));
            pl.leq(xa, xb) && na > nb
        },
    );
    let lbl = p.clone();
    let target = target.with_labels(move |code| {
        let (x, n) = unpair(code);
        format!("({},{})", lbl.label(x), n)
    });

    let forward = handy_forward_code(p, &target, HandyKind::UnboundedFilters);
    let backward = handy_backward_code(p, &target);
    Handyfied {
        poset: target.clone(),
        iso: PosetIso {
            source: p.clone(),
            target,
            forward,
            backward,
        },
        kind: HandyKind::UnboundedFilters,
    }
}

/// Handyfication turning every filter unbounded: carrier `{(p,n) : p <= n}`.
pub fn handyfy_allfilters(p: &CountablePoset) -> Handyfied {
    let name = format!("{}-handy-all", p.name());
    let (pv, pl) = (p.clone(), p.clone());
    let size = match p.finite_size() {
        Some(0) => Some(0),
        _ => None,
    };
    let target = CountablePoset::from_rule(
        name.clone(),
        size,
        move |code| {
            let (x, n) = unpair(code);
            pv.is_valid(x) && x <= n
        },
        move |a, b| {
            if a == b {
                return true;
            }
            let ((xa, na), (xb, nb)) = (unpair(a), unpair(b));
            pl.leq(xa, xb) && na > nb
        },
    );
    let lbl = p.clone();
    let target = target.with_labels(move |code| {
        let (x, n) = unpair(code);
        format!("({},{})", lbl.label(x), n)
    });

    let forward = handy_forward_code(p, &target, HandyKind::AllFilters);
    let backward = handy_backward_code(p, &target);
    Handyfied {
        poset: target.clone(),
        iso: PosetIso {
            source: p.clone(),
            target,
            forward,
            backward,
        },
        kind: HandyKind::AllFilters,
    }
}

/// Forward code `Φ = {(0, (p,n), p)}` with the greedy level-climbing stream
/// transform.
fn handy_forward_code(
    source: &CountablePoset,
    target: &CountablePoset,
    kind: HandyKind,
) -> MapCode {
    let (src_t, tgt_t) = (source.clone(), target.clone());
    let triples = Enumeration::rule_open(move |stage| {
        let mut out = Vec::new();
        for code in tgt_t.valid_below(stage as u64) {
            let (x, _) = unpair(code);
            out.push((
                0u64,
                BasicOpen::poset_elem(&tgt_t, code),
                BasicOpen::poset_elem(&src_t, x),
            ));
        }
        out
    });
    let (src_b, tgt_b) = (source.clone(), target.clone());
    MapCode::new(
        SpaceTag::Poset(source.name().to_string()),
        SpaceTag::Poset(target.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, depth| {
        let (_, stream) = expect_filter(pt)?;
        let src = src_b.clone();
        let window = depth.max(4) * SCAN_FACTOR;
        let out = match kind {
            HandyKind::UnboundedFilters => {
                let stream2 = stream.clone();
                FilterStream::from_fn(FilterKind::Decreasing, move |i| {
                    // walk: climb one level per step, descending to stream
                    // values that still have validity capacity
                    let mut cur_v = stream2.at(0);
                    let mut cur_n = 0u64;
                    let mut cursor = 0usize;
                    for _ in 1..=i {
                        let next_n = cur_n + 1;
                        let mut found = None;
                        for j in cursor..(cursor + window) {
                            let v = stream2.at(j);
                            if src.leq(v, cur_v) && uf_level_capacity(&src, v, next_n) >= next_n {
                                found = Some((j, v));
                                break;
                            }
                        }
                        match found {
                            Some((j, v)) => {
                                cursor = j;
                                cur_v = v;
                                cur_n = next_n;
                            }
                            None => break,
                        }
                    }
                    pair(cur_v, cur_n)
                })
            }
            HandyKind::AllFilters => {
                let stream2 = stream.clone();
                FilterStream::from_fn(FilterKind::Decreasing, move |i| {
                    let mut cur_v = stream2.at(0);
                    let mut cur_n = cur_v;
                    for step in 1..=i {
                        let v = stream2.at(step);
                        cur_v = v;
                        cur_n = (cur_n + 1).max(v);
                    }
                    pair(cur_v, cur_n)
                })
            }
        };
        Ok(poset_point(&tgt_b, out))
    }))
}

/// Backward code `Ψ = {(0, p, (p,n))}`: project first components.
fn handy_backward_code(source: &CountablePoset, target: &CountablePoset) -> MapCode {
    let (src_t, tgt_t) = (source.clone(), target.clone());
    let triples = Enumeration::rule_open(move |stage| {
        let mut out = Vec::new();
        for code in tgt_t.valid_below(stage as u64) {
            let (x, _) = unpair(code);
            out.push((
                0u64,
                BasicOpen::poset_elem(&src_t, x),
                BasicOpen::poset_elem(&tgt_t, code),
            ));
        }
        out
    });
    let src_b = source.clone();
    MapCode::new(
        SpaceTag::Poset(target.name().to_string()),
        SpaceTag::Poset(source.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, _depth| {
        let (_, stream) = expect_filter(pt)?;
        let s = stream.clone();
        Ok(poset_point(
            &src_b,
            FilterStream::from_fn(FilterKind::Decreasing, move |i| unpair(s.at(i)).0),
        ))
    }))
}

/// `NP(P) ≅ NP(P') ∩ UF(P')`: same carrier, order
/// `p' > q' ⟺ p >_P q ∧ p < q` (indices increase as elements descend).
pub fn np_to_npuf(p: &CountablePoset) -> PosetIso {
    let name = format!("{}-npuf", p.name());
    let (pv, pl) = (p.clone(), p.clone());
    let target = CountablePoset::from_rule(
        name,
        p.finite_size(),
        move |i| pv.is_valid(i),
        move |a, b| a == b || (pl.lt(a, b) && b < a),
    );
    let (src_t, tgt_t) = (p.clone(), target.clone());
    let triples = Enumeration::rule_open(move |stage| {
        tgt_t
            .valid_below(stage as u64)
            .into_iter()
            .map(|i| {
                (
                    0u64,
                    BasicOpen::poset_elem(&tgt_t, i),
                    BasicOpen::poset_elem(&src_t, i),
                )
            })
            .collect::<Vec<_>>()
    });
    let tgt_b = target.clone();
    let src2 = p.clone();
    let forward = MapCode::new(
        SpaceTag::Poset(p.name().to_string()),
        SpaceTag::Poset(target.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, depth| {
        let (_, stream) = expect_filter(pt)?;
        let src = src2.clone();
        let s = stream.clone();
        let window = depth.max(4) * SCAN_FACTOR;
        Ok(poset_point(
            &tgt_b,
            FilterStream::from_fn(FilterKind::StrictlyDecreasing, move |i| {
                let mut cur = s.at(0);
                let mut cursor = 0usize;
                for _ in 1..=i {
                    let mut found = None;
                    for j in (cursor + 1)..(cursor + window) {
                        let v = s.at(j);
                        if src.lt(v, cur) && v > cur {
                            found = Some((j, v));
                            break;
                        }
                    }
                    match found {
                        Some((j, v)) => {
                            cursor = j;
                            cur = v;
                        }
                        None => break,
                    }
                }
                cur
            }),
        ))
    }));

    let (src_t2, tgt_t2) = (p.clone(), target.clone());
    let back_triples = Enumeration::rule_open(move |stage| {
        tgt_t2
            .valid_below(stage as u64)
            .into_iter()
            .map(|i| {
                (
                    0u64,
                    BasicOpen::poset_elem(&src_t2, i),
                    BasicOpen::poset_elem(&tgt_t2, i),
                )
            })
            .collect::<Vec<_>>()
    });
    let src_b = p.clone();
    let backward = MapCode::new(
        SpaceTag::Poset(target.name().to_string()),
        SpaceTag::Poset(p.name().to_string()),
        back_triples,
    )
    .with_builder(Arc::new(move |pt, _| {
        let (_, stream) = expect_filter(pt)?;
        Ok(poset_point(&src_b, stream))
    }));

    PosetIso {
        source: p.clone(),
        target,
        forward,
        backward,
    }
}

/// `NP(P) ∩ UF(P) ≅ NP(P'')` with `P'' = {(n,p) : ∀q<=n (p ≱ q)}`,
/// `(n,p) > (m,q) ⟺ p >_P q ∧ m > n`.
pub fn npuf_to_np(p: &CountablePoset) -> PosetIso {
    let name = format!("{}-np", p.name());
    let (pv, pl) = (p.clone(), p.clone());
    let target = CountablePoset::from_rule(
        name,
        None,
        move |code| {
            let (n, x) = unpair(code);
            pv.is_valid(x)
                && (0..=n).all(|q| !pv.is_valid(q) || !pv.leq(q, x))
        },
        move |a, b| {
            if a == b {
                return true;
            }
            let ((na, xa), (nb, xb)) = (unpair(a), unpair(b));
            pl.lt(xa, xb) && na > nb
        },
    );
    let lbl = p.clone();
    let target = target.with_labels(move |code| {
        let (n, x) = unpair(code);
        format!("({n},{})", lbl.label(x))
    });

    let (src_t, tgt_t) = (p.clone(), target.clone());
    let triples = Enumeration::rule_open(move |stage| {
        tgt_t
            .valid_below(stage as u64)
            .into_iter()
            .map(|code| {
                let (_, x) = unpair(code);
                (
                    0u64,
                    BasicOpen::poset_elem(&tgt_t, code),
                    BasicOpen::poset_elem(&src_t, x),
                )
            })
            .collect::<Vec<_>>()
    });
    let tgt_b = target.clone();
    let src2 = p.clone();
    let forward = MapCode::new(
        SpaceTag::Poset(p.name().to_string()),
        SpaceTag::Poset(target.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, depth| {
        let (_, stream) = expect_filter(pt)?;
        let src = src2.clone();
        let s = stream.clone();
        let window = depth.max(4) * SCAN_FACTOR;
        Ok(poset_point(
            &tgt_b,
            FilterStream::from_fn(FilterKind::StrictlyDecreasing, move |i| {
                // (k, v_k): each step raises the level and descends strictly
                // to a stream value clearing the level's validity condition
                let mut cur_v = s.at(0);
                let mut cur_n = 0u64;
                let mut cursor = 0usize;
                // make the start valid: (0, v) needs v not above index 0
                for j in 0..window {
                    let v = s.at(j);
                    if !(0..=0u64).any(|q| src.is_valid(q) && src.leq(q, v)) {
                        cur_v = v;
                        cursor = j;
                        break;
                    }
                }
                for _ in 1..=i {
                    let next_n = cur_n + 1;
                    let mut found = None;
                    for j in (cursor + 1)..(cursor + window) {
                        let v = s.at(j);
                        let valid =
                            (0..=next_n).all(|q| !src.is_valid(q) || !src.leq(q, v));
                        if src.lt(v, cur_v) && valid {
                            found = Some((j, v));
                            break;
                        }
                    }
                    match found {
                        Some((j, v)) => {
                            cursor = j;
                            cur_v = v;
                            cur_n = next_n;
                        }
                        None => break,
                    }
                }
                pair(cur_n, cur_v)
            }),
        ))
    }));

    let (src_t2, tgt_t2) = (p.clone(), target.clone());
    let back_triples = Enumeration::rule_open(move |stage| {
        tgt_t2
            .valid_below(stage as u64)
            .into_iter()
            .map(|code| {
                let (_, x) = unpair(code);
                (
                    0u64,
                    BasicOpen::poset_elem(&src_t2, x),
                    BasicOpen::poset_elem(&tgt_t2, code),
                )
            })
            .collect::<Vec<_>>()
    });
    let src_b = p.clone();
    let backward = MapCode::new(
        SpaceTag::Poset(target.name().to_string()),
        SpaceTag::Poset(p.name().to_string()),
        back_triples,
    )
    .with_builder(Arc::new(move |pt, _| {
        let (_, stream) = expect_filter(pt)?;
        let s = stream.clone();
        Ok(poset_point(
            &src_b,
            FilterStream::from_fn(FilterKind::StrictlyDecreasing, move |i| unpair(s.at(i)).1),
        ))
    }));

    PosetIso {
        source: p.clone(),
        target,
        forward,
        backward,
    }
}

/// k-fold application of the hat operation `P̂ = {p : ∃q (p > q)}`,
/// restricted to indices below the cutoff. The predecessor here is a
/// distinct index `q ≠ p` with `q <= p`, so equivalence cycles survive
/// (they start infinite descending walks); on strict orders this is the
/// usual strict predecessor and the fixpoint is empty.
pub fn prune_iterate(p: &CountablePoset, k: usize, cutoff: u64) -> CountablePoset {
    let mut survivors: BTreeSet<u64> = p.valid_below(cutoff).into_iter().collect();
    for _ in 0..k {
        let next: BTreeSet<u64> = survivors
            .iter()
            .copied()
            .filter(|&x| survivors.iter().any(|&q| q != x && p.leq(q, x)))
            .collect();
        if next == survivors {
            break;
        }
        survivors = next;
    }
    let keep = survivors;
    let pl = p.clone();
    CountablePoset::from_rule(
        format!("{}-pruned", p.name()),
        Some(cutoff),
        move |i| keep.contains(&i),
        move |a, b| pl.leq(a, b),
    )
}

/// Binary product with the componentwise order; carries pairing and
/// projection codes.
#[derive(Clone)]
pub struct ProductPoset {
    pub poset: CountablePoset,
    pub proj_left: MapCode,
    pub proj_right: MapCode,
}

impl ProductPoset {
    /// `f(F, G) = {(p, q) : p ∈ F, q ∈ G}` on streams.
    pub fn pair_streams(&self, f: &FilterStream, g: &FilterStream) -> FilterStream {
        let (f, g) = (f.clone(), g.clone());
        let kind = if f.kind() == FilterKind::StrictlyDecreasing
            && g.kind() == FilterKind::StrictlyDecreasing
        {
            FilterKind::StrictlyDecreasing
        } else {
            FilterKind::Decreasing
        };
        FilterStream::from_fn(kind, move |i| pair(f.at(i), g.at(i)))
    }
}

pub fn product(p: &CountablePoset, q: &CountablePoset) -> ProductPoset {
    let name = format!("{}x{}", p.name(), q.name());
    let size = match (p.finite_size(), q.finite_size()) {
        (Some(0), _) | (_, Some(0)) => Some(0),
        (Some(a), Some(b)) => Some(pair(a - 1, b - 1) + 1),
        _ => None,
    };
    let (pv, qv) = (p.clone(), q.clone());
    let (pl, ql) = (p.clone(), q.clone());
    let poset = CountablePoset::from_rule(
        name,
        size,
        move |code| {
            let (a, b) = unpair(code);
            pv.is_valid(a) && qv.is_valid(b)
        },
        move |x, y| {
            let ((xa, xb), (ya, yb)) = (unpair(x), unpair(y));
            pl.leq(xa, ya) && ql.leq(xb, yb)
        },
    );
    let (lp, lq) = (p.clone(), q.clone());
    let poset = poset.with_labels(move |code| {
        let (a, b) = unpair(code);
        format!("({},{})", lp.label(a), lq.label(b))
    });

    let proj_left = projection_code(&poset, p, true);
    let proj_right = projection_code(&poset, q, false);
    ProductPoset {
        poset,
        proj_left,
        proj_right,
    }
}

fn projection_code(product: &CountablePoset, factor: &CountablePoset, left: bool) -> MapCode {
    let (prod_t, fac_t) = (product.clone(), factor.clone());
    let triples = Enumeration::rule_open(move |stage| {
        prod_t
            .valid_below(stage as u64)
            .into_iter()
            .map(|code| {
                let (a, b) = unpair(code);
                let coord = if left { a } else { b };
                (
                    0u64,
                    BasicOpen::poset_elem(&fac_t, coord),
                    BasicOpen::poset_elem(&prod_t, code),
                )
            })
            .collect::<Vec<_>>()
    });
    let fac_b = factor.clone();
    MapCode::new(
        SpaceTag::Poset(product.name().to_string()),
        SpaceTag::Poset(factor.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, _| {
        let (_, stream) = expect_filter(pt)?;
        let s = stream.clone();
        Ok(poset_point(
            &fac_b,
            FilterStream::from_fn(FilterKind::Decreasing, move |i| {
                let (a, b) = unpair(s.at(i));
                if left {
                    a
                } else {
                    b
                }
            }),
        ))
    }))
}

/// Sequence product `R = ⋃_n (P_0 × ... × P_n)`: tuples ordered by
/// `t < s ⟺ len(t) > len(s) ∧ ∀i < len(s) (t_i <= s_i)`. Finite families
/// are padded with singleton factors so descent can continue past the last
/// listed poset.
#[derive(Clone)]
pub struct SeqProduct {
    pub poset: CountablePoset,
    pub factors: Vec<CountablePoset>,
    pub projections: Vec<MapCode>,
}

impl SeqProduct {
    pub fn pair_streams(&self, streams: &[FilterStream]) -> FilterStream {
        assert_eq!(streams.len(), self.factors.len());
        let streams: Vec<FilterStream> = streams.to_vec();
        let k = streams.len();
        FilterStream::from_fn(FilterKind::Decreasing, move |i| {
            let len = i + 1;
            let t: Vec<u64> = (0..len)
                .map(|j| if j < k { streams[j].at(i) } else { 0 })
                .collect();
            encode_tuple(&t)
        })
    }
}

fn seq_factor(factors: &[CountablePoset], i: usize) -> CountablePoset {
    factors
        .get(i)
        .cloned()
        .unwrap_or_else(|| CountablePoset::chain(1))
}

pub fn product_seq(factors: &[CountablePoset]) -> SeqProduct {
    let name = format!(
        "seq({})",
        factors.iter().map(|p| p.name()).collect::<Vec<_>>().join(",")
    );
    let fv: Vec<CountablePoset> = factors.to_vec();
    let fv2 = fv.clone();
    let poset = CountablePoset::from_rule(
        name,
        None,
        move |code| {
            let t = decode_tuple(code);
            !t.is_empty()
                && t.iter()
                    .enumerate()
                    .all(|(i, &x)| seq_factor(&fv, i).is_valid(x))
        },
        move |a, b| {
            if a == b {
                return true;
            }
            let (ta, tb) = (decode_tuple(a), decode_tuple(b));
            ta.len() > tb.len()
                && tb
                    .iter()
                    .enumerate()
                    .all(|(i, &y)| seq_factor(&fv2, i).leq(ta[i], y))
        },
    );
    let projections = (0..factors.len())
        .map(|i| seq_projection_code(&poset, &factors[i], i))
        .collect();
    SeqProduct {
        poset,
        factors: factors.to_vec(),
        projections,
    }
}

fn seq_projection_code(product: &CountablePoset, factor: &CountablePoset, coord: usize) -> MapCode {
    let (prod_t, fac_t) = (product.clone(), factor.clone());
    let triples = Enumeration::rule_open(move |stage| {
        prod_t
            .valid_below(stage as u64)
            .into_iter()
            .filter_map(|code| {
                let t = decode_tuple(code);
                t.get(coord).map(|&x| {
                    (
                        0u64,
                        BasicOpen::poset_elem(&fac_t, x),
                        BasicOpen::poset_elem(&prod_t, code),
                    )
                })
            })
            .collect::<Vec<_>>()
    });
    let fac_b = factor.clone();
    MapCode::new(
        SpaceTag::Poset(product.name().to_string()),
        SpaceTag::Poset(factor.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, _| {
        let (_, stream) = expect_filter(pt)?;
        let s = stream.clone();
        Ok(poset_point(
            &fac_b,
            FilterStream::from_fn(FilterKind::Decreasing, move |i| {
                // stall on early stages where the tuple is still too short
                let mut j = i;
                loop {
                    let t = decode_tuple(s.at(j));
                    if let Some(&x) = t.get(coord) {
                        return x;
                    }
                    j += 1;
                }
            }),
        ))
    }))
}
