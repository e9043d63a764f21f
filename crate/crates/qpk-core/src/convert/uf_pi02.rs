//! UF space of a handy poset as a Π⁰₂ subspace of `P(N)`.
//!
//! Points of `P(N)` encode filters as their index sets. The code is
//! `B = ⋂_n U_n ∩ C`: the depth sets `U_n` collect `N_{g(q)}` over ends of
//! strictly descending chains of length n+1 that sit below none of the first
//! n+1 indices, and `C` carries the filter axioms (index validity and
//! directedness). The enumeration exposes all of `C` restricted to the
//! working prefix from stage 1 on and one `U_n` per stage, so "stage-n
//! member" means: passes the filter axioms and witnesses depth n.

use super::ConvertError;
use crate::codes::{
    BasicOpen, Enumeration, MapCode, Membership, OpenCode, Pi02Code, Point, SpaceTag,
};
use crate::pn::{ExplicitSubset, FinSet, PnPoint};
use crate::poset::transform::handy_check;
use crate::poset::{CountablePoset, FilterKind, FilterStream};
use std::collections::BTreeSet;
use std::sync::Arc;

#[derive(Clone)]
pub struct UfToPi02 {
    pub code: Pi02Code,
    /// `ĝ : UF(P) → P(N)`.
    pub forward: MapCode,
    /// Index-set reading back into a filter stream.
    pub backward: MapCode,
    pub poset: CountablePoset,
    pub cutoff: u64,
}

/// `g(p) = {q <= p : p <=_P q}` — the indices of elements above `p` that are
/// numerically no larger than `p`'s own index.
pub fn g_image(p: &CountablePoset, elem: u64) -> FinSet {
    FinSet::new(
        (0..=elem)
            .filter(|&q| p.is_valid(q) && p.leq(elem, q))
            .collect(),
    )
}

pub fn uf_to_pi02(p: &CountablePoset, cutoff: u64) -> Result<UfToPi02, ConvertError> {
    let missing = handy_check(p, cutoff, cutoff.saturating_mul(4) + 64);
    if !missing.is_empty() {
        return Err(ConvertError::NotHandy(missing));
    }
    let code = build_code(p, cutoff);
    let forward = forward_code(p, cutoff);
    let backward = backward_code(p, cutoff);
    Ok(UfToPi02 {
        code,
        forward,
        backward,
        poset: p.clone(),
        cutoff,
    })
}

fn whole_open() -> OpenCode {
    OpenCode::whole(SpaceTag::Pn)
}

/// Full, always-complete open from a fixed basic list.
fn fixed_open(basics: Vec<BasicOpen>) -> OpenCode {
    OpenCode::new(SpaceTag::Pn, Enumeration::full(basics))
}

fn build_code(p: &CountablePoset, cutoff: u64) -> Pi02Code {
    let p = p.clone();
    Pi02Code::new(
        SpaceTag::Pn,
        Enumeration::rule_open(move |stage| {
            let idx = p.valid_below(cutoff);
            let mut pairs = Vec::new();
            // C, validity: an index outside the carrier prefix is forbidden
            for l in 0..cutoff {
                if !p.is_valid(l) {
                    pairs.push((
                        OpenCode::empty(SpaceTag::Pn),
                        fixed_open(vec![BasicOpen::pn_set(FinSet::singleton(l))]),
                    ));
                }
            }
            // C, directedness: members must have a common lower bound inside
            for &a in &idx {
                for &b in &idx {
                    if a > b {
                        continue;
                    }
                    let lows: Vec<BasicOpen> = idx
                        .iter()
                        .filter(|&&r| p.leq(r, a) && p.leq(r, b))
                        .map(|&r| BasicOpen::pn_set(FinSet::singleton(r)))
                        .collect();
                    pairs.push((
                        fixed_open(lows),
                        fixed_open(vec![BasicOpen::pn_set(FinSet::new(vec![a, b]))]),
                    ));
                }
            }
            // U_n for n < stage
            let heights = chain_heights(&p, &idx);
            for n in 0..stage {
                let basics: Vec<BasicOpen> = idx
                    .iter()
                    .filter(|&&q| {
                        heights[&q] >= n
                            && (0..(n as u64 + 1))
                                .all(|r| !p.is_valid(r) || !p.leq(r, q))
                    })
                    .map(|&q| BasicOpen::pn_set(g_image(&p, q)))
                    .collect();
                pairs.push((fixed_open(basics), whole_open()));
            }
            pairs
        }),
    )
}

/// Longest strictly ascending chain above each element within the prefix.
fn chain_heights(p: &CountablePoset, idx: &[u64]) -> std::collections::HashMap<u64, usize> {
    fn go(
        p: &CountablePoset,
        x: u64,
        idx: &[u64],
        memo: &mut std::collections::HashMap<u64, usize>,
    ) -> usize {
        if let Some(&h) = memo.get(&x) {
            return h;
        }
        let mut best = 0;
        for &q in idx {
            if p.lt(x, q) {
                best = best.max(1 + go(p, q, idx, memo));
            }
        }
        memo.insert(x, best);
        best
    }
    let mut memo = std::collections::HashMap::new();
    for &x in idx {
        go(p, x, idx, &mut memo);
    }
    memo
}

/// `ĝ` with the re-staggered point transform
/// `r_i = (⋃_{k<=i} g(q_k)) ∩ {0..i}`.
fn forward_code(p: &CountablePoset, cutoff: u64) -> MapCode {
    let p_t = p.clone();
    let triples = Enumeration::rule_open(move |stage| {
        let mut out = Vec::new();
        for u in p_t.valid_below((stage as u64).min(cutoff)) {
            let g = g_image(&p_t, u);
            // the full image plus its small subsets: enough for the
            // preimage/apply agreements exercised at desk scale
            let mut subsets: Vec<FinSet> = vec![g.clone()];
            for &a in g.elems() {
                subsets.push(FinSet::singleton(a));
                for &b in g.elems() {
                    if a < b {
                        subsets.push(FinSet::new(vec![a, b]));
                    }
                }
            }
            subsets.dedup();
            for s in subsets {
                out.push((
                    0u64,
                    BasicOpen::pn_set(s),
                    BasicOpen::poset_elem(&p_t, u),
                ));
            }
        }
        out
    });
    let p_b = p.clone();
    MapCode::new(
        SpaceTag::Poset(p.name().to_string()),
        SpaceTag::Pn,
        triples,
    )
    .with_builder(Arc::new(move |pt, _depth| {
        let stream = pt
            .as_filter()
            .ok_or_else(|| crate::codes::CodeError::BadPoint("expected a filter".into()))?
            .clone();
        let p = p_b.clone();
        Ok(Point::Pn(PnPoint::from_stage_fn(Arc::new(move |i| {
            let mut acc = FinSet::empty();
            for k in 0..=i {
                acc = acc.union(&g_image(&p, stream.at(k)));
            }
            acc.restrict(i as u64)
        }))))
    }))
}

/// Reads an index set back as the greedy decreasing walk through the
/// elements it reveals.
fn backward_code(p: &CountablePoset, cutoff: u64) -> MapCode {
    let p_t = p.clone();
    let triples = Enumeration::rule_open(move |stage| {
        p_t.valid_below((stage as u64).min(cutoff))
            .into_iter()
            .map(|u| {
                (
                    0u64,
                    BasicOpen::poset_elem(&p_t, u),
                    BasicOpen::pn_set(FinSet::singleton(u)),
                )
            })
            .collect::<Vec<_>>()
    });
    let p_b = p.clone();
    MapCode::new(
        SpaceTag::Pn,
        SpaceTag::Poset(p.name().to_string()),
        triples,
    )
    .with_builder(Arc::new(move |pt, depth| {
        let point = pt
            .as_pn()
            .ok_or_else(|| crate::codes::CodeError::BadPoint("expected a P(N) point".into()))?;
        let p = p_b.clone();
        let window = depth.max(4) * 4;
        Ok(Point::PosetFilter {
            poset: p_b.clone(),
            stream: FilterStream::from_fn(FilterKind::Decreasing, move |n| {
                let info = |k: usize| -> Vec<u64> {
                    point
                        .stage(window * (k + 1))
                        .elems()
                        .iter()
                        .copied()
                        .filter(|&e| p.is_valid(e))
                        .collect()
                };
                let start = info(0);
                let mut cur = match start.first() {
                    Some(&e) => e,
                    None => return 0, // no information yet; harmless placeholder
                };
                for k in 1..=n {
                    let f = info(k);
                    let next = f
                        .iter()
                        .copied()
                        .find(|&q| p.lt(q, cur))
                        .or_else(|| f.iter().copied().find(|&q| p.leq(q, cur)))
                        .unwrap_or(cur);
                    cur = next;
                }
                cur
            }),
        })
    }))
}

impl UfToPi02 {
    /// The distinct filter prefixes of the working carrier: upward closures
    /// of the equivalence classes visible below the cutoff.
    pub fn prefix_filters(&self) -> Vec<BTreeSet<u64>> {
        let idx = self.poset.valid_below(self.cutoff);
        let mut reps: Vec<u64> = Vec::new();
        for &x in &idx {
            if !reps.iter().any(|&r| self.poset.equiv(r, x)) {
                reps.push(x);
            }
        }
        let mut out: Vec<BTreeSet<u64>> = Vec::new();
        for r in reps {
            let f: BTreeSet<u64> = crate::poset::upward_closure(&self.poset, &[r], self.cutoff)
                .into_iter()
                .collect();
            if !out.contains(&f) {
                out.push(f);
            }
        }
        out
    }

    /// Stage-`levels` inhabitants of the code among the filter-shaped
    /// subsets of the prefix.
    pub fn stage_members(&self, levels: usize) -> Vec<BTreeSet<u64>> {
        self.prefix_filters()
            .into_iter()
            .filter(|f| self.is_stage_member(f, levels))
            .collect()
    }

    pub fn is_stage_member(&self, set: &BTreeSet<u64>, levels: usize) -> bool {
        let x = Point::PnExplicit(ExplicitSubset::finite(FinSet::new(
            set.iter().copied().collect(),
        )));
        self.code.member(&x, levels).unwrap_or(Membership::Out) != Membership::Out
    }

    /// The depth-`levels` filter prefixes, computed structurally: upward
    /// closures of prefix elements carrying a strictly ascending chain of
    /// length `levels - 1` above them (the ends of depth-`levels` descents
    /// inside unbounded-filter images). On handy posets this is exactly the
    /// stage-member set, by an independent route.
    pub fn expected_depth_members(&self, levels: usize) -> Vec<BTreeSet<u64>> {
        let idx = self.poset.valid_below(self.cutoff);
        let mut out: Vec<BTreeSet<u64>> = Vec::new();
        for &e in &idx {
            if crate::poset::up_chain_len(&self.poset, e, self.cutoff, levels) + 1 >= levels {
                let ups: BTreeSet<u64> =
                    crate::poset::upward_closure(&self.poset, &[e], self.cutoff)
                        .into_iter()
                        .collect();
                if !out.contains(&ups) {
                    out.push(ups);
                }
            }
        }
        out
    }

    /// Exhaustive variant over every subset of the prefix; only feasible on
    /// small carriers, used by the correspondence tests.
    pub fn stage_members_exhaustive(&self, levels: usize) -> Option<Vec<BTreeSet<u64>>> {
        let idx = self.poset.valid_below(self.cutoff);
        if idx.len() > 16 {
            return None;
        }
        let mut out = Vec::new();
        for mask in 0u64..(1 << idx.len()) {
            let set: BTreeSet<u64> = idx
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            if self.is_stage_member(&set, levels) {
                out.push(set);
            }
        }
        Some(out)
    }

    /// Point-level round trip at a depth.
    pub fn round_trip(
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
}
