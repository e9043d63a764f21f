//! Brute-force filter enumeration on finite posets — the oracle that every
//! transform and conversion in this crate is tested against.

use super::{CountablePoset, FilterStream, PosetError, DEFAULT_MAX_CARRIER};
use std::collections::BTreeSet;

/// All filters of a finite poset, partitioned by class.
#[derive(Clone, Debug, Default)]
pub struct FilterEnumeration {
    pub filters: Vec<BTreeSet<u64>>,
    pub unbounded: Vec<BTreeSet<u64>>,
    pub nonprincipal: Vec<BTreeSet<u64>>,
    pub maximal: Vec<BTreeSet<u64>>,
}

/// Scans every nonempty subset of the carrier for the filter axioms
/// (upward closed, downward directed) and classifies the survivors.
pub fn enumerate_filters(p: &CountablePoset) -> Result<FilterEnumeration, PosetError> {
    enumerate_filters_bounded(p, DEFAULT_MAX_CARRIER)
}

pub fn enumerate_filters_bounded(
    p: &CountablePoset,
    max_carrier: u64,
) -> Result<FilterEnumeration, PosetError> {
    let size = p.finite_size().ok_or(PosetError::NotFinite)?;
    let idx = p.valid_below(size);
    let n = idx.len();
    if n as u64 > max_carrier {
        return Err(PosetError::TooLarge(n as u64, max_carrier));
    }
    let mut out = FilterEnumeration::default();
    for mask in 1u64..(1u64 << n) {
        let set: Vec<u64> = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| idx[i]).collect();
        let upward = set
            .iter()
            .all(|&x| idx.iter().all(|&q| !p.leq(x, q) || set.contains(&q)));
        if !upward {
            continue;
        }
        let directed = set.iter().all(|&x| {
            set.iter()
                .all(|&y| set.iter().any(|&r| p.leq(r, x) && p.leq(r, y)))
        });
        if !directed {
            continue;
        }
        let f: BTreeSet<u64> = set.iter().copied().collect();
        let unbounded = !idx.iter().any(|&r| f.iter().all(|&x| p.lt(r, x)));
        let nonprincipal = f.iter().all(|&x| f.iter().any(|&y| p.lt(y, x)));
        let maximal = idx.iter().all(|&r| {
            f.contains(&r)
                || f.iter()
                    .any(|&x| !idx.iter().any(|&t| p.leq(t, r) && p.leq(t, x)))
        });
        if unbounded {
            out.unbounded.push(f.clone());
        }
        if nonprincipal {
            out.nonprincipal.push(f.clone());
        }
        if maximal {
            out.maximal.push(f.clone());
        }
        out.filters.push(f);
    }
    Ok(out)
}

/// `|UF(P)|` for finite posets without subset enumeration: unbounded filters
/// are exactly the upward closures of predecessor-free equivalence classes.
pub fn uf_count_finite(p: &CountablePoset) -> Result<usize, PosetError> {
    let size = p.finite_size().ok_or(PosetError::NotFinite)?;
    let idx = p.valid_below(size);
    let mut reps: Vec<u64> = Vec::new();
    for &x in &idx {
        if idx.iter().any(|&q| p.lt(q, x)) {
            continue;
        }
        if !reps.iter().any(|&r| p.equiv(r, x)) {
            reps.push(x);
        }
    }
    Ok(reps.len())
}

/// The set denoted by a stream on a finite poset: the upward closure of the
/// values seen in the first `|P|+1` stages (by then the descent has passed
/// through every equivalence class it will ever visit).
pub fn filter_set(p: &CountablePoset, f: &FilterStream) -> Option<BTreeSet<u64>> {
    let size = p.finite_size()?;
    let steps = size as usize + 1;
    let range = f.range_upto(steps);
    Some(
        super::upward_closure(p, &range, size)
            .into_iter()
            .collect(),
    )
}

/// Canonical stream for a filter given as a set (finite posets).
pub fn stream_for_set(
    p: &CountablePoset,
    set: &BTreeSet<u64>,
) -> Result<FilterStream, PosetError> {
    let size = p.finite_size().ok_or(PosetError::NotFinite)?;
    super::filter_from_membership(p, &|x| set.contains(&x), size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::filters_equal;
    use crate::poset::{FilterEq, FilterKind};

    fn sets(v: &[&[u64]]) -> Vec<BTreeSet<u64>> {
        v.iter().map(|s| s.iter().copied().collect()).collect()
    }

    #[test]
    fn chain3_enumeration() {
        let e = enumerate_filters(&CountablePoset::chain(3)).unwrap();
        assert_eq!(e.filters, sets(&[&[0], &[0, 1], &[0, 1, 2]]));
        assert_eq!(e.unbounded, sets(&[&[0, 1, 2]]));
        assert!(e.nonprincipal.is_empty());
    }

    #[test]
    fn empty_poset_enumeration() {
        let e = enumerate_filters(&CountablePoset::empty()).unwrap();
        assert!(e.filters.is_empty());
        assert!(e.unbounded.is_empty());
        assert!(e.maximal.is_empty());
    }

    #[test]
    fn antichain_enumeration() {
        let e = enumerate_filters(&CountablePoset::antichain(2)).unwrap();
        assert_eq!(e.filters, sets(&[&[0], &[1]]));
        assert_eq!(e.unbounded, sets(&[&[0], &[1]]));
        assert_eq!(e.maximal, sets(&[&[0], &[1]]));
    }

    #[test]
    fn too_large_guard() {
        let p = CountablePoset::antichain(25);
        assert!(matches!(
            enumerate_filters(&p),
            Err(PosetError::TooLarge(25, _))
        ));
        assert!(matches!(
            enumerate_filters(&CountablePoset::omega_chain()),
            Err(PosetError::NotFinite)
        ));
    }

    #[test]
    fn uf_count_matches_enumeration() {
        let mut rng = crate::sample::Rng::new(99);
        for _ in 0..60 {
            let n = 2 + rng.below(7);
            let p = crate::sample::random_preorder_with(&mut rng, n);
            let e = enumerate_filters(&p).unwrap();
            assert_eq!(uf_count_finite(&p).unwrap(), e.unbounded.len(), "{p:?}");
        }
    }

    #[test]
    fn greedy_stream_regenerates_every_filter() {
        let mut rng = crate::sample::Rng::new(7);
        for _ in 0..100 {
            let n = 1 + rng.below(6);
            let p = crate::sample::random_preorder_with(&mut rng, n);
            for f in enumerate_filters(&p).unwrap().filters {
                let s = stream_for_set(&p, &f).unwrap();
                assert_eq!(filter_set(&p, &s).unwrap(), f);
            }
        }
    }

    #[test]
    fn classify_agrees_with_enumeration() {
        let mut rng = crate::sample::Rng::new(31);
        for _ in 0..60 {
            let n = 1 + rng.below(6);
            let p = crate::sample::random_preorder_with(&mut rng, n);
            let e = enumerate_filters(&p).unwrap();
            for f in &e.filters {
                let s = stream_for_set(&p, f).unwrap();
                let c = crate::poset::classify_filter(&p, &s, n as usize);
                assert_eq!(c.unbounded.is_yes(), e.unbounded.contains(f));
                assert_eq!(c.nonprincipal.is_yes(), e.nonprincipal.contains(f));
                assert_eq!(c.maximal.is_yes(), e.maximal.contains(f));
            }
        }
    }

    #[test]
    fn streams_of_distinct_filters_compare_distinct() {
        let p = CountablePoset::chain(3);
        let e = enumerate_filters(&p).unwrap();
        for a in &e.filters {
            for b in &e.filters {
                let sa = stream_for_set(&p, a).unwrap();
                let sb = stream_for_set(&p, b).unwrap();
                let eq = filters_equal(&p, &sa, &sb, 4);
                if a == b {
                    assert_eq!(eq, FilterEq::EqualAtDepth);
                } else {
                    assert!(matches!(eq, FilterEq::Distinct(_)));
                }
            }
        }
    }

    #[test]
    fn filter_kind_accessors() {
        let s = FilterStream::from_vec(FilterKind::Decreasing, vec![3, 2, 1]);
        assert_eq!(s.kind(), FilterKind::Decreasing);
        assert_eq!(s.range_upto(5), vec![3, 2, 1]);
        assert_eq!(s.constant_from(), Some(2));
    }
}
