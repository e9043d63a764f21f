//! Cross-module property tests for the algebraic laws the modules promise.

use proptest::prelude::*;
use qpk_core::codes::{member_at, BasicOpen, BorelCode, Enumeration, Membership, OpenCode, Point, SpaceTag};
use qpk_core::frames::Expression;
use qpk_core::pn::{d_exact_fin, ExplicitSubset, FinSet};
use qpk_core::poset::{enumerate_filters, filter_set, stream_for_set, CountablePoset};
use qpk_core::rat::rat_zero;
use std::collections::BTreeSet;

fn finset() -> impl Strategy<Value = FinSet> {
    (0u64..256).prop_map(FinSet::from_mask)
}

proptest! {
    /// Quasi-metric laws for the universal distance, on random finite sets.
    #[test]
    fn d_exact_quasi_metric_laws(a in finset(), b in finset(), c in finset()) {
        let dab = d_exact_fin(&a, &b);
        prop_assert!(dab >= rat_zero());
        if dab == rat_zero() && d_exact_fin(&b, &a) == rat_zero() {
            prop_assert_eq!(&a, &b);
        }
        prop_assert!(dab + d_exact_fin(&b, &c) >= d_exact_fin(&a, &c));
    }

    /// normalize is idempotent and order-equivalent in both directions.
    #[test]
    fn normalize_preserves_leq(raw in proptest::collection::vec(
        proptest::collection::btree_set(0u32..5, 0..4), 0..4)) {
        let e = Expression::from_disjuncts(raw);
        let n = e.normalize();
        prop_assert_eq!(n.normalize(), n.clone());
        prop_assert!(e.leq(&n) && n.leq(&e));
    }

    /// meet/join respect the valuation semantics.
    #[test]
    fn lattice_ops_match_valuations(
        xs in proptest::collection::vec(proptest::collection::btree_set(0u32..4, 0..3), 1..3),
        ys in proptest::collection::vec(proptest::collection::btree_set(0u32..4, 0..3), 1..3),
        v in proptest::collection::btree_set(0u32..4, 0..5),
    ) {
        let a = Expression::from_disjuncts(xs);
        let b = Expression::from_disjuncts(ys);
        prop_assert_eq!(a.meet(&b).sat(&v), a.sat(&v) && b.sat(&v));
        prop_assert_eq!(a.join(&b).sat(&v), a.sat(&v) || b.sat(&v));
    }

    /// Borel complement swaps decided verdicts on explicit points.
    #[test]
    fn complement_swaps_verdicts(mask in 0u64..64, basics in proptest::collection::vec(0u64..64, 0..4)) {
        let open = OpenCode::new(
            SpaceTag::Pn,
            Enumeration::explicit(
                basics.into_iter().map(|m| BasicOpen::pn_set(FinSet::from_mask(m))).collect(),
            ),
        );
        let code = BorelCode::from_open(open);
        let x = Point::PnExplicit(ExplicitSubset::finite(FinSet::from_mask(mask)));
        let v = member_at(&x, &code, 8).unwrap();
        let w = member_at(&x, &qpk_core::codes::complement(&code), 8).unwrap();
        prop_assert_eq!(w, v.negate());
        prop_assert_ne!(v, Membership::Unknown); // explicit + complete: decided
    }
}

/// Every stream regenerated from an enumerated filter denotes that filter —
/// on a fixed family of awkward posets plus the random sweep already done in
/// the unit tests.
#[test]
fn stream_set_round_trip_on_fixed_posets() {
    let fixtures = vec![
        CountablePoset::chain(4),
        CountablePoset::antichain(3),
        CountablePoset::from_pairs("cycle", 3, &[(0, 1), (1, 0), (2, 0)], true),
        CountablePoset::from_pairs("vee", 3, &[(0, 1), (0, 2)], true),
    ];
    for p in fixtures {
        let e = enumerate_filters(&p).unwrap();
        for f in &e.filters {
            let s = stream_for_set(&p, f).unwrap();
            let back: BTreeSet<u64> = filter_set(&p, &s).unwrap();
            assert_eq!(&back, f, "{p:?}");
        }
    }
}
