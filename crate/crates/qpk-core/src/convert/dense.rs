//! Dense point sequences for closed, G_δ, and Σ⁰₂ subsets of `P(N)`.

use super::ConvertError;
use crate::codes::{member_at, BorelCode, Membership, Point};
use crate::pn::{ExplicitSubset, FinSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenseKind {
    Closed,
    Gdelta,
    Sigma2,
}

/// Emits a dense sequence of (finite, hence explicit) points lying in the
/// coded set. Every emitted point is stage-checked against the code; the
/// density property — a stage-`bound` member of the set sits within
/// `d̂`-distance `2^{-bound}` of some emitted point — is what the tests
/// sweep on explicit fixtures.
pub fn dense_sequence(
    code: &BorelCode,
    kind: DenseKind,
    bound: usize,
) -> Result<Vec<ExplicitSubset>, ConvertError> {
    let stage = bound.max(4) * 4;
    let candidates: Vec<ExplicitSubset> = match kind {
        DenseKind::Closed => {
            // rank-1 complement of an open: survivors of the forbidden
            // basics, per finite seed over {0..bound}
            if code.positive || code.rank != 1 {
                return Err(ConvertError::KindMismatch);
            }
            subsets_below(bound as u64)
                .map(ExplicitSubset::finite)
                .collect()
        }
        DenseKind::Gdelta => {
            // negative rank 2: extend each seed by every selection of one
            // securing basic per constituent, so a member's own witnesses
            // are always among the emitted points (that is what makes the
            // emitted family d̂-dense at the bound)
            if code.positive || code.rank != 2 {
                return Err(ConvertError::KindMismatch);
            }
            let choices = securing_choices(code, stage);
            let mut out = Vec::new();
            for seed in subsets_below(bound as u64) {
                for sel in selections(&choices) {
                    let mut x = seed.clone();
                    for s in &sel {
                        x = x.union(s);
                    }
                    let x = ExplicitSubset::finite(x);
                    if !out_contains(&out, &x) {
                        out.push(x);
                    }
                }
            }
            out
        }
        DenseKind::Sigma2 => {
            // positive rank 2: per-piece witnesses u from the positive side
            // of each difference, grafted onto every seed
            if !code.positive || code.rank != 2 {
                return Err(ConvertError::KindMismatch);
            }
            let mut grafts: Vec<FinSet> = vec![FinSet::empty()];
            if let Some(pairs) = code.as_diffs() {
                for (b, _) in pairs.at(stage).0 {
                    let mut piece = Vec::new();
                    collect_basics(&b, stage, &mut piece);
                    grafts.extend(piece.into_iter().take(SELECTION_CAP));
                }
            }
            let mut out = Vec::new();
            for seed in subsets_below(bound as u64) {
                for g in &grafts {
                    let x = ExplicitSubset::finite(seed.union(g));
                    if !out_contains(&out, &x) {
                        out.push(x);
                    }
                }
            }
            out
        }
    };
    // keep exactly the stage-checked members
    let mut out = Vec::new();
    for x in candidates {
        let verdict = member_at(&Point::PnExplicit(x.clone()), code, stage)
            .map_err(ConvertError::Code)?;
        if verdict == Membership::In {
            out.push(x);
        }
    }
    Ok(out)
}

fn subsets_below(bound: u64) -> impl Iterator<Item = FinSet> {
    let b = bound.min(15);
    (0u64..(1 << (b + 1))).map(FinSet::from_mask)
}

/// Basics per securing side of a rank-2 negative code's constituents
/// (complemented rank-2 codes store pairs whose second component is the
/// open that keeps a point inside).
fn securing_choices(code: &BorelCode, stage: usize) -> Vec<Vec<FinSet>> {
    let mut out = Vec::new();
    if let Some(pairs) = code.as_diffs() {
        for (_, secure) in pairs.at(stage).0 {
            let mut piece = Vec::new();
            collect_basics(&secure, stage, &mut piece);
            piece.truncate(SELECTION_CAP);
            out.push(piece);
        }
    }
    out
}

const SELECTION_CAP: usize = 4;

/// Cartesian product of one choice per constituent (empty product when a
/// constituent offers nothing — the seed then stands alone).
fn selections(choices: &[Vec<FinSet>]) -> Vec<Vec<FinSet>> {
    let mut out: Vec<Vec<FinSet>> = vec![vec![]];
    for piece in choices {
        if piece.is_empty() {
            continue;
        }
        let mut next = Vec::new();
        for sel in &out {
            for c in piece {
                let mut s = sel.clone();
                s.push(c.clone());
                next.push(s);
            }
        }
        out = next;
    }
    out
}

fn out_contains(out: &[ExplicitSubset], x: &ExplicitSubset) -> bool {
    out.iter().any(|y| match (y, x) {
        (ExplicitSubset::Finite(a), ExplicitSubset::Finite(b)) => a == b,
        _ => false,
    })
}

fn collect_basics(code: &BorelCode, stage: usize, out: &mut Vec<FinSet>) {
    use crate::codes::Descriptor;
    if let Some(open) = code.as_open() {
        for b in open.basics.at(stage).0 {
            if let Descriptor::PnSet(s) = b.desc {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
    } else if let Some(pairs) = code.as_diffs() {
        for (a, b) in pairs.at(stage).0 {
            collect_basics(&a, stage, out);
            collect_basics(&b, stage, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{BasicOpen, Enumeration, OpenCode, Pi02Code, SpaceTag};
    use crate::pn::d_exact;
    use crate::rat::pow2;

    fn fs(v: &[u64]) -> FinSet {
        FinSet::new(v.to_vec())
    }

    #[test]
    fn closed_complement_of_n0() {
        // K = complement of N_{{0}}: subsets avoiding 0
        let open = OpenCode::new(
            SpaceTag::Pn,
            Enumeration::explicit(vec![BasicOpen::pn_set(fs(&[0]))]),
        );
        let k = BorelCode::closed_from_open(open);
        let dense = dense_sequence(&k, DenseKind::Closed, 4).unwrap();
        assert!(!dense.is_empty());
        for x in &dense {
            assert!(!x.contains(0));
        }
        // density at the bound: every member among subsets of {0..5} has an
        // emitted point within 2^{-4} in both directions
        for mask in 0..64u64 {
            if mask & 1 == 1 {
                continue;
            }
            let member = ExplicitSubset::finite(FinSet::from_mask(mask));
            let close = dense.iter().any(|p| {
                d_exact(&member, p) < pow2(-4) && d_exact(p, &member) < pow2(-4)
            });
            assert!(close, "no dense point near {member:?}");
        }
    }

    #[test]
    fn whole_space_enumerates_finite_sets() {
        let whole = BorelCode::whole_space(SpaceTag::Pn);
        let dense = dense_sequence(&whole, DenseKind::Closed, 3).unwrap();
        assert_eq!(dense.len(), 16); // all subsets of {0..3}
    }

    #[test]
    fn gdelta_extends_through_constituents() {
        // ⋂_i U_i with U_0 = N_{{1}} ∪ N_{{2}}, U_1 = N_{{3}}
        let u = |sets: &[FinSet]| {
            OpenCode::new(
                SpaceTag::Pn,
                Enumeration::explicit(
                    sets.iter().cloned().map(BasicOpen::pn_set).collect(),
                ),
            )
        };
        let pairs = vec![
            (u(&[fs(&[1]), fs(&[2])]), OpenCode::whole(SpaceTag::Pn)),
            (u(&[fs(&[3])]), OpenCode::whole(SpaceTag::Pn)),
        ];
        let code = Pi02Code::new(SpaceTag::Pn, Enumeration::explicit(pairs)).to_borel();
        let bound = 3;
        let dense = dense_sequence(&code, DenseKind::Gdelta, bound).unwrap();
        assert!(!dense.is_empty());
        for x in &dense {
            assert!(x.contains(3));
            assert!(x.contains(1) || x.contains(2));
        }
        // density sweep: every member among subsets of {0..5} has an emitted
        // point within d̂ 2^{-bound}
        for mask in 0..64u64 {
            let s = FinSet::from_mask(mask);
            let member = s.contains(3) && (s.contains(1) || s.contains(2));
            if !member {
                continue;
            }
            let y = ExplicitSubset::finite(s);
            assert!(
                dense.iter().any(|p| d_exact(&y, p) < pow2(-(bound as i64))
                    && d_exact(p, &y) < pow2(-(bound as i64))),
                "no dense point near {y:?}"
            );
        }
    }

    #[test]
    fn sigma2_pieces_are_dense() {
        // (N_{{1}} \ N_{{0}}) ∪ (N_{{2}} \ ∅)
        let u = |sets: &[FinSet]| {
            BorelCode::from_open(OpenCode::new(
                SpaceTag::Pn,
                Enumeration::explicit(sets.iter().cloned().map(BasicOpen::pn_set).collect()),
            ))
        };
        let code = BorelCode::diffs(
            SpaceTag::Pn,
            2,
            Enumeration::explicit(vec![
                (u(&[fs(&[1])]), u(&[fs(&[0])])),
                (u(&[fs(&[2])]), BorelCode::empty(SpaceTag::Pn)),
            ]),
        );
        let bound = 3;
        let dense = dense_sequence(&code, DenseKind::Sigma2, bound).unwrap();
        assert!(!dense.is_empty());
        for mask in 0..64u64 {
            let s = FinSet::from_mask(mask);
            let member = (s.contains(1) && !s.contains(0)) || s.contains(2);
            if !member {
                continue;
            }
            let y = ExplicitSubset::finite(s);
            assert!(
                dense.iter().any(|p| d_exact(&y, p) < pow2(-(bound as i64))
                    && d_exact(p, &y) < pow2(-(bound as i64))),
                "no dense point near {y:?}"
            );
        }
    }

    #[test]
    fn kind_mismatch_detected() {
        let whole = BorelCode::whole_space(SpaceTag::Pn);
        assert!(matches!(
            dense_sequence(&whole, DenseKind::Sigma2, 3),
            Err(ConvertError::KindMismatch)
        ));
    }
}
