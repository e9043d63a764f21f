//! Frame presentations as Π⁰₂ subspaces of `P(N)` and back: the point space
//! of `⟨G; R⟩` is `⋂_{(u,v) ∈ R} (f(v) ∪ (P(N) \ f(u)))` with generators
//! mapped to naturals.

use super::ConvertError;
use crate::codes::{BasicOpen, Descriptor, Enumeration, OpenCode, Pi02Code, SpaceTag};
use crate::frames::{Expression, GenSet, Presentation};
use crate::pn::FinSet;
use std::collections::BTreeSet;

fn expression_open(e: &Expression) -> OpenCode {
    let basics: Vec<BasicOpen> = e
        .disjuncts()
        .iter()
        .map(|d| BasicOpen::pn_set(FinSet::new(d.iter().map(|&g| g as u64).collect())))
        .collect();
    OpenCode::new(SpaceTag::Pn, Enumeration::full(basics))
}

fn open_expression(open: &OpenCode, stage: usize) -> Result<Expression, ConvertError> {
    let (basics, complete) = open.basics.at(stage);
    if !complete {
        return Err(ConvertError::MissingConstituents);
    }
    let mut disjuncts = Vec::new();
    for b in basics {
        match b.desc {
            Descriptor::PnSet(s) => disjuncts.push(
                s.elems()
                    .iter()
                    .map(|&e| u32::try_from(e).map_err(|_| ConvertError::MissingConstituents))
                    .collect::<Result<BTreeSet<u32>, _>>()?,
            ),
            _ => return Err(ConvertError::MissingConstituents),
        }
    }
    Ok(Expression::from_disjuncts(disjuncts))
}

/// `X = ⋂_i (f(v_i) ∪ ¬f(u_i))`: one constituent pair per relation.
pub fn frame_to_pi02(pres: &Presentation) -> Pi02Code {
    let pairs: Vec<(OpenCode, OpenCode)> = pres
        .relations
        .iter()
        .map(|(u, v)| (expression_open(v), expression_open(u)))
        .collect();
    Pi02Code::new(SpaceTag::Pn, Enumeration::explicit(pairs))
}

/// Reads a Π⁰₂ code over `P(N)` back as a presentation `⟨N; R⟩` with one
/// relation `(u_i, v_i)` per constituent pair.
pub fn pi02_to_frame(code: &Pi02Code, stage: usize) -> Result<Presentation, ConvertError> {
    let (pairs, complete) = code.pairs.at(stage);
    if !complete {
        return Err(ConvertError::MissingConstituents);
    }
    let mut relations = Vec::new();
    for (b, co_a) in pairs {
        let v = open_expression(&b, stage)?;
        let u = open_expression(&co_a, stage)?;
        relations.push((u, v));
    }
    Ok(Presentation {
        name: "from-pi02".into(),
        generators: GenSet::Naturals,
        relations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{Membership, Point};
    use crate::frames::enumerate_points;
    use crate::pn::ExplicitSubset;

    fn e(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    fn valuation_in_code(code: &Pi02Code, v: &BTreeSet<u32>) -> bool {
        let x = Point::PnExplicit(ExplicitSubset::finite(FinSet::new(
            v.iter().map(|&g| g as u64).collect(),
        )));
        code.member(&x, 8).unwrap() == Membership::In
    }

    #[test]
    fn empty_relations_whole_space() {
        let pres = Presentation::new("free", 2, vec![]);
        let code = frame_to_pi02(&pres);
        for mask in 0..4u64 {
            let v: BTreeSet<u32> = (0..2).filter(|g| mask >> g & 1 == 1).collect();
            assert!(valuation_in_code(&code, &v));
        }
    }

    #[test]
    fn implication_carves_three_of_four() {
        // R = {(g0, g1)}: X = {x : g0 ∈ x → g1 ∈ x}
        let pres = Presentation::new("imp", 2, vec![(e("g0"), e("g1"))]);
        let code = frame_to_pi02(&pres);
        let points = enumerate_points(&pres).unwrap();
        assert_eq!(points.len(), 3);
        for mask in 0..4u64 {
            let v: BTreeSet<u32> = (0..2).filter(|g| mask >> g & 1 == 1).collect();
            assert_eq!(valuation_in_code(&code, &v), points.contains(&v));
        }
    }

    #[test]
    fn round_trip_preserves_points() {
        let mut rng = crate::sample::Rng::new(29);
        let pool: Vec<Expression> = vec![
            Expression::bot(),
            Expression::top(),
            e("g0"),
            e("g1"),
            e("g0 & g1"),
            e("g0 | g1"),
            e("g2"),
            e("g0 & g2 | g1"),
        ];
        for _ in 0..40 {
            let nrel = rng.below(3) as usize;
            let relations: Vec<(Expression, Expression)> = (0..nrel)
                .map(|_| {
                    (
                        pool[rng.below(pool.len() as u64) as usize].clone(),
                        pool[rng.below(pool.len() as u64) as usize].clone(),
                    )
                })
                .collect();
            let pres = Presentation::new("rand", 3, relations);
            let code = frame_to_pi02(&pres);
            let back = pi02_to_frame(&code, 16).unwrap();
            // both presentations have the same points over the mentioned
            // generators
            let a = enumerate_points(&pres).unwrap();
            let b = enumerate_points(&back).unwrap();
            let afiltered: Vec<_> = a
                .iter()
                .map(|v| {
                    v.iter()
                        .copied()
                        .filter(|g| {
                            back.relations
                                .iter()
                                .any(|(u, w)| u.generators().contains(g) || w.generators().contains(g))
                        })
                        .collect::<BTreeSet<u32>>()
                })
                .collect();
            for v in &b {
                assert!(afiltered.contains(v), "{pres:?}: extra point {v:?}");
            }
            // and code membership matches the original points exactly
            for mask in 0..8u64 {
                let v: BTreeSet<u32> = (0..3).filter(|g| mask >> g & 1 == 1).collect();
                assert_eq!(valuation_in_code(&code, &v), a.contains(&v), "{pres:?} {v:?}");
            }
        }
    }
}
