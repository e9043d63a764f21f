//! Quasi-metric spaces as UF spaces over the formal-ball poset, and the
//! converse direction from a Π⁰₂ code plus a dense sequence back to a
//! quasi-metric space via the relativization metric.

use super::ConvertError;
use crate::codes::{BasicOpen, Enumeration, MapCode, Point, SpaceTag};
use crate::pairing::{pair, unpair};
use crate::poset::{CountablePoset, FilterKind, FilterStream};
use crate::qmetric::{dprime, LeftCauchySeq, Pi02WithOracles, QmPoint, QmSpaceCode};
use crate::rat::{pow2, rat_zero, Rat};
use num_integer::Integer;
use num_traits::ToPrimitive;
use std::sync::Arc;

/// Decodes a positive rational from a carrier code (canonical: coprime).
fn rational_of(code: u64) -> Option<Rat> {
    let (i, j) = unpair(code);
    let (num, den) = (i + 1, j + 1);
    if num.gcd(&den) != 1 {
        return None;
    }
    Some(Rat::new(num.into(), den.into()))
}

fn code_of_rational(r: &Rat) -> Option<u64> {
    let num = r.numer().to_u64()?;
    let den = r.denom().to_u64()?;
    if num == 0 {
        return None;
    }
    Some(pair(num - 1, den - 1))
}

#[derive(Clone)]
pub struct QmUfIso {
    pub space: QmSpaceCode,
    pub poset: CountablePoset,
    /// `φ : X → UF(P)`.
    pub forward: MapCode,
    /// `ψ : UF(P) → X`.
    pub backward: MapCode,
}

/// Formal-ball poset of an exact quasi-metric space:
/// carrier `A × Q₊`, order `(a,r) < (b,s) ⟺ s − d(b,a) > r`.
pub fn qm_to_uf(space: &QmSpaceCode) -> Result<QmUfIso, ConvertError> {
    if !space.is_exact() {
        return Err(ConvertError::InexactMetric);
    }
    if !space.has_limit() {
        return Err(ConvertError::NoLimitOperator);
    }
    let name = format!("balls({})", space.name());
    let (sv, sl) = (space.clone(), space.clone());
    let poset = CountablePoset::from_rule(
        name,
        None,
        move |code| {
            let (a, rc) = unpair(code);
            sv.is_valid(a) && rational_of(rc).is_some()
        },
        move |x, y| {
            if x == y {
                return true;
            }
            let ((a, rc), (b, sc)) = (unpair(x), unpair(y));
            let (Some(r), Some(s)) = (rational_of(rc), rational_of(sc)) else {
                return false;
            };
            s - sl.dist_exact(b, a).unwrap() > r
        },
    );
    let lbl = space.clone();
    let poset = poset.with_labels(move |code| {
        let (a, rc) = unpair(code);
        let r = rational_of(rc).map(|r| crate::rat::rat_display(&r));
        format!("B({},{})", lbl.label(a), r.unwrap_or_default())
    });

    let forward = phi_code(space, &poset);
    let backward = psi_code(space, &poset);
    Ok(QmUfIso {
        space: space.clone(),
        poset,
        forward,
        backward,
    })
}

/// `φ(x) = ⟨(a_i, 2^{-i+1})⟩`.
fn phi_code(space: &QmSpaceCode, poset: &CountablePoset) -> MapCode {
    let (sp_t, po_t) = (space.clone(), poset.clone());
    let triples = Enumeration::rule_open(move |stage| {
        // (n, B_d(a, r), (b, s)) whenever the ball (a,r) sits below (b,s)
        let mut out = Vec::new();
        for code in po_t.valid_below(stage as u64) {
            let (b, sc) = unpair(code);
            let Some(s) = rational_of(sc) else { continue };
            for a in sp_t.carrier_below(stage as u64) {
                for k in 0..stage {
                    let r = pow2(-(k as i64));
                    if s.clone() - sp_t.dist_exact(b, a).unwrap() > r {
                        out.push((
                            0u64,
                            BasicOpen::poset_elem(&po_t, code),
                            BasicOpen::qm_ball(&sp_t, a, r.clone()),
                        ));
                    }
                }
            }
        }
        out
    });
    let po_b = poset.clone();
    MapCode::new(space.tag(), SpaceTag::Poset(poset.name().to_string()), triples).with_builder(
        Arc::new(move |pt, _| {
            let x = pt
                .as_qm()
                .ok_or_else(|| {
                    crate::codes::CodeError::BadPoint("expected a quasi-metric point".into())
                })?
                .clone();
            Ok(Point::PosetFilter {
                poset: po_b.clone(),
                stream: FilterStream::from_fn(FilterKind::StrictlyDecreasing, move |i| {
                    let radius = pow2(-(i as i64) + 1);
                    pair(x.at(i), code_of_rational(&radius).unwrap())
                }),
            })
        }),
    )
}

/// `ψ`: select a shrinking chain of balls through the filter, take the
/// left-Cauchy sequence of centers, and close with the space's limit
/// operator.
fn psi_code(space: &QmSpaceCode, poset: &CountablePoset) -> MapCode {
    let (sp_t, po_t) = (space.clone(), poset.clone());
    let triples = Enumeration::rule_open(move |stage| {
        // y ∈ B_d(a, r) is certified by any filter element (b, s) with
        // d(a, b) + s < r
        let mut out = Vec::new();
        for code in po_t.valid_below(stage as u64) {
            let (b, sc) = unpair(code);
            let Some(s) = rational_of(sc) else { continue };
            for a in sp_t.carrier_below(stage as u64) {
                for k in 0..stage {
                    let r = pow2(-(k as i64));
                    if sp_t.dist_exact(a, b).unwrap() + s.clone() < r {
                        out.push((
                            0u64,
                            BasicOpen::qm_ball(&sp_t, a, r.clone()),
                            BasicOpen::poset_elem(&po_t, code),
                        ));
                    }
                }
            }
        }
        out
    });
    let sp_b = space.clone();
    MapCode::new(SpaceTag::Poset(poset.name().to_string()), space.tag(), triples).with_builder(
        Arc::new(move |pt, depth| {
            let stream = pt
                .as_filter()
                .ok_or_else(|| crate::codes::CodeError::BadPoint("expected a filter".into()))?
                .clone();
            let sp = sp_b.clone();
            let window = depth.max(4) * 8;
            // b_0 = first ball; b_{n+1} = first stream ball below both b_n
            // and the (n+1)-th stream ball, with radius < 2^{-n-1}
            let mut centers = Vec::new();
            let (mut cur_a, mut cur_r) = {
                let (a, rc) = unpair(stream.at(0));
                (a, rational_of(rc).ok_or_else(bad_ball)?)
            };
            centers.push(cur_a);
            for n in 0..depth {
                let cap = pow2(-(n as i64) - 1);
                let mut found = None;
                for j in 0..window {
                    let (a, rc) = unpair(stream.at(j));
                    let Some(r) = rational_of(rc) else { continue };
                    if r >= cap {
                        continue;
                    }
                    let below_cur =
                        cur_r.clone() - sp.dist_exact(cur_a, a).unwrap() > r;
                    let (na, nrc) = unpair(stream.at(n + 1));
                    let nr = rational_of(nrc).ok_or_else(bad_ball)?;
                    let below_next = nr - sp.dist_exact(na, a).unwrap() > r
                        || stream.at(n + 1) == stream.at(j);
                    if below_cur && below_next {
                        found = Some((a, r));
                        break;
                    }
                }
                match found {
                    Some((a, r)) => {
                        cur_a = a;
                        cur_r = r;
                        centers.push(cur_a);
                    }
                    None => centers.push(cur_a),
                }
            }
            let seq = LeftCauchySeq::from_vec(centers);
            let limit = sp
                .limit(&seq, depth)
                .map_err(|e| crate::codes::CodeError::BadPoint(e.to_string()))?;
            Ok(Point::Qm {
                space: sp.clone(),
                point: limit,
            })
        }),
    )
}

fn bad_ball() -> crate::codes::CodeError {
    crate::codes::CodeError::BadPoint("filter element is not a canonical ball".into())
}

impl QmUfIso {
    pub fn phi(&self, x: &QmPoint, depth: usize) -> Result<FilterStream, ConvertError> {
        let pt = Point::Qm {
            space: self.space.clone(),
            point: x.clone(),
        };
        match self.forward.build_point(&pt, depth)? {
            Point::PosetFilter { stream, .. } => Ok(stream),
            other => Err(ConvertError::Code(crate::codes::CodeError::BadPoint(
                format!("expected a filter, got {other:?}"),
            ))),
        }
    }

    pub fn psi(&self, f: &FilterStream, depth: usize) -> Result<QmPoint, ConvertError> {
        let pt = Point::PosetFilter {
            poset: self.poset.clone(),
            stream: f.clone(),
        };
        match self.backward.build_point(&pt, depth)? {
            Point::Qm { point, .. } => Ok(point),
            other => Err(ConvertError::Code(crate::codes::CodeError::BadPoint(
                format!("expected a point, got {other:?}"),
            ))),
        }
    }
}

/// Quasi-metric space on a dense sequence of a Π⁰₂ subspace, with `d'` as
/// the metric. Needs the disjointness flag and a full oracle vector.
pub fn pi02_to_qm(
    space: &QmSpaceCode,
    y: &Pi02WithOracles,
    dense: &[QmPoint],
    precision: i64,
) -> Result<QmSpaceCode, ConvertError> {
    if !y.code.disjoint {
        return Err(ConvertError::DisjointnessUnknown);
    }
    let (pairs, _) = y.code.pairs.at(precision.max(0) as usize + 4);
    for i in 0..pairs.len() {
        if y.oracles.get(i).cloned().flatten().is_none() {
            return Err(ConvertError::OracleMissing(i));
        }
    }
    let base = space.clone();
    let yy = y.clone();
    let pts: Vec<QmPoint> = dense.to_vec();
    let n = pts.len() as u64;
    Ok(QmSpaceCode::approx(
        format!("dprime({})", space.name()),
        Some(n),
        move |a, b, prec| {
            dprime(&base, &yy, &pts[a as usize], &pts[b as usize], prec + 2)
                .unwrap_or_else(|_| rat_zero())
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{filters_equal, FilterEq};
    use crate::qmetric::{cantor_space, point_dist, pn_space};

    #[test]
    fn rational_codes_round_trip() {
        for code in 0..64 {
            if let Some(r) = rational_of(code) {
                assert_eq!(code_of_rational(&r), Some(code));
            }
        }
        assert_eq!(rational_of(pair(1, 1)), None); // 2/2 is not canonical
    }

    #[test]
    fn ball_order_strictness() {
        let iso = qm_to_uf(&cantor_space()).unwrap();
        // the ball (w, 1/4) sits below (prefix of w, 1/2) when the shrink
        // beats the distance
        let half = code_of_rational(&crate::rat::rat(1, 2)).unwrap();
        let quarter = code_of_rational(&crate::rat::rat(1, 4)).unwrap();
        // carrier 1 ("0") extends carrier 0 (ε): d(ε-word, 0-word) = 1 if
        // different... cantor d(0, 1) = 2^{-lcp(ε, "0")} = 2^0 = 1
        // use identical centers: (a, 1/4) < (a, 1/2) always
        assert!(iso.poset.leq(pair(5, quarter), pair(5, half)));
        assert!(!iso.poset.leq(pair(5, half), pair(5, quarter)));
    }

    #[test]
    fn cantor_round_trip_psi_phi() {
        let space = cantor_space();
        let iso = qm_to_uf(&space).unwrap();
        // x: the all-zeros word approximations of length n+1
        let x = QmPoint::from_fn(|n| (1u64 << (n + 1)) - 1);
        x.check_modulus(&space, 10).unwrap();
        let f = iso.phi(&x, 12).unwrap();
        f.check(&iso.poset, 10).unwrap();
        let back = iso.psi(&f, 12).unwrap();
        let d1 = point_dist(&space, &x, &back, 9).unwrap();
        let d2 = point_dist(&space, &back, &x, 9).unwrap();
        assert!(d1 <= pow2(-8), "forward distance {d1}");
        assert!(d2 <= pow2(-8), "backward distance {d2}");
        // φ(ψ(F)) equal at depth
        let f2 = iso.phi(&back, 12).unwrap();
        assert_eq!(filters_equal(&iso.poset, &f, &f2, 6), FilterEq::EqualAtDepth);
    }

    #[test]
    fn singleton_carrier_space() {
        let sp = QmSpaceCode::exact_with_limit(
            "one",
            Some(1),
            |_, _| rat_zero(),
            |_, _| Ok(QmPoint::constant(0)),
        );
        let iso = qm_to_uf(&sp).unwrap();
        let x = QmPoint::constant(0);
        let f = iso.phi(&x, 8).unwrap();
        f.check(&iso.poset, 8).unwrap();
        let c = crate::poset::classify_filter(&iso.poset, &f, 8);
        assert_eq!(c.unbounded, crate::Verdict3::Yes);
        let back = iso.psi(&f, 8).unwrap();
        assert_eq!(back.at(5), 0);
    }

    #[test]
    fn pi02_to_qm_whole_space_reduces_to_d() {
        use crate::codes::Pi02Code;
        let sp = pn_space();
        let whole = Pi02WithOracles {
            code: Pi02Code::whole(sp.tag()).with_disjoint(),
            oracles: vec![],
        };
        let dense: Vec<QmPoint> = (0..8u64).map(QmPoint::constant).collect();
        let space2 = pi02_to_qm(&sp, &whole, &dense, 16).unwrap();
        for a in 0..8u64 {
            for b in 0..8u64 {
                let got = space2.dist(a, b, 16);
                let want = sp.dist(a, b, 16);
                assert!(
                    crate::rat::rat_abs(&(got.clone() - want.clone())) <= pow2(-14),
                    "({a},{b}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn pi02_to_qm_singleton() {
        use crate::codes::Pi02Code;
        let sp = pn_space();
        let whole = Pi02WithOracles {
            code: Pi02Code::whole(sp.tag()).with_disjoint(),
            oracles: vec![],
        };
        let dense = vec![QmPoint::constant(0b1)];
        let space2 = pi02_to_qm(&sp, &whole, &dense, 12).unwrap();
        assert_eq!(space2.carrier_below(8), vec![0]);
        assert!(space2.dist(0, 0, 12) <= pow2(-10));
    }

    #[test]
    fn pi02_to_qm_constrained_fixture_axioms() {
        use crate::codes::{BasicOpen, Enumeration, OpenCode, Pi02Code};
        use crate::pn::FinSet;
        use crate::qmetric::{axioms_check, DistOracle};
        // Y = {x : 0 ∈ x} over P(N) with its exact distance oracle
        let sp = pn_space();
        let ball = OpenCode::new(
            sp.tag(),
            Enumeration::full(vec![BasicOpen::qm_ball(&sp, 0b1, crate::rat::rat(1, 2))]),
        );
        let cover = OpenCode::new(
            sp.tag(),
            Enumeration::full(vec![BasicOpen::qm_ball(&sp, 0, crate::rat::rat_int(2))]),
        );
        let code = Pi02Code::new(sp.tag(), Enumeration::explicit(vec![(ball, cover)]))
            .with_disjoint();
        let oracle: DistOracle = Arc::new(|y: &QmPoint, _| {
            // F = {x : 0 ∉ x}: distance 1 from any set containing 0
            let has_zero = FinSet::from_mask(y.at(8)).contains(0);
            let d = if has_zero {
                crate::rat::rat_int(1)
            } else {
                rat_zero()
            };
            Some((d.clone(), d))
        });
        let y = Pi02WithOracles {
            code,
            oracles: vec![Some(oracle)],
        };
        let dense: Vec<QmPoint> = (0..32u64)
            .filter(|m| m & 1 == 1)
            .map(QmPoint::constant)
            .collect();
        let space2 = pi02_to_qm(&sp, &y, &dense, 16).unwrap();
        let samples: Vec<u64> = (0..dense.len() as u64).collect();
        let rep = axioms_check(&space2, &samples, 16);
        assert!(rep.ok(), "{:?}", rep);
        // missing pieces surface as errors
        assert!(matches!(
            pi02_to_qm(&sp, &Pi02WithOracles { code: y.code.clone(), oracles: vec![None] }, &dense, 16),
            Err(ConvertError::OracleMissing(0))
        ));
        let undisjoint = Pi02WithOracles {
            code: {
                let mut c = y.code.clone();
                c.disjoint = false;
                c
            },
            oracles: y.oracles.clone(),
        };
        assert!(matches!(
            pi02_to_qm(&sp, &undisjoint, &dense, 16),
            Err(ConvertError::DisjointnessUnknown)
        ));
    }

    #[test]
    fn pn_fixture_explicit_correspondence() {
        let space = pn_space();
        let iso = qm_to_uf(&space).unwrap();
        for mask in [0u64, 0b1, 0b101, 0b11011] {
            let x = QmPoint::constant(mask);
            let f = iso.phi(&x, 10).unwrap();
            f.check(&iso.poset, 8).unwrap();
            let back = iso.psi(&f, 10).unwrap();
            // exact-d oracle: the reconstructed point has the same finite set
            // at every deep index
            assert_eq!(
                space.dist_exact(back.at(8), mask).unwrap(),
                rat_zero()
            );
            assert_eq!(
                space.dist_exact(mask, back.at(8)).unwrap(),
                rat_zero()
            );
        }
    }
}
