//! Named invariant suites behind `qpk check`. Every verdict a suite prints
//! is the result of the corresponding library call; suites add only
//! iteration and seeding.

use crate::report::Report;
use qpk_core::codes::Point;
use qpk_core::convert::uf_to_pi02;
use qpk_core::frames::{
    derives, enumerate_points, point_sat, prec, BaseReading, DerivesResult, Expression,
    PrecResult, Presentation, SatVerdict,
};
use qpk_core::pairing::pair_cutoff;
use qpk_core::pn::FinSet;
use qpk_core::poset::transform::{handy_check, handyfy_uf};
use qpk_core::poset::{
    enumerate_filters, filters_equal, stream_for_set, uf_count_finite, CountablePoset, FilterEq,
};
use qpk_core::qmetric::{axioms_check, fixture_by_name, point_dist, QmPoint, QmSpaceCode};
use qpk_core::rat::pow2;
use qpk_core::sample::Rng;
use std::collections::BTreeSet;

pub struct SuiteOutcome {
    pub passed: bool,
}

/// A point of the Cantor fixture from a seeded bit stream: the length-(n+1)
/// prefix at index n, which satisfies the Cauchy modulus by construction.
pub fn cantor_point(seed: u64) -> QmPoint {
    let mut rng = Rng::new(seed);
    let bits: Vec<bool> = (0..64).map(|_| rng.chance(1, 2)).collect();
    QmPoint::from_fn(move |n| {
        let k = (n + 1).min(60);
        let mut m: u64 = 1;
        for &b in &bits[..k] {
            m = (m << 1) | b as u64;
        }
        m - 1
    })
}

pub fn quasi_metric_suite(
    report: &mut Report,
    space: &QmSpaceCode,
    exhaustive: Option<u64>,
    samples: u64,
    seed: u64,
    precision: i64,
) -> SuiteOutcome {
    let carrier: Vec<u64> = match exhaustive {
        Some(n) if space.name() == "pn" => (0..(1u64 << (n + 1).min(16))).collect(),
        Some(n) => space.carrier_below(n),
        None => {
            let mut rng = Rng::new(seed);
            let bound = if space.name() == "pn" { 256 } else { 64 };
            (0..samples).map(|_| rng.below(bound)).collect()
        }
    };
    let rep = axioms_check(space, &carrier, precision);
    report.verdict("samples", carrier.len());
    report.verdict("nonneg-violations", rep.nonneg.len());
    report.verdict("triangle-violations", rep.triangle.len());
    for (a, b) in rep.nonneg.iter().take(5) {
        report.witness(format!("nonneg fails at ({}, {})", space.label(*a), space.label(*b)));
    }
    for (a, b, c) in rep.triangle.iter().take(5) {
        report.witness(format!(
            "triangle fails at ({}, {}, {})",
            space.label(*a),
            space.label(*b),
            space.label(*c)
        ));
    }
    let passed = rep.ok();
    report.verdict("pass", passed);
    SuiteOutcome { passed }
}

pub fn handy_suite(report: &mut Report, poset: &CountablePoset, depth: usize) -> SuiteOutcome {
    let h = handyfy_uf(poset);
    let n = poset.finite_size().unwrap_or(8).max(1);
    let level = depth.max(6) as u64;
    let cutoff = pair_cutoff(n.max(level));
    let missing = handy_check(&h.poset, cutoff, pair_cutoff(n.max(level) + 2));
    report.verdict("handy-missing", missing.len());
    let mut passed = missing.is_empty();
    if let Ok(want) = uf_count_finite(poset) {
        let got = h.image_filter_count(level, n);
        report.verdict("uf-count-source", want);
        report.verdict("uf-count-image", got);
        passed &= want == got;
        if let Ok(e) = enumerate_filters(poset) {
            let mut trips = 0usize;
            let mut ok = 0usize;
            for f in &e.unbounded {
                let s = stream_for_set(poset, f).expect("oracle filters regenerate");
                trips += 1;
                if matches!(h.iso.round_trip(&s, depth.max(4)), Ok(FilterEq::EqualAtDepth)) {
                    ok += 1;
                }
            }
            report.verdict("round-trips", format!("{ok}/{trips}"));
            passed &= ok == trips;
        }
    }
    report.verdict("pass", passed);
    SuiteOutcome { passed }
}

pub enum RoundTripTarget {
    Poset(CountablePoset),
    Fixture(QmSpaceCode),
}

pub fn roundtrip_suite(
    report: &mut Report,
    target: &RoundTripTarget,
    samples: u64,
    seed: u64,
    depth: usize,
) -> SuiteOutcome {
    match target {
        RoundTripTarget::Poset(p) => {
            let h = handyfy_uf(p);
            let cutoff = pair_cutoff(p.finite_size().unwrap_or(8).max(depth as u64 + 2));
            match uf_to_pi02(&h.poset, cutoff) {
                Err(e) => {
                    report.verdict("error", e);
                    report.verdict("pass", false);
                    SuiteOutcome { passed: false }
                }
                Ok(conv) => {
                    let mut trips = 0usize;
                    let mut ok = 0usize;
                    if let Ok(e) = enumerate_filters(p) {
                        for f in &e.unbounded {
                            let s = stream_for_set(p, f).expect("oracle filter");
                            let img = h.iso.forward_stream(&s, depth).expect("image");
                            trips += 1;
                            if matches!(conv.round_trip(&img, depth), Ok(FilterEq::EqualAtDepth))
                            {
                                ok += 1;
                            }
                        }
                    }
                    let members = conv.stage_members(depth.min(8));
                    let recovered: BTreeSet<BTreeSet<u64>> =
                        members.iter().map(|m| h.source_set(m)).collect();
                    report.verdict("stage-members", members.len());
                    report.verdict("recovered-filters", recovered.len());
                    let want = uf_count_finite(p).unwrap_or(recovered.len());
                    report.verdict("oracle-uf-count", want);
                    report.verdict("round-trips", format!("{ok}/{trips}"));
                    let passed = ok == trips && recovered.len() == want;
                    report.verdict("pass", passed);
                    SuiteOutcome { passed }
                }
            }
        }
        RoundTripTarget::Fixture(space) => {
            let iso = match qpk_core::convert::qm_to_uf(space) {
                Ok(i) => i,
                Err(e) => {
                    report.verdict("error", e);
                    report.verdict("pass", false);
                    return SuiteOutcome { passed: false };
                }
            };
            let mut rng = Rng::new(seed);
            let mut ok = 0usize;
            let total = samples.max(1);
            for _ in 0..total {
                let x = if space.name() == "cantor" {
                    cantor_point(rng.next_u64())
                } else {
                    QmPoint::constant(rng.below(64))
                };
                let good = (|| {
                    let f = iso.phi(&x, depth).ok()?;
                    let back = iso.psi(&f, depth).ok()?;
                    let d1 = point_dist(space, &x, &back, 9).ok()?;
                    let d2 = point_dist(space, &back, &x, 9).ok()?;
                    let f2 = iso.phi(&back, depth).ok()?;
                    let eq = filters_equal(&iso.poset, &f, &f2, depth.min(8));
                    Some(d1 <= pow2(-8) && d2 <= pow2(-8) && eq == FilterEq::EqualAtDepth)
                })()
                .unwrap_or(false);
                if good {
                    ok += 1;
                }
            }
            report.verdict("round-trips", format!("{ok}/{total}"));
            let passed = ok as u64 == total;
            report.verdict("pass", passed);
            SuiteOutcome { passed }
        }
    }
}

/// Pool of small expressions over the frame's generators, used by the triad
/// sweep.
pub fn expression_pool(gens: u32) -> Vec<Expression> {
    let mut pool = vec![Expression::bot(), Expression::top()];
    let atoms: Vec<BTreeSet<u32>> = {
        let mut v = Vec::new();
        for a in 0..gens {
            v.push([a].into_iter().collect());
            for b in (a + 1)..gens {
                v.push([a, b].into_iter().collect());
            }
        }
        v
    };
    for a in &atoms {
        pool.push(Expression::from_disjuncts(vec![a.clone()]));
    }
    for (i, a) in atoms.iter().enumerate() {
        for b in atoms.iter().skip(i + 1) {
            pool.push(Expression::from_disjuncts(vec![a.clone(), b.clone()]).normalize());
        }
    }
    pool.sort();
    pool.dedup();
    pool
}

pub struct TriadStats {
    pub cases: usize,
    pub prec_point_disagreements: usize,
    pub derives_prec_disagreements: usize,
    pub derives_unknown: usize,
    pub bad_witnesses: usize,
    /// Goals where the two Base-rule readings return contradictory verdicts
    /// (one proves, the other refutes).
    pub reading_divergences: usize,
}

pub fn frame_triad_stats(
    pres: &Presentation,
    goals: &[(Expression, Expression)],
    depth: usize,
) -> TriadStats {
    let points = enumerate_points(pres).unwrap_or_default();
    let mut stats = TriadStats {
        cases: 0,
        prec_point_disagreements: 0,
        derives_prec_disagreements: 0,
        derives_unknown: 0,
        bad_witnesses: 0,
        reading_divergences: 0,
    };
    for (a, b) in goals {
        stats.cases += 1;
        let include = points.iter().filter(|v| a.sat(v)).all(|v| b.sat(v));
        let p = prec(a, b, pres, 16);
        match &p {
            PrecResult::Holds(_) => {
                if !include {
                    stats.prec_point_disagreements += 1;
                }
            }
            PrecResult::Refuted(pt) => {
                if include {
                    stats.prec_point_disagreements += 1;
                }
                let sat_a = point_sat(pt, a, depth) == SatVerdict::Sat;
                let never_b = (0..=depth).all(|s| point_sat(pt, b, s) != SatVerdict::Sat);
                if !(sat_a && never_b) {
                    stats.bad_witnesses += 1;
                }
            }
            PrecResult::Unknown => {}
        }
        let d = derives(a, b, pres, depth, BaseReading::Closing);
        let d_side = derives(a, b, pres, depth, BaseReading::SideCondition);
        if matches!(
            (&d, &d_side),
            (DerivesResult::Proved(_), DerivesResult::Refuted(_))
                | (DerivesResult::Refuted(_), DerivesResult::Proved(_))
        ) {
            stats.reading_divergences += 1;
        }
        match (&d, &p) {
            (DerivesResult::Unknown, _) => stats.derives_unknown += 1,
            (DerivesResult::Proved(t), pr) => {
                if t.verify(pres, BaseReading::Closing).is_err() {
                    stats.derives_prec_disagreements += 1;
                }
                if matches!(pr, PrecResult::Refuted(_)) {
                    stats.derives_prec_disagreements += 1;
                }
            }
            (DerivesResult::Refuted(pt), pr) => {
                if matches!(pr, PrecResult::Holds(_)) {
                    stats.derives_prec_disagreements += 1;
                }
                let sat_a = point_sat(pt, a, depth) == SatVerdict::Sat;
                let never_b = (0..=depth).all(|s| point_sat(pt, b, s) != SatVerdict::Sat);
                if !(sat_a && never_b) {
                    stats.bad_witnesses += 1;
                }
            }
        }
    }
    stats
}

pub fn frame_triad_suite(
    report: &mut Report,
    pres: &Presentation,
    samples: u64,
    seed: u64,
    depth: usize,
) -> SuiteOutcome {
    let gens = match pres.generators {
        qpk_core::frames::GenSet::Finite(n) => n,
        qpk_core::frames::GenSet::Naturals => 3,
    };
    let pool = expression_pool(gens.min(3));
    let mut rng = Rng::new(seed);
    let goals: Vec<(Expression, Expression)> = (0..samples.max(1))
        .map(|_| {
            (
                pool[rng.below(pool.len() as u64) as usize].clone(),
                pool[rng.below(pool.len() as u64) as usize].clone(),
            )
        })
        .collect();
    let stats = frame_triad_stats(pres, &goals, depth);
    report.verdict("cases", stats.cases);
    report.verdict("prec-vs-points-disagreements", stats.prec_point_disagreements);
    report.verdict(
        "derives-vs-prec-disagreements",
        stats.derives_prec_disagreements,
    );
    report.verdict("derives-unknown", stats.derives_unknown);
    report.verdict("bad-witnesses", stats.bad_witnesses);
    report.verdict("base-reading-divergences", stats.reading_divergences);
    let passed = stats.prec_point_disagreements == 0
        && stats.derives_prec_disagreements == 0
        && stats.bad_witnesses == 0
        && stats.derives_unknown * 20 < stats.cases.max(1);
    report.verdict("pass", passed);
    SuiteOutcome { passed }
}

/// Parses a fixture name into a space.
pub fn fixture(name: &str) -> Option<QmSpaceCode> {
    fixture_by_name(name)
}

/// Explicit subsets of `{0..=n}` as points, used by sweeps.
pub fn explicit_points_below(n: u64) -> Vec<Point> {
    (0..(1u64 << (n + 1).min(16)))
        .map(|m| {
            Point::PnExplicit(qpk_core::pn::ExplicitSubset::finite(FinSet::from_mask(m)))
        })
        .collect()
}
