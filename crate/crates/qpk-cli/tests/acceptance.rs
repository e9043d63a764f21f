//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime. Run with `cargo test --test acceptance -- --nocapture`.

use qpk_cli::commands;
use qpk_cli::suites::{cantor_point, expression_pool, frame_triad_stats};
use qpk_core::convert::uf_to_pi02;
use qpk_core::frames::{Expression, Presentation};
use qpk_core::pairing::pair_cutoff;
use qpk_core::pn::{
    d_exact_fin, d_fin_to_point_exact, pn_limit, FinSet, FinSetSeq,
};
use qpk_core::poset::transform::{handy_check, handyfy_uf, product};
use qpk_core::poset::{
    enumerate_filters, filters_equal, stream_for_set, uf_count_finite, FilterEq,
};
use qpk_core::qmetric::{
    dprime, dyadic_of, lower_dyadic_space, point_dist, DistOracle, Pi02WithOracles, QmPoint,
};
use qpk_core::rat::{pow2, rat, rat_int, rat_max, rat_zero};
use qpk_core::sample::{random_preorder_with, Rng};
use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

fn finish(n: usize, name: &str, started: Instant, limit: Duration) {
    let elapsed = started.elapsed();
    println!(
        "acceptance {n} ({name}): PASS in {:.2?} (limit {:.0?})",
        elapsed, limit
    );
    assert!(
        elapsed < limit,
        "criterion {n} exceeded its runtime bound: {elapsed:.2?} >= {limit:.2?}"
    );
}

/// 1. Exhaustive quasi-metric axioms on subsets of {0..5}: nonnegativity,
/// T0 separation, triangle — exact dyadic arithmetic, zero tolerance.
#[test]
fn criterion_01_universal_quasi_metric_axioms() {
    let started = Instant::now();
    let n = 64u64; // subsets of {0..5}
    let sets: Vec<FinSet> = (0..n).map(FinSet::from_mask).collect();
    let mut d = vec![rat_zero(); (n * n) as usize];
    for a in 0..n {
        for b in 0..n {
            d[(a * n + b) as usize] = d_exact_fin(&sets[a as usize], &sets[b as usize]);
        }
    }
    let zero = rat_zero();
    let mut triples = 0u64;
    for a in 0..n {
        for b in 0..n {
            let dab = &d[(a * n + b) as usize];
            assert!(*dab >= zero, "nonnegativity at ({a},{b})");
            if *dab == zero && d[(b * n + a) as usize] == zero {
                assert_eq!(a, b, "T0 separation at ({a},{b})");
            }
            for c in 0..n {
                triples += 1;
                assert!(
                    dab.clone() + &d[(b * n + c) as usize] >= d[(a * n + c) as usize],
                    "triangle at ({a},{b},{c})"
                );
            }
        }
    }
    assert_eq!(triples, 262_144);
    finish(1, "universal quasi-metric axioms", started, Duration::from_secs(10));
}

/// 2. Handyfication of 200 seeded preorders on <= 8 elements: handy check,
/// |UF| preservation per the enumeration oracle, round trips at full depth.
#[test]
fn criterion_02_handyfication() {
    let started = Instant::now();
    let mut rng = Rng::new(2024);
    for round in 0..200 {
        let n = 1 + rng.below(8);
        let p = random_preorder_with(&mut rng, n);
        let h = handyfy_uf(&p);
        let level = 8u64.max(n);
        let cutoff = pair_cutoff(level);
        let missing = handy_check(&h.poset, cutoff, pair_cutoff(level + 2));
        assert!(missing.is_empty(), "round {round}: handy check fails at {missing:?}");
        let oracle = enumerate_filters(&p).unwrap();
        assert_eq!(
            h.image_filter_count(level, n),
            oracle.unbounded.len(),
            "round {round}: |UF| not preserved"
        );
        let depth = n as usize + 2;
        for f in &oracle.unbounded {
            let s = stream_for_set(&p, f).unwrap();
            // source -> target -> source
            assert_eq!(
                h.iso.round_trip(&s, depth).unwrap(),
                FilterEq::EqualAtDepth,
                "round {round}: forward round trip"
            );
            // target -> source -> target
            let img = h.iso.forward_stream(&s, depth).unwrap();
            let back = h.iso.backward_stream(&img, depth).unwrap();
            let img2 = h.iso.forward_stream(&back, depth).unwrap();
            assert_eq!(
                filters_equal(&h.poset, &img, &img2, depth),
                FilterEq::EqualAtDepth,
                "round {round}: backward round trip"
            );
        }
    }
    finish(2, "handyfication", started, Duration::from_secs(30));
}

/// 3. uf_to_pi02 on 100 seeded handyfied posets: the stage-8 inhabitants of
/// B are in exact bijection with the depth-8 UF filter prefixes (computed by
/// an independent structural route), every inhabitant extends to an oracle
/// UF filter, every oracle UF filter is fully visible, and the point
/// transform round-trips.
#[test]
fn criterion_03_uf_to_pi02_correspondence() {
    let started = Instant::now();
    let mut rng = Rng::new(3033);
    for round in 0..100 {
        let n = 1 + rng.below(8);
        let p = random_preorder_with(&mut rng, n);
        let h = handyfy_uf(&p);
        let cutoff = pair_cutoff(n.max(10));
        let conv = uf_to_pi02(&h.poset, cutoff).unwrap();
        let members: BTreeSet<BTreeSet<u64>> = conv.stage_members(8).into_iter().collect();
        let expected: BTreeSet<BTreeSet<u64>> =
            conv.expected_depth_members(8).into_iter().collect();
        assert_eq!(members, expected, "round {round}: stage-8 prefix bijection");
        let oracle = enumerate_filters(&p).unwrap();
        let want: BTreeSet<BTreeSet<u64>> = oracle.unbounded.iter().cloned().collect();
        let recovered: BTreeSet<BTreeSet<u64>> =
            members.iter().map(|m| h.source_set(m)).collect();
        for src in &recovered {
            assert!(
                want.iter().any(|f| src.is_subset(f)),
                "round {round}: member source {src:?} extends no UF filter"
            );
        }
        for f in &want {
            assert!(
                recovered.contains(f),
                "round {round}: UF filter {f:?} not visible at stage 8"
            );
        }
        for f in &oracle.unbounded {
            let s = stream_for_set(&p, f).unwrap();
            let img = h.iso.forward_stream(&s, 10).unwrap();
            assert_eq!(
                conv.round_trip(&img, 8).unwrap(),
                FilterEq::EqualAtDepth,
                "round {round}: ĝ round trip"
            );
        }
    }
    finish(3, "uf_to_pi02 correspondence", started, Duration::from_secs(60));
}

/// 4. Frame triad over an enumerated family (|G| <= 3, |R| <= 2,
/// expressions with <= 2 disjuncts of <= 2 generators): prec agrees exactly
/// with point semantics, derives agrees with prec wherever decided, the
/// unknown rate stays under 5%, and every refuted witness falsifies.
#[test]
fn criterion_04_frame_triad() {
    let started = Instant::now();
    let pool = expression_pool(3);
    assert!(pool
        .iter()
        .all(|e| e.disjuncts().len() <= 2 && e.disjuncts().iter().all(|d| d.len() <= 2)));
    let mut rng = Rng::new(44);
    let mut presentations: Vec<Presentation> = Vec::new();
    presentations.push(Presentation::new("free", 3, vec![]));
    // every single-relation presentation over the pool
    for u in &pool {
        for v in &pool {
            presentations.push(Presentation::new("r1", 3, vec![(u.clone(), v.clone())]));
        }
    }
    // a seeded sample of two-relation presentations
    for _ in 0..400 {
        let pick = |rng: &mut Rng| pool[rng.below(pool.len() as u64) as usize].clone();
        let relations = vec![(pick(&mut rng), pick(&mut rng)), (pick(&mut rng), pick(&mut rng))];
        presentations.push(Presentation::new("r2", 3, relations));
    }
    let mut cases = 0usize;
    let mut unknown = 0usize;
    for pres in &presentations {
        let goals: Vec<(Expression, Expression)> = (0..4)
            .map(|_| {
                (
                    pool[rng.below(pool.len() as u64) as usize].clone(),
                    pool[rng.below(pool.len() as u64) as usize].clone(),
                )
            })
            .collect();
        let stats = frame_triad_stats(pres, &goals, 10);
        assert_eq!(stats.prec_point_disagreements, 0, "{pres:?}");
        assert_eq!(stats.derives_prec_disagreements, 0, "{pres:?}");
        assert_eq!(stats.bad_witnesses, 0, "{pres:?}");
        cases += stats.cases;
        unknown += stats.derives_unknown;
    }
    assert!(cases >= 2000, "family too small: {cases}");
    assert!(
        unknown * 20 < cases,
        "unknown rate too high: {unknown}/{cases}"
    );
    finish(4, "frame triad", started, Duration::from_secs(60));
}

/// 5. d' on two Π⁰₂ fixtures with distance oracles: 500 seeded pairs/triples
/// at precision 20 satisfy d <= d' <= d + 2 and the triangle inequality
/// within 2^-18.
#[test]
fn criterion_05_dprime_suite() {
    let started = Instant::now();
    let sp = lower_dyadic_space();
    // fixture A: the whole space (every constituent trivial)
    let whole = Pi02WithOracles {
        code: qpk_core::codes::Pi02Code::whole(sp.tag()).with_disjoint(),
        oracles: vec![],
    };
    // fixture B: the open ray {y : y > 1/4} with its exact distance oracle
    let ray = ray_fixture(&sp);
    let carrier_in_ray: Vec<u64> = (0..256)
        .filter(|&i| dyadic_of(i) > rat(1, 4))
        .collect();
    let mut rng = Rng::new(55);
    let prec = 20i64;
    let tol = pow2(-18);
    for (fixture, carrier) in [
        (&whole, (0..64).collect::<Vec<u64>>()),
        (&ray, carrier_in_ray),
    ] {
        let pick = |rng: &mut Rng, c: &[u64]| QmPoint::constant(c[rng.below(c.len() as u64) as usize]);
        for _ in 0..250 {
            let x = pick(&mut rng, &carrier);
            let y = pick(&mut rng, &carrier);
            let base = sp.dist(x.at(23), y.at(23), prec);
            let dp = dprime(&sp, fixture, &x, &y, prec).unwrap();
            assert!(dp.clone() + tol.clone() >= base, "d <= d'");
            assert!(dp <= base + rat_int(2) + tol.clone(), "d' <= d + 2");
        }
        for _ in 0..250 {
            let (x, y, z) = (
                pick(&mut rng, &carrier),
                pick(&mut rng, &carrier),
                pick(&mut rng, &carrier),
            );
            let dxy = dprime(&sp, fixture, &x, &y, prec).unwrap();
            let dyz = dprime(&sp, fixture, &y, &z, prec).unwrap();
            let dxz = dprime(&sp, fixture, &x, &z, prec).unwrap();
            assert!(dxy + dyz + tol.clone() >= dxz, "triangle");
        }
    }
    finish(5, "d-prime suite", started, Duration::from_secs(30));
}

fn ray_fixture(sp: &qpk_core::qmetric::QmSpaceCode) -> Pi02WithOracles {
    use qpk_core::codes::{BasicOpen, Enumeration, OpenCode, Pi02Code};
    let half = (0..64).find(|&i| dyadic_of(i) == rat(1, 2)).unwrap();
    let ball = OpenCode::new(
        sp.tag(),
        Enumeration::full(vec![BasicOpen::qm_ball(sp, half, rat(1, 4))]),
    );
    let cover = OpenCode::new(
        sp.tag(),
        Enumeration::full(vec![BasicOpen::qm_ball(sp, 0, rat_int(2))]),
    );
    let code = Pi02Code::new(sp.tag(), Enumeration::explicit(vec![(ball, cover)]))
        .with_disjoint();
    let oracle: DistOracle = Arc::new(|y: &QmPoint, _| {
        let v = dyadic_of(y.at(12));
        let d = rat_max(v - rat(1, 4), rat_zero());
        Some((d.clone(), d))
    });
    Pi02WithOracles {
        code,
        oracles: vec![Some(oracle)],
    }
}

/// 6. qm_to_uf round trip on the Cantor fixture: 100 seeded points, ψ(φ(x))
/// within 2^-8 of x both ways, φ(ψ(F)) equal at depth 8.
#[test]
fn criterion_06_qm_to_uf_round_trip() {
    let started = Instant::now();
    let space = qpk_core::qmetric::cantor_space();
    let iso = qpk_core::convert::qm_to_uf(&space).unwrap();
    let mut rng = Rng::new(66);
    for round in 0..100 {
        let x = cantor_point(rng.next_u64());
        let f = iso.phi(&x, 10).unwrap();
        let back = iso.psi(&f, 10).unwrap();
        let d1 = point_dist(&space, &x, &back, 9).unwrap();
        let d2 = point_dist(&space, &back, &x, 9).unwrap();
        assert!(d1 <= pow2(-8), "round {round}: ψφ distance {d1}");
        assert!(d2 <= pow2(-8), "round {round}: φψ distance {d2}");
        let f2 = iso.phi(&back, 10).unwrap();
        assert_eq!(
            filters_equal(&iso.poset, &f, &f2, 8),
            FilterEq::EqualAtDepth,
            "round {round}: φψ filter"
        );
    }
    finish(6, "qm_to_uf round trip", started, Duration::from_secs(30));
}

/// 7. Products: 50 seeded pairs of finite posets satisfy
/// |UF(R)| = |UF(P)|·|UF(Q)| and the pairing/projection identities.
#[test]
fn criterion_07_products() {
    let started = Instant::now();
    let mut rng = Rng::new(77);
    for round in 0..50 {
        let (n, m) = (1 + rng.below(5), 1 + rng.below(5));
        let p = random_preorder_with(&mut rng, n);
        let q = random_preorder_with(&mut rng, m);
        let prod = product(&p, &q);
        let count = uf_count_finite(&prod.poset).unwrap();
        assert_eq!(
            count,
            uf_count_finite(&p).unwrap() * uf_count_finite(&q).unwrap(),
            "round {round}: |UF| product law"
        );
        let depth = (n + m) as usize + 2;
        let uf_p = enumerate_filters(&p).unwrap().unbounded;
        let uf_q = enumerate_filters(&q).unwrap().unbounded;
        for f in &uf_p {
            for g in &uf_q {
                let sf = stream_for_set(&p, f).unwrap();
                let sg = stream_for_set(&q, g).unwrap();
                let h = prod.pair_streams(&sf, &sg);
                let pt = qpk_core::codes::Point::PosetFilter {
                    poset: prod.poset.clone(),
                    stream: h.clone(),
                };
                let left = match prod.proj_left.build_point(&pt, depth).unwrap() {
                    qpk_core::codes::Point::PosetFilter { stream, .. } => stream,
                    other => panic!("{other:?}"),
                };
                let right = match prod.proj_right.build_point(&pt, depth).unwrap() {
                    qpk_core::codes::Point::PosetFilter { stream, .. } => stream,
                    other => panic!("{other:?}"),
                };
                assert_eq!(filters_equal(&p, &sf, &left, depth), FilterEq::EqualAtDepth);
                assert_eq!(filters_equal(&q, &sg, &right, depth), FilterEq::EqualAtDepth);
                let h2 = prod.pair_streams(&left, &right);
                assert_eq!(
                    filters_equal(&prod.poset, &h, &h2, depth),
                    FilterEq::EqualAtDepth,
                    "round {round}: pairing identity"
                );
            }
        }
    }
    finish(7, "products", started, Duration::from_secs(30));
}

/// 8. pn_limit on 200 seeded effective left-Cauchy sequences: both point
/// invariants hold and d(a_{n+1}, limit) < 2^-n exactly for n <= 12.
#[test]
fn criterion_08_pn_limit() {
    let started = Instant::now();
    let mut rng = Rng::new(88);
    for round in 0..200 {
        // target set plus noise strictly above the modulus line
        let target = FinSet::from_mask(rng.below(1 << 15));
        let mut stages: Vec<FinSet> = Vec::new();
        for i in 0..16u64 {
            let mut v = target.restrict(i.saturating_sub(1)).elems().to_vec();
            for extra in i..16 {
                if rng.chance(1, 3) {
                    v.push(extra);
                }
            }
            stages.push(FinSet::new(v));
        }
        stages.push(target.clone());
        let seq = FinSetSeq::from_vec(stages);
        seq.check_left_cauchy(18).unwrap();
        let limit = pn_limit(&seq, 18).unwrap();
        limit.check_invariants(18).unwrap();
        for n in 0..=12usize {
            let d = d_fin_to_point_exact(&seq.at(n + 1), &limit).unwrap();
            assert!(
                d < pow2(-(n as i64)),
                "round {round}: d(a_{}, limit) = {d} not < 2^-{n}",
                n + 1
            );
        }
    }
    finish(8, "pn_limit", started, Duration::from_secs(10));
}

/// 9. tree_to_pi02 on 100 seeded finite trees of depth <= 6: stage-6
/// nonemptiness of Y ∩ N_{(n,0)} iff a depth-6 path exists.
#[test]
fn criterion_09_tree_to_pi02() {
    let started = Instant::now();
    let mut rng = Rng::new(99);
    for round in 0..100 {
        let seed = rng.next_u64();
        let keep_rate = 1 + rng.below(5);
        let trees = qpk_core::codes::TreeFamily::new(2, 3, move |n, sigma| {
            if sigma.len() > 6 {
                return false;
            }
            (1..=sigma.len()).all(|l| {
                let mut h = seed ^ n.wrapping_mul(0x517c_c1b7_2722_0a95);
                for &s in &sigma[..l] {
                    h = h.wrapping_mul(6364136223846793005).wrapping_add(s + 1);
                }
                h % 6 < keep_rate
            })
        });
        let code = qpk_core::codes::tree_to_pi02(&trees, 6);
        for n in 0..2 {
            assert_eq!(
                qpk_core::codes::tree_pi02_nonempty_at(&trees, &code, n, 6),
                trees.has_node_at_depth(n, 6),
                "round {round}, tree {n}"
            );
        }
    }
    finish(9, "tree_to_pi02", started, Duration::from_secs(20));
}

/// 10. CLI determinism and parser totality: byte-identical reports across
/// two runs per command, and a 10,000-case grammar fuzz with zero crashes.
#[test]
fn criterion_10_cli_determinism_and_totality() {
    let started = Instant::now();
    let dir = std::env::temp_dir().join("qpk-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("demo.qpk");
    std::fs::write(
        &file,
        "poset chain3 { elem a b c; order b < a; order c < b; }\n\
         frame S { gen g; rel top => g; }\n\
         pi02 zero { pair open{ {0} } coA open{ {} }; }\n",
    )
    .unwrap();
    let path = file.to_str().unwrap().to_string();
    let commands: Vec<Vec<String>> = vec![
        vec!["parse".into(), path.clone()],
        vec!["enumerate".into(), "filters".into(), path.clone(), "chain3".into()],
        vec![
            "enumerate".into(),
            "filters".into(),
            path.clone(),
            "chain3".into(),
            "--kind".into(),
            "uf".into(),
            "--format".into(),
            "json".into(),
        ],
        vec!["prove".into(), path.clone(), "S".into(), "top <= g".into(), "--depth".into(), "8".into()],
        vec!["prove".into(), path.clone(), "S".into(), "g <= bot".into()],
        vec!["check".into(), "quasi-metric".into(), "pn".into(), "--exhaustive".into(), "5".into()],
        vec![
            "check".into(),
            "quasi-metric".into(),
            "lower-dyadic".into(),
            "--samples".into(),
            "24".into(),
            "--seed".into(),
            "5".into(),
            "--format".into(),
            "json".into(),
        ],
        vec!["check".into(), "handy".into(), path.clone(), "chain3".into()],
        vec![
            "check".into(),
            "frame-triad".into(),
            path.clone(),
            "S".into(),
            "--samples".into(),
            "40".into(),
            "--seed".into(),
            "9".into(),
        ],
        vec![
            "check".into(),
            "roundtrip".into(),
            "qm-uf".into(),
            "cantor".into(),
            "--samples".into(),
            "10".into(),
            "--seed".into(),
            "3".into(),
        ],
        vec!["convert".into(), "handyfy-uf".into(), path.clone(), "chain3".into(), "--bound".into(), "4".into()],
        vec!["convert".into(), "frame-to-pi02".into(), path.clone(), "S".into()],
        vec!["convert".into(), "qm-to-uf".into(), "cantor".into(), "--bound".into(), "4".into()],
        vec!["bogus-command".into()],
    ];
    for args in &commands {
        let a = commands::run(args);
        let b = commands::run(args);
        assert_eq!(a.output, b.output, "nondeterministic output for {args:?}");
        assert_eq!(a.exit, b.exit);
    }
    // exit codes for the prove family
    let proved = commands::run(&["prove".into(), path.clone(), "S".into(), "top <= g".into()]);
    assert_eq!(proved.exit, 0);
    let refuted = commands::run(&["prove".into(), path.clone(), "S".into(), "g <= bot".into()]);
    assert_eq!(refuted.exit, 1);
    let usage = commands::run(&["bogus-command".into()]);
    assert!(usage.exit >= 10);

    // grammar fuzz: the parser must reject or accept, never crash, and
    // rejections carry a position
    let vocab = [
        "poset", "frame", "pi02", "point", "expr", "goal", "elem", "order", "gen", "rel",
        "pair", "open", "coA", "finite", "rule", "builtin", "show", "top", "bot", "{", "}",
        "(", ")", ";", ",", "<", "<=", "=>", "&", "|", "x", "g0", "0", "17", "9999999",
        "chain3", "#", "\n", "\u{3bb}", "\"", "\\",
    ];
    let mut rng = Rng::new(1010);
    for case in 0..10_000 {
        let len = rng.below(40);
        let mut text = String::new();
        for _ in 0..len {
            text.push_str(vocab[rng.below(vocab.len() as u64) as usize]);
            if rng.chance(1, 2) {
                text.push(' ');
            }
        }
        match qpk_cli::dsl::parse(&text) {
            Ok(_) => {}
            Err(e) => {
                assert!(e.line >= 1, "case {case}: error without a position");
                assert!(!e.expected.is_empty());
            }
        }
    }
    finish(
        10,
        "CLI determinism and parser totality",
        started,
        Duration::from_secs(60),
    );
}
