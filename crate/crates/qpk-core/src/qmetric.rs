//! Quasi-metric space codes: countable carriers with exact (or approximable)
//! rational distances, points as modulus-`2^{-n}` Cauchy sequences, Smyth
//! limits, ball codes, and the `d'` relativization metric for Π⁰₂ subspaces.
//!
//! Fixture metrics are exact rationals wherever possible so order comparisons
//! stay decidable; the approximate regime threads explicit `(lo, hi)` bounds
//! instead of rounding.

use crate::codes::{BasicOpen, BorelCode, Enumeration, Membership, OpenCode, Pi02Code, Point, SpaceTag};
use crate::pn::{FinSet, FinSetSeq};
use crate::rat::{pow2, rat_max, rat_min, rat_zero, Rat};
use crate::Verdict3;
use num_traits::Zero;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QmError {
    #[error("space has no limit operator")]
    NoLimitOperator,
    #[error("sequence is not effectively left-Cauchy at indices ({0}, {1})")]
    NotLeftCauchy(usize, usize),
    #[error("point violates its Cauchy modulus at indices ({0}, {1})")]
    InvalidPoint(usize, usize),
    #[error("operation needs an exact rational metric")]
    InexactMetric,
    #[error("point is certified outside the subspace")]
    PointOutsideY,
    #[error("no distance oracle for constituent {0}")]
    OracleMissing(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

enum DistKind {
    Exact(Box<dyn Fn(u64, u64) -> Rat + Send + Sync>),
    /// Returns a value within `2^{-prec}` of the true distance.
    Approx(Box<dyn Fn(u64, u64, i64) -> Rat + Send + Sync>),
}

type LimitOp = Box<dyn Fn(&LeftCauchySeq, usize) -> Result<QmPoint, QmError> + Send + Sync>;

struct QmInner {
    name: String,
    carrier_size: Option<u64>,
    valid: Box<dyn Fn(u64) -> bool + Send + Sync>,
    dist: DistKind,
    limit: Option<LimitOp>,
    label: Box<dyn Fn(u64) -> String + Send + Sync>,
    symmetric: bool,
}

/// A coded quasi-metric space: countable indexed carrier plus distance.
#[derive(Clone)]
pub struct QmSpaceCode {
    inner: Arc<QmInner>,
}

impl fmt::Debug for QmSpaceCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QmSpaceCode({})", self.inner.name)
    }
}

impl QmSpaceCode {
    pub fn exact(
        name: impl Into<String>,
        carrier_size: Option<u64>,
        d: impl Fn(u64, u64) -> Rat + Send + Sync + 'static,
    ) -> Self {
        QmSpaceCode {
            inner: Arc::new(QmInner {
                name: name.into(),
                carrier_size,
                valid: Box::new(|_| true),
                dist: DistKind::Exact(Box::new(d)),
                limit: None,
                label: Box::new(|i| i.to_string()),
                symmetric: false,
            }),
        }
    }

    pub fn exact_with_limit(
        name: impl Into<String>,
        carrier_size: Option<u64>,
        d: impl Fn(u64, u64) -> Rat + Send + Sync + 'static,
        limit: impl Fn(&LeftCauchySeq, usize) -> Result<QmPoint, QmError> + Send + Sync + 'static,
    ) -> Self {
        QmSpaceCode {
            inner: Arc::new(QmInner {
                name: name.into(),
                carrier_size,
                valid: Box::new(|_| true),
                dist: DistKind::Exact(Box::new(d)),
                limit: Some(Box::new(limit)),
                label: Box::new(|i| i.to_string()),
                symmetric: false,
            }),
        }
    }

    /// Approximate metric: `d(a, b, prec)` must land within `2^{-prec}` of
    /// the true distance.
    pub fn approx(
        name: impl Into<String>,
        carrier_size: Option<u64>,
        d: impl Fn(u64, u64, i64) -> Rat + Send + Sync + 'static,
    ) -> Self {
        QmSpaceCode {
            inner: Arc::new(QmInner {
                name: name.into(),
                carrier_size,
                valid: Box::new(|_| true),
                dist: DistKind::Approx(Box::new(d)),
                limit: None,
                label: Box::new(|i| i.to_string()),
                symmetric: false,
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn tag(&self) -> SpaceTag {
        SpaceTag::Qm(self.inner.name.clone())
    }

    pub fn symmetric(&self) -> bool {
        self.inner.symmetric
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.inner.dist, DistKind::Exact(_))
    }

    pub fn has_limit(&self) -> bool {
        self.inner.limit.is_some()
    }

    pub fn is_valid(&self, i: u64) -> bool {
        if let Some(n) = self.inner.carrier_size {
            if i >= n {
                return false;
            }
        }
        (self.inner.valid)(i)
    }

    pub fn carrier_below(&self, cutoff: u64) -> Vec<u64> {
        let hi = match self.inner.carrier_size {
            Some(n) => n.min(cutoff),
            None => cutoff,
        };
        (0..hi).filter(|&i| (self.inner.valid)(i)).collect()
    }

    pub fn label(&self, i: u64) -> String {
        (self.inner.label)(i)
    }

    /// Distance at the requested precision (exact metrics ignore it).
    pub fn dist(&self, a: u64, b: u64, prec: i64) -> Rat {
        match &self.inner.dist {
            DistKind::Exact(d) => d(a, b),
            DistKind::Approx(d) => d(a, b, prec),
        }
    }

    pub fn dist_exact(&self, a: u64, b: u64) -> Option<Rat> {
        match &self.inner.dist {
            DistKind::Exact(d) => Some(d(a, b)),
            DistKind::Approx(_) => None,
        }
    }

    /// Two-sided bounds on the distance at the requested precision.
    pub fn dist_bounds(&self, a: u64, b: u64, prec: i64) -> (Rat, Rat) {
        match &self.inner.dist {
            DistKind::Exact(d) => {
                let v = d(a, b);
                (v.clone(), v)
            }
            DistKind::Approx(d) => {
                let v = d(a, b, prec);
                let e = pow2(-prec);
                (rat_max(v.clone() - e.clone(), rat_zero()), v + e)
            }
        }
    }

    pub fn limit(&self, seq: &LeftCauchySeq, depth: usize) -> Result<QmPoint, QmError> {
        match &self.inner.limit {
            Some(op) => op(seq, depth),
            None => Err(QmError::NoLimitOperator),
        }
    }
}

#[derive(Clone)]
enum SeqRep {
    EventuallyConstant(Arc<Vec<u64>>),
    Rule(Arc<dyn Fn(usize) -> u64 + Send + Sync>),
}

impl SeqRep {
    fn at(&self, n: usize) -> u64 {
        match self {
            SeqRep::EventuallyConstant(v) => v[n.min(v.len() - 1)],
            SeqRep::Rule(f) => f(n),
        }
    }

    fn constant_from(&self) -> Option<usize> {
        match self {
            SeqRep::EventuallyConstant(v) => Some(v.len() - 1),
            SeqRep::Rule(_) => None,
        }
    }
}

/// A point: carrier sequence with `d̂(a_n, a_m) < 2^{-n}` for m > n.
#[derive(Clone)]
pub struct QmPoint {
    rep: SeqRep,
}

impl QmPoint {
    pub fn constant(a: u64) -> QmPoint {
        QmPoint::from_vec(vec![a])
    }

    pub fn from_vec(v: Vec<u64>) -> QmPoint {
        assert!(!v.is_empty());
        QmPoint {
            rep: SeqRep::EventuallyConstant(Arc::new(v)),
        }
    }

    pub fn from_fn(f: impl Fn(usize) -> u64 + Send + Sync + 'static) -> QmPoint {
        QmPoint {
            rep: SeqRep::Rule(Arc::new(f)),
        }
    }

    pub fn at(&self, n: usize) -> u64 {
        self.rep.at(n)
    }

    pub fn constant_from(&self) -> Option<usize> {
        self.rep.constant_from()
    }

    /// Verifies the modulus on a prefix (strict bounds, exact spaces).
    pub fn check_modulus(&self, space: &QmSpaceCode, depth: usize) -> Result<(), QmError> {
        for n in 0..depth {
            for m in (n + 1)..=depth {
                let (lo, _) = hat_d_bounds(space, self.at(n), self.at(m), depth as i64 + 4);
                if lo >= pow2(-(n as i64)) {
                    return Err(QmError::InvalidPoint(n, m));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for QmPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "QmPoint[{},{},{},..]",
            self.at(0),
            self.at(1),
            self.at(2)
        )
    }
}

/// A candidate left-Cauchy sequence: `d(a_n, a_m) < 2^{-n}` for 0 < n < m.
#[derive(Clone)]
pub struct LeftCauchySeq {
    rep: SeqRep,
}

impl LeftCauchySeq {
    pub fn from_vec(v: Vec<u64>) -> Self {
        assert!(!v.is_empty());
        LeftCauchySeq {
            rep: SeqRep::EventuallyConstant(Arc::new(v)),
        }
    }

    pub fn from_fn(f: impl Fn(usize) -> u64 + Send + Sync + 'static) -> Self {
        LeftCauchySeq {
            rep: SeqRep::Rule(Arc::new(f)),
        }
    }

    pub fn at(&self, n: usize) -> u64 {
        self.rep.at(n)
    }

    pub fn constant_from(&self) -> Option<usize> {
        self.rep.constant_from()
    }

    pub fn check(&self, space: &QmSpaceCode, depth: usize) -> Result<(), QmError> {
        for n in 1..depth {
            for m in (n + 1)..=depth {
                let (lo, _) = space.dist_bounds(self.at(n), self.at(m), depth as i64 + 4);
                if lo >= pow2(-(n as i64)) {
                    return Err(QmError::NotLeftCauchy(n, m));
                }
            }
        }
        Ok(())
    }
}

fn hat_d_bounds(space: &QmSpaceCode, a: u64, b: u64, prec: i64) -> (Rat, Rat) {
    let (lo1, hi1) = space.dist_bounds(a, b, prec);
    let (lo2, hi2) = space.dist_bounds(b, a, prec);
    (rat_max(lo1, lo2), rat_max(hi1, hi2))
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

/// `P(N)` with carrier = finite sets coded as bitmasks.
pub fn pn_space() -> QmSpaceCode {
    QmSpaceCode {
        inner: Arc::new(QmInner {
            name: "pn".into(),
            carrier_size: None,
            valid: Box::new(|_| true),
            dist: DistKind::Exact(Box::new(|a, b| {
                crate::pn::d_exact_fin(&FinSet::from_mask(a), &FinSet::from_mask(b))
            })),
            limit: Some(Box::new(|seq, depth| {
                let Some(ci) = seq.constant_from() else {
                    return Err(QmError::Unsupported(
                        "pn limit needs an eventually constant sequence".into(),
                    ));
                };
                let fins: Vec<FinSet> = (0..=ci).map(|n| FinSet::from_mask(seq.at(n))).collect();
                let fseq = FinSetSeq::from_vec(fins);
                fseq.check_left_cauchy(depth.max(ci + 2))
                    .map_err(|e| match e {
                        crate::pn::PnError::NotLeftCauchy(n, m) => QmError::NotLeftCauchy(n, m),
                        other => QmError::Unsupported(other.to_string()),
                    })?;
                let limit = crate::pn::pn_limit(&fseq, depth.max(ci + 2))
                    .map_err(|e| QmError::Unsupported(e.to_string()))?;
                // the denoted set is finite here; b_n = L ∩ {0..n}
                let max_elem = (0..=ci)
                    .filter_map(|n| FinSet::from_mask(seq.at(n)).max_elem())
                    .max()
                    .unwrap_or(0);
                let horizon = max_elem as usize + 2;
                let denoted = limit.stage(horizon.max(ci + 2));
                let masks: Vec<u64> = (0..=horizon)
                    .map(|n| denoted.restrict(n as u64).to_mask().unwrap())
                    .collect();
                Ok(QmPoint::from_vec(masks))
            })),
            label: Box::new(|i| FinSet::from_mask(i).to_string()),
            symmetric: false,
        }),
    }
}

fn cantor_word(n: u64) -> Vec<bool> {
    let m = n + 1;
    let bits = 63 - m.leading_zeros() as u64;
    (0..bits).rev().map(|k| m >> k & 1 == 1).collect()
}

fn cantor_lcp(a: u64, b: u64) -> usize {
    let (u, v) = (cantor_word(a), cantor_word(b));
    u.iter().zip(&v).take_while(|(x, y)| x == y).count()
}

/// Cantor space as finite binary words approximating infinite sequences;
/// the metric `2^{-lcp}` is symmetric, so left-Cauchy and `d̂`-Cauchy agree.
pub fn cantor_space() -> QmSpaceCode {
    QmSpaceCode {
        inner: Arc::new(QmInner {
            name: "cantor".into(),
            carrier_size: None,
            valid: Box::new(|_| true),
            dist: DistKind::Exact(Box::new(|a, b| {
                if a == b {
                    rat_zero()
                } else {
                    pow2(-(cantor_lcp(a, b) as i64))
                }
            })),
            limit: Some(Box::new(|seq, _depth| {
                let s = seq.clone();
                Ok(QmPoint::from_fn(move |n| s.at(n + 1)))
            })),
            label: Box::new(|i| {
                let w: String = cantor_word(i)
                    .iter()
                    .map(|b| if *b { '1' } else { '0' })
                    .collect();
                if w.is_empty() {
                    "ε".into()
                } else {
                    w
                }
            }),
            symmetric: true,
        }),
    }
}

/// Dyadic rational in `[0,1]` for a carrier index: 0, 1, then level by level.
pub fn dyadic_of(i: u64) -> Rat {
    match i {
        0 => rat_zero(),
        1 => Rat::from_integer(1.into()),
        _ => {
            let mut rest = i - 2;
            let mut level = 1u64;
            loop {
                let count = 1u64 << (level - 1);
                if rest < count {
                    let numer = 2 * rest + 1;
                    return Rat::new(numer.into(), (1u64 << level).into());
                }
                rest -= count;
                level += 1;
            }
        }
    }
}

/// The lower reals on dyadics in `[0,1]`: `d(p,q) = max(p-q, 0)`.
pub fn lower_dyadic_space() -> QmSpaceCode {
    QmSpaceCode {
        inner: Arc::new(QmInner {
            name: "lower-dyadic".into(),
            carrier_size: None,
            valid: Box::new(|_| true),
            dist: DistKind::Exact(Box::new(|a, b| {
                rat_max(dyadic_of(a) - dyadic_of(b), rat_zero())
            })),
            limit: Some(Box::new(|seq, _| match seq.constant_from() {
                Some(ci) => Ok(QmPoint::constant(seq.at(ci))),
                None => Err(QmError::Unsupported(
                    "lower-dyadic limit needs an eventually constant sequence".into(),
                )),
            })),
            label: Box::new(|i| crate::rat::rat_display(&dyadic_of(i))),
            symmetric: false,
        }),
    }
}

/// Sierpiński space: carrier {0 = ⊥, 1 = ⊤}, `d(⊤,⊥) = 1`.
pub fn sierpinski_space() -> QmSpaceCode {
    QmSpaceCode {
        inner: Arc::new(QmInner {
            name: "sierpinski".into(),
            carrier_size: Some(2),
            valid: Box::new(|i| i < 2),
            dist: DistKind::Exact(Box::new(|a, b| {
                if a == 1 && b == 0 {
                    Rat::from_integer(1.into())
                } else {
                    rat_zero()
                }
            })),
            limit: Some(Box::new(|seq, _| match seq.constant_from() {
                Some(ci) => Ok(QmPoint::constant(seq.at(ci))),
                None => Err(QmError::Unsupported(
                    "sierpinski limit needs an eventually constant sequence".into(),
                )),
            })),
            label: Box::new(|i| if i == 1 { "top".into() } else { "bot".into() }),
            symmetric: false,
        }),
    }
}

pub fn fixture_by_name(name: &str) -> Option<QmSpaceCode> {
    match name {
        "pn" => Some(pn_space()),
        "cantor" => Some(cantor_space()),
        "lower-dyadic" => Some(lower_dyadic_space()),
        "sierpinski" => Some(sierpinski_space()),
        _ => None,
    }
}

pub const FIXTURE_NAMES: [&str; 4] = ["pn", "cantor", "lower-dyadic", "sierpinski"];

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default)]
pub struct AxiomsReport {
    pub nonneg: Vec<(u64, u64)>,
    pub triangle: Vec<(u64, u64, u64)>,
}

impl AxiomsReport {
    pub fn ok(&self) -> bool {
        self.nonneg.is_empty() && self.triangle.is_empty()
    }
}

/// Checks nonnegativity and the triangle inequality on all sample triples,
/// within tolerance `2^{-precision+1}` for approximate metrics (exact
/// metrics are held to zero tolerance).
pub fn axioms_check(space: &QmSpaceCode, samples: &[u64], precision: i64) -> AxiomsReport {
    let tol = if space.is_exact() {
        rat_zero()
    } else {
        pow2(-precision + 1)
    };
    let mut rep = AxiomsReport::default();
    for &a in samples {
        for &b in samples {
            let dab = space.dist(a, b, precision);
            if dab < -tol.clone() {
                rep.nonneg.push((a, b));
            }
            for &c in samples {
                let dbc = space.dist(b, c, precision);
                let dac = space.dist(a, c, precision);
                if dab.clone() + dbc + tol.clone() < dac {
                    rep.triangle.push((a, b, c));
                }
            }
        }
    }
    rep
}

/// `d̂(a,b) = max{d(a,b), d(b,a)}` at the requested precision.
pub fn hat_d(space: &QmSpaceCode, a: u64, b: u64, precision: i64) -> Rat {
    rat_max(
        space.dist(a, b, precision),
        space.dist(b, a, precision),
    )
}

/// Point-level distance, within `2^{-precision}` of the true value.
/// Validates the Cauchy moduli on the prefix it reads.
pub fn point_dist(
    space: &QmSpaceCode,
    x: &QmPoint,
    y: &QmPoint,
    precision: i64,
) -> Result<Rat, QmError> {
    let n = precision.max(0) as usize + 2;
    x.check_modulus(space, n + 1)?;
    y.check_modulus(space, n + 1)?;
    Ok(space.dist(x.at(n + 1), y.at(n + 1), precision + 4))
}

/// Three-valued point equality at a precision: `Yes` when both directed
/// distances are certified `< 2^{-precision}`, `No` when one is certified
/// `> 2^{-precision+1}`.
pub fn points_equal_at(
    space: &QmSpaceCode,
    x: &QmPoint,
    y: &QmPoint,
    precision: i64,
) -> Result<Verdict3, QmError> {
    let n = precision.max(0) as usize + 2;
    x.check_modulus(space, n + 1)?;
    y.check_modulus(space, n + 1)?;
    let err = pow2(-(n as i64)); // index-(n+1) evaluation error
    let eval = |p: &QmPoint, q: &QmPoint| {
        let (lo, hi) = space.dist_bounds(p.at(n + 1), q.at(n + 1), precision + 6);
        (rat_max(lo - err.clone(), rat_zero()), hi + err.clone())
    };
    let (lo_xy, hi_xy) = eval(x, y);
    let (lo_yx, hi_yx) = eval(y, x);
    let small = pow2(-precision);
    let big = pow2(-precision + 1);
    if hi_xy < small && hi_yx < small {
        Ok(Verdict3::Yes)
    } else if lo_xy > big || lo_yx > big {
        Ok(Verdict3::No)
    } else {
        Ok(Verdict3::Unknown)
    }
}

/// Limit of an effective left-Cauchy sequence via the space's limit operator.
pub fn smyth_limit(
    space: &QmSpaceCode,
    seq: &LeftCauchySeq,
    check_depth: usize,
) -> Result<QmPoint, QmError> {
    seq.check(space, check_depth)?;
    space.limit(seq, check_depth)
}

pub enum BallCenter {
    Carrier(u64),
    Point(QmPoint),
}

/// Open code for `B_d(center, r)`.
///
/// A carrier-centered ball is the singleton code `{(0, a, r)}`; a
/// point-centered ball enumerates the triples with
/// `d(a_n, a) + l + 2^{-n} < r`.
pub fn ball_code(space: &QmSpaceCode, center: &BallCenter, r: &Rat) -> OpenCode {
    assert!(*r > rat_zero());
    match center {
        BallCenter::Carrier(a) => OpenCode::new(
            space.tag(),
            Enumeration::explicit(vec![BasicOpen::qm_ball(space, *a, r.clone())]),
        ),
        BallCenter::Point(x) => {
            let space_c = space.clone();
            let x = x.clone();
            let r = r.clone();
            OpenCode::new(
                space.tag(),
                Enumeration::rule_open(move |stage| {
                    let mut basics = Vec::new();
                    for n in 0..stage {
                        let an = x.at(n);
                        for a in space_c.carrier_below(stage as u64) {
                            for k in 0..stage {
                                let l = pow2(-(k as i64));
                                let (_, hi) =
                                    space_c.dist_bounds(an, a, stage as i64 + 4);
                                if hi + l.clone() + pow2(-(n as i64)) < r {
                                    let b = BasicOpen::qm_ball(&space_c, a, l.clone());
                                    if !basics.contains(&b) {
                                        basics.push(b);
                                    }
                                }
                            }
                        }
                    }
                    basics
                }),
            )
        }
    }
}

/// The `d̂`-ball `{y : d(x,y) < r ∧ d(y,x) < r}` as a rank-2 Borel code:
/// a union over grid rationals `q < r` of (ball) minus (the open set
/// `{y : d(y,x) > q}`), whose basics `B_d(a,ε)` are certified by
/// `d(a,x) >= q + ε`. Enumerations close at `bound`, the documented
/// desk-scale reading of the grid.
pub fn hat_ball_sigma2(space: &QmSpaceCode, x: &QmPoint, r: &Rat, bound: usize) -> BorelCode {
    let mut pairs = Vec::new();
    for i in 0..bound {
        let q = r.clone() * (Rat::from_integer(1.into()) - pow2(-(i as i64 + 1)));
        let ball = BorelCode::from_open(ball_with_bound(space, x, r, bound));
        let beyond = BorelCode::from_open(beyond_q_open(space, x, &q, bound));
        pairs.push((ball, beyond));
    }
    BorelCode::diffs(space.tag(), 2, Enumeration::explicit(pairs))
}

/// Like the point-centered `ball_code` but precomputed to a completeness
/// bound so the rank-2 construction can certify both sides on explicit
/// fixtures.
fn ball_with_bound(space: &QmSpaceCode, x: &QmPoint, r: &Rat, bound: usize) -> OpenCode {
    let mut basics = Vec::new();
    for n in 0..bound {
        let an = x.at(n);
        for a in space.carrier_below(bound as u64) {
            let (_, hi) = space.dist_bounds(an, a, bound as i64 + 4);
            let slack = r.clone() - hi - pow2(-(n as i64));
            for k in 0..bound {
                let l = pow2(-(k as i64));
                if l < slack {
                    let bas = BasicOpen::qm_ball(space, a, l);
                    if !basics.contains(&bas) {
                        basics.push(bas);
                    }
                }
            }
        }
    }
    OpenCode::new(space.tag(), Enumeration::full(basics))
}

/// Open code for `{y : d(y, x) > q}`: basics `B_d(a, ε)` with
/// `d(a, x) >= q + ε` certified at the working precision. Precomputed to
/// the bound.
fn beyond_q_open(space: &QmSpaceCode, x: &QmPoint, q: &Rat, bound: usize) -> OpenCode {
    let mut basics = Vec::new();
    let n = bound + 2;
    for a in space.carrier_below(bound as u64) {
        let (lo, _) = space.dist_bounds(a, x.at(n + 1), n as i64 + 4);
        let lo = lo - pow2(-(n as i64)); // point-evaluation error
        for k in 0..bound {
            let eps = pow2(-(k as i64));
            if lo >= q.clone() + eps.clone() {
                let bas = BasicOpen::qm_ball(space, a, eps);
                if !basics.contains(&bas) {
                    basics.push(bas);
                }
            }
        }
    }
    OpenCode::new(space.tag(), Enumeration::full(basics))
}

/// A Smyth-separable subset, coded by a sequence of points: `x` belongs when
/// some subsequence is effectively left-Cauchy toward `x` with
/// `d(x_n, x) < 2^{-n+1}`.
#[derive(Clone)]
pub struct SmythSeparable {
    pub seq: Vec<QmPoint>,
}

impl SmythSeparable {
    /// Greedy three-valued membership at a depth: selects witnesses
    /// `x_n` from the coded sequence with `d(x_n, x)` certified below
    /// `2^{-n+1}`; `Yes` when the selection reaches the depth.
    pub fn member_at(&self, space: &QmSpaceCode, x: &QmPoint, depth: usize) -> Verdict3 {
        let prec = depth as i64 + 6;
        let eval_idx = depth + 2;
        for n in 0..depth {
            let bound = pow2(-(n as i64) + 1);
            let found = self.seq.iter().any(|s| {
                let (_, hi) = space.dist_bounds(s.at(eval_idx), x.at(eval_idx), prec);
                hi + pow2(-(eval_idx as i64 - 1)) < bound
            });
            if !found {
                return Verdict3::Unknown;
            }
        }
        Verdict3::Yes
    }
}

/// A `d̂`-separably closed subset, coded by a sequence of points: `x` belongs
/// when every radius admits a witness at `d̂`-distance below it.
#[derive(Clone)]
pub struct HatSeparablyClosed {
    pub seq: Vec<QmPoint>,
}

impl HatSeparablyClosed {
    pub fn member_at(&self, space: &QmSpaceCode, x: &QmPoint, precision: i64) -> Verdict3 {
        let eval_idx = precision.max(0) as usize + 2;
        let err = pow2(-(eval_idx as i64 - 1));
        for j in 0..precision.max(1) {
            let r = pow2(-j);
            let found = self.seq.iter().any(|c| {
                let (_, hi) = hat_d_bounds(space, x.at(eval_idx), c.at(eval_idx), precision + 6);
                hi + err.clone() < r
            });
            if !found {
                return Verdict3::Unknown;
            }
        }
        Verdict3::Yes
    }
}

/// Two-sided rational bounds on `d(·, F_i)` for a closed constituent;
/// `None` means the closed set is empty (distance `+∞`).
pub type DistOracle = Arc<dyn Fn(&QmPoint, i64) -> Option<(Rat, Rat)> + Send + Sync>;

/// A Π⁰₂ code over a quasi-metric space together with per-constituent
/// distance oracles to the closed sets `F_i = X \ U_i`. The oracles are
/// supplied per fixture: the paper's `d(y, F_i)` is not computable from an
/// arbitrary closed code, and this is the honest boundary of the
/// construction.
#[derive(Clone)]
pub struct Pi02WithOracles {
    pub code: Pi02Code,
    pub oracles: Vec<Option<DistOracle>>,
}

/// The relativization metric `d' = d + Σ_i d_i` on a Π⁰₂ subspace, truncated
/// at `i > precision` (the tail is below `2^{-precision}` since
/// `d_i <= 2^{-i}`). Result is within `2^{-precision+2}` of the true value.
pub fn dprime(
    space: &QmSpaceCode,
    y: &Pi02WithOracles,
    x: &QmPoint,
    ypt: &QmPoint,
    precision: i64,
) -> Result<Rat, QmError> {
    let stage = precision.max(1) as usize + 4;
    let px = Point::Qm {
        space: space.clone(),
        point: x.clone(),
    };
    let py = Point::Qm {
        space: space.clone(),
        point: ypt.clone(),
    };
    for p in [&px, &py] {
        if y.code.member(p, stage).map_err(|e| QmError::Unsupported(e.to_string()))?
            == Membership::Out
        {
            return Err(QmError::PointOutsideY);
        }
    }

    let oracle_prec = precision + 8;
    let n = precision.max(0) as usize + 3;
    x.check_modulus(space, n + 1)?;
    ypt.check_modulus(space, n + 1)?;
    let base = space.dist(x.at(n + 1), ypt.at(n + 1), precision + 6);
    let mut total = base;

    let (pairs, _) = y.code.pairs.at(stage);
    let terms = pairs.len().min(precision.max(0) as usize + 1);
    for i in 0..terms {
        let oracle = y.oracles.get(i).cloned().flatten();
        // side of x: inside U_i (positive distance to F_i) or not
        let dx = match &oracle {
            Some(f) => f(x, oracle_prec),
            None => return Err(QmError::OracleMissing(i)),
        };
        let dy = match &oracle {
            Some(f) => f(ypt, oracle_prec),
            None => return Err(QmError::OracleMissing(i)),
        };
        let cap = pow2(-(i as i64));
        let term = match (dx, dy) {
            // F_i empty: both reciprocal terms vanish
            (None, None) => rat_zero(),
            (None, Some(_)) | (Some(_), None) => {
                return Err(QmError::Unsupported(
                    "oracle disagrees about emptiness of F_i".into(),
                ))
            }
            (Some((lx, hx)), Some((ly, hy))) => {
                let x_in_u = lx > rat_zero();
                let x_in_f = hx.is_zero();
                let y_in_u = ly > rat_zero();
                let y_in_f = hy.is_zero();
                if !(x_in_u || x_in_f) || !(y_in_u || y_in_f) {
                    return Err(QmError::Unsupported(
                        "oracle bounds do not decide the constituent side".into(),
                    ));
                }
                if !x_in_u {
                    rat_zero()
                } else if y_in_f {
                    cap
                } else {
                    // min(2^{-i}, max(0, 1/d(y,F_i) - 1/d(x,F_i)))
                    let recip_y = (hy.recip() + ly.recip()) / Rat::from_integer(2.into());
                    let recip_x = (hx.recip() + lx.recip()) / Rat::from_integer(2.into());
                    rat_min(cap, rat_max(recip_y - recip_x, rat_zero()))
                }
            }
        };
        total += term;
    }
    Ok(total)
}
