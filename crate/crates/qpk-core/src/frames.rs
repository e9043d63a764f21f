//! Countably presented frames: expressions as finite joins of finite meets,
//! the lattice preorder, the least congruence preorder via saturation, the
//! deductive relation with proof trees and countermodel extraction, and the
//! two-valued point semantics that serves as the spatiality oracle.

use crate::Verdict3;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub type GenId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("generator set has {0} elements, exceeding the enumeration bound {1}")]
    TooLarge(u64, u64),
    #[error("expression mentions generator {0} outside the presentation")]
    BadGenerator(GenId),
}

/// `⋁_k ⋀_{g ∈ f_k} g`. The empty join is ⊥; a disjunct `∅` means ⊤.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expression {
    disjuncts: Vec<BTreeSet<GenId>>,
}

impl Expression {
    pub fn bot() -> Self {
        Expression { disjuncts: vec![] }
    }

    pub fn top() -> Self {
        Expression {
            disjuncts: vec![BTreeSet::new()],
        }
    }

    pub fn gen(g: GenId) -> Self {
        Expression {
            disjuncts: vec![[g].into_iter().collect()],
        }
    }

    pub fn from_disjuncts(disjuncts: Vec<BTreeSet<GenId>>) -> Self {
        Expression { disjuncts }
    }

    pub fn disjuncts(&self) -> &[BTreeSet<GenId>] {
        &self.disjuncts
    }

    pub fn is_bot(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn generators(&self) -> BTreeSet<GenId> {
        self.disjuncts.iter().flatten().copied().collect()
    }

    /// Lattice preorder: every disjunct of `self` contains some disjunct
    /// of `other`.
    pub fn leq(&self, other: &Expression) -> bool {
        self.disjuncts
            .iter()
            .all(|p| other.disjuncts.iter().any(|q| q.is_subset(p)))
    }

    pub fn meet(&self, other: &Expression) -> Expression {
        let mut out = Vec::new();
        for p in &self.disjuncts {
            for q in &other.disjuncts {
                out.push(p.union(q).copied().collect());
            }
        }
        Expression { disjuncts: out }
    }

    pub fn join(&self, other: &Expression) -> Expression {
        let mut out = self.disjuncts.clone();
        out.extend(other.disjuncts.iter().cloned());
        Expression { disjuncts: out }
    }

    /// Removes duplicates and ⊆-subsumed disjuncts (a disjunct with a proper
    /// subset present denotes a smaller open and is redundant in the join).
    pub fn normalize(&self) -> Expression {
        let mut ds: Vec<BTreeSet<GenId>> = self.disjuncts.clone();
        ds.sort();
        ds.dedup();
        let keep: Vec<BTreeSet<GenId>> = ds
            .iter()
            .filter(|p| !ds.iter().any(|q| q != *p && q.is_subset(p)))
            .cloned()
            .collect();
        Expression { disjuncts: keep }
    }

    /// Truth under a total two-valued valuation.
    pub fn sat(&self, valuation: &BTreeSet<GenId>) -> bool {
        self.disjuncts.iter().any(|p| p.is_subset(valuation))
    }

    /// Parses `g0 & g1 | g2`, `top`, `bot` (`&` binds tighter than `|`).
    pub fn parse(s: &str) -> Result<Expression, String> {
        let mut disjuncts = Vec::new();
        for (di, part) in s.split('|').enumerate() {
            let part = part.trim();
            if part.is_empty() {
                return Err(format!("empty disjunct {di}"));
            }
            if part == "bot" {
                continue; // ⊥ contributes nothing to a join
            }
            if part == "top" {
                disjuncts.push(BTreeSet::new());
                continue;
            }
            let mut meet = BTreeSet::new();
            for atom in part.split('&') {
                let atom = atom.trim();
                let idx = atom
                    .strip_prefix('g')
                    .and_then(|d| d.parse::<GenId>().ok())
                    .ok_or_else(|| format!("expected generator like g0, found {atom:?}"))?;
                meet.insert(idx);
            }
            disjuncts.push(meet);
        }
        Ok(Expression { disjuncts })
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.disjuncts.is_empty() {
            return write!(f, "bot");
        }
        for (i, d) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            if d.is_empty() {
                write!(f, "top")?;
            } else {
                for (j, g) in d.iter().enumerate() {
                    if j > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "g{g}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Generator universe of a presentation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenSet {
    Finite(u32),
    /// Generators indexed by all of N (e.g. codes recovered from Π⁰₂ sets).
    Naturals,
}

#[derive(Clone, Debug)]
pub struct Presentation {
    pub name: String,
    pub generators: GenSet,
    pub relations: Vec<(Expression, Expression)>,
}

impl Presentation {
    pub fn new(name: impl Into<String>, gens: u32, relations: Vec<(Expression, Expression)>) -> Self {
        Presentation {
            name: name.into(),
            generators: GenSet::Finite(gens),
            relations,
        }
    }

    pub fn sierpinski() -> Self {
        Presentation::new("sierpinski", 1, vec![])
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if let GenSet::Finite(n) = self.generators {
            for (u, v) in &self.relations {
                for e in [u, v] {
                    if let Some(&g) = e.generators().iter().find(|&&g| g >= n) {
                        return Err(FrameError::BadGenerator(g));
                    }
                }
            }
        }
        Ok(())
    }

    /// Generators mentioned anywhere in the relations plus the extra
    /// expressions; for finite presentations, all generators.
    fn working_generators(&self, extra: &[&Expression]) -> BTreeSet<GenId> {
        match self.generators {
            GenSet::Finite(n) => (0..n).collect(),
            GenSet::Naturals => {
                let mut gens = BTreeSet::new();
                for (u, v) in &self.relations {
                    gens.extend(u.generators());
                    gens.extend(v.generators());
                }
                for e in extra {
                    gens.extend(e.generators());
                }
                gens
            }
        }
    }
}

/// A generated congruence preorder: a finite expression universe `Q` with a
/// base relation containing the presentation's relations and reflexivity.
#[derive(Clone, Debug)]
pub struct CongruenceGen {
    pub exprs: Vec<Expression>,
    pub base: Vec<(usize, usize)>,
}

impl CongruenceGen {
    /// The canonical instance: finite meets of generators plus the relation
    /// field, with `R` and reflexivity as the base.
    pub fn canonical(pres: &Presentation, extra: &[&Expression]) -> CongruenceGen {
        let gens: Vec<GenId> = pres.working_generators(extra).into_iter().collect();
        let mut exprs: Vec<Expression> = Vec::new();
        for mask in 0u64..(1 << gens.len().min(16)) {
            let meet: BTreeSet<GenId> = gens
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &g)| g)
                .collect();
            exprs.push(Expression::from_disjuncts(vec![meet]));
        }
        for (u, v) in &pres.relations {
            for e in [u, v] {
                if !exprs.contains(e) {
                    exprs.push(e.clone());
                }
            }
        }
        let mut base: Vec<(usize, usize)> = (0..exprs.len()).map(|i| (i, i)).collect();
        for (u, v) in &pres.relations {
            let iu = exprs.iter().position(|e| e == u).unwrap();
            let iv = exprs.iter().position(|e| e == v).unwrap();
            base.push((iu, iv));
        }
        CongruenceGen { exprs, base }
    }

    /// Checks the defining conditions: reflexivity and `R ⊆ base`.
    pub fn check(&self, pres: &Presentation) -> Result<(), String> {
        for i in 0..self.exprs.len() {
            if !self.base.contains(&(i, i)) {
                return Err(format!("missing reflexivity at {}", self.exprs[i]));
            }
        }
        for (u, v) in &pres.relations {
            let iu = self.exprs.iter().position(|e| e == u);
            let iv = self.exprs.iter().position(|e| e == v);
            match (iu, iv) {
                (Some(a), Some(b)) if self.base.contains(&(a, b)) => {}
                _ => return Err(format!("relation {u} => {v} not contained in base")),
            }
        }
        Ok(())
    }
}

/// A point as an increasing sequence of finite generator sets; denotes the
/// valuation `ξ(g) = 1 ⟺ g ∈ ⋃ p_i`.
#[derive(Clone)]
pub struct FramePoint {
    stages: Arc<Vec<BTreeSet<GenId>>>,
    /// Total valuations (finite generator sets) admit exact `Unsat`.
    total: bool,
}

impl FramePoint {
    pub fn from_stages(stages: Vec<BTreeSet<GenId>>, total: bool) -> Self {
        assert!(!stages.is_empty());
        FramePoint {
            stages: Arc::new(stages),
            total,
        }
    }

    pub fn total_valuation(v: BTreeSet<GenId>) -> Self {
        FramePoint::from_stages(vec![v], true)
    }

    pub fn at(&self, i: usize) -> &BTreeSet<GenId> {
        &self.stages[i.min(self.stages.len() - 1)]
    }

    pub fn is_total(&self) -> bool {
        self.total
    }

    pub fn final_stage(&self) -> &BTreeSet<GenId> {
        self.stages.last().unwrap()
    }

    /// Checks the stage invariant and, against a presentation, that every
    /// relation firing at some stage is answered at some stage.
    pub fn check(&self, pres: &Presentation) -> Result<(), String> {
        for w in self.stages.windows(2) {
            if !w[0].is_subset(&w[1]) {
                return Err("stages must increase".into());
            }
        }
        let last = self.final_stage();
        for (u, v) in &pres.relations {
            if u.sat(last) && !v.sat(last) {
                return Err(format!("relation {u} => {v} violated"));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FramePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FramePoint{:?}", self.final_stage())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatVerdict {
    Sat,
    Unsat,
    Unknown,
}

/// Stage-bounded satisfaction of an expression at a point. `Sat` once some
/// disjunct is contained in the stage; `Unsat` is exact for total points
/// (and for ⊥, which no point satisfies).
pub fn point_sat(x: &FramePoint, e: &Expression, stage: usize) -> SatVerdict {
    if e.is_bot() {
        return SatVerdict::Unsat;
    }
    if e.sat(x.at(stage)) {
        SatVerdict::Sat
    } else if x.is_total() && stage + 1 >= x.stages.len() {
        SatVerdict::Unsat
    } else {
        SatVerdict::Unknown
    }
}

pub const DEFAULT_MAX_GENERATORS: u64 = 16;

/// All total valuations satisfying the relations — the spatiality oracle.
pub fn enumerate_points(pres: &Presentation) -> Result<Vec<BTreeSet<GenId>>, FrameError> {
    let gens: Vec<GenId> = pres.working_generators(&[]).into_iter().collect();
    if gens.len() as u64 > DEFAULT_MAX_GENERATORS {
        return Err(FrameError::TooLarge(
            gens.len() as u64,
            DEFAULT_MAX_GENERATORS,
        ));
    }
    let mut out = Vec::new();
    for mask in 0u64..(1 << gens.len()) {
        let v: BTreeSet<GenId> = gens
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &g)| g)
            .collect();
        if pres.relations.iter().all(|(u, w)| !u.sat(&v) || w.sat(&v)) {
            out.push(v);
        }
    }
    Ok(out)
}

/// One step in a congruence-saturation derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecStep {
    pub lhs: Expression,
    pub rhs: Expression,
    pub rule: &'static str,
}

#[derive(Clone, Debug)]
pub enum PrecResult {
    Holds(Vec<PrecStep>),
    Refuted(FramePoint),
    Unknown,
}

impl PrecResult {
    pub fn holds(&self) -> bool {
        matches!(self, PrecResult::Holds(_))
    }
}

/// The least congruence preorder, by forward-chaining saturation over the
/// meet atoms of the working generators.
///
/// An atom `m` covers `b` when `m <= b`, or some relation `(u, v)` applies
/// (`m <= u`) and every refinement `m ∪ v_j` covers `b`. The expression
/// `a ≺ b` holds when all its disjuncts cover `b`. Exact whenever the
/// working generator set fits below `bound` (then spatiality makes the point
/// semantics the completeness oracle); `Unknown` otherwise.
pub fn prec(a: &Expression, b: &Expression, pres: &Presentation, bound: u32) -> PrecResult {
    let gens: Vec<GenId> = pres.working_generators(&[a, b]).into_iter().collect();
    if gens.len() > bound as usize || gens.len() > 20 {
        return PrecResult::Unknown;
    }
    let good = saturate_good(b, pres, &gens);

    let mut failing = None;
    for m in a.disjuncts() {
        if !good.contains_key(m) {
            failing = Some(m.clone());
            break;
        }
    }
    match failing {
        None => {
            let mut steps = Vec::new();
            for m in a.disjuncts() {
                let why = good.get(m).unwrap();
                steps.push(PrecStep {
                    lhs: Expression::from_disjuncts(vec![m.clone()]),
                    rhs: b.clone(),
                    rule: why,
                });
            }
            if steps.is_empty() {
                steps.push(PrecStep {
                    lhs: a.clone(),
                    rhs: b.clone(),
                    rule: "bottom",
                });
            }
            PrecResult::Holds(steps)
        }
        Some(m0) => match refutation_walk(&m0, b, pres, &good) {
            Some(point) => PrecResult::Refuted(point),
            None => PrecResult::Unknown,
        },
    }
}

/// Least fixpoint of the covering rules; maps covered atoms to the rule that
/// first covered them.
fn saturate_good(
    b: &Expression,
    pres: &Presentation,
    gens: &[GenId],
) -> BTreeMap<BTreeSet<GenId>, &'static str> {
    let mut atoms: Vec<BTreeSet<GenId>> = Vec::new();
    for mask in 0u64..(1 << gens.len()) {
        atoms.push(
            gens.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &g)| g)
                .collect(),
        );
    }
    let mut good: BTreeMap<BTreeSet<GenId>, &'static str> = BTreeMap::new();
    for m in &atoms {
        if b.disjuncts().iter().any(|q| q.is_subset(m)) {
            good.insert(m.clone(), "lattice");
        }
    }
    loop {
        let mut changed = false;
        for m in &atoms {
            if good.contains_key(m) {
                continue;
            }
            for (u, v) in &pres.relations {
                let applies = u.disjuncts().iter().any(|q| q.is_subset(m));
                if !applies {
                    continue;
                }
                let all_refined = v.disjuncts().iter().all(|vj| {
                    let refined: BTreeSet<GenId> = m.union(vj).copied().collect();
                    good.contains_key(&refined)
                });
                if all_refined {
                    good.insert(m.clone(), "relation");
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            return good;
        }
    }
}

/// Grows a failing atom into a total valuation that still avoids covering
/// `b`: whenever a relation fires and is unanswered, extend by the refinement
/// that stays uncovered. The resulting increasing sequence is the witness.
fn refutation_walk(
    m0: &BTreeSet<GenId>,
    b: &Expression,
    pres: &Presentation,
    good: &BTreeMap<BTreeSet<GenId>, &'static str>,
) -> Option<FramePoint> {
    let mut stages = vec![m0.clone()];
    let mut cur = m0.clone();
    loop {
        let mut extended = false;
        for (u, v) in &pres.relations {
            let fires = u.disjuncts().iter().any(|q| q.is_subset(&cur));
            let answered = v.disjuncts().iter().any(|q| q.is_subset(&cur));
            if fires && !answered {
                // some refinement must stay uncovered, else cur were covered
                let next = v.disjuncts().iter().find_map(|vj| {
                    let refined: BTreeSet<GenId> = cur.union(vj).copied().collect();
                    (!good.contains_key(&refined)).then_some(refined)
                })?;
                stages.push(next.clone());
                cur = next;
                extended = true;
                break;
            }
        }
        if !extended {
            break;
        }
    }
    let point = FramePoint::from_stages(stages, true);
    // verify: satisfies R, avoids b
    if point.check(pres).is_ok() && !b.sat(point.final_stage()) {
        Some(point)
    } else {
        None
    }
}

/// Spatial check: compares the saturation verdict and the proof-search
/// verdict against the point-semantics oracle.
#[derive(Clone, Debug)]
pub struct SpatialReport {
    pub prec_holds: Option<bool>,
    pub derives_holds: Option<bool>,
    pub points_include: bool,
    pub disagreements: Vec<String>,
}

pub fn spatial_check(
    pres: &Presentation,
    a: &Expression,
    b: &Expression,
    depth: usize,
) -> Result<SpatialReport, FrameError> {
    let points = enumerate_points(pres)?;
    let include = points
        .iter()
        .filter(|v| a.sat(v))
        .all(|v| b.sat(v));
    let p = prec(a, b, pres, DEFAULT_MAX_GENERATORS as u32);
    let d = derives(a, b, pres, depth, BaseReading::Closing);
    let mut disagreements = Vec::new();
    let prec_holds = match &p {
        PrecResult::Holds(_) => Some(true),
        PrecResult::Refuted(_) => Some(false),
        PrecResult::Unknown => None,
    };
    let derives_holds = match &d {
        DerivesResult::Proved(_) => Some(true),
        DerivesResult::Refuted(_) => Some(false),
        DerivesResult::Unknown => None,
    };
    if let Some(ph) = prec_holds {
        if ph != include {
            disagreements.push(format!("prec={ph} but point inclusion={include}"));
        }
    }
    if let (Some(dh), Some(ph)) = (derives_holds, prec_holds) {
        if dh != ph {
            disagreements.push(format!("derives={dh} but prec={ph}"));
        }
    }
    Ok(SpatialReport {
        prec_holds,
        derives_holds,
        points_include: include,
        disagreements,
    })
}

// ---------------------------------------------------------------------------
// The deductive relation
// ---------------------------------------------------------------------------

/// How the Base rule reads the paper's side condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BaseReading {
    /// A leaf closes on `a <= b`, or on a relation step
    /// `(a ∧ u, b ∧ v)` with `a <= u` and `a ∧ v <= b`.
    #[default]
    Closing,
    /// The relation form additionally requires `a <= b` as a side condition
    /// (the weaker reading; kept behind this flag for the divergence sweep).
    SideCondition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProofRule {
    Base,
    Cut,
    LJoin,
    RJoin,
}

impl fmt::Display for ProofRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProofRule::Base => "base",
            ProofRule::Cut => "cut",
            ProofRule::LJoin => "ljoin",
            ProofRule::RJoin => "rjoin",
        };
        write!(f, "{s}")
    }
}

/// A finite proof tree; every node carries its sequent and rule tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub lhs: Expression,
    pub rhs: Expression,
    pub rule: ProofRule,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    /// Re-checks every node against its rule's side conditions.
    pub fn verify(&self, pres: &Presentation, reading: BaseReading) -> Result<(), String> {
        match self.rule {
            ProofRule::Base => {
                if !self.children.is_empty() {
                    return Err("base nodes are leaves".into());
                }
                if !base_holds(&self.lhs, &self.rhs, pres, reading) {
                    return Err(format!("base fails at {} |- {}", self.lhs, self.rhs));
                }
            }
            ProofRule::Cut => {
                if self.children.len() != 2 {
                    return Err("cut needs two children".into());
                }
                let (l, r) = (&self.children[0], &self.children[1]);
                if l.lhs != self.lhs
                    || l.rhs != r.lhs
                    || r.rhs != self.rhs
                {
                    return Err("cut sequents do not line up".into());
                }
            }
            ProofRule::LJoin => {
                let ds = self.lhs.disjuncts();
                if self.children.len() != ds.len() {
                    return Err("ljoin needs one child per disjunct".into());
                }
                for (child, d) in self.children.iter().zip(ds) {
                    if child.lhs != Expression::from_disjuncts(vec![d.clone()])
                        || child.rhs != self.rhs
                    {
                        return Err("ljoin child sequent mismatch".into());
                    }
                }
            }
            ProofRule::RJoin => {
                if self.children.len() != 1 {
                    return Err("rjoin needs one child".into());
                }
                let child = &self.children[0];
                if child.lhs != self.lhs {
                    return Err("rjoin keeps the left side".into());
                }
                let ok = self
                    .rhs
                    .disjuncts()
                    .iter()
                    .any(|d| child.rhs == Expression::from_disjuncts(vec![d.clone()]));
                if !ok {
                    return Err("rjoin child is not a disjunct of the right side".into());
                }
            }
        }
        for c in &self.children {
            c.verify(pres, reading)?;
        }
        Ok(())
    }

    /// Canonical one-line-per-node rendering (stable across runs).
    pub fn render(&self) -> String {
        fn go(t: &ProofTree, depth: usize, out: &mut String) {
            out.push_str(&"  ".repeat(depth));
            out.push_str(&format!("[{}] {} |- {}\n", t.rule, t.lhs, t.rhs));
            for c in &t.children {
                go(c, depth + 1, out);
            }
        }
        let mut s = String::new();
        go(self, 0, &mut s);
        s
    }
}

#[derive(Clone, Debug)]
pub enum DerivesResult {
    Proved(ProofTree),
    Refuted(FramePoint),
    Unknown,
}

fn base_holds(a: &Expression, b: &Expression, pres: &Presentation, reading: BaseReading) -> bool {
    if a.leq(b) {
        return true;
    }
    pres.relations.iter().any(|(u, v)| {
        let applies = a.leq(u);
        let closes = a.meet(v).normalize().leq(b);
        match reading {
            BaseReading::Closing => applies && closes,
            BaseReading::SideCondition => applies && closes && a.leq(b),
        }
    })
}

/// Iterative-deepening proof search for the deductive relation; lowest rule
/// index first (base, ljoin, rjoin, cut-by-relation-order), so proofs and
/// countermodels are deterministic. Refutations come from the failed-search
/// walk and are verified before being returned.
pub fn derives(
    a: &Expression,
    b: &Expression,
    pres: &Presentation,
    depth: usize,
    reading: BaseReading,
) -> DerivesResult {
    assert!(depth >= 1);
    let a = a.normalize();
    let b = b.normalize();
    let mut exhausted = false;
    for d in 1..=depth {
        let mut seen = BTreeSet::new();
        match search(&a, &b, pres, d, reading, &mut seen) {
            SearchOutcome::Proved(t) => return DerivesResult::Proved(t),
            SearchOutcome::DepthLimited => {} // deepen
            SearchOutcome::Failed => {
                // the whole space below this fuel was explored without
                // hitting the limit: no proof exists at any depth
                exhausted = true;
                break;
            }
        }
    }
    if !exhausted {
        return DerivesResult::Unknown;
    }
    // exhausted: extract a countermodel via the congruence walk
    let gens: Vec<GenId> = pres.working_generators(&[&a, &b]).into_iter().collect();
    if gens.len() > 20 {
        return DerivesResult::Unknown;
    }
    let good = saturate_good(&b, pres, &gens);
    for m in a.disjuncts() {
        if !good.contains_key(m) {
            if let Some(pt) = refutation_walk(m, &b, pres, &good) {
                return DerivesResult::Refuted(pt);
            }
        }
    }
    DerivesResult::Unknown
}

enum SearchOutcome {
    Proved(ProofTree),
    Failed,
    DepthLimited,
}

fn search(
    a: &Expression,
    b: &Expression,
    pres: &Presentation,
    fuel: usize,
    reading: BaseReading,
    seen: &mut BTreeSet<(Expression, Expression)>,
) -> SearchOutcome {
    if base_holds(a, b, pres, reading) {
        return SearchOutcome::Proved(ProofTree {
            lhs: a.clone(),
            rhs: b.clone(),
            rule: ProofRule::Base,
            children: vec![],
        });
    }
    if fuel == 0 {
        return SearchOutcome::DepthLimited;
    }
    let key = (a.clone(), b.clone());
    if !seen.insert(key.clone()) {
        return SearchOutcome::Failed; // cycle on this path
    }
    let mut limited = false;

    // LJoin: split a join on the left into one branch per disjunct
    if a.disjuncts().len() >= 2 {
        let mut children = Vec::new();
        let mut ok = true;
        for d in a.disjuncts() {
            let da = Expression::from_disjuncts(vec![d.clone()]);
            match search(&da, b, pres, fuel - 1, reading, seen) {
                SearchOutcome::Proved(t) => children.push(t),
                SearchOutcome::DepthLimited => {
                    limited = true;
                    ok = false;
                    break;
                }
                SearchOutcome::Failed => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            seen.remove(&key);
            return SearchOutcome::Proved(ProofTree {
                lhs: a.clone(),
                rhs: b.clone(),
                rule: ProofRule::LJoin,
                children,
            });
        }
    }

    // RJoin: commit to one disjunct on the right
    if b.disjuncts().len() >= 2 {
        for d in b.disjuncts() {
            let db = Expression::from_disjuncts(vec![d.clone()]);
            match search(a, &db, pres, fuel - 1, reading, seen) {
                SearchOutcome::Proved(t) => {
                    seen.remove(&key);
                    return SearchOutcome::Proved(ProofTree {
                        lhs: a.clone(),
                        rhs: b.clone(),
                        rule: ProofRule::RJoin,
                        children: vec![t],
                    });
                }
                SearchOutcome::DepthLimited => limited = true,
                SearchOutcome::Failed => {}
            }
        }
    }

    // Cut through an applicable relation: left child closes by Base
    for (u, v) in &pres.relations {
        if !a.leq(u) {
            continue;
        }
        let c = a.meet(v).normalize();
        if c == *a || !base_holds(a, &c, pres, reading) {
            continue;
        }
        let left = ProofTree {
            lhs: a.clone(),
            rhs: c.clone(),
            rule: ProofRule::Base,
            children: vec![],
        };
        match search(&c, b, pres, fuel - 1, reading, seen) {
            SearchOutcome::Proved(t) => {
                seen.remove(&key);
                return SearchOutcome::Proved(ProofTree {
                    lhs: a.clone(),
                    rhs: b.clone(),
                    rule: ProofRule::Cut,
                    children: vec![left, t],
                });
            }
            SearchOutcome::DepthLimited => limited = true,
            SearchOutcome::Failed => {}
        }
    }

    seen.remove(&key);
    if limited {
        SearchOutcome::DepthLimited
    } else {
        SearchOutcome::Failed
    }
}

/// Overall frame order verdict from point semantics, used in tests.
pub fn points_include(pres: &Presentation, a: &Expression, b: &Expression) -> Result<bool, FrameError> {
    Ok(enumerate_points(pres)?
        .iter()
        .filter(|v| a.sat(v))
        .all(|v| b.sat(v)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriadVerdicts {
    pub prec: Verdict3,
    pub derives: Verdict3,
    pub points: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    #[test]
    fn leq_examples() {
        assert!(e("g0 & g1").leq(&e("top")));
        assert!(Expression::bot().leq(&e("g0")));
        // a = (g0&g1) | g2, b = g0 | g2
        assert!(e("g0 & g1 | g2").leq(&e("g0 | g2")));
        assert!(!e("g0 | g2").leq(&e("g0 & g1 | g2")));
    }

    #[test]
    fn leq_matches_valuation_semantics() {
        // with R = ∅ and |G| <= 4, leq iff semantic inclusion over all 2^G
        // valuations... on normalized expressions (raw joins can denote the
        // same open without the syntactic witness)
        let mut rng = crate::sample::Rng::new(8);
        let gens = 4u32;
        let random_expr = |rng: &mut crate::sample::Rng| {
            let k = rng.below(3);
            let ds = (0..=k)
                .map(|_| {
                    (0..gens)
                        .filter(|_| rng.chance(1, 2))
                        .collect::<BTreeSet<GenId>>()
                })
                .collect();
            Expression::from_disjuncts(ds).normalize()
        };
        for _ in 0..300 {
            let a = random_expr(&mut rng);
            let b = random_expr(&mut rng);
            let sem = (0u64..16).all(|mask| {
                let v: BTreeSet<GenId> = (0..gens).filter(|g| mask >> g & 1 == 1).collect();
                !a.sat(&v) || b.sat(&v)
            });
            assert_eq!(a.leq(&b), sem, "a={a} b={b}");
        }
    }

    #[test]
    fn meet_join_laws() {
        let a = e("g0 | g1");
        assert_eq!(a.meet(&Expression::top()).normalize(), a.normalize());
        assert_eq!(a.join(&Expression::bot()).normalize(), a.normalize());
        // (g0 | g1) & g2 distributes
        let d = a.meet(&e("g2")).normalize();
        assert_eq!(d, e("g0 & g2 | g1 & g2").normalize());
    }

    #[test]
    fn normalize_idempotent_and_leq_equivalent() {
        let mut rng = crate::sample::Rng::new(15);
        for _ in 0..1000 {
            let ds: Vec<BTreeSet<GenId>> = (0..rng.below(4))
                .map(|_| (0..5u32).filter(|_| rng.chance(1, 2)).collect())
                .collect();
            let raw = Expression::from_disjuncts(ds);
            let n1 = raw.normalize();
            assert_eq!(n1.normalize(), n1);
            assert!(raw.leq(&n1) && n1.leq(&raw));
        }
    }

    #[test]
    fn prec_lattice_and_relation() {
        let pres = Presentation::new("t", 1, vec![(Expression::top(), e("g0"))]);
        assert!(prec(&Expression::top(), &e("g0"), &pres, 8).holds());
        match prec(&e("g0"), &Expression::bot(), &pres, 8) {
            PrecResult::Refuted(pt) => {
                assert!(pt.final_stage().contains(&0));
                pt.check(&pres).unwrap();
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn prec_agrees_with_points_small_sweep() {
        // all presentations with one relation over two generators from a
        // small expression pool
        let pool: Vec<Expression> = vec![
            Expression::bot(),
            Expression::top(),
            e("g0"),
            e("g1"),
            e("g0 & g1"),
            e("g0 | g1"),
        ];
        for u in &pool {
            for v in &pool {
                let pres = Presentation::new("s", 2, vec![(u.clone(), v.clone())]);
                for a in &pool {
                    for b in &pool {
                        let want = points_include(&pres, a, b).unwrap();
                        match prec(a, b, &pres, 8) {
                            PrecResult::Holds(_) => assert!(want, "a={a} b={b} u={u} v={v}"),
                            PrecResult::Refuted(pt) => {
                                assert!(!want, "a={a} b={b} u={u} v={v}");
                                assert_eq!(point_sat(&pt, a, 8), SatVerdict::Sat);
                                assert_eq!(point_sat(&pt, b, 8), SatVerdict::Unsat);
                            }
                            PrecResult::Unknown => panic!("unexpected unknown"),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn derives_basics() {
        let pres = Presentation::new("t", 1, vec![(Expression::top(), e("g0"))]);
        // a |- a at depth 1
        match derives(&e("g0"), &e("g0"), &pres, 1, BaseReading::Closing) {
            DerivesResult::Proved(t) => {
                assert_eq!(t.rule, ProofRule::Base);
                t.verify(&pres, BaseReading::Closing).unwrap();
            }
            other => panic!("{other:?}"),
        }
        match derives(&Expression::top(), &e("g0"), &pres, 8, BaseReading::Closing) {
            DerivesResult::Proved(t) => t.verify(&pres, BaseReading::Closing).unwrap(),
            other => panic!("{other:?}"),
        }
        match derives(&e("g0"), &Expression::bot(), &pres, 8, BaseReading::Closing) {
            DerivesResult::Refuted(pt) => pt.check(&pres).unwrap(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derives_needs_chaining() {
        // top -> g0, g0 -> g1: top |- g1 needs a cut
        let pres = Presentation::new(
            "chain",
            2,
            vec![(Expression::top(), e("g0")), (e("g0"), e("g1"))],
        );
        match derives(&Expression::top(), &e("g1"), &pres, 8, BaseReading::Closing) {
            DerivesResult::Proved(t) => {
                t.verify(&pres, BaseReading::Closing).unwrap();
                assert!(t.size() >= 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derives_determinism() {
        let pres = Presentation::new(
            "c",
            2,
            vec![(Expression::top(), e("g0 | g1"))],
        );
        let run = || match derives(&Expression::top(), &e("g0 | g1"), &pres, 10, BaseReading::Closing)
        {
            DerivesResult::Proved(t) => t.render(),
            other => panic!("{other:?}"),
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sierpinski_has_two_points() {
        let pts = enumerate_points(&Presentation::sierpinski()).unwrap();
        assert_eq!(pts.len(), 2);
    }

    #[test]
    fn point_enumeration_with_constraints() {
        // R = ∅, |G| = 2: four points
        let pres = Presentation::new("free2", 2, vec![]);
        assert_eq!(enumerate_points(&pres).unwrap().len(), 4);
        // g -> bot: only the zero valuation
        let pres = Presentation::new("dead", 1, vec![(e("g0"), Expression::bot())]);
        let pts = enumerate_points(&pres).unwrap();
        assert_eq!(pts, vec![BTreeSet::new()]);
    }

    #[test]
    fn congruence_gen_canonical_checks() {
        let pres = Presentation::new("t", 2, vec![(e("g0"), e("g1"))]);
        let cg = CongruenceGen::canonical(&pres, &[]);
        cg.check(&pres).unwrap();
    }

    #[test]
    fn spatial_check_agrees() {
        let pres = Presentation::new("t", 2, vec![(e("g0"), e("g1"))]);
        let rep = spatial_check(&pres, &e("g0"), &e("g1"), 8).unwrap();
        assert!(rep.disagreements.is_empty());
        assert!(rep.points_include);
        assert_eq!(rep.prec_holds, Some(true));
        let rep = spatial_check(&pres, &e("g1"), &e("g0"), 8).unwrap();
        assert!(rep.disagreements.is_empty());
        assert!(!rep.points_include);
        assert_eq!(rep.derives_holds, Some(false));
        // a = b case
        let rep = spatial_check(&pres, &e("g0"), &e("g0"), 8).unwrap();
        assert!(rep.disagreements.is_empty() && rep.points_include);
    }

    #[test]
    fn base_reading_variants_stay_sound() {
        // under both readings, a proved goal must hold in point semantics
        let pres = Presentation::new(
            "v",
            2,
            vec![(Expression::top(), e("g0")), (e("g0"), e("g1"))],
        );
        for reading in [BaseReading::Closing, BaseReading::SideCondition] {
            for a in [Expression::top(), e("g0"), e("g1")] {
                for b in [Expression::bot(), e("g0"), e("g1")] {
                    if let DerivesResult::Proved(t) = derives(&a, &b, &pres, 8, reading) {
                        t.verify(&pres, reading).unwrap();
                        assert!(points_include(&pres, &a, &b).unwrap(), "{a} |- {b}");
                    }
                }
            }
        }
    }
}
