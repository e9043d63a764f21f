//! The input language: named blocks describing finite posets, frame
//! presentations, Π⁰₂ codes, explicit subsets, expressions and goals.
//! Infinite objects enter through named builtins with parameters, so every
//! document stays checkable.
//!
//! ```text
//! poset chain3 { elem a b c; order b < a; order c < b; }
//! poset w { builtin omega-chain; }
//! frame S { gen g; rel top => g; }
//! pi02 zero { pair open{ {0} } coA open{ {} }; }
//! point evens { rule evens; }
//! point small { finite {0,2,5}; }
//! expr e0 { g0 & g1 | g2; }
//! goal t { frame S; show top <= g; }
//! ```

use qpk_core::frames::{Expression, GenId, Presentation};
use qpk_core::pn::{ExplicitSubset, FinSet};
use qpk_core::poset::CountablePoset;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at {}:{}: expected {}",
            self.line, self.col, self.expected
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone)]
pub struct Goal {
    pub frame: String,
    pub lhs: Expression,
    pub rhs: Expression,
}

/// A parsed document: named blocks with all cross-references resolved.
#[derive(Default)]
pub struct Document {
    pub posets: BTreeMap<String, CountablePoset>,
    pub frames: BTreeMap<String, FrameBlock>,
    pub pi02s: BTreeMap<String, qpk_core::convert::ExplicitPi02>,
    pub points: BTreeMap<String, ExplicitSubset>,
    pub exprs: BTreeMap<String, Expression>,
    pub goals: BTreeMap<String, Goal>,
}

#[derive(Clone)]
pub struct FrameBlock {
    pub presentation: Presentation,
    pub gen_names: Vec<String>,
}

impl FrameBlock {
    pub fn parse_expr(&self, text: &str) -> Result<Expression, String> {
        parse_named_expr(text, &self.gen_names)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(u64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Lt,
    Leq,
    Arrow,
    Amp,
    Pipe,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = *self.src.get(self.pos)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            expected: expected.to_string(),
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
                self.bump();
            }
            if self.peek() == Some(b'#') {
                while !matches!(self.peek(), None | Some(b'\n')) {
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else { break };
            let tok = match c {
                b'{' => {
                    self.bump();
                    Tok::LBrace
                }
                b'}' => {
                    self.bump();
                    Tok::RBrace
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b';' => {
                    self.bump();
                    Tok::Semi
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'&' => {
                    self.bump();
                    Tok::Amp
                }
                b'|' => {
                    self.bump();
                    Tok::Pipe
                }
                b'<' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Leq
                    } else {
                        Tok::Lt
                    }
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        return Err(self.err("'>' after '='"));
                    }
                }
                b'0'..=b'9' => {
                    let mut n: u64 = 0;
                    while let Some(d @ b'0'..=b'9') = self.peek() {
                        n = n
                            .checked_mul(10)
                            .and_then(|n| n.checked_add((d - b'0') as u64))
                            .ok_or_else(|| self.err("a smaller number"))?;
                        self.bump();
                    }
                    Tok::Number(n)
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut s = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' || c == b'-' {
                            s.push(c as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(s)
                }
                _ => return Err(self.err("a token")),
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn err(&self, expected: &str) -> ParseError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|(_, l, c)| (*l, *c + 1))
                    .unwrap_or((1, 1))
            });
        ParseError {
            line,
            col,
            expected: expected.to_string(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(what)),
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, ParseError> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err(what)),
        }
    }

    /// `{0,2,5}` or `{}`.
    fn finset(&mut self) -> Result<FinSet, ParseError> {
        self.expect(&Tok::LBrace, "'{' starting a finite set")?;
        let mut elems = Vec::new();
        if self.peek() != Some(&Tok::RBrace) {
            loop {
                elems.push(self.number("a natural number")?);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.pos += 1;
                    }
                    _ => break,
                }
            }
        }
        self.expect(&Tok::RBrace, "'}' closing a finite set")?;
        Ok(FinSet::new(elems))
    }

    /// Position of the most recently consumed token.
    fn prev_pos(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.saturating_sub(1))
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((1, 1))
    }

    /// Expression over named generators: `a & b | c`, `top`, `bot`.
    fn expression(&mut self, names: &mut NameTable) -> Result<Expression, ParseError> {
        let mut disjuncts: Vec<BTreeSet<GenId>> = Vec::new();
        let resolve = |p: &Parser, name: &str, table: &mut NameTable| {
            table.resolve(name).map_err(|e| {
                let (line, col) = p.prev_pos();
                ParseError {
                    line,
                    col,
                    expected: e,
                }
            })
        };
        loop {
            // one meet
            let first = self.ident("a generator, 'top' or 'bot'")?;
            if first == "bot" {
                // bot contributes no disjunct
            } else if first == "top" {
                disjuncts.push(BTreeSet::new());
            } else {
                let mut meet = BTreeSet::new();
                meet.insert(resolve(self, &first, names)?);
                while self.peek() == Some(&Tok::Amp) {
                    self.pos += 1;
                    let g = self.ident("a generator after '&'")?;
                    meet.insert(resolve(self, &g, names)?);
                }
                disjuncts.push(meet);
            }
            if self.peek() == Some(&Tok::Pipe) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(Expression::from_disjuncts(disjuncts))
    }
}

/// Resolves generator names to indices; in declared mode only known names
/// pass, otherwise `g<k>` style names mint indices.
enum NameTable<'a> {
    Declared(&'a [String]),
    Indexed,
}

impl NameTable<'_> {
    fn resolve(&mut self, name: &str) -> Result<GenId, String> {
        match self {
            NameTable::Declared(names) => names
                .iter()
                .position(|n| n == name)
                .map(|i| i as GenId)
                .ok_or_else(|| format!("a declared generator (found '{name}')")),
            NameTable::Indexed => name
                .strip_prefix('g')
                .and_then(|d| d.parse::<GenId>().ok())
                .ok_or_else(|| format!("a generator of the form g<k> (found '{name}')")),
        }
    }
}

/// Parses a standalone expression over declared generator names.
pub fn parse_named_expr(text: &str, names: &[String]) -> Result<Expression, String> {
    let toks = Lexer::new(text).tokens().map_err(|e| e.to_string())?;
    let mut p = Parser { toks, pos: 0 };
    let e = p
        .expression(&mut NameTable::Declared(names))
        .map_err(|e| e.to_string())?;
    if p.peek().is_some() {
        return Err("trailing input after expression".into());
    }
    Ok(e)
}

/// `a <= b` over a frame's generator names.
pub fn parse_goal(text: &str, names: &[String]) -> Result<(Expression, Expression), String> {
    let toks = Lexer::new(text).tokens().map_err(|e| e.to_string())?;
    let mut p = Parser { toks, pos: 0 };
    let lhs = p
        .expression(&mut NameTable::Declared(names))
        .map_err(|e| e.to_string())?;
    p.expect(&Tok::Leq, "'<='").map_err(|e| e.to_string())?;
    let rhs = p
        .expression(&mut NameTable::Declared(names))
        .map_err(|e| e.to_string())?;
    if p.peek().is_some() {
        return Err("trailing input after goal".into());
    }
    Ok((lhs, rhs))
}

pub fn parse(text: &str) -> Result<Document, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let mut doc = Document::default();
    let mut names_seen: BTreeSet<String> = BTreeSet::new();

    while p.peek().is_some() {
        let kind = p.ident("a block kind (poset, frame, pi02, point, expr, goal)")?;
        let name = p.ident("a block name")?;
        if !names_seen.insert(name.clone()) {
            return Err(p.err(&format!("a fresh name ('{name}' is already defined)")));
        }
        p.expect(&Tok::LBrace, "'{' opening the block")?;
        match kind.as_str() {
            "poset" => {
                let poset = parse_poset(&mut p, &name)?;
                doc.posets.insert(name, poset);
            }
            "frame" => {
                let block = parse_frame(&mut p, &name)?;
                doc.frames.insert(name, block);
            }
            "pi02" => {
                let code = parse_pi02(&mut p)?;
                doc.pi02s.insert(name, code);
            }
            "point" => {
                let s = parse_point(&mut p)?;
                doc.points.insert(name, s);
            }
            "expr" => {
                let e = p.expression(&mut NameTable::Indexed)?;
                p.expect(&Tok::Semi, "';' after the expression")?;
                doc.exprs.insert(name, e);
            }
            "goal" => {
                let g = parse_goal_block(&mut p, &doc)?;
                doc.goals.insert(name, g);
            }
            other => {
                return Err(p.err(&format!(
                    "a block kind (poset, frame, pi02, point, expr, goal), found '{other}'"
                )))
            }
        }
        p.expect(&Tok::RBrace, "'}' closing the block")?;
    }
    Ok(doc)
}

fn parse_poset(p: &mut Parser, name: &str) -> Result<CountablePoset, ParseError> {
    let mut elems: Vec<String> = Vec::new();
    let mut orders: Vec<(String, String)> = Vec::new();
    let mut builtin: Option<(String, Vec<u64>)> = None;
    while p.peek() != Some(&Tok::RBrace) {
        let item = p.ident("'elem', 'order' or 'builtin'")?;
        match item.as_str() {
            "elem" => {
                loop {
                    elems.push(p.ident("an element name")?);
                    if p.peek() == Some(&Tok::Semi) {
                        break;
                    }
                }
                p.expect(&Tok::Semi, "';' after elements")?;
            }
            "order" => {
                let a = p.ident("an element name")?;
                p.expect(&Tok::Lt, "'<'")?;
                let b = p.ident("an element name")?;
                p.expect(&Tok::Semi, "';' after the order item")?;
                orders.push((a, b));
            }
            "builtin" => {
                let which = p.ident("a builtin poset name")?;
                let mut args = Vec::new();
                if p.peek() == Some(&Tok::LParen) {
                    p.pos += 1;
                    if p.peek() != Some(&Tok::RParen) {
                        loop {
                            args.push(p.number("a numeric argument")?);
                            if p.peek() == Some(&Tok::Comma) {
                                p.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    p.expect(&Tok::RParen, "')' closing the builtin arguments")?;
                }
                p.expect(&Tok::Semi, "';' after the builtin")?;
                builtin = Some((which, args));
            }
            other => return Err(p.err(&format!("'elem', 'order' or 'builtin', found '{other}'"))),
        }
    }
    if let Some((which, args)) = builtin {
        if !elems.is_empty() || !orders.is_empty() {
            return Err(p.err("either explicit items or a builtin, not both"));
        }
        return builtin_poset(&which, &args).ok_or_else(|| p.err("a known builtin poset"));
    }
    // lower < upper pairs: translate names to indices, reflexive-transitive
    // closure
    let index = |n: &str| elems.iter().position(|e| e == n);
    let mut pairs = Vec::new();
    for (a, b) in &orders {
        let (ia, ib) = match (index(a), index(b)) {
            (Some(x), Some(y)) => (x as u64, y as u64),
            _ => return Err(p.err(&format!("declared elements in 'order {a} < {b}'"))),
        };
        pairs.push((ia, ib));
    }
    let labels = elems.clone();
    Ok(
        CountablePoset::from_pairs(name, elems.len() as u64, &pairs, true).with_labels(
            move |i| {
                labels
                    .get(i as usize)
                    .cloned()
                    .unwrap_or_else(|| i.to_string())
            },
        ),
    )
}

pub fn builtin_poset(which: &str, args: &[u64]) -> Option<CountablePoset> {
    match (which, args) {
        ("omega-chain", []) => Some(CountablePoset::omega_chain()),
        ("chain", [n]) => Some(CountablePoset::chain(*n)),
        ("antichain", [n]) => Some(CountablePoset::antichain(*n)),
        ("empty", []) => Some(CountablePoset::empty()),
        _ => None,
    }
}

fn parse_frame(p: &mut Parser, name: &str) -> Result<FrameBlock, ParseError> {
    let mut gen_names: Vec<String> = Vec::new();
    let mut relations: Vec<(Expression, Expression)> = Vec::new();
    // generators must be declared before the relation items that use them
    while p.peek() != Some(&Tok::RBrace) {
        let item = p.ident("'gen' or 'rel'")?;
        match item.as_str() {
            "gen" => {
                loop {
                    gen_names.push(p.ident("a generator name")?);
                    if p.peek() == Some(&Tok::Semi) {
                        break;
                    }
                }
                p.expect(&Tok::Semi, "';' after generators")?;
            }
            "rel" => {
                let u = p.expression(&mut NameTable::Declared(&gen_names))?;
                p.expect(&Tok::Arrow, "'=>' between the relation sides")?;
                let v = p.expression(&mut NameTable::Declared(&gen_names))?;
                p.expect(&Tok::Semi, "';' after the relation")?;
                relations.push((u, v));
            }
            other => return Err(p.err(&format!("'gen' or 'rel', found '{other}'"))),
        }
    }
    Ok(FrameBlock {
        presentation: Presentation::new(name, gen_names.len() as u32, relations),
        gen_names,
    })
}

fn parse_pi02(p: &mut Parser) -> Result<qpk_core::convert::ExplicitPi02, ParseError> {
    let mut pairs: Vec<(Vec<FinSet>, Vec<FinSet>)> = Vec::new();
    while p.peek() != Some(&Tok::RBrace) {
        let kw = p.ident("'pair'")?;
        if kw != "pair" {
            return Err(p.err(&format!("'pair', found '{kw}'")));
        }
        let open_kw = p.ident("'open'")?;
        if open_kw != "open" {
            return Err(p.err("'open'"));
        }
        let b = parse_open_sets(p)?;
        let coa_kw = p.ident("'coA'")?;
        if coa_kw != "coA" {
            return Err(p.err("'coA'"));
        }
        let open_kw = p.ident("'open'")?;
        if open_kw != "open" {
            return Err(p.err("'open'"));
        }
        let co_a = parse_open_sets(p)?;
        p.expect(&Tok::Semi, "';' after the pair")?;
        pairs.push((co_a, b));
    }
    Ok(qpk_core::convert::ExplicitPi02::new(pairs))
}

fn parse_open_sets(p: &mut Parser) -> Result<Vec<FinSet>, ParseError> {
    p.expect(&Tok::LBrace, "'{' opening the basic list")?;
    let mut out = Vec::new();
    while p.peek() == Some(&Tok::LBrace) {
        out.push(p.finset()?);
    }
    p.expect(&Tok::RBrace, "'}' closing the basic list")?;
    Ok(out)
}

fn parse_point(p: &mut Parser) -> Result<ExplicitSubset, ParseError> {
    let kw = p.ident("'finite' or 'rule'")?;
    let s = match kw.as_str() {
        "finite" => ExplicitSubset::finite(p.finset()?),
        "rule" => {
            let which = p.ident("a rule name ('evens' or 'range')")?;
            match which.as_str() {
                "evens" => ExplicitSubset::evens(),
                "range" => {
                    p.expect(&Tok::LParen, "'('")?;
                    let a = p.number("range start")?;
                    p.expect(&Tok::Comma, "','")?;
                    let b = p.number("range end")?;
                    p.expect(&Tok::RParen, "')'")?;
                    ExplicitSubset::range(a, b)
                }
                other => return Err(p.err(&format!("'evens' or 'range', found '{other}'"))),
            }
        }
        other => return Err(p.err(&format!("'finite' or 'rule', found '{other}'"))),
    };
    p.expect(&Tok::Semi, "';' after the point")?;
    Ok(s)
}

fn parse_goal_block(p: &mut Parser, doc: &Document) -> Result<Goal, ParseError> {
    let kw = p.ident("'frame'")?;
    if kw != "frame" {
        return Err(p.err("'frame'"));
    }
    let frame = p.ident("a frame name")?;
    p.expect(&Tok::Semi, "';' after the frame reference")?;
    let block = doc
        .frames
        .get(&frame)
        .ok_or_else(|| p.err(&format!("a defined frame ('{frame}' is unknown)")))?;
    let kw = p.ident("'show'")?;
    if kw != "show" {
        return Err(p.err("'show'"));
    }
    let lhs = p.expression(&mut NameTable::Declared(&block.gen_names))?;
    p.expect(&Tok::Leq, "'<=' between the goal sides")?;
    let rhs = p.expression(&mut NameTable::Declared(&block.gen_names))?;
    p.expect(&Tok::Semi, "';' after the goal")?;
    Ok(Goal { frame, lhs, rhs })
}
