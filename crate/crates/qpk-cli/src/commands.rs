//! Command dispatch. Every command builds a [`Report`] and an exit code;
//! `prove` uses 0/1/2 for proved/refuted/unknown, and surfaced errors exit
//! with codes >= 10.

use crate::dsl::{self, Document};
use crate::report::{Format, Report};
use crate::suites;
use qpk_core::convert::{
    frame_to_pi02, npuf_to_pi02, pi02_to_frame, pi02_to_npuf, pi02_to_uf, qm_to_uf, uf_to_pi02,
};
use qpk_core::frames::{derives, BaseReading, DerivesResult};
use qpk_core::pairing::pair_cutoff;
use qpk_core::poset::transform::{handyfy_allfilters, handyfy_uf, np_to_npuf, npuf_to_np, product};
use qpk_core::poset::{enumerate_filters_bounded, CountablePoset, DEFAULT_MAX_CARRIER};

pub const EXIT_PROVED: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 10;
pub const EXIT_PARSE: i32 = 11;
pub const EXIT_RESOLVE: i32 = 12;
pub const EXIT_MODULE: i32 = 13;

pub struct Flags {
    pub depth: usize,
    pub precision: i64,
    pub samples: u64,
    pub seed: u64,
    pub format: Format,
    pub exhaustive: Option<u64>,
    pub kind: Option<String>,
    pub bound: u64,
    pub timing: bool,
    pub base_reading: BaseReading,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            depth: 8,
            precision: 16,
            samples: 20,
            seed: 0,
            format: Format::Text,
            exhaustive: None,
            kind: None,
            bound: 8,
            timing: false,
            base_reading: BaseReading::Closing,
        }
    }
}

pub struct Outcome {
    pub output: String,
    pub exit: i32,
}

fn fail(report: &mut Report, format: Format, exit: i32, message: impl ToString) -> Outcome {
    report.verdict("error", message.to_string());
    Outcome {
        output: report.render(format),
        exit,
    }
}

fn max_carrier() -> u64 {
    std::env::var("QPK_MAX_CARRIER")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_CARRIER)
}

fn load(path: &str) -> Result<Document, (i32, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (EXIT_USAGE, format!("cannot read {path}: {e}")))?;
    dsl::parse(&text).map_err(|e| (EXIT_PARSE, e.to_string()))
}

fn resolve_poset(doc: &Document, name: &str) -> Result<CountablePoset, (i32, String)> {
    doc.posets
        .get(name)
        .cloned()
        .or_else(|| dsl::builtin_poset(name, &[]))
        .ok_or((EXIT_RESOLVE, format!("no poset named '{name}'")))
}

/// Runs a full command line (without the binary name).
pub fn run(args: &[String]) -> Outcome {
    let (positional, flags) = match split_flags(args) {
        Ok(x) => x,
        Err(msg) => {
            let mut r = Report::new(args.join(" "), 0);
            return fail(&mut r, Format::Text, EXIT_USAGE, msg);
        }
    };
    let echo = args.join(" ");
    let mut report = Report::new(&echo, flags.seed);
    let started = std::time::Instant::now();
    let mut outcome = dispatch(&positional, &flags, &mut report);
    if flags.timing {
        report.timing_ms = Some(started.elapsed().as_millis());
        outcome.output = report.render(flags.format);
    }
    outcome
}

fn split_flags(args: &[String]) -> Result<(Vec<String>, Flags), String> {
    let mut flags = Flags::default();
    let mut positional = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if let Some(name) = a.strip_prefix("--") {
            let mut value = || {
                it.next()
                    .cloned()
                    .ok_or_else(|| format!("flag --{name} needs a value"))
            };
            match name {
                "depth" => flags.depth = value()?.parse().map_err(|_| "bad --depth")?,
                "precision" => flags.precision = value()?.parse().map_err(|_| "bad --precision")?,
                "samples" => flags.samples = value()?.parse().map_err(|_| "bad --samples")?,
                "seed" => flags.seed = value()?.parse().map_err(|_| "bad --seed")?,
                "exhaustive" => {
                    flags.exhaustive = Some(value()?.parse().map_err(|_| "bad --exhaustive")?)
                }
                "bound" => flags.bound = value()?.parse().map_err(|_| "bad --bound")?,
                "kind" => flags.kind = Some(value()?),
                "timing" => flags.timing = true,
                "base-reading" => {
                    flags.base_reading = match value()?.as_str() {
                        "closing" => BaseReading::Closing,
                        "side-condition" => BaseReading::SideCondition,
                        other => return Err(format!("unknown base reading '{other}'")),
                    }
                }
                "format" => {
                    flags.format = match value()?.as_str() {
                        "text" => Format::Text,
                        "json" => Format::Json,
                        other => return Err(format!("unknown format '{other}'")),
                    }
                }
                other => return Err(format!("unknown flag --{other}")),
            }
        } else {
            positional.push(a.clone());
        }
    }
    Ok((positional, flags))
}

fn dispatch(positional: &[String], flags: &Flags, report: &mut Report) -> Outcome {
    let fmt = flags.format;
    match positional.first().map(String::as_str) {
        Some("parse") => cmd_parse(&positional[1..], flags, report),
        Some("enumerate") => cmd_enumerate(&positional[1..], flags, report),
        Some("prove") => cmd_prove(&positional[1..], flags, report),
        Some("check") => cmd_check(&positional[1..], flags, report),
        Some("convert") => cmd_convert(&positional[1..], flags, report),
        Some(other) => fail(
            report,
            fmt,
            EXIT_USAGE,
            format!("unknown command '{other}' (try parse, enumerate, prove, check, convert)"),
        ),
        None => fail(
            report,
            fmt,
            EXIT_USAGE,
            "usage: qpk <parse|enumerate|prove|check|convert> ...",
        ),
    }
}

fn cmd_parse(rest: &[String], flags: &Flags, report: &mut Report) -> Outcome {
    let [path] = rest else {
        return fail(report, flags.format, EXIT_USAGE, "usage: qpk parse FILE");
    };
    match load(path) {
        Err((code, msg)) => fail(report, flags.format, code, msg),
        Ok(doc) => {
            report.verdict("posets", doc.posets.len());
            report.verdict("frames", doc.frames.len());
            report.verdict("pi02", doc.pi02s.len());
            report.verdict("points", doc.points.len());
            report.verdict("exprs", doc.exprs.len());
            report.verdict("goals", doc.goals.len());
            Outcome {
                output: report.render(flags.format),
                exit: 0,
            }
        }
    }
}

fn cmd_enumerate(rest: &[String], flags: &Flags, report: &mut Report) -> Outcome {
    let [what, path, name] = rest else {
        return fail(
            report,
            flags.format,
            EXIT_USAGE,
            "usage: qpk enumerate filters FILE POSET [--kind all|uf|np|mf]",
        );
    };
    if what != "filters" {
        return fail(report, flags.format, EXIT_USAGE, "only 'filters' can be enumerated");
    }
    let doc = match load(path) {
        Ok(d) => d,
        Err((code, msg)) => return fail(report, flags.format, code, msg),
    };
    let poset = match resolve_poset(&doc, name) {
        Ok(p) => p,
        Err((code, msg)) => return fail(report, flags.format, code, msg),
    };
    match enumerate_filters_bounded(&poset, max_carrier()) {
        Err(e) => fail(report, flags.format, EXIT_MODULE, e),
        Ok(e) => {
            let kind = flags.kind.as_deref().unwrap_or("all");
            let list = match kind {
                "all" => &e.filters,
                "uf" => &e.unbounded,
                "np" => &e.nonprincipal,
                "mf" => &e.maximal,
                other => {
                    return fail(
                        report,
                        flags.format,
                        EXIT_USAGE,
                        format!("unknown kind '{other}'"),
                    )
                }
            };
            report.verdict("kind", kind);
            report.verdict("count", list.len());
            for f in list {
                let labels: Vec<String> = f.iter().map(|&i| poset.label(i)).collect();
                report.witness(format!("{{{}}}", labels.join(",")));
            }
            Outcome {
                output: report.render(flags.format),
                exit: 0,
            }
        }
    }
}

fn cmd_prove(rest: &[String], flags: &Flags, report: &mut Report) -> Outcome {
    let (path, frame_name, goal_text) = match rest {
        [path, frame, goal] => (path, frame, goal),
        _ => {
            return fail(
                report,
                flags.format,
                EXIT_USAGE,
                "usage: qpk prove FILE FRAME \"a <= b\" [--depth N]",
            )
        }
    };
    let doc = match load(path) {
        Ok(d) => d,
        Err((code, msg)) => return fail(report, flags.format, code, msg),
    };
    let Some(block) = doc.frames.get(frame_name) else {
        return fail(
            report,
            flags.format,
            EXIT_RESOLVE,
            format!("no frame named '{frame_name}'"),
        );
    };
    let (lhs, rhs) = match dsl::parse_goal(goal_text, &block.gen_names) {
        Ok(g) => g,
        Err(e) => return fail(report, flags.format, EXIT_PARSE, e),
    };
    report.verdict("goal", format!("{lhs} <= {rhs}"));
    match derives(&lhs, &rhs, &block.presentation, flags.depth, flags.base_reading) {
        DerivesResult::Proved(t) => {
            report.verdict("result", "proved");
            report.verdict("proof-size", t.size());
            for line in t.render().lines() {
                report.witness(line.to_string());
            }
            Outcome {
                output: report.render(flags.format),
                exit: EXIT_PROVED,
            }
        }
        DerivesResult::Refuted(pt) => {
            report.verdict("result", "refuted");
            let stage: Vec<String> = pt
                .final_stage()
                .iter()
                .map(|&g| {
                    block
                        .gen_names
                        .get(g as usize)
                        .cloned()
                        .unwrap_or_else(|| format!("g{g}"))
                })
                .collect();
            report.witness(format!("countermodel: {{{}}}", stage.join(",")));
            Outcome {
                output: report.render(flags.format),
                exit: EXIT_REFUTED,
            }
        }
        DerivesResult::Unknown => {
            report.verdict("result", "unknown");
            Outcome {
                output: report.render(flags.format),
                exit: EXIT_UNKNOWN,
            }
        }
    }
}

fn cmd_check(rest: &[String], flags: &Flags, report: &mut Report) -> Outcome {
    let Some(suite) = rest.first() else {
        return fail(
            report,
            flags.format,
            EXIT_USAGE,
            "usage: qpk check <quasi-metric|handy|roundtrip|frame-triad> ...",
        );
    };
    let outcome = match suite.as_str() {
        "quasi-metric" => {
            let Some(fixture_name) = rest.get(1) else {
                return fail(report, flags.format, EXIT_USAGE, "quasi-metric needs a fixture name");
            };
            let Some(space) = suites::fixture(fixture_name) else {
                return fail(
                    report,
                    flags.format,
                    EXIT_RESOLVE,
                    format!("unknown fixture '{fixture_name}'"),
                );
            };
            suites::quasi_metric_suite(
                report,
                &space,
                flags.exhaustive,
                flags.samples,
                flags.seed,
                flags.precision,
            )
        }
        "handy" => {
            let (path, name) = match (rest.get(1), rest.get(2)) {
                (Some(p), Some(n)) => (p, n),
                _ => return fail(report, flags.format, EXIT_USAGE, "handy needs FILE POSET"),
            };
            let doc = match load(path) {
                Ok(d) => d,
                Err((code, msg)) => return fail(report, flags.format, code, msg),
            };
            let poset = match resolve_poset(&doc, name) {
                Ok(p) => p,
                Err((code, msg)) => return fail(report, flags.format, code, msg),
            };
            suites::handy_suite(report, &poset, flags.depth)
        }
        "roundtrip" => {
            let target = match (rest.get(1).map(String::as_str), rest.get(2), rest.get(3)) {
                (Some("qm-uf"), Some(fixture_name), _) => match suites::fixture(fixture_name) {
                    Some(s) => suites::RoundTripTarget::Fixture(s),
                    None => {
                        return fail(
                            report,
                            flags.format,
                            EXIT_RESOLVE,
                            format!("unknown fixture '{fixture_name}'"),
                        )
                    }
                },
                (Some("uf-pi02"), Some(path), Some(name)) => {
                    let doc = match load(path) {
                        Ok(d) => d,
                        Err((code, msg)) => return fail(report, flags.format, code, msg),
                    };
                    match resolve_poset(&doc, name) {
                        Ok(p) => suites::RoundTripTarget::Poset(p),
                        Err((code, msg)) => return fail(report, flags.format, code, msg),
                    }
                }
                _ => {
                    return fail(
                        report,
                        flags.format,
                        EXIT_USAGE,
                        "usage: qpk check roundtrip <qm-uf FIXTURE | uf-pi02 FILE POSET>",
                    )
                }
            };
            suites::roundtrip_suite(report, &target, flags.samples, flags.seed, flags.depth)
        }
        "frame-triad" => {
            let (path, name) = match (rest.get(1), rest.get(2)) {
                (Some(p), Some(n)) => (p, n),
                _ => {
                    return fail(report, flags.format, EXIT_USAGE, "frame-triad needs FILE FRAME")
                }
            };
            let doc = match load(path) {
                Ok(d) => d,
                Err((code, msg)) => return fail(report, flags.format, code, msg),
            };
            let Some(block) = doc.frames.get(name.as_str()) else {
                return fail(
                    report,
                    flags.format,
                    EXIT_RESOLVE,
                    format!("no frame named '{name}'"),
                );
            };
            suites::frame_triad_suite(
                report,
                &block.presentation,
                flags.samples,
                flags.seed,
                flags.depth,
            )
        }
        other => {
            return fail(
                report,
                flags.format,
                EXIT_USAGE,
                format!("unknown suite '{other}'"),
            )
        }
    };
    Outcome {
        output: report.render(flags.format),
        exit: if outcome.passed { 0 } else { 1 },
    }
}

fn cmd_convert(rest: &[String], flags: &Flags, report: &mut Report) -> Outcome {
    let Some(what) = rest.first() else {
        return fail(
            report,
            flags.format,
            EXIT_USAGE,
            "usage: qpk convert <uf-to-pi02|handyfy-uf|handyfy-all|np-to-npuf|npuf-to-np|\
             pi02-to-npuf|pi02-to-uf|npuf-to-pi02|qm-to-uf|frame-to-pi02|pi02-to-frame|product|dense> ...",
        );
    };
    let cutoff = pair_cutoff(flags.bound.max(4));
    let result: Result<String, (i32, String)> = match what.as_str() {
        "handyfy-uf" | "handyfy-all" | "np-to-npuf" | "npuf-to-np" | "uf-to-pi02"
        | "npuf-to-pi02" => with_poset(rest, |poset| match what.as_str() {
            "handyfy-uf" => Ok(render_poset_prefix(&handyfy_uf(&poset).poset, cutoff)),
            "handyfy-all" => Ok(render_poset_prefix(&handyfy_allfilters(&poset).poset, cutoff)),
            "np-to-npuf" => Ok(render_poset_prefix(&np_to_npuf(&poset).target, cutoff)),
            "npuf-to-np" => Ok(render_poset_prefix(&npuf_to_np(&poset).target, cutoff)),
            "npuf-to-pi02" => Ok(render_pi02_code(
                &npuf_to_pi02(&poset, flags.bound.max(4)),
                flags.depth,
            )),
            "uf-to-pi02" => {
                let conv = uf_to_pi02(&poset, cutoff).map_err(|e| (EXIT_MODULE, e.to_string()))?;
                Ok(render_pi02_code(&conv.code, flags.depth))
            }
            _ => unreachable!(),
        }),
        "product" => {
            let (path, a, b) = match (rest.get(1), rest.get(2), rest.get(3)) {
                (Some(p), Some(a), Some(b)) => (p, a, b),
                _ => {
                    return fail(report, flags.format, EXIT_USAGE, "product needs FILE POSET POSET")
                }
            };
            (|| {
                let doc = load(path)?;
                let pa = resolve_poset(&doc, a)?;
                let pb = resolve_poset(&doc, b)?;
                Ok(render_poset_prefix(&product(&pa, &pb).poset, cutoff))
            })()
        }
        "pi02-to-npuf" | "pi02-to-uf" | "pi02-to-frame" | "dense" => {
            let (path, name) = match (rest.get(1), rest.get(2)) {
                (Some(p), Some(n)) => (p, n),
                _ => {
                    return fail(
                        report,
                        flags.format,
                        EXIT_USAGE,
                        format!("{what} needs FILE PI02"),
                    )
                }
            };
            (|| {
                let doc = load(path)?;
                let x = doc
                    .pi02s
                    .get(name.as_str())
                    .ok_or((EXIT_RESOLVE, format!("no pi02 named '{name}'")))?;
                match what.as_str() {
                    "pi02-to-npuf" => {
                        let conv = pi02_to_npuf(x);
                        Ok(render_poset_prefix(&conv.poset, cutoff))
                    }
                    "pi02-to-uf" => {
                        let conv = pi02_to_uf(x, flags.depth.max(4), flags.bound.min(16));
                        report.verdict("exact", conv.exact);
                        Ok(render_poset_prefix(&conv.poset, cutoff))
                    }
                    "pi02-to-frame" => {
                        let pres = pi02_to_frame(&x.to_code(), flags.depth.max(16))
                            .map_err(|e| (EXIT_MODULE, e.to_string()))?;
                        Ok(render_presentation(&pres))
                    }
                    "dense" => {
                        let kind = match flags.kind.as_deref() {
                            Some("closed") => qpk_core::convert::DenseKind::Closed,
                            Some("gdelta") | None => qpk_core::convert::DenseKind::Gdelta,
                            Some("sigma2") => qpk_core::convert::DenseKind::Sigma2,
                            Some(other) => {
                                return Err((EXIT_USAGE, format!("unknown dense kind '{other}'")))
                            }
                        };
                        let code = x.to_code().to_borel();
                        let pts =
                            qpk_core::convert::dense_sequence(&code, kind, flags.bound as usize)
                                .map_err(|e| (EXIT_MODULE, e.to_string()))?;
                        let mut out = String::new();
                        for (i, p) in pts.iter().enumerate() {
                            out.push_str(&format!("point d{i} {{ finite {}; }}\n", match p {
                                qpk_core::pn::ExplicitSubset::Finite(s) => s.to_string(),
                                other => format!("{other:?}"),
                            }));
                        }
                        Ok(out)
                    }
                    _ => unreachable!(),
                }
            })()
        }
        "qm-to-uf" => {
            let Some(fixture_name) = rest.get(1) else {
                return fail(report, flags.format, EXIT_USAGE, "qm-to-uf needs a fixture name");
            };
            (|| {
                let space = suites::fixture(fixture_name)
                    .ok_or((EXIT_RESOLVE, format!("unknown fixture '{fixture_name}'")))?;
                let iso = qm_to_uf(&space).map_err(|e| (EXIT_MODULE, e.to_string()))?;
                Ok(render_poset_prefix(&iso.poset, cutoff))
            })()
        }
        "frame-to-pi02" => {
            let (path, name) = match (rest.get(1), rest.get(2)) {
                (Some(p), Some(n)) => (p, n),
                _ => {
                    return fail(report, flags.format, EXIT_USAGE, "frame-to-pi02 needs FILE FRAME")
                }
            };
            (|| {
                let doc = load(path)?;
                let block = doc
                    .frames
                    .get(name.as_str())
                    .ok_or((EXIT_RESOLVE, format!("no frame named '{name}'")))?;
                Ok(render_pi02_code(
                    &frame_to_pi02(&block.presentation),
                    flags.depth.max(16),
                ))
            })()
        }
        other => {
            return fail(
                report,
                flags.format,
                EXIT_USAGE,
                format!("unknown conversion '{other}'"),
            )
        }
    };

    fn with_poset(
        rest: &[String],
        f: impl FnOnce(CountablePoset) -> Result<String, (i32, String)>,
    ) -> Result<String, (i32, String)> {
        let (path, name) = match (rest.get(1), rest.get(2)) {
            (Some(p), Some(n)) => (p, n),
            _ => return Err((EXIT_USAGE, "this conversion needs FILE POSET".into())),
        };
        let doc = load(path)?;
        let poset = resolve_poset(&doc, name)?;
        f(poset)
    }

    match result {
        Ok(payload) => {
            report.verdict("ok", true);
            report.payload = Some(payload);
            Outcome {
                output: report.render(flags.format),
                exit: 0,
            }
        }
        Err((code, msg)) => fail(report, flags.format, code, msg),
    }
}

/// Serializes the prefix of a poset below the cutoff as a `poset` block.
pub fn render_poset_prefix(p: &CountablePoset, cutoff: u64) -> String {
    let idx = p.valid_below(cutoff);
    let mut out = String::new();
    out.push_str(&format!("poset prefix {{ # {} below {}\n", p.name(), cutoff));
    if !idx.is_empty() {
        out.push_str("  elem");
        for &i in &idx {
            out.push_str(&format!(" e{i}"));
        }
        out.push_str(";\n");
        for &i in &idx {
            out.push_str(&format!("  # e{i} = {}\n", p.label(i)));
        }
        for &a in &idx {
            for &b in &idx {
                if a != b && p.lt(a, b) {
                    out.push_str(&format!("  order e{a} < e{b};\n"));
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Serializes the visible constituents of a Π⁰₂ code as a `pi02` block.
pub fn render_pi02_code(code: &qpk_core::codes::Pi02Code, stage: usize) -> String {
    use qpk_core::codes::Descriptor;
    let (pairs, complete) = code.pairs.at(stage);
    let mut out = String::new();
    out.push_str(&format!(
        "pi02 prefix {{ # first {} constituents{}\n",
        pairs.len(),
        if complete { ", complete" } else { "" }
    ));
    for (b, co_a) in pairs {
        let fmt_open = |o: &qpk_core::codes::OpenCode| {
            let (basics, _) = o.basics.at(stage.max(64));
            let mut s = String::from("open{ ");
            for basic in basics {
                if let Descriptor::PnSet(fs) = basic.desc {
                    s.push_str(&format!("{fs} "));
                }
            }
            s.push('}');
            s
        };
        out.push_str(&format!("  pair {} coA {};\n", fmt_open(&b), fmt_open(&co_a)));
    }
    out.push_str("}\n");
    out
}

/// Serializes a presentation as a `frame` block with `g<k>` names.
pub fn render_presentation(pres: &qpk_core::frames::Presentation) -> String {
    let gens: std::collections::BTreeSet<u32> = pres
        .relations
        .iter()
        .flat_map(|(u, v)| {
            u.generators()
                .into_iter()
                .chain(v.generators())
                .collect::<Vec<_>>()
        })
        .collect();
    let mut out = String::new();
    out.push_str(&format!("frame {} {{\n", pres.name));
    if !gens.is_empty() {
        out.push_str("  gen");
        for g in &gens {
            out.push_str(&format!(" g{g}"));
        }
        out.push_str(";\n");
    }
    for (u, v) in &pres.relations {
        out.push_str(&format!("  rel {u} => {v};\n"));
    }
    out.push_str("}\n");
    out
}
