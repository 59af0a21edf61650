//! Random small methods and an exhaustive trace-based def-use oracle for them.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vulnreach::java::{parse_sources, CallSite, CodeModel, StmtRef};
use vulnreach::ptg::{parameter_paths, ConversionAllowlist, ParameterPath, Root, TransferKind};

pub const FORMALS: [&str; 2] = ["p", "q"];
pub const FIELD: &str = "f";
pub const LOCALS: [&str; 3] = ["a", "b", "c"];
/// Local declared `Object`; plain copies into it widen.
pub const OBJ: &str = "o";
pub const MAX_STATEMENTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GExpr {
    Var(&'static str),
    Cast(&'static str),
    ValueOf(&'static str),
    ToStr(&'static str),
    Trim(&'static str),
    Suffix(&'static str),
    Concat(&'static str, &'static str),
    Helper(&'static str, &'static str),
    Lit,
}

impl GExpr {
    pub fn vars(&self) -> BTreeSet<&'static str> {
        match *self {
            GExpr::Var(v)
            | GExpr::Cast(v)
            | GExpr::ValueOf(v)
            | GExpr::ToStr(v)
            | GExpr::Trim(v)
            | GExpr::Suffix(v) => BTreeSet::from([v]),
            GExpr::Concat(v, w) | GExpr::Helper(v, w) => BTreeSet::from([v, w]),
            GExpr::Lit => BTreeSet::new(),
        }
    }

    pub fn render(&self) -> String {
        match *self {
            GExpr::Var(v) => v.to_string(),
            GExpr::Cast(v) => format!("(String) {}", v),
            GExpr::ValueOf(v) => format!("String.valueOf({})", v),
            GExpr::ToStr(v) => format!("{}.toString()", v),
            GExpr::Trim(v) => format!("{}.trim()", v),
            GExpr::Suffix(v) => format!("{} + \"!\"", v),
            GExpr::Concat(v, w) => format!("{} + {}", v, w),
            GExpr::Helper(v, w) => format!("helper({}, {})", v, w),
            GExpr::Lit => "\"k\"".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GStmt {
    Assign {
        lhs: &'static str,
        rhs: GExpr,
    },
    Log(&'static str),
    If {
        cond: &'static str,
        then: Vec<GStmt>,
        other: Option<Vec<GStmt>>,
    },
    While {
        cond: &'static str,
        body: Vec<GStmt>,
    },
    Try {
        body: Vec<GStmt>,
        handler: Vec<GStmt>,
    },
}

#[derive(Debug, Clone)]
pub struct GenMethod {
    pub body: Vec<GStmt>,
    pub arg: GExpr,
}

fn all_vars() -> Vec<&'static str> {
    let mut v: Vec<&'static str> = FORMALS.to_vec();
    v.push(FIELD);
    v.extend(LOCALS);
    v.push(OBJ);
    v
}

fn pick(rng: &mut ChaCha8Rng, items: &[&'static str]) -> &'static str {
    items[rng.random_range(0..items.len())]
}

/// Operand pool, weighted toward the formals.
fn operand_pool() -> Vec<&'static str> {
    let mut v = all_vars();
    v.extend(FORMALS);
    v.extend(FORMALS);
    v
}

fn gen_expr(rng: &mut ChaCha8Rng) -> GExpr {
    let vars = operand_pool();
    let v = pick(rng, &vars);
    let w = pick(rng, &vars);
    match rng.random_range(0..12) {
        0..=3 => GExpr::Var(v),
        4 => GExpr::Cast(v),
        5 => GExpr::ValueOf(v),
        6 => GExpr::ToStr(v),
        7 => GExpr::Trim(v),
        8 => GExpr::Suffix(v),
        9 => GExpr::Concat(v, w),
        10 => GExpr::Helper(v, w),
        _ => GExpr::Lit,
    }
}

fn gen_block(rng: &mut ChaCha8Rng, budget: &mut usize, depth: usize) -> Vec<GStmt> {
    let mut out = Vec::new();
    let len = rng.random_range(0..=3);
    for _ in 0..len {
        if *budget == 0 {
            break;
        }
        let compound = depth < 2 && *budget >= 2 && rng.random_bool(0.35);
        let mut lhs_pool: Vec<&'static str> = LOCALS.to_vec();
        lhs_pool.extend([OBJ, FIELD]);
        if !compound {
            *budget -= 1;
            out.push(if rng.random_bool(0.85) {
                GStmt::Assign {
                    lhs: pick(rng, &lhs_pool),
                    rhs: gen_expr(rng),
                }
            } else {
                GStmt::Log(pick(rng, &all_vars()))
            });
            continue;
        }
        match rng.random_range(0..3) {
            0 => {
                *budget -= 1;
                let cond = pick(rng, &all_vars());
                let then = gen_block(rng, budget, depth + 1);
                let other = rng.random_bool(0.5).then(|| gen_block(rng, budget, depth + 1));
                out.push(GStmt::If { cond, then, other });
            }
            1 => {
                *budget -= 1;
                let cond = pick(rng, &all_vars());
                let body = gen_block(rng, budget, depth + 1);
                out.push(GStmt::While { cond, body });
            }
            _ => {
                *budget -= 1;
                let body = gen_block(rng, budget, depth + 1);
                let handler = gen_block(rng, budget, depth + 1);
                out.push(GStmt::Try { body, handler });
            }
        }
    }
    out
}

/// A random method of at most [`MAX_STATEMENTS`] statements ending in the call `sink.fromXML(arg)`.
pub fn generate(seed: u64) -> GenMethod {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut budget = MAX_STATEMENTS - 1;
    let mut body = Vec::new();
    while budget > 0 && rng.random_bool(0.8) {
        body.extend(gen_block(&mut rng, &mut budget, 0));
    }
    let mut assigned = Vec::new();
    fn collect(stmts: &[GStmt], out: &mut Vec<&'static str>) {
        for s in stmts {
            match s {
                GStmt::Assign { lhs, .. } => out.push(*lhs),
                GStmt::Log(_) => {}
                GStmt::If { then, other, .. } => {
                    collect(then, out);
                    collect(other.as_deref().unwrap_or(&[]), out);
                }
                GStmt::While { body, .. } => collect(body, out),
                GStmt::Try { body, handler } => {
                    collect(body, out);
                    collect(handler, out);
                }
            }
        }
    }
    collect(&body, &mut assigned);
    let arg = match rng.random_range(0..6) {
        0..=3 if !assigned.is_empty() => GExpr::Var(pick(&mut rng, &assigned)),
        0..=3 => GExpr::Var(pick(&mut rng, &operand_pool())),
        _ => gen_expr(&mut rng),
    };
    GenMethod { body, arg }
}

/// A statement with the source line it was rendered on.
#[derive(Debug, Clone)]
enum Lined {
    Assign { lhs: &'static str, rhs: GExpr, line: u32 },
    Simple,
    If { then: Vec<Lined>, other: Vec<Lined> },
    While { body: Vec<Lined> },
    Try { body: Vec<Lined>, handler: Vec<Lined> },
}

struct Renderer {
    lines: Vec<String>,
}

impl Renderer {
    fn push(&mut self, indent: usize, text: String) -> u32 {
        self.lines.push(format!("{}{}", " ".repeat(indent), text));
        self.lines.len() as u32
    }

    fn block(&mut self, stmts: &[GStmt], indent: usize) -> Vec<Lined> {
        stmts.iter().map(|s| self.stmt(s, indent)).collect()
    }

    fn stmt(&mut self, s: &GStmt, indent: usize) -> Lined {
        match s {
            GStmt::Assign { lhs, rhs } => {
                let line = self.push(indent, format!("{} = {};", lhs, rhs.render()));
                Lined::Assign {
                    lhs,
                    rhs: rhs.clone(),
                    line,
                }
            }
            GStmt::Log(v) => {
                self.push(indent, format!("log({});", v));
                Lined::Simple
            }
            GStmt::If { cond, then, other } => {
                self.push(indent, format!("if ({} == null) {{", cond));
                let then = self.block(then, indent + 4);
                let other = match other {
                    Some(o) => {
                        self.push(indent, "} else {".to_string());
                        self.block(o, indent + 4)
                    }
                    None => Vec::new(),
                };
                self.push(indent, "}".to_string());
                Lined::If { then, other }
            }
            GStmt::While { cond, body } => {
                self.push(indent, format!("while ({} != null) {{", cond));
                let body = self.block(body, indent + 4);
                self.push(indent, "}".to_string());
                Lined::While { body }
            }
            GStmt::Try { body, handler } => {
                self.push(indent, "try {".to_string());
                let body = self.block(body, indent + 4);
                self.push(indent, "} catch (Exception e) {".to_string());
                let mut handler = self.block(handler, indent + 4);
                handler.insert(0, Lined::Simple);
                self.push(indent, "}".to_string());
                Lined::Try { body, handler }
            }
        }
    }
}

fn render_lined(m: &GenMethod) -> (String, Vec<Lined>, u32) {
    let mut r = Renderer {
        lines: [
            "package gen;",
            "class G {",
            "    String f;",
            "    Sink sink;",
            "    void m(String p, String q) {",
            "        String a, b, c;",
            "        Object o;",
        ]
        .map(String::from)
        .to_vec(),
    };
    let body = r.block(&m.body, 8);
    let sink = r.push(8, format!("sink.fromXML({});", m.arg.render()));
    r.push(4, "}".to_string());
    r.push(0, "}".to_string());
    (r.lines.join("\n") + "\n", body, sink)
}

/// Java source for the method, one statement per line.
pub fn render(m: &GenMethod) -> String {
    render_lined(m).0
}

pub fn sink_line(source: &str) -> u32 {
    source.lines().position(|l| l.contains("sink.fromXML(")).expect("sink") as u32 + 1
}

/// One step as seen by the oracle: source variable, target, line.
pub type Hop = (Option<String>, String, u32);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OraclePath {
    pub root: Root,
    pub hops: Vec<Hop>,
    pub kinds: Vec<TransferKind>,
}

/// A chain with, per hop, the expression of its defining statement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Chain {
    root: Root,
    hops: Vec<(Option<String>, String, u32)>,
    exprs: Vec<String>,
}

type State = BTreeMap<&'static str, BTreeSet<Chain>>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Outcome {
    Normal(State),
    Abort(State),
}

fn entry_state() -> State {
    all_vars()
        .into_iter()
        .map(|v| {
            let root = if FORMALS.contains(&v) {
                Root::Formal { name: v.to_string() }
            } else if v == FIELD {
                Root::Field { name: v.to_string() }
            } else {
                Root::Undefined { name: v.to_string() }
            };
            let chain = Chain {
                root,
                hops: Vec::new(),
                exprs: Vec::new(),
            };
            (v, BTreeSet::from([chain]))
        })
        .collect()
}

/// Every way `stmts` can finish from `state`: normally, or abandoned by an exception.
fn run_block(stmts: &[Lined], state: State) -> BTreeSet<Outcome> {
    let mut outcomes = BTreeSet::from([Outcome::Normal(state)]);
    for s in stmts {
        let mut next = BTreeSet::new();
        for o in outcomes {
            match o {
                Outcome::Abort(_) => {
                    next.insert(o);
                }
                Outcome::Normal(st) => next.extend(run_stmt(s, st)),
            }
        }
        outcomes = next;
    }
    outcomes
}

fn run_stmt(s: &Lined, state: State) -> BTreeSet<Outcome> {
    match s {
        Lined::Assign { lhs, rhs, line } => {
            let uses = rhs.vars();
            let step = |source: Option<&str>, c: &Chain| {
                let mut c = c.clone();
                c.hops.push((source.map(String::from), lhs.to_string(), *line));
                c.exprs.push(rhs.render());
                c
            };
            let chains: BTreeSet<Chain> = if uses.is_empty() {
                let internal = Chain {
                    root: Root::Internal,
                    hops: Vec::new(),
                    exprs: Vec::new(),
                };
                BTreeSet::from([step(None, &internal)])
            } else {
                uses.iter()
                    .flat_map(|w| state[w].iter().map(|c| step(Some(w), c)).collect::<Vec<_>>())
                    .collect()
            };
            let mut after = state.clone();
            after.insert(lhs, chains);
            BTreeSet::from([Outcome::Abort(state), Outcome::Normal(after)])
        }
        Lined::Simple => BTreeSet::from([Outcome::Abort(state.clone()), Outcome::Normal(state)]),
        Lined::If { then, other } => {
            let mut out = BTreeSet::from([Outcome::Abort(state.clone())]);
            out.extend(run_block(then, state.clone()));
            out.extend(run_block(other, state));
            out
        }
        Lined::While { body } => {
            let mut out = BTreeSet::from([Outcome::Abort(state.clone()), Outcome::Normal(state.clone())]);
            out.extend(run_block(body, state));
            out
        }
        Lined::Try { body, handler } => {
            let mut out = BTreeSet::new();
            for o in run_block(body, state) {
                match o {
                    Outcome::Normal(_) => {
                        out.insert(o);
                    }
                    Outcome::Abort(st) => out.extend(run_block(handler, st)),
                }
            }
            out
        }
    }
}

fn expr_kind(text: &str) -> TransferKind {
    let e = text.trim();
    if e.starts_with('"') {
        TransferKind::NoPropagation
    } else if e.starts_with("(String) ") || e.starts_with("String.valueOf(") || e.ends_with(".toString()") {
        TransferKind::TypeConversion
    } else if e.chars().all(|c| c.is_ascii_alphanumeric()) {
        TransferKind::DirectPropagation
    } else {
        TransferKind::ValueChange
    }
}

/// Every def-use chain reaching the sink argument over every execution of the method.
///
/// Branch arms are chosen freely, loops run zero or one times, and any statement
/// may throw before taking effect; a throw inside a `try` body resumes in its handler.
pub fn oracle(m: &GenMethod, label: &str) -> BTreeSet<OraclePath> {
    let (_, body, sink) = render_lined(m);
    let uses = m.arg.vars();
    let mut out = BTreeSet::new();
    if uses.is_empty() {
        out.insert(OraclePath {
            root: Root::Internal,
            hops: vec![(None, label.to_string(), sink)],
            kinds: vec![TransferKind::NoPropagation],
        });
        return out;
    }
    for o in run_block(&body, entry_state()) {
        let Outcome::Normal(state) = o else { continue };
        for w in &uses {
            for c in &state[w] {
                let formal = matches!(c.root, Root::Formal { .. });
                let mut kinds: Vec<TransferKind> = c
                    .hops
                    .iter()
                    .zip(&c.exprs)
                    .map(|((source, target, _), expr)| {
                        if !formal {
                            return TransferKind::NoPropagation;
                        }
                        let k = expr_kind(expr);
                        let widened = target == OBJ && source.as_deref() != Some(OBJ);
                        if k == TransferKind::DirectPropagation && widened {
                            TransferKind::TypeConversion
                        } else {
                            k
                        }
                    })
                    .collect();
                kinds.push(if formal {
                    expr_kind(&m.arg.render())
                } else {
                    TransferKind::NoPropagation
                });
                let mut hops = c.hops.clone();
                hops.push((Some(w.to_string()), label.to_string(), sink));
                out.insert(OraclePath {
                    root: c.root.clone(),
                    hops,
                    kinds,
                });
            }
        }
    }
    out
}

pub struct Analysed {
    pub model: CodeModel,
    pub source: String,
    pub site: CallSite,
}

pub fn analyse(m: &GenMethod) -> Analysed {
    let source = render(m);
    let parsed = parse_sources(&[("gen/G.java".to_string(), source.clone())]);
    let model = parsed.model;
    let method = &model.classes[0].methods[0];
    let line = sink_line(&source);
    let index = method.body.iter().position(|s| s.line == line).expect("sink statement");
    let ordinal = method.body[index]
        .calls()
        .iter()
        .position(|c| c.name == "fromXML")
        .expect("sink call");
    let site = CallSite {
        stmt: StmtRef {
            method: method.signature(),
            index,
            line,
        },
        ordinal,
    };
    Analysed { model, source, site }
}

pub fn statement_count(a: &Analysed) -> usize {
    a.model.classes[0].methods[0].body.len()
}

/// The analysis's parameter paths for the sink argument, in the oracle's shape.
pub fn analysed_paths(a: &Analysed, allow: &ConversionAllowlist) -> (Vec<ParameterPath>, bool) {
    let method = &a.model.classes[0].methods[0];
    let arg = a.model.call_at(&a.site).expect("call").args[0].clone();
    parameter_paths(&a.model, method, &a.site, &arg, "fromXML[0]", allow)
}

pub fn as_oracle(paths: &[ParameterPath]) -> Vec<OraclePath> {
    paths
        .iter()
        .map(|p| OraclePath {
            root: p.root.clone(),
            hops: p
                .hops
                .iter()
                .map(|h| (h.source.clone(), h.target.clone(), h.edge.line))
                .collect(),
            kinds: p.transfer_types.iter().map(|t| t.kind).collect(),
        })
        .collect()
}

/// Compares analysis and oracle for one seed; `Err` describes the first difference.
pub fn check_seed(seed: u64) -> Result<usize, String> {
    let m = generate(seed);
    let a = analyse(&m);
    let n = statement_count(&a);
    if n > MAX_STATEMENTS {
        return Err(format!("seed {}: {} statements\n{}", seed, n, a.source));
    }
    let (paths, truncated) = analysed_paths(&a, &ConversionAllowlist::default());
    if truncated {
        return Err(format!("seed {}: enumeration truncated", seed));
    }
    let got = as_oracle(&paths);
    let got_set: BTreeSet<OraclePath> = got.iter().cloned().collect();
    if got_set.len() != got.len() {
        return Err(format!("seed {}: duplicate paths\n{}", seed, a.source));
    }
    let want = oracle(&m, "fromXML[0]");
    if got_set != want {
        let missing: Vec<_> = want.difference(&got_set).collect();
        let extra: Vec<_> = got_set.difference(&want).collect();
        return Err(format!(
            "seed {}:\n{}missing {:#?}\nextra {:#?}",
            seed, a.source, missing, extra
        ));
    }
    Ok(got.len())
}
