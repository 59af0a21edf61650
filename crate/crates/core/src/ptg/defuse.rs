//! Reaching definitions over region-annotated statement lists.
//!
//! Branch arms and catch clauses of one group are mutually exclusive, loop
//! bodies run zero or one times, and any statement inside a `try` body may
//! transfer control to its handlers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use crate::java::{MethodDecl, Region, RegionKind, StmtRef};

use super::{PtgTuple, Root};

/// Where a variable's value at some point may come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DefSite {
    /// Value held on method entry (formal, field, or never assigned).
    Entry,
    Stmt(usize),
}

/// A def-use chain from its origin up to a given use, before the final forwarding hop.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawChain {
    pub root: Root,
    pub hops: Vec<PtgTuple>,
}

/// Nested view of a flat statement list, rebuilt from the statements' regions.
enum Node {
    Stmt(usize),
    /// One construct: its kind family, arm count, and the non-empty arms in order.
    Construct {
        kind: RegionKind,
        arms: u32,
        children: Vec<(Region, Vec<Node>)>,
    },
}

fn family(kind: RegionKind) -> RegionKind {
    match kind {
        RegionKind::Catch => RegionKind::TryBody,
        k => k,
    }
}

fn build(method: &MethodDecl, indices: &[usize], depth: usize) -> Vec<Node> {
    let body = &method.body;
    let mut out = Vec::new();
    let mut i = 0;
    while i < indices.len() {
        let idx = indices[i];
        let Some(region) = body[idx].scope.get(depth).copied() else {
            out.push(Node::Stmt(idx));
            i += 1;
            continue;
        };
        let same_construct = |j: usize| {
            body[j]
                .scope
                .get(depth)
                .is_some_and(|r| r.group == region.group && family(r.kind) == family(region.kind))
        };
        let mut end = i;
        while end < indices.len() && same_construct(indices[end]) {
            end += 1;
        }
        let mut children: Vec<(Region, Vec<usize>)> = Vec::new();
        for &j in &indices[i..end] {
            let r = body[j].scope[depth];
            match children.last_mut() {
                Some((last, members)) if *last == r => members.push(j),
                _ => children.push((r, vec![j])),
            }
        }
        out.push(Node::Construct {
            kind: family(region.kind),
            arms: region.arms,
            children: children
                .into_iter()
                .map(|(r, members)| (r, build(method, &members, depth + 1)))
                .collect(),
        });
        i = end;
    }
    out
}

/// May-reach sets per variable; a variable absent from the map still holds its entry value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct State(BTreeMap<String, BTreeSet<DefSite>>);

impl State {
    fn join(&mut self, other: &State) {
        let keys: BTreeSet<String> = self.0.keys().chain(other.0.keys()).cloned().collect();
        for k in keys {
            let mut merged = self.get(&k);
            merged.extend(other.get(&k));
            self.0.insert(k, merged);
        }
    }

    fn get(&self, var: &str) -> BTreeSet<DefSite> {
        self.0
            .get(var)
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([DefSite::Entry]))
    }
}

fn joined(states: impl IntoIterator<Item = State>) -> Option<State> {
    let mut it = states.into_iter();
    let mut acc = it.next()?;
    for s in it {
        acc.join(&s);
    }
    Some(acc)
}

/// Reaching definitions for every statement of one method body.
pub struct ReachingDefs {
    before: Vec<State>,
}

impl ReachingDefs {
    pub fn compute(method: &MethodDecl) -> Self {
        let all: Vec<usize> = (0..method.body.len()).collect();
        let tree = build(method, &all, 0);
        let mut rd = ReachingDefs {
            before: vec![State::default(); method.body.len()],
        };
        rd.run(method, &tree, State::default());
        rd
    }

    /// Returns the state after normal completion, and the union of states at
    /// which some statement may have been abandoned by an exception.
    fn run(&mut self, method: &MethodDecl, nodes: &[Node], mut state: State) -> (Option<State>, Option<State>) {
        let mut aborted: Option<State> = None;
        let note_abort = |aborted: &mut Option<State>, s: &State| match aborted {
            Some(a) => a.join(s),
            None => *aborted = Some(s.clone()),
        };
        for node in nodes {
            match node {
                Node::Stmt(i) => {
                    self.before[*i] = state.clone();
                    note_abort(&mut aborted, &state);
                    if let Some(v) = method.body[*i].defines() {
                        state.0.insert(v.to_string(), BTreeSet::from([DefSite::Stmt(*i)]));
                    }
                }
                Node::Construct { kind, arms, children } => {
                    let mut outs = Vec::new();
                    match kind {
                        RegionKind::Branch => {
                            for (_, arm) in children {
                                let (out, ab) = self.run(method, arm, state.clone());
                                outs.extend(out);
                                if let Some(ab) = ab {
                                    note_abort(&mut aborted, &ab);
                                }
                            }
                            if (children.len() as u32) < *arms {
                                outs.push(state.clone());
                            }
                        }
                        RegionKind::Loop => {
                            outs.push(state.clone());
                            for (_, part) in children {
                                let (out, ab) = self.run(method, part, state.clone());
                                outs.extend(out);
                                if let Some(ab) = ab {
                                    note_abort(&mut aborted, &ab);
                                }
                            }
                        }
                        _ => {
                            let mut body_abort = None;
                            let mut has_catch = false;
                            if children.first().is_none_or(|(r, _)| r.kind != RegionKind::TryBody) {
                                outs.push(state.clone());
                            }
                            for (region, part) in children {
                                if region.kind == RegionKind::TryBody {
                                    let (out, ab) = self.run(method, part, state.clone());
                                    outs.extend(out);
                                    body_abort = ab;
                                } else {
                                    has_catch = true;
                                    let Some(entry) = body_abort.clone() else { continue };
                                    let (out, ab) = self.run(method, part, entry);
                                    outs.extend(out);
                                    if let Some(ab) = ab {
                                        note_abort(&mut aborted, &ab);
                                    }
                                }
                            }
                            if !has_catch {
                                if let Some(ab) = body_abort {
                                    note_abort(&mut aborted, &ab);
                                }
                            }
                        }
                    }
                    match joined(outs) {
                        Some(s) => state = s,
                        None => return (None, aborted),
                    }
                }
            }
        }
        (Some(state), aborted)
    }

    pub fn defs(&self, var: &str, at: usize) -> Vec<DefSite> {
        self.before[at].get(var).into_iter().collect()
    }
}

/// Definitions of `var` that may reach the use at statement `at`.
pub fn reaching_defs(method: &MethodDecl, var: &str, at: usize) -> Vec<DefSite> {
    ReachingDefs::compute(method).defs(var, at)
}

/// Classifies the origin of a variable's entry value.
pub fn entry_root(method: &MethodDecl, var: &str, is_field: impl Fn(&str) -> bool) -> Root {
    if method.param(var).is_some() {
        Root::Formal { name: var.to_string() }
    } else if is_field(var) {
        Root::Field { name: var.to_string() }
    } else {
        Root::Undefined { name: var.to_string() }
    }
}

/// Enumerates def-use chains ending at the use of `var` in statement `at`.
pub struct ChainEnumerator<'a, F: Fn(&str) -> bool> {
    method: &'a MethodDecl,
    signature: String,
    is_field: F,
    limit: usize,
    reaching: ReachingDefs,
    memo: HashMap<(String, usize), Rc<Vec<RawChain>>>,
    pub truncated: bool,
}

impl<'a, F: Fn(&str) -> bool> ChainEnumerator<'a, F> {
    pub fn new(method: &'a MethodDecl, is_field: F, limit: usize) -> Self {
        ChainEnumerator {
            method,
            signature: method.signature(),
            is_field,
            limit,
            reaching: ReachingDefs::compute(method),
            memo: HashMap::new(),
            truncated: false,
        }
    }

    fn stmt_ref(&self, index: usize) -> StmtRef {
        StmtRef {
            method: self.signature.clone(),
            index,
            line: self.method.body[index].line,
        }
    }

    pub fn chains(&mut self, var: &str, at: usize) -> Rc<Vec<RawChain>> {
        let key = (var.to_string(), at);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let mut out: Vec<RawChain> = Vec::new();
        for site in self.reaching.defs(var, at) {
            match site {
                DefSite::Entry => out.push(RawChain {
                    root: entry_root(self.method, var, &self.is_field),
                    hops: Vec::new(),
                }),
                DefSite::Stmt(i) => {
                    let stmt = &self.method.body[i];
                    let uses = stmt.uses();
                    if uses.is_empty() {
                        out.push(RawChain {
                            root: Root::Internal,
                            hops: vec![PtgTuple {
                                source: None,
                                target: var.to_string(),
                                edge: self.stmt_ref(i),
                            }],
                        });
                        continue;
                    }
                    for w in uses {
                        let upstream = self.chains(&w, i);
                        for c in upstream.iter() {
                            if out.len() >= self.limit {
                                self.truncated = true;
                                break;
                            }
                            let mut hops = c.hops.clone();
                            hops.push(PtgTuple {
                                source: Some(w.clone()),
                                target: var.to_string(),
                                edge: self.stmt_ref(i),
                            });
                            out.push(RawChain {
                                root: c.root.clone(),
                                hops,
                            });
                        }
                    }
                }
            }
            if out.len() >= self.limit {
                self.truncated = true;
                break;
            }
        }
        out.truncate(self.limit);
        let out = Rc::new(out);
        self.memo.insert(key, out.clone());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::parse_sources;

    fn method(body: &str) -> MethodDecl {
        let p = parse_sources(&[(
            "T.java".into(),
            format!("class T {{ void m(String p, String q) {{\n{}\n}} }}", body),
        )]);
        assert!(p.diagnostics.is_empty(), "{:?}", p.diagnostics);
        p.model.classes[0].methods[0].clone()
    }

    fn sites(body: &str, var: &str) -> Vec<DefSite> {
        let m = method(body);
        reaching_defs(&m, var, m.body.len() - 1)
    }

    #[test]
    fn straight_line_kill() {
        assert_eq!(sites("String v = p;\nv = q;\nuse(v);", "v"), [DefSite::Stmt(1)]);
    }

    #[test]
    fn branches_merge() {
        assert_eq!(
            sites(
                "String v = p;\nif (p == null) { v = q; } else { v = \"x\"; }\nuse(v);",
                "v"
            ),
            [DefSite::Stmt(2), DefSite::Stmt(3)]
        );
        assert_eq!(
            sites("String v = p;\nif (p == null) { v = q; }\nuse(v);", "v"),
            [DefSite::Stmt(0), DefSite::Stmt(2)]
        );
    }

    #[test]
    fn arms_do_not_see_each_other() {
        let m = method("String v = p;\nif (p == null) { v = q; } else { use(v); }");
        assert_eq!(reaching_defs(&m, "v", 3), [DefSite::Stmt(0)]);
    }

    #[test]
    fn loop_may_be_skipped() {
        assert_eq!(
            sites("String v = p;\nwhile (v != null) { v = q; }\nuse(v);", "v"),
            [DefSite::Stmt(0), DefSite::Stmt(2)]
        );
    }

    #[test]
    fn try_body_may_abort() {
        assert_eq!(
            sites(
                "String v = p;\ntry { v = q.trim(); v = \"y\"; } catch (Exception e) { }\nuse(v);",
                "v"
            ),
            [DefSite::Stmt(0), DefSite::Stmt(1), DefSite::Stmt(2)]
        );
        assert_eq!(
            sites(
                "String v = p;\ntry { v = q; } catch (Exception e) { v = \"z\"; }\nuse(v);",
                "v"
            ),
            [DefSite::Stmt(1), DefSite::Stmt(3)]
        );
    }

    #[test]
    fn later_def_in_enclosing_scope_kills() {
        assert_eq!(
            sites("String v;\nif (p == null) { v = q; }\nv = p;\nuse(v);", "v"),
            [DefSite::Stmt(2)]
        );
    }

    #[test]
    fn unassigned_formal_reaches_from_entry() {
        let m = method("use(p);");
        let mut en = ChainEnumerator::new(&m, |_| false, 100);
        let c = en.chains("p", 0);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].root, Root::Formal { name: "p".into() });
        assert!(c[0].hops.is_empty());
    }

    #[test]
    fn chains_follow_every_operand() {
        let m = method("String a = p + q;\nString b = a.trim();\nuse(b);");
        let mut en = ChainEnumerator::new(&m, |_| false, 100);
        let c = en.chains("b", 2);
        let roots: Vec<&Root> = c.iter().map(|c| &c.root).collect();
        assert_eq!(
            roots,
            [&Root::Formal { name: "p".into() }, &Root::Formal { name: "q".into() }]
        );
        assert_eq!(c[0].hops.len(), 2);
        assert_eq!(c[0].hops[0].source.as_deref(), Some("p"));
        assert_eq!(c[0].hops[1].target, "b");
    }
}
