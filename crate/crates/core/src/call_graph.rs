//! Call graph over the code model and backward extraction of entry-to-sink paths.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::java::{resolve_invocation, CallSite, CodeModel, MethodDecl, Resolution, StmtRef, Visibility};
use crate::vuln_report::{match_signature, VulnerabilityReport};

/// Upper bound on paths enumerated before sorting and truncation.
const ENUMERATION_CEILING: usize = 100_000;

/// A client method invoking the vulnerable API, and where.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VulnerableSite {
    pub method: String,
    pub site: CallSite,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub caller: String,
    pub callee: String,
    pub site: CallSite,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<Edge>,
    callers: BTreeMap<String, Vec<Edge>>,
}

impl CallGraph {
    pub fn callers_of(&self, callee: &str) -> &[Edge] {
        self.callers.get(callee).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, caller: &str, callee: &str) -> bool {
        self.callers_of(callee).iter().any(|e| e.caller == caller)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathFilterConfig {
    pub exclude_annotations: BTreeSet<String>,
    pub exclude_visibilities: BTreeSet<Visibility>,
    pub max_depth: usize,
    pub max_paths: usize,
}

impl Default for PathFilterConfig {
    fn default() -> Self {
        PathFilterConfig {
            exclude_annotations: BTreeSet::from(["Test".to_string()]),
            exclude_visibilities: BTreeSet::from([Visibility::Private]),
            max_depth: 8,
            max_paths: 64,
        }
    }
}

impl PathFilterConfig {
    pub fn is_entry_eligible(&self, m: &MethodDecl) -> bool {
        !m.is_constructor()
            && !self.exclude_visibilities.contains(&m.visibility)
            && !m.annotations.iter().any(|a| self.exclude_annotations.contains(a))
    }
}

/// Chain of methods from an entry method down to the vulnerable call.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodCallPath {
    /// Method signatures, entry first.
    pub methods: Vec<String>,
    /// `sites[i]` is the call in `methods[i]` that invokes `methods[i + 1]`.
    pub sites: Vec<CallSite>,
    /// Call of the vulnerable API inside the last method.
    pub vulnerable_site: CallSite,
}

impl MethodCallPath {
    pub fn entry(&self) -> &str {
        &self.methods[0]
    }

    pub fn sink_method(&self) -> &str {
        self.methods.last().expect("paths are non-empty")
    }

    pub fn len(&self) -> usize {
        self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.methods.is_empty()
    }

    /// Call site in method `i` leading onward: the next hop, or the vulnerable call.
    pub fn outgoing_site(&self, i: usize) -> &CallSite {
        self.sites.get(i).unwrap_or(&self.vulnerable_site)
    }

    fn sort_key(&self) -> (Vec<&str>, Vec<(u32, usize)>) {
        let mut lines: Vec<(u32, usize)> = self.sites.iter().map(|s| (s.stmt.line, s.ordinal)).collect();
        lines.push((self.vulnerable_site.stmt.line, self.vulnerable_site.ordinal));
        (self.methods.iter().map(String::as_str).collect(), lines)
    }
}

fn sorted_methods(model: &CodeModel) -> Vec<&MethodDecl> {
    let mut methods: Vec<&MethodDecl> = model.methods().collect();
    methods.sort_by_key(|m| m.signature());
    methods
}

fn call_sites(m: &MethodDecl) -> impl Iterator<Item = (CallSite, &crate::java::Call)> {
    let sig = m.signature();
    m.body.iter().enumerate().flat_map(move |(index, stmt)| {
        let sig = sig.clone();
        stmt.calls().into_iter().enumerate().map(move |(ordinal, call)| {
            (
                CallSite {
                    stmt: StmtRef {
                        method: sig.clone(),
                        index,
                        line: stmt.line,
                    },
                    ordinal,
                },
                call,
            )
        })
    })
}

/// Every (client method, call site) pair invoking the report's vulnerable API.
pub fn localize_vulnerable_methods(model: &CodeModel, report: &VulnerabilityReport) -> Vec<VulnerableSite> {
    let mut out = Vec::new();
    for m in sorted_methods(model) {
        for (site, call) in call_sites(m) {
            if match_signature(report, call, m, model) {
                out.push(VulnerableSite {
                    method: m.signature(),
                    site,
                });
            }
        }
    }
    out
}

/// Builds the class-hierarchy call graph. Unresolvable calls are reported as diagnostics.
pub fn build_call_graph(model: &CodeModel) -> (CallGraph, Vec<Diagnostic>) {
    let mut graph = CallGraph::default();
    let mut diags = Vec::new();
    for m in sorted_methods(model) {
        graph.nodes.insert(m.signature());
        let file = model.class(&m.owner).map(|c| c.file.as_str()).unwrap_or("");
        for (site, call) in call_sites(m) {
            match resolve_invocation(model, m, call) {
                Resolution::Internal(targets) => {
                    for t in targets {
                        graph.edges.insert(Edge {
                            caller: m.signature(),
                            callee: t,
                            site: site.clone(),
                        });
                    }
                }
                Resolution::External { .. } => {}
                Resolution::Unresolved { reason } => {
                    diags.push(Diagnostic::new(file, site.stmt.line, reason));
                }
            }
        }
    }
    for e in &graph.edges {
        graph.callers.entry(e.callee.clone()).or_default().push(e.clone());
    }
    (graph, diags)
}

/// Enumerates acyclic paths from entry-eligible methods to each vulnerable site.
///
/// Every backward prefix whose head passes the entry filters is a path, so a
/// public sink method yields a length-1 path alongside its longer callers.
pub fn extract_call_paths(
    model: &CodeModel,
    graph: &CallGraph,
    targets: &[VulnerableSite],
    filters: &PathFilterConfig,
) -> (Vec<MethodCallPath>, Vec<Diagnostic>) {
    let mut found: Vec<MethodCallPath> = Vec::new();
    let mut diags = Vec::new();
    let mut ceiling_hit = false;
    for target in targets {
        let mut stack = vec![target.method.clone()];
        let mut sites: Vec<CallSite> = Vec::new();
        walk(
            model,
            graph,
            filters,
            target,
            &mut stack,
            &mut sites,
            &mut found,
            &mut ceiling_hit,
        );
    }
    let anchor = targets
        .first()
        .and_then(|t| model.method(&t.method))
        .map(|m| {
            let file = model.class(&m.owner).map(|c| c.file.clone()).unwrap_or_default();
            (file, m.line)
        })
        .unwrap_or_default();
    if ceiling_hit {
        diags.push(Diagnostic::new(
            &anchor.0,
            anchor.1,
            format!("path enumeration stopped at {} paths", ENUMERATION_CEILING),
        ));
    }
    found.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    found.dedup();
    if found.len() > filters.max_paths {
        diags.push(Diagnostic::new(
            &anchor.0,
            anchor.1,
            format!(
                "PathBudgetExceeded: {} paths found, keeping the first {}",
                found.len(),
                filters.max_paths
            ),
        ));
        found.truncate(filters.max_paths);
    }
    (found, diags)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    model: &CodeModel,
    graph: &CallGraph,
    filters: &PathFilterConfig,
    target: &VulnerableSite,
    stack: &mut Vec<String>,
    sites: &mut Vec<CallSite>,
    found: &mut Vec<MethodCallPath>,
    ceiling_hit: &mut bool,
) {
    if found.len() >= ENUMERATION_CEILING {
        *ceiling_hit = true;
        return;
    }
    let head = stack.last().expect("stack is non-empty").clone();
    if model.method(&head).is_some_and(|m| filters.is_entry_eligible(m)) {
        found.push(MethodCallPath {
            methods: stack.iter().rev().cloned().collect(),
            sites: sites.iter().rev().cloned().collect(),
            vulnerable_site: target.site.clone(),
        });
    }
    if stack.len() >= filters.max_depth {
        return;
    }
    for edge in graph.callers_of(&head) {
        if stack.contains(&edge.caller) {
            continue;
        }
        stack.push(edge.caller.clone());
        sites.push(edge.site.clone());
        walk(model, graph, filters, target, stack, sites, found, ceiling_hit);
        stack.pop();
        sites.pop();
    }
}
