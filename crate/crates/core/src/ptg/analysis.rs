//! Interprocedural parameter transfer along a call path and the reachability verdict.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::call_graph::MethodCallPath;
use crate::diag::Diagnostic;
use crate::java::{Call, CallSite, CodeModel, Expr, MethodDecl};
use crate::vuln_report::VulnerabilityReport;

use super::{parameter_paths, ConversionAllowlist, ParameterPath, TransferType, CHAIN_LIMIT};

/// Argument position of a call: an index into the arguments, or the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArgPos {
    Index(usize),
    Receiver,
}

impl ArgPos {
    fn expr(self, call: &Call) -> Option<Expr> {
        match self {
            ArgPos::Index(i) => call.args.get(i).cloned(),
            ArgPos::Receiver => call.receiver_var().map(Expr::var),
        }
    }

    /// `name[0]` or `name[receiver]`.
    pub fn label(self, callee: &str) -> String {
        match self {
            ArgPos::Index(i) => format!("{}[{}]", callee, i),
            ArgPos::Receiver => format!("{}[receiver]", callee),
        }
    }
}

/// Paths feeding one argument of a method's outgoing call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamAnalysis {
    pub position: ArgPos,
    /// Callee formal name, or `api[i]` for the vulnerable call.
    pub label: String,
    pub argument: String,
    pub paths: Vec<ParameterPath>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodAnalysis {
    pub method: String,
    pub site: CallSite,
    pub params: Vec<ParamAnalysis>,
}

/// Per-method analyses of a call path, ordered from the vulnerable call back to the entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathAnalysis {
    pub methods: Vec<MethodAnalysis>,
    /// Labels of the vulnerable call's arguments that carry trigger data.
    pub relevant: Vec<String>,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
}

impl PathAnalysis {
    /// All transfer types in analysis order.
    pub fn transfer_types(&self) -> Vec<TransferType> {
        self.methods
            .iter()
            .flat_map(|m| &m.params)
            .flat_map(|p| &p.paths)
            .flat_map(|p| p.transfer_types.iter().cloned())
            .collect()
    }

    fn for_method(&self, path_len: usize, i: usize) -> &MethodAnalysis {
        &self.methods[path_len - 1 - i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamVerdict {
    pub argument: String,
    pub reachable: bool,
    /// Benign parameter paths from an entry formal down to the argument, entry side first.
    pub witness: Vec<ParameterPath>,
    /// First value-altering step found when unreachable.
    pub blocking: Option<TransferType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachabilityResult {
    pub path: MethodCallPath,
    pub per_parameter: Vec<ParamVerdict>,
    pub path_reachable: bool,
}

/// Vulnerable-call arguments that carry trigger data.
///
/// Arguments mentioning a trigger input name are chosen; when none do, or a
/// condition applies to every input, all arguments are. A call without
/// arguments is judged by its receiver.
pub fn relevant_args(call: &Call, report: &VulnerabilityReport) -> Vec<ArgPos> {
    if call.args.is_empty() {
        return call.receiver_var().map(|_| vec![ArgPos::Receiver]).unwrap_or_default();
    }
    let all: Vec<ArgPos> = (0..call.args.len()).map(ArgPos::Index).collect();
    if report.has_wildcard_condition() {
        return all;
    }
    let named: Vec<ArgPos> = call
        .args
        .iter()
        .enumerate()
        .filter(|(_, a)| a.operand_vars().iter().any(|v| report.input(v).is_some()))
        .map(|(i, _)| ArgPos::Index(i))
        .collect();
    if named.is_empty() {
        all
    } else {
        named
    }
}

fn analyse_method(
    model: &CodeModel,
    method: &MethodDecl,
    site: &CallSite,
    positions: &[(ArgPos, String)],
    allow: &ConversionAllowlist,
    diags: &mut Vec<Diagnostic>,
) -> MethodAnalysis {
    let file = model.class(&method.owner).map(|c| c.file.clone()).unwrap_or_default();
    let call = model.call_at(site);
    let mut params = Vec::new();
    for (pos, label) in positions {
        let Some(arg) = call.and_then(|c| pos.expr(c)) else {
            diags.push(Diagnostic::new(
                &file,
                site.stmt.line,
                format!("UnknownVariable: no argument for {} at call site", label),
            ));
            params.push(ParamAnalysis {
                position: *pos,
                label: label.clone(),
                argument: String::new(),
                paths: Vec::new(),
            });
            continue;
        };
        let (paths, truncated) = parameter_paths(model, method, site, &arg, label, allow);
        if truncated {
            diags.push(Diagnostic::new(
                &file,
                site.stmt.line,
                format!(
                    "parameter path enumeration for {} stopped at {} chains",
                    label, CHAIN_LIMIT
                ),
            ));
        }
        params.push(ParamAnalysis {
            position: *pos,
            label: label.clone(),
            argument: arg.render(),
            paths,
        });
    }
    MethodAnalysis {
        method: method.signature(),
        site: site.clone(),
        params,
    }
}

/// Analyses parameter transfer along `path`, from the vulnerable call back to the entry.
///
/// Each intermediate method is analysed for the arguments that feed the
/// formals its callee's analysis traced back to.
pub fn analyse_parameter_transfer(
    model: &CodeModel,
    path: &MethodCallPath,
    report: &VulnerabilityReport,
    allow: &ConversionAllowlist,
) -> PathAnalysis {
    let mut diags = Vec::new();
    let mut methods = Vec::new();
    let sink = model.method(path.sink_method());
    let api = &report.vulnerable_api.method_name;
    let relevant: Vec<(ArgPos, String)> = model
        .call_at(&path.vulnerable_site)
        .map(|c| relevant_args(c, report))
        .unwrap_or_default()
        .into_iter()
        .map(|p| (p, p.label(api)))
        .collect();
    let mut positions = relevant.clone();
    for i in (0..path.len()).rev() {
        let Some(method) = (if i + 1 == path.len() {
            sink
        } else {
            model.method(&path.methods[i])
        }) else {
            break;
        };
        let analysis = analyse_method(model, method, path.outgoing_site(i), &positions, allow, &mut diags);
        if i > 0 {
            let formals: BTreeSet<&str> = analysis
                .params
                .iter()
                .flat_map(|p| &p.paths)
                .filter_map(|p| p.formal_root())
                .collect();
            let mut next: Vec<(ArgPos, String)> = formals
                .into_iter()
                .filter_map(|f| method.param_index(f).map(|j| (ArgPos::Index(j), f.to_string())))
                .collect();
            next.sort();
            positions = next;
        }
        methods.push(analysis);
    }
    PathAnalysis {
        methods,
        relevant: relevant.into_iter().map(|(_, l)| l).collect(),
        diagnostics: diags,
    }
}

/// A path is reachable when every relevant argument of the vulnerable call
/// receives some entry formal through benign steps only, along any chain.
pub fn decide_reachability(analysis: &PathAnalysis, path: &MethodCallPath) -> ReachabilityResult {
    let n = path.len();
    let complete = analysis.methods.len() == n;
    // Formals of method i reachable from the entry, each with its witness; every entry formal is.
    let mut reached = Reached::All;
    let mut verdicts = Vec::new();
    if complete {
        for i in 0..n - 1 {
            let mut next = BTreeMap::new();
            for param in &analysis.for_method(n, i).params {
                let hit = param
                    .paths
                    .iter()
                    .find(|p| p.is_benign() && p.formal_root().is_some_and(|f| reached.contains(f)));
                if let Some(p) = hit {
                    let mut w = reached.witness(p.formal_root().unwrap());
                    w.push(p.clone());
                    next.insert(param.label.clone(), w);
                }
            }
            reached = Reached::Some(next);
        }
        for label in &analysis.relevant {
            let Some(param) = analysis.methods[0].params.iter().find(|p| &p.label == label) else {
                continue;
            };
            let hit = param
                .paths
                .iter()
                .find(|p| p.is_benign() && p.formal_root().is_some_and(|f| reached.contains(f)));
            verdicts.push(match hit {
                Some(p) => {
                    let mut w = reached.witness(p.formal_root().unwrap());
                    w.push(p.clone());
                    ParamVerdict {
                        argument: label.clone(),
                        reachable: true,
                        witness: w,
                        blocking: None,
                    }
                }
                None => ParamVerdict {
                    argument: label.clone(),
                    reachable: false,
                    witness: Vec::new(),
                    blocking: blocker(analysis, n, label),
                },
            });
        }
    } else {
        for label in &analysis.relevant {
            verdicts.push(ParamVerdict {
                argument: label.clone(),
                reachable: false,
                witness: Vec::new(),
                blocking: None,
            });
        }
    }
    let path_reachable = verdicts.iter().all(|v| v.reachable);
    ReachabilityResult {
        path: path.clone(),
        per_parameter: verdicts,
        path_reachable,
    }
}

enum Reached {
    All,
    Some(BTreeMap<String, Vec<ParameterPath>>),
}

impl Reached {
    fn contains(&self, formal: &str) -> bool {
        match self {
            Reached::All => true,
            Reached::Some(m) => m.contains_key(formal),
        }
    }

    fn witness(&self, formal: &str) -> Vec<ParameterPath> {
        match self {
            Reached::All => Vec::new(),
            Reached::Some(m) => m.get(formal).cloned().unwrap_or_default(),
        }
    }
}

/// First non-benign step met while walking the argument's dependencies from the call toward the entry.
fn blocker(analysis: &PathAnalysis, n: usize, label: &str) -> Option<TransferType> {
    let mut queue = VecDeque::from([(n - 1, label.to_string())]);
    let mut seen = BTreeSet::new();
    while let Some((i, label)) = queue.pop_front() {
        if !seen.insert((i, label.clone())) {
            continue;
        }
        let Some(param) = analysis.for_method(n, i).params.iter().find(|p| p.label == label) else {
            continue;
        };
        for p in &param.paths {
            if let Some(t) = p.first_blocker() {
                return Some(t.clone());
            }
            if let (Some(f), true) = (p.formal_root(), i > 0) {
                queue.push_back((i - 1, f.to_string()));
            }
        }
    }
    None
}
