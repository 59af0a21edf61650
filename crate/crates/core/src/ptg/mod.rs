//! Parameter transfer graphs: how values move from a method's inputs to the
//! arguments of a call it makes, and whether they survive the trip unchanged.

mod analysis;
mod classify;
pub mod defuse;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::java::resolve::{field_type, var_type};
use crate::java::{CallSite, CodeModel, Expr, MethodDecl, StmtRef};

pub use analysis::{
    analyse_parameter_transfer, decide_reachability, relevant_args, ArgPos, MethodAnalysis, ParamAnalysis,
    ParamVerdict, PathAnalysis, ReachabilityResult,
};
pub use classify::{classify_expr, classify_statement, ConversionAllowlist};
use defuse::{ChainEnumerator, RawChain};

/// Most chains enumerated per traced variable.
pub const CHAIN_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransferKind {
    DirectPropagation,
    TypeConversion,
    ValueChange,
    NoPropagation,
}

impl TransferKind {
    /// Whether the value survives this step intact.
    pub fn is_benign(self) -> bool {
        matches!(self, TransferKind::DirectPropagation | TransferKind::TypeConversion)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransferKind::DirectPropagation => "DirectPropagation",
            TransferKind::TypeConversion => "TypeConversion",
            TransferKind::ValueChange => "ValueChange",
            TransferKind::NoPropagation => "NoPropagation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransferType {
    pub kind: TransferKind,
    pub evidence: StmtRef,
}

/// One ⟨source, target, statement⟩ step; `source` is `None` for values created in place.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PtgTuple {
    pub source: Option<String>,
    pub target: String,
    pub edge: StmtRef,
}

/// Where a chain's value originates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Root {
    Formal {
        name: String,
    },
    Field {
        name: String,
    },
    /// Created inside the method from no variable (literal, constructor, etc.).
    Internal,
    /// Never assigned in the body and not a formal or field.
    Undefined {
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterTransferGraph {
    pub method: String,
    pub tuples: Vec<PtgTuple>,
}

/// A def-use chain from an origin to a call argument, with each hop classified.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParameterPath {
    /// Callee-side name of the argument position this path feeds.
    pub parameter: String,
    pub root: Root,
    /// Hops from the origin toward the call; the last one passes the argument.
    pub hops: Vec<PtgTuple>,
    pub transfer_types: Vec<TransferType>,
}

impl ParameterPath {
    pub fn is_benign(&self) -> bool {
        self.transfer_types.iter().all(|t| t.kind.is_benign())
    }

    pub fn first_blocker(&self) -> Option<&TransferType> {
        self.transfer_types.iter().find(|t| !t.kind.is_benign())
    }

    pub fn formal_root(&self) -> Option<&str> {
        match &self.root {
            Root::Formal { name } => Some(name),
            _ => None,
        }
    }

    /// Compact one-line rendering, e.g. `xml -DirectPropagation-> fromXML[0]`.
    pub fn summary(&self) -> String {
        let mut out = match &self.root {
            Root::Formal { name } => name.clone(),
            Root::Field { name } => format!("field {}", name),
            Root::Internal => "<internal>".to_string(),
            Root::Undefined { name } => format!("<undefined {}>", name),
        };
        for (hop, t) in self.hops.iter().zip(&self.transfer_types) {
            out.push_str(&format!(" -{}-> {}", t.kind.as_str(), hop.target));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PtgError {
    #[error("variable `{0}` does not occur at the call site")]
    UnknownVariable(String),
}

fn is_field_of<'m>(model: &'m CodeModel, method: &MethodDecl) -> impl Fn(&str) -> bool + 'm {
    let owner = method.owner.clone();
    let declared: BTreeSet<String> = method
        .params
        .iter()
        .chain(&method.locals)
        .map(|p| p.name.clone())
        .collect();
    move |v: &str| !declared.contains(v) && field_type(model, &owner, v).is_some()
}

/// Builds the transfer graph of all def-use steps feeding `vars` at `site`.
pub fn build_ptg(
    model: &CodeModel,
    method: &MethodDecl,
    site: &CallSite,
    vars: &[String],
) -> Result<ParameterTransferGraph, PtgError> {
    let call = model
        .call_at(site)
        .ok_or_else(|| PtgError::UnknownVariable(vars.first().cloned().unwrap_or_default()))?;
    let mut present: BTreeSet<String> = BTreeSet::new();
    for a in &call.args {
        present.extend(a.operand_vars());
    }
    if let Some(r) = call.receiver_var() {
        present.insert(r.to_string());
    }
    let mut en = ChainEnumerator::new(method, is_field_of(model, method), CHAIN_LIMIT);
    let mut tuples = BTreeSet::new();
    for v in vars {
        if !present.contains(v) {
            return Err(PtgError::UnknownVariable(v.clone()));
        }
        for c in en.chains(v, site.stmt.index).iter() {
            tuples.extend(c.hops.iter().cloned());
        }
    }
    Ok(ParameterTransferGraph {
        method: method.signature(),
        tuples: tuples.into_iter().collect(),
    })
}

/// Def-use chains of `var` reaching statement `at`, without classification.
pub fn raw_chains(model: &CodeModel, method: &MethodDecl, var: &str, at: usize) -> Vec<RawChain> {
    let mut en = ChainEnumerator::new(method, is_field_of(model, method), CHAIN_LIMIT);
    en.chains(var, at).as_ref().clone()
}

/// Whether a bare copy from `source` into `target` widens the value to `Object`.
fn widens_to_object(model: &CodeModel, method: &MethodDecl, source: &str, target: &str) -> bool {
    let simple = |t: Option<String>| t.map(|t| t.rsplit('.').next().unwrap_or(&t).to_string());
    let to = simple(var_type(model, method, target));
    let from = simple(var_type(model, method, source));
    to.as_deref() == Some("Object") && from.is_some_and(|f| f != "Object")
}

fn classify_hop(model: &CodeModel, method: &MethodDecl, hop: &PtgTuple, allow: &ConversionAllowlist) -> TransferKind {
    let Some(source) = &hop.source else {
        return TransferKind::NoPropagation;
    };
    let stmt = &method.body[hop.edge.index];
    let upstream = BTreeSet::from([source.clone()]);
    let kind = classify_statement(stmt, &upstream, allow);
    if kind == TransferKind::DirectPropagation
        && allow.object_widening
        && widens_to_object(model, method, source, &hop.target)
    {
        return TransferKind::TypeConversion;
    }
    kind
}

/// Classified parameter paths feeding argument expression `arg` of the call at `site`.
///
/// Returns the paths and whether enumeration hit [`CHAIN_LIMIT`].
pub fn parameter_paths(
    model: &CodeModel,
    method: &MethodDecl,
    site: &CallSite,
    arg: &Expr,
    label: &str,
    allow: &ConversionAllowlist,
) -> (Vec<ParameterPath>, bool) {
    let mut en = ChainEnumerator::new(method, is_field_of(model, method), CHAIN_LIMIT);
    let vars = arg.operand_vars();
    let final_hop = |source: Option<String>| PtgTuple {
        source,
        target: label.to_string(),
        edge: site.stmt.clone(),
    };
    if vars.is_empty() {
        let path = ParameterPath {
            parameter: label.to_string(),
            root: Root::Internal,
            hops: vec![final_hop(None)],
            transfer_types: vec![TransferType {
                kind: TransferKind::NoPropagation,
                evidence: site.stmt.clone(),
            }],
        };
        return (vec![path], false);
    }
    let mut out = Vec::new();
    for w in vars {
        for chain in en.chains(&w, site.stmt.index).iter() {
            if out.len() >= CHAIN_LIMIT {
                return (out, true);
            }
            let from_formal = matches!(chain.root, Root::Formal { .. });
            let mut types: Vec<TransferType> = chain
                .hops
                .iter()
                .map(|h| TransferType {
                    kind: if from_formal {
                        classify_hop(model, method, h, allow)
                    } else {
                        TransferKind::NoPropagation
                    },
                    evidence: h.edge.clone(),
                })
                .collect();
            types.push(TransferType {
                kind: if from_formal {
                    classify_expr(arg, &BTreeSet::from([w.clone()]), allow)
                } else {
                    TransferKind::NoPropagation
                },
                evidence: site.stmt.clone(),
            });
            let mut hops = chain.hops.clone();
            hops.push(final_hop(Some(w.clone())));
            out.push(ParameterPath {
                parameter: label.to_string(),
                root: chain.root.clone(),
                hops,
                transfer_types: types,
            });
        }
    }
    let truncated = en.truncated;
    (out, truncated)
}
