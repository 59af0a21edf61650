//! Transfer-rule classification of a single propagation step.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::java::{Call, Expr, Receiver, Statement, StmtKind};

use super::TransferKind;

/// Calls treated as type conversions that keep the value intact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConversionAllowlist {
    pub casts: bool,
    /// `Object o = s` where `s` has a narrower declared type.
    pub object_widening: bool,
    /// `Type.method` names taking the converted value as sole argument.
    pub static_methods: Vec<String>,
    /// Zero-argument methods invoked on the converted value.
    pub instance_methods: Vec<String>,
}

impl Default for ConversionAllowlist {
    fn default() -> Self {
        let boxes = [
            "Integer",
            "Long",
            "Short",
            "Byte",
            "Double",
            "Float",
            "Boolean",
            "Character",
        ];
        let mut static_methods = vec!["String.valueOf".to_string()];
        static_methods.extend(boxes.iter().map(|b| format!("{}.valueOf", b)));
        let unboxing = [
            "intValue",
            "longValue",
            "shortValue",
            "byteValue",
            "doubleValue",
            "floatValue",
            "booleanValue",
            "charValue",
        ];
        let mut instance_methods = vec!["toString".to_string()];
        instance_methods.extend(unboxing.iter().map(|s| s.to_string()));
        ConversionAllowlist {
            casts: true,
            object_widening: true,
            static_methods,
            instance_methods,
        }
    }
}

impl ConversionAllowlist {
    fn converts(&self, call: &Call, upstream: &BTreeSet<String>) -> bool {
        let is_up = |e: &Expr| matches!(e.strip_casts(), Expr::VarRef { name } if upstream.contains(name));
        match &call.receiver {
            Receiver::Type { name } => {
                let simple = name.rsplit('.').next().unwrap_or(name);
                call.args.len() == 1
                    && is_up(&call.args[0])
                    && self
                        .static_methods
                        .iter()
                        .any(|m| *m == format!("{}.{}", simple, call.name) || *m == format!("{}.{}", name, call.name))
            }
            Receiver::Expr { expr } => {
                call.args.is_empty() && is_up(expr) && self.instance_methods.contains(&call.name)
            }
            _ => false,
        }
    }
}

/// Classifies how the value of `expr` relates to the `upstream` variables it mentions.
pub fn classify_expr(expr: &Expr, upstream: &BTreeSet<String>, allow: &ConversionAllowlist) -> TransferKind {
    if expr.operand_vars().is_disjoint(upstream) {
        return TransferKind::NoPropagation;
    }
    match expr {
        Expr::VarRef { .. } => TransferKind::DirectPropagation,
        Expr::Cast { operand, .. } if allow.casts => match classify_expr(operand, upstream, allow) {
            TransferKind::DirectPropagation | TransferKind::TypeConversion => TransferKind::TypeConversion,
            other => other,
        },
        Expr::Call(call) if allow.converts(call, upstream) => TransferKind::TypeConversion,
        _ => TransferKind::ValueChange,
    }
}

/// Classifies a defining statement with respect to the variables flowing into it.
pub fn classify_statement(stmt: &Statement, upstream: &BTreeSet<String>, allow: &ConversionAllowlist) -> TransferKind {
    if stmt.kind == StmtKind::Other {
        return if stmt.uses().is_disjoint(upstream) {
            TransferKind::NoPropagation
        } else {
            TransferKind::ValueChange
        };
    }
    classify_expr(&stmt.rhs, upstream, allow)
}
