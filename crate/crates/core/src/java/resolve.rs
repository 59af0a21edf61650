//! Name, type and call-target resolution over a [`CodeModel`].

use super::model::*;

const JAVA_LANG: &[&str] = &[
    "Boolean",
    "Byte",
    "Character",
    "Class",
    "Double",
    "Enum",
    "Error",
    "Exception",
    "Float",
    "Integer",
    "Iterable",
    "Long",
    "Math",
    "Number",
    "Object",
    "Runnable",
    "RuntimeException",
    "Short",
    "String",
    "StringBuilder",
    "StringBuffer",
    "System",
    "Thread",
    "Throwable",
    "Void",
    "CharSequence",
    "IllegalArgumentException",
    "IllegalStateException",
    "NullPointerException",
];

const REFLECTIVE: &[&str] = &["invoke", "forName", "getMethod", "getDeclaredMethod", "newInstance"];

const BOXES: &[(&str, &str)] = &[
    ("boolean", "Boolean"),
    ("byte", "Byte"),
    ("char", "Character"),
    ("short", "Short"),
    ("int", "Integer"),
    ("long", "Long"),
    ("float", "Float"),
    ("double", "Double"),
];

/// Outcome of resolving one call expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// Candidate targets declared in the model, by signature (possibly empty).
    Internal(Vec<String>),
    /// The callee belongs to a type outside the model.
    External { class_fqn: String },
    /// The receiver could not be typed, or the call is reflective.
    Unresolved { reason: String },
}

impl Resolution {
    pub fn targets(&self) -> &[String] {
        match self {
            Resolution::Internal(t) => t,
            _ => &[],
        }
    }
}

pub fn is_primitive(ty: &str) -> bool {
    BOXES.iter().any(|(p, _)| *p == ty)
}

pub fn box_of(ty: &str) -> Option<&'static str> {
    BOXES.iter().find(|(p, _)| *p == ty).map(|(_, b)| *b)
}

pub fn unbox_of(ty: &str) -> Option<&'static str> {
    let simple = simple_name(ty);
    BOXES.iter().find(|(_, b)| *b == simple).map(|(p, _)| *p)
}

pub fn simple_name(ty: &str) -> &str {
    ty.rsplit('.').next().unwrap_or(ty)
}

fn enclosing_classes<'m>(model: &'m CodeModel, class: &'m ClassDecl) -> Vec<&'m ClassDecl> {
    let mut out = vec![class];
    let mut fqn = class.fqn.as_str();
    while let Some((outer, _)) = fqn.rsplit_once('.') {
        match model.class(outer) {
            Some(c) => {
                out.push(c);
                fqn = &c.fqn;
            }
            None => break,
        }
    }
    out
}

/// Resolves a type name as written inside `class` to a fully-qualified name.
///
/// Names of model classes resolve to their fqn; other names resolve through
/// explicit imports or `java.lang`, and are otherwise returned unchanged.
pub fn resolve_type(model: &CodeModel, class: &ClassDecl, name: &str) -> String {
    let name = name.trim();
    if name.ends_with("[]") || is_primitive(name) || name == "void" {
        return name.to_string();
    }
    if model.contains_class(name) {
        return name.to_string();
    }
    let (head, rest) = match name.split_once('.') {
        Some((h, r)) => (h, Some(r)),
        None => (name, None),
    };
    let join = |base: String| match rest {
        Some(r) => format!("{}.{}", base, r),
        None => base,
    };
    // member types of this class, its outers, and their supertypes
    for c in enclosing_classes(model, class) {
        let cand = join(format!("{}.{}", c.fqn, head));
        if model.contains_class(&cand) {
            return cand;
        }
        for sup in model.supertypes_of(&c.fqn) {
            let cand = join(format!("{}.{}", sup, head));
            if model.contains_class(&cand) {
                return cand;
            }
        }
    }
    for imp in &class.imports {
        if imp.rsplit('.').next() == Some(head) {
            return join(imp.clone());
        }
    }
    let same_pkg = if class.package.is_empty() {
        join(head.to_string())
    } else {
        join(format!("{}.{}", class.package, head))
    };
    if model.contains_class(&same_pkg) {
        return same_pkg;
    }
    for imp in &class.imports {
        if let Some(pkg) = imp.strip_suffix(".*") {
            let cand = join(format!("{}.{}", pkg, head));
            if model.contains_class(&cand) {
                return cand;
            }
        }
    }
    if rest.is_none() && JAVA_LANG.contains(&head) {
        return format!("java.lang.{}", head);
    }
    name.to_string()
}

fn class_of<'m>(model: &'m CodeModel, method: &MethodDecl) -> Option<&'m ClassDecl> {
    model.class(&method.owner)
}

/// Declared type of a variable visible in `method`: local, parameter, or field.
pub fn var_type(model: &CodeModel, method: &MethodDecl, var: &str) -> Option<String> {
    let class = class_of(model, method)?;
    if let Some(l) = method.local(var).or_else(|| method.param(var)) {
        return Some(resolve_type(model, class, &l.ty));
    }
    field_type(model, &class.fqn, var)
}

/// Type of field `name` declared in `fqn`, its supertypes, or enclosing classes.
pub fn field_type(model: &CodeModel, fqn: &str, name: &str) -> Option<String> {
    let class = model.class(fqn)?;
    for c in enclosing_classes(model, class) {
        let mut owners = vec![c.fqn.clone()];
        owners.extend(model.supertypes_of(&c.fqn));
        for o in owners {
            if let Some(oc) = model.class(&o) {
                if let Some(f) = oc.fields.iter().find(|f| f.name == name) {
                    return Some(resolve_type(model, oc, &f.ty));
                }
            }
        }
    }
    None
}

/// `java.lang.String` instance methods returning a `String`.
const STRING_TO_STRING: &[&str] = &[
    "trim",
    "strip",
    "stripLeading",
    "stripTrailing",
    "toLowerCase",
    "toUpperCase",
    "substring",
    "replace",
    "replaceAll",
    "replaceFirst",
    "concat",
    "intern",
    "repeat",
    "formatted",
];

/// Best-effort static type of an expression evaluated inside `method`.
pub fn expr_type(model: &CodeModel, method: &MethodDecl, expr: &Expr) -> Option<String> {
    let class = class_of(model, method)?;
    match expr {
        Expr::VarRef { name } => var_type(model, method, name),
        Expr::Literal { lit, text } => match lit {
            LiteralKind::String => Some("java.lang.String".into()),
            LiteralKind::Class => Some("java.lang.Class".into()),
            LiteralKind::This if text == "this" => Some(class.fqn.clone()),
            LiteralKind::This => class.supertypes.first().cloned(),
            other => other.java_type().map(str::to_string),
        },
        Expr::Cast { ty, .. } | Expr::New { ty, .. } => Some(resolve_type(model, class, ty)),
        Expr::Call(call) => {
            if call.name == "toString" && call.args.is_empty() {
                return Some("java.lang.String".into());
            }
            if call.name == "valueOf"
                && matches!(&call.receiver, Receiver::Type { name } if simple_name(name) == "String")
            {
                return Some("java.lang.String".into());
            }
            if let Receiver::Expr { expr } = &call.receiver {
                if STRING_TO_STRING.contains(&call.name.as_str())
                    && expr_type(model, method, expr).as_deref() == Some("java.lang.String")
                {
                    return Some("java.lang.String".into());
                }
            }
            let sig = resolve_invocation(model, method, call).targets().first().cloned()?;
            let target = model.method(&sig)?;
            if target.type_params.contains(&target.return_type) {
                return None;
            }
            let owner = model.class(&target.owner)?;
            Some(resolve_type(model, owner, &target.return_type))
        }
        Expr::FieldAccess { receiver, field } => {
            let owner = match receiver {
                Receiver::This | Receiver::Implicit => class.fqn.clone(),
                Receiver::Super => class.supertypes.first()?.clone(),
                Receiver::Type { name } => resolve_type(model, class, name),
                Receiver::Expr { expr } => expr_type(model, method, expr)?,
            };
            if field == "length" && owner.ends_with("[]") {
                return Some("int".into());
            }
            field_type(model, &owner, field)
        }
        Expr::BinaryOp { op, operands } => match op.as_str() {
            "+" if operands.len() >= 2
                && operands
                    .iter()
                    .any(|o| expr_type(model, method, o).as_deref() == Some("java.lang.String")) =>
            {
                Some("java.lang.String".into())
            }
            "==" | "!=" | "<" | ">" | "<=" | ">=" | "&&" | "||" | "!" | "instanceof" => Some("boolean".into()),
            "?:" => expr_type(model, method, &operands[1]),
            _ => None,
        },
        Expr::Opaque { .. } => None,
    }
}

/// Whether a value of type `arg` may be passed for a parameter declared as `param`.
pub fn assignable(model: &CodeModel, arg: &str, param: &str) -> bool {
    if arg == param || simple_name(arg) == simple_name(param) {
        return true;
    }
    if simple_name(param) == "Object" && !is_primitive(arg) {
        return true;
    }
    if box_of(arg) == Some(simple_name(param)) || unbox_of(arg) == Some(param) {
        return true;
    }
    if is_primitive(arg) && is_primitive(param) {
        const WIDEN: &[(&str, &str)] = &[
            ("byte", "short int long float double"),
            ("short", "int long float double"),
            ("char", "int long float double"),
            ("int", "long float double"),
            ("long", "float double"),
            ("float", "double"),
        ];
        return WIDEN
            .iter()
            .any(|(from, to)| *from == arg && to.split(' ').any(|t| t == param));
    }
    if model.contains_class(arg) {
        return model.is_subtype(arg, param)
            || model
                .supertypes_of(arg)
                .iter()
                .any(|s| simple_name(s) == simple_name(param));
    }
    if is_primitive(arg) || is_primitive(param) {
        return false;
    }
    // Final JDK value types have no subtypes and few supertypes.
    const FINAL: &[&str] = &[
        "String",
        "Integer",
        "Long",
        "Short",
        "Byte",
        "Double",
        "Float",
        "Boolean",
        "Character",
    ];
    if FINAL.contains(&simple_name(param)) {
        return false;
    }
    if simple_name(arg) == "String" {
        return matches!(simple_name(param), "CharSequence" | "Comparable" | "Serializable");
    }
    // unknown external relationship: do not rule it out
    true
}

fn arg_matches(model: &CodeModel, caller: &MethodDecl, arg: &Expr, target: &MethodDecl, idx: usize) -> bool {
    let param_ty = {
        let owner = match model.class(&target.owner) {
            Some(c) => c,
            None => return true,
        };
        let raw = &target.params[idx].ty;
        if target.type_params.contains(raw) {
            return true;
        }
        resolve_type(model, owner, raw)
    };
    if matches!(
        arg,
        Expr::Literal {
            lit: LiteralKind::Null,
            ..
        }
    ) {
        return !is_primitive(&param_ty);
    }
    match expr_type(model, caller, arg) {
        Some(t) => assignable(model, &t, &param_ty),
        None => true,
    }
}

/// Narrows same-arity overloads by known argument types, keeping all when nothing fits.
fn filter_overloads(model: &CodeModel, caller: &MethodDecl, call: &Call, sigs: Vec<String>) -> Vec<String> {
    let kept: Vec<String> = sigs
        .iter()
        .filter(|s| {
            let Some(m) = model.method(s) else { return false };
            (0..call.args.len()).all(|i| arg_matches(model, caller, &call.args[i], m, i))
        })
        .cloned()
        .collect();
    if kept.is_empty() {
        sigs
    } else {
        kept
    }
}

fn declared<'m>(model: &'m CodeModel, fqn: &str, name: &str, arity: usize) -> Vec<&'m MethodDecl> {
    model
        .class(fqn)
        .map(|c| {
            c.methods
                .iter()
                .filter(|m| m.name == name && m.arity() == arity)
                .collect()
        })
        .unwrap_or_default()
}

/// Class-hierarchy targets for `name/arity` invoked on a receiver of static type `fqn`.
fn hierarchy_targets(model: &CodeModel, fqn: &str, name: &str, arity: usize, dispatch: bool) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let own = declared(model, fqn, name, arity);
    if own.is_empty() {
        for sup in model.supertypes_of(fqn) {
            let found = declared(model, &sup, name, arity);
            if !found.is_empty() {
                out.extend(found.iter().filter(|m| !m.is_abstract).map(|m| m.signature()));
                break;
            }
        }
    } else {
        out.extend(own.iter().filter(|m| !m.is_abstract).map(|m| m.signature()));
    }
    let is_static = own.iter().all(|m| m.is_static) && !own.is_empty();
    if dispatch && !is_static {
        for sub in model.subtypes_of(fqn) {
            out.extend(
                declared(model, &sub, name, arity)
                    .iter()
                    .filter(|m| !m.is_abstract && !m.is_static)
                    .map(|m| m.signature()),
            );
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Resolves a call expression inside `context` to its possible targets.
///
/// Targets are every non-abstract method with the callee's name and arity
/// declared on the receiver's static type or one of its subtypes; when the
/// type itself declares none, the nearest supertype declaration is used.
pub fn resolve_invocation(model: &CodeModel, context: &MethodDecl, call: &Call) -> Resolution {
    let Some(class) = class_of(model, context) else {
        return Resolution::Unresolved {
            reason: format!("unknown owner {}", context.owner),
        };
    };
    let arity = call.arity();
    let internal = |sigs: Vec<String>| Resolution::Internal(filter_overloads(model, context, call, sigs));

    if call.name == CONSTRUCTOR_NAME {
        let target = match call.receiver {
            Receiver::Super => match class.supertypes.first() {
                Some(s) if model.contains_class(s) => s.clone(),
                Some(s) => return Resolution::External { class_fqn: s.clone() },
                None => {
                    return Resolution::External {
                        class_fqn: "java.lang.Object".into(),
                    }
                }
            },
            _ => class.fqn.clone(),
        };
        let sigs = declared(model, &target, CONSTRUCTOR_NAME, arity)
            .iter()
            .map(|m| m.signature())
            .collect();
        return internal(sigs);
    }

    let receiver_type = match &call.receiver {
        Receiver::Implicit => {
            for c in enclosing_classes(model, class) {
                let sigs = hierarchy_targets(model, &c.fqn, &call.name, arity, true);
                if !sigs.is_empty() {
                    return internal(sigs);
                }
            }
            let externals: Vec<&String> = class.supertypes.iter().filter(|s| !model.contains_class(s)).collect();
            if let Some(ext) = externals.first() {
                return Resolution::External {
                    class_fqn: (*ext).clone(),
                };
            }
            return Resolution::Internal(Vec::new());
        }
        Receiver::This => class.fqn.clone(),
        Receiver::Super => {
            let sup = class
                .supertypes
                .iter()
                .find(|s| model.class(s).is_some_and(|c| c.kind == TypeKind::Class) || !model.contains_class(s));
            match sup {
                Some(s) if model.contains_class(s) => {
                    return internal(hierarchy_targets(model, s, &call.name, arity, false));
                }
                Some(s) => return Resolution::External { class_fqn: s.clone() },
                None => {
                    return Resolution::External {
                        class_fqn: "java.lang.Object".into(),
                    }
                }
            }
        }
        Receiver::Type { name } => {
            let fqn = resolve_type(model, class, name);
            if model.contains_class(&fqn) {
                return internal(hierarchy_targets(model, &fqn, &call.name, arity, false));
            }
            if REFLECTIVE.contains(&call.name.as_str()) && simple_name(&fqn) == "Class" {
                return Resolution::Unresolved {
                    reason: format!("reflective call {}.{} not followed", name, call.name),
                };
            }
            return Resolution::External { class_fqn: fqn };
        }
        Receiver::Expr { expr } => match expr_type(model, context, expr) {
            Some(t) => t,
            None => {
                return Resolution::Unresolved {
                    reason: format!("cannot type receiver of {}.{}", expr.render(), call.name),
                }
            }
        },
    };
    if model.contains_class(&receiver_type) {
        return internal(hierarchy_targets(model, &receiver_type, &call.name, arity, true));
    }
    if REFLECTIVE.contains(&call.name.as_str())
        && matches!(simple_name(&receiver_type), "Method" | "Class" | "Constructor")
    {
        return Resolution::Unresolved {
            reason: format!("reflective call {} not followed", call.name),
        };
    }
    Resolution::External {
        class_fqn: receiver_type,
    }
}
