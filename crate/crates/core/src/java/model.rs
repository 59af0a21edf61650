use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

/// Parsed view of an analyzed project. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeModel {
    pub classes: Vec<ClassDecl>,
    #[serde(skip)]
    pub(crate) index: BTreeMap<String, usize>,
    #[serde(skip)]
    pub(crate) subtypes: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDecl {
    pub fqn: String,
    pub package: String,
    /// Simple name; nested types use `Outer.Inner`.
    pub name: String,
    pub kind: TypeKind,
    pub is_abstract: bool,
    pub file: String,
    pub line: u32,
    pub imports: Vec<String>,
    pub annotations: Vec<String>,
    pub supertypes: Vec<String>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    #[serde(skip)]
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: String,
    pub is_static: bool,
    pub line: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Protected,
    Package,
    Private,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Protected => "protected",
            Visibility::Package => "package",
            Visibility::Private => "private",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "public" => Some(Visibility::Public),
            "protected" => Some(Visibility::Protected),
            "package" => Some(Visibility::Package),
            "private" => Some(Visibility::Private),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

pub const CONSTRUCTOR_NAME: &str = "<init>";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodDecl {
    pub owner: String,
    pub name: String,
    pub type_params: Vec<String>,
    pub params: Vec<Param>,
    pub return_type: String,
    pub visibility: Visibility,
    pub is_static: bool,
    pub is_abstract: bool,
    pub annotations: Vec<String>,
    pub line: u32,
    /// Declaration header as written, whitespace-collapsed, without annotations or body.
    pub header: String,
    /// Local variables in declaration order (first declaration wins).
    pub locals: Vec<Param>,
    pub body: Vec<Statement>,
}

impl MethodDecl {
    pub fn signature(&self) -> String {
        let types: Vec<&str> = self.params.iter().map(|p| p.ty.as_str()).collect();
        format!("{}#{}({})", self.owner, self.name, types.join(","))
    }

    pub fn is_constructor(&self) -> bool {
        self.name == CONSTRUCTOR_NAME
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn local(&self, name: &str) -> Option<&Param> {
        self.locals.iter().find(|p| p.name == name)
    }

    /// Simple name of the owning class (last `.` segment of the fqn's class part).
    pub fn owner_simple_name(&self) -> &str {
        self.owner.rsplit('.').next().unwrap_or(&self.owner)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum StmtKind {
    Assignment,
    Invocation,
    Return,
    Declaration,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// One arm of an `if`/`else` or a `switch` case; arms of one group are exclusive.
    Branch,
    /// Loop body, analyzed as zero or one iteration.
    Loop,
    /// `try` body; may be left early by an exception.
    TryBody,
    /// One `catch` clause; shares its group with the `try` body it handles.
    Catch,
}

/// Conditional region enclosing a statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Region {
    pub kind: RegionKind,
    /// Identifies the construct; unique within a method body.
    pub group: u32,
    pub arm: u32,
    /// Number of arms of the construct, counting arms that hold no statement.
    pub arms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statement {
    pub kind: StmtKind,
    pub lhs: Option<String>,
    pub rhs: Expr,
    pub line: u32,
    pub text: String,
    /// Enclosing conditional regions, outermost first.
    pub scope: Vec<Region>,
}

impl Statement {
    /// Variables this statement reads.
    pub fn uses(&self) -> BTreeSet<String> {
        self.rhs.operand_vars()
    }

    /// All call expressions in the statement, pre-order.
    pub fn calls(&self) -> Vec<&Call> {
        let mut out = Vec::new();
        self.rhs.collect_calls(&mut out);
        out
    }

    pub fn defines(&self) -> Option<&str> {
        match self.kind {
            StmtKind::Assignment | StmtKind::Declaration => self.lhs.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExprKind {
    VarRef,
    Literal,
    Call,
    Cast,
    BinaryOp,
    FieldAccess,
    New,
    /// Construct outside the parsed subset; operands recovered textually.
    Opaque,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralKind {
    String,
    Char,
    Int,
    Long,
    Float,
    Double,
    Bool,
    Null,
    Class,
    This,
}

impl LiteralKind {
    /// Static Java type of the literal, when it has one.
    pub fn java_type(self) -> Option<&'static str> {
        match self {
            LiteralKind::String => Some("String"),
            LiteralKind::Char => Some("char"),
            LiteralKind::Int => Some("int"),
            LiteralKind::Long => Some("long"),
            LiteralKind::Float => Some("float"),
            LiteralKind::Double => Some("double"),
            LiteralKind::Bool => Some("boolean"),
            LiteralKind::Class => Some("Class"),
            LiteralKind::Null | LiteralKind::This => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Receiver {
    Implicit,
    This,
    Super,
    Type { name: String },
    Expr { expr: Box<Expr> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Call {
    pub receiver: Receiver,
    pub name: String,
    pub args: Vec<Expr>,
    pub line: u32,
}

impl Call {
    /// Receiver variable when the call is made on a plain variable.
    pub fn receiver_var(&self) -> Option<&str> {
        match &self.receiver {
            Receiver::Expr { expr } => match expr.as_ref() {
                Expr::VarRef { name } => Some(name),
                Expr::FieldAccess {
                    receiver: Receiver::This,
                    field,
                } => Some(field),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Expr {
    VarRef { name: String },
    Literal { lit: LiteralKind, text: String },
    Call(Call),
    Cast { ty: String, operand: Box<Expr> },
    BinaryOp { op: String, operands: Vec<Expr> },
    FieldAccess { receiver: Receiver, field: String },
    New { ty: String, args: Vec<Expr>, line: u32 },
    Opaque { text: String, vars: Vec<String> },
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::VarRef { name: name.into() }
    }

    pub fn kind(&self) -> ExprKind {
        match self {
            Expr::VarRef { .. } => ExprKind::VarRef,
            Expr::Literal { .. } => ExprKind::Literal,
            Expr::Call(_) => ExprKind::Call,
            Expr::Cast { .. } => ExprKind::Cast,
            Expr::BinaryOp { .. } => ExprKind::BinaryOp,
            Expr::FieldAccess { .. } => ExprKind::FieldAccess,
            Expr::New { .. } => ExprKind::New,
            Expr::Opaque { .. } => ExprKind::Opaque,
        }
    }

    pub fn as_call(&self) -> Option<&Call> {
        match self {
            Expr::Call(c) => Some(c),
            _ => None,
        }
    }

    /// Callee as (receiver description, method name), for calls only.
    pub fn callee(&self) -> Option<(String, &str)> {
        self.as_call()
            .map(|c| (describe_receiver(&c.receiver), c.name.as_str()))
    }

    pub fn args(&self) -> &[Expr] {
        match self {
            Expr::Call(c) => &c.args,
            Expr::New { args, .. } => args,
            Expr::BinaryOp { operands, .. } => operands,
            _ => &[],
        }
    }

    /// Every variable name syntactically contained in the expression.
    pub fn operand_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::VarRef { name } => {
                out.insert(name.clone());
            }
            Expr::Literal { .. } => {}
            Expr::Call(c) => {
                receiver_vars(&c.receiver, out);
                for a in &c.args {
                    a.collect_vars(out);
                }
            }
            Expr::Cast { operand, .. } => operand.collect_vars(out),
            Expr::BinaryOp { operands, .. } => {
                for o in operands {
                    o.collect_vars(out);
                }
            }
            Expr::FieldAccess { receiver, field } => match receiver {
                Receiver::This => {
                    out.insert(field.clone());
                }
                other => receiver_vars(other, out),
            },
            Expr::New { args, .. } => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            Expr::Opaque { vars, .. } => out.extend(vars.iter().cloned()),
        }
    }

    pub(crate) fn collect_calls<'a>(&'a self, out: &mut Vec<&'a Call>) {
        match self {
            Expr::Call(c) => {
                out.push(c);
                if let Receiver::Expr { expr } = &c.receiver {
                    expr.collect_calls(out);
                }
                for a in &c.args {
                    a.collect_calls(out);
                }
            }
            Expr::Cast { operand, .. } => operand.collect_calls(out),
            Expr::BinaryOp { operands, .. } => {
                for o in operands {
                    o.collect_calls(out);
                }
            }
            Expr::FieldAccess {
                receiver: Receiver::Expr { expr },
                ..
            } => expr.collect_calls(out),
            Expr::New { args, .. } => {
                for a in args {
                    a.collect_calls(out);
                }
            }
            _ => {}
        }
    }

    /// Strips casts and returns the innermost operand.
    pub fn strip_casts(&self) -> &Expr {
        match self {
            Expr::Cast { operand, .. } => operand.strip_casts(),
            other => other,
        }
    }

    /// Compact Java-like rendering, used for argument labels.
    pub fn render(&self) -> String {
        match self {
            Expr::VarRef { name } => name.clone(),
            Expr::Literal { text, .. } => text.clone(),
            Expr::Call(c) => {
                let args: Vec<String> = c.args.iter().map(Expr::render).collect();
                match &c.receiver {
                    Receiver::Implicit => format!("{}({})", c.name, args.join(", ")),
                    r => format!("{}.{}({})", describe_receiver(r), c.name, args.join(", ")),
                }
            }
            Expr::Cast { ty, operand } => format!("({}) {}", ty, operand.render()),
            Expr::BinaryOp { op, operands } => {
                let parts: Vec<String> = operands.iter().map(Expr::render).collect();
                match parts.len() {
                    1 => format!("{}{}", op, parts[0]),
                    _ => parts.join(&format!(" {} ", op)),
                }
            }
            Expr::FieldAccess { receiver, field } => match receiver {
                Receiver::Implicit => field.clone(),
                r => format!("{}.{}", describe_receiver(r), field),
            },
            Expr::New { ty, args, .. } => {
                let args: Vec<String> = args.iter().map(Expr::render).collect();
                format!("new {}({})", ty, args.join(", "))
            }
            Expr::Opaque { text, .. } => text.clone(),
        }
    }
}

fn receiver_vars(r: &Receiver, out: &mut BTreeSet<String>) {
    if let Receiver::Expr { expr } = r {
        expr.collect_vars(out);
    }
}

pub(crate) fn describe_receiver(r: &Receiver) -> String {
    match r {
        Receiver::Implicit => String::new(),
        Receiver::This => "this".to_string(),
        Receiver::Super => "super".to_string(),
        Receiver::Type { name } => name.clone(),
        Receiver::Expr { expr } => expr.render(),
    }
}

/// Identifies a statement inside a method body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, serde::Deserialize)]
pub struct StmtRef {
    pub method: String,
    pub index: usize,
    pub line: u32,
}

/// A call expression located inside a method body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, serde::Deserialize)]
pub struct CallSite {
    pub stmt: StmtRef,
    /// Pre-order position of the call among the statement's calls.
    pub ordinal: usize,
}

impl CodeModel {
    pub(crate) fn from_classes(mut classes: Vec<ClassDecl>) -> Self {
        classes.sort_by(|a, b| a.fqn.cmp(&b.fqn));
        let index = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.fqn.clone(), i))
            .collect::<BTreeMap<_, _>>();
        let mut direct: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for c in &classes {
            for s in &c.supertypes {
                direct.entry(s.clone()).or_default().insert(c.fqn.clone());
            }
        }
        // transitive closure of subtypes
        let mut subtypes = BTreeMap::new();
        for fqn in direct.keys() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<String> = vec![fqn.clone()];
            while let Some(t) = stack.pop() {
                if let Some(children) = direct.get(&t) {
                    for ch in children {
                        if ch != fqn && seen.insert(ch.clone()) {
                            stack.push(ch.clone());
                        }
                    }
                }
            }
            subtypes.insert(fqn.clone(), seen);
        }
        CodeModel {
            classes,
            index,
            subtypes,
        }
    }

    pub fn class(&self, fqn: &str) -> Option<&ClassDecl> {
        self.index.get(fqn).map(|&i| &self.classes[i])
    }

    pub fn contains_class(&self, fqn: &str) -> bool {
        self.index.contains_key(fqn)
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodDecl> {
        self.classes.iter().flat_map(|c| c.methods.iter())
    }

    pub fn method(&self, signature: &str) -> Option<&MethodDecl> {
        let (owner, _) = signature.split_once('#')?;
        self.class(owner)?.methods.iter().find(|m| m.signature() == signature)
    }

    /// Transitive subtypes of `fqn` declared in the model (excluding `fqn`).
    pub fn subtypes_of(&self, fqn: &str) -> BTreeSet<String> {
        self.subtypes.get(fqn).cloned().unwrap_or_default()
    }

    /// Transitive supertypes of `fqn`, nearest first. External supertypes are included by name.
    pub fn supertypes_of(&self, fqn: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(fqn.to_string());
        let mut seen = BTreeSet::new();
        seen.insert(fqn.to_string());
        while let Some(t) = queue.pop_front() {
            if let Some(c) = self.class(&t) {
                for s in &c.supertypes {
                    if seen.insert(s.clone()) {
                        out.push(s.clone());
                        queue.push_back(s.clone());
                    }
                }
            }
        }
        out
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        sub == sup || self.supertypes_of(sub).iter().any(|s| s == sup)
    }

    pub fn statement(&self, r: &StmtRef) -> Option<&Statement> {
        self.method(&r.method)?.body.get(r.index)
    }

    pub fn call_at(&self, site: &CallSite) -> Option<&Call> {
        self.statement(&site.stmt)?.calls().get(site.ordinal).copied()
    }

    pub fn method_count(&self) -> usize {
        self.classes.iter().map(|c| c.methods.len()).sum()
    }
}
