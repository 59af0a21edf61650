//! PoC descriptor: the vulnerable library API and the inputs that trigger it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::java::resolve::{self, expr_type};
use crate::java::{Call, CodeModel, MethodDecl, Receiver};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("descriptor not found: {0}")]
    FileNotFound(String),
    #[error("schema violation at `{field}`: {reason}")]
    SchemaViolation { field: String, reason: String },
    #[error("unknown vulnerability kind `{0}`")]
    UnknownVulnerabilityKind(String),
}

fn violation(field: impl Into<String>, reason: impl Into<String>) -> ReportError {
    ReportError::SchemaViolation {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnerabilityReport {
    pub cve_id: String,
    pub library: Library,
    pub vulnerable_api: VulnerableApi,
    pub trigger: TriggerSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Library {
    pub group: String,
    pub artifact: String,
    pub affected_versions: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnerableApi {
    pub class_fqn: String,
    pub method_name: String,
    pub param_types: Vec<String>,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerSpec {
    pub inputs: Vec<TriggerInput>,
    pub conditions: Vec<Condition>,
    pub vulnerability_kind: VulnerabilityKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerInput {
    pub name: String,
    pub semantic_type: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub param: String,
    pub predicate: Predicate,
    pub value: String,
}

/// Parameter name in a condition that stands for any argument.
pub const ANY_PARAM: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Predicate {
    Equals,
    Contains,
    Matches,
}

impl Predicate {
    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::Equals => "equals",
            Predicate::Contains => "contains",
            Predicate::Matches => "matches",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VulnerabilityKind {
    UncaughtException,
    WrongBehavior,
    RemoteCodeExecution,
    StackOverflow,
    InfiniteLoop,
    PathTraversal,
    XxeInjection,
    OutOfMemory,
    SqlInjection,
    CrossSiteScripting,
    DenialOfService,
}

impl VulnerabilityKind {
    pub const ALL: [VulnerabilityKind; 11] = [
        VulnerabilityKind::UncaughtException,
        VulnerabilityKind::WrongBehavior,
        VulnerabilityKind::RemoteCodeExecution,
        VulnerabilityKind::StackOverflow,
        VulnerabilityKind::InfiniteLoop,
        VulnerabilityKind::PathTraversal,
        VulnerabilityKind::XxeInjection,
        VulnerabilityKind::OutOfMemory,
        VulnerabilityKind::SqlInjection,
        VulnerabilityKind::CrossSiteScripting,
        VulnerabilityKind::DenialOfService,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VulnerabilityKind::UncaughtException => "UncaughtException",
            VulnerabilityKind::WrongBehavior => "WrongBehavior",
            VulnerabilityKind::RemoteCodeExecution => "RemoteCodeExecution",
            VulnerabilityKind::StackOverflow => "StackOverflow",
            VulnerabilityKind::InfiniteLoop => "InfiniteLoop",
            VulnerabilityKind::PathTraversal => "PathTraversal",
            VulnerabilityKind::XxeInjection => "XxeInjection",
            VulnerabilityKind::OutOfMemory => "OutOfMemory",
            VulnerabilityKind::SqlInjection => "SqlInjection",
            VulnerabilityKind::CrossSiteScripting => "CrossSiteScripting",
            VulnerabilityKind::DenialOfService => "DenialOfService",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

pub fn load_report(path: &Path) -> Result<VulnerabilityReport, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|_| ReportError::FileNotFound(path.display().to_string()))?;
    parse_report(&text)
}

/// Parses and validates a descriptor document.
pub fn parse_report(text: &str) -> Result<VulnerabilityReport, ReportError> {
    let root: Value = serde_json::from_str(text).map_err(|e| violation("$", format!("invalid JSON: {}", e)))?;
    let obj = object(&root, "$")?;
    known_keys(obj, "", &["cve_id", "library", "vulnerable_api", "trigger", "notes"])?;

    let cve_id = string(obj, "", "cve_id")?;
    if cve_id.trim().is_empty() {
        return Err(violation("cve_id", "must be non-empty"));
    }

    let lib = object(required(obj, "", "library")?, "library")?;
    known_keys(lib, "library", &["group", "artifact", "affected_versions"])?;
    let library = Library {
        group: string(lib, "library", "group")?,
        artifact: string(lib, "library", "artifact")?,
        affected_versions: string(lib, "library", "affected_versions")?,
    };

    let api = object(required(obj, "", "vulnerable_api")?, "vulnerable_api")?;
    known_keys(
        api,
        "vulnerable_api",
        &["class_fqn", "method_name", "param_types", "snippet"],
    )?;
    let class_fqn = string(api, "vulnerable_api", "class_fqn")?;
    if !class_fqn.contains('.') {
        return Err(violation(
            "vulnerable_api.class_fqn",
            "must be fully qualified (contain a dot)",
        ));
    }
    let method_name = string(api, "vulnerable_api", "method_name")?;
    if !is_identifier(&method_name) {
        return Err(violation("vulnerable_api.method_name", "must be a Java identifier"));
    }
    let types = array(api, "vulnerable_api", "param_types")?;
    let mut param_types = Vec::new();
    for (i, t) in types.iter().enumerate() {
        let field = format!("vulnerable_api.param_types[{}]", i);
        let s = t.as_str().ok_or_else(|| violation(&field, "must be a string"))?;
        if s.trim().is_empty() {
            return Err(violation(&field, "must be non-empty"));
        }
        param_types.push(s.to_string());
    }
    let vulnerable_api = VulnerableApi {
        class_fqn,
        method_name,
        param_types,
        snippet: string(api, "vulnerable_api", "snippet")?,
    };

    let trig = object(required(obj, "", "trigger")?, "trigger")?;
    known_keys(trig, "trigger", &["inputs", "conditions", "vulnerability_kind"])?;
    let raw_inputs = array(trig, "trigger", "inputs")?;
    if raw_inputs.is_empty() {
        return Err(violation("trigger.inputs", "must be non-empty"));
    }
    let mut inputs: Vec<TriggerInput> = Vec::new();
    for (i, v) in raw_inputs.iter().enumerate() {
        let path = format!("trigger.inputs[{}]", i);
        let o = object(v, &path)?;
        known_keys(o, &path, &["name", "semantic_type", "value"])?;
        let name = string(o, &path, "name")?;
        if !is_identifier(&name) {
            return Err(violation(format!("{}.name", path), "must be a Java identifier"));
        }
        if inputs.iter().any(|x| x.name == name) {
            return Err(violation(format!("{}.name", path), "duplicate input name"));
        }
        inputs.push(TriggerInput {
            name,
            semantic_type: string(o, &path, "semantic_type")?,
            value: string(o, &path, "value")?,
        });
    }
    let mut conditions = Vec::new();
    if let Some(raw) = trig.get("conditions") {
        let list = raw
            .as_array()
            .ok_or_else(|| violation("trigger.conditions", "must be an array"))?;
        for (i, v) in list.iter().enumerate() {
            let path = format!("trigger.conditions[{}]", i);
            let o = object(v, &path)?;
            known_keys(o, &path, &["param", "predicate", "value"])?;
            let param = string(o, &path, "param")?;
            if param != ANY_PARAM && !inputs.iter().any(|x| x.name == param) {
                return Err(violation(
                    format!("{}.param", path),
                    "must name a trigger input or \"*\"",
                ));
            }
            let predicate = match o.get("predicate") {
                None => Predicate::Contains,
                Some(Value::String(s)) => match s.as_str() {
                    "equals" => Predicate::Equals,
                    "contains" => Predicate::Contains,
                    "matches" => Predicate::Matches,
                    _ => {
                        return Err(violation(
                            format!("{}.predicate", path),
                            "must be one of equals, contains, matches",
                        ))
                    }
                },
                Some(_) => return Err(violation(format!("{}.predicate", path), "must be a string")),
            };
            conditions.push(Condition {
                param,
                predicate,
                value: string(o, &path, "value")?,
            });
        }
    }
    let kind_text = string(trig, "trigger", "vulnerability_kind")?;
    let vulnerability_kind =
        VulnerabilityKind::parse(&kind_text).ok_or(ReportError::UnknownVulnerabilityKind(kind_text))?;

    let notes = match obj.get("notes") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(violation("notes", "must be a string")),
    };

    Ok(VulnerabilityReport {
        cve_id,
        library,
        vulnerable_api,
        trigger: TriggerSpec {
            inputs,
            conditions,
            vulnerability_kind,
        },
        notes,
    })
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{}.{}", parent, key)
    }
}

fn object<'v>(v: &'v Value, field: &str) -> Result<&'v Map<String, Value>, ReportError> {
    v.as_object().ok_or_else(|| violation(field, "must be an object"))
}

fn known_keys(o: &Map<String, Value>, parent: &str, allowed: &[&str]) -> Result<(), ReportError> {
    match o.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(violation(join(parent, k), "unknown key")),
        None => Ok(()),
    }
}

fn required<'v>(o: &'v Map<String, Value>, parent: &str, key: &str) -> Result<&'v Value, ReportError> {
    o.get(key).ok_or_else(|| violation(join(parent, key), "is required"))
}

fn string(o: &Map<String, Value>, parent: &str, key: &str) -> Result<String, ReportError> {
    required(o, parent, key)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| violation(join(parent, key), "must be a string"))
}

fn array<'v>(o: &'v Map<String, Value>, parent: &str, key: &str) -> Result<&'v Vec<Value>, ReportError> {
    required(o, parent, key)?
        .as_array()
        .ok_or_else(|| violation(join(parent, key), "must be an array"))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

impl VulnerabilityReport {
    /// Canonical JSON rendering (pretty, trailing newline).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn input(&self, name: &str) -> Option<&TriggerInput> {
        self.trigger.inputs.iter().find(|i| i.name == name)
    }

    /// Whether some condition applies to every argument.
    pub fn has_wildcard_condition(&self) -> bool {
        self.trigger.conditions.iter().any(|c| c.param == ANY_PARAM)
    }

    /// `Class#method(T1,T2)` rendering of the vulnerable API.
    pub fn api_signature(&self) -> String {
        format!(
            "{}#{}({})",
            self.vulnerable_api.class_fqn,
            self.vulnerable_api.method_name,
            self.vulnerable_api.param_types.join(",")
        )
    }
}

/// Whether `call`, made inside `context`, invokes the report's vulnerable API.
pub fn match_signature(report: &VulnerabilityReport, call: &Call, context: &MethodDecl, model: &CodeModel) -> bool {
    let api = &report.vulnerable_api;
    if call.name != api.method_name || call.arity() != api.param_types.len() {
        return false;
    }
    let Some(class) = model.class(&context.owner) else {
        return false;
    };
    let receiver_type = match &call.receiver {
        Receiver::Type { name } => Some(resolve::resolve_type(model, class, name)),
        Receiver::Expr { expr } => expr_type(model, context, expr),
        Receiver::Implicit | Receiver::This | Receiver::Super => Some(class.fqn.clone()),
    };
    let Some(receiver_type) = receiver_type else {
        return false;
    };
    if receiver_type != api.class_fqn && !model.is_subtype(&receiver_type, &api.class_fqn) {
        return false;
    }
    call.args
        .iter()
        .zip(&api.param_types)
        .all(|(arg, ty)| match expr_type(model, context, arg) {
            Some(actual) => resolve::assignable(model, &actual, ty),
            None => true,
        })
}
