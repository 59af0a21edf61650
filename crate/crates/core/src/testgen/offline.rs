//! Deterministic template-based test generation.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::java::resolve::{resolve_type, simple_name};
use crate::java::{ClassDecl, CodeModel, MethodDecl, TypeKind};
use crate::ptg::ReachabilityResult;
use crate::vuln_report::{TriggerInput, VulnerabilityKind, VulnerabilityReport};

use super::{
    interceptor_setup, java_string, test_file_name, Origin, TestArtifact, TestgenError, EXPECTED_EXCEPTION_LINE,
    INTERCEPTOR_PACKAGE, ORACLE_CONDITION, ORACLE_TRIGGERED,
};

/// Values given to encoding-like parameters; test `k` starts at entry `k - 1`.
pub const ENCODING_VARIANTS: [&str; 3] = ["UTF-8", "ISO-8859-1", "US-ASCII"];

fn is_auxiliary(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n.contains("encoding") || n.contains("charset")
}

fn is_textual(ty: &str) -> bool {
    matches!(
        ty,
        "String"
            | "CharSequence"
            | "Object"
            | "Serializable"
            | "char[]"
            | "byte[]"
            | "InputStream"
            | "ByteArrayInputStream"
            | "Reader"
            | "StringReader"
    )
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Java expression of type `ty` carrying the trigger value, if one exists.
fn carry(ty: &str, value: &str) -> Option<String> {
    let lit = java_string(value);
    let bytes = format!("{}.getBytes(java.nio.charset.StandardCharsets.UTF_8)", lit);
    let numeric = |suffix: &str| -> Option<String> {
        value.trim().parse::<f64>().ok()?;
        let integral = !value.contains(['.', 'e', 'E']);
        match suffix {
            "" | "L" if !integral => None,
            _ => Some(format!("{}{}", value.trim(), suffix)),
        }
    };
    Some(match ty {
        "String" | "CharSequence" | "Object" | "Serializable" => lit,
        "char[]" => format!("{}.toCharArray()", lit),
        "byte[]" => bytes,
        "InputStream" | "ByteArrayInputStream" => format!("new java.io.ByteArrayInputStream({})", bytes),
        "Reader" | "StringReader" => format!("new java.io.StringReader({})", lit),
        "File" => format!("new java.io.File({})", lit),
        "Path" => format!("java.nio.file.Paths.get({})", lit),
        "URL" => format!("new java.net.URL({})", lit),
        "URI" => format!("java.net.URI.create({})", lit),
        "int" | "Integer" | "short" | "Short" | "byte" | "Byte" => {
            let v = numeric("")?;
            if matches!(ty, "short" | "Short" | "byte" | "Byte") {
                format!("({}) {}", ty.to_ascii_lowercase(), v)
            } else {
                v
            }
        }
        "long" | "Long" => numeric("L")?,
        "double" | "Double" => numeric("d")?,
        "float" | "Float" => numeric("f")?,
        "boolean" | "Boolean" if value == "true" || value == "false" => value.to_string(),
        _ => return None,
    })
}

/// Placeholder value for a parameter that receives no trigger input.
fn default_value(ty: &str, decl: &str) -> String {
    if let Some(elem) = decl.strip_suffix("[]") {
        return format!("new {}[0]", elem);
    }
    match ty {
        "String" | "CharSequence" => java_string("test"),
        "int" | "Integer" | "short" | "byte" => "0".into(),
        "Short" => "(short) 0".into(),
        "Byte" => "(byte) 0".into(),
        "long" | "Long" => "0L".into(),
        "double" | "Double" => "0.0d".into(),
        "float" | "Float" => "0.0f".into(),
        "boolean" | "Boolean" => "false".into(),
        "char" | "Character" => "'a'".into(),
        "Class" => "Object.class".into(),
        "List" | "Collection" | "Iterable" | "ArrayList" => "new java.util.ArrayList<>()".into(),
        "Set" | "HashSet" => "new java.util.HashSet<>()".into(),
        "Map" | "HashMap" => "new java.util.HashMap<>()".into(),
        _ => "null".into(),
    }
}

/// Type to declare a local of the parameter's type in the test's package.
fn declared_type(model: &CodeModel, class: &ClassDecl, method: &MethodDecl, ty: &str) -> String {
    let base = ty.trim_end_matches("[]");
    let dims = &ty[base.len()..];
    if method.type_params.iter().any(|t| t == base) || base.len() == 1 && base.chars().all(|c| c.is_ascii_uppercase()) {
        return format!("Object{}", dims);
    }
    let fqn = resolve_type(model, class, base);
    let shown = match fqn.strip_prefix("java.lang.") {
        Some(rest) if !rest.contains('.') => rest.to_string(),
        _ => fqn,
    };
    format!("{}{}", shown, dims)
}

struct Binding {
    decl: String,
    name: String,
    value: String,
    input: Option<String>,
}

fn bind_params(
    model: &CodeModel,
    class: &ClassDecl,
    method: &MethodDecl,
    inputs: &[TriggerInput],
    variant: usize,
) -> Result<Vec<Binding>, TestgenError> {
    let mut used: BTreeSet<&str> = BTreeSet::new();
    let mut slots: Vec<Option<Binding>> = method.params.iter().map(|_| None).collect();
    let simple = |ty: &str| simple_name(ty).to_string();
    // Parameters named like an input take it.
    for (i, p) in method.params.iter().enumerate() {
        if let Some(input) = inputs.iter().find(|x| x.name == p.name) {
            let value = carry(&simple(&p.ty), &input.value).ok_or_else(|| TestgenError::TemplateGap(p.name.clone()))?;
            used.insert(&input.name);
            slots[i] = Some(Binding {
                decl: declared_type(model, class, method, &p.ty),
                name: p.name.clone(),
                value,
                input: Some(input.name.clone()),
            });
        }
    }
    // Encoding-like parameters walk the variation table.
    let mut aux = 0;
    for (i, p) in method.params.iter().enumerate() {
        if slots[i].is_none() && is_auxiliary(&p.name) && simple(&p.ty) == "String" {
            let v = ENCODING_VARIANTS[(variant + aux) % ENCODING_VARIANTS.len()];
            aux += 1;
            slots[i] = Some(Binding {
                decl: "String".into(),
                name: p.name.clone(),
                value: java_string(v),
                input: None,
            });
        }
    }
    // Remaining textual parameters take unused inputs in report order.
    for (i, p) in method.params.iter().enumerate() {
        if slots[i].is_some() || !is_textual(&simple(&p.ty)) {
            continue;
        }
        if let Some(input) = inputs.iter().find(|x| !used.contains(x.name.as_str())) {
            used.insert(&input.name);
            slots[i] = Some(Binding {
                decl: declared_type(model, class, method, &p.ty),
                name: p.name.clone(),
                value: carry(&simple(&p.ty), &input.value).expect("textual types carry any value"),
                input: Some(input.name.clone()),
            });
        }
    }
    Ok(method
        .params
        .iter()
        .zip(slots)
        .map(|(p, slot)| {
            slot.unwrap_or_else(|| Binding {
                decl: declared_type(model, class, method, &p.ty),
                name: p.name.clone(),
                value: default_value(&simple(&p.ty), &p.ty),
                input: None,
            })
        })
        .collect())
}

/// Expression constructing an instance to call the focal method on.
fn receiver(model: &CodeModel, class: &ClassDecl) -> Result<String, TestgenError> {
    let concrete = if class.kind == TypeKind::Interface || class.is_abstract {
        model
            .subtypes_of(&class.fqn)
            .into_iter()
            .filter_map(|s| model.class(&s))
            .find(|c| c.kind != TypeKind::Interface && !c.is_abstract)
            .ok_or_else(|| TestgenError::TemplateGap("this".to_string()))?
    } else {
        class
    };
    let mut ctors: Vec<&MethodDecl> = concrete.methods.iter().filter(|m| m.is_constructor()).collect();
    ctors.sort_by_key(|m| (m.arity(), m.signature()));
    let args: Vec<String> = match ctors.first() {
        None => Vec::new(),
        Some(c) => c
            .params
            .iter()
            .map(|p| default_value(simple_name(&p.ty), &p.ty))
            .collect(),
    };
    let name = if concrete.package.is_empty() {
        concrete.name.clone()
    } else {
        concrete.fqn.clone()
    };
    Ok(format!("new {}({})", name, args.join(", ")))
}

fn render(
    model: &CodeModel,
    method: &MethodDecl,
    class: &ClassDecl,
    report: &VulnerabilityReport,
    class_name: &str,
    variant: usize,
) -> Result<String, TestgenError> {
    let bindings = bind_params(model, class, method, &report.trigger.inputs, variant)?;
    let expect_fail = report.trigger.vulnerability_kind == VulnerabilityKind::UncaughtException;
    let mut s = String::new();
    if !class.package.is_empty() {
        writeln!(s, "package {};\n", class.package).unwrap();
    }
    s.push_str("import static org.junit.Assert.assertTrue;\n");
    if expect_fail {
        s.push_str("import static org.junit.Assert.fail;\n");
    }
    s.push_str("\nimport org.junit.Test;\n");
    writeln!(s, "import {}.MethodCallInterceptor;\n", INTERCEPTOR_PACKAGE).unwrap();
    writeln!(s, "public class {} {{\n", class_name).unwrap();
    s.push_str("    @Test\n");
    writeln!(
        s,
        "    public void test{}Reaches{}() throws Exception {{",
        capitalize(&method.name),
        capitalize(&report.vulnerable_api.method_name)
    )
    .unwrap();
    for b in &bindings {
        writeln!(s, "        {} {} = {};", b.decl, b.name, b.value).unwrap();
    }
    let target = if method.is_static {
        class.name.clone()
    } else {
        writeln!(s, "        {} target = {};", class.name, receiver(model, class)?).unwrap();
        "target".to_string()
    };
    let mut expected: Vec<String> = Vec::new();
    for input in &report.trigger.inputs {
        let local = bindings
            .iter()
            .find(|b| b.input.as_deref() == Some(input.name.as_str()));
        expected.push(match local {
            Some(b) if simple_name(&b.decl) == "String" => b.name.clone(),
            _ => java_string(&input.value),
        });
    }
    for line in interceptor_setup(report, &expected) {
        writeln!(s, "        {}", line).unwrap();
    }
    let args: Vec<&str> = bindings.iter().map(|b| b.name.as_str()).collect();
    s.push_str("        try {\n");
    writeln!(s, "            {}.{}({});", target, method.name, args.join(", ")).unwrap();
    if expect_fail {
        writeln!(s, "            {}", EXPECTED_EXCEPTION_LINE).unwrap();
    }
    s.push_str("        } catch (Exception e) {\n");
    s.push_str("            // the focal method may fail once the payload is processed\n");
    s.push_str("        }\n");
    writeln!(s, "        {}", ORACLE_TRIGGERED).unwrap();
    writeln!(s, "        {}", ORACLE_CONDITION).unwrap();
    s.push_str("    }\n}\n");
    Ok(s)
}

/// Instantiates the test template twice for a reachable path's entry method.
pub fn generate_offline(
    model: &CodeModel,
    result: &ReachabilityResult,
    report: &VulnerabilityReport,
    path_number: usize,
) -> Result<Vec<TestArtifact>, TestgenError> {
    let entry = result.path.entry();
    let method = model
        .method(entry)
        .ok_or_else(|| TestgenError::UnknownMethod(entry.to_string()))?;
    let class = model
        .class(&method.owner)
        .ok_or_else(|| TestgenError::UnknownMethod(entry.to_string()))?;
    (1..=2u8)
        .map(|index| {
            let file_name = test_file_name(&report.cve_id, path_number, index);
            let class_name = file_name.trim_end_matches(".java").to_string();
            Ok(TestArtifact {
                path_number,
                index,
                package: class.package.clone(),
                source_text: render(model, method, class, report, &class_name, index as usize - 1)?,
                file_name,
                origin: Origin::Offline,
            })
        })
        .collect()
}
