#![allow(dead_code)]

pub mod gen;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tempfile::TempDir;
use walkdir::WalkDir;

use vulnreach::pipeline::{run_pipeline, Mode, RunConfig, RunOutput};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("poc.json").is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ExpectedPath {
    pub methods: Vec<String>,
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Expected {
    pub paths: Vec<ExpectedPath>,
}

pub fn expected(name: &str) -> Expected {
    let text = fs::read_to_string(corpus_dir().join(name).join("expected.json")).expect("expected.json");
    serde_json::from_str(&text).expect("expected.json parses")
}

pub fn copy_tree(from: &Path, to: &Path) {
    for entry in WalkDir::new(from).sort_by_file_name() {
        let entry = entry.expect("walk");
        let rel = entry.path().strip_prefix(from).unwrap();
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).unwrap();
        } else {
            fs::copy(entry.path(), &dest).unwrap();
        }
    }
}

/// A fixture copied into a scratch directory: `project/`, `poc.json`, and an `out/` directory.
pub struct Workspace {
    pub dir: TempDir,
}

impl Workspace {
    pub fn new(name: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        copy_tree(&corpus_dir().join(name).join("project"), &dir.path().join("project"));
        fs::copy(corpus_dir().join(name).join("poc.json"), dir.path().join("poc.json")).unwrap();
        Workspace { dir }
    }

    pub fn project(&self) -> PathBuf {
        self.dir.path().join("project")
    }

    pub fn poc(&self) -> PathBuf {
        self.dir.path().join("poc.json")
    }

    pub fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    pub fn config(&self, mode: Mode) -> RunConfig {
        let mut cfg = RunConfig::new(self.project(), self.poc(), self.out());
        cfg.mode = mode;
        cfg
    }

    pub fn run(&self, mode: Mode) -> RunOutput {
        run_pipeline(&self.config(mode), None).expect("pipeline runs")
    }

    pub fn test_root(&self) -> PathBuf {
        self.project().join("src/test/java")
    }
}

/// Every regular file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e
                .path()
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .replace('\\', "/");
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Test files emitted for a fixture, keyed by file name.
pub fn emitted_tests(out: &RunOutput) -> BTreeMap<String, String> {
    out.artifacts
        .iter()
        .map(|a| (a.file_name.clone(), a.source_text.clone()))
        .collect()
}

pub fn count(haystack: &str, needle: &str) -> usize {
    haystack.matches(needle).count()
}

/// Minimal valid descriptor for `class#method(types)` with one trigger input.
pub fn report_for(
    class: &str,
    method: &str,
    types: &[&str],
    input: &str,
    kind: &str,
) -> vulnreach::vuln_report::VulnerabilityReport {
    let doc = serde_json::json!({
        "cve_id": "CVE-0000-0001",
        "library": {"group": "g", "artifact": "a", "affected_versions": "*"},
        "vulnerable_api": {"class_fqn": class, "method_name": method, "param_types": types, "snippet": ""},
        "trigger": {
            "inputs": [{"name": input, "semantic_type": "string", "value": "<void>"}],
            "conditions": [{"param": input, "predicate": "contains", "value": "<void>"}],
            "vulnerability_kind": kind
        }
    });
    vulnreach::vuln_report::parse_report(&doc.to_string()).expect("valid descriptor")
}

pub fn model_of(files: &[(&str, &str)]) -> vulnreach::java::CodeModel {
    let files: Vec<(String, String)> = files.iter().map(|(n, s)| (n.to_string(), s.to_string())).collect();
    vulnreach::java::parse_sources(&files).model
}

/// Compares `actual` with a golden file; `UPDATE_GOLDEN=1` rewrites the file instead.
pub fn assert_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let golden = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {}", path.display(), e));
    assert!(golden == actual, "{} differs from actual output:\n{}", name, actual);
}

pub fn lion_poc_text() -> String {
    fs::read_to_string(corpus_dir().join("lion/poc.json")).unwrap()
}

/// A malformed descriptor and the violation it must produce: field, and reason prefix.
pub struct Malformed {
    pub text: String,
    pub field: &'static str,
    pub reason: &'static str,
}

/// Twenty malformed variants of the Lion descriptor.
pub fn malformed_descriptors() -> Vec<Malformed> {
    use serde_json::{json, Value};
    let base: Value = serde_json::from_str(&lion_poc_text()).unwrap();
    let edit = |f: &dyn Fn(&mut Value)| {
        let mut v = base.clone();
        f(&mut v);
        v.to_string()
    };
    let case = |text: String, field, reason| Malformed { text, field, reason };
    vec![
        case(
            edit(&|v| v["trigger"]["inputs"] = json!([])),
            "trigger.inputs",
            "must be non-empty",
        ),
        case(edit(&|v| v["cve_id"] = json!("  ")), "cve_id", "must be non-empty"),
        case(edit(&|v| v["cve_id"] = json!(7957)), "cve_id", "must be a string"),
        case(
            edit(&|v| v["vulnerable_api"]["class_fqn"] = json!("XStream")),
            "vulnerable_api.class_fqn",
            "must be fully qualified",
        ),
        case(
            edit(&|v| v["vulnerable_api"]["param_types"] = json!([""])),
            "vulnerable_api.param_types[0]",
            "must be non-empty",
        ),
        case(
            edit(&|v| v["vulnerable_api"]["param_types"] = json!([1])),
            "vulnerable_api.param_types[0]",
            "must be a string",
        ),
        case(
            edit(&|v| v["vulnerable_api"]["method_name"] = json!("from XML")),
            "vulnerable_api.method_name",
            "must be a Java identifier",
        ),
        case(
            edit(&|v| {
                v.as_object_mut().unwrap().remove("library");
            }),
            "library",
            "is required",
        ),
        case(edit(&|v| v["colour"] = json!("red")), "colour", "unknown key"),
        case(
            edit(&|v| v["library"]["homepage"] = json!("x")),
            "library.homepage",
            "unknown key",
        ),
        case(
            edit(&|v| v["trigger"]["conditions"][0]["param"] = json!("payload")),
            "trigger.conditions[0].param",
            "must name a trigger input",
        ),
        case(
            edit(&|v| v["trigger"]["conditions"][0]["predicate"] = json!("startsWith")),
            "trigger.conditions[0].predicate",
            "must be one of",
        ),
        case(
            edit(&|v| v["trigger"]["inputs"] = json!("xml")),
            "trigger.inputs",
            "must be an array",
        ),
        case(
            edit(&|v| v["trigger"]["conditions"] = json!({})),
            "trigger.conditions",
            "must be an array",
        ),
        case(
            edit(&|v| {
                let first = v["trigger"]["inputs"][0].clone();
                v["trigger"]["inputs"].as_array_mut().unwrap().push(first);
            }),
            "trigger.inputs[1].name",
            "duplicate input name",
        ),
        case(
            edit(&|v| v["trigger"]["inputs"][0]["name"] = json!("1xml")),
            "trigger.inputs[0].name",
            "must be a Java identifier",
        ),
        case(
            edit(&|v| {
                v["trigger"]["inputs"][0].as_object_mut().unwrap().remove("value");
            }),
            "trigger.inputs[0].value",
            "is required",
        ),
        case(
            edit(&|v| {
                v["trigger"].as_object_mut().unwrap().remove("vulnerability_kind");
            }),
            "trigger.vulnerability_kind",
            "is required",
        ),
        case(edit(&|v| v["notes"] = json!(["a"])), "notes", "must be a string"),
        case("[1, 2]".to_string(), "$", "must be an object"),
        case("{\"cve_id\": ".to_string(), "$", "invalid JSON"),
    ]
}

/// Checks one malformed descriptor against its designated violation.
pub fn check_malformed(m: &Malformed) -> Result<(), String> {
    match vulnreach::vuln_report::parse_report(&m.text) {
        Err(vulnreach::vuln_report::ReportError::SchemaViolation { field, reason })
            if field == m.field && reason.starts_with(m.reason) =>
        {
            Ok(())
        }
        other => Err(format!("{} / {}: got {:?}", m.field, m.reason, other)),
    }
}

/// Per-path verdicts for a model under default filters and allowlist.
pub fn verdicts(
    model: &vulnreach::java::CodeModel,
    report: &vulnreach::vuln_report::VulnerabilityReport,
) -> Vec<vulnreach::ptg::ReachabilityResult> {
    use vulnreach::call_graph::{build_call_graph, extract_call_paths, localize_vulnerable_methods, PathFilterConfig};
    use vulnreach::ptg::{analyse_parameter_transfer, decide_reachability, ConversionAllowlist};
    let targets = localize_vulnerable_methods(model, report);
    let (graph, _) = build_call_graph(model);
    let (paths, _) = extract_call_paths(model, &graph, &targets, &PathFilterConfig::default());
    paths
        .iter()
        .map(|p| {
            let a = analyse_parameter_transfer(model, p, report, &ConversionAllowlist::default());
            decide_reachability(&a, p)
        })
        .collect()
}

/// Model, descriptor and per-path verdicts of a corpus fixture under default settings.
pub fn analysed(
    name: &str,
) -> (
    vulnreach::java::CodeModel,
    vulnreach::vuln_report::VulnerabilityReport,
    Vec<vulnreach::ptg::ReachabilityResult>,
) {
    let root = corpus_dir().join(name);
    let model = vulnreach::java::parse_project(&root.join("project")).unwrap().model;
    let report = vulnreach::vuln_report::load_report(&root.join("poc.json")).unwrap();
    let results = verdicts(&model, &report);
    (model, report, results)
}
