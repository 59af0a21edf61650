mod common;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;

use proptest::prelude::*;
use sha2::{Digest, Sha256};

use vulnreach::testgen::{
    assemble_prompt, check_artifact, emit_tests, generate_llm, generate_offline, interceptor_path, test_file_name,
    EmitOptions, HttpTransport, LlmClientConfig, LlmTransport, Origin, PromptComponent, PromptStyle, TestArtifact,
    TestgenError, EXPECTED_EXCEPTION_LINE, FEW_SHOT_EXAMPLES, INTERCEPTOR_SOURCE, ORACLE_CONDITION, ORACLE_TRIGGERED,
    ROLE_LINE,
};

use common::{analysed, assert_golden, count, model_of, report_for, verdicts};

#[test]
fn few_shot_prompt_matches_golden() {
    let (model, report, results) = analysed("lion");
    let bundle = assemble_prompt(&model, &results[0], &report, PromptStyle::FewShot).unwrap();
    assert_golden("lion_few_shot.txt", &bundle.rendered);
    let text = &bundle.rendered;
    assert!(text.starts_with(&format!("Role: {}\n", ROLE_LINE)));
    for needle in [
        "xml2Obj",
        "XmlUtil",
        "<void>",
        ORACLE_TRIGGERED,
        ORACLE_CONDITION,
        EXPECTED_EXCEPTION_LINE,
    ] {
        assert!(text.contains(needle), "{}", needle);
    }
    let examples = bundle.section(PromptComponent::FewShotExamples).unwrap();
    assert_eq!(
        (1..=9)
            .filter(|i| examples.contains(&format!("Example {}:", i)))
            .count(),
        5
    );
    for ex in FEW_SHOT_EXAMPLES {
        assert!(examples.contains(ex));
    }
}

#[test]
fn default_prompt_has_three_sections() {
    let (model, report, results) = analysed("lion");
    let bundle = assemble_prompt(&model, &results[0], &report, PromptStyle::Default).unwrap();
    assert_golden("lion_default.txt", &bundle.rendered);
    let components: Vec<PromptComponent> = bundle.sections.iter().map(|s| s.component).collect();
    assert_eq!(
        components,
        [
            PromptComponent::PromptHint,
            PromptComponent::FocalMethod,
            PromptComponent::TestInput
        ]
    );
    assert!(!bundle.rendered.contains("MethodCallInterceptor"));
    assert!(!bundle.rendered.contains("fromXML"));
}

#[test]
fn zero_shot_prompt_has_oracle_but_no_examples() {
    let (model, report, results) = analysed("lion");
    let bundle = assemble_prompt(&model, &results[0], &report, PromptStyle::ZeroShot).unwrap();
    assert_golden("lion_zero_shot.txt", &bundle.rendered);
    assert!(bundle.section(PromptComponent::TestOracle).is_some());
    assert!(bundle.section(PromptComponent::VulnerableMethod).is_some());
    assert!(bundle.section(PromptComponent::FewShotExamples).is_none());
}

#[test]
fn rendered_prompt_is_the_section_concatenation() {
    let (model, report, results) = analysed("lion");
    for style in [PromptStyle::Default, PromptStyle::ZeroShot, PromptStyle::FewShot] {
        let bundle = assemble_prompt(&model, &results[0], &report, style).unwrap();
        let joined: String = bundle.sections.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(bundle.rendered, joined);
        assert_eq!(bundle, assemble_prompt(&model, &results[0], &report, style).unwrap());
    }
}

#[test]
fn unreachable_path_gets_no_prompt() {
    let (model, report, results) = analysed("openolat");
    assert!(!results[0].path_reachable);
    assert!(matches!(
        assemble_prompt(&model, &results[0], &report, PromptStyle::FewShot),
        Err(TestgenError::UnreachablePath)
    ));
}

fn multi_input_report(inputs: &[(String, String)]) -> vulnreach::vuln_report::VulnerabilityReport {
    let doc = serde_json::json!({
        "cve_id": "CVE-0000-0002",
        "library": {"group": "g", "artifact": "a", "affected_versions": "*"},
        "vulnerable_api": {"class_fqn": "com.lib.Sink", "method_name": "take", "param_types": ["java.lang.String"], "snippet": ""},
        "trigger": {
            "inputs": inputs.iter().map(|(n, v)| serde_json::json!({"name": n, "semantic_type": "string", "value": v})).collect::<Vec<_>>(),
            "conditions": [],
            "vulnerability_kind": "WrongBehavior"
        }
    });
    vulnreach::vuln_report::parse_report(&doc.to_string()).unwrap()
}

#[test]
fn three_inputs_are_listed_in_order() {
    let (model, _, results) = analysed("lion");
    let inputs: Vec<(String, String)> = [("xml", "<a/>"), ("encoding", "UTF-8"), ("depth", "3")]
        .map(|(n, v)| (n.into(), v.into()))
        .to_vec();
    let report = multi_input_report(&inputs);
    let bundle = assemble_prompt(&model, &results[0], &report, PromptStyle::Default).unwrap();
    assert_eq!(
        bundle.section(PromptComponent::TestInput).unwrap(),
        "The input variable name for this unit test is xml, and the value is: <a/>;\n\
         The input variable name for this unit test is encoding, and the value is: UTF-8;\n\
         The input variable name for this unit test is depth, and the value is: 3;\n\n"
    );
}

#[test]
fn offline_lion_tests_follow_the_template() {
    let (model, report, results) = analysed("lion");
    let arts = generate_offline(&model, &results[0], &report, 1).unwrap();
    assert_eq!(arts.len(), 2);
    for (i, a) in arts.iter().enumerate() {
        assert_eq!(a.file_name, test_file_name("CVE-2017-7957", 1, i as u8 + 1));
        assert_eq!(a.package, "com.lion.util");
        assert_eq!(a.origin, Origin::Offline);
        check_artifact(&a.source_text, true).unwrap();
        let lines: Vec<&str> = a.source_text.lines().map(str::trim).collect();
        let call = lines.iter().position(|l| l.starts_with("XmlUtil.xml2Obj(")).unwrap();
        assert_eq!(lines[call - 1], "try {");
        assert_eq!(lines[call + 1], EXPECTED_EXCEPTION_LINE);
        assert!(lines[call + 2].starts_with("} catch ("));
        assert!(lines.contains(&"String xml = \"<void>\";"));
    }
}

#[test]
fn non_exception_kind_has_no_fail_line() {
    let (model, _, results) = analysed("lion");
    let report = report_for(
        "com.thoughtworks.xstream.XStream",
        "fromXML",
        &["java.lang.String"],
        "xml",
        "WrongBehavior",
    );
    for a in generate_offline(&model, &results[0], &report, 1).unwrap() {
        check_artifact(&a.source_text, false).unwrap();
        assert!(!a.source_text.contains("fail("));
    }
    let bundle = assemble_prompt(&model, &results[0], &report, PromptStyle::FewShot).unwrap();
    assert!(!bundle
        .section(PromptComponent::TestOracle)
        .unwrap()
        .contains(EXPECTED_EXCEPTION_LINE));
}

#[test]
fn auxiliary_encoding_varies_between_the_two_tests() {
    let (model, report, results) = analysed("encoding");
    let arts = generate_offline(&model, &results[0], &report, 1).unwrap();
    assert!(arts[0].source_text.contains("String encoding = \"UTF-8\";"));
    assert!(arts[1].source_text.contains("String encoding = \"ISO-8859-1\";"));
}

const ABSTRACT_ENTRY: &str = r#"package com.acme;

import com.lib.Sink;

public abstract class Loader {
    private Sink sink = new Sink();

    public void load(String xml) {
        sink.take(xml);
    }
}
"#;

#[test]
fn abstract_entry_without_subclass_is_a_template_gap() {
    let model = model_of(&[("src/main/java/com/acme/Loader.java", ABSTRACT_ENTRY)]);
    let report = report_for(
        "com.lib.Sink",
        "take",
        &["java.lang.String"],
        "xml",
        "UncaughtException",
    );
    let results = verdicts(&model, &report);
    assert_eq!(results.len(), 1);
    assert!(results[0].path_reachable);
    match generate_offline(&model, &results[0], &report, 1) {
        Err(TestgenError::TemplateGap(p)) => assert_eq!(p, "this"),
        other => panic!("{:?}", other),
    }
    let sub = "package com.acme;\n\npublic class XmlLoader extends Loader {\n}\n";
    let model = model_of(&[
        ("src/main/java/com/acme/Loader.java", ABSTRACT_ENTRY),
        ("src/main/java/com/acme/XmlLoader.java", sub),
    ]);
    let results = verdicts(&model, &report);
    let arts = generate_offline(&model, &results[0], &report, 1).unwrap();
    assert!(arts[0]
        .source_text
        .contains("Loader target = new com.acme.XmlLoader();"));
}

struct Stub(String);

impl LlmTransport for Stub {
    fn complete(&self, _: &str) -> Result<String, TestgenError> {
        Ok(self.0.clone())
    }
}

fn lion_llm(reply: String) -> Result<(Vec<TestArtifact>, Vec<vulnreach::diag::Diagnostic>), TestgenError> {
    let (model, report, results) = analysed("lion");
    let bundle = assemble_prompt(&model, &results[0], &report, PromptStyle::FewShot).unwrap();
    generate_llm(&bundle, &report, "com.lion.util", 1, &Stub(reply))
}

fn lion_block() -> String {
    let (model, report, results) = analysed("lion");
    let src = generate_offline(&model, &results[0], &report, 1).unwrap()[0]
        .source_text
        .clone();
    src.replace("VulEUT_CVE_2017_7957_P1_T1Test", "GeneratedTest")
        .replace("package com.lion.util;\n\n", "")
}

fn fenced(blocks: &[String]) -> String {
    blocks
        .iter()
        .map(|b| format!("Here is a test:\n```java\n{}```\n", b))
        .collect()
}

#[test]
fn llm_reply_with_two_blocks_gives_two_tests() {
    let (arts, diags) = lion_llm(fenced(&[lion_block(), lion_block()])).unwrap();
    assert!(diags.is_empty());
    assert_eq!(arts.len(), 2);
    for (i, a) in arts.iter().enumerate() {
        assert_eq!(a.origin, Origin::Llm);
        assert_eq!(a.file_name, test_file_name("CVE-2017-7957", 1, i as u8 + 1));
        assert!(a.source_text.starts_with("package com.lion.util;\n"));
        assert!(a.source_text.contains(&format!("public class {} {{", a.class_name())));
    }
}

#[test]
fn llm_reply_with_one_block_is_duplicated() {
    let (arts, diags) = lion_llm(fenced(&[lion_block()])).unwrap();
    assert_eq!(arts.len(), 2);
    assert_eq!(diags.len(), 1);
    assert_eq!(
        arts[0].source_text.replace("P1_T1Test", "P1_T2Test"),
        arts[1].source_text
    );
}

#[test]
fn llm_reply_without_code_is_an_error() {
    assert!(matches!(
        lion_llm("I cannot help with that.".into()),
        Err(TestgenError::LlmNoCodeBlock)
    ));
}

#[test]
fn llm_block_breaking_the_contract_is_rejected() {
    let broken = lion_block().replace(ORACLE_CONDITION, "");
    let (arts, diags) = lion_llm(fenced(&[lion_block(), broken])).unwrap();
    assert_eq!(arts.len(), 1);
    assert_eq!(arts[0].index, 1);
    assert_eq!(diags.len(), 1);
    assert!(diags[0].to_string().contains("isConditionMet"), "{}", diags[0]);
}

/// Serves one canned HTTP response and returns the raw request.
fn serve_once(status: &str, body: String) -> (String, std::thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let status = status.to_string();
    let handle = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        let mut length = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            head.push_str(&line);
            if line == "\r\n" || line.is_empty() {
                break;
            }
        }
        let mut payload = vec![0; length];
        reader.read_exact(&mut payload).unwrap();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            status,
            body.len(),
            body
        )
        .unwrap();
        head + &String::from_utf8(payload).unwrap()
    });
    (url, handle)
}

#[test]
fn http_transport_posts_a_chat_request() {
    let reply =
        serde_json::json!({"choices": [{"message": {"role": "assistant", "content": "```java\nclass A {}\n```"}}]});
    let (endpoint, server) = serve_once("200 OK", reply.to_string());
    std::env::set_var("VULNREACH_HTTP_TEST_KEY", "sk-test");
    let transport = HttpTransport::new(LlmClientConfig {
        endpoint,
        model_name: "test-model".into(),
        api_key_env: "VULNREACH_HTTP_TEST_KEY".into(),
        max_in_flight: 1,
        timeout_s: 10,
    });
    let text = transport.complete("hello prompt").unwrap();
    assert_eq!(text, "```java\nclass A {}\n```");
    let request = server.join().unwrap();
    assert!(request.starts_with("POST /v1/chat/completions"));
    assert!(request.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    let body: serde_json::Value = serde_json::from_str(request.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["content"], "hello prompt");
}

#[test]
fn http_error_status_is_reported() {
    let (endpoint, server) = serve_once("429 Too Many Requests", "{}".into());
    let transport = HttpTransport::new(LlmClientConfig {
        endpoint,
        api_key_env: "VULNREACH_HTTP_TEST_UNSET".into(),
        timeout_s: 10,
        ..LlmClientConfig::default()
    });
    assert!(matches!(transport.complete("p"), Err(TestgenError::LlmTransport(429))));
    server.join().unwrap();
}

fn lion_artifacts() -> Vec<TestArtifact> {
    let (model, report, results) = analysed("lion");
    generate_offline(&model, &results[0], &report, 1).unwrap()
}

fn hashes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    common::snapshot(root)
        .into_iter()
        .map(|(k, v)| (k, Sha256::digest(&v).to_vec()))
        .collect()
}

#[test]
fn emission_places_tests_beside_the_focal_class() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("src/test/java")).unwrap();
    let arts = lion_artifacts();
    let outcome = emit_tests(&arts, dir.path(), &EmitOptions::default()).unwrap();
    let root = dir.path().join("src/test/java");
    let files: Vec<String> = hashes(&root).into_keys().collect();
    assert_eq!(
        files,
        [
            "com/lion/util/VulEUT_CVE_2017_7957_P1_T1Test.java",
            "com/lion/util/VulEUT_CVE_2017_7957_P1_T2Test.java",
            "vulnreach/support/MethodCallInterceptor.java",
        ]
    );
    assert_eq!(outcome.written.len(), 3);
    assert_eq!(fs::read_to_string(interceptor_path(&root)).unwrap(), INTERCEPTOR_SOURCE);
}

#[test]
fn emission_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("src/test/java")).unwrap();
    let arts = lion_artifacts();
    emit_tests(&arts, dir.path(), &EmitOptions::default()).unwrap();
    let first = hashes(dir.path());
    let again = emit_tests(&arts, dir.path(), &EmitOptions::default()).unwrap();
    assert!(again.written.is_empty());
    assert_eq!(again.unchanged.len(), 3);
    assert_eq!(hashes(dir.path()), first);
}

#[test]
fn differing_file_is_kept_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("src/test/java")).unwrap();
    let arts = lion_artifacts();
    emit_tests(&arts, dir.path(), &EmitOptions::default()).unwrap();
    let t2 = dir
        .path()
        .join("src/test/java/com/lion/util/VulEUT_CVE_2017_7957_P1_T2Test.java");
    fs::write(&t2, "// edited\n").unwrap();
    let before = hashes(dir.path());
    match emit_tests(&arts, dir.path(), &EmitOptions::default()) {
        Err(TestgenError::WouldOverwrite(p)) => assert!(p.ends_with("VulEUT_CVE_2017_7957_P1_T2Test.java")),
        other => panic!("{:?}", other),
    }
    assert_eq!(hashes(dir.path()), before);
    let forced = EmitOptions {
        force: true,
        ..EmitOptions::default()
    };
    let outcome = emit_tests(&arts, dir.path(), &forced).unwrap();
    assert_eq!(outcome.written, std::slice::from_ref(&t2));
    assert_eq!(fs::read_to_string(&t2).unwrap(), arts[1].source_text);
}

#[test]
fn missing_test_root_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        emit_tests(&lion_artifacts(), dir.path(), &EmitOptions::default()),
        Err(TestgenError::TestDirMissing(_))
    ));
    assert!(common::snapshot(dir.path()).is_empty());
}

fn identifier() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9]{0,6}".prop_filter("not a keyword", |s| {
        !matches!(s.as_str(), "do" | "if" | "for" | "int" | "new" | "try")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn test_input_lists_every_input_in_order(
        inputs in proptest::collection::btree_map(identifier(), "[ -~&&[^;]]{1,12}", 1..5)
            .prop_map(|m| m.into_iter().collect::<Vec<_>>())
            .prop_shuffle()
    ) {
        let (model, _, results) = analysed("lion");
        let report = multi_input_report(&inputs);
        let bundle = assemble_prompt(&model, &results[0], &report, PromptStyle::ZeroShot).unwrap();
        let section = bundle.section(PromptComponent::TestInput).unwrap();
        let lines: Vec<&str> = section.lines().filter(|l| !l.is_empty()).collect();
        prop_assert_eq!(lines.len(), inputs.len());
        for (line, (name, value)) in lines.iter().zip(&inputs) {
            prop_assert_eq!(
                *line,
                format!("The input variable name for this unit test is {}, and the value is: {};", name, value)
            );
        }
        let oracle = bundle.section(PromptComponent::TestOracle).unwrap();
        prop_assert_eq!(count(oracle, ORACLE_TRIGGERED), 1);
        prop_assert_eq!(count(oracle, ORACLE_CONDITION), 1);
    }
}
