//! Exploit-confirmation test generation: prompts, test sources and their emission.

mod emit;
mod llm;
mod offline;
mod prompt;

use serde::{Deserialize, Serialize};

use crate::vuln_report::VulnerabilityReport;

pub use emit::{emit_tests, interceptor_path, test_path, EmitOptions, EmitOutcome};
pub use llm::{extract_code_blocks, generate_llm, HttpTransport, LlmClientConfig, LlmTransport};
pub use offline::{generate_offline, ENCODING_VARIANTS};
pub use prompt::{assemble_prompt, FEW_SHOT_EXAMPLES, ROLE_LINE};

/// Assertion confirming the vulnerable method ran.
pub const ORACLE_TRIGGERED: &str = "assertTrue(MethodCallInterceptor.isTriggered());";
/// Assertion confirming the trigger conditions held when it ran.
pub const ORACLE_CONDITION: &str = "assertTrue(MethodCallInterceptor.isConditionMet());";
/// Emitted after the focal call for exception-kind vulnerabilities.
pub const EXPECTED_EXCEPTION_LINE: &str = "fail(\"Expected Exception\");";
/// Interceptor scaffold shipped with every emission.
pub const INTERCEPTOR_SOURCE: &str = include_str!("../../assets/MethodCallInterceptor.java");
pub const INTERCEPTOR_PACKAGE: &str = "vulnreach.support";
pub const INTERCEPTOR_FILE: &str = "MethodCallInterceptor.java";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStyle {
    Default,
    ZeroShot,
    FewShot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptComponent {
    PromptHint,
    FocalMethod,
    TestInput,
    TestOracle,
    VulnerableMethod,
    FewShotExamples,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSection {
    pub component: PromptComponent,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub style: PromptStyle,
    pub sections: Vec<PromptSection>,
    pub rendered: String,
}

impl PromptBundle {
    pub fn new(style: PromptStyle, sections: Vec<PromptSection>) -> Self {
        let rendered = sections.iter().map(|s| s.text.as_str()).collect();
        PromptBundle {
            style,
            sections,
            rendered,
        }
    }

    pub fn section(&self, component: PromptComponent) -> Option<&str> {
        self.sections
            .iter()
            .find(|s| s.component == component)
            .map(|s| s.text.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "LLM")]
    Llm,
    Offline,
}

/// One generated test class for a call path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestArtifact {
    /// 1-based number of the call path among all extracted paths.
    pub path_number: usize,
    /// 1 or 2.
    pub index: u8,
    /// Package of the focal class; the test lives beside it.
    pub package: String,
    pub file_name: String,
    pub source_text: String,
    pub origin: Origin,
}

impl TestArtifact {
    pub fn class_name(&self) -> &str {
        self.file_name.trim_end_matches(".java")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TestgenError {
    #[error("call path is not reachable; no prompt is assembled for it")]
    UnreachablePath,
    #[error("LLM transport failed with status {0}")]
    LlmTransport(u16),
    #[error("LLM response contains no code block")]
    LlmNoCodeBlock,
    #[error("template cannot bind parameter `{0}`")]
    TemplateGap(String),
    #[error("test directory {0} does not exist")]
    TestDirMissing(String),
    #[error("refusing to overwrite differing file {0}")]
    WouldOverwrite(String),
    #[error("focal method {0} is not in the code model")]
    UnknownMethod(String),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// `VulEUT_<cve>_P<n>_T<k>Test.java`, with every non-alphanumeric CVE character replaced by `_`.
pub fn test_file_name(cve_id: &str, path_number: usize, index: u8) -> String {
    let cve: String = cve_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("VulEUT_{}_P{}_T{}Test.java", cve, path_number, index)
}

/// Java string literal for `s`, quotes included.
pub fn java_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Statements registering the interceptor for the report's vulnerable API.
pub fn interceptor_setup(report: &VulnerabilityReport, expected: &[String]) -> Vec<String> {
    let api = &report.vulnerable_api;
    let mut lines = vec![format!(
        "MethodCallInterceptor.interceptor({}, {}, new Object[]{{{}}});",
        java_string(&api.class_fqn),
        java_string(&api.method_name),
        expected.join(", ")
    )];
    for c in &report.trigger.conditions {
        lines.push(format!(
            "MethodCallInterceptor.condition({}, {});",
            java_string(c.predicate.as_str()),
            java_string(&c.value)
        ));
    }
    lines
}

/// Checks the emission contract; returns the first violated rule.
pub fn check_artifact(source: &str, expect_fail_line: bool) -> Result<(), String> {
    for oracle in [ORACLE_TRIGGERED, ORACLE_CONDITION] {
        let n = source.matches(oracle).count();
        if n != 1 {
            return Err(format!("`{}` appears {} times, expected once", oracle, n));
        }
    }
    if !source.contains("try {") || !source.contains("catch (") {
        return Err("focal invocation is not wrapped in try-catch".to_string());
    }
    if source.contains(EXPECTED_EXCEPTION_LINE) != expect_fail_line {
        return Err(if expect_fail_line {
            format!("missing `{}`", EXPECTED_EXCEPTION_LINE)
        } else {
            format!("unexpected `{}`", EXPECTED_EXCEPTION_LINE)
        });
    }
    Ok(())
}
