//! Chat-completion client and response parsing.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diag::Diagnostic;
use crate::vuln_report::{VulnerabilityKind, VulnerabilityReport};

use super::{check_artifact, test_file_name, Origin, PromptBundle, TestArtifact, TestgenError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmClientConfig {
    pub endpoint: String,
    pub model_name: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub timeout_s: u64,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        LlmClientConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-3.5-turbo".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_in_flight: 4,
            timeout_s: 120,
        }
    }
}

/// Sends one prompt and returns the model's reply text.
pub trait LlmTransport: Sync {
    fn complete(&self, prompt: &str) -> Result<String, TestgenError>;
}

/// Single-turn chat-completion request over HTTP.
pub struct HttpTransport {
    config: LlmClientConfig,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(config: LlmClientConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_s.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport { config, agent }
    }
}

impl LlmTransport for HttpTransport {
    fn complete(&self, prompt: &str) -> Result<String, TestgenError> {
        let body = json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(&self.config.endpoint);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            req = req.header("Authorization", &format!("Bearer {}", key));
        }
        let mut resp = req.send_json(&body).map_err(|_| TestgenError::LlmTransport(0))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(TestgenError::LlmTransport(status));
        }
        let reply: Value = resp
            .body_mut()
            .read_json()
            .map_err(|_| TestgenError::LlmTransport(status))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or(TestgenError::LlmTransport(status))
    }
}

/// Bodies of the fenced code blocks in `text`, in order.
pub fn extract_code_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        let fence = line.trim_start().starts_with("```");
        match (&mut current, fence) {
            (None, true) => current = Some(Vec::new()),
            (Some(lines), true) => {
                blocks.push(lines.join("\n") + "\n");
                current = None;
            }
            (Some(lines), false) => lines.push(line),
            (None, false) => {}
        }
    }
    blocks
}

/// Renames the first top-level class declaration to `name` and sets the package.
fn normalize(source: &str, name: &str, package: &str) -> String {
    let mut out = String::new();
    let mut renamed = false;
    let mut has_package = false;
    for line in source.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("package ") {
            has_package = true;
            if !package.is_empty() {
                out.push_str(&format!("package {};\n", package));
                continue;
            }
        }
        if !renamed {
            if let Some(at) = line.find("class ") {
                let head = &line[..at];
                if head.split_whitespace().all(|w| matches!(w, "public" | "final")) {
                    let rest = &line[at + 6..];
                    let end = rest
                        .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
                        .unwrap_or(rest.len());
                    out.push_str(&format!("{}class {}{}\n", head, name, &rest[end..]));
                    renamed = true;
                    continue;
                }
            }
        }
        out.push_str(line);
        out.push('\n');
    }
    if !has_package && !package.is_empty() {
        out = format!("package {};\n\n{}", package, out);
    }
    out
}

/// Sends the prompt and turns the first two code blocks of the reply into artifacts.
///
/// A reply with a single block yields that block twice; artifacts breaking the
/// emission contract are dropped with a diagnostic.
pub fn generate_llm(
    bundle: &PromptBundle,
    report: &VulnerabilityReport,
    package: &str,
    path_number: usize,
    transport: &dyn LlmTransport,
) -> Result<(Vec<TestArtifact>, Vec<Diagnostic>), TestgenError> {
    let reply = transport.complete(&bundle.rendered)?;
    let mut blocks = extract_code_blocks(&reply);
    let mut diags = Vec::new();
    let anchor = format!("P{}", path_number);
    match blocks.len() {
        0 => return Err(TestgenError::LlmNoCodeBlock),
        1 => {
            diags.push(Diagnostic::new(
                &anchor,
                0,
                "LLM reply has one code block; using it for both tests",
            ));
            blocks.push(blocks[0].clone());
        }
        _ => blocks.truncate(2),
    }
    let expect_fail = report.trigger.vulnerability_kind == VulnerabilityKind::UncaughtException;
    let mut artifacts = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        let index = i as u8 + 1;
        let file_name = test_file_name(&report.cve_id, path_number, index);
        let source = normalize(block, file_name.trim_end_matches(".java"), package);
        match check_artifact(&source, expect_fail) {
            Ok(()) => artifacts.push(TestArtifact {
                path_number,
                index,
                package: package.to_string(),
                file_name,
                source_text: source,
                origin: Origin::Llm,
            }),
            Err(why) => diags.push(Diagnostic::new(&anchor, 0, format!("rejected {}: {}", file_name, why))),
        }
    }
    Ok((artifacts, diags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_are_split_on_fences() {
        let text = "intro\n```java\nclass A {}\n```\nmid\n```\nclass B {}\n```\n```java\nclass C {}\n";
        assert_eq!(extract_code_blocks(text), ["class A {}\n", "class B {}\n"]);
    }

    #[test]
    fn class_and_package_are_normalized() {
        let src = "import org.junit.Test;\npublic class Whatever extends Base {\n}\n";
        assert_eq!(
            normalize(src, "VulEUT_X_P1_T1Test", "com.acme"),
            "package com.acme;\n\nimport org.junit.Test;\npublic class VulEUT_X_P1_T1Test extends Base {\n}\n"
        );
    }
}
