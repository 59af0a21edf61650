//! Prompt assembly in the three styles.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::java::resolve::resolve_type;
use crate::java::CodeModel;
use crate::ptg::ReachabilityResult;
use crate::vuln_report::{VulnerabilityKind, VulnerabilityReport};

use super::{
    interceptor_setup, PromptBundle, PromptComponent, PromptSection, PromptStyle, TestgenError,
    EXPECTED_EXCEPTION_LINE, INTERCEPTOR_PACKAGE, ORACLE_CONDITION, ORACLE_TRIGGERED,
};

pub const ROLE_LINE: &str = "I want you to act like a Java tester.";

/// Focal-method examples wrapped in try-catch, used by the few-shot style.
pub const FEW_SHOT_EXAMPLES: [&str; 5] = [
    include_str!("../../assets/fewshot/example1.java"),
    include_str!("../../assets/fewshot/example2.java"),
    include_str!("../../assets/fewshot/example3.java"),
    include_str!("../../assets/fewshot/example4.java"),
    include_str!("../../assets/fewshot/example5.java"),
];

fn code_block(out: &mut String, body: &str) {
    out.push_str("```java\n");
    out.push_str(body.trim_end());
    out.push_str("\n```\n");
}

/// `UncaughtException` → `Uncaught Exception`.
fn spaced(kind: VulnerabilityKind) -> String {
    let mut out = String::new();
    for (i, c) in kind.as_str().chars().enumerate() {
        if i > 0 && c.is_ascii_uppercase() {
            out.push(' ');
        }
        out.push(c);
    }
    out
}

fn prompt_hint() -> String {
    let mut t = String::new();
    writeln!(t, "Role: {}", ROLE_LINE).unwrap();
    t.push_str(
        "Hint: Generate a unit test for confirming vulnerability exploitation using the JUnit framework, \
         with the following requirements:\n",
    );
    t.push_str("Provide two test classes, each in its own ```java code block.\n\n");
    t
}

fn focal_method(model: &CodeModel, entry: &str) -> Result<String, TestgenError> {
    let method = model
        .method(entry)
        .ok_or_else(|| TestgenError::UnknownMethod(entry.to_string()))?;
    let class = model
        .class(&method.owner)
        .ok_or_else(|| TestgenError::UnknownMethod(entry.to_string()))?;
    let mut t = String::new();
    writeln!(
        t,
        "Hint: The focal method is {}, located in the {} class (package {}), the method signature is:",
        method.name,
        class.name,
        if class.package.is_empty() {
            "<default>"
        } else {
            &class.package
        }
    )
    .unwrap();
    t.push_str("Code:\n");
    code_block(&mut t, &method.header);
    let mut shown = BTreeSet::new();
    for p in &method.params {
        let fqn = resolve_type(model, class, &p.ty);
        if fqn == class.fqn || !shown.insert(fqn.clone()) {
            continue;
        }
        if let Some(c) = model.class(&fqn) {
            writeln!(t, "The parameter type {} is defined as:", c.name).unwrap();
            code_block(&mut t, &c.source);
        }
    }
    t.push('\n');
    Ok(t)
}

fn test_input(report: &VulnerabilityReport) -> String {
    let mut t = String::new();
    for input in &report.trigger.inputs {
        writeln!(
            t,
            "The input variable name for this unit test is {}, and the value is: {};",
            input.name, input.value
        )
        .unwrap();
    }
    t.push('\n');
    t
}

fn test_oracle(report: &VulnerabilityReport) -> String {
    let mut t = String::new();
    writeln!(
        t,
        "Hint1: Import {}.MethodCallInterceptor and register it before invoking the focal method:",
        INTERCEPTOR_PACKAGE
    )
    .unwrap();
    t.push_str("Code:\n");
    let names: Vec<String> = report.trigger.inputs.iter().map(|i| i.name.clone()).collect();
    code_block(&mut t, &interceptor_setup(report, &names).join("\n"));
    t.push_str("The assert statement to confirm that the vulnerability is successfully triggered is fixed as:\n");
    t.push_str("Code:\n");
    code_block(&mut t, &format!("{}\n{}", ORACLE_TRIGGERED, ORACLE_CONDITION));
    if report.trigger.vulnerability_kind == VulnerabilityKind::UncaughtException {
        writeln!(
            t,
            "Hint2: The vulnerability type is {}. After invoking the method, proceed with:",
            spaced(report.trigger.vulnerability_kind)
        )
        .unwrap();
        code_block(&mut t, EXPECTED_EXCEPTION_LINE);
    } else {
        writeln!(
            t,
            "Hint2: The vulnerability type is {}.",
            spaced(report.trigger.vulnerability_kind)
        )
        .unwrap();
    }
    t.push('\n');
    t
}

fn vulnerable_method(report: &VulnerabilityReport) -> String {
    let api = &report.vulnerable_api;
    let class = api.class_fqn.rsplit('.').next().unwrap_or(&api.class_fqn);
    let mut t = String::new();
    writeln!(
        t,
        "Hint: The vulnerable method is {}, located in the {} class, the method signature is:",
        api.method_name, class
    )
    .unwrap();
    t.push_str("Code1:\n");
    code_block(&mut t, &format!("{}({})", api.method_name, api.param_types.join(", ")));
    t.push_str("The vulnerable code snippet is:\n");
    t.push_str("Code2:\n");
    code_block(&mut t, &api.snippet);
    t.push('\n');
    t
}

fn few_shot_examples() -> String {
    let mut t = String::from(
        "Hint: Wrap the focal method invocation in a try-catch block, as in these examples of focal methods:\n",
    );
    for (i, ex) in FEW_SHOT_EXAMPLES.iter().enumerate() {
        writeln!(t, "Example {}:", i + 1).unwrap();
        code_block(&mut t, ex);
    }
    t.push('\n');
    t
}

/// Builds the prompt for a reachable path's entry method.
pub fn assemble_prompt(
    model: &CodeModel,
    result: &ReachabilityResult,
    report: &VulnerabilityReport,
    style: PromptStyle,
) -> Result<PromptBundle, TestgenError> {
    if !result.path_reachable {
        return Err(TestgenError::UnreachablePath);
    }
    let section = |component, text| PromptSection { component, text };
    let mut sections = vec![
        section(PromptComponent::PromptHint, prompt_hint()),
        section(PromptComponent::FocalMethod, focal_method(model, result.path.entry())?),
        section(PromptComponent::TestInput, test_input(report)),
    ];
    if style != PromptStyle::Default {
        sections.push(section(PromptComponent::TestOracle, test_oracle(report)));
        sections.push(section(PromptComponent::VulnerableMethod, vulnerable_method(report)));
    }
    if style == PromptStyle::FewShot {
        sections.push(section(PromptComponent::FewShotExamples, few_shot_examples()));
    }
    Ok(PromptBundle::new(style, sections))
}
