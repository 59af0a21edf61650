//! End-to-end run: parse, localize, extract paths, decide reachability, generate, emit, confirm, report.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::call_graph::{build_call_graph, extract_call_paths, localize_vulnerable_methods, PathFilterConfig};
use crate::confirm::{
    emitted_only, run_confirmation, CommandToolchain, ConfirmError, ConfirmationReport, PathRecord, ToolchainConfig,
};
use crate::diag::Diagnostic;
use crate::java::{parse_project, CodeModel, ParseError};
use crate::ptg::{analyse_parameter_transfer, decide_reachability, ConversionAllowlist, ReachabilityResult};
use crate::testgen::{
    assemble_prompt, emit_tests, generate_llm, generate_offline, EmitOptions, HttpTransport, LlmClientConfig,
    LlmTransport, PromptBundle, PromptStyle, TestArtifact, TestgenError,
};
use crate::vuln_report::{load_report, ReportError, VulnerabilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every extracted call path counts as reachable.
    PathsOnly,
    /// Only paths passing parameter transfer analysis are reachable.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GenMode {
    Offline,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub project_root: PathBuf,
    pub poc_file: PathBuf,
    pub out_dir: PathBuf,
    pub mode: Mode,
    pub prompt_style: PromptStyle,
    pub gen_mode: GenMode,
    pub filters: PathFilterConfig,
    pub allowlist: ConversionAllowlist,
    pub llm: Option<LlmClientConfig>,
    pub toolchain: Option<ToolchainConfig>,
    /// Run the toolchain on emitted tests.
    pub confirm: bool,
    pub force_overwrite: bool,
    /// Report location; `<out_dir>/report.json` when unset.
    pub report_file: Option<PathBuf>,
    pub test_dir: PathBuf,
}

impl RunConfig {
    pub fn new(project_root: impl Into<PathBuf>, poc_file: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            project_root: project_root.into(),
            poc_file: poc_file.into(),
            out_dir: out_dir.into(),
            mode: Mode::Full,
            prompt_style: PromptStyle::FewShot,
            gen_mode: GenMode::Offline,
            filters: PathFilterConfig::default(),
            allowlist: ConversionAllowlist::default(),
            llm: None,
            toolchain: None,
            confirm: false,
            force_overwrite: false,
            report_file: None,
            test_dir: EmitOptions::default().test_dir,
        }
    }

    pub fn report_path(&self) -> PathBuf {
        self.report_file
            .clone()
            .unwrap_or_else(|| self.out_dir.join("report.json"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Testgen(#[from] TestgenError),
    #[error(transparent)]
    Confirm(#[from] ConfirmError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything a run produced, for callers that want more than the report.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ConfirmationReport,
    pub results: Vec<ReachabilityResult>,
    pub prompts: Vec<(usize, PromptBundle)>,
    pub artifacts: Vec<TestArtifact>,
    pub diagnostics: Vec<Diagnostic>,
}

fn write(path: &Path, content: &str) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, content).map_err(io)
}

fn chain_summary(model: &CodeModel, result: &ReachabilityResult, mode: Mode) -> Vec<String> {
    if mode == Mode::PathsOnly {
        return Vec::new();
    }
    if result.per_parameter.is_empty() {
        return vec!["no data-carrying argument".to_string()];
    }
    result
        .per_parameter
        .iter()
        .map(|v| match (&v.blocking, v.reachable) {
            (_, true) => {
                let hops: Vec<String> = v.witness.iter().map(|p| p.summary()).collect();
                format!("{}: reachable via {}", v.argument, hops.join(" => "))
            }
            (Some(t), false) => {
                let file = model
                    .method(&t.evidence.method)
                    .and_then(|m| model.class(&m.owner))
                    .map(|c| c.file.as_str())
                    .unwrap_or("");
                format!(
                    "{}: blocked by {} at {}:{} in {}",
                    v.argument,
                    t.kind.as_str(),
                    file,
                    t.evidence.line,
                    t.evidence.method
                )
            }
            (None, false) => format!("{}: no parameter path", v.argument),
        })
        .collect()
}

/// Prompt, tests and diagnostics produced for one reachable path.
type Generated = (PromptBundle, Vec<TestArtifact>, Vec<Diagnostic>);

fn generate(
    model: &CodeModel,
    report: &VulnerabilityReport,
    cfg: &RunConfig,
    reachable: &[(usize, &ReachabilityResult)],
    transport: Option<&dyn LlmTransport>,
) -> Vec<Result<Generated, TestgenError>> {
    let one = |&(number, result): &(usize, &ReachabilityResult)| {
        let bundle = assemble_prompt(model, result, report, cfg.prompt_style)?;
        match (cfg.gen_mode, transport) {
            (GenMode::Llm, Some(t)) => {
                let package = model
                    .method(result.path.entry())
                    .and_then(|m| model.class(&m.owner))
                    .map(|c| c.package.clone())
                    .unwrap_or_default();
                let (artifacts, diags) = generate_llm(&bundle, report, &package, number, t)?;
                Ok((bundle, artifacts, diags))
            }
            _ => {
                let artifacts = generate_offline(model, result, report, number)?;
                Ok((bundle, artifacts, Vec::new()))
            }
        }
    };
    match cfg.gen_mode {
        GenMode::Offline => reachable.par_iter().map(one).collect(),
        GenMode::Llm => {
            let threads = cfg.llm.as_ref().map_or(1, |l| l.max_in_flight.max(1));
            match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| reachable.par_iter().map(one).collect()),
                Err(_) => reachable.iter().map(one).collect(),
            }
        }
    }
}

/// Runs the whole pipeline and writes prompts, tests and the report.
///
/// `transport` overrides the HTTP client in LLM mode.
pub fn run_pipeline(cfg: &RunConfig, transport: Option<&dyn LlmTransport>) -> Result<RunOutput, PipelineError> {
    if cfg.gen_mode == GenMode::Llm && cfg.llm.is_none() {
        return Err(PipelineError::Config(
            "LLM generation needs an [llm] configuration".into(),
        ));
    }
    if cfg.llm.as_ref().is_some_and(|l| l.max_in_flight == 0) {
        return Err(PipelineError::Config("llm.max_in_flight must be at least 1".into()));
    }
    if let Some(t) = &cfg.toolchain {
        if !t.test_cmd.contains("{test_class}") {
            return Err(PipelineError::Config(
                "toolchain.test_cmd must contain {test_class}".into(),
            ));
        }
    }
    let report = load_report(&cfg.poc_file)?;
    let parsed = parse_project(&cfg.project_root)?;
    let model = &parsed.model;
    let mut diagnostics = parsed.diagnostics.clone();

    let targets = localize_vulnerable_methods(model, &report);
    let (graph, graph_diags) = build_call_graph(model);
    diagnostics.extend(graph_diags);
    let (paths, path_diags) = extract_call_paths(model, &graph, &targets, &cfg.filters);
    diagnostics.extend(path_diags);

    let analysed: Vec<(ReachabilityResult, Vec<Diagnostic>)> = paths
        .par_iter()
        .map(|path| match cfg.mode {
            Mode::PathsOnly => (
                ReachabilityResult {
                    path: path.clone(),
                    per_parameter: Vec::new(),
                    path_reachable: true,
                },
                Vec::new(),
            ),
            Mode::Full => {
                let analysis = analyse_parameter_transfer(model, path, &report, &cfg.allowlist);
                (decide_reachability(&analysis, path), analysis.diagnostics)
            }
        })
        .collect();
    let mut results = Vec::new();
    for (r, d) in analysed {
        diagnostics.extend(d);
        results.push(r);
    }

    let reachable: Vec<(usize, &ReachabilityResult)> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.path_reachable)
        .map(|(i, r)| (i + 1, r))
        .collect();
    let http;
    let transport = match (cfg.gen_mode, transport) {
        (GenMode::Llm, None) => {
            http = HttpTransport::new(cfg.llm.clone().expect("checked above"));
            Some(&http as &dyn LlmTransport)
        }
        (_, t) => t,
    };
    let mut prompts = Vec::new();
    let mut artifacts = Vec::new();
    for ((number, result), generated) in reachable
        .iter()
        .zip(generate(model, &report, cfg, &reachable, transport))
    {
        match generated {
            Ok((bundle, arts, diags)) => {
                prompts.push((*number, bundle));
                artifacts.extend(arts);
                diagnostics.extend(diags);
            }
            Err(e) => {
                let entry = model.method(result.path.entry());
                let file = entry
                    .and_then(|m| model.class(&m.owner))
                    .map(|c| c.file.clone())
                    .unwrap_or_default();
                diagnostics.push(Diagnostic::new(
                    file,
                    entry.map_or(0, |m| m.line),
                    format!("P{}: test generation failed: {}", number, e),
                ));
            }
        }
    }

    if !artifacts.is_empty() {
        let opts = EmitOptions {
            test_dir: cfg.test_dir.clone(),
            force: cfg.force_overwrite,
        };
        emit_tests(&artifacts, &cfg.project_root, &opts)?;
    }
    for (number, bundle) in &prompts {
        write(
            &cfg.out_dir.join("prompts").join(format!("P{}.txt", number)),
            &bundle.rendered,
        )?;
    }

    let (tests, confirm_diags) = if cfg.confirm {
        let toolchain = CommandToolchain::new(cfg.toolchain.clone().unwrap_or_default(), &cfg.project_root);
        run_confirmation(&artifacts, &toolchain)
    } else {
        (emitted_only(&artifacts), Vec::new())
    };
    let mut rendered: Vec<String> = diagnostics.iter().map(Diagnostic::to_string).collect();
    rendered.extend(
        confirm_diags
            .iter()
            .map(|d| format!("WARN {}:0 {}", cfg.project_root.display(), d)),
    );
    let path_records = results
        .iter()
        .enumerate()
        .map(|(i, r)| PathRecord {
            number: i + 1,
            methods: r.path.methods.clone(),
            reachable: r.path_reachable,
            transfer_chain: chain_summary(model, r, cfg.mode),
        })
        .collect();
    let confirmation = ConfirmationReport::new(
        cfg.project_root.display().to_string(),
        report.cve_id.clone(),
        path_records,
        tests,
        rendered,
    );
    write(&cfg.report_path(), &confirmation.to_json())?;
    Ok(RunOutput {
        report: confirmation,
        results,
        prompts,
        artifacts,
        diagnostics,
    })
}
