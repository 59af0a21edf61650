//! Command-line front end and configuration file handling.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::call_graph::PathFilterConfig;
use crate::confirm::ToolchainConfig;
use crate::pipeline::{run_pipeline, GenMode, Mode, RunConfig};
use crate::ptg::ConversionAllowlist;
use crate::testgen::{LlmClientConfig, PromptStyle};

pub const EXIT_CONFIRMED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNCONFIRMED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vulnreach",
    version,
    about = "Reachability of vulnerable library calls in Java projects"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze one project against one PoC descriptor.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeArgs {
    /// Root of the Java project to analyze.
    #[arg(long)]
    pub project: Option<PathBuf>,
    /// PoC descriptor (JSON).
    #[arg(long)]
    pub poc: Option<PathBuf>,
    /// Directory for prompts and the default report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub prompt_style: Option<PromptStyle>,
    #[arg(long, value_enum)]
    pub gen: Option<GenMode>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub max_paths: Option<usize>,
    /// Overwrite differing test files.
    #[arg(long)]
    pub force: bool,
    /// Compile and run emitted tests with the configured toolchain.
    #[arg(long)]
    pub confirm: bool,
    /// Report file (default `<out>/report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// TOML file with defaults for every flag; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of the optional TOML configuration file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub project: Option<PathBuf>,
    pub poc: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub prompt_style: Option<PromptStyle>,
    pub gen: Option<GenMode>,
    pub force: Option<bool>,
    pub confirm: Option<bool>,
    pub report: Option<PathBuf>,
    pub test_dir: Option<PathBuf>,
    pub filters: Option<PathFilterConfig>,
    pub allowlist: Option<ConversionAllowlist>,
    pub llm: Option<LlmClientConfig>,
    pub toolchain: Option<ToolchainConfig>,
}

pub fn load_config(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {}", path.display(), e))?;
    toml::from_str(&text).map_err(|e| format!("{}: {}", path.display(), e))
}

/// Merges flags over file values.
pub fn resolve(file: FileConfig, flags: &AnalyzeArgs) -> Result<RunConfig, String> {
    let required = |flag: &Option<PathBuf>, from_file: Option<PathBuf>, name: &str| {
        flag.clone()
            .or(from_file)
            .ok_or_else(|| format!("--{} is required", name))
    };
    let mut cfg = RunConfig::new(
        required(&flags.project, file.project, "project")?,
        required(&flags.poc, file.poc, "poc")?,
        required(&flags.out, file.out, "out")?,
    );
    cfg.mode = flags.mode.or(file.mode).unwrap_or(cfg.mode);
    cfg.prompt_style = flags.prompt_style.or(file.prompt_style).unwrap_or(cfg.prompt_style);
    cfg.gen_mode = flags.gen.or(file.gen).unwrap_or(cfg.gen_mode);
    cfg.filters = file.filters.unwrap_or_default();
    if let Some(d) = flags.max_depth {
        cfg.filters.max_depth = d;
    }
    if let Some(n) = flags.max_paths {
        cfg.filters.max_paths = n;
    }
    cfg.allowlist = file.allowlist.unwrap_or_default();
    cfg.llm = file.llm;
    if cfg.gen_mode == GenMode::Llm && cfg.llm.is_none() {
        cfg.llm = Some(LlmClientConfig::default());
    }
    cfg.toolchain = file.toolchain;
    cfg.confirm = flags.confirm || file.confirm.unwrap_or(false);
    cfg.force_overwrite = flags.force || file.force.unwrap_or(false);
    cfg.report_file = flags.report.clone().or(file.report);
    if let Some(t) = file.test_dir {
        cfg.test_dir = t;
    }
    Ok(cfg)
}

fn analyze(args: &AnalyzeArgs) -> Result<i32, String> {
    let file = match &args.config {
        Some(p) => load_config(p)?,
        None => FileConfig::default(),
    };
    let cfg = resolve(file, args)?;
    let out = run_pipeline(&cfg, None).map_err(|e| e.to_string())?;
    for line in &out.report.diagnostics {
        eprintln!("{}", line);
    }
    let reachable = out.results.iter().filter(|r| r.path_reachable).count();
    println!(
        "{}: {} call paths, {} reachable, {} tests emitted, {} compiled, {} confirmed",
        out.report.cve_id,
        out.results.len(),
        reachable,
        out.report.totals.emitted,
        out.report.totals.compiled,
        out.report.totals.confirmed
    );
    println!("report: {}", cfg.report_path().display());
    Ok(if out.report.project_confirmed {
        EXIT_CONFIRMED
    } else {
        EXIT_UNCONFIRMED
    })
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_CONFIRMED };
        }
    };
    match cli.command {
        Command::Analyze(args) => analyze(&args).unwrap_or_else(|e| {
            eprintln!("error: {}", e);
            EXIT_ERROR
        }),
    }
}
