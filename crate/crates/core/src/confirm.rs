//! Compiling and running emitted tests through the project's own toolchain, and the confirmation report.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::testgen::TestArtifact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestStatus {
    Emitted,
    CompileError,
    RunFailed,
    Confirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRecord {
    pub file: String,
    pub status: TestStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRecord {
    /// Number used in emitted test names (`P<n>`).
    pub number: usize,
    pub methods: Vec<String>,
    pub reachable: bool,
    /// One line per trigger-relevant argument.
    pub transfer_chain: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub emitted: usize,
    pub compiled: usize,
    pub confirmed: usize,
}

impl Totals {
    pub fn of(tests: &[TestRecord]) -> Self {
        let count = |f: fn(TestStatus) -> bool| tests.iter().filter(|t| f(t.status)).count();
        Totals {
            emitted: tests.len(),
            compiled: count(|s| matches!(s, TestStatus::RunFailed | TestStatus::Confirmed)),
            confirmed: count(|s| s == TestStatus::Confirmed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfirmationReport {
    pub project: String,
    pub cve_id: String,
    pub paths: Vec<PathRecord>,
    pub tests: Vec<TestRecord>,
    pub totals: Totals,
    pub project_confirmed: bool,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl ConfirmationReport {
    pub fn new(
        project: impl Into<String>,
        cve_id: impl Into<String>,
        paths: Vec<PathRecord>,
        tests: Vec<TestRecord>,
        diagnostics: Vec<String>,
    ) -> Self {
        let totals = Totals::of(&tests);
        ConfirmationReport {
            project: project.into(),
            cve_id: cve_id.into(),
            paths,
            project_confirmed: totals.confirmed > 0,
            tests,
            totals,
            diagnostics,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfirmError {
    #[error("toolchain unavailable: {0}")]
    ToolchainUnavailable(String),
    #[error("cannot write report {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn write_report(report: &ConfirmationReport, out: &Path) -> Result<(), ConfirmError> {
    std::fs::write(out, report.to_json()).map_err(|source| ConfirmError::IoFailure {
        path: out.display().to_string(),
        source,
    })
}

pub fn read_report(text: &str) -> serde_json::Result<ConfirmationReport> {
    serde_json::from_str(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolchainConfig {
    pub compile_cmd: String,
    /// Must contain `{test_class}`.
    pub test_cmd: String,
    pub timeout_s: u64,
    /// Defaults to the project root.
    pub working_dir: Option<PathBuf>,
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        ToolchainConfig {
            compile_cmd: "mvn -q test-compile".into(),
            test_cmd: "mvn -q test -Dtest={test_class}".into(),
            timeout_s: 120,
            working_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Success,
    Failure(String),
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Compile,
    Test,
}

/// Runs one build step for one test class.
pub trait Toolchain {
    fn run(&self, step: Step, test_class: &str) -> Result<StepOutcome, ConfirmError>;
}

/// Runs the configured command templates directly, without a shell.
pub struct CommandToolchain {
    pub config: ToolchainConfig,
    pub working_dir: PathBuf,
}

impl CommandToolchain {
    pub fn new(config: ToolchainConfig, project_root: &Path) -> Self {
        let working_dir = config.working_dir.clone().unwrap_or_else(|| project_root.to_path_buf());
        CommandToolchain { config, working_dir }
    }
}

fn read_all(mut r: impl Read + Send + 'static) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    })
}

impl Toolchain for CommandToolchain {
    fn run(&self, step: Step, test_class: &str) -> Result<StepOutcome, ConfirmError> {
        let template = match step {
            Step::Compile => &self.config.compile_cmd,
            Step::Test => &self.config.test_cmd,
        };
        let line = template.replace("{test_class}", test_class);
        let argv = shell_words::split(&line).map_err(|e| ConfirmError::ToolchainUnavailable(e.to_string()))?;
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| ConfirmError::ToolchainUnavailable("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .current_dir(&self.working_dir)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ConfirmError::ToolchainUnavailable(format!("{}: {}", program, e)))?;
        let out = read_all(child.stdout.take().expect("piped"));
        let err = read_all(child.stderr.take().expect("piped"));
        let deadline = Instant::now() + Duration::from_secs(self.config.timeout_s);
        let status = loop {
            if let Some(status) = child
                .try_wait()
                .map_err(|e| ConfirmError::ToolchainUnavailable(e.to_string()))?
            {
                break Some(status);
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            thread::sleep(Duration::from_millis(20));
        };
        // Descendants of a killed command may keep the pipes open; leave the readers detached.
        let Some(status) = status else {
            return Ok(StepOutcome::TimedOut);
        };
        let mut output = out.join().unwrap_or_default();
        output.push_str(&err.join().unwrap_or_default());
        Ok(if status.success() {
            StepOutcome::Success
        } else {
            StepOutcome::Failure(output.trim().to_string())
        })
    }
}

/// Compiles and runs every artifact in order, recording one status each.
///
/// An unavailable toolchain leaves every test `Emitted` and is returned as a diagnostic.
pub fn run_confirmation(artifacts: &[TestArtifact], toolchain: &dyn Toolchain) -> (Vec<TestRecord>, Vec<String>) {
    let emitted = || -> Vec<TestRecord> {
        artifacts
            .iter()
            .map(|a| TestRecord {
                file: a.file_name.clone(),
                status: TestStatus::Emitted,
                detail: String::new(),
            })
            .collect()
    };
    let mut records = Vec::new();
    for a in artifacts {
        let class = a.class_name();
        let record = |status, detail: String| TestRecord {
            file: a.file_name.clone(),
            status,
            detail,
        };
        let compiled = match toolchain.run(Step::Compile, class) {
            Err(e) => return (emitted(), vec![e.to_string()]),
            Ok(o) => o,
        };
        records.push(match compiled {
            StepOutcome::Failure(out) => record(TestStatus::CompileError, out),
            StepOutcome::TimedOut => record(TestStatus::CompileError, "timeout".into()),
            StepOutcome::Success => match toolchain.run(Step::Test, class) {
                Err(e) => return (emitted(), vec![e.to_string()]),
                Ok(StepOutcome::Success) => record(TestStatus::Confirmed, String::new()),
                Ok(StepOutcome::Failure(out)) => record(TestStatus::RunFailed, out),
                Ok(StepOutcome::TimedOut) => record(TestStatus::RunFailed, "timeout".into()),
            },
        });
    }
    (records, Vec::new())
}

/// Records for tests that were emitted without running the toolchain.
pub fn emitted_only(artifacts: &[TestArtifact]) -> Vec<TestRecord> {
    run_confirmation(artifacts, &Unavailable).0
}

struct Unavailable;

impl Toolchain for Unavailable {
    fn run(&self, _: Step, _: &str) -> Result<StepOutcome, ConfirmError> {
        Err(ConfirmError::ToolchainUnavailable("not requested".into()))
    }
}
