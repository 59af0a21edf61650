//! Writing generated tests and the interceptor scaffold into the analyzed project.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TestArtifact, TestgenError, INTERCEPTOR_FILE, INTERCEPTOR_PACKAGE, INTERCEPTOR_SOURCE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmitOptions {
    /// Test source root relative to the project root.
    pub test_dir: PathBuf,
    pub force: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            test_dir: PathBuf::from("src/test/java"),
            force: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmitOutcome {
    /// Files created or rewritten.
    pub written: Vec<PathBuf>,
    /// Files already present with identical content.
    pub unchanged: Vec<PathBuf>,
}

fn package_dir(root: &Path, package: &str) -> PathBuf {
    package
        .split('.')
        .filter(|s| !s.is_empty())
        .fold(root.to_path_buf(), |p, s| p.join(s))
}

pub fn test_path(test_root: &Path, artifact: &TestArtifact) -> PathBuf {
    package_dir(test_root, &artifact.package).join(&artifact.file_name)
}

pub fn interceptor_path(test_root: &Path) -> PathBuf {
    package_dir(test_root, INTERCEPTOR_PACKAGE).join(INTERCEPTOR_FILE)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TestgenError + '_ {
    move |source| TestgenError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the artifacts and the interceptor scaffold under the project's test root.
///
/// Every target is checked before anything is written, so a refused overwrite
/// leaves the project untouched. Identical existing files are not rewritten.
pub fn emit_tests(
    artifacts: &[TestArtifact],
    project_root: &Path,
    opts: &EmitOptions,
) -> Result<EmitOutcome, TestgenError> {
    let test_root = project_root.join(&opts.test_dir);
    if !test_root.is_dir() {
        return Err(TestgenError::TestDirMissing(test_root.display().to_string()));
    }
    let mut plan: Vec<(PathBuf, &str)> = vec![(interceptor_path(&test_root), INTERCEPTOR_SOURCE)];
    plan.extend(
        artifacts
            .iter()
            .map(|a| (test_path(&test_root, a), a.source_text.as_str())),
    );
    let mut outcome = EmitOutcome::default();
    let mut pending = Vec::new();
    for (path, content) in plan {
        match fs::read(&path) {
            Ok(existing) if existing == content.as_bytes() => outcome.unchanged.push(path),
            Ok(_) if !opts.force => return Err(TestgenError::WouldOverwrite(path.display().to_string())),
            _ => pending.push((path, content)),
        }
    }
    for (path, content) in pending {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(&path, content).map_err(io_err(&path))?;
        outcome.written.push(path);
    }
    Ok(outcome)
}
