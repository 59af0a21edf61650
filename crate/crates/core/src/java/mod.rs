//! Java source front end: lexing, parsing, and the resulting code model.

mod lexer;
pub mod model;
mod parser;
pub mod resolve;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::diag::Diagnostic;
pub use model::*;
pub use resolve::{resolve_invocation, Resolution};

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("project root not found: {0}")]
    RootNotFound(PathBuf),
    #[error("no .java source files under {0}")]
    NoSourceFiles(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A parsed project together with the per-file problems met while parsing it.
#[derive(Debug, Clone)]
pub struct ParsedProject {
    pub model: CodeModel,
    pub diagnostics: Vec<Diagnostic>,
}

/// Directories skipped while collecting sources, relative to the project root.
const SKIPPED_DIRS: &[&str] = &["src/test", "target", "build", ".git"];

fn collect_sources(root: &Path) -> Result<Vec<PathBuf>, ParseError> {
    let walker = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| !(e.file_type().is_dir() && SKIPPED_DIRS.contains(&relative(root, e.path()).as_str())));
    let mut out = Vec::new();
    for entry in walker {
        let entry = entry.map_err(|e| ParseError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "java") {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

fn relative(root: &Path, p: &Path) -> String {
    let rel = p.strip_prefix(root).unwrap_or(p);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Parses every `.java` file under `root` (excluding test sources) into a [`CodeModel`].
pub fn parse_project(root: &Path) -> Result<ParsedProject, ParseError> {
    if !root.is_dir() {
        return Err(ParseError::RootNotFound(root.to_path_buf()));
    }
    let files = collect_sources(root)?;
    if files.is_empty() {
        return Err(ParseError::NoSourceFiles(root.to_path_buf()));
    }
    let parsed: Vec<Result<parser::ParsedFile, ParseError>> = files
        .par_iter()
        .map(|path| {
            let src = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(parser::parse_file(&relative(root, path), &src))
        })
        .collect();
    let mut sources = Vec::new();
    for p in parsed {
        sources.push(p?);
    }
    Ok(build_model(sources))
}

/// Parses in-memory sources, keyed by display file name.
pub fn parse_sources(files: &[(String, String)]) -> ParsedProject {
    let parsed = files.iter().map(|(name, src)| parser::parse_file(name, src)).collect();
    build_model(parsed)
}

fn build_model(files: Vec<parser::ParsedFile>) -> ParsedProject {
    let mut diagnostics = Vec::new();
    let mut classes: Vec<ClassDecl> = Vec::new();
    let mut seen = BTreeSet::new();
    for f in files {
        diagnostics.extend(f.diagnostics);
        for c in f.classes {
            if !seen.insert(c.fqn.clone()) {
                diagnostics.push(Diagnostic::new(
                    c.file.clone(),
                    c.line,
                    format!("duplicate class {} ignored", c.fqn),
                ));
                continue;
            }
            classes.push(c);
        }
    }
    // Supertype names are resolved against the complete set of declared classes.
    let provisional = CodeModel::from_classes(classes);
    let resolved: Vec<Vec<String>> = provisional
        .classes
        .iter()
        .map(|c| {
            let mut out: Vec<String> = Vec::new();
            for s in &c.supertypes {
                let fqn = resolve::resolve_type(&provisional, c, s);
                if fqn != c.fqn && !out.contains(&fqn) {
                    out.push(fqn);
                }
            }
            out
        })
        .collect();
    let mut classes = provisional.classes;
    for (c, sups) in classes.iter_mut().zip(resolved) {
        c.supertypes = sups;
        for m in &mut c.methods {
            m.owner = c.fqn.clone();
        }
    }
    diagnostics.sort();
    ParsedProject {
        model: CodeModel::from_classes(classes),
        diagnostics,
    }
}
