use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use thiserror::Error;
use walkdir::WalkDir;

use crate::frontend::{classify_test, Frontend, MethodRecord, SourceToken, TestRules};

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("workspace {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid test glob `{glob}`: {source}")]
    Glob { glob: String, source: globset::Error },
    #[error("walking {path}: {source}")]
    Walk { path: PathBuf, source: walkdir::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io { path: path.to_path_buf(), source }
}

/// A tokenized source file inside the workspace.
#[derive(Debug, Clone)]
pub struct SourceFile {
    /// Workspace-relative, `/`-separated.
    pub path: String,
    pub tokens: Vec<SourceToken>,
    pub methods: Vec<MethodRecord>,
    /// Under a test glob, or defines at least one test method.
    pub is_test_file: bool,
}

#[derive(Debug, Default)]
pub struct ProjectScan {
    pub files: Vec<SourceFile>,
    /// Files the frontend could not read, with the reason.
    pub excluded: Vec<(String, String)>,
}

impl ProjectScan {
    pub fn production_files(&self) -> impl Iterator<Item = &SourceFile> {
        self.files.iter().filter(|f| !f.is_test_file)
    }

    pub fn test_files(&self) -> impl Iterator<Item = &SourceFile> {
        self.files.iter().filter(|f| f.is_test_file)
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodRecord> {
        self.files.iter().flat_map(|f| f.methods.iter())
    }
}

pub fn build_globset(globs: &[String]) -> Result<GlobSet, WorkspaceError> {
    let mut builder = GlobSetBuilder::new();
    for g in globs {
        let glob = Glob::new(g).map_err(|source| WorkspaceError::Glob { glob: g.clone(), source })?;
        builder.add(glob);
    }
    builder
        .build()
        .map_err(|source| WorkspaceError::Glob { glob: globs.join(","), source })
}

fn skipped_dir(name: &str) -> bool {
    name.starts_with('.') || name == "__pycache__"
}

pub fn relative_path(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Tokenizes every file the frontend handles and classifies files and
/// methods. Files that fail to decode are excluded with a warning.
pub fn scan_workspace(
    root: &Path,
    frontend: &dyn Frontend,
    test_globs: &GlobSet,
    rules: &TestRules,
) -> Result<ProjectScan, WorkspaceError> {
    let mut scan = ProjectScan::default();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !(e.file_type().is_dir() && skipped_dir(&e.file_name().to_string_lossy())));
    for entry in walker {
        let entry = entry.map_err(|source| WorkspaceError::Walk { path: root.to_path_buf(), source })?;
        if !entry.file_type().is_file() || !frontend.handles(entry.path()) {
            continue;
        }
        let rel = relative_path(root, entry.path());
        let bytes = fs::read(entry.path()).map_err(io_err(entry.path()))?;
        let tokens = match frontend.tokenize(&bytes, &rel) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("{e}");
                scan.excluded.push((rel, e.to_string()));
                continue;
            }
        };
        let mut methods = frontend.extract_methods(&tokens, &rel);
        let mut has_tests = false;
        for m in &mut methods {
            has_tests |= classify_test(m, rules);
        }
        scan.files.push(SourceFile {
            is_test_file: test_globs.is_match(&rel) || has_tests,
            path: rel,
            tokens,
            methods,
        });
    }
    Ok(scan)
}

/// Recursively copies `src` into `dst`, skipping `.git`.
pub fn copy_tree(src: &Path, dst: &Path) -> Result<(), WorkspaceError> {
    let walker = WalkDir::new(src)
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || e.file_name() != ".git");
    for entry in walker {
        let entry = entry.map_err(|source| WorkspaceError::Walk { path: src.to_path_buf(), source })?;
        let target = dst.join(entry.path().strip_prefix(src).expect("walk stays under root"));
        if entry.file_type().is_dir() {
            fs::create_dir_all(&target).map_err(io_err(&target))?;
        } else if entry.file_type().is_file() {
            fs::copy(entry.path(), &target).map_err(io_err(&target))?;
        }
    }
    Ok(())
}
