//! Per-method change history mined from git.
//!
//! Git is driven through its porcelain output (`log -p -U0`, `show`). Only the
//! first-parent chain is walked and renames are not followed, so a file's
//! history ends at the commit that introduced its current path.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{Frontend, MethodRecord};

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("git failed in {}: {detail}", root.display())]
    Repository { root: PathBuf, detail: String },
    #[error("method `{0}` not found at HEAD")]
    MethodNotFound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRef {
    pub id: String,
    /// Lowercased author email.
    pub author: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionMetrics {
    pub modifications: u32,
    pub contributors: u32,
    pub expertise: Ratio<u64>,
}

impl EvolutionMetrics {
    pub fn expertise_f64(&self) -> f64 {
        *self.expertise.numer() as f64 / *self.expertise.denom() as f64
    }
}

pub fn normalize_author(email: &str) -> String {
    email.trim().to_lowercase()
}

/// New-side line range of one diff hunk. `count == 0` marks a pure deletion
/// located after line `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hunk {
    pub start: u32,
    pub count: u32,
}

impl Hunk {
    /// Whether the hunk changes anything inside the inclusive line range.
    pub fn touches(&self, first: u32, last: u32) -> bool {
        if self.count == 0 {
            first <= self.start && self.start < last
        } else {
            self.start <= last && first < self.start + self.count
        }
    }
}

fn parse_hunk_header(line: &str) -> Option<Hunk> {
    let new_side = line.strip_prefix("@@ ")?.split(' ').find(|p| p.starts_with('+'))?;
    let mut parts = new_side[1..].splitn(2, ',');
    let start = parts.next()?.parse().ok()?;
    let count = match parts.next() {
        Some(c) => c.parse().ok()?,
        None => 1,
    };
    Some(Hunk { start, count })
}

/// A git working tree; paths are relative to `root`.
#[derive(Debug, Clone)]
pub struct Repository {
    root: PathBuf,
}

impl Repository {
    pub fn open(root: &Path) -> Result<Self, HistoryError> {
        let repo = Repository { root: root.to_path_buf() };
        let inside = repo.git(&["rev-parse", "--is-inside-work-tree"])?;
        if inside.trim() != "true" {
            return Err(repo.error("not a work tree".into()));
        }
        repo.git(&["rev-parse", "--verify", "HEAD"])?;
        Ok(repo)
    }

    fn error(&self, detail: String) -> HistoryError {
        HistoryError::Repository { root: self.root.clone(), detail }
    }

    fn git(&self, args: &[&str]) -> Result<String, HistoryError> {
        let out = Command::new("git")
            .args(["-c", "core.quotepath=off", "-c", "diff.noprefix=false"])
            .args(args)
            .current_dir(&self.root)
            .output()
            .map_err(|e| self.error(format!("cannot run git: {e}")))?;
        if !out.status.success() {
            return Err(self.error(format!("git {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim())));
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }

    /// Commit count per normalized author over everything reachable from
    /// HEAD, and the total.
    pub fn author_commit_counts(&self) -> Result<(u64, BTreeMap<String, u64>), HistoryError> {
        let out = self.git(&["log", "--format=%ae", "HEAD"])?;
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for line in out.lines() {
            *counts.entry(normalize_author(line)).or_insert(0) += 1;
            total += 1;
        }
        Ok((total, counts))
    }

    fn file_at(&self, commit: &str, path: &str) -> Option<String> {
        self.git(&["show", &format!("{commit}:./{path}")]).ok()
    }

    /// Newest-first list of first-parent commits touching `path`, with the
    /// new-side hunks of each.
    pub fn file_log(&self, path: &str) -> Result<Vec<(CommitRef, Vec<Hunk>)>, HistoryError> {
        let out = self.git(&[
            "log",
            "--first-parent",
            "--no-renames",
            "--diff-merges=first-parent",
            "--no-color",
            "--no-ext-diff",
            "-p",
            "-U0",
            "--format=%x00%H%x00%ae",
            "HEAD",
            "--",
            path,
        ])?;
        let mut commits: Vec<(CommitRef, Vec<Hunk>)> = Vec::new();
        for line in out.lines() {
            if let Some(rest) = line.strip_prefix('\0') {
                let (id, author) = rest.split_once('\0').ok_or_else(|| self.error(format!("bad log line {line:?}")))?;
                commits.push((CommitRef { id: id.to_string(), author: normalize_author(author) }, Vec::new()));
            } else if line.starts_with("@@ ") {
                let hunk = parse_hunk_header(line).ok_or_else(|| self.error(format!("bad hunk header {line:?}")))?;
                if let Some(last) = commits.last_mut() {
                    last.1.push(hunk);
                }
            }
        }
        Ok(commits)
    }
}

struct Revision {
    commit: CommitRef,
    hunks: Vec<Hunk>,
    /// Method id -> inclusive line range in this revision.
    methods: HashMap<String, (u32, u32)>,
}

/// Parsed history of one file, reusable for all of its methods.
pub struct FileHistory {
    revisions: Vec<Revision>,
}

impl FileHistory {
    pub fn load(repo: &Repository, path: &str, frontend: &dyn Frontend) -> Result<Self, HistoryError> {
        let mut revisions = Vec::new();
        for (commit, hunks) in repo.file_log(path)? {
            let methods = match repo.file_at(&commit.id, path) {
                Some(text) => match frontend.tokenize(text.as_bytes(), path) {
                    Ok(tokens) => frontend
                        .extract_methods(&tokens, path)
                        .into_iter()
                        .map(|m| (m.id, m.line_range))
                        .collect(),
                    Err(e) => {
                        log::warn!("{path} at {}: {e}", commit.id);
                        HashMap::new()
                    }
                },
                // Deleted in this commit.
                None => HashMap::new(),
            };
            revisions.push(Revision { commit, hunks, methods });
        }
        Ok(FileHistory { revisions })
    }

    /// Commits, newest first, whose hunks touch the method's span in that
    /// revision.
    pub fn method_history(&self, method_id: &str) -> Result<Vec<CommitRef>, HistoryError> {
        match self.revisions.first() {
            Some(head) if head.methods.contains_key(method_id) => {}
            _ => return Err(HistoryError::MethodNotFound(method_id.to_string())),
        }
        Ok(self
            .revisions
            .iter()
            .filter(|r| match r.methods.get(method_id) {
                Some(&(first, last)) => r.hunks.iter().any(|h| h.touches(first, last)),
                None => false,
            })
            .map(|r| r.commit.clone())
            .collect())
    }
}

/// History of a single method; see [`FileHistory`] for batches.
pub fn method_history(repo: &Repository, m: &MethodRecord, frontend: &dyn Frontend) -> Result<Vec<CommitRef>, HistoryError> {
    FileHistory::load(repo, &m.file, frontend)?.method_history(&m.id)
}

/// Expertise is the mean, over the method's contributors, of each
/// contributor's share of all project commits.
pub fn compute_evolution_metrics(
    history: &[CommitRef],
    total_commits: u64,
    per_author_commits: &BTreeMap<String, u64>,
) -> EvolutionMetrics {
    let authors: BTreeSet<&str> = history.iter().map(|c| c.author.as_str()).collect();
    let expertise = if authors.is_empty() || total_commits == 0 {
        Ratio::from_integer(0)
    } else {
        let sum: u64 = authors.iter().map(|a| per_author_commits.get(*a).copied().unwrap_or(0)).sum();
        Ratio::new(sum, total_commits * authors.len() as u64)
    };
    EvolutionMetrics { modifications: history.len() as u32, contributors: authors.len() as u32, expertise }
}
