//! Append-only checkpoint of executed cells, used to resume interrupted runs.
//!
//! The first line holds a fingerprint of the mutant list and test ids; every
//! following line is one [`MatrixEntry`]. A torn last line is ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::OrchestratorError;
use crate::matrix::{MatrixEntry, TestOutcome};
use crate::mutation::Mutant;

#[derive(Serialize, Deserialize)]
struct Header {
    fingerprint: String,
}

pub fn fingerprint(mutants: &[Mutant], tests: &[String]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&(mutants, tests)).expect("serializable"));
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Cells already executed, keyed by (mutant id, test id).
pub type Completed = HashMap<(u32, String), TestOutcome>;

#[derive(Debug)]
pub struct Checkpoint {
    path: PathBuf,
    file: File,
    /// Cells recovered when the checkpoint was opened.
    pub done: Completed,
}

impl Checkpoint {
    /// Opens the checkpoint file. With `resume`, previously recorded cells
    /// are loaded (the fingerprint must match); otherwise it starts over.
    pub fn open(path: &Path, fingerprint: &str, resume: bool) -> Result<Self, OrchestratorError> {
        let io = |source| OrchestratorError::Io { path: path.to_path_buf(), source };
        let mut done = Completed::new();
        if resume && path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            let mut lines = reader.lines();
            let header: Header = match lines.next() {
                Some(line) => serde_json::from_str(&line.map_err(io)?)
                    .map_err(|e| OrchestratorError::Resume(format!("{}: bad header: {e}", path.display())))?,
                None => Header { fingerprint: fingerprint.to_string() },
            };
            if header.fingerprint != fingerprint {
                return Err(OrchestratorError::Resume(format!(
                    "{} was recorded for different mutants or tests",
                    path.display()
                )));
            }
            for line in lines {
                let line = line.map_err(io)?;
                match serde_json::from_str::<MatrixEntry>(&line) {
                    Ok(e) => {
                        done.insert((e.mutant, e.test), TestOutcome::new(e.outcome, e.duration_ms));
                    }
                    Err(_) if !line.trim().is_empty() => log::warn!("{}: skipping torn entry", path.display()),
                    Err(_) => {}
                }
            }
        }
        let mut file = File::create(path).map_err(io)?;
        let mut buf = serde_json::to_string(&Header { fingerprint: fingerprint.to_string() }).expect("serializable");
        buf.push('\n');
        for ((m, t), o) in sorted(&done) {
            buf.push_str(&entry_line(m, t, o));
        }
        file.write_all(buf.as_bytes()).map_err(io)?;
        drop(file);
        let file = OpenOptions::new().append(true).open(path).map_err(io)?;
        Ok(Checkpoint { path: path.to_path_buf(), file, done })
    }

    pub fn append(&mut self, mutant: u32, test: &str, outcome: &TestOutcome) -> Result<(), OrchestratorError> {
        self.file
            .write_all(entry_line(mutant, test, outcome).as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|source| OrchestratorError::Io { path: self.path.clone(), source })
    }
}

fn sorted(done: &Completed) -> Vec<((u32, &str), &TestOutcome)> {
    let mut v: Vec<_> = done.iter().map(|((m, t), o)| ((*m, t.as_str()), o)).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn entry_line(mutant: u32, test: &str, o: &TestOutcome) -> String {
    let e = MatrixEntry { mutant, test: test.to_string(), outcome: o.outcome, duration_ms: o.duration_ms };
    let mut s = serde_json::to_string(&e).expect("serializable");
    s.push('\n');
    s
}
