//! Baseline, coverage-based scheduling, and isolated mutant execution.

pub mod protocol;
mod resume;
mod runner;

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use resume::{fingerprint, Checkpoint, Completed};
pub use runner::{Invocation, RunResult, Runner};

use crate::matrix::{Outcome, OutcomeMatrix, TestOutcome};
use crate::mutation::{apply_mutant, Mutant, MutationError};
use crate::workspace::{copy_tree, WorkspaceError};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("baseline suite is red: {}", failing.join(", "))]
    RedSuite { failing: Vec<String> },
    #[error("runner protocol error in `{command}`: {detail}")]
    RunnerProtocol { command: String, detail: String },
    #[error("cannot start runner {}: {source}", program.display())]
    Spawn { program: PathBuf, source: io::Error },
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub test_id: String,
    /// Outcome and runner-reported duration.
    pub outcome: TestOutcome,
    /// Workspace-relative file -> executed lines.
    pub covered: BTreeMap<String, BTreeSet<u32>>,
    /// Wall-clock time of the whole runner process; the time-out threshold
    /// is derived from this.
    pub wall_ms: u64,
}

/// `ceil(factor * baseline) + constant`, with the factor resolved to 1e-6.
pub fn timeout_threshold(baseline_duration_ms: u64, factor: f64, constant_ms: u64) -> u64 {
    assert!(factor.is_finite() && factor >= 0.0, "time-out factor must be finite and non-negative");
    const SCALE: u128 = 1_000_000;
    let scaled = (factor * SCALE as f64).round() as u128;
    let product = scaled * baseline_duration_ms as u128;
    (product.div_ceil(SCALE)) as u64 + constant_ms
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub jobs: usize,
    pub timeout_factor: f64,
    pub timeout_constant_ms: u64,
    /// Upper bound for `collect` and baseline invocations.
    pub baseline_limit: Duration,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            jobs: 1,
            timeout_factor: 1.25,
            timeout_constant_ms: 3000,
            baseline_limit: Duration::from_secs(600),
        }
    }
}

/// Collects the tests and runs each once, with coverage, on the pristine
/// workspace. Any failing, erroring, or hanging test makes the suite red.
pub fn run_baseline(workspace: &Path, runner: &Runner, opts: &ExecOptions) -> Result<Vec<BaselineRecord>, OrchestratorError> {
    let ids = runner.collect(workspace, opts.baseline_limit)?;
    let mut records = Vec::with_capacity(ids.len());
    let mut failing = Vec::new();
    for id in ids {
        match runner.baseline(workspace, &id, opts.baseline_limit)? {
            Some((r, wall_ms)) => {
                if r.outcome != Outcome::Pass {
                    failing.push(format!("{id} ({:?})", r.outcome));
                }
                records.push(BaselineRecord {
                    test_id: id,
                    outcome: TestOutcome::new(r.outcome, r.duration_ms),
                    covered: r.covered.unwrap_or_default(),
                    wall_ms,
                });
            }
            None => failing.push(format!("{id} (TIMEOUT)")),
        }
    }
    if !failing.is_empty() {
        return Err(OrchestratorError::RedSuite { failing });
    }
    Ok(records)
}

/// Tests whose baseline run executed the mutant's line, in baseline order.
/// An empty result means the mutant is uncovered.
pub fn covering_tests<'a>(m: &Mutant, baseline: &'a [BaselineRecord]) -> Vec<&'a str> {
    baseline
        .iter()
        .filter(|b| b.covered.get(&m.file).map(|lines| lines.contains(&m.line)).unwrap_or(false))
        .map(|b| b.test_id.as_str())
        .collect()
}

struct Job<'a> {
    mutant: &'a Mutant,
    tests: Vec<(&'a str, u64)>,
}

type Cell = (u32, String, TestOutcome);

/// Runs every mutant against exactly its covering tests.
///
/// Each worker owns a private copy of the workspace; every (mutant, test)
/// pair runs in a fresh runner process. Cells already in the checkpoint
/// (from a resumed run) are not executed again; new cells are appended. The resulting outcomes do not
/// depend on `opts.jobs`.
pub fn execute_matrix(
    workspace: &Path,
    mutants: &[Mutant],
    baseline: &[BaselineRecord],
    runner: &Runner,
    opts: &ExecOptions,
    mut checkpoint: Option<&mut Checkpoint>,
) -> Result<OutcomeMatrix, OrchestratorError> {
    let tests: Vec<String> = baseline.iter().map(|b| b.test_id.clone()).collect();
    let mut matrix = OutcomeMatrix::new(mutants.to_vec(), tests);
    let no_cells = Completed::new();
    let done = checkpoint.as_deref().map(|c| &c.done).unwrap_or(&no_cells);

    let thresholds: BTreeMap<&str, u64> = baseline
        .iter()
        .map(|b| (b.test_id.as_str(), timeout_threshold(b.wall_ms, opts.timeout_factor, opts.timeout_constant_ms)))
        .collect();
    let mut jobs = Vec::new();
    for m in mutants {
        let mut pending = Vec::new();
        for t in covering_tests(m, baseline) {
            match done.get(&(m.id, t.to_string())).copied() {
                Some(o) => {
                    matrix.insert(m.id, t, o);
                }
                None => pending.push((t, thresholds[t])),
            }
        }
        if !pending.is_empty() {
            jobs.push(Job { mutant: m, tests: pending });
        }
    }
    if jobs.is_empty() {
        return Ok(matrix);
    }

    let workers = opts.jobs.clamp(1, jobs.len());
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<Result<Cell, OrchestratorError>>();

    thread::scope(|scope| -> Result<(), OrchestratorError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, abort) = (&jobs, &next, &abort);
            scope.spawn(move || {
                if let Err(e) = worker(workspace, runner, jobs, next, abort, &tx) {
                    abort.store(true, Ordering::SeqCst);
                    let _ = tx.send(Err(e));
                }
            });
        }
        drop(tx);

        // Single collector: the only place the matrix is mutated.
        let mut first_error = None;
        for msg in rx {
            match msg {
                Ok((m, t, o)) => {
                    if let Some(c) = checkpoint.as_deref_mut() {
                        if let Err(e) = c.append(m, &t, &o) {
                            abort.store(true, Ordering::SeqCst);
                            first_error.get_or_insert(e);
                        }
                    }
                    matrix.insert(m, t, o);
                }
                Err(e) => {
                    abort.store(true, Ordering::SeqCst);
                    first_error.get_or_insert(e);
                }
            }
        }
        first_error.map_or(Ok(()), Err)
    })?;
    Ok(matrix)
}

fn worker(
    workspace: &Path,
    runner: &Runner,
    jobs: &[Job<'_>],
    next: &AtomicUsize,
    abort: &AtomicBool,
    tx: &mpsc::Sender<Result<Cell, OrchestratorError>>,
) -> Result<(), OrchestratorError> {
    let private = tempfile::Builder::new()
        .prefix("mutascope-ws-")
        .tempdir()
        .map_err(|source| OrchestratorError::Io { path: std::env::temp_dir(), source })?;
    copy_tree(workspace, private.path())?;

    loop {
        if abort.load(Ordering::SeqCst) {
            return Ok(());
        }
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(job) = jobs.get(i) else { return Ok(()) };
        let applied = apply_mutant(private.path(), job.mutant)?;
        for &(test, threshold) in &job.tests {
            let outcome = match runner.run(private.path(), test, Duration::from_millis(threshold)) {
                Ok(RunResult::Completed { result, .. }) => TestOutcome::new(result.outcome, result.duration_ms),
                Ok(RunResult::TimedOut { elapsed_ms }) => TestOutcome::new(Outcome::Timeout, elapsed_ms.max(threshold)),
                Err(e @ OrchestratorError::RunnerProtocol { .. }) => {
                    log::warn!("mutant {} / {test}: {e}; recorded as ERROR", job.mutant.id);
                    TestOutcome::new(Outcome::Error, 0)
                }
                Err(e) => return Err(e),
            };
            if tx.send(Ok((job.mutant.id, test.to_string(), outcome))).is_err() {
                return Ok(());
            }
        }
        applied.revert()?;
    }
}
