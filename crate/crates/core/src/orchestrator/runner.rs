use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use super::protocol::{parse_messages, single_result, Message, ResultMessage};
use super::OrchestratorError;

/// Handle on a runner executable.
#[derive(Debug, Clone)]
pub struct Runner {
    program: PathBuf,
}

/// What a single runner invocation produced.
#[derive(Debug)]
pub enum Invocation {
    Finished { stdout: String, stderr: String, success: bool, elapsed_ms: u64 },
    /// Killed at the limit.
    TimedOut { elapsed_ms: u64 },
}

/// Result of running one test in a fresh process.
#[derive(Debug)]
pub enum RunResult {
    Completed { result: ResultMessage, elapsed_ms: u64 },
    TimedOut { elapsed_ms: u64 },
}

impl Runner {
    /// Relative program paths resolve against the current directory, since
    /// the runner is started inside the workspace.
    pub fn new(program: impl AsRef<Path>) -> Self {
        let p = program.as_ref();
        let program = if p.components().count() > 1 && p.is_relative() {
            std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
        } else {
            p.to_path_buf()
        };
        Runner { program }
    }

    pub fn program(&self) -> &Path {
        &self.program
    }

    fn describe(&self, args: &[&str]) -> String {
        format!("{} {}", self.program.display(), args.join(" "))
    }

    pub fn invoke(&self, workspace: &Path, args: &[&str], limit: Duration) -> Result<Invocation, OrchestratorError> {
        let start = Instant::now();
        let mut child = Command::new(&self.program)
            .args(args)
            .current_dir(workspace)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| OrchestratorError::Spawn { program: self.program.clone(), source })?;

        let mut out = child.stdout.take().expect("piped");
        let mut err = child.stderr.take().expect("piped");
        let out_reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = out.read_to_string(&mut s);
            s
        });
        let err_reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = err.read_to_string(&mut s);
            s
        });

        let status = child
            .wait_timeout(limit)
            .map_err(|source| OrchestratorError::Spawn { program: self.program.clone(), source })?;
        let Some(status) = status else {
            let _ = child.kill();
            let _ = child.wait();
            let elapsed_ms = start.elapsed().as_millis() as u64;
            // Grandchildren may keep the pipes open; don't wait on readers.
            drop(out_reader);
            drop(err_reader);
            return Ok(Invocation::TimedOut { elapsed_ms: elapsed_ms.max(limit.as_millis() as u64) });
        };
        let elapsed_ms = start.elapsed().as_millis() as u64;
        Ok(Invocation::Finished {
            stdout: out_reader.join().unwrap_or_default(),
            stderr: err_reader.join().unwrap_or_default(),
            success: status.success(),
            elapsed_ms,
        })
    }

    fn finished(&self, args: &[&str], inv: Invocation) -> Result<(String, u64), OrchestratorError> {
        match inv {
            Invocation::Finished { stdout, success: true, elapsed_ms, .. } => Ok((stdout, elapsed_ms)),
            Invocation::Finished { stderr, .. } => Err(OrchestratorError::RunnerProtocol {
                command: self.describe(args),
                detail: format!("nonzero exit: {}", stderr.trim()),
            }),
            Invocation::TimedOut { elapsed_ms } => Err(OrchestratorError::RunnerProtocol {
                command: self.describe(args),
                detail: format!("no answer within {elapsed_ms} ms"),
            }),
        }
    }

    pub fn collect(&self, workspace: &Path, limit: Duration) -> Result<Vec<String>, OrchestratorError> {
        let args = ["collect"];
        let (stdout, _) = self.finished(&args, self.invoke(workspace, &args, limit)?)?;
        let protocol = |detail: String| OrchestratorError::RunnerProtocol { command: self.describe(&args), detail };
        let mut ids = Vec::new();
        for msg in parse_messages(&stdout).map_err(protocol)? {
            match msg {
                Message::Test { id } if ids.contains(&id) => return Err(protocol(format!("duplicate test id `{id}`"))),
                Message::Test { id } => ids.push(id),
                Message::Result(_) => return Err(protocol("unexpected result message".into())),
            }
        }
        Ok(ids)
    }

    /// Runs one test with coverage. A time-out here is reported as
    /// `Ok(None)` so the caller can treat it as a red baseline.
    pub fn baseline(&self, workspace: &Path, id: &str, limit: Duration) -> Result<Option<(ResultMessage, u64)>, OrchestratorError> {
        let args = ["baseline", "--test", id];
        let inv = self.invoke(workspace, &args, limit)?;
        if let Invocation::TimedOut { .. } = inv {
            return Ok(None);
        }
        let (stdout, elapsed) = self.finished(&args, inv)?;
        let result = single_result(&stdout, id, true)
            .map_err(|detail| OrchestratorError::RunnerProtocol { command: self.describe(&args), detail })?;
        Ok(Some((result, elapsed)))
    }

    pub fn run(&self, workspace: &Path, id: &str, limit: Duration) -> Result<RunResult, OrchestratorError> {
        let args = ["run", "--test", id];
        match self.invoke(workspace, &args, limit)? {
            Invocation::TimedOut { elapsed_ms } => Ok(RunResult::TimedOut { elapsed_ms }),
            inv => {
                let (stdout, elapsed_ms) = self.finished(&args, inv)?;
                let result = single_result(&stdout, id, false)
                    .map_err(|detail| OrchestratorError::RunnerProtocol { command: self.describe(&args), detail })?;
                Ok(RunResult::Completed { result, elapsed_ms })
            }
        }
    }
}
