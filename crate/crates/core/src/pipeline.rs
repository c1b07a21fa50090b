//! End-to-end `run` and `score` flows.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::frontend::{Frontend, MethodRecord};
use crate::history::{compute_evolution_metrics, EvolutionMetrics, FileHistory, HistoryError, Repository};
use crate::inspect::{class_contexts, compute_static_metrics, detect_smells, InspectRules};
use crate::matrix::OutcomeMatrix;
use crate::mutation::generate_mutants;
use crate::orchestrator::{execute_matrix, fingerprint, run_baseline, Checkpoint, OrchestratorError, Runner};
use crate::study::{analyze, emit_reports, InspectedMethod, StudyError, StudyOptions, StudyReport};
use crate::workspace::{build_globset, scan_workspace, ProjectScan, WorkspaceError};

pub const MATRIX_FILE: &str = "matrix.json";
pub const PARTIAL_FILE: &str = "matrix.partial.jsonl";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

/// What a run persists: the outcome matrix plus the source facts needed to
/// redo scoring and the study without touching the workspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub matrix: OutcomeMatrix,
    pub methods: Vec<InspectedMethod>,
}

impl RunRecord {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|source| PipelineError::Json { path: path.to_path_buf(), source })
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string(self).expect("serializable");
        text.push('\n');
        fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
    }
}

/// Per-method evolution metrics for the given test methods; `None` when the
/// workspace is not a git work tree.
pub fn mine_history(
    workspace: &Path,
    methods: &[&MethodRecord],
    frontend: &dyn Frontend,
) -> Option<HashMap<String, EvolutionMetrics>> {
    let repo = match Repository::open(workspace) {
        Ok(r) => r,
        Err(e) => {
            log::info!("no history metrics: {e}");
            return None;
        }
    };
    let (total, per_author) = match repo.author_commit_counts() {
        Ok(c) => c,
        Err(e) => {
            log::warn!("no history metrics: {e}");
            return None;
        }
    };
    let mut by_file: BTreeMap<&str, Vec<&MethodRecord>> = BTreeMap::new();
    for m in methods {
        by_file.entry(m.file.as_str()).or_default().push(m);
    }
    let mut out = HashMap::new();
    for (file, ms) in by_file {
        let history = match FileHistory::load(&repo, file, frontend) {
            Ok(h) => h,
            Err(e) => {
                log::warn!("{file}: {e}");
                continue;
            }
        };
        for m in ms {
            match history.method_history(&m.id) {
                Ok(commits) => {
                    out.insert(m.id.clone(), compute_evolution_metrics(&commits, total, &per_author));
                }
                Err(e @ HistoryError::MethodNotFound(_)) => log::info!("{e} (uncommitted?)"),
                Err(e) => log::warn!("{e}"),
            }
        }
    }
    Some(out)
}

/// Static metrics, smells, and history for every test method and every
/// method of a test file.
pub fn inspect_methods(
    workspace: &Path,
    scan: &ProjectScan,
    rules: &InspectRules,
    frontend: &dyn Frontend,
) -> Vec<InspectedMethod> {
    let all: Vec<&MethodRecord> = scan.methods().collect();
    let contexts = class_contexts(&all, rules);
    let function_ids: BTreeSet<String> = all.iter().map(|m| m.id.clone()).collect();
    let test_files: BTreeSet<&str> = scan.test_files().map(|f| f.path.as_str()).collect();
    let chosen: Vec<&MethodRecord> = all
        .iter()
        .copied()
        .filter(|m| m.is_test || test_files.contains(m.file.as_str()))
        .collect();
    let history_targets: Vec<&MethodRecord> = chosen.iter().copied().filter(|m| m.is_test && !m.is_skipped).collect();
    let evolution = mine_history(workspace, &history_targets, frontend);

    chosen
        .into_iter()
        .map(|m| InspectedMethod {
            id: m.id.clone(),
            file: m.file.clone(),
            line: m.line_range.0,
            is_test: m.is_test,
            is_skipped: m.is_skipped,
            nested: m.is_nested(&function_ids),
            metrics: compute_static_metrics(m, rules),
            smells: detect_smells(m, &contexts[&m.container_id()], rules),
            evolution: evolution.as_ref().and_then(|e| e.get(&m.id).copied()),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workspace: PathBuf,
    pub runner: PathBuf,
    pub config: Config,
    pub jobs: usize,
    pub k: usize,
    pub seed: u64,
    pub report_dir: PathBuf,
    pub resume: bool,
}

impl RunOptions {
    pub fn study_options(&self) -> StudyOptions {
        StudyOptions { k: self.k, seed: self.seed, alpha: self.config.alpha, random_policy: self.config.random_policy }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub record: RunRecord,
    pub report: StudyReport,
    pub files: Vec<PathBuf>,
}

pub fn run(opts: &RunOptions, frontend: &dyn Frontend) -> Result<RunOutput, PipelineError> {
    let cfg = &opts.config;
    cfg.validate()?;
    let workspace = opts.workspace.canonicalize().map_err(|source| PipelineError::Io { path: opts.workspace.clone(), source })?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PipelineError::Io { path, source }
    };
    fs::create_dir_all(&opts.report_dir).map_err(io(&opts.report_dir))?;

    let globs = build_globset(&cfg.test_globs)?;
    let scan = scan_workspace(&workspace, frontend, &globs, &cfg.test_rules())?;
    let runner = Runner::new(&opts.runner);
    let exec = cfg.exec_options(opts.jobs);

    let baseline = run_baseline(&workspace, &runner, &exec)?;
    log::info!("baseline green: {} tests", baseline.len());
    let mutants = generate_mutants(&scan.files, &cfg.operators);
    log::info!("{} mutants generated", mutants.len());

    let tests: Vec<String> = baseline.iter().map(|b| b.test_id.clone()).collect();
    let partial = opts.report_dir.join(PARTIAL_FILE);
    let mut checkpoint = Checkpoint::open(&partial, &fingerprint(&mutants, &tests), opts.resume)?;
    if !checkpoint.done.is_empty() {
        log::info!("resuming with {} recorded runs", checkpoint.done.len());
    }
    let matrix = execute_matrix(&workspace, &mutants, &baseline, &runner, &exec, Some(&mut checkpoint))?;
    drop(checkpoint);

    let methods = inspect_methods(&workspace, &scan, &cfg.inspect_rules(), frontend);
    let record = RunRecord { matrix, methods };
    record.save(&opts.report_dir.join(MATRIX_FILE))?;
    fs::remove_file(&partial).map_err(io(&partial))?;

    let (report, files) = score(&record, &opts.study_options(), &opts.report_dir)?;
    Ok(RunOutput { record, report, files })
}

/// Scores a persisted run and writes the reports.
pub fn score(record: &RunRecord, study: &StudyOptions, report_dir: &Path) -> Result<(StudyReport, Vec<PathBuf>), PipelineError> {
    let report = analyze(&record.matrix, &record.methods, study);
    let files = emit_reports(report_dir, &record.matrix, &record.methods, &report, study)?;
    Ok((report, files))
}
