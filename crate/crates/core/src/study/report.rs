use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ComparisonResult, InspectedMethod, SmellPrevalence, StudyError, StudyGroups, StudyOptions, StudyReport};
use crate::inspect::{Exclusion, Smell};
use crate::matrix::{Outcome, OutcomeMatrix};
use crate::scoring::{ratio_f64, MethodScore};

const LEGEND: [&str; 4] = [
    "Suite score counts a mutant as killed on FAIL, ERROR, or TIMEOUT; uncovered mutants stay in the denominator.",
    "Method score is killed / (killed + survived) over covered mutants, with killed counting FAIL and ERROR only; TIMEOUT cells are excluded from both terms.",
    "Comparisons test the best group against the worst group: two-sided Mann-Whitney U and Cohen's d (pooled sample standard deviation).",
    "History follows first-parent commits only and stops at file renames.",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteJson {
    pub killed: u64,
    pub survived: u64,
    pub uncovered: u64,
    pub generated: u64,
    pub score: Option<f64>,
    /// Exact score as `killed/generated`.
    pub score_fraction: Option<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyJson {
    pub suite: SuiteJson,
    pub tests: usize,
    pub selected: usize,
    pub excluded: BTreeMap<String, Exclusion>,
    pub nested_tests: Vec<String>,
    pub groups: Option<StudyGroups>,
    pub groups_note: Option<String>,
    pub alpha: f64,
    pub comparisons: Vec<ComparisonResult>,
    pub smell_prevalence: Vec<SmellPrevalence>,
    pub expertise_aggregation: String,
    pub history_available: bool,
    pub legend: Vec<String>,
}

impl StudyJson {
    pub fn build(matrix: &OutcomeMatrix, methods: &[InspectedMethod], report: &StudyReport, opts: &StudyOptions) -> Self {
        let suite = match &report.scores.suite {
            Ok(s) => SuiteJson {
                killed: s.killed,
                survived: s.survived,
                uncovered: s.uncovered,
                generated: s.generated,
                score: Some(s.as_f64()),
                score_fraction: Some(format!("{}/{}", s.killed, s.generated)),
                note: None,
            },
            Err(e) => SuiteJson {
                killed: 0,
                survived: 0,
                uncovered: 0,
                generated: 0,
                score: None,
                score_fraction: None,
                note: Some(e.to_string()),
            },
        };
        let mut nested_tests: Vec<String> = methods.iter().filter(|m| m.nested && report.selected.contains(&m.id)).map(|m| m.id.clone()).collect();
        nested_tests.sort();
        StudyJson {
            suite,
            tests: matrix.tests.len(),
            selected: report.selected.len(),
            excluded: report.excluded.clone(),
            nested_tests,
            groups: report.groups.as_ref().ok().cloned(),
            groups_note: report.groups.as_ref().err().cloned(),
            alpha: opts.alpha,
            comparisons: report.comparisons.clone(),
            smell_prevalence: report.prevalence.clone(),
            expertise_aggregation: "mean".into(),
            history_available: methods.iter().any(|m| m.evolution.is_some()),
            legend: LEGEND.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> StudyError + '_ {
    move |source| StudyError::Csv { path: path.to_path_buf(), source }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::Io { path: path.to_path_buf(), source }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_methods_csv(path: &Path, methods: &[InspectedMethod], report: &StudyReport) -> Result<(), StudyError> {
    let by_id: HashMap<&str, &InspectedMethod> = methods.iter().map(|m| (m.id.as_str(), m)).collect();
    let scores: HashMap<&str, &MethodScore> = report.scores.methods.iter().map(|s| (s.test_id.as_str(), s)).collect();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<String> = [
        "id",
        "file",
        "line",
        "score",
        "killed",
        "survived",
        "timeouts_excluded",
        "covered",
        "sloc",
        "bad_asserts",
        "exceptions",
        "magic_numbers",
        "modifications",
        "contributors",
        "expertise",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(Smell::ALL.iter().map(|s| s.as_str().to_string()));
    w.write_record(&header).map_err(csv_err(path))?;
    for id in &report.selected {
        let (m, s) = (by_id[id.as_str()], scores[id.as_str()]);
        let evo = m.evolution.as_ref();
        let mut row = vec![
            m.id.clone(),
            m.file.clone(),
            m.line.to_string(),
            opt(s.score_f64()),
            s.killed.to_string(),
            s.survived.to_string(),
            s.timeouts_excluded.to_string(),
            s.covered.to_string(),
            m.metrics.sloc.to_string(),
            m.metrics.bad_asserts.to_string(),
            m.metrics.exceptions.to_string(),
            m.metrics.magic_numbers.to_string(),
            opt(evo.map(|e| e.modifications)),
            opt(evo.map(|e| e.contributors)),
            opt(evo.map(|e| e.expertise_f64())),
        ];
        row.extend(Smell::ALL.iter().map(|&smell| m.smells.has(smell).to_string()));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_mutants_csv(path: &Path, matrix: &OutcomeMatrix, report: &StudyReport) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["id", "operator", "file", "line", "status", "killing_tests"]).map_err(csv_err(path))?;
    for (m, (_, status)) in matrix.mutants.iter().zip(&report.scores.statuses) {
        let killers: Vec<&str> = matrix.row(m.id).filter(|(_, o)| o.outcome != Outcome::Pass).map(|(t, _)| t).collect();
        w.write_record([
            m.id.to_string(),
            m.operator_id.clone(),
            m.file.clone(),
            m.line.to_string(),
            status.as_str().to_string(),
            killers.join(";"),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn summary_text(matrix: &OutcomeMatrix, report: &StudyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tests           {}", matrix.tests.len());
    let _ = writeln!(s, "selected tests  {}", report.selected.len());
    let _ = writeln!(s, "mutants         {}", matrix.mutants.len());
    match &report.scores.suite {
        Ok(suite) => {
            let _ = writeln!(s, "  killed        {}", suite.killed);
            let _ = writeln!(s, "  survived      {}", suite.survived);
            let _ = writeln!(s, "  uncovered     {}", suite.uncovered);
            let _ = writeln!(s, "runs            {}", matrix.len());
            let _ = writeln!(s, "mutation score  {:.2}%", 100.0 * ratio_f64(suite.score));
        }
        Err(e) => {
            let _ = writeln!(s, "runs            {}", matrix.len());
            let _ = writeln!(s, "mutation score  undefined ({e})");
        }
    }
    s
}

/// Writes `methods.csv`, `mutants.csv`, `study.json`, and `summary.txt`
/// into `dir` and returns their paths.
pub fn emit_reports(
    dir: &Path,
    matrix: &OutcomeMatrix,
    methods: &[InspectedMethod],
    report: &StudyReport,
    opts: &StudyOptions,
) -> Result<Vec<PathBuf>, StudyError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let methods_csv = dir.join("methods.csv");
    write_methods_csv(&methods_csv, methods, report)?;
    let mutants_csv = dir.join("mutants.csv");
    write_mutants_csv(&mutants_csv, matrix, report)?;

    let study_json = dir.join("study.json");
    let mut json = serde_json::to_string_pretty(&StudyJson::build(matrix, methods, report, opts)).expect("serializable");
    json.push('\n');
    fs::write(&study_json, json).map_err(io_err(&study_json))?;

    let summary = dir.join("summary.txt");
    fs::write(&summary, summary_text(matrix, report)).map_err(io_err(&summary))?;
    Ok(vec![methods_csv, mutants_csv, study_json, summary])
}
