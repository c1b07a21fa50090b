//! Method-level mutation testing: per-(mutant, test) outcome matrices,
//! per-test mutation scores, static and historical test metrics, test
//! smells, and the statistics that compare strong and weak tests.

pub mod config;
pub mod frontend;
pub mod history;
pub mod inspect;
pub mod matrix;
pub mod mutation;
pub mod orchestrator;
pub mod pipeline;
pub mod scoring;
pub mod study;
pub mod workspace;

pub use config::Config;
pub use frontend::{classify_test, extract_methods, tokenize, Frontend, MethodRecord, PythonFrontend, SourceToken, Span, TokenKind};
pub use matrix::{Outcome, OutcomeMatrix, TestOutcome};
pub use mutation::{apply_mutant, generate_mutants, Mutant, MutationOperator};
pub use scoring::{classify_mutant, method_score, score_matrix, suite_score, MethodScore, MutantStatus, SuiteScore};
