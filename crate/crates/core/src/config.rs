use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::TestRules;
use crate::inspect::InspectRules;
use crate::mutation::MutationOperator;
use crate::orchestrator::ExecOptions;
use crate::study::RandomPolicy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Run configuration. Every field is optional in the JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub operators: Vec<MutationOperator>,
    /// Workspace-relative globs marking test files, which are never mutated.
    pub test_globs: Vec<String>,
    pub test_markers: BTreeSet<String>,
    pub skip_markers: BTreeSet<String>,
    pub assertion_prefixes: BTreeSet<String>,
    pub assertion_names: BTreeSet<String>,
    pub sleep_names: BTreeSet<String>,
    pub setup_names: BTreeSet<String>,
    pub string_conversion_names: BTreeSet<String>,
    pub expected_exception_names: BTreeSet<String>,
    pub timeout_factor: f64,
    pub timeout_constant_ms: u64,
    /// Limit for `collect` and each baseline run.
    pub baseline_timeout_ms: u64,
    pub alpha: f64,
    pub random_policy: RandomPolicy,
}

impl Default for Config {
    fn default() -> Self {
        let tests = TestRules::default();
        let inspect = InspectRules::default();
        Config {
            operators: MutationOperator::ALL.to_vec(),
            test_globs: ["test_*.py", "**/test_*.py", "*_test.py", "**/*_test.py", "tests/**"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            test_markers: tests.test_markers,
            skip_markers: tests.skip_markers,
            assertion_prefixes: inspect.assert_prefixes,
            assertion_names: inspect.assert_names,
            sleep_names: inspect.sleep_names,
            setup_names: inspect.setup_names,
            string_conversion_names: inspect.string_conversion_names,
            expected_exception_names: inspect.expected_exception_names,
            timeout_factor: 1.25,
            timeout_constant_ms: 3000,
            baseline_timeout_ms: 600_000,
            alpha: 0.05,
            random_policy: RandomPolicy::Disjoint,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let cfg = Self::from_json(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.operators.is_empty() {
            return Err(ConfigError::Invalid("operators must not be empty".into()));
        }
        if !(self.timeout_factor.is_finite() && self.timeout_factor >= 0.0) {
            return Err(ConfigError::Invalid("timeout_factor must be a non-negative number".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::Invalid("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn test_rules(&self) -> TestRules {
        TestRules { test_markers: self.test_markers.clone(), skip_markers: self.skip_markers.clone() }
    }

    pub fn inspect_rules(&self) -> InspectRules {
        InspectRules {
            assert_prefixes: self.assertion_prefixes.clone(),
            assert_names: self.assertion_names.clone(),
            sleep_names: self.sleep_names.clone(),
            setup_names: self.setup_names.clone(),
            string_conversion_names: self.string_conversion_names.clone(),
            expected_exception_names: self.expected_exception_names.clone(),
        }
    }

    pub fn exec_options(&self, jobs: usize) -> ExecOptions {
        ExecOptions {
            jobs,
            timeout_factor: self.timeout_factor,
            timeout_constant_ms: self.timeout_constant_ms,
            baseline_limit: Duration::from_millis(self.baseline_timeout_ms),
        }
    }
}
