//! Runner protocol messages.
//!
//! A runner is an executable invoked with the workspace as its working
//! directory:
//!
//! - `runner collect` prints one `{"type":"test","id":"<method id>"}` line
//!   per test.
//! - `runner baseline --test <id>` prints one result line carrying a
//!   `covered` map of workspace-relative path to executed line numbers.
//! - `runner run --test <id>` prints one result line without `covered`.
//!
//! Exit status 0 means the protocol exchange succeeded whatever the test
//! outcome; anything else is a protocol error.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::matrix::Outcome;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Test { id: String },
    Result(ResultMessage),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultMessage {
    pub id: String,
    pub outcome: Outcome,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covered: Option<BTreeMap<String, BTreeSet<u32>>>,
}

/// Parses runner stdout: every non-blank line must be one message.
pub fn parse_messages(stdout: &str) -> Result<Vec<Message>, String> {
    stdout
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str::<Message>(l).map_err(|e| format!("line {}: {e}: {l:?}", n + 1)))
        .collect()
}

/// Extracts the single result for `id`. Runners may not report TIMEOUT;
/// only the orchestrator decides that.
pub fn single_result(stdout: &str, id: &str, want_coverage: bool) -> Result<ResultMessage, String> {
    let mut results = parse_messages(stdout)?.into_iter().filter_map(|m| match m {
        Message::Result(r) => Some(r),
        Message::Test { .. } => None,
    });
    let r = results.next().ok_or_else(|| "no result message".to_string())?;
    if results.next().is_some() {
        return Err("more than one result message".into());
    }
    if r.id != id {
        return Err(format!("result for `{}` but `{id}` was requested", r.id));
    }
    if r.outcome == Outcome::Timeout {
        return Err("runner reported TIMEOUT; time-outs are decided by the orchestrator".into());
    }
    if want_coverage && r.covered.is_none() {
        return Err("baseline result lacks `covered`".into());
    }
    Ok(r)
}
