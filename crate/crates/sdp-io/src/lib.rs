//! Diagram documents in JSON and machine-readable run reports.
//!
//! A document has a `format_version` (currently 1), a `root` term name and
//! a `terms` table mapping names to expressions.  An expression is one of
//!
//! * a string, referring to another term,
//! * `{"seq": [expr, ...]}` or `{"sum": [expr, ...]}`,
//! * `{"trace": {"term": expr, "k": 1}}`,
//! * `{"omdp": {...}}`, an explicit open MDP,
//! * `{"generator": {"room" | "dice" | "chain" | "unigrid" | "bigrid": {...}}}`.
//!
//! An explicit open MDP lists its `states`, the four end lists `in_r`,
//! `in_l`, `out_r`, `out_l` (state names, in order) and `actions`, an
//! object from state name to a list of `{"label": .., "to": {state: p}}`.
//! Probabilities are strings such as `"0.27"`, `"27/100"` or `"1e-3"` and
//! are read exactly; plain JSON numbers are accepted through their
//! shortest decimal form.  States without actions are terminal.

mod build;
mod doc;
mod report;

pub use build::{build, from_diagram};
pub use doc::{
    parse, parse_prob, print, ActionDoc, DiagramDocument, Expr, Generator, OmdpDoc,
    FORMAT_VERSION,
};
pub use report::{emit_report, EntranceReport, Report};

use sdp_benchgen::BenchError;
use sdp_compose::ComposeError;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("syntax error at line {line}, column {column}: {msg}")]
    Syntax {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("{path}: unknown reference {name:?}")]
    UnknownReference { path: String, name: String },
    #[error("{path}: cyclic reference through {name:?}")]
    Cycle { path: String, name: String },
    #[error("{path}: probability {value:?} is not in [0, 1]")]
    Probability { path: String, value: String },
    #[error("{path}: arity mismatch: {msg}")]
    Arity { path: String, msg: String },
    #[error("{path}: {source}")]
    Compose {
        path: String,
        #[source]
        source: ComposeError,
    },
    #[error("{path}: {source}")]
    Bench {
        path: String,
        #[source]
        source: BenchError,
    },
}

impl IoError {
    pub(crate) fn schema(path: &str, msg: impl Into<String>) -> Self {
        IoError::Schema {
            path: path.to_string(),
            msg: msg.into(),
        }
    }
}
