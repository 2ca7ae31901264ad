//! Pipeline behind the `uconj` command line: instance documents, the
//! analyze report, the divisor-spec generator, and the verification suites.
//!
//! Exit-code contract: 0 success, 2 input/parse errors, 3 budget or
//! precision limits, 4 violated theorem-backed invariants (a bug by
//! definition). `analyze` emits a reproducer on invariant violations.

pub mod generate;
pub mod report;
pub mod verify;

use serde_json::Value;
use uconj_core::{Error, Result};

pub const SCHEMA: &str = "uconj/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 0x5eed_0001;
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Parse a field descriptor string: `finite:q` or `local:q:precision`.
pub fn parse_field_flag(s: &str) -> Result<Value> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["finite", q] => {
            let q: u64 = q
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad field cardinality in {s:?}")))?;
            Ok(serde_json::json!({"kind": "finite", "q": q}))
        }
        ["local", q, n] => {
            let q: u64 = q
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad field cardinality in {s:?}")))?;
            let n: i64 = n
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad precision in {s:?}")))?;
            Ok(serde_json::json!({"kind": "truncated_local", "q": q, "precision": n}))
        }
        _ => Err(Error::InvalidInput(format!(
            "field descriptor {s:?} is not finite:q or local:q:precision"
        ))),
    }
}

/// Read a JSON document, reporting parse failures with line and column.
pub fn read_json(path: &str) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::InvalidInput(format!(
            "{path}: parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

pub fn write_output(out: Option<&str>, doc: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("serializable");
    match out {
        None => {
            println!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidInput(format!("cannot write {path}: {e}"))),
    }
}
