//! Mechanical check that every operation of the engine carries a design
//! anchor and that every shipped corpus constant carries a provenance tag.
//!
//! The registry lives in a single `anchors.json` at the repository root:
//! one entry per operation id binding it to an anchor string (a stable
//! pointer into the project design notes) and a provenance class, plus one
//! entry per corpus file whose records must each be tagged. The operation
//! inventory below is the source of truth; the check fails on missing,
//! duplicated, or unknown ids, so adding an operation without registering
//! it breaks the suite.

use std::path::Path;

use serde_json::Value;

use crate::{Error, Result};

/// Every operation exposed by the engine, as `module.operation`.
pub const OPERATIONS: &[&str] = &[
    "coefficients.conjugate",
    "coefficients.norm_trace",
    "coefficients.valuation_and_absnorm",
    "polynomials.conj_dual",
    "polynomials.factor",
    "polynomials.charpoly_and_minpoly",
    "hermitian.adjoint",
    "hermitian.is_unitary",
    "hermitian.perp",
    "hermitian.restrict_form",
    "hermitian.standard_forms",
    "modstruct.primary_decomposition",
    "modstruct.duality_orthogonality_check",
    "modstruct.is_closed",
    "reduction.choose_scalars",
    "reduction.build_s_and_reduce",
    "flagpar.build_flag",
    "flagpar.choose_splitting",
    "flagpar.graded_dims",
    "flagpar.parabolic_membership",
    "centralizer.lie_algebra",
    "centralizer.centralizer_dims",
    "centralizer.n_bracket_and_coker",
    "centralizer.v_gamma_membership",
    "centralizer.delta_characters",
    "explorer.enumerate_unitary",
    "explorer.centralizer_orbit_oracle",
    "explorer.lattice_stabilizer_layers",
    "explorer.good_position_check",
    "explorer.conjugate_census",
    "cli.analyze",
    "cli.generate",
    "cli.verify",
    "docsmap.check_anchors",
];

pub const PROVENANCE_CLASSES: &[&str] =
    &["external-method", "derived-check", "construction", "measured"];

#[derive(Clone, Debug)]
pub struct AnchorReport {
    pub failures: Vec<String>,
    pub operations_checked: usize,
    pub corpus_files_checked: usize,
}

impl AnchorReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Validate `anchors.json` under `root` against the operation inventory and
/// the provenance discipline of the corpus files it lists.
pub fn check_anchors(root: &Path) -> Result<AnchorReport> {
    let path = root.join("anchors.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("anchors.json is not valid JSON: {e}")))?;

    let mut failures = vec![];
    let ops = doc
        .get("operations")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput("anchors.json missing operations array".into()))?;

    let mut seen: Vec<&str> = vec![];
    for entry in ops {
        let id = entry.get("op").and_then(Value::as_str).unwrap_or("");
        if id.is_empty() {
            failures.push("operation entry without an id".into());
            continue;
        }
        if seen.contains(&id) {
            failures.push(format!("operation {id} registered twice"));
        }
        seen.push(id);
        if !OPERATIONS.contains(&id) {
            failures.push(format!("unknown operation id {id}"));
        }
        let anchor = entry.get("anchor").and_then(Value::as_str).unwrap_or("");
        if anchor.is_empty() {
            failures.push(format!("operation {id} lacks an anchor"));
        }
        let prov = entry.get("provenance").and_then(Value::as_str).unwrap_or("");
        if !PROVENANCE_CLASSES.contains(&prov) {
            failures.push(format!("operation {id} has invalid provenance {prov:?}"));
        }
    }
    for id in OPERATIONS {
        if !seen.contains(id) {
            failures.push(format!("operation {id} is not registered"));
        }
    }

    // corpus files: every record must carry a provenance tag
    let mut corpus_files = 0usize;
    if let Some(corpus) = doc.get("corpus").and_then(Value::as_array) {
        for entry in corpus {
            let rel = entry.get("path").and_then(Value::as_str).unwrap_or("");
            if rel.is_empty() {
                failures.push("corpus entry without a path".into());
                continue;
            }
            corpus_files += 1;
            let fpath = root.join(rel);
            let Ok(text) = std::fs::read_to_string(&fpath) else {
                failures.push(format!("corpus file {rel} is missing"));
                continue;
            };
            let Ok(val) = serde_json::from_str::<Value>(&text) else {
                failures.push(format!("corpus file {rel} is not valid JSON"));
                continue;
            };
            let records = match &val {
                Value::Array(a) => a.clone(),
                Value::Object(o) => o
                    .get("instances")
                    .and_then(Value::as_array)
                    .cloned()
                    .unwrap_or_else(|| vec![val.clone()]),
                _ => vec![val.clone()],
            };
            for (i, rec) in records.iter().enumerate() {
                let prov = rec.get("provenance").and_then(Value::as_str).unwrap_or("");
                if !PROVENANCE_CLASSES.contains(&prov) {
                    failures.push(format!("corpus record {rel}[{i}] lacks a provenance tag"));
                }
            }
        }
    }

    Ok(AnchorReport {
        failures,
        operations_checked: seen.len(),
        corpus_files_checked: corpus_files,
    })
}
