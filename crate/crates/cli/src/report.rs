//! Instance documents and the full analysis report.

use serde_json::{json, Value};

use uconj_core::centralizer::{centralizer_report, delta_characters, lie_algebra};
use uconj_core::coefficients::{FieldPair, PairKind};
use uconj_core::flagpar::{build_flag, choose_splitting};
use uconj_core::hermitian::{HermitianSpace, UnitaryElement};
use uconj_core::matrix::Mat;
use uconj_core::modstruct::{duality_orthogonality_check, is_closed, primary_decomposition};
use uconj_core::polynomials::Poly;
use uconj_core::reduction::{build_s_and_reduce, Piece};
use uconj_core::{Error, Result};

use crate::{DEFAULT_SEED, SCHEMA, TOOL_VERSION};

pub struct Instance {
    pub field: FieldPair,
    pub space: HermitianSpace,
    pub gamma: UnitaryElement,
    pub factors: Option<Vec<Poly>>,
    pub seed: u64,
}

pub fn parse_instance(doc: &Value) -> Result<Instance> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::InvalidInput("instance must be a JSON object".into()))?;
    if obj.get("schema").and_then(Value::as_str) != Some(SCHEMA) {
        return Err(Error::InvalidInput(format!(
            "instance schema must be {SCHEMA:?}"
        )));
    }
    let field = FieldPair::from_descriptor(
        obj.get("field")
            .ok_or_else(|| Error::InvalidInput("instance missing field descriptor".into()))?,
    )?;
    let gram = Mat::from_json(
        &field,
        obj.get("gram")
            .ok_or_else(|| Error::InvalidInput("instance missing gram matrix".into()))?,
    )?;
    let space = HermitianSpace::new(&field, gram)?;
    let gmat = Mat::from_json(
        &field,
        obj.get("gamma")
            .ok_or_else(|| Error::InvalidInput("instance missing gamma".into()))?,
    )?;
    let gamma = UnitaryElement::new(&field, &space, gmat)?;
    let factors = match obj.get("factors") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let arr = v
                .as_array()
                .ok_or_else(|| Error::InvalidInput("factors must be an array".into()))?;
            Some(
                arr.iter()
                    .map(|p| Poly::from_json(&field, p))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
    };
    let seed = obj
        .get("seed")
        .and_then(Value::as_u64)
        .unwrap_or(DEFAULT_SEED);
    Ok(Instance {
        field,
        space,
        gamma,
        factors,
        seed,
    })
}

pub fn instance_to_json(inst: &Instance) -> Value {
    let k = &inst.field;
    let mut doc = json!({
        "schema": SCHEMA,
        "field": k.descriptor(),
        "gram": inst.space.gram.to_json(k),
        "gamma": inst.gamma.mat.to_json(k),
        "seed": inst.seed,
    });
    if let Some(factors) = &inst.factors {
        doc["factors"] = Value::Array(factors.iter().map(|p| p.to_json(k)).collect());
    }
    doc
}

fn analyze_unitary_piece(
    k: &FieldPair,
    space: &HermitianSpace,
    gamma: &Mat,
    poly: &Poly,
    seed: u64,
) -> Result<Value> {
    let flag = build_flag(k, space, gamma, poly)?;
    let fs = choose_splitting(k, space, gamma, &flag, seed)?;
    let lie = lie_algebra(k, space, &fs)?;
    let rep = centralizer_report(k, space, &fs, &lie, gamma)?;
    let mut out = json!({
        "kind": "unitary",
        "poly": poly.to_json(k),
        "divisors": flag.divisors.iter().map(|&(m, r)| vec![m, r]).collect::<Vec<_>>(),
        "weights": fs.weights,
        "flag_splitting": fs.to_json(k),
        "centralizer": rep.to_json(),
        "consistent": rep.consistent(),
    });
    if k.kind == PairKind::TruncatedLocal {
        // record the delta characters evaluated at gamma itself
        let dv = delta_characters(k, space, &fs, &lie, &rep, gamma)?;
        out["delta_at_gamma"] = json!({
            "defect_quotient_pow_q": dv.defect_quotient,
            "defect_kernel_pow_q": dv.defect_kernel,
            "parabolic_modulus_pow_q": dv.parabolic_modulus,
        });
    }
    Ok(out)
}

/// Full analysis: module profile, duality report, closedness, reduction to
/// primary pieces, and per-piece flag/centralizer data.
pub fn analyze(inst: &Instance) -> Result<Value> {
    let start = std::time::Instant::now();
    let k = &inst.field;
    let factors = inst.factors.as_deref();
    let profile = primary_decomposition(k, &inst.space, &inst.gamma, factors)?;
    let duality = duality_orthogonality_check(k, &inst.space, &profile)?;
    let closed = is_closed(k, &inst.space, &inst.gamma, factors)?;
    let reduction = build_s_and_reduce(k, &inst.space, &inst.gamma, &profile)?;

    let mut pieces = vec![];
    let mut consistent = duality.all_pass();
    for piece in &reduction.pieces {
        match piece {
            Piece::Unitary {
                space: psp,
                gamma,
                poly,
                ..
            } => {
                let rep = analyze_unitary_piece(k, psp, gamma, poly, inst.seed)?;
                consistent &= rep["consistent"].as_bool().unwrap_or(false);
                pieces.push(rep);
            }
            Piece::Linear { gamma, poly, .. } => {
                pieces.push(json!({
                    "kind": "linear",
                    "poly": poly.to_json(k),
                    "dim": gamma.rows,
                }));
            }
        }
    }

    Ok(json!({
        "schema": SCHEMA,
        "tool_version": TOOL_VERSION,
        "seed": inst.seed,
        "field": k.descriptor(),
        "profile": profile.to_json(k),
        "duality": duality.to_json(),
        "closed": closed,
        "reduction": reduction.to_json(k),
        "pieces": pieces,
        "consistent": consistent,
        "timing_ms": start.elapsed().as_millis() as u64,
    }))
}

/// Strip volatile fields so reports can be compared for determinism.
pub fn strip_timing(mut report: Value) -> Value {
    if let Some(obj) = report.as_object_mut() {
        obj.remove("timing_ms");
    }
    report
}
