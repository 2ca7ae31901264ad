//! In-process tests of the divisor-spec generator.

use serde_json::json;

use uconj_cli::generate::{generate, lift_to_local};
use uconj_cli::report::{analyze, parse_instance};
use uconj_core::coefficients::FieldPair;
use uconj_core::polynomials::Poly;

#[test]
fn hyperbolic_spec_gives_split_doubling() {
    // over F_9 the generator g of the extension has norm != 1, so T - g is
    // not self-dual and pairs hyperbolically with T - conj(g)^(-1)
    let k = FieldPair::finite(3).unwrap();
    let g = k.constant(k.generator);
    let poly = Poly::linear(&k, &g);
    let spec = json!({
        "field": {"kind": "finite", "q": 3},
        "seed": 1,
        "components": [
            {"kind": "hyperbolic", "poly": poly.to_json(&k), "divisors": [[1, 1]]}
        ],
    });
    let (instance, profile) = generate(&spec).unwrap();
    let inst = parse_instance(&instance).unwrap();
    assert_eq!(inst.space.n, 2);
    let report = analyze(&inst).unwrap();
    assert_eq!(report["profile"], profile);
    assert_eq!(report["profile"][0]["kind"], "hyperbolic");
    assert_eq!(report["consistent"], true);
    // the reduced piece is the general-linear restriction to one half
    assert_eq!(report["pieces"][0]["kind"], "linear");
    assert_eq!(report["pieces"][0]["dim"], 1);
}

#[test]
fn mixed_spec_round_trips() {
    let k = FieldPair::finite(3).unwrap();
    let g = k.constant(k.generator);
    let hyp = Poly::linear(&k, &g);
    let sd = Poly::linear(&k, &k.one());
    let spec = json!({
        "field": {"kind": "finite", "q": 3},
        "seed": 2,
        "components": [
            {"kind": "hyperbolic", "poly": hyp.to_json(&k), "divisors": [[1, 1]]},
            {"kind": "self_dual", "poly": sd.to_json(&k), "divisors": [[2, 1]]}
        ],
    });
    let (instance, profile) = generate(&spec).unwrap();
    let inst = parse_instance(&instance).unwrap();
    assert_eq!(inst.space.n, 4);
    let report = analyze(&inst).unwrap();
    assert_eq!(report["profile"], profile);
    // canonical component order: self-dual classes first
    assert_eq!(report["profile"][0]["kind"], "self_dual");
    assert_eq!(report["profile"][1]["kind"], "hyperbolic");
    assert_eq!(report["consistent"], true);
}

#[test]
fn self_dual_spec_with_non_self_dual_poly_is_rejected() {
    let k = FieldPair::finite(3).unwrap();
    let g = k.constant(k.generator);
    let poly = Poly::linear(&k, &g);
    let spec = json!({
        "field": {"kind": "finite", "q": 3},
        "components": [
            {"kind": "self_dual", "poly": poly.to_json(&k), "divisors": [[1, 1]]}
        ],
    });
    assert!(generate(&spec).is_err());
}

#[test]
fn local_field_spec_is_rejected_with_lift_hint() {
    let spec = json!({
        "field": {"kind": "truncated_local", "q": 2, "precision": 4},
        "components": [],
    });
    let err = generate(&spec).unwrap_err();
    assert!(err.to_string().contains("lift"));
}

#[test]
fn lifted_instance_declares_its_factors() {
    let k = FieldPair::finite(2).unwrap();
    let spec = json!({
        "field": {"kind": "finite", "q": 2},
        "seed": 4,
        "components": [
            {"kind": "self_dual", "poly": Poly::linear(&k, &k.one()).to_json(&k), "divisors": [[2, 1]]}
        ],
    });
    let (instance, _) = generate(&spec).unwrap();
    let lifted = lift_to_local(&instance, 4).unwrap();
    assert_eq!(lifted["field"]["kind"], "truncated_local");
    assert!(lifted["factors"].as_array().map(|a| !a.is_empty()).unwrap_or(false));
    let inst = parse_instance(&lifted).unwrap();
    let report = analyze(&inst).unwrap();
    assert_eq!(report["consistent"], true);
}
