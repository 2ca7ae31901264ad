//! Instance generation from a divisor specification: the inverse problem of
//! the module profile. Self-dual blocks come from solving the invariance
//! system for a hermitian Gram matrix of a companion element; hyperbolic
//! blocks are built as split doublings. Every generated instance is
//! round-tripped through the decomposition before being emitted.

use serde_json::{json, Value};

use uconj_core::coefficients::{FieldPair, PairKind};
use uconj_core::endo::{flatten, unflatten};
use uconj_core::hermitian::{HermitianSpace, UnitaryElement};
use uconj_core::matrix::Mat;
use uconj_core::modstruct::{cmp_poly, primary_decomposition};
use uconj_core::polynomials::Poly;
use uconj_core::rng::SplitMix64;
use uconj_core::{Error, Result};

use crate::report::{instance_to_json, Instance};
use crate::{DEFAULT_SEED, SCHEMA};

struct ComponentSpec {
    hyperbolic: bool,
    poly: Poly,
    dual: Poly,
    divisors: Vec<(u32, u32)>,
}

fn parse_spec(k: &FieldPair, doc: &Value) -> Result<(Vec<ComponentSpec>, u64)> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::InvalidInput("divisor spec must be a JSON object".into()))?;
    let seed = obj
        .get("seed")
        .and_then(Value::as_u64)
        .unwrap_or(DEFAULT_SEED);
    let comps = obj
        .get("components")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput("divisor spec missing components".into()))?;
    let mut out = vec![];
    for c in comps {
        let kind = c.get("kind").and_then(Value::as_str).unwrap_or("");
        let hyperbolic = match kind {
            "self_dual" => false,
            "hyperbolic" => true,
            other => {
                return Err(Error::InvalidInput(format!(
                    "component kind must be self_dual or hyperbolic, got {other:?}"
                )))
            }
        };
        let poly = Poly::from_json(
            k,
            c.get("poly")
                .ok_or_else(|| Error::InvalidInput("component missing poly".into()))?,
        )?;
        if !poly.is_monic(k) {
            return Err(Error::InvalidInput("component polynomial must be monic".into()));
        }
        if !poly.is_irreducible(k)? {
            return Err(Error::InvalidInput(format!(
                "component polynomial {} is not irreducible",
                poly.display(k)
            )));
        }
        let dual = poly.conj_dual(k)?;
        if hyperbolic && dual.equal(k, &poly) {
            return Err(Error::InvalidInput(
                "hyperbolic component needs a non-self-dual polynomial".into(),
            ));
        }
        if !hyperbolic && !dual.equal(k, &poly) {
            return Err(Error::InvalidInput(
                "self-dual component needs a self conjugate-dual polynomial".into(),
            ));
        }
        let divisors = c
            .get("divisors")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput("component missing divisors".into()))?
            .iter()
            .map(|d| {
                let pair = d.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                    Error::InvalidInput("divisor entries are [m, r] pairs".into())
                })?;
                let m = pair[0].as_u64().unwrap_or(0) as u32;
                let r = pair[1].as_u64().unwrap_or(0) as u32;
                if m == 0 || r == 0 {
                    return Err(Error::InvalidInput("divisor entries must be positive".into()));
                }
                Ok((m, r))
            })
            .collect::<Result<Vec<_>>>()?;
        if divisors.windows(2).any(|w| w[0].0 <= w[1].0) {
            return Err(Error::InvalidInput(
                "divisor exponents must be strictly decreasing".into(),
            ));
        }
        out.push(ComponentSpec {
            hyperbolic,
            poly,
            dual,
            divisors,
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("divisor spec has no components".into()));
    }
    Ok((out, seed))
}

/// Companion element of the module `⊕_i (E[T]/p^(m_i))^(r_i)`.
fn module_companion(k: &FieldPair, p: &Poly, divisors: &[(u32, u32)]) -> Mat {
    let mut blocks = vec![];
    for &(m, r) in divisors {
        let pm = p.pow(k, m);
        for _ in 0..r {
            blocks.push(pm.companion(k));
        }
    }
    Mat::block_diag(k, &blocks)
}

/// Find an invertible hermitian `X` with `conj(C)^t X C = X` by a seeded
/// search over the solution space of the two linear constraints.
fn invariant_hermitian_gram(k: &FieldPair, c: &Mat, seed: u64, tries: u64) -> Result<Mat> {
    let n = c.rows;
    let dim = 2 * n * n;
    let mut cols = vec![];
    for b in 0..dim {
        let mut v = vec![k.zero(); dim];
        v[b] = k.one();
        let x = unflatten(k, n, &v);
        let herm = x.conj_transpose(k).sub(k, &x);
        let inv = c.conj_transpose(k).matmul(k, &x).matmul(k, c).sub(k, &x);
        let mut col = flatten(k, &herm);
        col.extend(flatten(k, &inv));
        cols.push(col);
    }
    let sys = Mat::from_fn(2 * dim, dim, |i, j| cols[j][i].clone());
    let kernel = sys.right_kernel(k)?;
    if kernel.rows == 0 {
        return Err(Error::GenerationFailed(
            "no invariant hermitian form exists for this companion element".into(),
        ));
    }
    // deterministic sweep first, then seeded combinations
    for i in 0..kernel.rows {
        let x = unflatten(k, n, &kernel.row(i));
        if x.inverse(k).is_ok() {
            return Ok(x);
        }
    }
    let mut rng = SplitMix64::new(seed);
    for _ in 0..tries {
        let mut v = vec![k.zero(); dim];
        for i in 0..kernel.rows {
            let coeff = k.constant(rng.below(k.q as u64) as u32); // base-field combos keep hermitian symmetry
            for (slot, b) in v.iter_mut().zip(kernel.row(i)) {
                *slot = k.add(slot, &k.mul(&coeff, &b));
            }
        }
        let x = unflatten(k, n, &v);
        if x.inverse(k).is_ok() {
            return Ok(x);
        }
    }
    Err(Error::GenerationFailed(format!(
        "no invertible invariant hermitian form found in {tries} seeded tries; \
         the nearest achievable datum is the hyperbolic doubling of this component"
    )))
}

/// Canonical profile document the generated instance must reproduce.
fn expected_profile(k: &FieldPair, comps: &[ComponentSpec]) -> Value {
    let mut entries: Vec<(bool, Poly, Poly, Vec<(u32, u32)>)> = comps
        .iter()
        .map(|c| {
            let (first, second) = if !c.hyperbolic {
                (c.poly.clone(), c.poly.clone())
            } else if cmp_poly(&c.poly, &c.dual) == std::cmp::Ordering::Less {
                (c.poly.clone(), c.dual.clone())
            } else {
                (c.dual.clone(), c.poly.clone())
            };
            (c.hyperbolic, first, second, c.divisors.clone())
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| cmp_poly(&a.1, &b.1)));
    Value::Array(
        entries
            .into_iter()
            .map(|(hyp, poly, dual, divisors)| {
                json!({
                    "kind": if hyp { "hyperbolic" } else { "self_dual" },
                    "poly": poly.to_json(k),
                    "dual_poly": dual.to_json(k),
                    "divisors": divisors.iter().map(|&(m, r)| vec![m, r]).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

/// Generate an instance realizing the divisor spec, verified by round-trip
/// through the primary decomposition. Returns the instance document and the
/// canonical profile it reproduces.
pub fn generate(doc: &Value) -> Result<(Value, Value)> {
    let field_desc = doc
        .get("field")
        .ok_or_else(|| Error::InvalidInput("divisor spec missing field".into()))?;
    let k = FieldPair::from_descriptor(field_desc)?;
    if k.kind != PairKind::Finite {
        return Err(Error::UnsupportedField(
            "generation works over finite pairs; lift instances for the local pair".into(),
        ));
    }
    let (comps, seed) = parse_spec(&k, doc)?;

    let mut gram_blocks = vec![];
    let mut gamma_blocks = vec![];
    let mut factors: Vec<Poly> = vec![];
    for (i, c) in comps.iter().enumerate() {
        if c.hyperbolic {
            let a = module_companion(&k, &c.poly, &c.divisors);
            let b = a.conj_transpose(&k).inverse(&k).map_err(|_| {
                Error::GenerationFailed(format!("component {i} has singular companion"))
            })?;
            let d = a.rows;
            let gram = Mat::from_fn(2 * d, 2 * d, |r, cc| {
                if r + d == cc || cc + d == r {
                    k.one()
                } else {
                    k.zero()
                }
            });
            gram_blocks.push(gram);
            gamma_blocks.push(Mat::block_diag(&k, &[a, b]));
            factors.push(c.poly.clone());
            factors.push(c.dual.clone());
        } else {
            let cmat = module_companion(&k, &c.poly, &c.divisors);
            let x = invariant_hermitian_gram(&k, &cmat, seed.wrapping_add(i as u64), 512)?;
            gram_blocks.push(x);
            gamma_blocks.push(cmat);
            factors.push(c.poly.clone());
        }
    }
    let gram = Mat::block_diag(&k, &gram_blocks);
    let gamma_mat = Mat::block_diag(&k, &gamma_blocks);

    let space = HermitianSpace::new(&k, gram).map_err(|e| {
        Error::GenerationFailed(format!("assembled gram matrix is invalid: {e}"))
    })?;
    let gamma = UnitaryElement::new(&k, &space, gamma_mat).map_err(|e| {
        Error::GenerationFailed(format!("assembled element is not unitary: {e}"))
    })?;

    // round-trip verification before emission
    let profile = primary_decomposition(&k, &space, &gamma, None)?;
    let got = profile.to_json(&k);
    let want = expected_profile(&k, &comps);
    if got != want {
        return Err(Error::GenerationFailed(format!(
            "round-trip mismatch: requested {want}, decomposition gives {got}"
        )));
    }

    let inst = Instance {
        field: k,
        space,
        gamma,
        factors: Some(factors),
        seed,
    };
    Ok((instance_to_json(&inst), want))
}

/// Lift a finite-pair instance to the truncated local pair at the given
/// precision (entries become constant series; the declared factor list is
/// lifted along).
pub fn lift_to_local(doc: &Value, precision: i64) -> Result<Value> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::InvalidInput("instance must be a JSON object".into()))?;
    let kf = FieldPair::from_descriptor(
        obj.get("field")
            .ok_or_else(|| Error::InvalidInput("instance missing field".into()))?,
    )?;
    if kf.kind != PairKind::Finite {
        return Err(Error::InvalidInput("can only lift finite-pair instances".into()));
    }
    let kl = FieldPair::truncated_local(kf.q, precision)?;
    let lift_mat = |v: &Value| -> Result<Value> {
        let m = Mat::from_json(&kf, v)?;
        let lifted = uconj_core::explorer::constant_lift(&kf, &kl, &m);
        Ok(lifted.to_json(&kl))
    };
    let mut out = json!({
        "schema": SCHEMA,
        "field": kl.descriptor(),
        "gram": lift_mat(obj.get("gram").ok_or_else(|| Error::InvalidInput("missing gram".into()))?)?,
        "gamma": lift_mat(obj.get("gamma").ok_or_else(|| Error::InvalidInput("missing gamma".into()))?)?,
    });
    if let Some(seed) = obj.get("seed") {
        out["seed"] = seed.clone();
    }
    if let Some(factors) = obj.get("factors").and_then(Value::as_array) {
        let mut lifted = vec![];
        for f in factors {
            let p = Poly::from_json(&kf, f)?;
            let coeffs: Vec<_> = p
                .coeffs
                .iter()
                .map(|c| match c {
                    uconj_core::coefficients::Scalar::Fin(x) => kl.constant(*x),
                    _ => unreachable!(),
                })
                .collect();
            lifted.push(Poly::new(&kl, coeffs).to_json(&kl));
        }
        out["factors"] = Value::Array(lifted);
    }
    Ok(out)
}
