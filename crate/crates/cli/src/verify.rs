//! Named verification suites over seeded corpora, shared by the `verify`
//! subcommand and the acceptance tests.

use std::path::Path;

use serde_json::{json, Value};

use uconj_core::centralizer::{
    centralizer_report, delta_characters, lie_algebra, v_gamma_membership,
};
use uconj_core::coefficients::{FieldPair, Scalar};
use uconj_core::explorer::{
    centralizer_orbit_oracle, conjugate_census, constant_lift, enumerate_unitary,
    good_position_check, lattice_stabilizer_layers, residue_pair, unitary_group_order,
};
use uconj_core::flagpar::{build_flag, choose_splitting, membership_group, FlagSplitting};
use uconj_core::hermitian::{HermitianSpace, UnitaryElement};
use uconj_core::matrix::Mat;
use uconj_core::modstruct::primary_decomposition;
use uconj_core::polynomials::Poly;
use uconj_core::reduction::build_s_and_reduce;
use uconj_core::rng::SplitMix64;
use uconj_core::{docsmap, Error, Result};

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn ok(name: &str, detail: String) -> CheckOutcome {
        CheckOutcome {
            name: name.into(),
            pass: true,
            detail,
        }
    }

    fn fail(name: &str, detail: String) -> CheckOutcome {
        CheckOutcome {
            name: name.into(),
            pass: false,
            detail,
        }
    }
}

pub fn outcomes_to_json(outcomes: &[CheckOutcome]) -> Value {
    json!({
        "schema": "uconj-verify/1",
        "checks": outcomes.iter().map(|o| json!({
            "name": o.name,
            "pass": o.pass,
            "detail": o.detail,
        })).collect::<Vec<_>>(),
        "pass": outcomes.iter().all(|o| o.pass),
    })
}

// ---- shared fixtures ----

pub fn mat(k: &FieldPair, entries: &[&[u32]]) -> Mat {
    Mat::from_fn(entries.len(), entries[0].len(), |i, j| {
        k.constant(entries[i][j])
    })
}

/// Regular unipotent on a split plane: `[[1, x], [0, 1]]` with `x` the
/// smallest nonzero trace-zero element.
pub fn jordan_instance(k: &FieldPair) -> (HermitianSpace, Mat) {
    let space = HermitianSpace::split(k, 2);
    let x = k.first_trace_zero();
    let g = Mat::from_rows(vec![
        vec![k.one(), k.constant(x)],
        vec![k.zero(), k.one()],
    ]);
    (space, g)
}

/// The rank-3 instance with module `(T-1)^2 ⊕ (T-1)`.
pub fn rank3_instance(k: &FieldPair) -> (HermitianSpace, Mat) {
    let gram = mat(k, &[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]);
    let space = HermitianSpace::new(k, gram).unwrap();
    let x = k.first_trace_zero();
    let g = Mat::from_rows(vec![
        vec![k.one(), k.constant(x), k.zero()],
        vec![k.zero(), k.one(), k.zero()],
        vec![k.zero(), k.zero(), k.one()],
    ]);
    (space, g)
}

/// Composite (non-primary) n = 3 instance: a unipotent block plus a
/// norm-one scalar line with a different primary polynomial.
pub fn composite_instance(k: &FieldPair) -> (HermitianSpace, Mat) {
    let (space3, mut g) = rank3_instance(k);
    // replace the fixed line by a nontrivial norm-one scalar
    let z = k.norm_one_elements()[1];
    g.set(2, 2, k.constant(z));
    (space3, g)
}

pub fn flag_data(
    k: &FieldPair,
    space: &HermitianSpace,
    gamma: &Mat,
    root: &Scalar,
) -> Result<FlagSplitting> {
    let p = Poly::linear(k, root);
    let flag = build_flag(k, space, gamma, &p)?;
    choose_splitting(k, space, gamma, &flag, 0)
}

// ---- individual checks ----

fn check_norm_one_cardinalities() -> CheckOutcome {
    let name = "coefficients: norm-one circle has q+1 elements (q <= 5)";
    for q in [2u32, 3, 4, 5] {
        let k = match FieldPair::finite(q) {
            Ok(k) => k,
            Err(e) => return CheckOutcome::fail(name, e.to_string()),
        };
        let brute = k
            .elements()
            .filter(|&x| k.idx_mul(x, k.idx_conj(x)) == 1)
            .count();
        if brute != (q + 1) as usize || k.norm_one_elements().len() != brute {
            return CheckOutcome::fail(name, format!("q = {q}: got {brute}"));
        }
    }
    CheckOutcome::ok(name, "q in {2,3,4,5} exhaustively".into())
}

fn check_conj_dual_laws(seed: u64) -> CheckOutcome {
    let name = "polynomials: conjugate-dual involution and multiplicativity";
    for q in [2u32, 3] {
        let k = FieldPair::finite(q).unwrap();
        let mut rng = SplitMix64::new(seed ^ q as u64);
        for _ in 0..50 {
            let d = 1 + rng.below(3) as usize;
            let mut lower: Vec<u32> = (0..d).map(|_| rng.below(k.qq as u64) as u32).collect();
            if lower[0] == 0 {
                lower[0] = 1;
            }
            let f = Poly::monic_from_indices(&k, &lower);
            let fd = f.conj_dual(&k).unwrap();
            if !fd.conj_dual(&k).unwrap().equal(&k, &f) {
                return CheckOutcome::fail(name, format!("involution fails on {}", f.display(&k)));
            }
            let mut lower2: Vec<u32> = (0..d).map(|_| rng.below(k.qq as u64) as u32).collect();
            if lower2[0] == 0 {
                lower2[0] = 1;
            }
            let g = Poly::monic_from_indices(&k, &lower2);
            let lhs = f.mul(&k, &g).conj_dual(&k).unwrap();
            let rhs = f.conj_dual(&k).unwrap().mul(&k, &g.conj_dual(&k).unwrap());
            if !lhs.equal(&k, &rhs) {
                return CheckOutcome::fail(name, "multiplicativity fails".into());
            }
        }
    }
    CheckOutcome::ok(name, "100 random monic pairs over q in {2,3}".into())
}

fn check_factor_roundtrip(seed: u64) -> CheckOutcome {
    let name = "polynomials: factorization multiplies back with irreducible factors";
    for q in [2u32, 3] {
        let k = FieldPair::finite(q).unwrap();
        let mut rng = SplitMix64::new(seed ^ (q as u64) << 8);
        for _ in 0..25 {
            let d = 1 + rng.below(4) as usize;
            let lower: Vec<u32> = (0..d).map(|_| rng.below(k.qq as u64) as u32).collect();
            let f = Poly::monic_from_indices(&k, &lower);
            let factors = match f.factor(&k) {
                Ok(fs) => fs,
                Err(e) => return CheckOutcome::fail(name, e.to_string()),
            };
            let product = factors.iter().fold(Poly::one(&k), |acc, (p, m)| {
                acc.mul(&k, &p.pow(&k, *m as u32))
            });
            if !product.equal(&k, &f) {
                return CheckOutcome::fail(name, format!("multiply-back fails on {}", f.display(&k)));
            }
            for (p, _) in &factors {
                if !p.is_irreducible(&k).unwrap_or(false) {
                    return CheckOutcome::fail(name, "claimed factor is reducible".into());
                }
            }
        }
    }
    CheckOutcome::ok(name, "50 random monics over q in {2,3}".into())
}

fn check_unitary_group_oracle(budget: u64) -> CheckOutcome {
    let name = "explorer: U2(F4/F2) cardinality and orbit-stabilizer identity";
    let k = FieldPair::finite(2).unwrap();
    let space = HermitianSpace::split(&k, 2);
    let e = match enumerate_unitary(&k, &space, budget) {
        Ok(e) => e,
        Err(err) => return CheckOutcome::fail(name, err.to_string()),
    };
    if e.cardinality() != 18 {
        return CheckOutcome::fail(name, format!("cardinality {}", e.cardinality()));
    }
    let (_, jordan) = jordan_instance(&k);
    for gamma in [Mat::identity(&k, 2), jordan] {
        match centralizer_orbit_oracle(&k, &e, &gamma) {
            Ok(rep) if rep.orbit_stabilizer_consistent => {}
            Ok(_) => return CheckOutcome::fail(name, "orbit-stabilizer identity fails".into()),
            Err(err) => return CheckOutcome::fail(name, err.to_string()),
        }
    }
    CheckOutcome::ok(name, "18 elements, identities hold".into())
}

fn check_centralizer_in_parabolic(budget: u64, q: u32, dim: usize) -> CheckOutcome {
    let name = "flagpar: every enumerated centralizer element stabilizes the flag";
    let k = FieldPair::finite(q).unwrap();
    let (space, gamma) = if dim == 2 {
        jordan_instance(&k)
    } else {
        rank3_instance(&k)
    };
    let fs = match flag_data(&k, &space, &gamma, &k.one()) {
        Ok(fs) => fs,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let e = match enumerate_unitary(&k, &space, budget) {
        Ok(e) => e,
        Err(err) => return CheckOutcome::fail(name, err.to_string()),
    };
    let oracle = match centralizer_orbit_oracle(&k, &e, &gamma) {
        Ok(o) => o,
        Err(err) => return CheckOutcome::fail(name, err.to_string()),
    };
    for c in &oracle.centralizer {
        match membership_group(&k, &space, &fs, c) {
            Ok(m) if m.in_p => {}
            Ok(_) => {
                return CheckOutcome::fail(
                    name,
                    format!("centralizer element escapes P at q={q}, n={dim}"),
                )
            }
            Err(err) => return CheckOutcome::fail(name, err.to_string()),
        }
    }
    CheckOutcome::ok(
        name,
        format!(
            "q={q}, n={dim}: {} centralizer elements all in P",
            oracle.centralizer.len()
        ),
    )
}

fn check_orbit_in_closed_set(budget: u64, q: u32, dim: usize) -> CheckOutcome {
    let name = "centralizer: every P-conjugate of gamma lies in the closed set";
    let k = FieldPair::finite(q).unwrap();
    let (space, gamma) = if dim == 2 {
        jordan_instance(&k)
    } else {
        rank3_instance(&k)
    };
    let fs = match flag_data(&k, &space, &gamma, &k.one()) {
        Ok(fs) => fs,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let lie = match lie_algebra(&k, &space, &fs) {
        Ok(l) => l,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let rep = match centralizer_report(&k, &space, &fs, &lie, &gamma) {
        Ok(r) => r,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let e = match enumerate_unitary(&k, &space, budget) {
        Ok(e) => e,
        Err(err) => return CheckOutcome::fail(name, err.to_string()),
    };
    let mut conjugates = 0usize;
    for g in &e.elements {
        let m = membership_group(&k, &space, &fs, g).unwrap();
        if !m.in_p {
            continue;
        }
        let conj = g.inverse(&k).unwrap().matmul(&k, &gamma).matmul(&k, g);
        match v_gamma_membership(&k, &space, &fs, &rep, &conj, budget) {
            Ok(v) if v.in_v => conjugates += 1,
            Ok(_) => {
                return CheckOutcome::fail(name, format!("a P-conjugate fails membership (q={q}, n={dim})"))
            }
            Err(err) => return CheckOutcome::fail(name, err.to_string()),
        }
    }
    CheckOutcome::ok(name, format!("q={q}, n={dim}: {conjugates} P-conjugates verified"))
}

fn check_reduction_center(budget: u64) -> CheckOutcome {
    let name = "reduction: s is unitary, commutes with gamma and its whole centralizer";
    let k = FieldPair::finite(2).unwrap();
    let (space, gamma_mat) = composite_instance(&k);
    let gamma = match UnitaryElement::new(&k, &space, gamma_mat) {
        Ok(g) => g,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let profile = match primary_decomposition(&k, &space, &gamma, None) {
        Ok(p) => p,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    if profile.components.len() < 2 {
        return CheckOutcome::fail(name, "composite fixture failed to be composite".into());
    }
    let red = match build_s_and_reduce(&k, &space, &gamma, &profile) {
        Ok(r) => r,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let sadj = space.adjoint(&k, &red.s);
    let sinv = red.s.inverse(&k).unwrap();
    if !sadj.equal(&k, &sinv) {
        return CheckOutcome::fail(name, "s* != s^(-1)".into());
    }
    let e = match enumerate_unitary(&k, &space, budget) {
        Ok(e) => e,
        Err(err) => return CheckOutcome::fail(name, err.to_string()),
    };
    let oracle = centralizer_orbit_oracle(&k, &e, &gamma.mat).unwrap();
    for c in &oracle.centralizer {
        if !c.matmul(&k, &red.s).equal(&k, &red.s.matmul(&k, c)) {
            return CheckOutcome::fail(name, "s fails to commute with a centralizer element".into());
        }
    }
    CheckOutcome::ok(
        name,
        format!("checked against {} centralizer elements", oracle.centralizer.len()),
    )
}

fn check_order_formula_oracle(budget: u64) -> CheckOutcome {
    let name = "explorer: enumerations match the group-order formula (q=2 n<=4, q=3 n<=2)";
    for (q, nmax) in [(2u32, 4usize), (3, 2)] {
        let k = FieldPair::finite(q).unwrap();
        for n in 1..=nmax {
            let space = HermitianSpace::split(&k, n);
            let e = match enumerate_unitary(&k, &space, budget) {
                Ok(e) => e,
                Err(err) => return CheckOutcome::fail(name, err.to_string()),
            };
            let expected = unitary_group_order(q as u64, n as u32);
            if e.cardinality() as u64 != expected {
                return CheckOutcome::fail(
                    name,
                    format!("q={q}, n={n}: enumerated {}, formula {expected}", e.cardinality()),
                );
            }
        }
    }
    CheckOutcome::ok(name, "orders up to 77760 reproduced exactly".into())
}

fn check_lattice_layers(budget: u64) -> CheckOutcome {
    let name = "explorer: lattice stabilizer layer cardinalities at q=2";
    let k = FieldPair::truncated_local(2, 4).unwrap();
    let s2 = HermitianSpace::split(&k, 2);
    match lattice_stabilizer_layers(&k, &s2, 2, budget) {
        Ok(l) if l.cardinality() == 288 => {}
        Ok(l) => return CheckOutcome::fail(name, format!("level 2 cardinality {}", l.cardinality())),
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    }
    let s1 = HermitianSpace::split(&k, 1);
    match lattice_stabilizer_layers(&k, &s1, 2, budget) {
        Ok(l) if l.cardinality() == 6 => {}
        Ok(l) => return CheckOutcome::fail(name, format!("n=1 level 2 cardinality {}", l.cardinality())),
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    }
    CheckOutcome::ok(name, "18*16 = 288 and 3*2 = 6".into())
}

fn check_census_stabilization(budget: u64) -> CheckOutcome {
    let name = "explorer: conjugate census stabilizes and reproduces";
    let k = FieldPair::truncated_local(2, 4).unwrap();
    let kf = residue_pair(&k).unwrap();
    let s2 = HermitianSpace::split(&k, 2);
    let (_, jf) = jordan_instance(&kf);
    let jordan = constant_lift(&kf, &k, &jf);
    let census = match conjugate_census(&k, &s2, &jordan, 2, &[2, 3], budget) {
        Ok(c) => c,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    if census.stabilized_at.is_none() {
        return CheckOutcome::fail(name, "no stabilization within the level range".into());
    }
    let census2 = conjugate_census(&k, &s2, &jordan, 2, &[2, 3], budget).unwrap();
    if census.fingerprint(3) != census2.fingerprint(3) {
        return CheckOutcome::fail(name, "census multiset is not reproducible".into());
    }
    CheckOutcome::ok(
        name,
        format!("stabilized at level {:?}", census.stabilized_at),
    )
}

fn check_good_position(budget: u64) -> CheckOutcome {
    let name = "explorer: good position of the Siegel flag with the lattice stabilizer";
    let k = FieldPair::truncated_local(2, 4).unwrap();
    let space = HermitianSpace::split(&k, 2);
    let kf = residue_pair(&k).unwrap();
    let (_, jf) = jordan_instance(&kf);
    let gamma = constant_lift(&kf, &k, &jf);
    let fs = match flag_data(&k, &space, &gamma, &k.one()) {
        Ok(fs) => fs,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let enumeration = match lattice_stabilizer_layers(&k, &space, 2, budget) {
        Ok(e) => e,
        Err(err) => return CheckOutcome::fail(name, err.to_string()),
    };
    match good_position_check(&k, &space, &fs, &enumeration) {
        Ok(rep) if rep.all_pass() => CheckOutcome::ok(
            name,
            format!(
                "{} intersection cases, {} flag-variety points covered",
                rep.intersection_checked, rep.coverage_points
            ),
        ),
        Ok(rep) => CheckOutcome::fail(name, format!("{:?}", rep)),
        Err(e) => CheckOutcome::fail(name, e.to_string()),
    }
}

fn check_delta_laws(budget: u64) -> CheckOutcome {
    let name = "centralizer: delta characters multiply to the parabolic modulus";
    let k = FieldPair::truncated_local(2, 4).unwrap();
    let kf = residue_pair(&k).unwrap();
    let (space_f, gf) = rank3_instance(&kf);
    let space = HermitianSpace::new(&k, constant_lift(&kf, &k, &space_f.gram)).unwrap();
    let gamma = constant_lift(&kf, &k, &gf);
    let fs = match flag_data(&k, &space, &gamma, &k.one()) {
        Ok(fs) => fs,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let lie = lie_algebra(&k, &space, &fs).unwrap();
    let rep = match centralizer_report(&k, &space, &fs, &lie, &gamma) {
        Ok(r) => r,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let enumeration = match lattice_stabilizer_layers(&k, &space, 2, budget) {
        Ok(e) => e,
        Err(err) => return CheckOutcome::fail(name, err.to_string()),
    };
    let mut rng = SplitMix64::new(23);
    let mut tested = 0;
    while tested < 20 {
        let g = &enumeration.elements[rng.below(enumeration.cardinality() as u64) as usize];
        let m = membership_group(&k, &space, &fs, g).unwrap();
        if !m.in_p {
            continue;
        }
        tested += 1;
        match delta_characters(&k, &space, &fs, &lie, &rep, g) {
            Ok(dv) => {
                if dv.defect_quotient + dv.defect_kernel != dv.parabolic_modulus {
                    return CheckOutcome::fail(name, "product law fails".into());
                }
            }
            Err(e) => return CheckOutcome::fail(name, e.to_string()),
        }
    }
    CheckOutcome::ok(name, format!("{tested} parabolic samples"))
}

fn check_anchors(root: &Path) -> CheckOutcome {
    let name = "docsmap: anchors registry is exhaustive and tagged";
    match docsmap::check_anchors(root) {
        Ok(rep) if rep.pass() => CheckOutcome::ok(
            name,
            format!("{} operations registered", rep.operations_checked),
        ),
        Ok(rep) => CheckOutcome::fail(name, rep.failures.join("; ")),
        Err(e) => CheckOutcome::fail(name, e.to_string()),
    }
}

/// Locate the repository root by walking up from the working directory
/// until `anchors.json` is found.
pub fn find_root() -> Option<std::path::PathBuf> {
    let mut dir = std::env::current_dir().ok()?;
    loop {
        if dir.join("anchors.json").is_file() {
            return Some(dir);
        }
        if !dir.pop() {
            return None;
        }
    }
}

fn quick_checks(budget: u64) -> Vec<CheckOutcome> {
    vec![
        check_norm_one_cardinalities(),
        check_conj_dual_laws(1),
        check_factor_roundtrip(2),
        check_unitary_group_oracle(budget),
        check_centralizer_in_parabolic(budget, 2, 2),
        check_orbit_in_closed_set(budget, 2, 2),
        check_reduction_center(budget),
    ]
}

/// Run a named suite. `quick` covers q = 2, n <= 2 plus the registry;
/// `extended` adds q = 3, n = 3, and the local-pair censuses.
pub fn run_suite(suite: &str, budget: u64, root: Option<&Path>) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = match suite {
        "quick" => quick_checks(budget),
        "extended" => {
            let mut out = quick_checks(budget);
            out.push(check_centralizer_in_parabolic(budget, 2, 3));
            out.push(check_orbit_in_closed_set(budget, 2, 3));
            out.push(check_centralizer_in_parabolic(budget, 3, 2));
            out.push(check_order_formula_oracle(budget));
            out.push(check_lattice_layers(budget));
            out.push(check_census_stabilization(budget));
            out.push(check_good_position(budget));
            out.push(check_delta_laws(budget));
            out
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown suite {other:?}; use quick or extended"
            )))
        }
    };
    if let Some(root) = root.map(Path::to_path_buf).or_else(find_root) {
        outcomes.push(check_anchors(&root));
    }
    Ok(outcomes)
}
