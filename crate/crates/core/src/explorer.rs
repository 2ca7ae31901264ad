//! Brute-force and truncation-level group exploration.
//!
//! This is the oracle layer: exhaustive finite unitary groups via columnwise
//! backtracking, layered enumeration of the standard self-dual lattice
//! stabilizer modulo `t^N`, good-position verification, and the conjugate
//! census, whose stabilization across stabilizer levels is recorded rather
//! than assumed. Everything is budgeted and deterministic.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::coefficients::{FieldPair, PairKind, Scalar};
use crate::flagpar::{membership_group, FlagSplitting};
use crate::hermitian::HermitianSpace;
use crate::matrix::Mat;
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GroupEnumeration {
    pub elements: Vec<Mat>,
    /// Precision level of the enumeration: residue layers for the local
    /// pair, 0 for a finite pair.
    pub level: i64,
}

impl GroupEnumeration {
    pub fn cardinality(&self) -> usize {
        self.elements.len()
    }
}

/// Order of the full unitary group of a nondegenerate rank-`n` space over
/// the finite pair: `q^(n(n-1)/2) * prod_i (q^i - (-1)^i)`. Used as an
/// independent cardinality oracle for the exhaustive enumerations.
pub fn unitary_group_order(q: u64, n: u32) -> u64 {
    let mut order = q.pow(n * (n - 1) / 2);
    for i in 1..=n {
        let qi = q.pow(i) as i64;
        let sign = if i % 2 == 0 { 1 } else { -1 };
        order *= (qi - sign) as u64;
    }
    order
}

/// Canonical byte key of a matrix, for dedup and census multisets.
pub fn mat_key(_k: &FieldPair, m: &Mat) -> Vec<u8> {
    let mut out = vec![];
    for i in 0..m.rows {
        for j in 0..m.cols {
            match m.at(i, j) {
                Scalar::Fin(x) => out.extend(x.to_le_bytes()),
                Scalar::Loc(s) => {
                    out.extend(s.val.to_le_bytes());
                    out.extend((s.coeffs.len() as u64).to_le_bytes());
                    for c in &s.coeffs {
                        out.extend(c.to_le_bytes());
                    }
                }
            }
        }
    }
    out
}

/// Canonical key of a local matrix truncated to `t^M`: the window
/// `[0, M)` of every entry. Entries must be integral and known that deep.
pub fn truncated_key(k: &FieldPair, m: &Mat, trunc: i64) -> Result<Vec<u8>> {
    let mut out = vec![];
    for i in 0..m.rows {
        for j in 0..m.cols {
            let s = m.at(i, j);
            if let Some(v) = k.val_lower_bound(s) {
                if v < 0 {
                    return Err(Error::PrecisionLoss(
                        "matrix entry has negative valuation in a census".into(),
                    ));
                }
            }
            for e in 0..trunc {
                out.extend(k.coeff_at(s, e)?.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Exhaustive enumeration of the unitary group of a finite pair, column by
/// column with incremental Gram checks. The budget bounds the number of
/// candidate column extensions examined.
pub fn enumerate_unitary(
    k: &FieldPair,
    space: &HermitianSpace,
    budget: u64,
) -> Result<GroupEnumeration> {
    if k.kind != PairKind::Finite {
        return Err(Error::UnsupportedField(
            "exhaustive unitary enumeration requires the finite pair".into(),
        ));
    }
    let n = space.n;
    let vec_count = (k.qq as u64).pow(n as u32);
    // all vectors of E^n, canonical digit order
    let vector = |key: u64| -> Vec<Scalar> {
        let mut v = vec![];
        let mut m = key;
        for _ in 0..n {
            v.push(k.constant((m % k.qq as u64) as u32));
            m /= k.qq as u64;
        }
        v
    };
    let mut examined = 0u64;
    let mut out: Vec<Mat> = vec![];
    // depth-first over columns
    let mut stack: Vec<(Vec<Vec<Scalar>>, u64)> = vec![(vec![], 0)];
    while let Some((cols, next_key)) = stack.pop() {
        if next_key < vec_count {
            stack.push((cols.clone(), next_key + 1));
        } else {
            continue;
        }
        examined += 1;
        if examined > budget {
            return Err(Error::BudgetExceeded(format!(
                "unitary enumeration exceeded {budget} candidate extensions"
            )));
        }
        let cand = vector(next_key);
        let j = cols.len();
        // incremental conditions h(c_i, cand) = J_ij for i <= j
        let mut ok = true;
        for (i, ci) in cols.iter().enumerate() {
            if !k.equal(&space.pair(k, ci, &cand), space.gram.at(i, j)) {
                ok = false;
                break;
            }
        }
        if ok && k.equal(&space.pair(k, &cand, &cand), space.gram.at(j, j)) {
            let mut cols2 = cols;
            cols2.push(cand);
            if cols2.len() == n {
                out.push(Mat::from_fn(n, n, |r, c| cols2[c][r].clone()));
            } else {
                stack.push((cols2, 0));
            }
        }
    }
    out.sort_by_key(|m| mat_key(k, m));
    Ok(GroupEnumeration {
        elements: out,
        level: 0,
    })
}

#[derive(Clone, Debug)]
pub struct OrbitReport {
    pub centralizer: Vec<Mat>,
    pub orbit: Vec<Mat>,
    pub orbit_stabilizer_consistent: bool,
}

/// Centralizer and conjugation orbit of `gamma` inside an enumeration, with
/// the orbit-stabilizer identity checked.
pub fn centralizer_orbit_oracle(
    k: &FieldPair,
    enumeration: &GroupEnumeration,
    gamma: &Mat,
) -> Result<OrbitReport> {
    let mut centralizer = vec![];
    let mut orbit: BTreeMap<Vec<u8>, Mat> = BTreeMap::new();
    for g in &enumeration.elements {
        if g.matmul(k, gamma).equal(k, &gamma.matmul(k, g)) {
            centralizer.push(g.clone());
        }
        let conj = g.inverse(k)?.matmul(k, gamma).matmul(k, g);
        orbit.entry(mat_key(k, &conj)).or_insert(conj);
    }
    let consistent = centralizer.len() * orbit.len() == enumeration.cardinality();
    Ok(OrbitReport {
        centralizer,
        orbit: orbit.into_values().collect(),
        orbit_stabilizer_consistent: consistent,
    })
}

/// Residue finite pair of a truncated local pair (same tower, same indices).
pub fn residue_pair(k: &FieldPair) -> Result<FieldPair> {
    if k.kind != PairKind::TruncatedLocal {
        return Err(Error::UnsupportedField("residue pair of a finite pair".into()));
    }
    FieldPair::finite(k.q)
}

/// Reduce an integral local matrix at `t^e` to a residue-field matrix.
pub fn coefficient_matrix(k: &FieldPair, kf: &FieldPair, m: &Mat, e: i64) -> Result<Mat> {
    let mut out = Mat::zero(kf, m.rows, m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            out.set(i, j, kf.constant(k.coeff_at(m.at(i, j), e)?));
        }
    }
    Ok(out)
}

/// Lift a residue matrix to constants of the local pair.
pub fn constant_lift(_kf: &FieldPair, k: &FieldPair, m: &Mat) -> Mat {
    Mat::from_fn(m.rows, m.cols, |i, j| match m.at(i, j) {
        Scalar::Fin(x) => k.constant(*x),
        Scalar::Loc(_) => panic!("constant lift expects a finite-pair matrix"),
    })
}

/// Exhaustive enumeration of the standard self-dual lattice stabilizer
/// modulo `t^level`: the residue unitary group extended layer by layer,
/// each layer a torsor under solutions of the linearized unitarity
/// condition (dimension `n^2` over the residue base field).
pub fn lattice_stabilizer_layers(
    k: &FieldPair,
    space: &HermitianSpace,
    level: i64,
    budget: u64,
) -> Result<GroupEnumeration> {
    if k.kind != PairKind::TruncatedLocal {
        return Err(Error::UnsupportedField(
            "lattice stabilizer layers require the truncated local pair".into(),
        ));
    }
    let n = space.n;
    let npair = k.precision.unwrap();
    if level < 1 || level > npair {
        return Err(Error::InvalidInput(format!(
            "level must be within 1..={npair}"
        )));
    }
    // standard self-dual lattice: integral hermitian gram with unit determinant
    for i in 0..n {
        for j in 0..n {
            let v = k
                .val_lower_bound(space.gram.at(i, j))
                .unwrap_or(0);
            if v < 0 {
                return Err(Error::NotSelfDual);
            }
        }
    }
    let det = space.gram.det(k);
    match k.val(&det) {
        Ok(0) => {}
        _ => return Err(Error::NotSelfDual),
    }

    let kf = residue_pair(k)?;
    let gram0 = coefficient_matrix(k, &kf, &space.gram, 0)?;
    let space0 = HermitianSpace::new(&kf, gram0.clone())
        .map_err(|_| Error::NotSelfDual)?;
    let residue = enumerate_unitary(&kf, &space0, budget)?;
    let mut current: Vec<Mat> = residue
        .elements
        .iter()
        .map(|g| constant_lift(&kf, k, g))
        .collect();

    // F-linear layer system: X -> conj(X)^t J0 g0 + conj(g0)^t J0 X
    let dim = 2 * n * n;
    let flatten_f = |m: &Mat| -> Vec<Scalar> { crate::endo::flatten(&kf, m) };
    for e in 1..level {
        if (current.len() as u64) * (kf.q as u64).pow((n * n) as u32) > budget {
            return Err(Error::BudgetExceeded(format!(
                "layer {e} would exceed the enumeration budget"
            )));
        }
        let mut next = vec![];
        for g in &current {
            let g0 = coefficient_matrix(k, &kf, g, 0)?;
            // defect: J - conj(g)^t J g = t^e D + O(t^(e+1))
            let defect = space
                .gram
                .sub(k, &g.conj_transpose(k).matmul(k, &space.gram).matmul(k, g));
            for lower in 0..e {
                let c = coefficient_matrix(k, &kf, &defect, lower)?;
                if !c.is_zero(&kf) {
                    return Err(Error::InternalInvariantViolation(format!(
                        "layer defect appears below t^{e}"
                    )));
                }
            }
            let rhs = coefficient_matrix(k, &kf, &defect, e)?;
            // solve conj(X)^t J0 g0 + conj(g0)^t J0 X = rhs over the residue pair
            let lin = |x: &Mat| -> Mat {
                x.conj_transpose(&kf)
                    .matmul(&kf, &gram0)
                    .matmul(&kf, &g0)
                    .add(&kf, &g0.conj_transpose(&kf).matmul(&kf, &gram0).matmul(&kf, x))
            };
            let mut cols = vec![];
            for b in 0..dim {
                let mut v = vec![kf.zero(); dim];
                v[b] = kf.one();
                let xb = crate::endo::unflatten(&kf, n, &v);
                cols.push(flatten_f(&lin(&xb)));
            }
            let sys = Mat::from_fn(dim, dim, |i, j| cols[j][i].clone());
            let particular = sys
                .solve(&kf, &flatten_f(&rhs))?
                .ok_or_else(|| {
                    Error::InternalInvariantViolation(
                        "layer lifting system is inconsistent (residue map not surjective)".into(),
                    )
                })?;
            let kernel = sys.right_kernel(&kf)?;
            if kernel.rows != n * n {
                return Err(Error::InternalInvariantViolation(format!(
                    "layer torsor has dimension {} instead of {}",
                    kernel.rows,
                    n * n
                )));
            }
            // enumerate particular + kernel combinations over the base field
            let combos = (kf.q as u64).pow(kernel.rows as u32);
            for key in 0..combos {
                let mut coords = particular.clone();
                let mut m = key;
                for r in 0..kernel.rows {
                    let c = kf.constant((m % kf.q as u64) as u32);
                    m /= kf.q as u64;
                    for (slot, b) in coords.iter_mut().zip(kernel.row(r)) {
                        *slot = kf.add(slot, &kf.mul(&c, &b));
                    }
                }
                let x0 = crate::endo::unflatten(&kf, n, &coords);
                let lift = g.add(k, &constant_lift(&kf, k, &x0).scale(k, &k.monomial(1, e).unwrap()));
                next.push(lift);
            }
        }
        current = next;
    }

    Ok(GroupEnumeration {
        elements: current,
        level,
    })
}

/// Seeded sampler over the layered enumeration structure, for regimes where
/// full storage is unnecessary.
pub fn lattice_stabilizer_sample(
    k: &FieldPair,
    space: &HermitianSpace,
    level: i64,
    seed: u64,
    count: usize,
    budget: u64,
) -> Result<Vec<Mat>> {
    let enumeration = lattice_stabilizer_layers(k, space, level, budget)?;
    let mut rng = SplitMix64::new(seed);
    let mut out = vec![];
    for _ in 0..count {
        let i = rng.below(enumeration.elements.len() as u64) as usize;
        out.push(enumeration.elements[i].clone());
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct GoodPositionReport {
    /// `(checked, passed)` for the intersection property `P∩K = (M∩K)(N∩K)`.
    pub intersection_checked: usize,
    pub intersection_passed: usize,
    /// Canonical primitive isotropic classes modulo `t^level` and unit
    /// scalars, and how many of them the stabilizer orbit of the flag base
    /// point reaches. Full coverage is the truncated face of `G = PK`.
    pub coverage_points: usize,
    pub coverage_hit: usize,
}

impl GoodPositionReport {
    pub fn all_pass(&self) -> bool {
        self.intersection_checked == self.intersection_passed
            && self.coverage_points == self.coverage_hit
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": "uconj-good-position/1",
            "intersection": {"checked": self.intersection_checked, "passed": self.intersection_passed},
            "coverage": {"points": self.coverage_points, "hit": self.coverage_hit},
            "pass": self.all_pass(),
        })
    }
}

fn integral(k: &FieldPair, m: &Mat) -> bool {
    (0..m.rows).all(|i| {
        (0..m.cols).all(|j| k.val_lower_bound(m.at(i, j)).map(|v| v >= 0).unwrap_or(true))
    })
}

/// Canonical representative of a primitive vector class modulo `t^level`
/// and unit scalars: rescale so the first unit entry is 1, then truncate.
fn canonical_vector_key(k: &FieldPair, v: &[Scalar], level: i64) -> Result<Option<Vec<u8>>> {
    let unit = v.iter().position(|s| matches!(k.val(s), Ok(0)));
    let Some(pos) = unit else {
        return Ok(None); // not primitive
    };
    let inv = k.inv(&v[pos])?;
    let mut key = vec![];
    for s in v {
        let c = k.mul(s, &inv);
        for e in 0..level {
            key.extend(k.coeff_at(&c, e)?.to_le_bytes());
        }
    }
    Ok(Some(key))
}

/// Verify good position of the parabolic with the lattice stabilizer at the
/// enumeration level. Two properties:
///
/// * every flag-stabilizing enumerated element factors exactly as an
///   integral Levi part times an integral unipotent part, and
/// * the stabilizer orbit of the flag's top isotropic line covers every
///   primitive isotropic line modulo `t^level` — the transitive action on
///   flag-variety points that is equivalent to `G = P K` at truncation.
///
/// The coverage half currently handles a one-dimensional top piece (all
/// shipped flags), and is skipped for a trivial flag.
pub fn good_position_check(
    k: &FieldPair,
    space: &HermitianSpace,
    fs: &FlagSplitting,
    enumeration: &GroupEnumeration,
) -> Result<GoodPositionReport> {
    let mut report = GoodPositionReport {
        intersection_checked: 0,
        intersection_passed: 0,
        coverage_points: 0,
        coverage_hit: 0,
    };
    for g in &enumeration.elements {
        let membership = membership_group(k, space, fs, g)?;
        if !membership.in_p {
            continue;
        }
        report.intersection_checked += 1;
        let m = fs.levi_part(k, g);
        let ok = match m.inverse(k) {
            Ok(minv) => {
                let n = minv.matmul(k, g);
                let mm = membership_group(k, space, fs, &m)?;
                let mn = membership_group(k, space, fs, &n)?;
                mm.in_m && mn.in_n && integral(k, &m) && integral(k, &n)
            }
            Err(_) => false,
        };
        if ok {
            report.intersection_passed += 1;
        }
    }

    let top = fs.flag.at(1);
    if top.dim() == 0 {
        return Ok(report); // P = G, coverage is vacuous
    }
    if top.dim() > 1 {
        return Err(Error::BudgetExceeded(
            "flag-variety coverage is implemented for one-dimensional top pieces".into(),
        ));
    }
    let level = enumeration.level;
    let n = space.n;

    // orbit of the base point under the enumerated stabilizer
    let base = top.basis.row(0);
    let mut orbit: std::collections::BTreeSet<Vec<u8>> = std::collections::BTreeSet::new();
    for g in &enumeration.elements {
        let img = g.apply(k, &base);
        if let Some(key) = canonical_vector_key(k, &img, level)? {
            orbit.insert(key);
        }
    }

    // all primitive isotropic vector classes modulo t^level
    let classes = (k.qq as u64).pow((n as u32) * (level as u32));
    let mut seen: std::collections::BTreeSet<Vec<u8>> = std::collections::BTreeSet::new();
    for key in 0..classes {
        let mut digits = key;
        let mut v = vec![];
        for _ in 0..n {
            let mut coeffs = vec![];
            for _ in 0..level {
                coeffs.push((digits % k.qq as u64) as u32);
                digits /= k.qq as u64;
            }
            v.push(k.series(0, &coeffs)?);
        }
        let Some(canon) = canonical_vector_key(k, &v, level)? else {
            continue;
        };
        if seen.contains(&canon) {
            continue;
        }
        // isotropy to the enumeration level
        let hv = space.pair(k, &v, &v);
        let isotropic = (0..level).all(|e| k.coeff_at(&hv, e).map(|c| c == 0).unwrap_or(false));
        if !isotropic {
            continue;
        }
        seen.insert(canon.clone());
        report.coverage_points += 1;
        if orbit.contains(&canon) {
            report.coverage_hit += 1;
        }
    }
    Ok(report)
}

/// Census of conjugates modulo `t^trunc` over increasing stabilizer levels.
#[derive(Clone, Debug)]
pub struct CensusResult {
    pub trunc: i64,
    /// Per level: multiset of truncated conjugates.
    pub per_level: Vec<(i64, BTreeMap<Vec<u8>, u64>)>,
    pub stabilized_at: Option<i64>,
}

impl CensusResult {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": "uconj-census/1",
            "trunc": self.trunc,
            "levels": self.per_level.iter().map(|(n, ms)| json!({
                "level": n,
                "distinct": ms.len(),
                "total": ms.values().sum::<u64>(),
            })).collect::<Vec<_>>(),
            "stabilized_at": self.stabilized_at,
        })
    }

    /// Stable fingerprint of the census at a level, for reproducibility
    /// assertions.
    pub fn fingerprint(&self, level: i64) -> Option<u64> {
        let (_, ms) = self.per_level.iter().find(|(n, _)| *n == level)?;
        let mut h = 1469598103934665603u64;
        for (key, count) in ms {
            for &b in key {
                h ^= b as u64;
                h = h.wrapping_mul(1099511628211);
            }
            h ^= *count;
            h = h.wrapping_mul(1099511628211);
        }
        Some(h)
    }
}

/// `{ g^(-1) gamma g mod t^trunc }` for `g` over stabilizer levels in
/// `levels`, with monotone-growth verification and stabilization detection.
pub fn conjugate_census(
    k: &FieldPair,
    space: &HermitianSpace,
    gamma: &Mat,
    trunc: i64,
    levels: &[i64],
    budget: u64,
) -> Result<CensusResult> {
    if !integral(k, gamma) {
        return Err(Error::InvalidInput(
            "census element must have integral entries".into(),
        ));
    }
    let mut per_level = vec![];
    for &level in levels {
        if level < trunc {
            return Err(Error::PrecisionLoss(format!(
                "census at truncation {trunc} needs level >= {trunc}, got {level}"
            )));
        }
        let enumeration = lattice_stabilizer_layers(k, space, level, budget)?;
        let mut ms: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for g in &enumeration.elements {
            let conj = g.inverse(k)?.matmul(k, gamma).matmul(k, g);
            let key = truncated_key(k, &conj, trunc)?;
            *ms.entry(key).or_insert(0) += 1;
        }
        per_level.push((level, ms));
    }
    // monotone growth as sets, and stabilization when consecutive sets agree
    let mut stabilized_at = None;
    for w in per_level.windows(2) {
        let (n0, a) = &w[0];
        let (n1, b) = &w[1];
        let a_keys: Vec<_> = a.keys().collect();
        if !a_keys.iter().all(|key| b.contains_key(*key)) {
            return Err(Error::InternalInvariantViolation(format!(
                "census at level {n1} lost conjugates present at level {n0}"
            )));
        }
        if a.len() == b.len() && stabilized_at.is_none() {
            stabilized_at = Some(*n1);
        }
    }
    Ok(CensusResult {
        trunc,
        per_level,
        stabilized_at,
    })
}
