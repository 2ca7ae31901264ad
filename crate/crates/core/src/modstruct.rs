//! The `E[T]`-module analysis of `(V, h, gamma)`: primary decomposition,
//! elementary divisors, the partition of primary components into self
//! conjugate-dual classes and hyperbolic pairs, and the closedness test.
//!
//! Elementary divisors are computed from kernel-dimension differences of
//! powers of the irreducible factor applied to `gamma`: only ranks are
//! needed, which is simpler and precision-friendlier than Smith normal form
//! over `E[T]`.

use std::cmp::Ordering;

use serde_json::{json, Value};

use crate::coefficients::{FieldPair, PairKind, Scalar};
use crate::hermitian::{restrict_form, HermitianSpace, RestrictedForm, Subspace, UnitaryElement};
use crate::matrix::Mat;
use crate::polynomials::{charpoly_and_minpoly, Poly};
use crate::{Error, Result};

/// Classification of a primary component under the conjugate-dual involution.
#[derive(Clone, Debug)]
pub enum SelfDualClass {
    /// `p = conj_dual(p)`.
    SelfConjDual(Poly),
    /// Distinct pair `(p, conj_dual(p))`, canonically ordered.
    HyperbolicPair(Poly, Poly),
}

impl SelfDualClass {
    pub fn poly(&self) -> &Poly {
        match self {
            SelfDualClass::SelfConjDual(p) => p,
            SelfDualClass::HyperbolicPair(p, _) => p,
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, SelfDualClass::HyperbolicPair(..))
    }
}

#[derive(Clone, Debug)]
pub struct Component {
    pub class: SelfDualClass,
    /// `(m_i, r_i)` with `m_1 > m_2 > ... > 0`.
    pub divisors: Vec<(u32, u32)>,
    /// Canonical basis of `V{p}`.
    pub basis: Subspace,
    /// Basis of `V{conj_dual(p)}` for a hyperbolic pair.
    pub dual_basis: Option<Subspace>,
}

impl Component {
    /// `V_a`: the primary subspace itself, or the sum of the hyperbolic halves.
    pub fn carrier(&self, k: &FieldPair) -> Result<Subspace> {
        match &self.dual_basis {
            None => Ok(self.basis.clone()),
            Some(d) => self.basis.sum(k, d),
        }
    }

    pub fn poly_degree(&self) -> usize {
        self.class.poly().degree().unwrap_or(0)
    }

    /// `dim_E` of the carrier.
    pub fn dim(&self) -> usize {
        let half: u32 = self
            .divisors
            .iter()
            .map(|&(m, r)| m * r)
            .sum::<u32>()
            * self.poly_degree() as u32;
        if self.dual_basis.is_some() {
            (2 * half) as usize
        } else {
            half as usize
        }
    }
}

/// Full module invariant of a unitary element.
#[derive(Clone, Debug)]
pub struct DivisorProfile {
    pub components: Vec<Component>,
}

impl DivisorProfile {
    pub fn to_json(&self, k: &FieldPair) -> Value {
        Value::Array(
            self.components
                .iter()
                .map(|c| {
                    let (kind, poly, dual) = match &c.class {
                        SelfDualClass::SelfConjDual(p) => ("self_dual", p, p),
                        SelfDualClass::HyperbolicPair(p, d) => ("hyperbolic", p, d),
                    };
                    json!({
                        "kind": kind,
                        "poly": poly.to_json(k),
                        "dual_poly": dual.to_json(k),
                        "divisors": c.divisors.iter().map(|&(m, r)| vec![m, r]).collect::<Vec<_>>(),
                    })
                })
                .collect(),
        )
    }
}

pub fn cmp_scalar(a: &Scalar, b: &Scalar) -> Ordering {
    match (a, b) {
        (Scalar::Fin(x), Scalar::Fin(y)) => x.cmp(y),
        (Scalar::Loc(x), Scalar::Loc(y)) => x
            .val
            .cmp(&y.val)
            .then_with(|| x.coeffs.cmp(&y.coeffs))
            .then_with(|| x.prec.cmp(&y.prec)),
        _ => panic!("mixed scalar kinds"),
    }
}

/// Canonical polynomial ordering: degree, then coefficients from the
/// constant term up.
pub fn cmp_poly(a: &Poly, b: &Poly) -> Ordering {
    let da = a.coeffs.len();
    let db = b.coeffs.len();
    if da != db {
        return da.cmp(&db);
    }
    for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
        let c = cmp_scalar(x, y);
        if c != Ordering::Equal {
            return c;
        }
    }
    Ordering::Equal
}

/// Kernel-dimension bookkeeping for one irreducible `p` applied to `gamma`.
///
/// Returns the basis of `V{p}` together with the elementary divisors derived
/// from `c_k = dim_E ker(p(gamma)^k) / deg(p)`.
pub(crate) fn primary_part(
    k: &FieldPair,
    gamma: &Mat,
    p: &Poly,
) -> Result<Option<(Subspace, Vec<(u32, u32)>)>> {
    let n = gamma.rows;
    let d = p.degree().ok_or(Error::ZeroConstantTerm)? as u32;
    let op = p.eval_matrix(k, gamma);
    let mut c = vec![0u32]; // c_0 = 0
    let mut power = Mat::identity(k, n);
    let mut last_kernel = Subspace::zero(n);
    loop {
        power = power.matmul(k, &op);
        let ker = Subspace::kernel_of(k, &power)?;
        let dim = ker.dim() as u32;
        if !dim.is_multiple_of(d) {
            return Err(Error::InternalInvariantViolation(format!(
                "kernel dimension {dim} is not a multiple of deg(p) = {d}"
            )));
        }
        let ck = dim / d;
        if ck == *c.last().unwrap() {
            break;
        }
        c.push(ck);
        last_kernel = ker;
        if c.len() > n + 1 {
            return Err(Error::InternalInvariantViolation(
                "kernel sequence failed to stabilize".into(),
            ));
        }
    }
    if c.len() == 1 {
        return Ok(None); // p does not occur
    }
    // b_k = #divisors with m_i >= k; multiplicity of exponent k is b_k - b_(k+1)
    let kmax = c.len() - 1;
    let mut divisors = vec![];
    for m in (1..=kmax).rev() {
        let b_m = c[m] - c[m - 1];
        let b_next = if m < kmax { c[m + 1] - c[m] } else { 0 };
        if b_m < b_next {
            return Err(Error::InternalInvariantViolation(
                "kernel-dimension sequence is not concave".into(),
            ));
        }
        let r = b_m - b_next;
        if r > 0 {
            divisors.push((m as u32, r));
        }
    }
    divisors.sort_by(|a, b| b.0.cmp(&a.0));
    Ok(Some((last_kernel, divisors)))
}

/// Primary decomposition of `V` under `gamma`, with the self-dual/hyperbolic
/// classification populated through the conjugate-dual involution.
///
/// Over the finite pair the factor list comes from factoring the
/// characteristic polynomial; over the truncated local pair the caller must
/// declare the candidate irreducibles, and the operation verifies that their
/// powers exhaust `V`.
pub fn primary_decomposition(
    k: &FieldPair,
    space: &HermitianSpace,
    gamma: &UnitaryElement,
    declared: Option<&[Poly]>,
) -> Result<DivisorProfile> {
    let n = space.n;
    let polys: Vec<Poly> = match (k.kind, declared) {
        (_, Some(list)) => list.to_vec(),
        (PairKind::Finite, None) => {
            let cp = Poly::new(k, gamma.mat.charpoly(k));
            cp.factor(k)?.into_iter().map(|(p, _)| p).collect()
        }
        (PairKind::TruncatedLocal, None) => {
            return Err(Error::UnsupportedField(
                "primary decomposition over the local pair needs a declared factor list".into(),
            ))
        }
    };

    // collect (p, basis, divisors), dropping non-occurring declared factors
    let mut parts: Vec<(Poly, Subspace, Vec<(u32, u32)>)> = vec![];
    for p in &polys {
        if !p.is_monic(k) {
            return Err(Error::InvalidInput("factors must be monic".into()));
        }
        if parts.iter().any(|(q, _, _)| q.equal(k, p)) {
            continue;
        }
        if let Some((basis, divisors)) = primary_part(k, &gamma.mat, p)? {
            parts.push((p.clone(), basis, divisors));
        }
    }

    let total: usize = parts.iter().map(|(_, b, _)| b.dim()).sum();
    if total != n {
        if declared.is_some() {
            return Err(Error::IncompleteFactorization);
        }
        return Err(Error::InternalInvariantViolation(format!(
            "primary parts span dimension {total} of {n}"
        )));
    }

    // classify via conj_dual, consuming partners
    let mut used = vec![false; parts.len()];
    let mut components = vec![];
    for i in 0..parts.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let (p, basis, divisors) = &parts[i];
        let pd = p.conj_dual(k)?;
        if pd.equal(k, p) {
            components.push(Component {
                class: SelfDualClass::SelfConjDual(p.clone()),
                divisors: divisors.clone(),
                basis: basis.clone(),
                dual_basis: None,
            });
            continue;
        }
        let j = (0..parts.len())
            .find(|&j| !used[j] && parts[j].0.equal(k, &pd))
            .ok_or_else(|| {
                Error::InternalInvariantViolation(
                    "conjugate-dual partner of a primary component is missing".into(),
                )
            })?;
        used[j] = true;
        if parts[j].2 != *divisors {
            return Err(Error::InternalInvariantViolation(
                "hyperbolic halves have different elementary divisors".into(),
            ));
        }
        // canonical member first
        let (first, second) = if cmp_poly(p, &pd) == Ordering::Less {
            (i, j)
        } else {
            (j, i)
        };
        components.push(Component {
            class: SelfDualClass::HyperbolicPair(parts[first].0.clone(), parts[second].0.clone()),
            divisors: parts[first].2.clone(),
            basis: parts[first].1.clone(),
            dual_basis: Some(parts[second].1.clone()),
        });
    }

    // deterministic component order: self-dual classes first, then
    // hyperbolic pairs, each by the canonical polynomial ordering
    components.sort_by(|a, b| {
        let ha = a.class.is_hyperbolic();
        let hb = b.class.is_hyperbolic();
        ha.cmp(&hb)
            .then_with(|| cmp_poly(a.class.poly(), b.class.poly()))
    });

    let profile = DivisorProfile { components };
    let check: usize = profile.components.iter().map(Component::dim).sum();
    if check != n {
        return Err(Error::InternalInvariantViolation(
            "component dimension bookkeeping is inconsistent".into(),
        ));
    }
    Ok(profile)
}

/// One assertion in a duality/orthogonality report.
#[derive(Clone, Debug)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct DualityReport {
    pub entries: Vec<CheckEntry>,
}

impl DualityReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn to_json(&self) -> Value {
        json!(self
            .entries
            .iter()
            .map(|e| json!({"check": e.name, "pass": e.pass}))
            .collect::<Vec<_>>())
    }
}

/// Verify the theorem-backed pairing structure of a profile: primary parts
/// pair only with their conjugate-duals, hyperbolic halves are totally
/// isotropic, and the form restricts non-degenerately to every carrier.
/// Failures are report entries, not errors; any failure is a bug upstream.
pub fn duality_orthogonality_check(
    k: &FieldPair,
    space: &HermitianSpace,
    profile: &DivisorProfile,
) -> Result<DualityReport> {
    let mut entries = vec![];

    // flatten all primary pieces as (poly, basis)
    let mut pieces: Vec<(Poly, Subspace)> = vec![];
    for c in &profile.components {
        match &c.class {
            SelfDualClass::SelfConjDual(p) => pieces.push((p.clone(), c.basis.clone())),
            SelfDualClass::HyperbolicPair(p, d) => {
                pieces.push((p.clone(), c.basis.clone()));
                pieces.push((d.clone(), c.dual_basis.clone().unwrap()));
            }
        }
    }

    for (i, (p, bp)) in pieces.iter().enumerate() {
        let pd = p.conj_dual(k)?;
        for (j, (q, bq)) in pieces.iter().enumerate() {
            if i == j && pd.equal(k, p) {
                continue;
            }
            if q.equal(k, &pd) {
                continue;
            }
            let gram = bp
                .basis
                .conj(k)
                .matmul(k, &space.gram)
                .matmul(k, &bq.basis.transpose());
            entries.push(CheckEntry {
                name: format!("orthogonality piece {i} vs piece {j}"),
                pass: gram.is_zero(k),
            });
        }
    }

    for (ci, c) in profile.components.iter().enumerate() {
        if let SelfDualClass::HyperbolicPair(..) = &c.class {
            for (tag, b) in [("half", &c.basis), ("dual half", c.dual_basis.as_ref().unwrap())] {
                let iso = matches!(
                    restrict_form(k, space, b)?,
                    RestrictedForm::TotallyIsotropic
                ) || b.dim() == 0;
                entries.push(CheckEntry {
                    name: format!("component {ci} {tag} totally isotropic"),
                    pass: iso,
                });
            }
        }
        let carrier = c.carrier(k)?;
        let nondeg = matches!(
            restrict_form(k, space, &carrier)?,
            RestrictedForm::Nondegenerate(_)
        );
        entries.push(CheckEntry {
            name: format!("component {ci} carrier nondegenerate"),
            pass: nondeg,
        });
    }

    Ok(DualityReport { entries })
}

/// Closedness: the minimal polynomial is a product of distinct monic
/// irreducibles. Over the finite (perfect) pair this is the gcd-with-
/// derivative test; over the local pair the multiplicity data must come from
/// a declared factor list.
pub fn is_closed(
    k: &FieldPair,
    space: &HermitianSpace,
    gamma: &UnitaryElement,
    declared: Option<&[Poly]>,
) -> Result<bool> {
    match k.kind {
        PairKind::Finite => {
            let (_, mp) = charpoly_and_minpoly(k, &gamma.mat)?;
            let g = mp.gcd(k, &mp.derivative(k))?;
            Ok(g.degree() == Some(0))
        }
        PairKind::TruncatedLocal => {
            let profile = primary_decomposition(k, space, gamma, declared)?;
            Ok(profile
                .components
                .iter()
                .all(|c| c.divisors.iter().all(|&(m, _)| m == 1)))
        }
    }
}
