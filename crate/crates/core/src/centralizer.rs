//! Centralizer and codimension calculus on the graded unitary Lie algebra.
//!
//! The Lie algebra is the annihilator of the hermitian form inside
//! `End_E(V)`, an `F`-space of dimension `n^2`, graded by the cocharacter
//! weights of a flag splitting. Centralizer dimensions are computed twice
//! (kernel of `1 - Ad(gamma^(-1))` and direct commutant intersection) and
//! checked against the closed-form expressions in terms of elementary
//! divisors; the defect space, its cokernel avatar on the weight-one piece,
//! and the closed-form codimension must all agree. Failures of any of these
//! identities are internal errors, never data.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::coefficients::{FieldPair, PairKind};
use crate::endo::{ambient_dim, flatten, image_under, kernel_within, span_of_mats, unflatten};
use crate::flagpar::{membership_group, FlagSplitting};
use crate::hermitian::{HermitianSpace, Subspace};
use crate::matrix::Mat;
use crate::{Error, Result};

/// The form-annihilator Lie algebra with its weight grading, all as
/// `F`-subspaces of the flattened endomorphism coordinates.
#[derive(Clone, Debug)]
pub struct GradedLieData {
    pub full: Subspace,
    pub weight: BTreeMap<i64, Subspace>,
    pub levi: Subspace,
    pub parabolic: Subspace,
    pub nilradical: Subspace,
    pub nilradical2: Subspace,
}

impl GradedLieData {
    pub fn weight_piece(&self, j: i64) -> Subspace {
        self.weight
            .get(&j)
            .cloned()
            .unwrap_or_else(|| Subspace::zero(self.full.ambient))
    }

    pub fn dims(&self) -> BTreeMap<i64, usize> {
        self.weight.iter().map(|(&j, s)| (j, s.dim())).collect()
    }
}

/// Solve the annihilator condition `conj(xi)^t J + J xi = 0` and grade the
/// solution space by the splitting weights.
pub fn lie_algebra(
    k: &FieldPair,
    space: &HermitianSpace,
    fs: &FlagSplitting,
) -> Result<GradedLieData> {
    let n = space.n;
    let dim = ambient_dim(n);
    // F-linear constraint matrix applied to the standard F-basis of End_E(V)
    let mut cols: Vec<Vec<_>> = vec![];
    for b in 0..dim {
        let mut v = vec![k.zero(); dim];
        v[b] = k.one();
        let xi = unflatten(k, n, &v);
        let img = xi
            .conj_transpose(k)
            .matmul(k, &space.gram)
            .add(k, &space.gram.matmul(k, &xi));
        cols.push(flatten(k, &img));
    }
    let constraint = Mat::from_fn(dim, dim, |i, j| cols[j][i].clone());
    let full = Subspace::from_rows(k, &constraint.right_kernel(k)?)?;
    if full.dim() != n * n {
        return Err(Error::InternalInvariantViolation(format!(
            "form annihilator has F-dimension {} instead of {}",
            full.dim(),
            n * n
        )));
    }

    // weight pieces: project every basis element to each weight
    let wmin = fs.weights.last().copied().unwrap_or(0);
    let wmax = fs.weights.first().copied().unwrap_or(0);
    let mut weight = BTreeMap::new();
    let mut graded_total = 0usize;
    for w in (wmin - wmax)..=(wmax - wmin) {
        let mut mats = vec![];
        for i in 0..full.dim() {
            let xi = unflatten(k, n, &full.basis.row(i));
            let comp = fs.weight_component(k, &xi, w);
            if !comp.is_zero(k) {
                mats.push(comp);
            }
        }
        let piece = span_of_mats(k, n, &mats)?;
        if piece.dim() > 0 {
            graded_total += piece.dim();
            weight.insert(w, piece);
        }
    }
    if graded_total != n * n {
        return Err(Error::InternalInvariantViolation(
            "weight pieces do not grade the Lie algebra".into(),
        ));
    }

    let zero = Subspace::zero(dim);
    let mut levi = zero.clone();
    let mut parabolic = zero.clone();
    let mut nilradical = zero.clone();
    let mut nilradical2 = zero.clone();
    for (&w, piece) in &weight {
        if w == 0 {
            levi = levi.sum(k, piece)?;
        }
        if w >= 0 {
            parabolic = parabolic.sum(k, piece)?;
        }
        if w > 0 {
            nilradical = nilradical.sum(k, piece)?;
        }
        if w >= 2 {
            nilradical2 = nilradical2.sum(k, piece)?;
        }
    }

    Ok(GradedLieData {
        full,
        weight,
        levi,
        parabolic,
        nilradical,
        nilradical2,
    })
}

/// `d * sum_i (m_i - m_(i+1)) (sum_(j<=i) r_j)^2`.
pub fn gl_dimension_formula(d: u32, divisors: &[(u32, u32)]) -> usize {
    let mut total = 0u64;
    let mut racc = 0u64;
    for (i, &(m, r)) in divisors.iter().enumerate() {
        racc += r as u64;
        let next = divisors.get(i + 1).map(|&(mn, _)| mn).unwrap_or(0);
        total += (m - next) as u64 * racc * racc;
    }
    (d as u64 * total) as usize
}

fn parity_sums(divisors: &[(u32, u32)], upto: usize) -> (u64, u64) {
    let mut odd = 0u64;
    let mut even = 0u64;
    for &(m, r) in divisors.iter().take(upto + 1) {
        if m % 2 == 1 {
            odd += r as u64;
        } else {
            even += r as u64;
        }
    }
    (odd, even)
}

/// `d * sum_i (m_i - m_(i+1)) ((sum odd r)^2 + (sum even r)^2)`.
pub fn levi_dimension_formula(d: u32, divisors: &[(u32, u32)]) -> usize {
    let mut total = 0u64;
    for (i, &(m, _)) in divisors.iter().enumerate() {
        let next = divisors.get(i + 1).map(|&(mn, _)| mn).unwrap_or(0);
        let (odd, even) = parity_sums(divisors, i);
        total += (m - next) as u64 * (odd * odd + even * even);
    }
    (d as u64 * total) as usize
}

/// `2 d * sum_i (m_i - m_(i+1)) (sum odd r)(sum even r)`.
pub fn codimension_formula(d: u32, divisors: &[(u32, u32)]) -> usize {
    let mut total = 0u64;
    for (i, &(m, _)) in divisors.iter().enumerate() {
        let next = divisors.get(i + 1).map(|&(mn, _)| mn).unwrap_or(0);
        let (odd, even) = parity_sums(divisors, i);
        total += (m - next) as u64 * odd * even;
    }
    (2 * d as u64 * total) as usize
}

#[derive(Clone, Debug)]
pub struct CentralizerReport {
    pub dim_g: usize,
    pub dim_g_gamma: usize,
    pub dim_m_gammabar: usize,
    pub dim_n_bracket: usize,
    pub dim_coker_g1: usize,
    pub gl_formula: usize,
    pub m_formula: usize,
    pub codim_formula: usize,
    /// Centralizer of `gamma` in the Lie algebra, in endomorphism coordinates.
    pub g_gamma: Subspace,
    /// Centralizer of the Levi image inside the weight-zero piece.
    pub m_gammabar: Subspace,
    /// Kernel of the defect projection inside the nilradical:
    /// `n ∩ im(1 - Ad(gamma^(-1)) | p)`.
    pub v0: Subspace,
    /// Image of `1 - Ad(gamma_bar^(-1))` on the weight-one piece.
    pub vbar0: Subspace,
}

impl CentralizerReport {
    pub fn consistent(&self) -> bool {
        let defect = self.dim_g_gamma - self.dim_m_gammabar;
        defect == self.dim_n_bracket
            && defect == self.dim_coker_g1
            && defect == self.codim_formula
            && self.dim_g_gamma == self.gl_formula
            && self.dim_m_gammabar == self.m_formula
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dim_g": self.dim_g,
            "dim_g_gamma": self.dim_g_gamma,
            "dim_m_gammabar": self.dim_m_gammabar,
            "dim_n_bracket": self.dim_n_bracket,
            "dim_coker_g1": self.dim_coker_g1,
            "gl_formula": self.gl_formula,
            "m_formula": self.m_formula,
            "codim_formula": self.codim_formula,
            "consistent": self.consistent(),
        })
    }
}

/// Centralizer dimensions (two independent routes each) plus the defect
/// bookkeeping; asserts every identity the construction guarantees.
pub fn centralizer_report(
    k: &FieldPair,
    space: &HermitianSpace,
    fs: &FlagSplitting,
    lie: &GradedLieData,
    gamma: &Mat,
) -> Result<CentralizerReport> {
    let n = space.n;
    let d = fs.flag.poly.degree().unwrap() as u32;
    let divisors = fs.flag.divisors.clone();
    let gamma_inv = gamma.inverse(k)?;
    let gbar = &fs.gamma_bar;
    let gbar_inv = gbar.inverse(k)?;

    // route one: kernel of 1 - Ad(gamma^(-1)) on the parabolic
    let one_minus_ad = |inv: &Mat, g: &Mat| {
        let inv = inv.clone();
        let g = g.clone();
        move |xi: &Mat| -> Result<Mat> { Ok(xi.sub(k, &inv.matmul(k, xi).matmul(k, &g))) }
    };
    let g_gamma = kernel_within(k, n, &lie.parabolic, one_minus_ad(&gamma_inv, gamma))?;
    // route two: commutant intersection inside the whole Lie algebra
    let commutant = kernel_within(k, n, &lie.full, |xi| {
        Ok(xi.matmul(k, gamma).sub(k, &gamma.matmul(k, xi)))
    })?;
    if !g_gamma.equals(k, &commutant) {
        return Err(Error::InternalInvariantViolation(
            "kernel of 1 - Ad and the commutant intersection disagree".into(),
        ));
    }

    let m_gammabar = kernel_within(k, n, &lie.levi, one_minus_ad(&gbar_inv, gbar))?;
    let m_commutant = kernel_within(k, n, &lie.levi, |xi| {
        Ok(xi.matmul(k, gbar).sub(k, &gbar.matmul(k, xi)))
    })?;
    if !m_gammabar.equals(k, &m_commutant) {
        return Err(Error::InternalInvariantViolation(
            "Levi centralizer routes disagree".into(),
        ));
    }

    // defect space: n ∩ im(1 - Ad(gamma^(-1)) | p)
    let im_p = image_under(k, n, &lie.parabolic, one_minus_ad(&gamma_inv, gamma))?;
    let v0 = lie.nilradical.intersect(k, &im_p)?;
    let dim_n_bracket = lie.nilradical.dim() - v0.dim();

    // weight-one cokernel of 1 - Ad(gamma_bar^(-1))
    let g1 = lie.weight_piece(1);
    let vbar0 = image_under(k, n, &g1, one_minus_ad(&gbar_inv, gbar))?;
    let dim_coker_g1 = g1.dim() - vbar0.dim();

    // the kernel of the defect projection is the preimage of vbar0
    let preimage = vbar0.sum(k, &lie.nilradical2)?;
    if !v0.equals(k, &preimage) {
        return Err(Error::InternalInvariantViolation(
            "defect kernel differs from the weight-one preimage".into(),
        ));
    }

    let report = CentralizerReport {
        dim_g: lie.full.dim(),
        dim_g_gamma: g_gamma.dim(),
        dim_m_gammabar: m_gammabar.dim(),
        dim_n_bracket,
        dim_coker_g1,
        gl_formula: gl_dimension_formula(d, &divisors),
        m_formula: levi_dimension_formula(d, &divisors),
        codim_formula: codimension_formula(d, &divisors),
        g_gamma,
        m_gammabar,
        v0,
        vbar0,
    };
    if !report.consistent() {
        return Err(Error::InternalInvariantViolation(format!(
            "centralizer dimension identities failed: {}",
            report.to_json()
        )));
    }
    Ok(report)
}

/// Verdict of the membership test for the closed set attached to `gamma`.
#[derive(Clone, Debug)]
pub struct VGammaVerdict {
    pub in_v: bool,
    pub witness: Option<Mat>,
    pub searched: u64,
}

/// Enumerate the Levi subgroup pointwise: an element is determined by
/// invertible blocks on the nonnegative-weight pieces (unitary on weight 0),
/// with the negative-weight blocks forced by duality.
fn enumerate_levi(
    k: &FieldPair,
    space: &HermitianSpace,
    fs: &FlagSplitting,
    budget: u64,
) -> Result<Vec<Mat>> {
    if k.kind != PairKind::Finite {
        return Err(Error::UnsupportedField(
            "Levi enumeration requires the finite pair".into(),
        ));
    }
    let n = space.n;
    // enumerate candidate block tuples by filtering all matrices blockwise
    let mut per_piece: Vec<(i64, Vec<Mat>)> = vec![];
    for &j in &fs.weights {
        if j < 0 {
            continue;
        }
        let piece = &fs.split[&j];
        let d = piece.dim();
        let count = (k.qq as u64).pow((d * d) as u32);
        if count > budget {
            return Err(Error::WitnessBudgetExceeded { searched: count });
        }
        let mut blocks = vec![];
        for key in 0..count {
            let mut digits = key;
            let cand = Mat::from_fn(d, d, |_, _| {
                let c = (digits % k.qq as u64) as u32;
                digits /= k.qq as u64;
                k.constant(c)
            });
            if cand.rank(k)? < d {
                continue;
            }
            if j == 0 {
                // must preserve the restricted form on V(0)
                let gram = piece
                    .basis
                    .conj(k)
                    .matmul(k, &space.gram)
                    .matmul(k, &piece.basis.transpose());
                let lhs = cand.conj_transpose(k).matmul(k, &gram).matmul(k, &cand);
                if !lhs.equal(k, &gram) {
                    continue;
                }
            }
            blocks.push(cand);
        }
        per_piece.push((j, blocks));
    }

    let total: u64 = per_piece.iter().map(|(_, b)| b.len() as u64).product();
    if total > budget {
        return Err(Error::WitnessBudgetExceeded { searched: total });
    }

    // assemble ambient matrices for each block tuple
    let mut out = vec![];
    let mut idx = vec![0usize; per_piece.len()];
    loop {
        let mut m = Mat::zero(k, n, n);
        for (slot, (j, blocks)) in idx.iter().zip(&per_piece) {
            let a = &blocks[*slot];
            let piece = &fs.split[j];
            // v in V(j) with coords c = E v: m v = basis^t (A c)
            let contribution = piece
                .basis
                .transpose()
                .matmul(k, a)
                .matmul(k, &piece.coord_extractor(k))
                .matmul(k, fs.projector(*j).unwrap());
            m = m.add(k, &contribution);
            if *j > 0 {
                // negative block forced by h(m x, m y) = h(x, y):
                // with P the pairing matrix of the bases, the coordinate
                // action is conj-transpose(P A^(-1) P^(-1))
                let neg = &fs.split[&-j];
                let pairing = neg
                    .basis
                    .conj(k)
                    .matmul(k, &space.gram)
                    .matmul(k, &piece.basis.transpose());
                let a_inv = a.inverse(k)?;
                let b = pairing
                    .matmul(k, &a_inv)
                    .matmul(k, &pairing.inverse(k)?)
                    .conj_transpose(k);
                let contribution = neg
                    .basis
                    .transpose()
                    .matmul(k, &b)
                    .matmul(k, &neg.coord_extractor(k))
                    .matmul(k, fs.projector(-j).unwrap());
                m = m.add(k, &contribution);
            }
        }
        if space.is_unitary(k, &m) {
            out.push(m);
        }
        // odometer
        let mut carry = true;
        for (slot, (_, blocks)) in idx.iter_mut().zip(&per_piece) {
            if !carry {
                break;
            }
            *slot += 1;
            if *slot == blocks.len() {
                *slot = 0;
            } else {
                carry = false;
            }
        }
        if carry {
            break;
        }
    }
    Ok(out)
}

/// Decide whether `p_elt` (in `P`) lies in the closed set fibered over the
/// Levi orbit of `gamma_bar` with fiber the defect kernel: search for a Levi
/// conjugator and test the translated weight-one datum.
pub fn v_gamma_membership(
    k: &FieldPair,
    space: &HermitianSpace,
    fs: &FlagSplitting,
    report: &CentralizerReport,
    p_elt: &Mat,
    budget: u64,
) -> Result<VGammaVerdict> {
    let membership = membership_group(k, space, fs, p_elt)?;
    if !membership.in_p {
        return Err(Error::InvalidInput(
            "membership test requires an element of P".into(),
        ));
    }
    let n = space.n;
    let identity = Mat::identity(k, n);
    let levi = fs.levi_part(k, p_elt);
    let unip = levi.inverse(k)?.matmul(k, p_elt);
    // weight-one coordinate of the unipotent part
    let xi = fs.weight_component(k, &unip.sub(k, &identity), 1);

    let levis = enumerate_levi(k, space, fs, budget)?;
    let mut searched = 0u64;
    for cand in &levis {
        searched += 1;
        let conj = cand
            .inverse(k)?
            .matmul(k, &fs.gamma_bar)
            .matmul(k, cand);
        if !conj.equal(k, &levi) {
            continue;
        }
        // test Ad(m0)(xi) against the recorded weight-one image
        let translated = cand.matmul(k, &xi).matmul(k, &cand.inverse(k)?);
        if report.vbar0.contains_vec(k, &flatten(k, &translated))? {
            return Ok(VGammaVerdict {
                in_v: true,
                witness: Some(cand.clone()),
                searched,
            });
        }
    }
    Ok(VGammaVerdict {
        in_v: false,
        witness: None,
        searched,
    })
}

/// Exponent-of-`q` values of the three determinant characters at `g`:
/// on the defect quotient, on the defect kernel, and on the nilradical.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeltaValues {
    pub defect_quotient: i64,
    pub defect_kernel: i64,
    pub parabolic_modulus: i64,
}

/// Compute the delta characters of `g in P` over the truncated local pair,
/// as exponents of `q` (`value = q^exponent`). The recorded defect kernel
/// must be stable under `Ad(g^(-1))`; instability is an internal error.
pub fn delta_characters(
    k: &FieldPair,
    space: &HermitianSpace,
    fs: &FlagSplitting,
    lie: &GradedLieData,
    report: &CentralizerReport,
    g: &Mat,
) -> Result<DeltaValues> {
    if k.kind != PairKind::TruncatedLocal {
        return Err(Error::UnsupportedField(
            "delta characters require the truncated local pair".into(),
        ));
    }
    let membership = membership_group(k, space, fs, g)?;
    if !membership.in_p {
        return Err(Error::InvalidInput(
            "delta characters are defined on P".into(),
        ));
    }
    let n = space.n;
    let ginv = g.inverse(k)?;
    let ad = |xi: &Mat| -> Result<Mat> { Ok(ginv.matmul(k, xi).matmul(k, g)) };

    // adapted basis of the nilradical: defect kernel first, then an extension
    let nil = &lie.nilradical;
    let v0 = &report.v0;
    let r0 = v0.dim();
    let rn = nil.dim();
    let mut adapted: Vec<Vec<_>> = (0..r0).map(|i| v0.basis.row(i)).collect();
    let mut span = v0.clone();
    for i in 0..rn {
        if adapted.len() == rn {
            break;
        }
        let cand = nil.basis.row(i);
        if span.contains_vec(k, &cand)? {
            continue;
        }
        span = span.sum(k, &Subspace::from_rows(k, &Mat::from_rows(vec![cand.clone()]))?)?;
        adapted.push(cand);
    }
    if adapted.len() != rn {
        return Err(Error::InternalInvariantViolation(
            "could not extend the defect kernel to the nilradical".into(),
        ));
    }
    let basis_mat = if rn == 0 {
        Mat::empty(ambient_dim(n))
    } else {
        Mat::from_rows(adapted.clone())
    };

    // matrix of Ad(g^(-1)) | n in the adapted basis
    let mut cols = vec![];
    for row in &adapted {
        let xi = unflatten(k, n, row);
        let img = flatten(k, &ad(&xi)?);
        let coords = basis_mat.transpose().solve(k, &img)?.ok_or_else(|| {
            Error::PrecisionLoss("adjoint image has no expansion in the nilradical basis".into())
        })?;
        cols.push(coords);
    }
    let admat = Mat::from_fn(rn, rn, |i, j| cols[j][i].clone());

    // stability of the defect kernel: lower-left block must vanish
    for j in 0..r0 {
        for i in r0..rn {
            if !k.is_zero(admat.at(i, j)) {
                return Err(Error::InternalInvariantViolation(
                    "adjoint action does not preserve the defect kernel".into(),
                ));
            }
        }
    }

    let block = |ri: std::ops::Range<usize>| -> Mat {
        Mat::from_fn(ri.len(), ri.len(), |i, j| {
            admat.at(ri.start + i, ri.start + j).clone()
        })
    };
    let exp_of = |m: &Mat| -> Result<i64> {
        let det = m.det(k);
        let (v, _) = k.valuation_and_absnorm(&det)?;
        Ok(-v)
    };
    let defect_kernel = exp_of(&block(0..r0))?;
    let defect_quotient = exp_of(&block(r0..rn))?;
    let parabolic_modulus = exp_of(&admat)?;
    Ok(DeltaValues {
        defect_quotient,
        defect_kernel,
        parabolic_modulus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::FieldPair;
    use crate::flagpar::{build_flag, choose_splitting};
    use crate::polynomials::Poly;

    fn m(k: &FieldPair, entries: &[&[u32]]) -> Mat {
        Mat::from_fn(entries.len(), entries[0].len(), |i, j| {
            k.constant(entries[i][j])
        })
    }

    fn setup(
        k: &FieldPair,
        gram: Mat,
        gamma: Mat,
    ) -> (HermitianSpace, Mat, FlagSplitting, GradedLieData) {
        let space = HermitianSpace::new(k, gram).unwrap();
        assert!(space.is_unitary(k, &gamma));
        let p = Poly::linear(k, &k.one());
        let flag = build_flag(k, &space, &gamma, &p).unwrap();
        let fs = choose_splitting(k, &space, &gamma, &flag, 0).unwrap();
        let lie = lie_algebra(k, &space, &fs).unwrap();
        (space, gamma, fs, lie)
    }

    #[test]
    fn lie_algebra_dims_for_split_rank_two() {
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[0, 1], &[1, 0]]);
        let gamma = m(&k, &[&[1, 1], &[0, 1]]);
        let (_, _, _, lie) = setup(&k, gram, gamma);
        assert_eq!(lie.full.dim(), 4);
        let dims = lie.dims();
        assert_eq!(dims.get(&-2), Some(&1));
        assert_eq!(dims.get(&0), Some(&2));
        assert_eq!(dims.get(&2), Some(&1));
        assert_eq!(dims.get(&1), None);
    }

    #[test]
    fn lie_algebra_dim_for_rank_one() {
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[1]]);
        let gamma = m(&k, &[&[1]]);
        let (_, _, _, lie) = setup(&k, gram, gamma);
        // the trace-zero line {x : x + conj(x) = 0}
        assert_eq!(lie.full.dim(), 1);
    }

    #[test]
    fn bracket_respects_weights() {
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]);
        let gamma = m(&k, &[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]);
        let (_, _, _fs, lie) = setup(&k, gram, gamma);
        assert_eq!(lie.full.dim(), 9);
        for (&i, pi) in &lie.weight {
            for (&j, pj) in &lie.weight {
                for a in 0..pi.dim() {
                    for b in 0..pj.dim() {
                        let xa = unflatten(&k, 3, &pi.basis.row(a));
                        let xb = unflatten(&k, 3, &pj.basis.row(b));
                        let br = xa.matmul(&k, &xb).sub(&k, &xb.matmul(&k, &xa));
                        if br.is_zero(&k) {
                            continue;
                        }
                        let target = lie.weight_piece(i + j);
                        assert!(
                            target.contains_vec(&k, &flatten(&k, &br)).unwrap(),
                            "bracket of weights {i}, {j} escapes weight {}",
                            i + j
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn centralizer_dims_jordan_block() {
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[0, 1], &[1, 0]]);
        let gamma = m(&k, &[&[1, 1], &[0, 1]]);
        let (space, gamma, fs, lie) = setup(&k, gram, gamma);
        let rep = centralizer_report(&k, &space, &fs, &lie, &gamma).unwrap();
        assert_eq!(rep.dim_g_gamma, 2);
        assert_eq!(rep.gl_formula, 2);
        assert_eq!(rep.dim_m_gammabar, 2);
        assert_eq!(rep.dim_n_bracket, 0);
        assert!(rep.consistent());
    }

    #[test]
    fn centralizer_dims_rank3_mixed_parity() {
        for q in [2u32, 3] {
            let k = FieldPair::finite(q).unwrap();
            let gram = m(&k, &[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]);
            let x = k.first_trace_zero();
            let gamma = m(&k, &[&[1, x, 0], &[0, 1, 0], &[0, 0, 1]]);
            let (space, gamma, fs, lie) = setup(&k, gram, gamma);
            let rep = centralizer_report(&k, &space, &fs, &lie, &gamma).unwrap();
            assert_eq!(rep.dim_g_gamma, 5, "q = {q}");
            assert_eq!(rep.dim_m_gammabar, 3, "q = {q}");
            assert_eq!(rep.dim_n_bracket, 2);
            assert_eq!(rep.dim_coker_g1, 2);
            assert_eq!(rep.codim_formula, 2);
            assert!(rep.consistent());
        }
    }

    #[test]
    fn centralizer_of_identity_is_everything() {
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[0, 1], &[1, 0]]);
        let gamma = Mat::identity(&k, 2);
        let (space, gamma, fs, lie) = setup(&k, gram, gamma);
        let rep = centralizer_report(&k, &space, &fs, &lie, &gamma).unwrap();
        assert_eq!(rep.dim_g_gamma, 4);
        assert_eq!(rep.dim_g, 4);
        assert!(rep.consistent());
    }

    #[test]
    fn formula_values_match_hand_computation() {
        // rank-3 mixed parity: (m, r) = (2,1),(1,1), d = 1
        assert_eq!(gl_dimension_formula(1, &[(2, 1), (1, 1)]), 5);
        assert_eq!(levi_dimension_formula(1, &[(2, 1), (1, 1)]), 3);
        assert_eq!(codimension_formula(1, &[(2, 1), (1, 1)]), 2);
        // single even block: no defect
        assert_eq!(codimension_formula(1, &[(2, 3)]), 0);
        // degree scaling
        assert_eq!(gl_dimension_formula(3, &[(1, 1)]), 3);
    }

    #[test]
    fn levi_enumeration_matches_the_filtered_group() {
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]);
        let x = k.first_trace_zero();
        let gamma = m(&k, &[&[1, x, 0], &[0, 1, 0], &[0, 0, 1]]);
        let (space, _, fs, _) = setup(&k, gram, gamma);
        let levis = enumerate_levi(&k, &space, &fs, 1 << 24).unwrap();
        let full = crate::explorer::enumerate_unitary(&k, &space, 1 << 24).unwrap();
        let filtered: Vec<&Mat> = full
            .elements
            .iter()
            .filter(|g| membership_group(&k, &space, &fs, g).unwrap().in_m)
            .collect();
        assert_eq!(levis.len(), filtered.len());
        for g in &filtered {
            assert!(levis.iter().any(|l| l.equal(&k, g)));
        }
    }

    #[test]
    fn membership_in_v_gamma_jordan() {
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[0, 1], &[1, 0]]);
        let gamma = m(&k, &[&[1, 1], &[0, 1]]);
        let (space, gamma, fs, lie) = setup(&k, gram, gamma);
        let rep = centralizer_report(&k, &space, &fs, &lie, &gamma).unwrap();
        // gamma itself is in its own closed set, witnessed by the identity
        let verdict = v_gamma_membership(&k, &space, &fs, &rep, &gamma, 1 << 20).unwrap();
        assert!(verdict.in_v);
        // elements of P with a different Levi class are rejected
        let omega = k.constant(2);
        let scalar = Mat::identity(&k, 2).scale(&k, &omega);
        let verdict2 = v_gamma_membership(&k, &space, &fs, &rep, &scalar, 1 << 20).unwrap();
        assert!(!verdict2.in_v);
    }

    #[test]
    fn n_translates_stay_in_the_closed_set_when_defect_vanishes() {
        // m = 2 case: the defect space is zero and the closed set is the
        // full unipotent radical, so gamma * n passes for every n in N
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[0, 1], &[1, 0]]);
        let gamma = m(&k, &[&[1, 1], &[0, 1]]);
        let (space, gamma, fs, lie) = setup(&k, gram, gamma);
        let rep = centralizer_report(&k, &space, &fs, &lie, &gamma).unwrap();
        let enumeration =
            crate::explorer::enumerate_unitary(&k, &space, 1 << 24).unwrap();
        let mut count = 0;
        for n in &enumeration.elements {
            if !membership_group(&k, &space, &fs, n).unwrap().in_n {
                continue;
            }
            let p = gamma.matmul(&k, n);
            let verdict = v_gamma_membership(&k, &space, &fs, &rep, &p, 1 << 20).unwrap();
            assert!(verdict.in_v);
            count += 1;
        }
        // N has q = 2 elements here (one weight-2 line over F_2)
        assert_eq!(count, 2);
    }

    #[test]
    fn witness_budget_is_reported() {
        let k = FieldPair::finite(2).unwrap();
        let gram = m(&k, &[&[0, 1], &[1, 0]]);
        let gamma = m(&k, &[&[1, 1], &[0, 1]]);
        let (space, gamma, fs, lie) = setup(&k, gram, gamma);
        let rep = centralizer_report(&k, &space, &fs, &lie, &gamma).unwrap();
        assert!(matches!(
            v_gamma_membership(&k, &space, &fs, &rep, &gamma, 1),
            Err(Error::WitnessBudgetExceeded { .. })
        ));
    }

    #[test]
    fn delta_characters_on_local_jordan_instance() {
        let k = FieldPair::truncated_local(2, 4).unwrap();
        let gram = m(&k, &[&[0, 1], &[1, 0]]);
        let gamma = m(&k, &[&[1, 1], &[0, 1]]);
        let space = HermitianSpace::new(&k, gram).unwrap();
        let p = Poly::linear(&k, &k.one());
        let flag = build_flag(&k, &space, &gamma, &p).unwrap();
        let fs = choose_splitting(&k, &space, &gamma, &flag, 0).unwrap();
        let lie = lie_algebra(&k, &space, &fs).unwrap();
        let rep = centralizer_report(&k, &space, &fs, &lie, &gamma).unwrap();

        // unipotent elements have trivial deltas
        let dv = delta_characters(&k, &space, &fs, &lie, &rep, &gamma).unwrap();
        // gamma in N here (gamma_bar = 1), so all three are q^0
        assert_eq!(dv.defect_quotient, 0);
        assert_eq!(dv.defect_kernel, 0);
        assert_eq!(dv.parabolic_modulus, 0);

        // the cocharacter element diag(t, t^(-1)) scales the single
        // weight-2 line by t^(-2) under Ad(g^(-1)): delta_P = q^2
        let t = k.monomial(1, 1).unwrap();
        let tinv = k.monomial(1, -1).unwrap();
        let lam = Mat::from_rows(vec![
            vec![t.clone(), k.zero()],
            vec![k.zero(), tinv.clone()],
        ]);
        let dv2 = delta_characters(&k, &space, &fs, &lie, &rep, &lam).unwrap();
        assert_eq!(dv2.parabolic_modulus, 2);
        // defect quotient is trivial (no defect here), so the kernel part
        // carries the whole modulus
        assert_eq!(dv2.defect_quotient, 0);
        assert_eq!(dv2.defect_kernel, 2);
    }
}
