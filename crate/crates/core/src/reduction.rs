//! Reduction of an arbitrary unitary element to primary constituents.
//!
//! A central semisimple `s` is assembled blockwise from pairwise-distinct
//! scalars: norm-one scalars on self-dual components, reciprocal pairs of
//! base-field scalars on the halves of hyperbolic components. Twisting each
//! component of `gamma` by the inverse scalar produces pieces that are
//! primary for the rescaled polynomial `p'(T) = t^(-d) p(t T)`; self-dual
//! components stay self conjugate-dual because the twisting scalar has
//! norm one.

use serde_json::{json, Value};

use crate::coefficients::{FieldPair, Scalar};
use crate::hermitian::{HermitianSpace, Subspace, UnitaryElement};
use crate::matrix::Mat;
use crate::modstruct::{primary_part, DivisorProfile, SelfDualClass};
use crate::polynomials::Poly;
use crate::{Error, Result};

/// One primary constituent of the reduction.
#[derive(Clone, Debug)]
pub enum Piece {
    /// Self-dual component: a smaller hermitian space with a primary
    /// unitary element on it.
    Unitary {
        space: HermitianSpace,
        gamma: Mat,
        poly: Poly,
        basis: Subspace,
        scalar: Scalar,
    },
    /// Hyperbolic component: the general-linear restriction to one half.
    Linear {
        gamma: Mat,
        poly: Poly,
        basis: Subspace,
        scalar: Scalar,
    },
}

impl Piece {
    pub fn poly(&self) -> &Poly {
        match self {
            Piece::Unitary { poly, .. } | Piece::Linear { poly, .. } => poly,
        }
    }

    pub fn scalar(&self) -> &Scalar {
        match self {
            Piece::Unitary { scalar, .. } | Piece::Linear { scalar, .. } => scalar,
        }
    }

    pub fn gamma(&self) -> &Mat {
        match self {
            Piece::Unitary { gamma, .. } | Piece::Linear { gamma, .. } => gamma,
        }
    }

    pub fn to_json(&self, k: &FieldPair) -> Value {
        match self {
            Piece::Unitary {
                space,
                gamma,
                poly,
                basis,
                scalar,
            } => json!({
                "kind": "unitary",
                "gram": space.gram.to_json(k),
                "gamma": gamma.to_json(k),
                "poly": poly.to_json(k),
                "basis": basis.to_json(k),
                "scalar": k.scalar_to_json(scalar),
            }),
            Piece::Linear {
                gamma,
                poly,
                basis,
                scalar,
            } => json!({
                "kind": "linear",
                "gamma": gamma.to_json(k),
                "poly": poly.to_json(k),
                "basis": basis.to_json(k),
                "scalar": k.scalar_to_json(scalar),
            }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub s: Mat,
    pub pieces: Vec<Piece>,
    pub scalars: Vec<Scalar>,
}

impl ReductionResult {
    pub fn to_json(&self, k: &FieldPair) -> Value {
        json!({
            "s": self.s.to_json(k),
            "scalars": self.scalars.iter().map(|t| k.scalar_to_json(t)).collect::<Vec<_>>(),
            "pieces": self.pieces.iter().map(|p| p.to_json(k)).collect::<Vec<_>>(),
        })
    }
}

/// Deterministic selection of pairwise-distinct twisting scalars, one per
/// component: powers of the canonical norm-one generator for self-dual
/// components, base-field units in serialization order for hyperbolic ones.
/// Selections from both pools share one distinctness constraint.
pub fn choose_scalars(k: &FieldPair, profile: &DivisorProfile) -> Result<Vec<Scalar>> {
    let norm_one_pool = k.norm_one_elements();
    let base_pool: Vec<u32> = k.base_elements().skip(1).collect();
    let mut used: Vec<u32> = vec![];
    let mut out = vec![];
    for c in &profile.components {
        let pool: &[u32] = if c.class.is_hyperbolic() {
            &base_pool
        } else {
            &norm_one_pool
        };
        let pick = pool.iter().copied().find(|t| !used.contains(t));
        match pick {
            Some(t) => {
                used.push(t);
                out.push(k.constant(t));
            }
            None => {
                let needed = profile
                    .components
                    .iter()
                    .filter(|d| d.class.is_hyperbolic() == c.class.is_hyperbolic())
                    .count();
                return Err(Error::FieldTooSmall {
                    needed,
                    available: pool.len(),
                });
            }
        }
    }
    Ok(out)
}

/// `p'(T) = t^(-d) p(t T)`: monic of the same degree.
pub fn twist_poly(k: &FieldPair, p: &Poly, t: &Scalar) -> Result<Poly> {
    let d = p
        .degree()
        .ok_or_else(|| Error::InvalidInput("cannot twist the zero polynomial".into()))?;
    let tinv = k.inv(t)?;
    let mut coeffs = vec![];
    for (i, c) in p.coeffs.iter().enumerate() {
        // c_i * t^i * t^(-d) = c_i * t^(i - d), computed as inverse powers
        let power = k.pow(&tinv, (d - i) as u64);
        coeffs.push(k.mul(c, &power));
    }
    Ok(Poly::new(k, coeffs))
}

/// Matrix of the action of `op` on the subspace spanned by `basis`, in that
/// basis.
pub fn restrict_operator(k: &FieldPair, op: &Mat, basis: &Subspace) -> Result<Mat> {
    let r = basis.dim();
    let mut cols: Vec<Vec<Scalar>> = vec![];
    for i in 0..r {
        let img = op.apply(k, &basis.basis.row(i));
        let coords = basis.coords_of(k, &img)?.ok_or_else(|| {
            Error::InternalInvariantViolation("operator does not preserve the subspace".into())
        })?;
        cols.push(coords);
    }
    Ok(Mat::from_fn(r, r, |i, j| cols[j][i].clone()))
}

fn component_projectors(
    k: &FieldPair,
    n: usize,
    blocks: &[Subspace],
) -> Result<Vec<Mat>> {
    let mut cols: Vec<Vec<Scalar>> = vec![];
    let mut ranges = vec![];
    for b in blocks {
        let start = cols.len();
        for i in 0..b.dim() {
            cols.push(b.basis.row(i));
        }
        ranges.push((start, cols.len()));
    }
    if cols.len() != n {
        return Err(Error::InternalInvariantViolation(
            "component bases do not span the space".into(),
        ));
    }
    let bmat = Mat::from_fn(n, n, |i, j| cols[j][i].clone());
    let binv = bmat.inverse(k)?;
    let mut projs = vec![];
    for (s, e) in ranges {
        let mut d = Mat::zero(k, n, n);
        for i in s..e {
            d.set(i, i, k.one());
        }
        projs.push(bmat.matmul(k, &d).matmul(k, &binv));
    }
    Ok(projs)
}

/// Assemble the central unitary `s` for the profile and reduce `gamma` to
/// its primary pieces. Every theorem-backed property of the construction is
/// verified before returning.
pub fn build_s_and_reduce(
    k: &FieldPair,
    space: &HermitianSpace,
    gamma: &UnitaryElement,
    profile: &DivisorProfile,
) -> Result<ReductionResult> {
    let n = space.n;
    let scalars = choose_scalars(k, profile)?;

    // projector blocks in component order: self-dual carrier, or the two
    // hyperbolic halves separately
    let mut blocks: Vec<(Scalar, Subspace)> = vec![];
    for (c, t) in profile.components.iter().zip(&scalars) {
        match &c.class {
            SelfDualClass::SelfConjDual(_) => blocks.push((t.clone(), c.basis.clone())),
            SelfDualClass::HyperbolicPair(..) => {
                blocks.push((t.clone(), c.basis.clone()));
                blocks.push((k.inv(t)?, c.dual_basis.clone().unwrap()));
            }
        }
    }
    let projs = component_projectors(k, n, &blocks.iter().map(|(_, b)| b.clone()).collect::<Vec<_>>())?;
    let mut s = Mat::zero(k, n, n);
    for ((t, _), pj) in blocks.iter().zip(&projs) {
        s = s.add(k, &pj.scale(k, t));
    }

    // s is unitary with s* = s^(-1), and commutes with gamma
    if !space.is_unitary(k, &s) {
        return Err(Error::InternalInvariantViolation(
            "assembled s is not unitary".into(),
        ));
    }
    let sadj = space.adjoint(k, &s);
    if !sadj.matmul(k, &s).equal(k, &Mat::identity(k, n)) {
        return Err(Error::InternalInvariantViolation(
            "assembled s does not satisfy s* s = 1".into(),
        ));
    }
    if !s
        .matmul(k, &gamma.mat)
        .equal(k, &gamma.mat.matmul(k, &s))
    {
        return Err(Error::InternalInvariantViolation(
            "assembled s does not commute with gamma".into(),
        ));
    }

    let mut pieces = vec![];
    for (c, t) in profile.components.iter().zip(&scalars) {
        let tinv = k.inv(t)?;
        let twisted = twist_poly(k, c.class.poly(), t)?;
        match &c.class {
            SelfDualClass::SelfConjDual(_) => {
                let carrier = &c.basis;
                let gram = carrier
                    .basis
                    .conj(k)
                    .matmul(k, &space.gram)
                    .matmul(k, &carrier.basis.transpose());
                let piece_space = HermitianSpace::new(k, gram).map_err(|_| {
                    Error::InternalInvariantViolation(
                        "restricted form on a self-dual component is degenerate".into(),
                    )
                })?;
                let restricted = restrict_operator(k, &gamma.mat, carrier)?;
                let twisted_gamma = restricted.scale(k, &tinv);
                if !piece_space.is_unitary(k, &twisted_gamma) {
                    return Err(Error::InternalInvariantViolation(
                        "twisted component element is not unitary".into(),
                    ));
                }
                verify_primary(k, &twisted_gamma, &twisted, &c.divisors)?;
                let td = twisted.conj_dual(k)?;
                if !td.equal(k, &twisted) {
                    return Err(Error::InternalInvariantViolation(
                        "twisted polynomial of a norm-one scalar is not self-dual".into(),
                    ));
                }
                pieces.push(Piece::Unitary {
                    space: piece_space,
                    gamma: twisted_gamma,
                    poly: twisted,
                    basis: carrier.clone(),
                    scalar: t.clone(),
                });
            }
            SelfDualClass::HyperbolicPair(..) => {
                let half = &c.basis;
                let restricted = restrict_operator(k, &gamma.mat, half)?;
                let twisted_gamma = restricted.scale(k, &tinv);
                verify_primary(k, &twisted_gamma, &twisted, &c.divisors)?;
                pieces.push(Piece::Linear {
                    gamma: twisted_gamma,
                    poly: twisted,
                    basis: half.clone(),
                    scalar: t.clone(),
                });
            }
        }
    }

    Ok(ReductionResult { s, pieces, scalars })
}

fn verify_primary(k: &FieldPair, g: &Mat, p: &Poly, divisors: &[(u32, u32)]) -> Result<()> {
    match primary_part(k, g, p)? {
        Some((basis, divs)) if basis.dim() == g.rows && divs == divisors => Ok(()),
        Some((basis, divs)) => Err(Error::InternalInvariantViolation(format!(
            "twisted piece has wrong primary data: dim {} of {}, divisors {divs:?} vs {divisors:?}",
            basis.dim(),
            g.rows
        ))),
        None => Err(Error::InternalInvariantViolation(
            "twisted piece is not annihilated by its polynomial".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::FieldPair;
    use crate::modstruct::{primary_decomposition, Component};

    fn m(k: &FieldPair, entries: &[&[u32]]) -> Mat {
        Mat::from_fn(entries.len(), entries[0].len(), |i, j| {
            k.constant(entries[i][j])
        })
    }

    #[test]
    fn primary_element_reduces_to_itself() {
        let k = FieldPair::finite(2).unwrap();
        let space = HermitianSpace::split(&k, 2);
        let g = UnitaryElement::new(&k, &space, m(&k, &[&[1, 1], &[0, 1]])).unwrap();
        let profile = primary_decomposition(&k, &space, &g, None).unwrap();
        let red = build_s_and_reduce(&k, &space, &g, &profile).unwrap();
        // t = 1 is the first norm-one scalar, so s = 1 and the piece is gamma
        assert!(red.s.equal(&k, &Mat::identity(&k, 2)));
        assert_eq!(red.pieces.len(), 1);
        match &red.pieces[0] {
            Piece::Unitary { gamma, poly, .. } => {
                assert!(gamma.equal(&k, &g.mat));
                assert!(poly.equal(&k, &Poly::linear(&k, &k.one())));
            }
            _ => panic!("expected a unitary piece"),
        }
    }

    #[test]
    fn hyperbolic_component_gives_linear_piece() {
        let k = FieldPair::finite(3).unwrap();
        let space = HermitianSpace::split(&k, 2);
        let g = k.constant(k.generator);
        let gbar_inv = k.inv(&k.conjugate(&g)).unwrap();
        let mat = Mat::from_rows(vec![
            vec![g.clone(), k.zero()],
            vec![k.zero(), gbar_inv],
        ]);
        let u = UnitaryElement::new(&k, &space, mat).unwrap();
        let profile = primary_decomposition(&k, &space, &u, None).unwrap();
        let red = build_s_and_reduce(&k, &space, &u, &profile).unwrap();
        assert_eq!(red.pieces.len(), 1);
        match &red.pieces[0] {
            Piece::Linear { gamma, poly, basis, scalar } => {
                assert_eq!(basis.dim(), 1);
                assert!(k.is_one(scalar));
                assert_eq!(gamma.rows, 1);
                // the piece carries the canonical member of the pair
                assert_eq!(poly.degree(), Some(1));
            }
            _ => panic!("expected a linear piece"),
        }
        // s has eigenvalues t and t^(-1) = 1 here, so s = identity
        assert!(space.is_unitary(&k, &red.s));
    }

    #[test]
    fn two_component_reduction_uses_distinct_norm_one_scalars() {
        let k = FieldPair::finite(2).unwrap();
        // (T-1)-primary Jordan block on a split plane, plus the scalar
        // omega on an anisotropic line ((T - omega)-primary)
        let gram = m(&k, &[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]);
        let space = HermitianSpace::new(&k, gram).unwrap();
        let gm = m(&k, &[&[1, 1, 0], &[0, 1, 0], &[0, 0, 2]]);
        let g = UnitaryElement::new(&k, &space, gm).unwrap();
        let profile = primary_decomposition(&k, &space, &g, None).unwrap();
        assert_eq!(profile.components.len(), 2);
        let red = build_s_and_reduce(&k, &space, &g, &profile).unwrap();
        let ts: Vec<u32> = red
            .scalars
            .iter()
            .map(|t| match t {
                Scalar::Fin(x) => *x,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(ts, vec![1, 2]); // 1 and omega, the first two norm-one powers
        // s commutes with gamma and is unitary
        assert!(space.is_unitary(&k, &red.s));
        assert!(red.s.matmul(&k, &g.mat).equal(&k, &g.mat.matmul(&k, &red.s)));
        // every piece is primary for a self-dual twisted polynomial
        for p in &red.pieces {
            let td = p.poly().conj_dual(&k).unwrap();
            assert!(td.equal(&k, p.poly()));
        }
        // twisting preserved the elementary divisors
        match (&red.pieces[0], &profile.components[0].divisors) {
            (Piece::Unitary { gamma, poly, .. }, divs) => {
                let part = primary_part(&k, gamma, poly).unwrap().unwrap();
                assert_eq!(&part.1, divs);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn field_too_small_reports_deficit() {
        let k = FieldPair::finite(2).unwrap();
        // four self-dual components but only q + 1 = 3 norm-one scalars
        let dummy = Component {
            class: SelfDualClass::SelfConjDual(Poly::linear(&k, &k.one())),
            divisors: vec![(1, 1)],
            basis: Subspace::zero(4),
            dual_basis: None,
        };
        let profile = DivisorProfile {
            components: vec![dummy.clone(), dummy.clone(), dummy.clone(), dummy],
        };
        match choose_scalars(&k, &profile) {
            Err(Error::FieldTooSmall { needed, available }) => {
                assert_eq!(needed, 4);
                assert_eq!(available, 3);
            }
            other => panic!("expected FieldTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn twist_poly_examples() {
        let k = FieldPair::finite(2).unwrap();
        let p = Poly::linear(&k, &k.one()); // T - 1
        let omega = k.constant(2);
        let tw = twist_poly(&k, &p, &omega).unwrap();
        // t^(-1) p(t T) = T - t^(-1) = T - omega^2
        let expected = Poly::linear(&k, &k.constant(3));
        assert!(tw.equal(&k, &expected));
        let back = twist_poly(&k, &tw, &k.inv(&omega).unwrap()).unwrap();
        assert!(back.equal(&k, &p));
    }
}
