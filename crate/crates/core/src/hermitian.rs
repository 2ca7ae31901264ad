//! Hermitian spaces via Gram matrices, the adjoint involution, and subspace
//! calculus with perpendiculars.
//!
//! Conventions: the form is `h(w, v) = conj(w)^t J v`, linear in the second
//! argument, with `conj(J)^t = J` and `J` invertible. Vectors are columns;
//! subspaces are stored as reduced-row-echelon row bases, which makes
//! equality representation-independent.

use crate::coefficients::{FieldPair, Scalar};
use crate::matrix::Mat;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct HermitianSpace {
    pub n: usize,
    pub gram: Mat,
    gram_inv: Mat,
}

impl HermitianSpace {
    pub fn new(k: &FieldPair, gram: Mat) -> Result<HermitianSpace> {
        if gram.rows != gram.cols {
            return Err(Error::InvalidInput("gram matrix must be square".into()));
        }
        if !gram.conj_transpose(k).equal(k, &gram) {
            return Err(Error::InvalidInput(
                "gram matrix is not hermitian (conj-transpose differs)".into(),
            ));
        }
        let gram_inv = gram
            .inverse(k)
            .map_err(|_| Error::InvalidInput("gram matrix is singular".into()))?;
        Ok(HermitianSpace {
            n: gram.rows,
            gram,
            gram_inv,
        })
    }

    /// Split form with antidiagonal-ones Gram matrix.
    pub fn split(k: &FieldPair, n: usize) -> HermitianSpace {
        let gram = Mat::from_fn(n, n, |i, j| {
            if i + j == n - 1 {
                k.one()
            } else {
                k.zero()
            }
        });
        HermitianSpace::new(k, gram).expect("split form is hermitian and invertible")
    }

    /// Identity Gram matrix. Over a finite pair every non-degenerate
    /// hermitian form is equivalent to this one.
    pub fn identity_form(k: &FieldPair, n: usize) -> HermitianSpace {
        HermitianSpace::new(k, Mat::identity(k, n)).expect("identity form is valid")
    }

    /// `h(w, v) = conj(w)^t J v`.
    pub fn pair(&self, k: &FieldPair, w: &[Scalar], v: &[Scalar]) -> Scalar {
        let jv = self.gram.apply(k, v);
        let mut acc = k.zero();
        for i in 0..self.n {
            acc = k.add(&acc, &k.mul(&k.conjugate(&w[i]), &jv[i]));
        }
        acc
    }

    /// Adjoint `g* = J^(-1) conj(g)^t J`.
    pub fn adjoint(&self, k: &FieldPair, g: &Mat) -> Mat {
        self.gram_inv
            .matmul(k, &g.conj_transpose(k))
            .matmul(k, &self.gram)
    }

    /// `conj(g)^t J g = J` to working precision.
    pub fn is_unitary(&self, k: &FieldPair, g: &Mat) -> bool {
        g.conj_transpose(k)
            .matmul(k, &self.gram)
            .matmul(k, g)
            .equal(k, &self.gram)
    }
}

/// A unitary element of `U(V, h)`, certified at construction.
#[derive(Clone, Debug)]
pub struct UnitaryElement {
    pub mat: Mat,
}

impl UnitaryElement {
    pub fn new(k: &FieldPair, space: &HermitianSpace, mat: Mat) -> Result<UnitaryElement> {
        if mat.rows != space.n || mat.cols != space.n {
            return Err(Error::InvalidInput("element has wrong dimensions".into()));
        }
        if !space.is_unitary(k, &mat) {
            return Err(Error::InvalidInput(
                "matrix does not preserve the hermitian form".into(),
            ));
        }
        Ok(UnitaryElement { mat })
    }
}

/// Subspace in canonical reduced-row-echelon form.
#[derive(Clone, Debug)]
pub struct Subspace {
    /// RREF rows spanning the subspace; `rows == dim`.
    pub basis: Mat,
    pub ambient: usize,
}

impl Subspace {
    pub fn zero(n: usize) -> Subspace {
        Subspace {
            basis: Mat::empty(n),
            ambient: n,
        }
    }

    pub fn full(k: &FieldPair, n: usize) -> Subspace {
        Subspace {
            basis: Mat::identity(k, n),
            ambient: n,
        }
    }

    /// Canonicalize a spanning set given as the rows of `m`.
    pub fn from_rows(k: &FieldPair, m: &Mat) -> Result<Subspace> {
        let rref = m.rref(k)?;
        let rank = rref.pivots.len();
        let rows = (0..rank).map(|i| rref.mat.row(i)).collect::<Vec<_>>();
        Ok(Subspace {
            basis: if rows.is_empty() {
                Mat::empty(m.cols)
            } else {
                Mat::from_rows(rows)
            },
            ambient: m.cols,
        })
    }

    /// Kernel of an operator (columns act on vectors).
    pub fn kernel_of(k: &FieldPair, op: &Mat) -> Result<Subspace> {
        let ker = op.right_kernel(k)?;
        Subspace::from_rows(k, &ker)
    }

    /// Column space of an operator.
    pub fn image_of(k: &FieldPair, op: &Mat) -> Result<Subspace> {
        Subspace::from_rows(k, &op.transpose())
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    /// Map the subspace through an operator: `span { op v : v in W }`.
    pub fn apply(&self, k: &FieldPair, op: &Mat) -> Result<Subspace> {
        if self.dim() == 0 {
            return Ok(Subspace::zero(self.ambient));
        }
        Subspace::from_rows(k, &self.basis.matmul(k, &op.transpose()))
    }

    pub fn contains_vec(&self, k: &FieldPair, v: &[Scalar]) -> Result<bool> {
        if self.dim() == 0 {
            return Ok(v.iter().all(|s| k.is_zero(s)));
        }
        // reduce v against the echelon basis
        let mut w = v.to_vec();
        for i in 0..self.basis.rows {
            // pivot column of row i is its first nonzero entry
            let pc = (0..self.ambient)
                .find(|&c| !k.is_zero(self.basis.at(i, c)))
                .expect("nonzero basis row");
            if k.is_zero(&w[pc]) {
                continue;
            }
            let f = k.div(&w[pc], self.basis.at(i, pc))?;
            for c in 0..self.ambient {
                w[c] = k.sub(&w[c], &k.mul(&f, self.basis.at(i, c)));
            }
        }
        Ok(w.iter().all(|s| k.is_zero(s)))
    }

    pub fn contains(&self, k: &FieldPair, other: &Subspace) -> Result<bool> {
        for i in 0..other.basis.rows {
            if !self.contains_vec(k, &other.basis.row(i))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equals(&self, k: &FieldPair, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.basis.equal(k, &other.basis)
    }

    pub fn sum(&self, k: &FieldPair, other: &Subspace) -> Result<Subspace> {
        assert_eq!(self.ambient, other.ambient);
        Subspace::from_rows(k, &Mat::stack(&self.basis, &other.basis))
    }

    pub fn intersect(&self, k: &FieldPair, other: &Subspace) -> Result<Subspace> {
        assert_eq!(self.ambient, other.ambient);
        let (r1, r2) = (self.dim(), other.dim());
        if r1 == 0 || r2 == 0 {
            return Ok(Subspace::zero(self.ambient));
        }
        // solve B1^t x = B2^t y; intersection vectors are B1^t x
        let a = Mat::from_fn(self.ambient, r1 + r2, |i, j| {
            if j < r1 {
                self.basis.at(j, i).clone()
            } else {
                k.neg(other.basis.at(j - r1, i))
            }
        });
        let ker = a.right_kernel(k)?;
        let mut rows = vec![];
        for r in 0..ker.rows {
            let xy = ker.row(r);
            let mut v = vec![k.zero(); self.ambient];
            for (j, x) in xy.iter().take(r1).enumerate() {
                for c in 0..self.ambient {
                    v[c] = k.add(&v[c], &k.mul(x, self.basis.at(j, c)));
                }
            }
            rows.push(v);
        }
        if rows.is_empty() {
            Ok(Subspace::zero(self.ambient))
        } else {
            Subspace::from_rows(k, &Mat::from_rows(rows))
        }
    }

    /// Pivot-selector matrix `E` with `E * v` the basis coordinates of any
    /// `v` in the subspace: the echelon basis makes coordinates readable
    /// off the pivot columns.
    pub fn coord_extractor(&self, k: &FieldPair) -> Mat {
        let r = self.dim();
        let mut e = Mat::zero(k, r, self.ambient);
        for i in 0..r {
            let pc = (0..self.ambient)
                .find(|&c| !k.is_zero(self.basis.at(i, c)))
                .expect("nonzero basis row");
            e.set(i, pc, k.one());
        }
        e
    }

    /// Coordinates of `v` in the subspace basis, if `v` lies in the subspace.
    pub fn coords_of(&self, k: &FieldPair, v: &[Scalar]) -> Result<Option<Vec<Scalar>>> {
        if self.dim() == 0 {
            return Ok(if v.iter().all(|s| k.is_zero(s)) {
                Some(vec![])
            } else {
                None
            });
        }
        self.basis.transpose().solve(k, v)
    }

    pub fn to_json(&self, k: &FieldPair) -> serde_json::Value {
        self.basis.to_json(k)
    }
}

/// `{ v : h(w, v) = 0 for all w in W }`.
pub fn perp(k: &FieldPair, space: &HermitianSpace, w: &Subspace) -> Result<Subspace> {
    if w.dim() == 0 {
        return Ok(Subspace::full(k, space.n));
    }
    let rows = w.basis.conj(k).matmul(k, &space.gram);
    Subspace::kernel_of(k, &rows)
}

/// Restriction of the form to a subspace.
#[derive(Clone, Debug)]
pub enum RestrictedForm {
    /// Gram matrix of `h` on the subspace basis; invertible.
    Nondegenerate(Mat),
    /// Nonzero but singular restricted Gram matrix.
    Degenerate(Mat),
    TotallyIsotropic,
}

pub fn restrict_form(k: &FieldPair, space: &HermitianSpace, w: &Subspace) -> Result<RestrictedForm> {
    let d = w.dim();
    if d == 0 {
        return Ok(RestrictedForm::Nondegenerate(Mat::empty(0)));
    }
    let gram = w
        .basis
        .conj(k)
        .matmul(k, &space.gram)
        .matmul(k, &w.basis.transpose());
    if gram.is_zero(k) {
        return Ok(RestrictedForm::TotallyIsotropic);
    }
    match gram.inverse(k) {
        Ok(_) => Ok(RestrictedForm::Nondegenerate(gram)),
        Err(Error::SingularMatrix) => Ok(RestrictedForm::Degenerate(gram)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::FieldPair;

    fn m(k: &FieldPair, entries: &[&[u32]]) -> Mat {
        Mat::from_fn(entries.len(), entries[0].len(), |i, j| {
            k.constant(entries[i][j])
        })
    }

    #[test]
    fn adjoint_formula_on_split_form() {
        let k = FieldPair::finite(2).unwrap();
        let space = HermitianSpace::split(&k, 2);
        let g = m(&k, &[&[1, 1], &[0, 1]]);
        let adj = space.adjoint(&k, &g);
        // J^(-1) conj(g)^t J computed directly gives g back here
        assert!(adj.equal(&k, &g));
        // defining property h(w, g v) = h(g* w, v) on basis vectors
        for i in 0..2 {
            for j in 0..2 {
                let mut ei = vec![k.zero(); 2];
                ei[i] = k.one();
                let mut ej = vec![k.zero(); 2];
                ej[j] = k.one();
                let gv = g.apply(&k, &ej);
                let gsw = adj.apply(&k, &ei);
                let lhs = space.pair(&k, &ei, &gv);
                let rhs = space.pair(&k, &gsw, &ej);
                assert!(k.equal(&lhs, &rhs));
            }
        }
        // identity is self-adjoint
        let id = Mat::identity(&k, 2);
        assert!(space.adjoint(&k, &id).equal(&k, &id));
        // diag(omega, omega) has adjoint diag(omega^2, omega^2) = inverse
        let omega = k.constant(2);
        let d = Mat::identity(&k, 2).scale(&k, &omega);
        let dadj = space.adjoint(&k, &d);
        let dinv = d.inverse(&k).unwrap();
        assert!(dadj.equal(&k, &dinv));
    }

    #[test]
    fn adjoint_is_an_antiautomorphism_of_order_two() {
        let k = FieldPair::finite(3).unwrap();
        let space = HermitianSpace::split(&k, 3);
        let mut rng = crate::rng::SplitMix64::new(5);
        for _ in 0..25 {
            let a = Mat::from_fn(3, 3, |_, _| k.constant(rng.below(k.qq as u64) as u32));
            let b = Mat::from_fn(3, 3, |_, _| k.constant(rng.below(k.qq as u64) as u32));
            let lhs = space.adjoint(&k, &a.matmul(&k, &b));
            let rhs = space
                .adjoint(&k, &b)
                .matmul(&k, &space.adjoint(&k, &a));
            assert!(lhs.equal(&k, &rhs));
            assert!(space.adjoint(&k, &space.adjoint(&k, &a)).equal(&k, &a));
        }
    }

    #[test]
    fn is_unitary_examples() {
        let k = FieldPair::finite(2).unwrap();
        let space = HermitianSpace::split(&k, 2);
        assert!(space.is_unitary(&k, &m(&k, &[&[1, 1], &[0, 1]])));
        assert!(space.is_unitary(&k, &Mat::identity(&k, 2)));
        // diag(omega, 1) scales the pairing
        let bad = m(&k, &[&[2, 0], &[0, 1]]);
        assert!(!space.is_unitary(&k, &bad));
    }

    #[test]
    fn unitary_elements_preserve_all_basis_pairings() {
        let k = FieldPair::finite(2).unwrap();
        let space = HermitianSpace::split(&k, 2);
        let g = m(&k, &[&[1, 1], &[0, 1]]);
        for i in 0..2 {
            for j in 0..2 {
                let mut ei = vec![k.zero(); 2];
                ei[i] = k.one();
                let mut ej = vec![k.zero(); 2];
                ej[j] = k.one();
                let gi = g.apply(&k, &ei);
                let gj = g.apply(&k, &ej);
                assert!(k.equal(&space.pair(&k, &gi, &gj), &space.pair(&k, &ei, &ej)));
            }
        }
    }

    #[test]
    fn perp_examples_and_involution() {
        let k = FieldPair::finite(2).unwrap();
        let space = HermitianSpace::split(&k, 2);
        let e1 = Subspace::from_rows(&k, &m(&k, &[&[1, 0]])).unwrap();
        let p = perp(&k, &space, &e1).unwrap();
        // h(e1, v) = v_2, so the perp is e1 again
        assert!(p.equals(&k, &e1));
        assert!(perp(&k, &space, &p).unwrap().equals(&k, &e1));

        let zero = Subspace::zero(2);
        assert_eq!(perp(&k, &space, &zero).unwrap().dim(), 2);
        let full = Subspace::full(&k, 2);
        assert_eq!(perp(&k, &space, &full).unwrap().dim(), 0);
    }

    #[test]
    fn perp_dimension_count_on_samples() {
        let k = FieldPair::finite(3).unwrap();
        let space = HermitianSpace::split(&k, 3);
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..40 {
            let rows = 1 + (rng.below(3) as usize);
            let m = Mat::from_fn(rows, 3, |_, _| k.constant(rng.below(k.qq as u64) as u32));
            let w = Subspace::from_rows(&k, &m).unwrap();
            let p = perp(&k, &space, &w).unwrap();
            assert_eq!(w.dim() + p.dim(), 3);
            assert!(perp(&k, &space, &p).unwrap().equals(&k, &w));
        }
    }

    #[test]
    fn restrict_form_dichotomy() {
        let k = FieldPair::finite(2).unwrap();
        let space = HermitianSpace::split(&k, 2);
        let e1 = Subspace::from_rows(&k, &m(&k, &[&[1, 0]])).unwrap();
        assert!(matches!(
            restrict_form(&k, &space, &e1).unwrap(),
            RestrictedForm::TotallyIsotropic
        ));
        let full = Subspace::full(&k, 2);
        match restrict_form(&k, &space, &full).unwrap() {
            RestrictedForm::Nondegenerate(g) => assert!(g.equal(&k, &space.gram)),
            other => panic!("expected nondegenerate, got {other:?}"),
        }
        // span(e1 + e2) in characteristic 2: h-value J12 + J21 = 0
        let diag = Subspace::from_rows(&k, &m(&k, &[&[1, 1]])).unwrap();
        assert!(matches!(
            restrict_form(&k, &space, &diag).unwrap(),
            RestrictedForm::TotallyIsotropic
        ));
    }

    #[test]
    fn standard_forms_pass_invariants() {
        for q in [2u32, 3] {
            let k = FieldPair::finite(q).unwrap();
            for n in 1..=3 {
                let s = HermitianSpace::split(&k, n);
                assert!(s.gram.conj_transpose(&k).equal(&k, &s.gram));
                let i = HermitianSpace::identity_form(&k, n);
                assert!(i.gram.conj_transpose(&k).equal(&k, &i.gram));
            }
        }
        let k = FieldPair::finite(2).unwrap();
        let s1 = HermitianSpace::split(&k, 1);
        assert!(s1.gram.equal(&k, &Mat::identity(&k, 1)));
    }

    #[test]
    fn subspace_canonical_form_is_representation_independent() {
        let k = FieldPair::finite(2).unwrap();
        let a = Subspace::from_rows(&k, &m(&k, &[&[1, 1, 0], &[0, 0, 1]])).unwrap();
        let b = Subspace::from_rows(&k, &m(&k, &[&[1, 1, 1], &[0, 0, 1], &[1, 1, 0]])).unwrap();
        assert!(a.equals(&k, &b));
        let c = a.intersect(&k, &b).unwrap();
        assert!(c.equals(&k, &a));
        let s = a.sum(&k, &b).unwrap();
        assert!(s.equals(&k, &a));
    }
}
