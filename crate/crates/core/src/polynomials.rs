//! Univariate polynomial algebra over the extension field `E`.
//!
//! Provides the conjugate and dual operations on monic polynomials, gcd,
//! matrix characteristic/minimal polynomials, and complete factorization
//! over the finite instantiation.
//!
//! Factorization is by trial division against monic candidates enumerated
//! in the canonical polynomial ordering (degree first, then the serialized
//! coefficient sequence read as a base-`q^2` key, constant term least
//! significant). Once all factors of degree `< d` are removed, any degree-`d`
//! divisor is irreducible, and a remainder with no divisor of degree at most
//! half its own is irreducible. At the field sizes supported here this is
//! fully deterministic and fast; factorization over the truncated local pair
//! is rejected rather than approximated.

use crate::coefficients::{FieldPair, PairKind, Scalar};
use crate::matrix::Mat;
use crate::{Error, Result};

/// Coefficients ascending; normalized so the leading coefficient is nonzero
/// (to working precision). The zero polynomial has no coefficients.
#[derive(Clone, Debug)]
pub struct Poly {
    pub coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { coeffs: vec![] }
    }

    pub fn new(k: &FieldPair, coeffs: Vec<Scalar>) -> Poly {
        let mut p = Poly { coeffs };
        p.normalize(k);
        p
    }

    pub fn constant(k: &FieldPair, c: Scalar) -> Poly {
        Poly::new(k, vec![c])
    }

    pub fn one(k: &FieldPair) -> Poly {
        Poly::constant(k, k.one())
    }

    /// `T - root`.
    pub fn linear(k: &FieldPair, root: &Scalar) -> Poly {
        Poly::new(k, vec![k.neg(root), k.one()])
    }

    /// Monic polynomial from residue-index coefficients of the non-leading
    /// part, ascending.
    pub fn monic_from_indices(k: &FieldPair, lower: &[u32]) -> Poly {
        let mut coeffs: Vec<Scalar> = lower.iter().map(|&c| k.constant(c)).collect();
        coeffs.push(k.one());
        Poly::new(k, coeffs)
    }

    fn normalize(&mut self, k: &FieldPair) {
        while self.coeffs.last().map(|c| k.is_zero(c)).unwrap_or(false) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn leading(&self, k: &FieldPair) -> Scalar {
        self.coeffs.last().cloned().unwrap_or_else(|| k.zero())
    }

    pub fn constant_term(&self, k: &FieldPair) -> Scalar {
        self.coeffs.first().cloned().unwrap_or_else(|| k.zero())
    }

    pub fn is_monic(&self, k: &FieldPair) -> bool {
        self.coeffs.last().map(|c| k.is_one(c)).unwrap_or(false)
    }

    pub fn equal(&self, k: &FieldPair, other: &Poly) -> bool {
        let n = self.coeffs.len().max(other.coeffs.len());
        for i in 0..n {
            let a = self.coeffs.get(i).cloned().unwrap_or_else(|| k.zero());
            let b = other.coeffs.get(i).cloned().unwrap_or_else(|| k.zero());
            if !k.equal(&a, &b) {
                return false;
            }
        }
        true
    }

    pub fn add(&self, k: &FieldPair, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(|| k.zero());
                let b = other.coeffs.get(i).cloned().unwrap_or_else(|| k.zero());
                k.add(&a, &b)
            })
            .collect();
        Poly::new(k, coeffs)
    }

    pub fn neg(&self, k: &FieldPair) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| k.neg(c)).collect(),
        }
    }

    pub fn sub(&self, k: &FieldPair, other: &Poly) -> Poly {
        self.add(k, &other.neg(k))
    }

    pub fn mul(&self, k: &FieldPair, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![k.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = k.add(&coeffs[i + j], &k.mul(a, b));
            }
        }
        Poly::new(k, coeffs)
    }

    pub fn scale(&self, k: &FieldPair, s: &Scalar) -> Poly {
        Poly::new(k, self.coeffs.iter().map(|c| k.mul(c, s)).collect())
    }

    pub fn pow(&self, k: &FieldPair, e: u32) -> Poly {
        let mut acc = Poly::one(k);
        for _ in 0..e {
            acc = acc.mul(k, self);
        }
        acc
    }

    /// Euclidean division by a polynomial with invertible leading coefficient.
    pub fn divmod(&self, k: &FieldPair, div: &Poly) -> Result<(Poly, Poly)> {
        let dd = div
            .degree()
            .ok_or_else(|| Error::InvalidInput("division by zero polynomial".into()))?;
        let lead_inv = k.inv(&div.leading(k))?;
        let mut rem = self.coeffs.clone();
        let mut quo = vec![k.zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd {
            let deg = rem.len() - 1;
            let c = k.mul(rem.last().unwrap(), &lead_inv);
            let shift = deg - dd;
            for i in 0..=dd {
                let sub = k.mul(&c, &div.coeffs[i]);
                rem[shift + i] = k.sub(&rem[shift + i], &sub);
            }
            quo[shift] = c;
            // the top coefficient cancels by construction
            rem.pop();
            while rem.last().map(|x| k.is_zero(x)).unwrap_or(false) {
                rem.pop();
            }
        }
        Ok((Poly::new(k, quo), Poly::new(k, rem)))
    }

    pub fn divides(&self, k: &FieldPair, target: &Poly) -> Result<bool> {
        let (_, r) = target.divmod(k, self)?;
        Ok(r.is_zero())
    }

    /// Monic gcd.
    pub fn gcd(&self, k: &FieldPair, other: &Poly) -> Result<Poly> {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divmod(k, &b)?;
            a = b;
            b = r;
        }
        if a.is_zero() {
            return Ok(a);
        }
        let li = k.inv(&a.leading(k))?;
        Ok(a.scale(k, &li))
    }

    pub fn lcm(&self, k: &FieldPair, other: &Poly) -> Result<Poly> {
        if self.is_zero() || other.is_zero() {
            return Ok(Poly::zero());
        }
        let g = self.gcd(k, other)?;
        let (q, _) = self.mul(k, other).divmod(k, &g)?;
        let li = k.inv(&q.leading(k))?;
        Ok(q.scale(k, &li))
    }

    pub fn derivative(&self, k: &FieldPair) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mult = k.from_int((i + 1) as i64);
                k.mul(c, &mult)
            })
            .collect();
        Poly::new(k, coeffs)
    }

    pub fn eval(&self, k: &FieldPair, x: &Scalar) -> Scalar {
        let mut acc = k.zero();
        for c in self.coeffs.iter().rev() {
            acc = k.add(&k.mul(&acc, x), c);
        }
        acc
    }

    pub fn eval_matrix(&self, k: &FieldPair, m: &Mat) -> Mat {
        let n = m.rows;
        let mut acc = Mat::zero(k, n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc.matmul(k, m);
            for i in 0..n {
                acc.set(i, i, k.add(acc.at(i, i), c));
            }
        }
        acc
    }

    /// Coefficientwise conjugation.
    pub fn conj(&self, k: &FieldPair) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| k.conjugate(c)).collect(),
        }
    }

    /// Dual polynomial `f(0)^(-1) T^d f(1/T)` of a monic `f` with `f(0) != 0`.
    pub fn dual(&self, k: &FieldPair) -> Result<Poly> {
        let c0 = self.constant_term(k);
        if k.is_zero(&c0) {
            return Err(Error::ZeroConstantTerm);
        }
        let inv = k.inv(&c0)?;
        let mut coeffs: Vec<Scalar> = self.coeffs.iter().rev().cloned().collect();
        for c in coeffs.iter_mut() {
            *c = k.mul(c, &inv);
        }
        Ok(Poly::new(k, coeffs))
    }

    /// Conjugate-dual `conj(f)^dual`; an involution on monic polynomials with
    /// nonzero constant term, multiplicative in `f`.
    pub fn conj_dual(&self, k: &FieldPair) -> Result<Poly> {
        self.conj(k).dual(k)
    }

    /// Canonical comparison key: degree first, then the coefficient index
    /// sequence from the constant term up. Finite pair only.
    pub fn canonical_key(&self, _k: &FieldPair) -> Vec<u64> {
        let mut key = vec![self.coeffs.len() as u64];
        for c in &self.coeffs {
            match c {
                Scalar::Fin(x) => key.push(*x as u64),
                Scalar::Loc(_) => panic!("canonical ordering requires the finite pair"),
            }
        }
        key
    }

    /// Trial-division irreducibility test over the finite pair.
    pub fn is_irreducible(&self, k: &FieldPair) -> Result<bool> {
        let d = match self.degree() {
            None | Some(0) => return Ok(false),
            Some(1) => return Ok(true),
            Some(d) => d,
        };
        if k.kind != PairKind::Finite {
            return Err(Error::UnsupportedField(
                "irreducibility testing requires the finite pair".into(),
            ));
        }
        for cd in 1..=d / 2 {
            let count = (k.qq as u64).pow(cd as u32);
            for key in 0..count {
                let cand = monic_by_key(k, cd, key);
                if cand.divides(k, self)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Complete factorization into monic irreducibles with multiplicities,
    /// in canonical polynomial order. The product of the factors times the
    /// leading coefficient reproduces the input.
    pub fn factor(&self, k: &FieldPair) -> Result<Vec<(Poly, usize)>> {
        if k.kind != PairKind::Finite {
            return Err(Error::UnsupportedField(
                "factorization requires the finite pair".into(),
            ));
        }
        if self.is_zero() {
            return Err(Error::InvalidInput("cannot factor the zero polynomial".into()));
        }
        let li = k.inv(&self.leading(k))?;
        let mut rem = self.scale(k, &li);
        let mut out: Vec<(Poly, usize)> = vec![];
        let mut d = 1usize;
        while rem.degree().unwrap_or(0) > 0 {
            let rd = rem.degree().unwrap();
            if d > rd / 2 {
                // nothing of degree <= rd/2 divides, so the remainder is irreducible
                out.push((rem, 1));
                break;
            }
            let count = (k.qq as u64).pow(d as u32);
            for key in 0..count {
                if rem.degree().unwrap_or(0) < d {
                    break;
                }
                let cand = monic_by_key(k, d, key);
                let mut mult = 0usize;
                loop {
                    let (q, r) = rem.divmod(k, &cand)?;
                    if r.is_zero() {
                        mult += 1;
                        rem = q;
                    } else {
                        break;
                    }
                }
                if mult > 0 {
                    out.push((cand, mult));
                }
            }
            d += 1;
        }
        Ok(out)
    }

    pub fn to_json(&self, k: &FieldPair) -> serde_json::Value {
        serde_json::Value::Array(self.coeffs.iter().map(|c| k.scalar_to_json(c)).collect())
    }

    pub fn from_json(k: &FieldPair, v: &serde_json::Value) -> Result<Poly> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::InvalidInput("polynomial must be a coefficient array".into()))?;
        let coeffs = arr
            .iter()
            .map(|c| k.scalar_from_json(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Poly::new(k, coeffs))
    }

    /// Companion matrix of a monic polynomial of positive degree.
    pub fn companion(&self, k: &FieldPair) -> Mat {
        let d = self.degree().expect("companion of nonzero polynomial");
        assert!(d > 0 && self.is_monic(k));
        Mat::from_fn(d, d, |i, j| {
            if j + 1 == d {
                k.neg(&self.coeffs[i])
            } else if i == j + 1 {
                k.one()
            } else {
                k.zero()
            }
        })
    }

    pub fn display(&self, k: &FieldPair) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !k.is_zero(c))
            .map(|(i, c)| format!("{}*T^{}", k.scalar_display(c), i))
            .collect();
        terms.join(" + ")
    }
}

/// The monic degree-`d` polynomial whose non-leading coefficients are the
/// base-`q^2` digits of `key`, constant term least significant.
pub fn monic_by_key(k: &FieldPair, d: usize, key: u64) -> Poly {
    let mut lower = vec![0u32; d];
    let mut m = key;
    for c in lower.iter_mut() {
        *c = (m % k.qq as u64) as u32;
        m /= k.qq as u64;
    }
    Poly::monic_from_indices(k, &lower)
}

/// Characteristic and minimal polynomials of a square matrix.
///
/// The characteristic polynomial is division-free; the minimal polynomial is
/// the least common multiple of the cyclic annihilators of the standard
/// basis vectors, found by Krylov iteration.
pub fn charpoly_and_minpoly(k: &FieldPair, g: &Mat) -> Result<(Poly, Poly)> {
    assert_eq!(g.rows, g.cols);
    let n = g.rows;
    let charpoly = Poly::new(k, g.charpoly(k));
    let mut min = Poly::one(k);
    for b in 0..n {
        let mut v = vec![k.zero(); n];
        v[b] = k.one();
        // iterate v, g v, g^2 v, ... until linear dependence
        let mut iterates: Vec<Vec<Scalar>> = vec![v.clone()];
        loop {
            let last = iterates.last().unwrap();
            let next = g.apply(k, last);
            // solve for next as a combination of previous iterates
            let m = Mat::from_fn(n, iterates.len(), |i, j| iterates[j][i].clone());
            if let Some(x) = m.solve(k, &next)? {
                // monic annihilator: T^j - sum x_i T^i
                let mut coeffs: Vec<Scalar> = x.iter().map(|c| k.neg(c)).collect();
                coeffs.push(k.one());
                let ann = Poly::new(k, coeffs);
                min = min.lcm(k, &ann)?;
                break;
            }
            iterates.push(next);
            if iterates.len() > n + 1 {
                return Err(Error::InternalInvariantViolation(
                    "Krylov iteration failed to terminate".into(),
                ));
            }
        }
    }
    Ok((charpoly, min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::FieldPair;
    use crate::matrix::Mat;

    #[test]
    fn conj_dual_fixed_points_over_f4() {
        let k = FieldPair::finite(2).unwrap();
        let omega = k.constant(2);
        // T + omega: dual is T + omega^2, conjugation brings it back
        let f = Poly::new(&k, vec![omega.clone(), k.one()]);
        let fd = f.conj_dual(&k).unwrap();
        assert!(fd.equal(&k, &f));
        // palindromic base-field polynomial is fixed
        let g = Poly::monic_from_indices(&k, &[1, 1]); // T^2 + T + 1
        assert!(g.conj_dual(&k).unwrap().equal(&k, &g));
    }

    #[test]
    fn conj_dual_moves_f9_generator_root() {
        let k = FieldPair::finite(3).unwrap();
        let g = k.constant(k.generator);
        let f = Poly::linear(&k, &g); // T - g
        let fd = f.conj_dual(&k).unwrap();
        // dual root is conj(g)^(-1) = g^(-3) = g^5 != g
        let expected_root = k.pow(&g, 5);
        let expected = Poly::linear(&k, &expected_root);
        assert!(fd.equal(&k, &expected));
        assert!(!fd.equal(&k, &f));
        // involution
        assert!(fd.conj_dual(&k).unwrap().equal(&k, &f));
    }

    #[test]
    fn conj_dual_rejects_zero_constant_term() {
        let k = FieldPair::finite(2).unwrap();
        let f = Poly::monic_from_indices(&k, &[0]); // T
        assert!(matches!(f.conj_dual(&k), Err(Error::ZeroConstantTerm)));
    }

    #[test]
    fn factor_spec_examples_over_f4() {
        let k = FieldPair::finite(2).unwrap();
        // (T+1)^2
        let tp1 = Poly::monic_from_indices(&k, &[1]);
        let sq = tp1.mul(&k, &tp1);
        let f = sq.factor(&k).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].1, 2);
        assert!(f[0].0.equal(&k, &tp1));

        // T^2 + T + 1 = (T+omega)(T+omega^2)
        let g = Poly::monic_from_indices(&k, &[1, 1]);
        let fg = g.factor(&k).unwrap();
        assert_eq!(fg.len(), 2);
        let product = fg
            .iter()
            .fold(Poly::one(&k), |acc, (p, m)| acc.mul(&k, &p.pow(&k, *m as u32)));
        assert!(product.equal(&k, &g));
        let roots: Vec<_> = fg.iter().map(|(p, _)| k.neg(&p.constant_term(&k))).collect();
        for r in &roots {
            assert!(k.is_zero(&g.eval(&k, r)));
        }

        // T^3 + 1 = (T+1)(T+omega)(T+omega^2) in characteristic 2
        let h = Poly::monic_from_indices(&k, &[1, 0, 0]);
        let fh = h.factor(&k).unwrap();
        assert_eq!(fh.len(), 3);
        assert!(fh.iter().all(|(p, m)| p.degree() == Some(1) && *m == 1));
    }

    #[test]
    fn factor_output_is_canonically_ordered_and_multiplies_back() {
        let k = FieldPair::finite(3).unwrap();
        let a = Poly::monic_from_indices(&k, &[2]); // T + 2
        let b = Poly::monic_from_indices(&k, &[1, 1]); // T^2 + T + 1 over F_9: may split
        let f = a.pow(&k, 2).mul(&k, &b);
        let factors = f.factor(&k).unwrap();
        let product = factors
            .iter()
            .fold(Poly::one(&k), |acc, (p, m)| acc.mul(&k, &p.pow(&k, *m as u32)));
        assert!(product.equal(&k, &f));
        // canonical order: keys strictly increasing
        let keys: Vec<_> = factors.iter().map(|(p, _)| p.canonical_key(&k)).collect();
        for w in keys.windows(2) {
            assert!(w[0] < w[1]);
        }
        // every factor passes the independent irreducibility test
        for (p, _) in &factors {
            assert!(p.is_irreducible(&k).unwrap());
        }
    }

    #[test]
    fn factorization_rejected_over_local_pair() {
        let k = FieldPair::truncated_local(2, 3).unwrap();
        let f = Poly::new(&k, vec![k.one(), k.one()]);
        assert!(matches!(f.factor(&k), Err(Error::UnsupportedField(_))));
    }

    #[test]
    fn charpoly_minpoly_examples() {
        let k = FieldPair::finite(2).unwrap();
        let id = Mat::identity(&k, 2);
        let (cp, mp) = charpoly_and_minpoly(&k, &id).unwrap();
        let tp1 = Poly::monic_from_indices(&k, &[1]);
        assert!(cp.equal(&k, &tp1.mul(&k, &tp1)));
        assert!(mp.equal(&k, &tp1));

        let jordan = Mat::from_fn(2, 2, |i, j| {
            if i == j || (i == 0 && j == 1) {
                k.one()
            } else {
                k.zero()
            }
        });
        let (cp2, mp2) = charpoly_and_minpoly(&k, &jordan).unwrap();
        assert!(cp2.equal(&k, &mp2));
        assert_eq!(mp2.degree(), Some(2));
        assert!(mp2.eval_matrix(&k, &jordan).is_zero(&k));

        let omega = k.constant(2);
        let scalar = Mat::identity(&k, 2).scale(&k, &omega);
        let (cp3, mp3) = charpoly_and_minpoly(&k, &scalar).unwrap();
        let t_minus_omega = Poly::linear(&k, &omega);
        assert!(mp3.equal(&k, &t_minus_omega));
        assert!(cp3.equal(&k, &t_minus_omega.mul(&k, &t_minus_omega)));
    }

    #[test]
    fn factor_at_the_largest_supported_extension() {
        // q = 9 puts |E| = 81 on the documented deterministic boundary
        let k = FieldPair::finite(9).unwrap();
        let a = Poly::linear(&k, &k.one());
        let b = Poly::linear(&k, &k.constant(k.generator));
        let f = a.mul(&k, &b).mul(&k, &b);
        let factors = f.factor(&k).unwrap();
        assert_eq!(factors.len(), 2);
        let product = factors
            .iter()
            .fold(Poly::one(&k), |acc, (p, m)| acc.mul(&k, &p.pow(&k, *m as u32)));
        assert!(product.equal(&k, &f));
        assert!(factors.iter().any(|(_, m)| *m == 2));
    }

    #[test]
    fn divmod_and_gcd() {
        let k = FieldPair::finite(3).unwrap();
        let a = Poly::monic_from_indices(&k, &[1, 2, 0]); // cubic
        let b = Poly::monic_from_indices(&k, &[2, 1]);
        let (q, r) = a.divmod(&k, &b).unwrap();
        let back = q.mul(&k, &b).add(&k, &r);
        assert!(back.equal(&k, &a));
        let g = a.mul(&k, &b).gcd(&k, &b).unwrap();
        assert!(g.equal(&k, &b));
    }
}
