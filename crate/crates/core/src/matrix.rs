//! Dense matrices over a [`FieldPair`] scalar domain.
//!
//! Everything downstream reduces to this layer: reduced row echelon form
//! (the canonical representative used for subspaces), kernels, inverses,
//! and the division-free characteristic polynomial. Over the truncated
//! local pair, echelonization pivots on the entry of minimal determinate
//! valuation (ties broken by row position) and fails with `PrecisionLoss`
//! when an indeterminate entry could beat the chosen pivot.

use crate::coefficients::{FieldPair, PairKind, Scalar};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Scalar>,
}

/// Result of reduced row echelonization.
#[derive(Clone, Debug)]
pub struct Rref {
    pub mat: Mat,
    pub pivots: Vec<usize>,
}

impl Mat {
    pub fn zero(k: &FieldPair, rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![k.zero(); rows * cols],
        }
    }

    pub fn identity(k: &FieldPair, n: usize) -> Mat {
        let mut m = Mat::zero(k, n, n);
        for i in 0..n {
            m.set(i, i, k.one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Mat {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c));
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn empty(cols: usize) -> Mat {
        Mat {
            rows: 0,
            cols,
            data: vec![],
        }
    }

    /// Square diagonal-block matrix assembled from the given blocks.
    pub fn block_diag(k: &FieldPair, blocks: &[Mat]) -> Mat {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let mut m = Mat::zero(k, n, n);
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, b.cols);
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m.set(off + i, off + j, b.at(i, j).clone());
                }
            }
            off += b.rows;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<Scalar> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn stack(top: &Mat, bottom: &Mat) -> Mat {
        assert_eq!(top.cols, bottom.cols);
        let mut data = top.data.clone();
        data.extend(bottom.data.iter().cloned());
        Mat {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn conj(&self, k: &FieldPair) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| k.conjugate(self.at(i, j)))
    }

    pub fn conj_transpose(&self, k: &FieldPair) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| k.conjugate(self.at(j, i)))
    }

    pub fn add(&self, k: &FieldPair, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| {
            k.add(self.at(i, j), other.at(i, j))
        })
    }

    pub fn sub(&self, k: &FieldPair, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| {
            k.sub(self.at(i, j), other.at(i, j))
        })
    }

    pub fn neg(&self, k: &FieldPair) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| k.neg(self.at(i, j)))
    }

    pub fn scale(&self, k: &FieldPair, s: &Scalar) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| k.mul(self.at(i, j), s))
    }

    pub fn matmul(&self, k: &FieldPair, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        Mat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = k.zero();
            for l in 0..self.cols {
                acc = k.add(&acc, &k.mul(self.at(i, l), other.at(l, j)));
            }
            acc
        })
    }

    pub fn apply(&self, k: &FieldPair, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = k.zero();
                for j in 0..self.cols {
                    acc = k.add(&acc, &k.mul(self.at(i, j), &v[j]));
                }
                acc
            })
            .collect()
    }

    pub fn pow(&self, k: &FieldPair, e: u64) -> Mat {
        assert_eq!(self.rows, self.cols);
        let mut acc = Mat::identity(k, self.rows);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(k, &base);
            }
            base = base.matmul(k, &base);
            e >>= 1;
        }
        acc
    }

    pub fn is_zero(&self, k: &FieldPair) -> bool {
        self.data.iter().all(|s| k.is_zero(s))
    }

    pub fn equal(&self, k: &FieldPair, other: &Mat) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| k.equal(a, b))
    }

    fn pick_pivot(&self, k: &FieldPair, rows_from: usize, col: usize) -> Result<Option<usize>> {
        match k.kind {
            PairKind::Finite => {
                for i in rows_from..self.rows {
                    if !k.is_zero(self.at(i, col)) {
                        return Ok(Some(i));
                    }
                }
                Ok(None)
            }
            PairKind::TruncatedLocal => {
                let mut best: Option<(i64, usize)> = None;
                let mut worst_unknown: Option<i64> = None;
                for i in rows_from..self.rows {
                    let s = self.at(i, col);
                    match k.val(s) {
                        Ok(v) => {
                            if best.map(|(bv, _)| v < bv).unwrap_or(true) {
                                best = Some((v, i));
                            }
                        }
                        Err(_) => {
                            // zero at working precision; remember how deep we know it
                            let bound = k.val_lower_bound(s).unwrap();
                            if worst_unknown.map(|w| bound < w).unwrap_or(true) {
                                worst_unknown = Some(bound);
                            }
                        }
                    }
                }
                match best {
                    None => Ok(None),
                    Some((v, i)) => {
                        if let Some(w) = worst_unknown {
                            if w <= v {
                                return Err(Error::PrecisionLoss(format!(
                                    "pivot ambiguous in column {col}: chosen valuation {v}, \
                                     but an entry is only known to be O(t^{w})"
                                )));
                            }
                        }
                        Ok(Some(i))
                    }
                }
            }
        }
    }

    /// Reduced row echelon form with unit pivots. Canonical per row space
    /// over the finite pair; canonical to working precision over the local
    /// pair.
    pub fn rref(&self, k: &FieldPair) -> Result<Rref> {
        let mut m = self.clone();
        let mut pivots = vec![];
        let mut r = 0usize;
        for col in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = m.pick_pivot(k, r, col)? else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    let a = m.at(r, j).clone();
                    let b = m.at(pr, j).clone();
                    m.set(r, j, b);
                    m.set(pr, j, a);
                }
            }
            let inv = k.inv(m.at(r, col))?;
            for j in 0..m.cols {
                let v = k.mul(m.at(r, j), &inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || k.is_zero(m.at(i, col)) {
                    continue;
                }
                let f = m.at(i, col).clone();
                for j in 0..m.cols {
                    let v = k.sub(m.at(i, j), &k.mul(&f, m.at(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(col);
            r += 1;
        }
        Ok(Rref { mat: m, pivots })
    }

    pub fn rank(&self, k: &FieldPair) -> Result<usize> {
        Ok(self.rref(k)?.pivots.len())
    }

    /// Basis of `{ v : A v = 0 }`, one kernel vector per row.
    pub fn right_kernel(&self, k: &FieldPair) -> Result<Mat> {
        let rref = self.rref(k)?;
        let piv = &rref.pivots;
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        let mut rows = vec![];
        for &f in &free {
            let mut v = vec![k.zero(); self.cols];
            v[f] = k.one();
            for (i, &pc) in piv.iter().enumerate() {
                v[pc] = k.neg(rref.mat.at(i, f));
            }
            rows.push(v);
        }
        if rows.is_empty() {
            Ok(Mat::empty(self.cols))
        } else {
            Ok(Mat::from_rows(rows))
        }
    }

    pub fn inverse(&self, k: &FieldPair) -> Result<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Mat::zero(k, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.at(i, j).clone());
            }
            aug.set(i, n + i, k.one());
        }
        let rref = aug.rref(k)?;
        if rref.pivots.len() < n || rref.pivots.iter().take(n).enumerate().any(|(i, &p)| p != i) {
            return Err(Error::SingularMatrix);
        }
        Ok(Mat::from_fn(n, n, |i, j| rref.mat.at(i, n + j).clone()))
    }

    /// Solve `A x = b`; `None` when inconsistent.
    pub fn solve(&self, k: &FieldPair, b: &[Scalar]) -> Result<Option<Vec<Scalar>>> {
        assert_eq!(self.rows, b.len());
        let mut aug = Mat::zero(k, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.at(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let rref = aug.rref(k)?;
        if rref.pivots.contains(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![k.zero(); self.cols];
        for (i, &p) in rref.pivots.iter().enumerate() {
            x[p] = rref.mat.at(i, self.cols).clone();
        }
        Ok(Some(x))
    }

    /// Characteristic polynomial coefficients, constant term first, by the
    /// Samuelson--Berkowitz scheme. Division-free, so precision-safe over
    /// the local pair.
    pub fn charpoly(&self, k: &FieldPair) -> Vec<Scalar> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        // coefficients leading-first for the trailing principal submatrix
        let mut cp: Vec<Scalar> = vec![k.one()];
        for i in (0..n).rev() {
            let m_dim = n - i - 1;
            let a = self.at(i, i).clone();
            // w = M^j * C with M the trailing block, C the column below a
            let mut w: Vec<Scalar> = (0..m_dim).map(|r| self.at(i + 1 + r, i).clone()).collect();
            let mut rmc: Vec<Scalar> = vec![];
            for _ in 0..m_dim {
                let mut dot = k.zero();
                for (c, wc) in w.iter().enumerate() {
                    dot = k.add(&dot, &k.mul(self.at(i, i + 1 + c), wc));
                }
                rmc.push(dot);
                let mut next = vec![k.zero(); m_dim];
                for (r, slot) in next.iter_mut().enumerate() {
                    for c in 0..m_dim {
                        *slot = k.add(slot, &k.mul(self.at(i + 1 + r, i + 1 + c), &w[c]));
                    }
                }
                w = next;
            }
            let old_len = cp.len();
            let mut next = vec![k.zero(); old_len + 1];
            for (s, slot) in next.iter_mut().enumerate() {
                for (t, c) in cp.iter().enumerate() {
                    if s == t {
                        *slot = k.add(slot, c);
                    } else if s == t + 1 {
                        *slot = k.sub(slot, &k.mul(&a, c));
                    } else if s > t + 1 && s - t - 2 < rmc.len() {
                        *slot = k.sub(slot, &k.mul(&rmc[s - t - 2], c));
                    }
                }
            }
            cp = next;
        }
        cp.reverse();
        cp
    }

    /// Determinant via the characteristic polynomial constant term.
    pub fn det(&self, k: &FieldPair) -> Scalar {
        let n = self.rows;
        let c0 = self.charpoly(k).swap_remove(0);
        if n % 2 == 1 {
            k.neg(&c0)
        } else {
            c0
        }
    }

    pub fn to_json(&self, k: &FieldPair) -> serde_json::Value {
        serde_json::Value::Array(
            (0..self.rows)
                .map(|i| {
                    serde_json::Value::Array(
                        (0..self.cols)
                            .map(|j| k.scalar_to_json(self.at(i, j)))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn from_json(k: &FieldPair, v: &serde_json::Value) -> Result<Mat> {
        let rows = v
            .as_array()
            .ok_or_else(|| Error::InvalidInput("matrix must be an array of rows".into()))?;
        let mut out = vec![];
        for row in rows {
            let cells = row
                .as_array()
                .ok_or_else(|| Error::InvalidInput("matrix row must be an array".into()))?;
            out.push(
                cells
                    .iter()
                    .map(|c| k.scalar_from_json(c))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("matrix has no rows".into()));
        }
        let c = out[0].len();
        if out.iter().any(|r| r.len() != c) {
            return Err(Error::InvalidInput("ragged matrix".into()));
        }
        Ok(Mat::from_rows(out))
    }
}
