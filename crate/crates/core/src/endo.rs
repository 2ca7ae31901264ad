//! `F`-linear coordinates on `End_E(V)`.
//!
//! `End_E(V)` is a `2n^2`-dimensional `F`-vector space: each matrix entry
//! `x` splits as `a + y*b` with `a, b` in `F` along the canonical basis
//! `(1, y)` of `E/F`. Flattening through this splitting turns conjugation-
//! semilinear conditions (the form annihilator, adjoint constraints) into
//! plain `F`-linear systems, handled by the generic subspace machinery.

use crate::coefficients::{FieldPair, Scalar};
use crate::hermitian::Subspace;
use crate::matrix::Mat;
use crate::{Error, Result};

/// Number of `F`-coordinates of `End_E(V)` for `n x n` matrices.
pub fn ambient_dim(n: usize) -> usize {
    2 * n * n
}

/// Flatten an endomorphism to its `F`-coordinate vector.
pub fn flatten(k: &FieldPair, m: &Mat) -> Vec<Scalar> {
    let n = m.rows;
    let mut out = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = k.split_base(m.at(i, j));
            out.push(a);
            out.push(b);
        }
    }
    out
}

/// Rebuild an endomorphism from its `F`-coordinate vector.
pub fn unflatten(k: &FieldPair, n: usize, v: &[Scalar]) -> Mat {
    assert_eq!(v.len(), 2 * n * n);
    Mat::from_fn(n, n, |i, j| {
        let base = 2 * (i * n + j);
        k.join_base(&v[base], &v[base + 1])
    })
}

/// Canonicalized `F`-span of a family of endomorphisms.
pub fn span_of_mats(k: &FieldPair, n: usize, mats: &[Mat]) -> Result<Subspace> {
    if mats.is_empty() {
        return Ok(Subspace::zero(ambient_dim(n)));
    }
    let rows: Vec<Vec<Scalar>> = mats.iter().map(|m| flatten(k, m)).collect();
    Subspace::from_rows(k, &Mat::from_rows(rows))
}

/// Basis of an `F`-subspace of `End_E(V)`, as matrices.
pub fn basis_mats(k: &FieldPair, n: usize, sub: &Subspace) -> Vec<Mat> {
    (0..sub.dim())
        .map(|i| unflatten(k, n, &sub.basis.row(i)))
        .collect()
}

/// Matrix (in the subspace basis) of an `F`-linear operator that maps the
/// subspace into itself. Errors if an image escapes the subspace.
pub fn induced_matrix(
    k: &FieldPair,
    n: usize,
    sub: &Subspace,
    mut op: impl FnMut(&Mat) -> Result<Mat>,
) -> Result<Mat> {
    let r = sub.dim();
    let mut cols: Vec<Vec<Scalar>> = vec![];
    for i in 0..r {
        let xi = unflatten(k, n, &sub.basis.row(i));
        let img = op(&xi)?;
        let coords = sub
            .coords_of(k, &flatten(k, &img))?
            .ok_or_else(|| {
                Error::InternalInvariantViolation(
                    "operator image escapes the subspace it should preserve".into(),
                )
            })?;
        cols.push(coords);
    }
    Ok(Mat::from_fn(r, r, |i, j| cols[j][i].clone()))
}

/// Image of a subspace under an `F`-linear operator on endomorphisms.
pub fn image_under(
    k: &FieldPair,
    n: usize,
    sub: &Subspace,
    mut op: impl FnMut(&Mat) -> Result<Mat>,
) -> Result<Subspace> {
    let mut rows = vec![];
    for i in 0..sub.dim() {
        let xi = unflatten(k, n, &sub.basis.row(i));
        rows.push(flatten(k, &op(&xi)?));
    }
    if rows.is_empty() {
        return Ok(Subspace::zero(ambient_dim(n)));
    }
    Subspace::from_rows(k, &Mat::from_rows(rows))
}

/// Kernel of an `F`-linear operator restricted to a subspace, as a subspace
/// of the same ambient endomorphism coordinates.
pub fn kernel_within(
    k: &FieldPair,
    n: usize,
    sub: &Subspace,
    mut op: impl FnMut(&Mat) -> Result<Mat>,
) -> Result<Subspace> {
    let r = sub.dim();
    if r == 0 {
        return Ok(Subspace::zero(ambient_dim(n)));
    }
    // columns are flattened images of the basis; kernel vectors are
    // coefficient combinations of the basis
    let mut img_rows = vec![];
    for i in 0..r {
        let xi = unflatten(k, n, &sub.basis.row(i));
        img_rows.push(flatten(k, &op(&xi)?));
    }
    let m = Mat::from_fn(ambient_dim(n), r, |i, j| img_rows[j][i].clone());
    let ker = m.right_kernel(k)?;
    let mut rows = vec![];
    for i in 0..ker.rows {
        let coeffs = ker.row(i);
        let mut v = vec![k.zero(); ambient_dim(n)];
        for (j, c) in coeffs.iter().enumerate() {
            for (slot, b) in v.iter_mut().zip(sub.basis.row(j)) {
                *slot = k.add(slot, &k.mul(c, &b));
            }
        }
        rows.push(v);
    }
    if rows.is_empty() {
        return Ok(Subspace::zero(ambient_dim(n)));
    }
    Subspace::from_rows(k, &Mat::from_rows(rows))
}
