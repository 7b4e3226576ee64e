//! Small dense helpers shared by the geometric modules.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::Matrix;

/// Thin SVD `a = u · diag(s) · vᵀ` with singular values sorted descending.
pub(crate) struct ThinSvd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

pub(crate) fn thin_svd(a: &Matrix) -> ThinSvd {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let v_t = svd.v_t.expect("requested v_t");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));

    let k = s.len();
    let u_sorted = DMatrix::from_fn(u.nrows(), k, |row, c| u[(row, order[c])]);
    let v_sorted = DMatrix::from_fn(v_t.ncols(), k, |row, c| v_t[(order[c], row)]);
    let s_sorted = order.iter().map(|&i| s[i]).collect();
    ThinSvd {
        u: u_sorted,
        s: s_sorted,
        v: v_sorted,
    }
}

pub(crate) fn singular_values(a: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest entry of `|aᵀa − I|`.
pub(crate) fn orthonormality_residual(a: &Matrix) -> f64 {
    let gram = a.tr_mul(a);
    let mut worst = 0.0_f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Householder QR factor of a full-column-rank matrix, with signs chosen so
/// that `R` has a positive diagonal. Columns already orthonormal come back
/// unchanged up to rounding.
pub(crate) fn qr_orthonormal(a: &Matrix) -> Matrix {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub(crate) fn frob_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn frob_norm_sq(a: &Matrix) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    // Filled column by column so the draw order is fixed by the storage order.
    let mut out = Matrix::zeros(rows, cols);
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    out
}

/// `a − basis · (basisᵀ a)` for an orthonormal `basis`, applied twice
/// (classical Gram–Schmidt with reorthogonalization).
pub(crate) fn project_out(basis: &Matrix, a: &Matrix) -> Matrix {
    let mut out = a - basis * basis.tr_mul(a);
    out -= basis * basis.tr_mul(&out);
    out
}

pub(crate) fn diag_mul_right(a: &Matrix, d: &[f64]) -> Matrix {
    let mut out = a.clone();
    for (j, &s) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(s);
    }
    out
}

pub(crate) fn diag_mul_left(d: &[f64], a: &Matrix) -> Matrix {
    let mut out = a.clone();
    for (i, &s) in d.iter().enumerate() {
        out.row_mut(i).scale_mut(s);
    }
    out
}
