//! Real embeddings of Hermitian matrices.
//!
//! `hvec` coordinates use the orthonormal basis e_ii, (e_ij+e_ji)/√2,
//! i(e_ij−e_ji)/√2 (i<j), so ⟨hvec X, hvec Y⟩ = Re tr(XY). `svec` is the usual
//! lower-triangle vectorization of a real symmetric matrix with √2 off-diagonals.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{C64, CMat, HermitianOperator};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// [[Re x, −Im x], [Im x, Re x]].
pub fn realify(x: &HermitianOperator) -> DMatrix<f64> {
    realify_mat(x.matrix())
}

pub(crate) fn realify_mat(x: &CMat) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let z = x[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i + n, j)] = z.im;
            out[(i, j + n)] = -z.im;
        }
    }
    out
}

/// Inverse of `realify` on its range; general symmetric input is projected by
/// averaging the two copies.
pub fn derealify(m: &DMatrix<f64>, dims: Vec<usize>) -> HermitianOperator {
    HermitianOperator::from_raw(dims, derealify_avg(m))
}

pub(crate) fn derealify_avg(m: &DMatrix<f64>) -> CMat {
    let n = m.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        C64::new(0.5 * (m[(i, j)] + m[(i + n, j + n)]), 0.5 * (m[(i + n, j)] - m[(i, j + n)]))
    })
}

/// Adjoint of X ↦ realify(X) with respect to Re tr on the Hermitian side:
/// ⟨Z, realify X⟩ = Re tr(realify_adjoint(Z)·X).
pub(crate) fn realify_adjoint(z: &DMatrix<f64>, dims: Vec<usize>) -> HermitianOperator {
    let a = derealify_avg(z) * C64::new(2.0, 0.0);
    HermitianOperator::from_raw(dims, a)
}

pub(crate) fn hvec_len(n: usize) -> usize {
    n * n
}

pub(crate) fn hvec(x: &CMat) -> DVector<f64> {
    let n = x.nrows();
    let mut v = DVector::zeros(n * n);
    for i in 0..n {
        v[i] = x[(i, i)].re;
    }
    let mut k = n;
    for j in 0..n {
        for i in 0..j {
            v[k] = SQRT2 * x[(i, j)].re;
            v[k + 1] = SQRT2 * x[(i, j)].im;
            k += 2;
        }
    }
    v
}

pub(crate) fn hmat(v: &[f64], n: usize) -> CMat {
    let mut x = CMat::zeros(n, n);
    for i in 0..n {
        x[(i, i)] = C64::new(v[i], 0.0);
    }
    let mut k = n;
    for j in 0..n {
        for i in 0..j {
            let z = C64::new(v[k], v[k + 1]) / SQRT2;
            x[(i, j)] = z;
            x[(j, i)] = z.conj();
            k += 2;
        }
    }
    x
}

/// The `k`-th basis element of the hvec parametrization.
pub(crate) fn hbasis(k: usize, n: usize) -> CMat {
    let mut e = vec![0.0; n * n];
    e[k] = 1.0;
    hmat(&e, n)
}

pub(crate) fn svec_len(m: usize) -> usize {
    m * (m + 1) / 2
}

pub(crate) fn svec(s: &DMatrix<f64>) -> DVector<f64> {
    let m = s.nrows();
    let mut v = DVector::zeros(svec_len(m));
    let mut k = 0;
    for j in 0..m {
        v[k] = s[(j, j)];
        k += 1;
        for i in j + 1..m {
            v[k] = SQRT2 * 0.5 * (s[(i, j)] + s[(j, i)]);
            k += 1;
        }
    }
    v
}

pub(crate) fn smat(v: &[f64], m: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(m, m);
    let mut k = 0;
    for j in 0..m {
        s[(j, j)] = v[k];
        k += 1;
        for i in j + 1..m {
            let x = v[k] / SQRT2;
            s[(i, j)] = x;
            s[(j, i)] = x;
            k += 1;
        }
    }
    s
}

/// Matrix of hvec(X) ↦ svec(realify X) for n×n Hermitian X.
pub(crate) fn realify_svec_matrix(n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(svec_len(2 * n), hvec_len(n));
    for k in 0..hvec_len(n) {
        out.set_column(k, &svec(&realify_mat(&hbasis(k, n))));
    }
    out
}
