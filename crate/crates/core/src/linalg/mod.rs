//! Dense complex operator algebra with subsystem bookkeeping.
//!
//! Subsystem indices are zero-based positions in the `dims` list.

mod maps;
pub(crate) mod subsystems;

pub use maps::{adjoint_map, apply_map, LinearMapOnOperators, MapRepr};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use subsystems::*;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

const HERMITIAN_TOL: f64 = 1e-12;

/// Hermitian matrix tagged with the dimensions of its tensor factors.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    dims: Vec<usize>,
    mat: CMat,
}

impl HermitianOperator {
    /// Checks shape and Hermiticity. Asymmetry up to 1e-12 (relative to the largest
    /// entry) is absorbed by symmetrizing.
    pub fn new(dims: Vec<usize>, mat: CMat) -> Result<Self> {
        let n = total_dim(&dims);
        if dims.contains(&0) {
            return Err(Error::input(format!("zero subsystem dimension in {dims:?}")));
        }
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::input(format!(
                "matrix is {}x{} but dims {:?} require {n}x{n}",
                mat.nrows(),
                mat.ncols(),
                dims
            )));
        }
        let scale = mat.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        let mut asym = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                asym = asym.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
            }
        }
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::input(format!("matrix is not Hermitian (asymmetry {asym:.3e})")));
        }
        Ok(Self::from_raw(dims, mat))
    }

    /// Symmetrizes without checking. Used on results that are Hermitian in exact arithmetic.
    pub(crate) fn from_raw(dims: Vec<usize>, mat: CMat) -> Self {
        let adj = mat.adjoint();
        HermitianOperator { dims, mat: (mat + adj) * C64::new(0.5, 0.0) }
    }

    pub fn from_real(dims: Vec<usize>, mat: DMatrix<f64>) -> Result<Self> {
        Self::new(dims, mat.map(|v| C64::new(v, 0.0)))
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = total_dim(&dims);
        HermitianOperator { dims, mat: CMat::zeros(n, n) }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = total_dim(&dims);
        HermitianOperator { dims, mat: CMat::identity(n, n) }
    }

    /// Maximally mixed state on `dims`.
    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n = total_dim(&dims) as f64;
        Self::identity(dims).scale(1.0 / n)
    }

    /// A 1×1 operator with empty dims.
    pub fn scalar(v: f64) -> Self {
        HermitianOperator { dims: vec![], mat: CMat::from_element(1, 1, C64::new(v, 0.0)) }
    }

    pub fn diagonal(dims: Vec<usize>, diag: &[f64]) -> Result<Self> {
        let n = total_dim(&dims);
        if diag.len() != n {
            return Err(Error::input(format!("diagonal has {} entries, expected {n}", diag.len())));
        }
        let mut mat = CMat::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            mat[(i, i)] = C64::new(v, 0.0);
        }
        Ok(HermitianOperator { dims, mat })
    }

    /// |v⟩⟨v| (not normalized).
    pub fn projector(dims: Vec<usize>, v: &CVec) -> Result<Self> {
        if v.len() != total_dim(&dims) {
            return Err(Error::input(format!("vector length {} does not match dims {dims:?}", v.len())));
        }
        Ok(Self::from_raw(dims, v * v.adjoint()))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Side length of the matrix.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        if total_dim(&dims) != self.dim() {
            return Err(Error::input(format!("cannot relabel {:?} as {dims:?}", self.dims)));
        }
        Ok(HermitianOperator { dims, mat: self.mat.clone() })
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// Re tr(self · other).
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.mat.iter().zip(other.mat.transpose().iter()) {
            acc += (a * b).re;
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        self.mat.iter().zip(other.mat.iter()).fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    fn assert_same_dims(&self, other: &HermitianOperator) {
        assert_eq!(self.dims, other.dims, "operator dims differ");
    }

    /// Panics if dims differ.
    pub fn add(&self, other: &HermitianOperator) -> Self {
        self.assert_same_dims(other);
        HermitianOperator { dims: self.dims.clone(), mat: &self.mat + &other.mat }
    }

    /// Panics if dims differ.
    pub fn sub(&self, other: &HermitianOperator) -> Self {
        self.assert_same_dims(other);
        HermitianOperator { dims: self.dims.clone(), mat: &self.mat - &other.mat }
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOperator { dims: self.dims.clone(), mat: &self.mat * C64::new(s, 0.0) }
    }

    /// self += s·other. Panics if dims differ.
    pub fn add_scaled(&mut self, s: f64, other: &HermitianOperator) {
        self.assert_same_dims(other);
        self.mat += &other.mat * C64::new(s, 0.0);
    }

    /// Complex conjugate, equivalently the full transpose.
    pub fn transpose(&self) -> Self {
        HermitianOperator { dims: self.dims.clone(), mat: self.mat.transpose() }
    }

    /// U X U† where U maps the space of `self` to a space with `dims_out`.
    pub fn conjugate_by(&self, u: &CMat, dims_out: Vec<usize>) -> Result<Self> {
        if u.ncols() != self.dim() || u.nrows() != total_dim(&dims_out) {
            return Err(Error::input(format!(
                "conjugating matrix is {}x{}, operator side {} and output dims {dims_out:?}",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        Ok(Self::from_raw(dims_out, u * &self.mat * u.adjoint()))
    }

    pub fn tensor(&self, other: &HermitianOperator) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        HermitianOperator { dims, mat: kron(&self.mat, &other.mat) }
    }

    fn check_keep(&self, keep: &[usize]) -> Result<Vec<usize>> {
        let mut k = keep.to_vec();
        k.sort_unstable();
        k.dedup();
        if k.len() != keep.len() || k.iter().any(|&s| s >= self.dims.len()) {
            return Err(Error::input(format!("invalid subsystem set {keep:?} for dims {:?}", self.dims)));
        }
        Ok(k)
    }

    /// Traces out every subsystem not in `keep`. An empty `keep` gives a 1×1 scalar.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.check_keep(keep)?;
        let dims = keep.iter().map(|&k| self.dims[k]).collect();
        Ok(Self::from_raw(dims, partial_trace_mat(&self.mat, &self.dims, &keep)))
    }

    /// Places `self` on the subsystems `keep` of `dims_out` and the identity elsewhere.
    pub fn identity_extend(&self, dims_out: &[usize], keep: &[usize]) -> Result<Self> {
        let expect: Vec<usize> = keep.iter().map(|&k| *dims_out.get(k).unwrap_or(&0)).collect();
        let sorted = keep.windows(2).all(|w| w[0] < w[1]);
        if !sorted || expect != self.dims {
            return Err(Error::input(format!(
                "cannot extend operator with dims {:?} onto {dims_out:?} at {keep:?}",
                self.dims
            )));
        }
        Ok(HermitianOperator {
            dims: dims_out.to_vec(),
            mat: identity_extend_mat(&self.mat, dims_out, keep),
        })
    }

    pub fn partial_transpose(&self, sub: usize) -> Result<Self> {
        if sub >= self.dims.len() {
            return Err(Error::input(format!("subsystem {sub} out of range for dims {:?}", self.dims)));
        }
        Ok(HermitianOperator {
            dims: self.dims.clone(),
            mat: partial_transpose_mat(&self.mat, &self.dims, sub),
        })
    }

    /// Output subsystem `k` is input subsystem `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = perm.to_vec();
        seen.sort_unstable();
        if seen != (0..self.dims.len()).collect::<Vec<_>>() {
            return Err(Error::input(format!("{perm:?} is not a permutation of {} subsystems", self.dims.len())));
        }
        Ok(HermitianOperator {
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
            mat: permute_mat(&self.mat, &self.dims, perm),
        })
    }

    /// Eigenvalues in ascending order with unit eigenvectors as columns. Each
    /// eigenvector has its first non-negligible component real and positive.
    pub fn eigh(&self) -> (Vec<f64>, CMat) {
        let n = self.dim();
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vecs = CMat::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(k).into_owned();
            if let Some(lead) = v.iter().find(|z| z.norm() > 1e-12).copied() {
                v *= lead.conj() / lead.norm();
            }
            vecs.set_column(col, &v);
        }
        (values, vecs)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }

    pub fn min_eigen(&self) -> (f64, CVec) {
        let (vals, vecs) = self.eigh();
        (vals[0], vecs.column(0).into_owned())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().0[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigh().0.last().unwrap()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Applies a real function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, vecs) = self.eigh();
        let d = DVector::from_iterator(vals.len(), vals.iter().map(|&v| C64::new(f(v), 0.0)));
        Self::from_raw(self.dims.clone(), &vecs * CMat::from_diagonal(&d) * vecs.adjoint())
    }
}

pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    a.tensor(b)
}

pub fn partial_trace(x: &HermitianOperator, keep: &[usize]) -> Result<HermitianOperator> {
    x.partial_trace(keep)
}

pub fn partial_transpose(x: &HermitianOperator, subsystem: usize) -> Result<HermitianOperator> {
    x.partial_transpose(subsystem)
}

/// Smallest eigenvalue and a corresponding unit eigenvector.
pub fn min_eigenvalue(x: &HermitianOperator) -> (f64, CVec) {
    x.min_eigen()
}

/// Normalized maximally entangled projector (1/d)Σ|ii⟩⟨jj| on d⊗d.
pub fn max_entangled(d: usize) -> HermitianOperator {
    let mut mat = CMat::zeros(d * d, d * d);
    let w = C64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        for j in 0..d {
            mat[(i * d + i, j * d + j)] = w;
        }
    }
    HermitianOperator { dims: vec![d, d], mat }
}

/// The d² unitaries X^j Z^k, ordered by j·d + k.
pub fn heisenberg_weyl(d: usize) -> Vec<CMat> {
    let mut x = CMat::zeros(d, d);
    let mut z = CMat::zeros(d, d);
    for m in 0..d {
        x[((m + 1) % d, m)] = C64::new(1.0, 0.0);
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / d as f64);
        // exact zeros keep d = 2 real
        let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
        z[(m, m)] = C64::new(snap(w.re), snap(w.im));
    }
    let mut out = Vec::with_capacity(d * d);
    let mut xj = CMat::identity(d, d);
    for _ in 0..d {
        let mut zk = CMat::identity(d, d);
        for _ in 0..d {
            out.push(&xj * &zk);
            zk = &zk * &z;
        }
        xj = &xj * &x;
    }
    out
}

/// Kronecker product of general complex matrices.
pub fn kron_mat(a: &CMat, b: &CMat) -> CMat {
    kron(a, b)
}

#[cfg(test)]
mod tests;
