//! Lowering of a `ConeProgram` to the real standard form
//! min cᵀx s.t. Gx + s = h, Ax = b, s ∈ K.

use nalgebra::{DMatrix, DVector};

use super::realify::{hbasis, hvec, hvec_len, realify_svec_matrix, realify_mat, svec};
use super::{ConeProgram, ConeTag, ConstraintId, ConstraintKind, Term, VarId};
use crate::error::Result;
use crate::linalg::HermitianOperator;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum BlockKind {
    Lp,
    /// Real symmetric cone of the given side length.
    Psd(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum BlockOrigin {
    VarPsd(VarId),
    VarPpt(VarId, usize),
    Ineq(ConstraintId),
}

#[derive(Clone, Debug)]
pub(crate) struct GBlock {
    pub kind: BlockKind,
    pub origin: BlockOrigin,
    pub cols: Vec<usize>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl GBlock {
    pub fn rows(&self) -> usize {
        self.g.nrows()
    }

    pub fn degree(&self) -> usize {
        match self.kind {
            BlockKind::Lp => self.g.nrows(),
            BlockKind::Psd(m) => m,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub n: usize,
    pub var_offset: Vec<usize>,
    pub var_side: Vec<usize>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub eq_rows: Vec<Option<(usize, usize)>>,
    pub blocks: Vec<GBlock>,
}

fn side(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Matrix of the term acting on hvec coordinates of its variable.
fn term_matrix(p: &ConeProgram, t: &Term) -> Result<DMatrix<f64>> {
    let var = p.variable(t.var);
    let n_in = side(&var.dims);
    let n_out = side(&p.term_dims(t)?);
    let mut m = DMatrix::zeros(hvec_len(n_out), hvec_len(n_in));
    for k in 0..hvec_len(n_in) {
        let e = HermitianOperator::from_raw(var.dims.clone(), hbasis(k, n_in));
        let out = t.apply(&e)?;
        m.set_column(k, &hvec(out.matrix()));
    }
    Ok(m)
}

pub(crate) fn compile(p: &ConeProgram) -> Result<Compiled> {
    let mut var_offset = Vec::new();
    let mut var_side = Vec::new();
    let mut n = 0;
    for v in p.variables() {
        let s = side(&v.dims);
        var_offset.push(n);
        var_side.push(s);
        n += hvec_len(s);
    }

    let sign = p.sense.sign();
    let mut c = DVector::zeros(n);
    for (v, coeff) in p.objective() {
        let hv = hvec(coeff.matrix());
        let off = var_offset[v.0];
        for (k, x) in hv.iter().enumerate() {
            c[off + k] += sign * x;
        }
    }

    let mut eq_rows = Vec::new();
    let mut m = 0;
    for con in p.constraints() {
        if con.kind == ConstraintKind::Equality {
            let len = hvec_len(con.rhs.dim());
            eq_rows.push(Some((m, m + len)));
            m += len;
        } else {
            eq_rows.push(None);
        }
    }
    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    let mut blocks = Vec::new();
    let mut rcache: Vec<Option<DMatrix<f64>>> = Vec::new();
    let mut rmat = |k: usize| -> DMatrix<f64> {
        if rcache.len() <= k {
            rcache.resize(k + 1, None);
        }
        rcache[k].get_or_insert_with(|| realify_svec_matrix(k)).clone()
    };

    for (ci, con) in p.constraints().iter().enumerate() {
        let n_out = con.rhs.dim();
        let mut cols: Vec<usize> = Vec::new();
        for t in &con.terms {
            let off = var_offset[t.var.0];
            cols.extend(off..off + hvec_len(var_side[t.var.0]));
        }
        cols.sort_unstable();
        cols.dedup();
        let mut local = DMatrix::zeros(hvec_len(n_out), cols.len());
        for t in &con.terms {
            let tm = term_matrix(p, t)?;
            let off = var_offset[t.var.0];
            let start = cols.binary_search(&off).expect("term columns");
            let mut view = local.columns_mut(start, tm.ncols());
            view += &tm;
        }
        match con.kind {
            ConstraintKind::Equality => {
                let (r0, _) = eq_rows[ci].unwrap();
                for (lc, &gc) in cols.iter().enumerate() {
                    for r in 0..local.nrows() {
                        a[(r0 + r, gc)] += local[(r, lc)];
                    }
                }
                b.rows_mut(r0, local.nrows()).copy_from(&hvec(con.rhs.matrix()));
            }
            ConstraintKind::PsdInequality => {
                let origin = BlockOrigin::Ineq(ConstraintId(ci));
                if n_out == 1 {
                    blocks.push(GBlock {
                        kind: BlockKind::Lp,
                        origin,
                        cols,
                        g: -local,
                        h: DVector::from_element(1, -con.rhs.trace()),
                    });
                } else {
                    let r = rmat(n_out);
                    blocks.push(GBlock {
                        kind: BlockKind::Psd(2 * n_out),
                        origin,
                        cols,
                        g: -(r * local),
                        h: -svec(&realify_mat(con.rhs.matrix())),
                    });
                }
            }
        }
    }

    for (vi, var) in p.variables().iter().enumerate() {
        let s = var_side[vi];
        let off = var_offset[vi];
        let cols: Vec<usize> = (off..off + hvec_len(s)).collect();
        let id = VarId(vi);
        let ppt = match var.cone {
            ConeTag::Free => continue,
            ConeTag::Psd => None,
            ConeTag::PsdPpt { subsystem } => Some(subsystem),
        };
        if s == 1 {
            blocks.push(GBlock {
                kind: BlockKind::Lp,
                origin: BlockOrigin::VarPsd(id),
                cols,
                g: DMatrix::from_element(1, 1, -1.0),
                h: DVector::zeros(1),
            });
            continue;
        }
        let r = rmat(s);
        let rows = r.nrows();
        blocks.push(GBlock {
            kind: BlockKind::Psd(2 * s),
            origin: BlockOrigin::VarPsd(id),
            cols: cols.clone(),
            g: -r.clone(),
            h: DVector::zeros(rows),
        });
        if let Some(sub) = ppt {
            let t = Term::new(id).then(super::LinOp::PartialTranspose { subsystem: sub });
            let pt = term_matrix(p, &t)?;
            blocks.push(GBlock {
                kind: BlockKind::Psd(2 * s),
                origin: BlockOrigin::VarPpt(id, sub),
                cols,
                g: -(r * pt),
                h: DVector::zeros(rows),
            });
        }
    }

    Ok(Compiled { n, var_offset, var_side, c, a, b, eq_rows, blocks })
}
