//! Homogeneous self-dual primal–dual interior-point method with
//! Nesterov–Todd scaling and Mehrotra predictor–corrector steps.
//!
//! Scaling convention: W⁻ᵀs = Wz = λ. For a PSD block with S = LsLsᵀ,
//! Z = LzLzᵀ and Lzᵀ Ls = UΛVᵀ, take R = Ls V Λ^{-1/2}; then W(Z) = RᵀZR,
//! Wᵀ(U) = RURᵀ, W⁻ᵀ(S) = R⁻¹SR⁻ᵀ, W⁻¹(U) = R⁻ᵀUR⁻¹ and R⁻¹ = Λ^{-1/2}UᵀLzᵀ.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, LU};

use super::compile::{compile, BlockKind, BlockOrigin, Compiled, GBlock};
use super::realify::{hmat, realify_adjoint, smat, svec, svec_len};
use super::{ConeDual, ConeProgram, ConeTag, Solution, Status};
use crate::error::{Error, Result};
use crate::linalg::HermitianOperator;

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 200 }
    }
}

pub fn solve(p: &ConeProgram, tol: f64) -> Result<Solution> {
    solve_with(p, SolverOptions { tol, ..SolverOptions::default() })
}

/// Accepted solver tolerances are [1e-10, 1e-4].
pub fn check_tol(tol: f64) -> Result<()> {
    if !(1e-10..=1e-4).contains(&tol) {
        return Err(Error::input(format!("tolerance {tol} outside [1e-10, 1e-4]")));
    }
    Ok(())
}

/// Solves `p`. Non-optimal outcomes are reported through `Solution::status`;
/// only malformed input produces an error.
pub fn solve_with(p: &ConeProgram, opts: SolverOptions) -> Result<Solution> {
    check_tol(opts.tol)?;
    let cp = compile(p)?;
    let raw = Engine::new(&cp).run(opts);
    Ok(assemble(p, &cp, raw, opts.tol))
}

struct Raw {
    status: Status,
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    pres: f64,
    dres: f64,
    iterations: usize,
}

// ---------------------------------------------------------------- scaling

enum Scaling {
    Lp { d: DVector<f64>, lam: DVector<f64> },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64>, lam: DVector<f64> },
}

/// Any factor L with X = LLᵀ; Cholesky with an eigen fallback.
fn factor_psd(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = Cholesky::new(x.clone()) {
        return Some(ch.l());
    }
    let eig = SymmetricEigen::new(x.clone());
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let sq = eig.eigenvalues.map(f64::sqrt);
    Some(&eig.eigenvectors * DMatrix::from_diagonal(&sq))
}

/// Cholesky factor, retrying with a growing diagonal shift when the matrix is
/// numerically singular.
fn cholesky_shifted(h: DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(ch) = Cholesky::new(h.clone()) {
        return Some(ch.l());
    }
    let scale = h.diagonal().max().max(1e-300);
    let mut delta = 1e-14 * scale;
    for _ in 0..8 {
        let mut hs = h.clone();
        for i in 0..hs.nrows() {
            hs[(i, i)] += delta;
        }
        if let Some(ch) = Cholesky::new(hs) {
            return Some(ch.l());
        }
        delta *= 10.0;
    }
    None
}

impl Scaling {
    fn identity(b: &GBlock) -> Scaling {
        match b.kind {
            BlockKind::Lp => Scaling::Lp { d: DVector::from_element(b.rows(), 1.0), lam: DVector::from_element(b.rows(), 1.0) },
            BlockKind::Psd(m) => Scaling::Psd {
                r: DMatrix::identity(m, m),
                rinv: DMatrix::identity(m, m),
                lam: DVector::from_element(m, 1.0),
            },
        }
    }

    fn nt(kind: BlockKind, s: &[f64], z: &[f64]) -> Option<Scaling> {
        match kind {
            BlockKind::Lp => {
                if s.iter().chain(z).any(|&v| v <= 0.0) {
                    return None;
                }
                let d = DVector::from_iterator(s.len(), s.iter().zip(z).map(|(a, b)| (a / b).sqrt()));
                let lam = DVector::from_iterator(s.len(), s.iter().zip(z).map(|(a, b)| (a * b).sqrt()));
                Some(Scaling::Lp { d, lam })
            }
            BlockKind::Psd(m) => {
                let ls = factor_psd(&smat(s, m))?;
                let lz = factor_psd(&smat(z, m))?;
                let svd = (lz.transpose() * &ls).svd(true, true);
                let u = svd.u?;
                let vt = svd.v_t?;
                let lam = svd.singular_values;
                if lam.iter().any(|&v| v <= 0.0) {
                    return None;
                }
                let isq = lam.map(|v| 1.0 / v.sqrt());
                let r = ls * vt.transpose() * DMatrix::from_diagonal(&isq);
                let rinv = DMatrix::from_diagonal(&isq) * u.transpose() * lz.transpose();
                Some(Scaling::Psd { r, rinv, lam })
            }
        }
    }

    fn lam(&self) -> &DVector<f64> {
        match self {
            Scaling::Lp { lam, .. } | Scaling::Psd { lam, .. } => lam,
        }
    }

    fn m(&self) -> usize {
        self.lam().len()
    }

    /// W⁻ᵀ v
    fn winvt(&self, v: &[f64]) -> DVector<f64> {
        match self {
            Scaling::Lp { d, .. } => DVector::from_iterator(v.len(), v.iter().zip(d.iter()).map(|(a, b)| a / b)),
            Scaling::Psd { rinv, .. } => svec(&(rinv * smat(v, self.m()) * rinv.transpose())),
        }
    }

    /// W v
    fn w(&self, v: &[f64]) -> DVector<f64> {
        match self {
            Scaling::Lp { d, .. } => DVector::from_iterator(v.len(), v.iter().zip(d.iter()).map(|(a, b)| a * b)),
            Scaling::Psd { r, .. } => svec(&(r.transpose() * smat(v, self.m()) * r)),
        }
    }

    /// Wᵀ v
    fn wt(&self, v: &[f64]) -> DVector<f64> {
        match self {
            Scaling::Lp { .. } => self.w(v),
            Scaling::Psd { r, .. } => svec(&(r * smat(v, self.m()) * r.transpose())),
        }
    }

    /// W⁻¹ v
    fn winv(&self, v: &[f64]) -> DVector<f64> {
        match self {
            Scaling::Lp { .. } => self.winvt(v),
            Scaling::Psd { rinv, .. } => svec(&(rinv.transpose() * smat(v, self.m()) * rinv)),
        }
    }

    /// Factor applied entrywise by λ∘(·) in the scaled space.
    fn lam_factors(&self) -> DVector<f64> {
        match self {
            Scaling::Lp { lam, .. } => lam.clone(),
            Scaling::Psd { lam, .. } => {
                let m = lam.len();
                let mut f = DVector::zeros(svec_len(m));
                let mut k = 0;
                for j in 0..m {
                    for i in j..m {
                        f[k] = 0.5 * (lam[i] + lam[j]);
                        k += 1;
                    }
                }
                f
            }
        }
    }

    /// λ∘λ
    fn lam_sq(&self) -> DVector<f64> {
        match self {
            Scaling::Lp { lam, .. } => lam.component_mul(lam),
            Scaling::Psd { lam, .. } => svec(&DMatrix::from_diagonal(&lam.component_mul(lam))),
        }
    }

    /// Largest α with λ + αΔ in the cone (∞ if unbounded).
    fn max_step(&self, delta: &[f64]) -> f64 {
        match self {
            Scaling::Lp { lam, .. } => {
                let mut a = f64::INFINITY;
                for (l, d) in lam.iter().zip(delta) {
                    if *d < 0.0 {
                        a = a.min(-l / d);
                    }
                }
                a
            }
            Scaling::Psd { lam, .. } => {
                let m = lam.len();
                let mut x = smat(delta, m);
                for j in 0..m {
                    for i in 0..m {
                        x[(i, j)] /= (lam[i] * lam[j]).sqrt();
                    }
                }
                let mn = x.symmetric_eigenvalues().min();
                if mn < 0.0 {
                    -1.0 / mn
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

fn circ(kind: BlockKind, u: &[f64], v: &[f64]) -> DVector<f64> {
    match kind {
        BlockKind::Lp => DVector::from_iterator(u.len(), u.iter().zip(v).map(|(a, b)| a * b)),
        BlockKind::Psd(m) => {
            let a = smat(u, m);
            let b = smat(v, m);
            svec(&((&a * &b + &b * &a) * 0.5))
        }
    }
}

fn identity_vec(kind: BlockKind, len: usize) -> DVector<f64> {
    match kind {
        BlockKind::Lp => DVector::from_element(len, 1.0),
        BlockKind::Psd(m) => svec(&DMatrix::identity(m, m)),
    }
}

/// −λ_min of an unscaled cone vector block.
fn violation(kind: BlockKind, v: &[f64]) -> f64 {
    match kind {
        BlockKind::Lp => -v.iter().cloned().fold(f64::INFINITY, f64::min),
        BlockKind::Psd(m) => -smat(v, m).symmetric_eigenvalues().min(),
    }
}

// ---------------------------------------------------------------- KKT

struct Component {
    cols: Vec<usize>,
    blocks: Vec<usize>,
    elim: bool,
    a: DMatrix<f64>,
}

struct Factored {
    gt: Vec<DMatrix<f64>>,
    chol: Vec<Option<(DMatrix<f64>, DMatrix<f64>)>>,
    lu: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    kept: Vec<usize>,
}

struct Engine<'a> {
    cp: &'a Compiled,
    a: DMatrix<f64>,
    b: DVector<f64>,
    basis: DMatrix<f64>,
    inconsistent: Option<DVector<f64>>,
    offsets: Vec<usize>,
    total: usize,
    comps: Vec<Component>,
    col_local: Vec<(usize, usize)>,
    kept: Vec<usize>,
    h: DVector<f64>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl<'a> Engine<'a> {
    fn new(cp: &'a Compiled) -> Self {
        // drop redundant equality rows
        let m = cp.a.nrows();
        let (a, b, basis, inconsistent) = if m == 0 {
            (DMatrix::zeros(0, cp.n), DVector::zeros(0), DMatrix::zeros(0, 0), None)
        } else {
            let svd = cp.a.clone().svd(true, false);
            let u = svd.u.expect("svd u");
            let smax = svd.singular_values.max();
            let cut = 1e-10 * smax.max(1.0) * (m.max(cp.n) as f64);
            let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > cut).collect();
            let mut uk = DMatrix::zeros(m, keep.len());
            for (j, &k) in keep.iter().enumerate() {
                uk.set_column(j, &u.column(k));
            }
            let a = uk.transpose() * &cp.a;
            let b = uk.transpose() * &cp.b;
            let resid = &cp.b - &uk * &b;
            let inconsistent = if resid.norm() > 1e-9 * cp.b.norm().max(1.0) { Some(resid) } else { None };
            (a, b, uk, inconsistent)
        };

        let mut offsets = Vec::new();
        let mut total = 0;
        for blk in &cp.blocks {
            offsets.push(total);
            total += blk.rows();
        }
        let mut h = DVector::zeros(total);
        for (k, blk) in cp.blocks.iter().enumerate() {
            h.rows_mut(offsets[k], blk.rows()).copy_from(&blk.h);
        }

        // columns coupled through a cone block share a component
        let mut parent: Vec<usize> = (0..cp.n).collect();
        for blk in &cp.blocks {
            for w in blk.cols.windows(2) {
                let (ra, rb) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut root_comp = vec![usize::MAX; cp.n];
        let mut comps: Vec<Component> = Vec::new();
        let mut col_local = vec![(0, 0); cp.n];
        for col in 0..cp.n {
            let r = find(&mut parent, col);
            if root_comp[r] == usize::MAX {
                root_comp[r] = comps.len();
                comps.push(Component { cols: Vec::new(), blocks: Vec::new(), elim: false, a: DMatrix::zeros(0, 0) });
            }
            let ci = root_comp[r];
            col_local[col] = (ci, comps[ci].cols.len());
            comps[ci].cols.push(col);
        }
        for (k, blk) in cp.blocks.iter().enumerate() {
            if let Some(&c0) = blk.cols.first() {
                comps[col_local[c0].0].blocks.push(k);
            }
        }
        let mut kept = Vec::new();
        for comp in comps.iter_mut() {
            let nc = comp.cols.len();
            let mut hh = DMatrix::<f64>::zeros(nc, nc);
            for &k in &comp.blocks {
                let g = &cp.blocks[k].g;
                let gg = g.transpose() * g;
                for (i, &ci) in cp.blocks[k].cols.iter().enumerate() {
                    for (j, &cj) in cp.blocks[k].cols.iter().enumerate() {
                        hh[(col_local[ci].1, col_local[cj].1)] += gg[(i, j)];
                    }
                }
            }
            let eig = hh.symmetric_eigenvalues();
            let (mn, mx) = (eig.min(), eig.max());
            comp.elim = !comp.blocks.is_empty() && mn > 1e-10 * mx.max(1e-300);
            comp.a = DMatrix::from_fn(a.nrows(), nc, |i, j| a[(i, comp.cols[j])]);
            if !comp.elim {
                kept.extend(comp.cols.iter().copied());
            }
        }

        Engine { cp, a, b, basis, inconsistent, offsets, total, comps, col_local, kept, h }
    }

    fn block<'v>(&self, v: &'v DVector<f64>, k: usize) -> &'v [f64] {
        let o = self.offsets[k];
        &v.as_slice()[o..o + self.cp.blocks[k].rows()]
    }

    /// Applies G to x.
    fn g_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.total);
        for (k, blk) in self.cp.blocks.iter().enumerate() {
            let xl = DVector::from_iterator(blk.cols.len(), blk.cols.iter().map(|&c| x[c]));
            out.rows_mut(self.offsets[k], blk.rows()).copy_from(&(&blk.g * xl));
        }
        out
    }

    fn gt_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.cp.n);
        for (k, blk) in self.cp.blocks.iter().enumerate() {
            let zl = DVector::from_column_slice(self.block(z, k));
            let v = blk.g.transpose() * zl;
            for (i, &c) in blk.cols.iter().enumerate() {
                out[c] += v[i];
            }
        }
        out
    }

    fn factor(&self, sc: &[Scaling]) -> Option<Factored> {
        let cp = self.cp;
        let mut gt = Vec::with_capacity(cp.blocks.len());
        for (k, blk) in cp.blocks.iter().enumerate() {
            let mut g = DMatrix::zeros(blk.rows(), blk.cols.len());
            for j in 0..blk.cols.len() {
                let col = blk.g.column(j).into_owned();
                g.set_column(j, &sc[k].winvt(col.as_slice()));
            }
            gt.push(g);
        }
        let m = self.a.nrows();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        let mut chol = Vec::with_capacity(self.comps.len());
        let hblock = |comp: &Component| {
            let nc = comp.cols.len();
            let mut hh = DMatrix::zeros(nc, nc);
            for &k in &comp.blocks {
                let g = &gt[k];
                let gg = g.transpose() * g;
                for (i, &ci) in cp.blocks[k].cols.iter().enumerate() {
                    for (j, &cj) in cp.blocks[k].cols.iter().enumerate() {
                        hh[(self.col_local[ci].1, self.col_local[cj].1)] += gg[(i, j)];
                    }
                }
            }
            hh
        };
        for comp in &self.comps {
            if !comp.elim {
                chol.push(None);
                continue;
            }
            let hh = hblock(comp);
            let l = cholesky_shifted(hh)?;
            let y = l.solve_lower_triangular(&comp.a.transpose())?;
            schur += y.transpose() * &y;
            chol.push(Some((l, y)));
        }
        let nk = self.kept.len();
        let mut kk = DMatrix::zeros(nk + m, nk + m);
        let mut kept_pos = vec![usize::MAX; cp.n];
        for (i, &c) in self.kept.iter().enumerate() {
            kept_pos[c] = i;
        }
        for comp in self.comps.iter().filter(|c| !c.elim) {
            let hh = hblock(comp);
            for (i, &ci) in comp.cols.iter().enumerate() {
                for (j, &cj) in comp.cols.iter().enumerate() {
                    kk[(kept_pos[ci], kept_pos[cj])] = hh[(i, j)];
                }
            }
        }
        for (i, &c) in self.kept.iter().enumerate() {
            for r in 0..m {
                kk[(nk + r, i)] = self.a[(r, c)];
                kk[(i, nk + r)] = self.a[(r, c)];
            }
        }
        for i in 0..m {
            for j in 0..m {
                kk[(nk + i, nk + j)] = -schur[(i, j)];
            }
        }
        let lu = if nk + m > 0 { Some(kk.lu()) } else { None };
        Some(Factored { gt, chol, lu, kept: self.kept.clone() })
    }

    /// Solves [0 Aᵀ Gᵀ; A 0 0; G 0 −WᵀW][x; y; z] = [bx; by; bz] and returns
    /// (x, y, Wz). Two rounds of iterative refinement absorb the error of the
    /// ill-conditioned factorizations near the boundary.
    fn kkt_solve(&self, f: &Factored, sc: &[Scaling], bx: &DVector<f64>, by: &DVector<f64>, bz: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (mut x, mut y, mut wz) = self.kkt_solve_once(f, sc, bx, by, bz)?;
        let zero = DVector::zeros(self.total);
        for _ in 0..2 {
            // Residual of the unscaled equation, with dz = W⁻¹ wz formed the
            // same way the iterate update forms it.
            let mut dz = DVector::zeros(self.total);
            for (k, blk) in self.cp.blocks.iter().enumerate() {
                dz.rows_mut(self.offsets[k], blk.rows()).copy_from(&sc[k].winv(self.block(&wz, k)));
            }
            let e1 = bx - self.a.transpose() * &y - self.gt_mul(&dz);
            let e2 = by - &self.a * &x;
            let (dx, dy, dwz) = self.kkt_solve_once(f, sc, &e1, &e2, &zero)?;
            x += dx;
            y += dy;
            wz += dwz;
        }
        Some((x, y, wz))
    }

    fn kkt_solve_once(&self, f: &Factored, sc: &[Scaling], bx: &DVector<f64>, by: &DVector<f64>, bz: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let cp = self.cp;
        let m = self.a.nrows();
        let mut wbz = Vec::with_capacity(cp.blocks.len());
        let mut r1 = bx.clone();
        for (k, blk) in cp.blocks.iter().enumerate() {
            let w = sc[k].winvt(self.block(bz, k));
            let v = f.gt[k].transpose() * &w;
            for (i, &c) in blk.cols.iter().enumerate() {
                r1[c] += v[i];
            }
            wbz.push(w);
        }
        let nk = f.kept.len();
        let mut rhs = DVector::zeros(nk + m);
        for (i, &c) in f.kept.iter().enumerate() {
            rhs[i] = r1[c];
        }
        let mut rhs_y = by.clone();
        let mut tvecs = Vec::with_capacity(self.comps.len());
        for (ci, comp) in self.comps.iter().enumerate() {
            if let Some((l, y)) = &f.chol[ci] {
                let rc = DVector::from_iterator(comp.cols.len(), comp.cols.iter().map(|&c| r1[c]));
                let t = l.solve_lower_triangular(&rc)?;
                rhs_y -= y.transpose() * &t;
                tvecs.push(Some(t));
            } else {
                tvecs.push(None);
            }
        }
        rhs.rows_mut(nk, m).copy_from(&rhs_y);
        let sol = match &f.lu {
            Some(lu) => lu.solve(&rhs)?,
            None => DVector::zeros(0),
        };
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dy = sol.rows(nk, m).into_owned();
        let mut dx = DVector::zeros(cp.n);
        for (i, &c) in f.kept.iter().enumerate() {
            dx[c] = sol[i];
        }
        for (ci, comp) in self.comps.iter().enumerate() {
            if let (Some((l, y)), Some(t)) = (&f.chol[ci], &tvecs[ci]) {
                let rhs_c = t - y * &dy;
                let xc = l.tr_solve_lower_triangular(&rhs_c)?;
                for (i, &c) in comp.cols.iter().enumerate() {
                    dx[c] = xc[i];
                }
            }
        }
        let mut wz = DVector::zeros(self.total);
        for (k, blk) in cp.blocks.iter().enumerate() {
            let xl = DVector::from_iterator(blk.cols.len(), blk.cols.iter().map(|&c| dx[c]));
            let v = &f.gt[k] * xl - &wbz[k];
            wz.rows_mut(self.offsets[k], blk.rows()).copy_from(&v);
        }
        Some((dx, dy, wz))
    }

    fn shift_into_cone(&self, v: &mut DVector<f64>) {
        let mut worst = f64::NEG_INFINITY;
        for (k, blk) in self.cp.blocks.iter().enumerate() {
            worst = worst.max(violation(blk.kind, self.block(v, k)));
        }
        let nrm = v.norm().max(1.0);
        if worst >= -1e-8 * nrm {
            let a = 1.0 + worst.max(0.0);
            for (k, blk) in self.cp.blocks.iter().enumerate() {
                let e = identity_vec(blk.kind, blk.rows());
                let mut seg = v.rows_mut(self.offsets[k], blk.rows());
                seg += e * a;
            }
        }
    }

    fn run(&self, opts: SolverOptions) -> Raw {
        let cp = self.cp;
        let n = cp.n;
        let m = self.a.nrows();
        let fail = |x: DVector<f64>, y: DVector<f64>, z: DVector<f64>, it: usize| Raw {
            status: Status::NumericalFailure,
            x,
            y,
            z,
            pres: f64::INFINITY,
            dres: f64::INFINITY,
            iterations: it,
        };

        if let Some(resid) = &self.inconsistent {
            // Farkas: y with Aᵀy = 0 and bᵀy < 0 in the original rows
            let y = -resid / resid.norm_squared();
            return Raw { status: Status::Infeasible, x: DVector::zeros(n), y, z: DVector::zeros(self.total), pres: 0.0, dres: 0.0, iterations: 0 };
        }

        let ident: Vec<Scaling> = cp.blocks.iter().map(Scaling::identity).collect();
        let Some(f0) = self.factor(&ident) else {
            return fail(DVector::zeros(n), DVector::zeros(cp.a.nrows()), DVector::zeros(self.total), 0);
        };
        let Some((mut x, _, wz)) = self.kkt_solve(&f0, &ident, &DVector::zeros(n), &self.b, &self.h) else {
            return fail(DVector::zeros(n), DVector::zeros(cp.a.nrows()), DVector::zeros(self.total), 0);
        };
        let mut s = -wz;
        let Some((_, mut y, mut z)) = self.kkt_solve(&f0, &ident, &(-&cp.c), &DVector::zeros(m), &DVector::zeros(self.total)) else {
            return fail(x, DVector::zeros(cp.a.nrows()), DVector::zeros(self.total), 0);
        };
        self.shift_into_cone(&mut s);
        self.shift_into_cone(&mut z);
        let mut tau = 1.0;
        let mut kappa = 1.0;

        let resx0 = cp.c.norm().max(1.0);
        let resy0 = self.b.norm().max(1.0);
        let resz0 = self.h.norm().max(1.0);
        let degree: usize = cp.blocks.iter().map(|b| b.degree()).sum();

        let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>, f64, f64, f64)> = None;

        let mut pending: Option<Vec<Scaling>> = None;
        for it in 0..=opts.max_iter {
            let ax = &self.a * &x;
            let gx = self.g_mul(&x);
            let aty = self.a.transpose() * &y;
            let gtz = self.gt_mul(&z);
            let cx = cp.c.dot(&x);
            let by = self.b.dot(&y);
            let hz = self.h.dot(&z);
            let rx = &aty + &gtz + &cp.c * tau;
            let ry = &ax - &self.b * tau;
            let rz = &gx + &s - &self.h * tau;
            let rt = kappa + cx + by + hz;
            let pres = (ry.norm() / resy0).max(rz.norm() / resz0) / tau;
            let dres = rx.norm() / resx0 / tau;
            let pcost = cx / tau;
            let dcost = -(by + hz) / tau;
            let sz = s.dot(&z);
            let gap = (sz / (tau * tau)).max((pcost - dcost).abs());
            let scale = pcost.abs().max(1.0);

            let merit = pres.max(dres).max(gap / scale);
            if best.as_ref().is_none_or(|b| merit < b.0) {
                best = Some((merit, x.clone(), y.clone(), z.clone(), tau, pres, dres));
            }

            if pres <= opts.tol && dres <= opts.tol && gap <= opts.tol * scale {
                return Raw { status: Status::Optimal, x: x / tau, y: &self.basis * (y / tau), z: z / tau, pres, dres, iterations: it };
            }
            if hz + by < 0.0 {
                let pinf = (aty.clone() + &gtz).norm() / resx0 / (-(hz + by));
                if pinf <= opts.tol {
                    let k = -(hz + by);
                    return Raw { status: Status::Infeasible, x: x / tau, y: &self.basis * (y / k), z: z / k, pres, dres, iterations: it };
                }
            }
            if cx < 0.0 {
                let dinf = (ax.norm() / resy0).max((&gx + &s).norm() / resz0) / (-cx);
                if dinf <= opts.tol {
                    return Raw { status: Status::Unbounded, x: x / (-cx), y: &self.basis * (y / tau), z: z / tau, pres, dres, iterations: it };
                }
            }
            if it == opts.max_iter {
                break;
            }

            let sc = match pending.take() {
                Some(sc) => sc,
                None => match self.scalings(&s, &z) {
                    Some(sc) => sc,
                    None => return self.best_failure(best, it),
                },
            };
            let mu = (sz + tau * kappa) / (degree as f64 + 1.0);
            let Some(fac) = self.factor(&sc) else {
                return self.best_failure(best, it);
            };
            let Some((vx, vy, vz)) = self.kkt_solve(&fac, &sc, &(-&cp.c), &self.b, &self.h) else {
                return self.best_failure(best, it);
            };
            let mut htil = DVector::zeros(self.total);
            for (k, blk) in cp.blocks.iter().enumerate() {
                htil.rows_mut(self.offsets[k], blk.rows()).copy_from(&sc[k].winvt(self.block(&self.h, k)));
            }
            let denom = cp.c.dot(&vx) + self.b.dot(&vy) + htil.dot(&vz) - kappa / tau;

            let lam_sq: Vec<DVector<f64>> = sc.iter().map(Scaling::lam_sq).collect();
            let lam_f: Vec<DVector<f64>> = sc.iter().map(Scaling::lam_factors).collect();

            let direction = |eta: f64, bs: &[DVector<f64>], bkappa: f64| -> Option<Dir> {
                let rhox = &rx * (-eta);
                let rhoy = &ry * (-eta);
                let mut bz = &rz * (-eta);
                let rhot = -eta * rt;
                for (k, blk) in cp.blocks.iter().enumerate() {
                    let q = bs[k].component_div(&lam_f[k]);
                    let wq = sc[k].wt(q.as_slice());
                    let mut seg = bz.rows_mut(self.offsets[k], blk.rows());
                    seg -= wq;
                }
                let (ux, uy, uz) = self.kkt_solve(&fac, &sc, &rhox, &rhoy, &bz)?;
                let dtau = (rhot - bkappa / tau - cp.c.dot(&ux) - self.b.dot(&uy) - htil.dot(&uz)) / denom;
                let dx = ux + &vx * dtau;
                let dy = uy + &vy * dtau;
                let dzw = uz + &vz * dtau;
                // The slack step comes from the residual equation
                // G dx + ds − h dτ = −η rz rather than Wᵀ(q − dzw): near the
                // boundary W is ill-conditioned and the round trip loses the
                // primal residual. Its scaled image is a congruence, so cone
                // membership is still judged exactly.
                let ds = &rz * (-eta) - self.g_mul(&dx) + &self.h * dtau;
                let mut dsw = DVector::zeros(self.total);
                for (k, blk) in cp.blocks.iter().enumerate() {
                    dsw.rows_mut(self.offsets[k], blk.rows()).copy_from(&sc[k].winvt(self.block(&ds, k)));
                }
                let dkappa = (bkappa - kappa * dtau) / tau;
                Some(Dir { dx, dy, ds, dsw, dzw, dtau, dkappa })
            };
            let max_alpha = |d: &Dir| -> f64 {
                let mut a = f64::INFINITY;
                for (k, _) in cp.blocks.iter().enumerate() {
                    a = a.min(sc[k].max_step(self.block(&d.dsw, k)));
                    a = a.min(sc[k].max_step(self.block(&d.dzw, k)));
                }
                if d.dtau < 0.0 {
                    a = a.min(-tau / d.dtau);
                }
                if d.dkappa < 0.0 {
                    a = a.min(-kappa / d.dkappa);
                }
                a
            };

            // predictor
            let bs_aff: Vec<DVector<f64>> = lam_sq.iter().map(|l| -l).collect();
            let Some(aff) = direction(1.0, &bs_aff, -tau * kappa) else {
                return self.best_failure(best, it);
            };
            let alpha_aff = max_alpha(&aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3);

            // corrector
            let mut bs = Vec::with_capacity(cp.blocks.len());
            for (k, blk) in cp.blocks.iter().enumerate() {
                let cross = circ(blk.kind, self.block(&aff.dsw, k), self.block(&aff.dzw, k));
                let e = identity_vec(blk.kind, blk.rows());
                bs.push(-&lam_sq[k] - cross + e * (sigma * mu));
            }
            let bk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
            let Some(d) = direction(1.0 - sigma, &bs, bk) else {
                return self.best_failure(best, it);
            };
            let mut alpha = (0.99 * max_alpha(&d)).min(1.0);
            if !alpha.is_finite() || alpha <= 0.0 {
                return self.best_failure(best, it);
            }

            let mut dz = DVector::zeros(self.total);
            for (k, blk) in cp.blocks.iter().enumerate() {
                dz.rows_mut(self.offsets[k], blk.rows()).copy_from(&sc[k].winv(self.block(&d.dzw, k)));
            }
            // The step length is exact in the scaled space, but rounding in the
            // unscaled update can still leave an iterate without a Cholesky
            // factor near the boundary. Shorten the step until both are interior.
            loop {
                let s_new = &s + &d.ds * alpha;
                let z_new = &z + &dz * alpha;
                if let Some(next) = self.scalings(&s_new, &z_new) {
                    s = s_new;
                    z = z_new;
                    pending = Some(next);
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    return self.best_failure(best, it);
                }
            }
            x += &d.dx * alpha;
            y += &d.dy * alpha;
            tau += alpha * d.dtau;
            kappa += alpha * d.dkappa;
            if !(tau > 0.0 && kappa > 0.0) || x.iter().any(|v| !v.is_finite()) {
                return self.best_failure(best, it);
            }
        }
        self.best_failure(best, opts.max_iter)
    }

    fn scalings(&self, s: &DVector<f64>, z: &DVector<f64>) -> Option<Vec<Scaling>> {
        self.cp.blocks.iter().enumerate().map(|(k, blk)| Scaling::nt(blk.kind, self.block(s, k), self.block(z, k))).collect()
    }

    #[allow(clippy::type_complexity)]
    fn best_failure(&self, best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>, f64, f64, f64)>, it: usize) -> Raw {
        match best {
            Some((_, x, y, z, tau, pres, dres)) => Raw {
                status: Status::NumericalFailure,
                x: x / tau,
                y: &self.basis * (y / tau),
                z: z / tau,
                pres,
                dres,
                iterations: it,
            },
            None => Raw {
                status: Status::NumericalFailure,
                x: DVector::zeros(self.cp.n),
                y: DVector::zeros(self.cp.a.nrows()),
                z: DVector::zeros(self.total),
                pres: f64::INFINITY,
                dres: f64::INFINITY,
                iterations: it,
            },
        }
    }
}

struct Dir {
    dx: DVector<f64>,
    dy: DVector<f64>,
    ds: DVector<f64>,
    dsw: DVector<f64>,
    dzw: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

// ---------------------------------------------------------------- results

fn assemble(p: &ConeProgram, cp: &Compiled, raw: Raw, tol: f64) -> Solution {
    let sign = p.sense.sign();
    let primal: Vec<HermitianOperator> = p
        .variables()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let off = cp.var_offset[i];
            let n = cp.var_side[i];
            HermitianOperator::from_raw(v.dims.clone(), hmat(&raw.x.as_slice()[off..off + n * n], n))
        })
        .collect();

    let mut offsets = Vec::new();
    let mut total = 0;
    for blk in &cp.blocks {
        offsets.push(total);
        total += blk.rows();
    }
    let zblock = |k: usize| -> HermitianOperator {
        let blk = &cp.blocks[k];
        let seg = &raw.z.as_slice()[offsets[k]..offsets[k] + blk.rows()];
        let dims = match blk.origin {
            BlockOrigin::Ineq(c) => p.constraint(c).rhs.dims().to_vec(),
            BlockOrigin::VarPsd(v) | BlockOrigin::VarPpt(v, _) => p.variable(v).dims.clone(),
        };
        match blk.kind {
            BlockKind::Lp => HermitianOperator::from_raw(dims, crate::linalg::CMat::from_element(1, 1, seg[0].into())),
            BlockKind::Psd(m) => realify_adjoint(&smat(seg, m), dims),
        }
    };

    let mut constraint_duals = Vec::new();
    for (ci, con) in p.constraints().iter().enumerate() {
        let dual = match cp.eq_rows[ci] {
            Some((r0, r1)) => {
                let n = con.rhs.dim();
                let ys: Vec<f64> = raw.y.as_slice()[r0..r1].iter().map(|v| -sign * v).collect();
                HermitianOperator::from_raw(con.rhs.dims().to_vec(), hmat(&ys, n))
            }
            None => {
                let k = cp.blocks.iter().position(|b| b.origin == BlockOrigin::Ineq(super::ConstraintId(ci))).expect("block");
                zblock(k)
            }
        };
        constraint_duals.push(dual);
    }
    let mut cone_duals: Vec<Option<ConeDual>> = vec![None; p.variables().len()];
    for (k, blk) in cp.blocks.iter().enumerate() {
        match blk.origin {
            BlockOrigin::VarPsd(v) => {
                let entry = cone_duals[v.0].get_or_insert_with(|| ConeDual { psd: HermitianOperator::zeros(p.variable(v).dims.clone()), ppt: None });
                entry.psd = zblock(k);
            }
            BlockOrigin::VarPpt(v, sub) => {
                let entry = cone_duals[v.0].get_or_insert_with(|| ConeDual { psd: HermitianOperator::zeros(p.variable(v).dims.clone()), ppt: None });
                entry.ppt = Some((sub, zblock(k)));
            }
            BlockOrigin::Ineq(_) => {}
        }
    }
    for (i, v) in p.variables().iter().enumerate() {
        if let ConeTag::PsdPpt { subsystem } = v.cone {
            if let Some(cd) = cone_duals[i].as_mut() {
                if cd.ppt.is_none() {
                    cd.ppt = Some((subsystem, HermitianOperator::zeros(v.dims.clone())));
                }
            }
        }
    }

    let objective_value = p.evaluate_objective(&primal);
    let mut dual_objective = p.objective_constant();
    for (ci, con) in p.constraints().iter().enumerate() {
        let w = match con.kind {
            super::ConstraintKind::Equality => 1.0,
            super::ConstraintKind::PsdInequality => sign,
        };
        dual_objective += w * con.rhs.inner(&constraint_duals[ci]);
    }
    Solution {
        status: raw.status,
        primal,
        constraint_duals,
        cone_duals,
        objective_value,
        dual_objective,
        gap: (objective_value - dual_objective).abs(),
        primal_residual: raw.pres,
        dual_residual: raw.dres,
        iterations: raw.iterations,
        tol,
    }
}
