use serde::Serialize;

use super::{ConeProgram, ConeTag, ConstraintKind, Sense, Solution};
use crate::error::Result;
use crate::linalg::HermitianOperator;

/// Residuals recomputed from the symbolic program, independent of the solver's
/// internal representation.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub equality_residual: f64,
    /// Smallest eigenvalue over all `Σ terms − rhs` of inequality constraints.
    pub inequality_floor: f64,
    /// Smallest eigenvalue over all primal cone memberships.
    pub primal_cone_floor: f64,
    pub stationarity_residual: f64,
    /// Smallest eigenvalue over all inequality multipliers and cone slacks.
    pub dual_cone_floor: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub complementarity: f64,
    pub passed: bool,
}

pub fn verify_solution(p: &ConeProgram, s: &Solution, tol: f64) -> Result<ResidualReport> {
    let x = &s.primal;
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut eq_res: f64 = 0.0;
    let mut ineq_floor = f64::INFINITY;
    let mut compl: f64 = 0.0;
    for (ci, con) in p.constraints().iter().enumerate() {
        let lhs = p.evaluate_lhs(super::ConstraintId(ci), x)?;
        let diff = lhs.sub(&con.rhs);
        match con.kind {
            ConstraintKind::Equality => eq_res = eq_res.max(diff.max_abs_diff(&HermitianOperator::zeros(diff.dims().to_vec()))),
            ConstraintKind::PsdInequality => {
                ineq_floor = ineq_floor.min(diff.min_eigenvalue());
                compl = compl.max(diff.inner(&s.constraint_duals[ci]).abs());
            }
        }
    }

    let mut cone_floor = f64::INFINITY;
    let mut dual_floor = f64::INFINITY;
    for (ci, con) in p.constraints().iter().enumerate() {
        if con.kind == ConstraintKind::PsdInequality {
            dual_floor = dual_floor.min(s.constraint_duals[ci].min_eigenvalue());
        }
    }
    let mut stat: f64 = 0.0;
    for (vi, var) in p.variables().iter().enumerate() {
        let xv = &x[vi];
        let mut grad = HermitianOperator::zeros(var.dims.clone());
        for (ci, con) in p.constraints().iter().enumerate() {
            let w = match con.kind {
                ConstraintKind::Equality => 1.0,
                ConstraintKind::PsdInequality => sign,
            };
            for t in con.terms.iter().filter(|t| t.var.0 == vi) {
                grad.add_scaled(w, &t.adjoint().apply(&s.constraint_duals[ci])?);
            }
        }
        if var.cone != ConeTag::Free {
            cone_floor = cone_floor.min(xv.min_eigenvalue());
            if let Some(cd) = &s.cone_duals[vi] {
                dual_floor = dual_floor.min(cd.psd.min_eigenvalue());
                compl = compl.max(cd.psd.inner(xv).abs());
                grad.add_scaled(sign, &cd.psd);
                if let Some((sub, q)) = &cd.ppt {
                    let ptx = xv.partial_transpose(*sub)?;
                    cone_floor = cone_floor.min(ptx.min_eigenvalue());
                    dual_floor = dual_floor.min(q.min_eigenvalue());
                    compl = compl.max(q.inner(&ptx).abs());
                    grad.add_scaled(sign, &q.partial_transpose(*sub)?);
                }
            }
        }
        let c = p.objective_coefficient(super::VarId(vi));
        stat = stat.max(grad.max_abs_diff(&c));
    }

    let pobj = p.evaluate_objective(x);
    let mut dobj = p.objective_constant();
    for (ci, con) in p.constraints().iter().enumerate() {
        let w = match con.kind {
            ConstraintKind::Equality => 1.0,
            ConstraintKind::PsdInequality => sign,
        };
        dobj += w * con.rhs.inner(&s.constraint_duals[ci]);
    }
    let gap = (pobj - dobj).abs();
    let lim = 10.0 * tol;
    let scale = pobj.abs().max(1.0);
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    let ineq_floor = finite(ineq_floor);
    let cone_floor = finite(cone_floor);
    let dual_floor = finite(dual_floor);
    let passed = eq_res <= lim
        && ineq_floor >= -lim
        && cone_floor >= -lim
        && stat <= lim
        && dual_floor >= -lim
        && gap <= lim * scale
        && compl <= lim * scale;
    Ok(ResidualReport {
        equality_residual: eq_res,
        inequality_floor: ineq_floor,
        primal_cone_floor: cone_floor,
        stationarity_residual: stat,
        dual_cone_floor: dual_floor,
        primal_objective: pobj,
        dual_objective: dobj,
        gap,
        complementarity: compl,
        passed,
    })
}
