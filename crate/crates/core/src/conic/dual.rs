use super::{ConeProgram, ConeTag, ConstraintKind, LinOp, Sense, Term};
use crate::error::Result;

/// Lagrangian dual of `p`, following the sign conventions documented on
/// [`super::Solution`].
///
/// Dual variables, in order: one free `Y_e` per equality, one PSD `Z_i` per
/// inequality, then for every cone variable a PSD slack `P_v` and, for PPT
/// variables, a PSD `Q_v` entering as PT(Q_v). There is one equality per primal
/// variable.
pub fn dualize(p: &ConeProgram) -> Result<ConeProgram> {
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut d = ConeProgram::new(p.sense.flipped());
    let mut mult = Vec::new();
    for con in p.constraints() {
        let (name, cone) = match con.kind {
            ConstraintKind::Equality => (format!("Y[{}]", con.name), ConeTag::Free),
            ConstraintKind::PsdInequality => (format!("Z[{}]", con.name), ConeTag::Psd),
        };
        mult.push(d.add_variable(name, con.rhs.dims().to_vec(), cone));
    }
    let mut slacks = Vec::new();
    for v in p.variables() {
        let ps = match v.cone {
            ConeTag::Free => None,
            ConeTag::Psd => Some((d.add_variable(format!("P[{}]", v.name), v.dims.clone(), ConeTag::Psd), None)),
            ConeTag::PsdPpt { subsystem } => {
                let pv = d.add_variable(format!("P[{}]", v.name), v.dims.clone(), ConeTag::Psd);
                let qv = d.add_variable(format!("Q[{}]", v.name), v.dims.clone(), ConeTag::Psd);
                Some((pv, Some((qv, subsystem))))
            }
        };
        slacks.push(ps);
    }

    for (vi, v) in p.variables().iter().enumerate() {
        let mut terms = Vec::new();
        for (ci, con) in p.constraints().iter().enumerate() {
            let w = match con.kind {
                ConstraintKind::Equality => 1.0,
                ConstraintKind::PsdInequality => sign,
            };
            for t in con.terms.iter().filter(|t| t.var.0 == vi) {
                let mut adj = t.adjoint();
                adj.var = mult[ci];
                terms.push(adj.scaled(w));
            }
        }
        if let Some((pv, q)) = slacks[vi] {
            terms.push(Term::new(pv).scaled(sign));
            if let Some((qv, sub)) = q {
                terms.push(Term::new(qv).scaled(sign).then(LinOp::PartialTranspose { subsystem: sub }));
            }
        }
        let rhs = p.objective_coefficient(super::VarId(vi));
        if terms.is_empty() {
            // a variable that appears nowhere: its coefficient must vanish
            let z = d.add_variable(format!("zero[{}]", v.name), v.dims.clone(), ConeTag::Free);
            terms.push(Term::new(z).scaled(0.0));
        }
        d.add_equality(format!("stationarity[{}]", v.name), terms, rhs)?;
    }

    for (ci, con) in p.constraints().iter().enumerate() {
        let w = match con.kind {
            ConstraintKind::Equality => 1.0,
            ConstraintKind::PsdInequality => sign,
        };
        d.add_objective(mult[ci], con.rhs.scale(w))?;
    }
    d.set_objective_constant(p.objective_constant());
    Ok(d)
}

