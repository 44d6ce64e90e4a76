//! Robustness quantifiers for distributed measurements (RoBN), teleportation
//! instruments (RoT) and bipartite states (RoE).
//!
//! Separable cones are replaced by PSD ∩ PPT on the primal side. Values are
//! therefore lower bounds beyond 2⊗3 and every report says so.

mod properties;

pub use properties::{
    check_convexity, check_faithfulness, check_monotonicity, property_suite, Audit, PropertyCheck, PropertyKind, PropertyReport,
    PropertySubject, CONVEXITY_GRID, PROPERTY_TOL,
};

use crate::conic::{solve, ConeProgram, ConeTag, ConstraintId, LinOp, Sense, Solution, Term, VarId};
use crate::error::{Error, Result};
use crate::linalg::HermitianOperator;
use crate::qobj::{bell_measurement, build_distributed, BipartiteState, DistributedMeasurement, Povm, TeleportationInstrument};

pub const RELAXATION: &str = "PPT_OUTER";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    Robn,
    Rot,
    Roe,
}

impl Quantifier {
    pub fn name(self) -> &'static str {
        match self {
            Quantifier::Robn => "RoBN",
            Quantifier::Rot => "RoT",
            Quantifier::Roe => "RoE",
        }
    }
}

/// Optimal primal decomposition. Tilded objects are unnormalized:
/// Õ = (1 + r)·O, Ñ = r·N, σ̃ = (1 + r)·σ.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimalWitness {
    Robn { o: Vec<HermitianOperator>, n: Vec<HermitianOperator> },
    Rot { f: Vec<HermitianOperator>, sigma: HermitianOperator },
    Roe { sigma: HermitianOperator },
}

/// Dual multipliers. For RoBN, `a[k]` pairs with M_ab at k = a·o_B + b, and
/// B_b + C_a − A_ab = F_ab lies in the dual of the PPT cone. For RoT,
/// W_a = B − A_a. For RoE, W = 1 − A.
#[derive(Clone, Debug, PartialEq)]
pub enum DualCertificate {
    Robn {
        a: Vec<HermitianOperator>,
        b: Vec<HermitianOperator>,
        c: Vec<HermitianOperator>,
        d: HermitianOperator,
        e: HermitianOperator,
        f: Vec<HermitianOperator>,
    },
    Rot { a: Vec<HermitianOperator>, b: HermitianOperator, w: Vec<HermitianOperator> },
    Roe { a: HermitianOperator, w: HermitianOperator },
}

impl DualCertificate {
    /// The A-blocks paired with the measured object.
    pub fn a_blocks(&self) -> Vec<&HermitianOperator> {
        match self {
            DualCertificate::Robn { a, .. } | DualCertificate::Rot { a, .. } => a.iter().collect(),
            DualCertificate::Roe { a, .. } => vec![a],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessReport {
    pub quantifier: Quantifier,
    pub value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub tol: f64,
    pub iterations: usize,
    pub relaxation: &'static str,
    /// (o_A, o_B) for RoBN, (o, 1) for RoT, (1, 1) for RoE.
    pub outcomes: (usize, usize),
    pub primal_witness: PrimalWitness,
    pub dual_certificate: DualCertificate,
    /// Set by `robn_of_state`.
    pub roe_value: Option<f64>,
}

impl RobustnessReport {
    /// |primal − dual|.
    pub fn duality_gap(&self) -> f64 {
        (self.value - self.dual_value).abs()
    }

    /// |Σ_k tr[A_k X_k] − 1 − value| for the blocks X_k of the measured
    /// object: POVM elements, instrument Choi operators or the state.
    pub fn certificate_residual(&self, blocks: &[HermitianOperator]) -> f64 {
        let a = self.dual_certificate.a_blocks();
        let v: f64 = a.iter().zip(blocks).map(|(x, y)| x.inner(y)).sum();
        (v - 1.0 - self.value).abs()
    }
}

/// Program handles for RoBN.
pub struct RobnProgram {
    pub program: ConeProgram,
    r: VarId,
    o: Vec<VarId>,
    n: Vec<VarId>,
    ineq: Vec<ConstraintId>,
    ns_o_b: Vec<ConstraintId>,
    ns_o_a: Vec<ConstraintId>,
    norm_a: ConstraintId,
    norm_b: ConstraintId,
}

/// The relaxed RoBN primal: minimize r subject to M_ab + Ñ_ab ⪯ Õ_ab,
/// no-signalling marginals on Õ and Ñ, Σ_b Õ_b = Σ_a Õ_a = (1 + r)·1 and
/// Õ_ab ∈ PSD ∩ PPT, Ñ_ab ⪰ 0.
///
/// Ñ carries no normalization of its own. Any feasible point can be
/// completed by Ñ_ab = Õ_ab − M_ab, which then satisfies Σ Ñ = r·1, so the
/// optimal value is unchanged while the program keeps a strictly feasible point.
pub fn robn_program(m: &DistributedMeasurement) -> Result<RobnProgram> {
    let (oa, ob) = m.outcomes();
    let (da, db) = m.dims();
    let dims = vec![da, db];
    let mut p = ConeProgram::new(Sense::Minimize);
    let r = p.add_variable("r", vec![], ConeTag::Free);
    p.add_objective(r, HermitianOperator::scalar(1.0))?;
    let mut o = Vec::with_capacity(oa * ob);
    let mut n = Vec::with_capacity(oa * ob);
    for a in 0..oa {
        for b in 0..ob {
            o.push(p.add_variable(format!("O[{a},{b}]"), dims.clone(), ConeTag::PsdPpt { subsystem: 1 }));
            n.push(p.add_variable(format!("N[{a},{b}]"), dims.clone(), ConeTag::Psd));
        }
    }
    let o_a: Vec<VarId> = (0..oa).map(|a| p.add_variable(format!("O_A[{a}]"), vec![da], ConeTag::Free)).collect();
    let o_b: Vec<VarId> = (0..ob).map(|b| p.add_variable(format!("O_B[{b}]"), vec![db], ConeTag::Free)).collect();
    let n_a: Vec<VarId> = (0..oa).map(|a| p.add_variable(format!("N_A[{a}]"), vec![da], ConeTag::Free)).collect();
    let n_b: Vec<VarId> = (0..ob).map(|b| p.add_variable(format!("N_B[{b}]"), vec![db], ConeTag::Free)).collect();

    let mut ineq = Vec::with_capacity(oa * ob);
    for a in 0..oa {
        for b in 0..ob {
            let k = a * ob + b;
            ineq.push(p.add_inequality(
                format!("dominate[{a},{b}]"),
                vec![Term::new(o[k]), Term::new(n[k]).scaled(-1.0)],
                m.element(a, b).clone(),
            )?);
        }
    }
    let zero = HermitianOperator::zeros(dims.clone());
    let ns = |p: &mut ConeProgram, name: &str, blocks: &[VarId], marginal: VarId, keep: usize| {
        let mut terms: Vec<Term> = blocks.iter().map(|&v| Term::new(v)).collect();
        terms.push(Term::new(marginal).scaled(-1.0).then(LinOp::extend(&dims, &[keep])));
        p.add_equality(name.to_string(), terms, zero.clone())
    };
    let mut ns_o_b = Vec::with_capacity(ob);
    for b in 0..ob {
        let col: Vec<VarId> = (0..oa).map(|a| o[a * ob + b]).collect();
        ns_o_b.push(ns(&mut p, &format!("ns_O_B[{b}]"), &col, o_b[b], 1)?);
        let col: Vec<VarId> = (0..oa).map(|a| n[a * ob + b]).collect();
        ns(&mut p, &format!("ns_N_B[{b}]"), &col, n_b[b], 1)?;
    }
    let mut ns_o_a = Vec::with_capacity(oa);
    for a in 0..oa {
        ns_o_a.push(ns(&mut p, &format!("ns_O_A[{a}]"), &o[a * ob..(a + 1) * ob], o_a[a], 0)?);
        ns(&mut p, &format!("ns_N_A[{a}]"), &n[a * ob..(a + 1) * ob], n_a[a], 0)?;
    }
    let norm = |p: &mut ConeProgram, name: &str, parts: &[VarId], d: usize| {
        let mut terms: Vec<Term> = parts.iter().map(|&v| Term::new(v)).collect();
        terms.push(Term::new(r).scaled(-1.0).then(LinOp::extend(&[d], &[])));
        p.add_equality(name.to_string(), terms, HermitianOperator::identity(vec![d]))
    };
    let norm_b = norm(&mut p, "norm_O_B", &o_b, db)?;
    let norm_a = norm(&mut p, "norm_O_A", &o_a, da)?;
    Ok(RobnProgram { program: p, r, o, n, ineq, ns_o_b, ns_o_a, norm_a, norm_b })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-10..=1e-4).contains(&tol) {
        return Err(Error::input(format!("tolerance {tol} outside [1e-10, 1e-4]")));
    }
    Ok(())
}

fn min_eig_check(blocks: &[&HermitianOperator], tol: f64, what: &str) -> Result<()> {
    for (k, x) in blocks.iter().enumerate() {
        let l = x.min_eigenvalue();
        if l < -10.0 * tol {
            return Err(Error::check(format!("{what} block {k} has λ_min = {l:.3e}")));
        }
    }
    Ok(())
}

fn reproduce_check(name: &str, certified: f64, value: f64, gap: f64, tol: f64) -> Result<()> {
    let slack = 10.0 * gap.abs().max(tol) * (1.0 + value.abs());
    if (certified - value).abs() > slack {
        return Err(Error::check(format!(
            "{name} certificate gives {certified:.10} but the primal value is {value:.10}"
        )));
    }
    Ok(())
}

/// Relaxed RoBN with its dual certificate.
pub fn robn(m: &DistributedMeasurement, tol: f64) -> Result<RobustnessReport> {
    check_tol(tol)?;
    let h = robn_program(m)?;
    let sol = solve(&h.program, tol)?.into_result()?;
    robn_report(m, &h, &sol, tol)
}

fn robn_report(m: &DistributedMeasurement, h: &RobnProgram, sol: &Solution, tol: f64) -> Result<RobustnessReport> {
    let value = sol.value(h.r).trace();
    let a: Vec<HermitianOperator> = h.ineq.iter().map(|&c| sol.dual(c).clone()).collect();
    let b: Vec<HermitianOperator> = h.ns_o_b.iter().map(|&c| sol.dual(c).scale(-1.0)).collect();
    let c: Vec<HermitianOperator> = h.ns_o_a.iter().map(|&c| sol.dual(c).scale(-1.0)).collect();
    let d = sol.dual(h.norm_a).scale(-1.0);
    let e = sol.dual(h.norm_b).scale(-1.0);
    let f: Vec<HermitianOperator> = h
        .o
        .iter()
        .map(|v| sol.cone_duals[v.0].as_ref().expect("conic variable has a cone dual").slack())
        .collect();

    min_eig_check(&a.iter().collect::<Vec<_>>(), tol, "A")?;
    let certified: f64 = a.iter().zip(m.elements()).map(|(x, y)| x.inner(y)).sum::<f64>() - 1.0;
    reproduce_check("RoBN", certified, value, sol.gap, tol)?;
    let norm = d.trace() + e.trace();
    if (norm - 1.0).abs() > 10.0 * tol.max(sol.dual_residual) {
        return Err(Error::check(format!("tr D + tr E = {norm:.10}, expected 1")));
    }

    let o: Vec<HermitianOperator> = h.o.iter().map(|&v| sol.value(v).clone()).collect();
    let n: Vec<HermitianOperator> = h.n.iter().map(|&v| sol.value(v).clone()).collect();
    Ok(RobustnessReport {
        quantifier: Quantifier::Robn,
        value,
        dual_value: certified,
        gap: sol.gap,
        tol,
        iterations: sol.iterations,
        relaxation: RELAXATION,
        outcomes: m.outcomes(),
        primal_witness: PrimalWitness::Robn { o, n },
        dual_certificate: DualCertificate::Robn { a, b, c, d, e, f },
        roe_value: None,
    })
}

pub struct RotProgram {
    pub program: ConeProgram,
    f: Vec<VarId>,
    sigma: VarId,
    ineq: Vec<ConstraintId>,
    marginal: ConstraintId,
}

/// Minimize tr σ̃ subject to J_a ⪯ F_a, Σ_a F_a = (1/d_V)·1 ⊗ σ̃,
/// F_a ∈ PSD ∩ PPT, σ̃ ⪰ 0. The objective constant −1 gives RoT directly.
pub fn rot_program(t: &TeleportationInstrument) -> Result<RotProgram> {
    let (dv, db) = t.dims();
    let dims = vec![dv, db];
    let mut p = ConeProgram::new(Sense::Minimize);
    let f: Vec<VarId> = (0..t.outcomes())
        .map(|a| p.add_variable(format!("F[{a}]"), dims.clone(), ConeTag::PsdPpt { subsystem: 1 }))
        .collect();
    let sigma = p.add_variable("sigma", vec![db], ConeTag::Psd);
    p.add_objective(sigma, HermitianOperator::identity(vec![db]))?;
    p.set_objective_constant(-1.0);
    let mut ineq = Vec::new();
    for (a, j) in t.elements().iter().enumerate() {
        ineq.push(p.add_inequality(format!("dominate[{a}]"), vec![Term::new(f[a])], j.clone())?);
    }
    let mut terms: Vec<Term> = f.iter().map(|&v| Term::new(v)).collect();
    terms.push(Term::new(sigma).scaled(-1.0 / dv as f64).then(LinOp::extend(&dims, &[1])));
    let marginal = p.add_equality("marginal", terms, HermitianOperator::zeros(dims.clone()))?;
    Ok(RotProgram { program: p, f, sigma, ineq, marginal })
}

/// Relaxed RoT with its dual certificate.
pub fn rot(t: &TeleportationInstrument, tol: f64) -> Result<RobustnessReport> {
    check_tol(tol)?;
    let h = rot_program(t)?;
    let sol = solve(&h.program, tol)?.into_result()?;
    let value = sol.objective_value;
    let a: Vec<HermitianOperator> = h.ineq.iter().map(|&c| sol.dual(c).clone()).collect();
    let b = sol.dual(h.marginal).scale(-1.0);
    let w: Vec<HermitianOperator> = a.iter().map(|x| b.sub(x)).collect();
    min_eig_check(&a.iter().collect::<Vec<_>>(), tol, "A")?;
    let certified: f64 = a.iter().zip(t.elements()).map(|(x, y)| x.inner(y)).sum::<f64>() - 1.0;
    reproduce_check("RoT", certified, value, sol.gap, tol)?;
    Ok(RobustnessReport {
        quantifier: Quantifier::Rot,
        value,
        dual_value: certified,
        gap: sol.gap,
        tol,
        iterations: sol.iterations,
        relaxation: RELAXATION,
        outcomes: (t.outcomes(), 1),
        primal_witness: PrimalWitness::Rot {
            f: h.f.iter().map(|&v| sol.value(v).clone()).collect(),
            sigma: sol.value(h.sigma).clone(),
        },
        dual_certificate: DualCertificate::Rot { a, b, w },
        roe_value: None,
    })
}

pub struct RoeProgram {
    pub program: ConeProgram,
    sigma: VarId,
    ineq: ConstraintId,
}

/// Minimize tr σ̃ − 1 subject to ρ ⪯ σ̃, σ̃ ∈ PSD ∩ PPT.
pub fn roe_program(rho: &BipartiteState) -> Result<RoeProgram> {
    let dims = rho.op().dims().to_vec();
    let mut p = ConeProgram::new(Sense::Minimize);
    let sigma = p.add_variable("sigma", dims.clone(), ConeTag::PsdPpt { subsystem: 1 });
    p.add_objective(sigma, HermitianOperator::identity(dims))?;
    p.set_objective_constant(-1.0);
    let ineq = p.add_inequality("dominate", vec![Term::new(sigma)], rho.op().clone())?;
    Ok(RoeProgram { program: p, sigma, ineq })
}

/// Relaxed RoE with its dual certificate.
pub fn roe(rho: &BipartiteState, tol: f64) -> Result<RobustnessReport> {
    check_tol(tol)?;
    let h = roe_program(rho)?;
    let sol = solve(&h.program, tol)?.into_result()?;
    let value = sol.objective_value;
    let a = sol.dual(h.ineq).clone();
    let w = HermitianOperator::identity(a.dims().to_vec()).sub(&a);
    min_eig_check(&[&a], tol, "A")?;
    let certified = a.inner(rho.op()) - 1.0;
    reproduce_check("RoE", certified, value, sol.gap, tol)?;
    Ok(RobustnessReport {
        quantifier: Quantifier::Roe,
        value,
        dual_value: certified,
        gap: sol.gap,
        tol,
        iterations: sol.iterations,
        relaxation: RELAXATION,
        outcomes: (1, 1),
        primal_witness: PrimalWitness::Roe { sigma: sol.value(h.sigma).clone() },
        dual_certificate: DualCertificate::Roe { a, w },
        roe_value: None,
    })
}

/// RoBN of the Bell/Bell distributed measurement on ρ, compared against RoE(ρ).
/// With `seesaw_rounds > 0`, alternately re-optimizes Alice's and Bob's
/// POVMs against the current certificate and keeps the best value found.
pub fn robn_of_state(rho: &BipartiteState, tol: f64, seesaw_rounds: usize) -> Result<RobustnessReport> {
    check_tol(tol)?;
    let (da, db) = rho.dims();
    let mut ma = bell_measurement(da);
    let mut mb = bell_measurement(db);
    let mut best = robn(&build_distributed(&ma, &mb, rho)?, tol)?;
    for round in 0..seesaw_rounds {
        let alice_turn = round % 2 == 0;
        let new = seesaw_step(&ma, &mb, rho, &best, alice_turn, tol)?;
        if alice_turn {
            ma = new;
        } else {
            mb = new;
        }
        let rep = robn(&build_distributed(&ma, &mb, rho)?, tol)?;
        if rep.value > best.value {
            best = rep;
        }
    }
    let e = roe(rho, tol)?;
    best.roe_value = Some(e.value);
    let slack = 10.0 * tol * (1.0 + e.value.abs());
    if best.value > e.value + slack || (seesaw_rounds == 0 && (best.value - e.value).abs() > slack) {
        return Err(Error::check(format!(
            "RoBN of the Bell construction is {:.10} but RoE is {:.10}",
            best.value, e.value
        )));
    }
    Ok(best)
}

/// Best response of one party against the A-blocks of `rep`.
fn seesaw_step(
    ma: &Povm,
    mb: &Povm,
    rho: &BipartiteState,
    rep: &RobustnessReport,
    alice: bool,
    tol: f64,
) -> Result<Povm> {
    let a = rep.dual_certificate.a_blocks();
    let (da, dap) = (ma.dims()[0], ma.dims()[1]);
    let (dbp, db) = (mb.dims()[0], mb.dims()[1]);
    let full = [da, dap, dbp, db];
    let r = rho.op().identity_extend(&full, &[1, 2])?;
    let ob = mb.outcomes();
    let n_out = if alice { ma.outcomes() } else { ob };
    let mut weights = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let mut acc = HermitianOperator::zeros(if alice { vec![da, dap] } else { vec![dbp, db] });
        for other in 0..(if alice { ob } else { ma.outcomes() }) {
            let (ia, ib) = if alice { (k, other) } else { (other, k) };
            let ahat = a[ia * ob + ib].identity_extend(&full, &[0, 3])?;
            let joint = HermitianOperator::from_raw(full.to_vec(), ahat.matrix() * r.matrix());
            let (partner, keep, pos) = if alice { (&mb.elements()[ib], [0, 1], [2, 3]) } else { (&ma.elements()[ia], [2, 3], [0, 1]) };
            let pe = partner.identity_extend(&full, &pos)?;
            let prod = HermitianOperator::from_raw(full.to_vec(), pe.matrix() * joint.matrix());
            acc.add_scaled(1.0, &prod.partial_trace(&keep)?);
        }
        weights.push(acc);
    }
    best_povm(&weights, tol)
}

/// POVM {P_k} maximizing Σ_k tr[P_k X_k].
pub fn best_povm(x: &[HermitianOperator], tol: f64) -> Result<Povm> {
    let dims = x[0].dims().to_vec();
    let mut p = ConeProgram::new(Sense::Maximize);
    let vars: Vec<VarId> = (0..x.len()).map(|k| p.add_variable(format!("P[{k}]"), dims.clone(), ConeTag::Psd)).collect();
    for (v, xk) in vars.iter().zip(x) {
        p.add_objective(*v, xk.clone())?;
    }
    p.add_equality("complete", vars.iter().map(|&v| Term::new(v)).collect(), HermitianOperator::identity(dims.clone()))?;
    let sol = solve(&p, tol)?.into_result()?;
    let mut elements: Vec<HermitianOperator> = vars.iter().map(|&v| sol.value(v).map_spectrum(|l| l.max(0.0))).collect();
    // Restore exact completeness after clipping: P_k ↦ S^{-1/2} P_k S^{-1/2}.
    let mut s = HermitianOperator::zeros(dims.clone());
    for e in &elements {
        s.add_scaled(1.0, e);
    }
    let s_inv_half = s.map_spectrum(|l| 1.0 / l.max(1e-300).sqrt());
    for e in elements.iter_mut() {
        *e = e.conjugate_by(s_inv_half.matrix(), dims.clone())?;
    }
    Povm::new(elements)
}

#[cfg(test)]
mod tests;
