//! Conic programs over Hermitian matrix variables.
//!
//! A program has Hermitian block variables (scalars are blocks with empty dims),
//! each free, PSD, or PSD with PSD partial transpose. Constraints are affine
//! equalities `Σ terms = rhs` and linear matrix inequalities `Σ terms ⪰ rhs`,
//! where a term is a scaled chain of primitive maps applied to one variable.
//! The objective is `Σ_v Re tr(C_v X_v) + constant`.

mod compile;
mod dual;
mod dump;
mod ipm;
mod realify;
mod verify;

pub use dual::dualize;
pub use ipm::{check_tol, solve, solve_with, SolverOptions};
pub use realify::{derealify, realify};
pub use verify::{verify_solution, ResidualReport};

use crate::error::{Error, Result};
use crate::linalg::{CMat, HermitianOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    pub fn flipped(self) -> Sense {
        match self {
            Sense::Minimize => Sense::Maximize,
            Sense::Maximize => Sense::Minimize,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConeTag {
    Free,
    Psd,
    /// PSD and PSD after partial transpose on `subsystem`.
    PsdPpt { subsystem: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub dims: Vec<usize>,
    pub cone: ConeTag,
}

/// Primitive linear maps on Hermitian operators.
#[derive(Clone, Debug, PartialEq)]
pub enum LinOp {
    PartialTrace { dims_in: Vec<usize>, keep: Vec<usize> },
    /// X ↦ X ⊗ 1 with X placed on `keep` of `dims_out`.
    IdentityExtend { dims_out: Vec<usize>, keep: Vec<usize> },
    PartialTranspose { subsystem: usize },
    Permute { perm: Vec<usize> },
    /// X ↦ K X K†.
    Sandwich { k: CMat, dims_in: Vec<usize>, dims_out: Vec<usize> },
}

impl LinOp {
    pub fn partial_trace(dims_in: &[usize], keep: &[usize]) -> LinOp {
        LinOp::PartialTrace { dims_in: dims_in.to_vec(), keep: keep.to_vec() }
    }

    pub fn extend(dims_out: &[usize], keep: &[usize]) -> LinOp {
        LinOp::IdentityExtend { dims_out: dims_out.to_vec(), keep: keep.to_vec() }
    }

    pub fn apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        match self {
            LinOp::PartialTrace { dims_in, keep } => {
                if x.dims() != dims_in.as_slice() {
                    return Err(Error::input(format!("partial trace expects dims {dims_in:?}, got {:?}", x.dims())));
                }
                x.partial_trace(keep)
            }
            LinOp::IdentityExtend { dims_out, keep } => x.identity_extend(dims_out, keep),
            LinOp::PartialTranspose { subsystem } => x.partial_transpose(*subsystem),
            LinOp::Permute { perm } => x.permute(perm),
            LinOp::Sandwich { k, dims_in, dims_out } => {
                if x.dims() != dims_in.as_slice() {
                    return Err(Error::input(format!("sandwich expects dims {dims_in:?}, got {:?}", x.dims())));
                }
                x.conjugate_by(k, dims_out.clone())
            }
        }
    }

    pub fn adjoint(&self) -> LinOp {
        match self {
            LinOp::PartialTrace { dims_in, keep } => LinOp::IdentityExtend { dims_out: dims_in.clone(), keep: keep.clone() },
            LinOp::IdentityExtend { dims_out, keep } => LinOp::PartialTrace { dims_in: dims_out.clone(), keep: keep.clone() },
            LinOp::PartialTranspose { subsystem } => LinOp::PartialTranspose { subsystem: *subsystem },
            LinOp::Permute { perm } => {
                let mut inv = vec![0; perm.len()];
                for (k, &p) in perm.iter().enumerate() {
                    inv[p] = k;
                }
                LinOp::Permute { perm: inv }
            }
            LinOp::Sandwich { k, dims_in, dims_out } => {
                LinOp::Sandwich { k: k.adjoint(), dims_in: dims_out.clone(), dims_out: dims_in.clone() }
            }
        }
    }

    fn out_dims(&self, dims_in: &[usize]) -> Result<Vec<usize>> {
        let bad = || Error::input(format!("operator {self:?} cannot act on dims {dims_in:?}"));
        match self {
            LinOp::PartialTrace { dims_in: d, keep } => {
                if d != dims_in || keep.iter().any(|&k| k >= d.len()) {
                    return Err(bad());
                }
                Ok(keep.iter().map(|&k| d[k]).collect())
            }
            LinOp::IdentityExtend { dims_out, keep } => {
                let inner: Vec<usize> = keep.iter().map(|&k| *dims_out.get(k).unwrap_or(&0)).collect();
                if inner != dims_in {
                    return Err(bad());
                }
                Ok(dims_out.clone())
            }
            LinOp::PartialTranspose { subsystem } => {
                if *subsystem >= dims_in.len() {
                    return Err(bad());
                }
                Ok(dims_in.to_vec())
            }
            LinOp::Permute { perm } => {
                if perm.len() != dims_in.len() || perm.iter().any(|&p| p >= dims_in.len()) {
                    return Err(bad());
                }
                Ok(perm.iter().map(|&p| dims_in[p]).collect())
            }
            LinOp::Sandwich { dims_in: d, dims_out, .. } => {
                if d != dims_in {
                    return Err(bad());
                }
                Ok(dims_out.clone())
            }
        }
    }
}

/// `coeff · ops[n-1](… ops[0](X_var))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub var: VarId,
    pub coeff: f64,
    pub ops: Vec<LinOp>,
}

impl Term {
    pub fn new(var: VarId) -> Term {
        Term { var, coeff: 1.0, ops: Vec::new() }
    }

    pub fn scaled(mut self, c: f64) -> Term {
        self.coeff *= c;
        self
    }

    pub fn then(mut self, op: LinOp) -> Term {
        self.ops.push(op);
        self
    }

    pub fn apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        let mut cur = x.clone();
        for op in &self.ops {
            cur = op.apply(&cur)?;
        }
        Ok(cur.scale(self.coeff))
    }

    pub fn adjoint(&self) -> Term {
        Term { var: self.var, coeff: self.coeff, ops: self.ops.iter().rev().map(LinOp::adjoint).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Equality,
    /// Σ terms ⪰ rhs.
    PsdInequality,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub kind: ConstraintKind,
    pub terms: Vec<Term>,
    pub rhs: HermitianOperator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeProgram {
    pub sense: Sense,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(VarId, HermitianOperator)>,
    objective_constant: f64,
}

impl ConeProgram {
    pub fn new(sense: Sense) -> Self {
        ConeProgram { sense, variables: Vec::new(), constraints: Vec::new(), objective: Vec::new(), objective_constant: 0.0 }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, dims: Vec<usize>, cone: ConeTag) -> VarId {
        if let ConeTag::PsdPpt { subsystem } = cone {
            assert!(subsystem < dims.len(), "PPT subsystem out of range");
        }
        self.variables.push(Variable { name: name.into(), dims, cone });
        VarId(self.variables.len() - 1)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.variables[v.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, c: ConstraintId) -> &Constraint {
        &self.constraints[c.0]
    }

    pub fn objective(&self) -> &[(VarId, HermitianOperator)] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn term_dims(&self, t: &Term) -> Result<Vec<usize>> {
        let var = self
            .variables
            .get(t.var.0)
            .ok_or_else(|| Error::input(format!("term references undeclared variable {}", t.var.0)))?;
        let mut dims = var.dims.clone();
        for op in &t.ops {
            dims = op.out_dims(&dims)?;
        }
        Ok(dims)
    }

    fn push_constraint(&mut self, name: String, kind: ConstraintKind, terms: Vec<Term>, rhs: HermitianOperator) -> Result<ConstraintId> {
        if terms.is_empty() {
            return Err(Error::input(format!("constraint {name} has no terms")));
        }
        for t in &terms {
            let d = self.term_dims(t)?;
            if d != rhs.dims() {
                return Err(Error::input(format!(
                    "constraint {name}: term on {} has dims {d:?}, right side has {:?}",
                    self.variables[t.var.0].name,
                    rhs.dims()
                )));
            }
        }
        self.constraints.push(Constraint { name, kind, terms, rhs });
        Ok(ConstraintId(self.constraints.len() - 1))
    }

    pub fn add_equality(&mut self, name: impl Into<String>, terms: Vec<Term>, rhs: HermitianOperator) -> Result<ConstraintId> {
        self.push_constraint(name.into(), ConstraintKind::Equality, terms, rhs)
    }

    /// Σ terms ⪰ rhs.
    pub fn add_inequality(&mut self, name: impl Into<String>, terms: Vec<Term>, rhs: HermitianOperator) -> Result<ConstraintId> {
        self.push_constraint(name.into(), ConstraintKind::PsdInequality, terms, rhs)
    }

    /// Adds Re tr(coeff · X_var) to the objective.
    pub fn add_objective(&mut self, var: VarId, coeff: HermitianOperator) -> Result<()> {
        let v = self
            .variables
            .get(var.0)
            .ok_or_else(|| Error::input(format!("objective references undeclared variable {}", var.0)))?;
        if v.dims != coeff.dims() {
            return Err(Error::input(format!("objective coefficient dims {:?} differ from {:?}", coeff.dims(), v.dims)));
        }
        self.objective.push((var, coeff));
        Ok(())
    }

    pub fn set_objective_constant(&mut self, c: f64) {
        self.objective_constant = c;
    }

    /// Σ_v C_v with repeated entries merged.
    pub(crate) fn objective_coefficient(&self, v: VarId) -> HermitianOperator {
        let mut acc = HermitianOperator::zeros(self.variables[v.0].dims.clone());
        for (var, c) in &self.objective {
            if *var == v {
                acc = acc.add(c);
            }
        }
        acc
    }

    pub fn evaluate_objective(&self, values: &[HermitianOperator]) -> f64 {
        self.objective.iter().map(|(v, c)| c.inner(&values[v.0])).sum::<f64>() + self.objective_constant
    }

    /// Σ terms of a constraint at `values`.
    pub fn evaluate_lhs(&self, c: ConstraintId, values: &[HermitianOperator]) -> Result<HermitianOperator> {
        let con = &self.constraints[c.0];
        let mut acc = HermitianOperator::zeros(con.rhs.dims().to_vec());
        for t in &con.terms {
            acc = acc.add(&t.apply(&values[t.var.0])?);
        }
        Ok(acc)
    }

    /// Structured debug dump using the same matrix encoding as the file format.
    pub fn dump(&self) -> serde_json::Value {
        dump::program_to_json(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "OPTIMAL",
            Status::Infeasible => "INFEASIBLE",
            Status::Unbounded => "UNBOUNDED",
            Status::NumericalFailure => "NUMERICAL_FAILURE",
        };
        f.write_str(s)
    }
}

/// Multipliers of a variable's cone memberships: `psd` pairs with X ⪰ 0 and
/// `ppt` with PT(X) ⪰ 0, so the dual slack is `psd + PT(ppt)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeDual {
    pub psd: HermitianOperator,
    pub ppt: Option<(usize, HermitianOperator)>,
}

impl ConeDual {
    pub fn slack(&self) -> HermitianOperator {
        match &self.ppt {
            None => self.psd.clone(),
            Some((sub, q)) => self.psd.add(&q.partial_transpose(*sub).expect("ppt subsystem")),
        }
    }
}

/// Primal–dual pair returned by the solver.
///
/// Dual sign conventions, for objective coefficients `C_v`:
/// minimize: `C_v = Σ L*(Y_e) + Σ L*(Z_i) + S_v`, dual value `Σ⟨B_e,Y_e⟩ + Σ⟨D_i,Z_i⟩`;
/// maximize: `C_v = Σ L*(Y_e) − Σ L*(Z_i) − S_v`, dual value `Σ⟨B_e,Y_e⟩ − Σ⟨D_i,Z_i⟩`.
/// Inequality multipliers `Z_i` and cone slacks `S_v` are PSD in both cases.
///
/// For INFEASIBLE the dual fields hold a normalized Farkas certificate; for
/// UNBOUNDED the primal fields hold an improving ray.
#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    pub primal: Vec<HermitianOperator>,
    pub constraint_duals: Vec<HermitianOperator>,
    pub cone_duals: Vec<Option<ConeDual>>,
    pub objective_value: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub tol: f64,
}

impl Solution {
    pub fn value(&self, v: VarId) -> &HermitianOperator {
        &self.primal[v.0]
    }

    pub fn dual(&self, c: ConstraintId) -> &HermitianOperator {
        &self.constraint_duals[c.0]
    }

    pub fn into_result(self) -> Result<Solution> {
        if self.status == Status::Optimal {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status.to_string(),
                message: format!(
                    "after {} iterations: primal residual {:.3e}, dual residual {:.3e}, gap {:.3e}",
                    self.iterations, self.primal_residual, self.dual_residual, self.gap
                ),
                partial: Some(Box::new(self)),
            })
        }
    }
}
