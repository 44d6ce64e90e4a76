//! POVMs, bipartite states, distributed measurements, teleportation
//! instruments and local simulation subroutines.
//!
//! Positional subsystem conventions: measurement construction works on
//! (A, A′, B′, B) and Choi construction on (V, A, A′, B′). Alice's POVM acts
//! on [A, A′], Bob's on [B′, B] and the shared state on [A′, B′].

mod random;

pub use random::{
    random_channel, random_povm, random_separable, random_state, random_stochastic_matrix, random_subroutine, random_unitary,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::subsystems::total_dim;
use crate::linalg::{heisenberg_weyl, kron_mat, max_entangled, CMat, HermitianOperator, LinearMapOnOperators};

pub const VALIDITY_TOL: f64 = 1e-10;

fn check_density(rho: &HermitianOperator, what: &str) -> Result<()> {
    let lmin = rho.min_eigenvalue();
    if lmin < -VALIDITY_TOL {
        return Err(Error::input(format!("{what} is not PSD (λ_min = {lmin:.3e})")));
    }
    if (rho.trace() - 1.0).abs() > VALIDITY_TOL {
        return Err(Error::input(format!("{what} has trace {:.12}", rho.trace())));
    }
    Ok(())
}

/// Checks PSD elements with a common dims list that sum to the identity.
fn check_complete(elements: &[HermitianOperator], what: &str) -> Result<()> {
    let Some(first) = elements.first() else {
        return Err(Error::input(format!("{what} has no elements")));
    };
    let mut sum = HermitianOperator::zeros(first.dims().to_vec());
    for (k, e) in elements.iter().enumerate() {
        if e.dims() != first.dims() {
            return Err(Error::input(format!("{what} element {k} has dims {:?}, expected {:?}", e.dims(), first.dims())));
        }
        let lmin = e.min_eigenvalue();
        if lmin < -VALIDITY_TOL {
            return Err(Error::input(format!("{what} element {k} is not PSD (λ_min = {lmin:.3e})")));
        }
        sum.add_scaled(1.0, e);
    }
    let dev = sum.max_abs_diff(&HermitianOperator::identity(first.dims().to_vec()));
    if dev > VALIDITY_TOL {
        return Err(Error::input(format!("{what} elements sum to the identity only up to {dev:.3e}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        check_complete(&elements, "POVM")?;
        Ok(Povm { elements })
    }

    /// The single-outcome POVM {1}.
    pub fn trivial(dims: Vec<usize>) -> Self {
        Povm { elements: vec![HermitianOperator::identity(dims)] }
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(u: &CMat, dims: Vec<usize>) -> Result<Self> {
        let elements = (0..u.ncols())
            .map(|k| HermitianOperator::projector(dims.clone(), &u.column(k).into_owned()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements)
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn dims(&self) -> &[usize] {
        self.elements[0].dims()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    op: HermitianOperator,
}

impl BipartiteState {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        if op.dims().len() != 2 {
            return Err(Error::input(format!("bipartite state needs two subsystems, got dims {:?}", op.dims())));
        }
        check_density(&op, "state")?;
        Ok(BipartiteState { op })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.op.dims()[0], self.op.dims()[1])
    }

    /// Reduced state of subsystem 0 or 1.
    pub fn marginal(&self, sub: usize) -> HermitianOperator {
        self.op.partial_trace(&[sub]).expect("valid subsystem")
    }

    /// Product state ρ_A ⊗ ρ_B.
    pub fn product(a: &HermitianOperator, b: &HermitianOperator) -> Result<Self> {
        Self::new(a.with_dims(vec![a.dim()])?.tensor(&b.with_dims(vec![b.dim()])?))
    }

    /// p·φ₊ + (1 − p)·1/d² on d⊗d.
    pub fn isotropic(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::input(format!("visibility {p} outside [0, 1]")));
        }
        let phi = max_entangled(d);
        let noise = HermitianOperator::maximally_mixed(vec![d, d]);
        Self::new(phi.scale(p).add(&noise.scale(1.0 - p)))
    }

    /// cos θ |00⟩ + sin θ |11⟩ on 2⊗2.
    pub fn two_qubit_pure(theta: f64) -> Self {
        let mut v = crate::linalg::CVec::zeros(4);
        v[0] = theta.cos().into();
        v[3] = theta.sin().into();
        BipartiteState { op: HermitianOperator::projector(vec![2, 2], &v).expect("unit vector") }
    }
}

/// Σ_λ p(λ) ρ_λ^A ⊗ ρ_λ^B.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableModel {
    weights: Vec<f64>,
    local_a: Vec<HermitianOperator>,
    local_b: Vec<HermitianOperator>,
}

impl SeparableModel {
    pub fn new(weights: Vec<f64>, local_a: Vec<HermitianOperator>, local_b: Vec<HermitianOperator>) -> Result<Self> {
        if weights.is_empty() || weights.len() != local_a.len() || weights.len() != local_b.len() {
            return Err(Error::input("separable model needs equally many weights and local states"));
        }
        if weights.iter().any(|&w| w < -VALIDITY_TOL) || (weights.iter().sum::<f64>() - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::input("separable model weights must form a probability vector"));
        }
        for (k, (a, b)) in local_a.iter().zip(&local_b).enumerate() {
            check_density(a, &format!("local state A[{k}]"))?;
            check_density(b, &format!("local state B[{k}]"))?;
            if a.dim() != local_a[0].dim() || b.dim() != local_b[0].dim() {
                return Err(Error::input("local states of a separable model must share dimensions"));
            }
        }
        Ok(SeparableModel { weights, local_a, local_b })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn local_a(&self) -> &[HermitianOperator] {
        &self.local_a
    }

    pub fn local_b(&self) -> &[HermitianOperator] {
        &self.local_b
    }

    pub fn to_state(&self) -> BipartiteState {
        let (da, db) = (self.local_a[0].dim(), self.local_b[0].dim());
        let mut acc = HermitianOperator::zeros(vec![da, db]);
        for ((w, a), b) in self.weights.iter().zip(&self.local_a).zip(&self.local_b) {
            let t = a.with_dims(vec![da]).unwrap().tensor(&b.with_dims(vec![db]).unwrap());
            acc.add_scaled(*w, &t);
        }
        BipartiteState { op: acc }
    }
}

/// The local measurements and shared state a distributed measurement was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementProvenance {
    pub alice: Povm,
    pub bob: Povm,
    pub state: BipartiteState,
}

/// Bipartite POVM {M_ab} on [d_A, d_B], stored row-major in (a, b).
#[derive(Clone, Debug, PartialEq)]
pub struct DistributedMeasurement {
    outcomes: (usize, usize),
    elements: Vec<HermitianOperator>,
    provenance: Option<MeasurementProvenance>,
}

impl DistributedMeasurement {
    pub fn new(outcomes_a: usize, outcomes_b: usize, elements: Vec<HermitianOperator>) -> Result<Self> {
        if outcomes_a == 0 || outcomes_b == 0 || elements.len() != outcomes_a * outcomes_b {
            return Err(Error::input(format!(
                "expected {outcomes_a}x{outcomes_b} elements, got {}",
                elements.len()
            )));
        }
        if elements[0].dims().len() != 2 {
            return Err(Error::input(format!("elements need dims [d_A, d_B], got {:?}", elements[0].dims())));
        }
        check_complete(&elements, "distributed measurement")?;
        Ok(DistributedMeasurement { outcomes: (outcomes_a, outcomes_b), elements, provenance: None })
    }

    pub fn with_provenance(mut self, p: MeasurementProvenance) -> Self {
        self.provenance = Some(p);
        self
    }

    pub fn provenance(&self) -> Option<&MeasurementProvenance> {
        self.provenance.as_ref()
    }

    pub fn outcomes(&self) -> (usize, usize) {
        self.outcomes
    }

    pub fn dims(&self) -> (usize, usize) {
        let d = self.elements[0].dims();
        (d[0], d[1])
    }

    pub fn element(&self, a: usize, b: usize) -> &HermitianOperator {
        &self.elements[a * self.outcomes.1 + b]
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    /// Alice's marginal M_a with Σ_b M_ab = M_a ⊗ 1 when no-signalling holds.
    pub fn marginal_a(&self, a: usize) -> HermitianOperator {
        let (_, db) = self.dims();
        let mut s = HermitianOperator::zeros(self.elements[0].dims().to_vec());
        for b in 0..self.outcomes.1 {
            s.add_scaled(1.0, self.element(a, b));
        }
        s.partial_trace(&[0]).unwrap().scale(1.0 / db as f64)
    }

    pub fn marginal_b(&self, b: usize) -> HermitianOperator {
        let (da, _) = self.dims();
        let mut s = HermitianOperator::zeros(self.elements[0].dims().to_vec());
        for a in 0..self.outcomes.0 {
            s.add_scaled(1.0, self.element(a, b));
        }
        s.partial_trace(&[1]).unwrap().scale(1.0 / da as f64)
    }

    /// Largest entry deviation from Σ_a M_ab = 1 ⊗ M_b and Σ_b M_ab = M_a ⊗ 1.
    pub fn no_signalling_residual(&self) -> f64 {
        let dims = self.elements[0].dims().to_vec();
        let mut worst: f64 = 0.0;
        for a in 0..self.outcomes.0 {
            let mut s = HermitianOperator::zeros(dims.clone());
            for b in 0..self.outcomes.1 {
                s.add_scaled(1.0, self.element(a, b));
            }
            let ext = self.marginal_a(a).identity_extend(&dims, &[0]).unwrap();
            worst = worst.max(s.max_abs_diff(&ext));
        }
        for b in 0..self.outcomes.1 {
            let mut s = HermitianOperator::zeros(dims.clone());
            for a in 0..self.outcomes.0 {
                s.add_scaled(1.0, self.element(a, b));
            }
            let ext = self.marginal_b(b).identity_extend(&dims, &[1]).unwrap();
            worst = worst.max(s.max_abs_diff(&ext));
        }
        worst
    }

    /// Elementwise p·self + (1 − p)·other.
    pub fn mix(&self, p: f64, other: &DistributedMeasurement) -> Result<Self> {
        if self.outcomes != other.outcomes || self.elements[0].dims() != other.elements[0].dims() {
            return Err(Error::input("cannot mix measurements of different shapes"));
        }
        let elements = self.elements.iter().zip(&other.elements).map(|(x, y)| x.scale(p).add(&y.scale(1.0 - p))).collect();
        Self::new(self.outcomes.0, self.outcomes.1, elements)
    }
}

/// Choi operators J_a on [d_V, d_B′] of the subchannels of a teleportation
/// instrument, normalized so that Σ_a J_a = (1/d_V)·1 ⊗ ρ_B′.
#[derive(Clone, Debug, PartialEq)]
pub struct TeleportationInstrument {
    elements: Vec<HermitianOperator>,
    provenance: Option<(Povm, BipartiteState)>,
}

impl TeleportationInstrument {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::input("instrument has no elements"));
        };
        if first.dims().len() != 2 {
            return Err(Error::input(format!("instrument elements need dims [d_V, d_B'], got {:?}", first.dims())));
        }
        let dims = first.dims().to_vec();
        let mut sum = HermitianOperator::zeros(dims.clone());
        for (k, j) in elements.iter().enumerate() {
            if j.dims() != dims.as_slice() {
                return Err(Error::input(format!("instrument element {k} has dims {:?}", j.dims())));
            }
            let lmin = j.min_eigenvalue();
            if lmin < -VALIDITY_TOL {
                return Err(Error::input(format!("instrument element {k} is not PSD (λ_min = {lmin:.3e})")));
            }
            sum.add_scaled(1.0, j);
        }
        let rho_b = sum.partial_trace(&[1])?;
        check_density(&rho_b, "instrument output marginal")?;
        let expect = rho_b.identity_extend(&dims, &[1])?.scale(1.0 / dims[0] as f64);
        let dev = sum.max_abs_diff(&expect);
        if dev > VALIDITY_TOL {
            return Err(Error::input(format!("instrument signals its outcome sum to the input (deviation {dev:.3e})")));
        }
        Ok(TeleportationInstrument { elements, provenance: None })
    }

    pub fn with_provenance(mut self, alice: Povm, state: BipartiteState) -> Self {
        self.provenance = Some((alice, state));
        self
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    /// (d_V, d_B′)
    pub fn dims(&self) -> (usize, usize) {
        let d = self.elements[0].dims();
        (d[0], d[1])
    }

    pub fn provenance(&self) -> Option<&(Povm, BipartiteState)> {
        self.provenance.as_ref()
    }

    /// Subchannel Λ_a from V to B′.
    pub fn subchannel(&self, a: usize) -> Result<LinearMapOnOperators> {
        let (dv, db) = self.dims();
        let j = self.elements[a].scale(dv as f64).with_dims(vec![dv, db])?;
        LinearMapOnOperators::from_choi(j, vec![dv], vec![db])
    }
}

/// Shared randomness λ, local pre-processing channels and classical
/// post-processing. `post_a[λ]` has entry (a, i) = p(a|i, λ).
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSubroutine {
    weights: Vec<f64>,
    post_a: Vec<DMatrix<f64>>,
    post_b: Vec<DMatrix<f64>>,
    pre_a: Vec<LinearMapOnOperators>,
    pre_b: Vec<LinearMapOnOperators>,
}

fn check_stochastic(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().any(|&v| v < -VALIDITY_TOL) {
        return Err(Error::input(format!("{what} has negative entries")));
    }
    for (j, col) in m.column_iter().enumerate() {
        if (col.sum() - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::input(format!("{what} column {j} sums to {}", col.sum())));
        }
    }
    Ok(())
}

impl SimulationSubroutine {
    pub fn new(
        weights: Vec<f64>,
        post_a: Vec<DMatrix<f64>>,
        post_b: Vec<DMatrix<f64>>,
        pre_a: Vec<LinearMapOnOperators>,
        pre_b: Vec<LinearMapOnOperators>,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 || post_a.len() != n || post_b.len() != n || pre_a.len() != n || pre_b.len() != n {
            return Err(Error::input("subroutine lists must all have one entry per λ"));
        }
        if weights.iter().any(|&w| w < -VALIDITY_TOL) || (weights.iter().sum::<f64>() - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::input("subroutine weights must form a probability vector"));
        }
        for l in 0..n {
            check_stochastic(&post_a[l], &format!("post_a[{l}]"))?;
            check_stochastic(&post_b[l], &format!("post_b[{l}]"))?;
            if post_a[l].shape() != post_a[0].shape() || post_b[l].shape() != post_b[0].shape() {
                return Err(Error::input("post-processing matrices must share shapes across λ"));
            }
            for (side, ch) in [("pre_a", &pre_a[l]), ("pre_b", &pre_b[l])] {
                if !ch.is_trace_preserving(VALIDITY_TOL) {
                    return Err(Error::input(format!("{side}[{l}] is not trace preserving")));
                }
            }
            if total_dim(pre_a[l].input_dims()) != total_dim(pre_a[0].input_dims())
                || total_dim(pre_a[l].output_dims()) != total_dim(pre_a[0].output_dims())
                || total_dim(pre_b[l].input_dims()) != total_dim(pre_b[0].input_dims())
                || total_dim(pre_b[l].output_dims()) != total_dim(pre_b[0].output_dims())
            {
                return Err(Error::input("pre-processing channels must share dims across λ"));
            }
        }
        Ok(SimulationSubroutine { weights, post_a, post_b, pre_a, pre_b })
    }

    /// One λ, identity channels, identity post-processing.
    pub fn trivial(outcomes: (usize, usize), dims: (usize, usize)) -> Self {
        Self::relabeling(&(0..outcomes.0).collect::<Vec<_>>(), &(0..outcomes.1).collect::<Vec<_>>(), dims)
    }

    /// Deterministic outcome maps i ↦ f_a[i], j ↦ f_b[j]; the new outcome
    /// counts are one more than the largest image.
    pub fn relabeling(f_a: &[usize], f_b: &[usize], dims: (usize, usize)) -> Self {
        let det = |f: &[usize]| {
            let rows = f.iter().max().map_or(1, |m| m + 1);
            DMatrix::from_fn(rows, f.len(), |r, c| if f[c] == r { 1.0 } else { 0.0 })
        };
        SimulationSubroutine {
            weights: vec![1.0],
            post_a: vec![det(f_a)],
            post_b: vec![det(f_b)],
            pre_a: vec![LinearMapOnOperators::identity(vec![dims.0])],
            pre_b: vec![LinearMapOnOperators::identity(vec![dims.1])],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn post_a(&self) -> &[DMatrix<f64>] {
        &self.post_a
    }

    pub fn post_b(&self) -> &[DMatrix<f64>] {
        &self.post_b
    }

    pub fn pre_a(&self) -> &[LinearMapOnOperators] {
        &self.pre_a
    }

    pub fn pre_b(&self) -> &[LinearMapOnOperators] {
        &self.pre_b
    }

    /// The subroutine that applies `self` and then `next`.
    pub fn then(&self, next: &SimulationSubroutine) -> Result<SimulationSubroutine> {
        let mut w = Vec::new();
        let (mut pa, mut pb, mut ea, mut eb) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for l in 0..self.weights.len() {
            for m in 0..next.weights.len() {
                w.push(self.weights[l] * next.weights[m]);
                pa.push(&next.post_a[m] * &self.post_a[l]);
                pb.push(&next.post_b[m] * &self.post_b[l]);
                ea.push(compose_channels(&self.pre_a[l], &next.pre_a[m])?);
                eb.push(compose_channels(&self.pre_b[l], &next.pre_b[m])?);
            }
        }
        SimulationSubroutine::new(w, pa, pb, ea, eb)
    }
}

/// first ∘ second: apply `second`, then `first`.
fn compose_channels(first: &LinearMapOnOperators, second: &LinearMapOnOperators) -> Result<LinearMapOnOperators> {
    if total_dim(second.output_dims()) != total_dim(first.input_dims()) {
        return Err(Error::input("channel dims do not chain"));
    }
    let mut kraus = Vec::new();
    for k1 in first.kraus() {
        for k2 in second.kraus() {
            kraus.push(&k1 * &k2);
        }
    }
    LinearMapOnOperators::from_kraus(kraus, second.input_dims().to_vec(), first.output_dims().to_vec())
}

/// Table p(a, b | x, y), row-major over (a, b, x, y).
#[derive(Clone, Debug, PartialEq)]
pub struct Behaviour {
    shape: [usize; 4],
    values: Vec<f64>,
}

impl Behaviour {
    pub fn new(shape: [usize; 4], values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::input(format!("behaviour shape {shape:?} does not match {} values", values.len())));
        }
        let b = Behaviour { shape, values };
        for x in 0..shape[2] {
            for y in 0..shape[3] {
                let mut s = 0.0;
                for a in 0..shape[0] {
                    for bb in 0..shape[1] {
                        let v = b.get(a, bb, x, y);
                        if v < -VALIDITY_TOL {
                            return Err(Error::input("behaviour has negative entries"));
                        }
                        s += v;
                    }
                }
                if (s - 1.0).abs() > VALIDITY_TOL {
                    return Err(Error::input(format!("behaviour not normalized at (x, y) = ({x}, {y})")));
                }
            }
        }
        Ok(b)
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        let [_, ob, nx, ny] = self.shape;
        self.values[((a * ob + b) * nx + x) * ny + y]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuestionSet {
    states: Vec<HermitianOperator>,
}

impl QuestionSet {
    pub fn new(states: Vec<HermitianOperator>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::input("question set is empty"));
        }
        for (k, s) in states.iter().enumerate() {
            check_density(s, &format!("question {k}"))?;
            if s.dim() != states[0].dim() {
                return Err(Error::input("question states must share a dimension"));
            }
        }
        Ok(QuestionSet { states })
    }

    /// The six Pauli eigenstates of a qubit.
    pub fn pauli_eigenstates() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| crate::linalg::C64::new(re, im);
        let kets = [
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(s, 0.0), c(s, 0.0)],
            [c(s, 0.0), c(-s, 0.0)],
            [c(s, 0.0), c(0.0, s)],
            [c(s, 0.0), c(0.0, -s)],
        ];
        let states = kets
            .iter()
            .map(|k| HermitianOperator::projector(vec![2], &crate::linalg::CVec::from_column_slice(k)).unwrap())
            .collect();
        QuestionSet { states }
    }

    /// Computational basis states |0⟩, …, |n−1⟩.
    pub fn basis(n: usize) -> Self {
        let states = (0..n)
            .map(|k| {
                let mut d = vec![0.0; n];
                d[k] = 1.0;
                HermitianOperator::diagonal(vec![n], &d).unwrap()
            })
            .collect();
        QuestionSet { states }
    }

    pub fn states(&self) -> &[HermitianOperator] {
        &self.states
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// M_ab = tr_{A′B′}[(M_a ⊗ M_b)(1^A ⊗ ρ ⊗ 1^B)] on (A, A′, B′, B).
pub fn build_distributed(ma: &Povm, mb: &Povm, rho: &BipartiteState) -> Result<DistributedMeasurement> {
    let (da, dap) = two_dims(ma.dims(), "Alice's POVM")?;
    let (dbp, db) = two_dims(mb.dims(), "Bob's POVM")?;
    let (ra, rb) = rho.dims();
    if ra != dap || rb != dbp {
        return Err(Error::input(format!(
            "state dims [{ra}, {rb}] do not chain with POVMs on [{da}, {dap}] and [{dbp}, {db}]"
        )));
    }
    let full = [da, dap, dbp, db];
    let r = rho.op().identity_extend(&full, &[1, 2])?;
    let mut elements = Vec::with_capacity(ma.outcomes() * mb.outcomes());
    for a in ma.elements() {
        for b in mb.elements() {
            let prod = kron_mat(a.matrix(), b.matrix()) * r.matrix();
            let m = HermitianOperator::from_raw(full.to_vec(), prod);
            elements.push(m.partial_trace(&[0, 3])?);
        }
    }
    let dm = DistributedMeasurement::new(ma.outcomes(), mb.outcomes(), elements)?;
    Ok(dm.with_provenance(MeasurementProvenance { alice: ma.clone(), bob: mb.clone(), state: rho.clone() }))
}

fn two_dims(d: &[usize], what: &str) -> Result<(usize, usize)> {
    match d {
        [x, y] => Ok((*x, *y)),
        _ => Err(Error::input(format!("{what} needs dims of length 2, got {d:?}"))),
    }
}

/// M_ab = Σ_λ p(λ) M_{a|λ} ⊗ M_{b|λ} with local effects
/// M_{a|λ} = tr_{A′}[M_a (1 ⊗ ρ_λ^{A′})] and M_{b|λ} = tr_{B′}[M_b (ρ_λ^{B′} ⊗ 1)].
pub fn build_free_distributed(ma: &Povm, mb: &Povm, sep: &SeparableModel) -> Result<DistributedMeasurement> {
    let (da, dap) = two_dims(ma.dims(), "Alice's POVM")?;
    let (dbp, db) = two_dims(mb.dims(), "Bob's POVM")?;
    if sep.local_a()[0].dim() != dap || sep.local_b()[0].dim() != dbp {
        return Err(Error::input("separable model dims do not chain with the POVMs"));
    }
    let mut elements = vec![HermitianOperator::zeros(vec![da, db]); ma.outcomes() * mb.outcomes()];
    for (l, w) in sep.weights().iter().enumerate() {
        let ra = sep.local_a()[l].with_dims(vec![dap])?.identity_extend(&[da, dap], &[1])?;
        let rb = sep.local_b()[l].with_dims(vec![dbp])?.identity_extend(&[dbp, db], &[0])?;
        let eff_a: Vec<HermitianOperator> = ma
            .elements()
            .iter()
            .map(|m| HermitianOperator::from_raw(vec![da, dap], m.matrix() * ra.matrix()).partial_trace(&[0]))
            .collect::<Result<_>>()?;
        let eff_b: Vec<HermitianOperator> = mb
            .elements()
            .iter()
            .map(|m| HermitianOperator::from_raw(vec![dbp, db], m.matrix() * rb.matrix()).partial_trace(&[1]))
            .collect::<Result<_>>()?;
        for (i, ea) in eff_a.iter().enumerate() {
            for (j, eb) in eff_b.iter().enumerate() {
                elements[i * mb.outcomes() + j].add_scaled(*w, &ea.tensor(eb));
            }
        }
    }
    DistributedMeasurement::new(ma.outcomes(), mb.outcomes(), elements)
}

/// Σ_x |x⟩⟨x| ⊗ M_{a|x} on [n_x, d] for side A, Σ_y M_{b|y} ⊗ |y⟩⟨y| on
/// [d, n_y] for side B.
pub fn controlled_povm(settings: &[Povm], side: Side) -> Result<Povm> {
    let Some(first) = settings.first() else {
        return Err(Error::input("no measurement settings"));
    };
    let d = first.elements()[0].dim();
    if settings.iter().any(|s| s.outcomes() != first.outcomes() || s.elements()[0].dim() != d) {
        return Err(Error::input("measurement settings must share outcome count and dimension"));
    }
    let n = settings.len();
    let mut elements = Vec::with_capacity(first.outcomes());
    for a in 0..first.outcomes() {
        let mut acc = match side {
            Side::A => HermitianOperator::zeros(vec![n, d]),
            Side::B => HermitianOperator::zeros(vec![d, n]),
        };
        for (x, s) in settings.iter().enumerate() {
            let mut e = vec![0.0; n];
            e[x] = 1.0;
            let proj = HermitianOperator::diagonal(vec![n], &e)?;
            let m = s.elements()[a].with_dims(vec![d])?;
            let term = match side {
                Side::A => proj.tensor(&m),
                Side::B => m.tensor(&proj),
            };
            acc.add_scaled(1.0, &term);
        }
        elements.push(acc);
    }
    Povm::new(elements)
}

/// p(a, b | x, y) = tr[M_ab (ω_x ⊗ ω_y)].
pub fn behaviour(m: &DistributedMeasurement, qa: &QuestionSet, qb: &QuestionSet) -> Result<Behaviour> {
    let (da, db) = m.dims();
    if qa.states()[0].dim() != da || qb.states()[0].dim() != db {
        return Err(Error::input(format!(
            "question dims ({}, {}) do not match measurement dims ({da}, {db})",
            qa.states()[0].dim(),
            qb.states()[0].dim()
        )));
    }
    let (oa, ob) = m.outcomes();
    let (nx, ny) = (qa.states().len(), qb.states().len());
    let mut values = vec![0.0; oa * ob * nx * ny];
    let products: Vec<HermitianOperator> = qa
        .states()
        .iter()
        .flat_map(|wx| {
            qb.states()
                .iter()
                .map(move |wy| wx.with_dims(vec![da]).unwrap().tensor(&wy.with_dims(vec![db]).unwrap()))
        })
        .collect();
    for a in 0..oa {
        for b in 0..ob {
            let e = m.element(a, b);
            for x in 0..nx {
                for y in 0..ny {
                    values[((a * ob + b) * nx + x) * ny + y] = e.inner(&products[x * ny + y]);
                }
            }
        }
    }
    Ok(Behaviour { shape: [oa, ob, nx, ny], values })
}

/// (E† ⊗ N†)[X] for Kraus lists of E and N.
fn adjoint_product(x: &HermitianOperator, ka: &[CMat], kb: &[CMat], dims_out: Vec<usize>) -> HermitianOperator {
    let n = dims_out.iter().product::<usize>();
    let mut acc = CMat::zeros(n, n);
    for k in ka {
        for l in kb {
            let kl = kron_mat(k, l);
            acc += kl.adjoint() * x.matrix() * &kl;
        }
    }
    HermitianOperator::from_raw(dims_out, acc)
}

/// M′_ab = Σ_{i,j,λ} p(λ) p(a|i,λ) p(b|j,λ) (E_λ† ⊗ N_λ†)[M_ij].
pub fn simulate(m: &DistributedMeasurement, s: &SimulationSubroutine) -> Result<DistributedMeasurement> {
    let (oa, ob) = m.outcomes();
    let (da, db) = m.dims();
    let pa0 = &s.post_a()[0];
    let pb0 = &s.post_b()[0];
    if pa0.ncols() != oa || pb0.ncols() != ob {
        return Err(Error::input(format!(
            "post-processing expects {}x{} outcomes, measurement has {oa}x{ob}",
            pa0.ncols(),
            pb0.ncols()
        )));
    }
    if total_dim(s.pre_a()[0].output_dims()) != da || total_dim(s.pre_b()[0].output_dims()) != db {
        return Err(Error::input("pre-processing channel outputs do not match the measurement dims"));
    }
    let na = total_dim(s.pre_a()[0].input_dims());
    let nb = total_dim(s.pre_b()[0].input_dims());
    let (oa2, ob2) = (pa0.nrows(), pb0.nrows());
    let mut out = vec![HermitianOperator::zeros(vec![na, nb]); oa2 * ob2];
    for (l, w) in s.weights().iter().enumerate() {
        let ka = s.pre_a()[l].kraus();
        let kb = s.pre_b()[l].kraus();
        let pulled: Vec<HermitianOperator> = m.elements().iter().map(|e| adjoint_product(e, &ka, &kb, vec![na, nb])).collect();
        for a in 0..oa2 {
            for b in 0..ob2 {
                let o = &mut out[a * ob2 + b];
                for i in 0..oa {
                    let pa = s.post_a()[l][(a, i)];
                    if pa == 0.0 {
                        continue;
                    }
                    for j in 0..ob {
                        let c = w * pa * s.post_b()[l][(b, j)];
                        if c != 0.0 {
                            o.add_scaled(c, &pulled[i * ob + j]);
                        }
                    }
                }
            }
        }
    }
    DistributedMeasurement::new(oa2, ob2, out)
}

/// J_a = tr_{AA′}[(1^V ⊗ M_a ⊗ 1^{B′})(φ₊^{VA} ⊗ ρ)] on (V, A, A′, B′).
pub fn teleportation_instrument(ma: &Povm, rho: &BipartiteState) -> Result<TeleportationInstrument> {
    let (da, dap) = two_dims(ma.dims(), "Alice's POVM")?;
    let (ra, rb) = rho.dims();
    if ra != dap {
        return Err(Error::input(format!("state dims [{ra}, {rb}] do not chain with a POVM on [{da}, {dap}]")));
    }
    let joint = max_entangled(da).tensor(rho.op());
    let full = [da, da, dap, rb];
    let mut elements = Vec::with_capacity(ma.outcomes());
    for m in ma.elements() {
        let ext = m.identity_extend(&full, &[1, 2])?;
        let prod = HermitianOperator::from_raw(full.to_vec(), ext.matrix() * joint.matrix());
        elements.push(prod.partial_trace(&[0, 3])?);
    }
    let mut t = TeleportationInstrument::new(elements)?;
    t.provenance = Some((ma.clone(), rho.clone()));
    Ok(t)
}

/// Projectors (1 ⊗ U_b) φ₊ (1 ⊗ U_b)† onto the generalized Bell basis, with
/// U_b running over the Heisenberg–Weyl operators.
pub fn bell_measurement(d: usize) -> Povm {
    let phi = max_entangled(d);
    let elements = heisenberg_weyl(d)
        .into_iter()
        .map(|u| phi.conjugate_by(&kron_mat(&CMat::identity(d, d), &u), vec![d, d]).unwrap())
        .collect();
    Povm { elements }
}

#[cfg(test)]
mod tests;
