//! Discrimination games: certificate ensembles, classical and quantum guessing
//! scores for the distributed (DSD), teleportation-assisted (TSD) and
//! entanglement-assisted (ESD) tasks, scored games, simulation monotones and
//! single-shot entropies.

mod entropy;

pub use entropy::{cond_min_entropy, min_entropy};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conic::{solve, ConeProgram, ConeTag, LinOp, Sense, Term, VarId};
use crate::error::{Error, Result};
use crate::linalg::{kron_mat, CMat, HermitianOperator};
use crate::qobj::{
    bell_measurement, build_distributed, random_state, Behaviour, BipartiteState, DistributedMeasurement,
    SimulationSubroutine, TeleportationInstrument, VALIDITY_TOL,
};
use crate::robustness::{best_povm, robn, RobustnessReport};

/// Ensemble {p(x, y), σ_xy}, both stored row-major in (x, y).
#[derive(Clone, Debug, PartialEq)]
pub struct StateEnsemble {
    shape: (usize, usize),
    probs: Vec<f64>,
    states: Vec<HermitianOperator>,
}

impl StateEnsemble {
    pub fn new(shape: (usize, usize), probs: Vec<f64>, states: Vec<HermitianOperator>) -> Result<Self> {
        let n = shape.0 * shape.1;
        if n == 0 || probs.len() != n || states.len() != n {
            return Err(Error::input(format!(
                "ensemble of shape {shape:?} needs {n} probabilities and states, got {} and {}",
                probs.len(),
                states.len()
            )));
        }
        if probs.iter().any(|&p| p < -VALIDITY_TOL || !p.is_finite()) {
            return Err(Error::input("ensemble probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::input(format!("ensemble probabilities sum to {total:.12}")));
        }
        let dims = states[0].dims().to_vec();
        if dims.len() != 2 {
            return Err(Error::input(format!("ensemble states need dims [d_A, d_B], got {dims:?}")));
        }
        for (k, s) in states.iter().enumerate() {
            if s.dims() != dims.as_slice() {
                return Err(Error::input(format!("ensemble state {k} has dims {:?}", s.dims())));
            }
            let l = s.min_eigenvalue();
            if l < -VALIDITY_TOL || (s.trace() - 1.0).abs() > VALIDITY_TOL {
                return Err(Error::input(format!("ensemble state {k} is not a density operator")));
            }
        }
        Ok(StateEnsemble { shape, probs, states })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn dims(&self) -> (usize, usize) {
        let d = self.states[0].dims();
        (d[0], d[1])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &[HermitianOperator] {
        &self.states
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.shape.1 + y]
    }

    pub fn state(&self, x: usize, y: usize) -> &HermitianOperator {
        &self.states[x * self.shape.1 + y]
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }
}

/// Random probabilities and random full-rank states.
pub fn random_ensemble(shape: (usize, usize), dims: (usize, usize), seed: u64) -> Result<StateEnsemble> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.0 * shape.1;
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    let probs = w.iter().map(|v| v / s).collect();
    let d = dims.0 * dims.1;
    let states = (0..n)
        .map(|_| random_state(vec![dims.0, dims.1], 1 + rng.random_range(0..d), rng.random()))
        .collect::<Result<Vec<_>>>()?;
    StateEnsemble::new(shape, probs, states)
}

/// Ensemble plus score table V(a, b, x, y) in [0, 1], row-major over (a, b, x, y).
#[derive(Clone, Debug, PartialEq)]
pub struct GameRules {
    pub ensemble: StateEnsemble,
    outcomes: (usize, usize),
    score: Vec<f64>,
}

impl GameRules {
    pub fn new(ensemble: StateEnsemble, outcomes: (usize, usize), score: Vec<f64>) -> Result<Self> {
        let (nx, ny) = ensemble.shape();
        if score.len() != outcomes.0 * outcomes.1 * nx * ny {
            return Err(Error::input("score table does not match the outcome and question counts"));
        }
        if score.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::input("scores must lie in [0, 1]"));
        }
        Ok(GameRules { ensemble, outcomes, score })
    }

    /// V = δ_xa δ_yb.
    pub fn discrimination(ensemble: StateEnsemble, outcomes: (usize, usize)) -> Result<Self> {
        let (nx, ny) = ensemble.shape();
        let mut score = vec![0.0; outcomes.0 * outcomes.1 * nx * ny];
        for x in 0..nx.min(outcomes.0) {
            for y in 0..ny.min(outcomes.1) {
                score[((x * outcomes.1 + y) * nx + x) * ny + y] = 1.0;
            }
        }
        Self::new(ensemble, outcomes, score)
    }

    pub fn score(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        let (nx, ny) = self.ensemble.shape();
        self.score[((a * self.outcomes.1 + b) * nx + x) * ny + y]
    }
}

/// Σ p(x, y) p(a, b | x, y) V(a, b, x, y).
pub fn game_value(rules: &GameRules, behaviour: &Behaviour) -> Result<f64> {
    let (nx, ny) = rules.ensemble.shape();
    let [oa, ob, bx, by] = behaviour.shape();
    if (oa, ob) != rules.outcomes || (bx, by) != (nx, ny) {
        return Err(Error::input(format!(
            "behaviour shape {:?} does not match rules with outcomes {:?} and questions {:?}",
            behaviour.shape(),
            rules.outcomes,
            (nx, ny)
        )));
    }
    let mut v = 0.0;
    for a in 0..oa {
        for b in 0..ob {
            for x in 0..nx {
                for y in 0..ny {
                    v += rules.ensemble.prob(x, y) * behaviour.get(a, b, x, y) * rules.score(a, b, x, y);
                }
            }
        }
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreMethod {
    /// Σ p tr[M σ] with the best deterministic outcome relabeling.
    Relabeling,
    /// Semidefinite program solved to tolerance.
    Sdp,
    /// Alternating POVM optimization; a lower bound.
    SeeSaw,
}

impl ScoreMethod {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMethod::Relabeling => "relabeling",
            ScoreMethod::Sdp => "sdp",
            ScoreMethod::SeeSaw => "see-saw",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub quantum_score: f64,
    pub classical_score: f64,
    pub ratio: f64,
    pub quantum_method: ScoreMethod,
    pub classical_method: ScoreMethod,
    /// Best see-saw score when a refinement ran.
    pub seesaw_score: Option<f64>,
    /// Robustness value the ratio is compared against, when known.
    pub robustness: Option<f64>,
    pub tol: f64,
}

impl ScoreReport {
    fn new(quantum: f64, classical: f64, qm: ScoreMethod, tol: f64) -> Result<Self> {
        if classical <= 0.0 {
            return Err(Error::check(format!("classical score {classical} is not positive")));
        }
        Ok(ScoreReport {
            quantum_score: quantum,
            classical_score: classical,
            ratio: quantum / classical,
            quantum_method: qm,
            classical_method: ScoreMethod::Sdp,
            seesaw_score: None,
            robustness: None,
            tol,
        })
    }
}

/// Trace-normalized certificate blocks: p*(x, y) = tr A_xy / C and
/// σ*_xy = A_xy / tr A_xy. Blocks with negligible trace get probability
/// zero and the maximally mixed state.
pub fn optimal_dsd_ensemble(a: &[&HermitianOperator], shape: (usize, usize), tol: f64) -> Result<StateEnsemble> {
    if a.len() != shape.0 * shape.1 || a.is_empty() {
        return Err(Error::input(format!("{} certificate blocks for shape {shape:?}", a.len())));
    }
    let dims = a[0].dims().to_vec();
    let mut clipped = Vec::with_capacity(a.len());
    for (k, blk) in a.iter().enumerate() {
        let l = blk.min_eigenvalue();
        if l < -10.0 * tol.max(1e-12) * blk.max_eigenvalue().abs().max(1.0) {
            return Err(Error::input(format!("certificate block {k} is not PSD (λ_min = {l:.3e})")));
        }
        clipped.push(blk.map_spectrum(|v| v.max(0.0)));
    }
    let c: f64 = clipped.iter().map(|x| x.trace()).sum();
    if c <= 1e-12 {
        return Err(Error::input("certificate is zero; the dual solution is degenerate"));
    }
    let mut probs = Vec::with_capacity(a.len());
    let mut states = Vec::with_capacity(a.len());
    for x in &clipped {
        let t = x.trace();
        if t < 1e-12 {
            probs.push(0.0);
            states.push(HermitianOperator::maximally_mixed(dims.clone()));
        } else {
            probs.push(t / c);
            states.push(x.scale(1.0 / t));
        }
    }
    StateEnsemble::new(shape, probs, states)
}

/// Σ_C tr A over the certificate blocks, the normalizer C of the ensemble.
pub fn certificate_weight(a: &[&HermitianOperator]) -> f64 {
    a.iter().map(|x| x.map_spectrum(|v| v.max(0.0)).trace()).sum()
}

/// Best guessing probability over the relaxed free set: no-signalling
/// bipartite POVMs with PPT elements, outcomes aligned with questions.
pub fn dsd_classical_score(g: &StateEnsemble, tol: f64) -> Result<f64> {
    let (nx, ny) = g.shape();
    let (da, db) = g.dims();
    let dims = vec![da, db];
    let mut p = ConeProgram::new(Sense::Maximize);
    let n: Vec<VarId> = (0..nx * ny)
        .map(|k| p.add_variable(format!("N[{},{}]", k / ny, k % ny), dims.clone(), ConeTag::PsdPpt { subsystem: 1 }))
        .collect();
    for (k, v) in n.iter().enumerate() {
        if g.probs[k] > 0.0 {
            p.add_objective(*v, g.states[k].scale(g.probs[k]))?;
        }
    }
    let na: Vec<VarId> = (0..nx).map(|x| p.add_variable(format!("N_A[{x}]"), vec![da], ConeTag::Free)).collect();
    let nb: Vec<VarId> = (0..ny).map(|y| p.add_variable(format!("N_B[{y}]"), vec![db], ConeTag::Free)).collect();
    let zero = HermitianOperator::zeros(dims.clone());
    for y in 0..ny {
        let mut terms: Vec<Term> = (0..nx).map(|x| Term::new(n[x * ny + y])).collect();
        terms.push(Term::new(nb[y]).scaled(-1.0).then(LinOp::extend(&dims, &[1])));
        p.add_equality(format!("ns_B[{y}]"), terms, zero.clone())?;
    }
    for x in 0..nx {
        let mut terms: Vec<Term> = (0..ny).map(|y| Term::new(n[x * ny + y])).collect();
        terms.push(Term::new(na[x]).scaled(-1.0).then(LinOp::extend(&dims, &[0])));
        p.add_equality(format!("ns_A[{x}]"), terms, zero.clone())?;
    }
    p.add_equality("complete_B", nb.iter().map(|&v| Term::new(v)).collect(), HermitianOperator::identity(vec![db]))?;
    p.add_equality("complete_A", na.iter().map(|&v| Term::new(v)).collect(), HermitianOperator::identity(vec![da]))?;
    let sol = solve(&p, tol)?.into_result()?;
    Ok(sol.objective_value)
}

/// Table T[a][b][x][y] = p(x, y)·tr[M_ab σ_xy], flattened row-major.
fn payoff_table(g: &StateEnsemble, m: &DistributedMeasurement) -> Result<Vec<f64>> {
    if g.dims() != m.dims() {
        return Err(Error::input(format!("ensemble dims {:?} differ from measurement dims {:?}", g.dims(), m.dims())));
    }
    let (oa, ob) = m.outcomes();
    let (nx, ny) = g.shape();
    if oa < nx || ob < ny {
        return Err(Error::input(format!(
            "measurement with {oa}x{ob} outcomes cannot answer {nx}x{ny} questions"
        )));
    }
    let mut t = vec![0.0; oa * ob * nx * ny];
    for a in 0..oa {
        for b in 0..ob {
            let e = m.element(a, b);
            for x in 0..nx {
                for y in 0..ny {
                    let p = g.prob(x, y);
                    if p != 0.0 {
                        t[((a * ob + b) * nx + x) * ny + y] = p * e.inner(g.state(x, y));
                    }
                }
            }
        }
    }
    Ok(t)
}

const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

/// Best Σ_{a,b} T[a][b][f(a)][g(b)] over maps f, g. Exhaustive over one
/// side with the best response on the other when small enough, otherwise
/// alternating best responses from the aligned start.
fn best_relabeling(t: &[f64], oa: usize, ob: usize, nx: usize, ny: usize) -> f64 {
    let at = |a: usize, b: usize, x: usize, y: usize| t[((a * ob + b) * nx + x) * ny + y];
    let respond_a = |gmap: &[usize]| -> (f64, Vec<usize>) {
        let mut total = 0.0;
        let mut f = vec![0; oa];
        for a in 0..oa {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for x in 0..nx {
                let v: f64 = (0..ob).map(|b| at(a, b, x, gmap[b])).sum();
                if v > best {
                    best = v;
                    arg = x;
                }
            }
            total += best;
            f[a] = arg;
        }
        (total, f)
    };
    let respond_b = |fmap: &[usize]| -> (f64, Vec<usize>) {
        let mut total = 0.0;
        let mut gm = vec![0; ob];
        for b in 0..ob {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for y in 0..ny {
                let v: f64 = (0..oa).map(|a| at(a, b, fmap[a], y)).sum();
                if v > best {
                    best = v;
                    arg = y;
                }
            }
            total += best;
            gm[b] = arg;
        }
        (total, gm)
    };
    let count_b = (ny as u64).checked_pow(ob as u32).unwrap_or(u64::MAX);
    let count_a = (nx as u64).checked_pow(oa as u32).unwrap_or(u64::MAX);
    if count_b.min(count_a) <= EXHAUSTIVE_LIMIT {
        let enumerate_b = count_b <= count_a;
        let (len, base, count) = if enumerate_b { (ob, ny, count_b) } else { (oa, nx, count_a) };
        let mut digits = vec![0usize; len];
        let mut best = f64::NEG_INFINITY;
        for _ in 0..count {
            let v = if enumerate_b { respond_a(&digits).0 } else { respond_b(&digits).0 };
            best = best.max(v);
            for d in digits.iter_mut() {
                *d += 1;
                if *d < base {
                    break;
                }
                *d = 0;
            }
        }
        return best;
    }
    let mut gmap: Vec<usize> = (0..ob).map(|b| b.min(ny - 1)).collect();
    let mut best = f64::NEG_INFINITY;
    loop {
        let (_, f) = respond_a(&gmap);
        let (v, gnew) = respond_b(&f);
        if v <= best + 1e-15 {
            return best.max(v);
        }
        best = v;
        gmap = gnew;
    }
}

/// Σ p(x, y) tr[M_ab σ_xy] δ_{x f(a)} δ_{y g(b)} maximized over deterministic
/// outcome relabelings f, g.
pub fn dsd_quantum_score(g: &StateEnsemble, m: &DistributedMeasurement) -> Result<f64> {
    let t = payoff_table(g, m)?;
    let (oa, ob) = m.outcomes();
    let (nx, ny) = g.shape();
    Ok(best_relabeling(&t, oa, ob, nx, ny))
}

/// Σ p(x, y) tr[M_xy σ_xy] with outcomes read as answers directly.
pub fn dsd_aligned_score(g: &StateEnsemble, m: &DistributedMeasurement) -> Result<f64> {
    let t = payoff_table(g, m)?;
    let (_, ob) = m.outcomes();
    let (nx, ny) = g.shape();
    Ok((0..nx)
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .map(|(x, y)| t[((x * ob + y) * nx + x) * ny + y])
        .sum())
}

/// Result-1 check: certificate ensemble, both scores, ratio against 1 + r.
#[derive(Clone, Debug)]
pub struct Result1Report {
    pub robustness: RobustnessReport,
    pub ensemble: StateEnsemble,
    pub certificate_weight: f64,
    pub scores: ScoreReport,
}

pub const RATIO_TOL: f64 = 1e-4;

/// Quantum (relabeling) and classical DSD scores of `m` on `g`.
pub fn dsd_scores(g: &StateEnsemble, m: &DistributedMeasurement, tol: f64) -> Result<ScoreReport> {
    let quantum = dsd_quantum_score(g, m)?;
    let classical = dsd_classical_score(g, tol)?;
    ScoreReport::new(quantum, classical, ScoreMethod::Relabeling, tol)
}

pub fn verify_result1(m: &DistributedMeasurement, tol: f64) -> Result<Result1Report> {
    let rep = robn(m, tol)?;
    let a = rep.dual_certificate.a_blocks();
    let ensemble = optimal_dsd_ensemble(&a, m.outcomes(), tol)?;
    let c = certificate_weight(&a);
    let mut scores = dsd_scores(&ensemble, m, tol)?;
    scores.robustness = Some(rep.value);
    let (quantum, classical) = (scores.quantum_score, scores.classical_score);
    if (scores.ratio - 1.0 - rep.value).abs() > RATIO_TOL {
        return Err(Error::check(format!(
            "ratio {:.8} differs from 1 + r = {:.8} (quantum {quantum:.8}, classical {classical:.8}, C = {c:.8})",
            scores.ratio,
            1.0 + rep.value
        )));
    }
    Ok(Result1Report { robustness: rep, ensemble, certificate_weight: c, scores })
}

/// TSD scores: the quantum score optimizes Bob's POVM on [B′, B] against the
/// instrument outputs with Alice's outcome read as x; the classical score is
/// the DSD classical score.
pub fn tsd_scores(g: &StateEnsemble, t: &TeleportationInstrument, tol: f64) -> Result<ScoreReport> {
    let (dv, dbp) = t.dims();
    let (da, db) = g.dims();
    let (nx, ny) = g.shape();
    if da != dv {
        return Err(Error::input(format!("ensemble A dimension {da} differs from instrument input {dv}")));
    }
    if t.outcomes() < nx {
        return Err(Error::input(format!("instrument with {} outcomes cannot answer {nx} questions", t.outcomes())));
    }
    let kraus: Vec<Vec<CMat>> = (0..nx).map(|x| t.subchannel(x).map(|c| c.kraus())).collect::<Result<_>>()?;
    let id_b = CMat::identity(db, db);
    let mut weights = Vec::with_capacity(ny);
    for y in 0..ny {
        let mut acc = HermitianOperator::zeros(vec![dbp, db]);
        for (x, kx) in kraus.iter().enumerate() {
            let p = g.prob(x, y);
            if p == 0.0 {
                continue;
            }
            for k in kx {
                let kk = kron_mat(k, &id_b);
                acc.add_scaled(p, &g.state(x, y).conjugate_by(&kk, vec![dbp, db])?);
            }
        }
        weights.push(acc);
    }
    let bob = best_povm(&weights, tol)?;
    let quantum: f64 = bob.elements().iter().zip(&weights).map(|(m, w)| m.inner(w)).sum();
    let classical = dsd_classical_score(g, tol)?;
    ScoreReport::new(quantum, classical, ScoreMethod::Sdp, tol)
}

/// ESD scores with Bell measurements on both sides. With `seesaw_rounds > 0`
/// the local POVMs are refined alternately and the best value is reported
/// separately.
pub fn esd_scores(g: &StateEnsemble, rho: &BipartiteState, tol: f64, seesaw_rounds: usize) -> Result<ScoreReport> {
    let (da, db) = g.dims();
    let (ra, rb) = rho.dims();
    if da != ra || db != rb {
        return Err(Error::input(format!(
            "Bell measurements need matching dims: ensemble ({da}, {db}), state ({ra}, {rb})"
        )));
    }
    let mut ma = bell_measurement(da);
    let mut mb = bell_measurement(db);
    let quantum = dsd_quantum_score(g, &build_distributed(&ma, &mb, rho)?)?;
    let classical = dsd_classical_score(g, tol)?;
    let mut rep = ScoreReport::new(quantum, classical, ScoreMethod::Relabeling, tol)?;
    if seesaw_rounds == 0 {
        return Ok(rep);
    }
    let (nx, ny) = g.shape();
    if ma.outcomes() < nx || mb.outcomes() < ny {
        return Err(Error::input("see-saw needs at least as many outcomes as questions"));
    }
    // Q_xy = σ_xy ⊗ ρ reordered to (A, A′, B′, B).
    let q: Vec<HermitianOperator> =
        g.states().iter().map(|s| s.tensor(rho.op()).permute(&[0, 2, 3, 1])).collect::<Result<_>>()?;
    let full = [da, ra, rb, db];
    let mut best = dsd_aligned_score(g, &build_distributed(&ma, &mb, rho)?)?;
    for round in 0..seesaw_rounds {
        let alice = round % 2 == 0;
        let n_out = if alice { nx } else { ny };
        let mut w = Vec::with_capacity(n_out);
        for k in 0..n_out {
            let mut acc = HermitianOperator::zeros(if alice { vec![da, ra] } else { vec![rb, db] });
            for other in 0..(if alice { ny } else { nx }) {
                let (x, y) = if alice { (k, other) } else { (other, k) };
                let p = g.prob(x, y);
                if p == 0.0 {
                    continue;
                }
                let (partner, pos, keep) =
                    if alice { (&mb.elements()[y], [2, 3], [0, 1]) } else { (&ma.elements()[x], [0, 1], [2, 3]) };
                let pe = partner.identity_extend(&full, &pos)?;
                let prod = HermitianOperator::from_raw(full.to_vec(), pe.matrix() * q[x * ny + y].matrix());
                acc.add_scaled(p, &prod.partial_trace(&keep)?);
            }
            w.push(acc);
        }
        let new = best_povm(&w, tol)?;
        if alice {
            ma = new;
        } else {
            mb = new;
        }
        let v = dsd_aligned_score(g, &build_distributed(&ma, &mb, rho)?)?;
        let improved = v - best;
        best = best.max(v);
        if round > 0 && improved < 1e-7 {
            break;
        }
    }
    rep.seesaw_score = Some(best);
    Ok(rep)
}

/// One ensemble's comparison in a monotonicity check.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCheck {
    pub original: f64,
    pub simulated: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneReport {
    pub checks: Vec<MonotoneCheck>,
    pub max_violation: f64,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const MONOTONE_TOL: f64 = 1e-6;

/// Forward direction of the simulation monotones: the guessing score of m
/// is at least that of simulate(m, s) for every ensemble. Scores of m also
/// include the pre-processed measurements (E_λ† ⊗ N_λ†)[M], each reachable
/// from m, so both sides search the same post-processings.
pub fn check_monotone(m: &DistributedMeasurement, s: &SimulationSubroutine, ensembles: &[StateEnsemble]) -> Result<MonotoneReport> {
    let sim = crate::qobj::simulate(m, s)?;
    let (oa, ob) = m.outcomes();
    let mut reachable = vec![m.clone()];
    for l in 0..s.weights().len() {
        let single = SimulationSubroutine::new(
            vec![1.0],
            vec![nalgebra::DMatrix::identity(oa, oa)],
            vec![nalgebra::DMatrix::identity(ob, ob)],
            vec![s.pre_a()[l].clone()],
            vec![s.pre_b()[l].clone()],
        )?;
        reachable.push(crate::qobj::simulate(m, &single)?);
    }
    let mut checks = Vec::with_capacity(ensembles.len());
    let mut worst: f64 = 0.0;
    for g in ensembles {
        let mut original = f64::NEG_INFINITY;
        for r in &reachable {
            original = original.max(dsd_quantum_score(g, r)?);
        }
        let simulated = dsd_quantum_score(g, &sim)?;
        let excess = simulated - original;
        worst = worst.max(excess);
        checks.push(MonotoneCheck { original, simulated, passed: excess <= MONOTONE_TOL });
    }
    Ok(MonotoneReport { checks, max_violation: worst })
}

/// Min-accessible information of the channel induced by m, with the
/// certificate ensemble as encoding and the identity decoding as witness.
#[derive(Clone, Debug)]
pub struct InfoReport {
    /// log₂(1 + r).
    pub bits: f64,
    pub robustness: RobustnessReport,
    /// log₂ of the identity-decoding guessing probability over the free-set
    /// guessing probability for the witness encoding.
    pub witness_bits: f64,
    /// H_min(XY) − H_min(XY|G) of the witness encoding and decoding.
    pub entropy_difference: f64,
    pub ensemble: StateEnsemble,
}

pub fn min_accessible_info(m: &DistributedMeasurement, tol: f64) -> Result<InfoReport> {
    let rep = robn(m, tol)?;
    let a = rep.dual_certificate.a_blocks();
    let ensemble = optimal_dsd_ensemble(&a, m.outcomes(), tol)?;
    let bits = (1.0 + rep.value).log2();
    let guess = dsd_aligned_score(&ensemble, m)?;
    let classical = dsd_classical_score(&ensemble, tol)?;
    let witness_bits = guess.log2() - classical.log2();

    // Joint table p(xy, g) with g = (a, b) the channel output.
    let (oa, ob) = m.outcomes();
    let (nx, ny) = ensemble.shape();
    let mut joint = vec![0.0; nx * ny * oa * ob];
    for k in 0..nx * ny {
        for g in 0..oa * ob {
            joint[k * oa * ob + g] = ensemble.probs()[k] * m.elements()[g].inner(&ensemble.states()[k]);
        }
    }
    let entropy_difference = min_entropy(ensemble.probs())? - cond_min_entropy(&joint, (nx * ny, oa * ob))?;
    if (witness_bits - bits).abs() > RATIO_TOL {
        return Err(Error::check(format!(
            "witness encoding reaches {witness_bits:.8} bits, expected log2(1 + r) = {bits:.8}"
        )));
    }
    Ok(InfoReport { bits, robustness: rep, witness_bits, entropy_difference, ensemble })
}

/// Local POVMs plus shared state behind a distributed measurement, for callers
/// that only need the Bell construction.
pub fn bell_bell(rho: &BipartiteState) -> Result<DistributedMeasurement> {
    let (da, db) = rho.dims();
    build_distributed(&bell_measurement(da), &bell_measurement(db), rho)
}

#[cfg(test)]
mod tests;
