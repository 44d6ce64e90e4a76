//! Seeded random instances. Every generator owns a ChaCha8 stream so a seed
//! fixes the output on every platform.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Povm, SeparableModel, SimulationSubroutine};
use crate::error::{Error, Result};
use crate::linalg::{CMat, HermitianOperator, LinearMapOnOperators, C64};

fn ginibre(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

fn haar_unitary_from(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let qr = ginibre(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Haar-distributed n×n unitary.
pub fn random_unitary(n: usize, seed: u64) -> CMat {
    haar_unitary_from(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// Ginibre state G G† / tr with G of shape dim × rank.
pub fn random_state(dims: Vec<usize>, rank: usize, seed: u64) -> Result<HermitianOperator> {
    let n: usize = dims.iter().product();
    if rank == 0 || rank > n {
        return Err(Error::input(format!("rank {rank} outside 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(&mut rng, n, rank);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    HermitianOperator::new(dims, rho / C64::new(tr, 0.0))
}

/// Rows of a Haar isometry split into blocks: M_k = V_k† V_k.
pub fn random_povm(dims: Vec<usize>, outcomes: usize, seed: u64) -> Result<Povm> {
    let n: usize = dims.iter().product();
    if outcomes == 0 {
        return Err(Error::input("a POVM needs at least one outcome"));
    }
    let u = random_unitary(n * outcomes, seed);
    let v = u.columns(0, n);
    let elements = (0..outcomes)
        .map(|k| {
            let vk = v.rows(k * n, n);
            HermitianOperator::from_raw(dims.clone(), vk.adjoint() * vk)
        })
        .collect();
    Povm::new(elements)
}

fn random_probabilities(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Exponential spacings give a flat Dirichlet draw.
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for (r, p) in random_probabilities(rng, rows).into_iter().enumerate() {
            m[(r, c)] = p;
        }
    }
    m
}

/// Random mixture of two unitaries.
fn random_unital_channel(rng: &mut ChaCha8Rng, d: usize) -> Result<LinearMapOnOperators> {
    let q = rng.random::<f64>();
    let kraus = vec![
        haar_unitary_from(rng, d) * C64::new(q.sqrt(), 0.0),
        haar_unitary_from(rng, d) * C64::new((1.0 - q).sqrt(), 0.0),
    ];
    LinearMapOnOperators::from_kraus(kraus, vec![d], vec![d])
}

/// Random subroutine with `lambdas` values of shared randomness, random
/// unitary-mixture channels on [d_A] and [d_B], and random stochastic
/// post-processing from (o_A, o_B) to `new_outcomes`.
pub fn random_subroutine(
    outcomes: (usize, usize),
    new_outcomes: (usize, usize),
    dims: (usize, usize),
    lambdas: usize,
    seed: u64,
) -> Result<SimulationSubroutine> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = random_probabilities(&mut rng, lambdas.max(1));
    let mut post_a = Vec::new();
    let mut post_b = Vec::new();
    let mut pre_a = Vec::new();
    let mut pre_b = Vec::new();
    for _ in 0..weights.len() {
        post_a.push(random_stochastic(&mut rng, new_outcomes.0, outcomes.0));
        post_b.push(random_stochastic(&mut rng, new_outcomes.1, outcomes.1));
        pre_a.push(random_unital_channel(&mut rng, dims.0)?);
        pre_b.push(random_unital_channel(&mut rng, dims.1)?);
    }
    SimulationSubroutine::new(weights, post_a, post_b, pre_a, pre_b)
}

/// Mixture of `terms` products of random pure states.
pub fn random_separable(da: usize, db: usize, terms: usize, seed: u64) -> Result<SeparableModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = random_probabilities(&mut rng, terms.max(1));
    let mut pure = |d: usize| {
        let g = ginibre(&mut rng, d, 1);
        let v = &g / C64::new(g.norm(), 0.0);
        HermitianOperator::from_raw(vec![d], &v * v.adjoint())
    };
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    for _ in 0..weights.len() {
        la.push(pure(da));
        lb.push(pure(db));
    }
    SeparableModel::new(weights, la, lb)
}

/// Random mixture of two Haar unitaries on a d-dimensional system.
pub fn random_channel(d: usize, seed: u64) -> Result<LinearMapOnOperators> {
    random_unital_channel(&mut ChaCha8Rng::seed_from_u64(seed), d)
}

/// Random column-stochastic matrix of shape rows × cols.
pub fn random_stochastic_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    random_stochastic(&mut ChaCha8Rng::seed_from_u64(seed), rows, cols)
}
