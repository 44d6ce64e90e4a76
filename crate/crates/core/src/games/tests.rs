use super::*;
use crate::linalg::max_entangled;
use crate::qobj::*;
use proptest::prelude::*;

const TOL: f64 = 1e-8;

fn phi(d: usize) -> BipartiteState {
    BipartiteState::new(max_entangled(d)).unwrap()
}

fn free_fixture(seed: u64) -> DistributedMeasurement {
    let ma = random_povm(vec![2, 2], 2, seed).unwrap();
    let mb = random_povm(vec![2, 2], 2, seed + 1).unwrap();
    let sep = random_separable(2, 2, 3, seed + 2).unwrap();
    build_free_distributed(&ma, &mb, &sep).unwrap()
}

// Brute force over all pairs of maps, no best responses.
fn relabeling_oracle(g: &StateEnsemble, m: &DistributedMeasurement) -> f64 {
    let (oa, ob) = m.outcomes();
    let (nx, ny) = g.shape();
    let mut best = f64::NEG_INFINITY;
    for fi in 0..nx.pow(oa as u32) {
        for gi in 0..ny.pow(ob as u32) {
            let f: Vec<usize> = (0..oa).map(|a| fi / nx.pow(a as u32) % nx).collect();
            let h: Vec<usize> = (0..ob).map(|b| gi / ny.pow(b as u32) % ny).collect();
            let mut v = 0.0;
            for a in 0..oa {
                for b in 0..ob {
                    v += g.prob(f[a], h[b]) * m.element(a, b).inner(g.state(f[a], h[b]));
                }
            }
            best = best.max(v);
        }
    }
    best
}

#[test]
fn bell_bell_maximally_entangled_doubles_the_score() {
    let r = verify_result1(&bell_bell(&phi(2)).unwrap(), TOL).unwrap();
    assert!((r.scores.ratio - 2.0).abs() < 1e-4, "{}", r.scores.ratio);
    assert!((r.scores.classical_score - 1.0 / r.certificate_weight).abs() < 1e-6);
    assert!((r.scores.quantum_score - 2.0 / r.certificate_weight).abs() < 1e-6);
}

#[test]
fn isotropic_ratio_tracks_entanglement_robustness() {
    for p in [0.5, 0.8] {
        let s = BipartiteState::isotropic(2, p).unwrap();
        let r = verify_result1(&bell_bell(&s).unwrap(), TOL).unwrap();
        let e = crate::robustness::roe(&s, TOL).unwrap().value;
        assert!((r.scores.ratio - 1.0 - e).abs() < 1e-4, "p={p}: {} vs {}", r.scores.ratio, 1.0 + e);
    }
}

#[test]
fn free_measurement_has_no_advantage() {
    for seed in [3, 30] {
        let r = verify_result1(&free_fixture(seed), TOL).unwrap();
        assert!((r.scores.ratio - 1.0).abs() < 1e-5, "{}", r.scores.ratio);
    }
}

#[test]
fn certificate_ensemble_is_normalized() {
    let rep = robn(&bell_bell(&BipartiteState::isotropic(2, 0.7).unwrap()).unwrap(), TOL).unwrap();
    let a = rep.dual_certificate.a_blocks();
    let g = optimal_dsd_ensemble(&a, (4, 4), TOL).unwrap();
    assert!((g.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let c = certificate_weight(&a);
    for (k, blk) in a.iter().enumerate() {
        assert!(g.states()[k].scale(g.probs()[k] * c).max_abs_diff(blk) < 1e-6);
    }
}

#[test]
fn zero_certificate_is_rejected() {
    let z = HermitianOperator::zeros(vec![2, 2]);
    assert!(optimal_dsd_ensemble(&[&z, &z], (2, 1), TOL).unwrap_err().is_input());
}

#[test]
fn relabeling_search_matches_brute_force() {
    for seed in 0..4 {
        let g = random_ensemble((2, 2), (2, 2), seed).unwrap();
        let ma = random_povm(vec![2, 2], 3, seed + 10).unwrap();
        let mb = random_povm(vec![2, 2], 2, seed + 20).unwrap();
        let rho = BipartiteState::new(random_state(vec![2, 2], 2, seed + 30).unwrap()).unwrap();
        let m = build_distributed(&ma, &mb, &rho).unwrap();
        let want = relabeling_oracle(&g, &m);
        let got = dsd_quantum_score(&g, &m).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!(got >= dsd_aligned_score(&g, &m).unwrap() - 1e-12);
    }
}

#[test]
fn too_few_outcomes_is_input_error() {
    let g = random_ensemble((4, 4), (2, 2), 1).unwrap();
    assert!(dsd_quantum_score(&g, &free_fixture(3)).unwrap_err().is_input());
}

#[test]
fn identity_subroutine_preserves_scores() {
    let m = bell_bell(&BipartiteState::isotropic(2, 0.6).unwrap()).unwrap();
    let gs: Vec<_> = (0..3).map(|s| random_ensemble((4, 4), (2, 2), s).unwrap()).collect();
    let rep = check_monotone(&m, &SimulationSubroutine::trivial((4, 4), (2, 2)), &gs).unwrap();
    assert!(rep.passed());
    for c in &rep.checks {
        assert!((c.original - c.simulated).abs() < 1e-12);
    }
}

#[test]
fn discarding_subroutine_leaves_prior_guess() {
    let m = bell_bell(&phi(2)).unwrap();
    let post = nalgebra::DMatrix::from_fn(4, 4, |r, _| if r == 0 { 1.0 } else { 0.0 });
    let id = crate::linalg::LinearMapOnOperators::identity(vec![2]);
    let s = SimulationSubroutine::new(vec![1.0], vec![post.clone()], vec![post], vec![id.clone()], vec![id]).unwrap();
    let g = random_ensemble((4, 4), (2, 2), 9).unwrap();
    let rep = check_monotone(&m, &s, std::slice::from_ref(&g)).unwrap();
    assert!((rep.checks[0].simulated - g.max_prob()).abs() < 1e-12);
    assert!(rep.passed());
}

#[test]
fn tsd_scores_match_distributed_ratio() {
    let s = BipartiteState::isotropic(2, 0.8).unwrap();
    let bell = bell_measurement(2);
    let m = build_distributed(&bell, &bell, &s).unwrap();
    let rep = robn(&m, TOL).unwrap();
    let g = optimal_dsd_ensemble(&rep.dual_certificate.a_blocks(), m.outcomes(), TOL).unwrap();
    let t = teleportation_instrument(&bell, &s).unwrap();
    let sc = tsd_scores(&g, &t, TOL).unwrap();
    assert!((sc.ratio - 1.0 - rep.value).abs() < 1e-4, "{} vs {}", sc.ratio, 1.0 + rep.value);
}

#[test]
fn esd_scores_and_seesaw() {
    let s = BipartiteState::two_qubit_pure(std::f64::consts::PI / 8.0);
    let m = bell_bell(&s).unwrap();
    let rep = robn(&m, TOL).unwrap();
    let g = optimal_dsd_ensemble(&rep.dual_certificate.a_blocks(), m.outcomes(), TOL).unwrap();
    let sc = esd_scores(&g, &s, TOL, 10).unwrap();
    assert!((sc.ratio - 1.0 - rep.value).abs() < 1e-4);
    // The see-saw is a lower bound on the best strategy, which the
    // certificate ensemble caps at (1 + r) times the classical score.
    let ss = sc.seesaw_score.unwrap();
    assert!(ss <= (1.0 + rep.value) * sc.classical_score + 1e-5, "{ss}");
    assert!(ss >= sc.quantum_score - 1e-6);
}

#[test]
fn game_value_of_discrimination_rules_is_aligned_score() {
    let m = bell_bell(&BipartiteState::isotropic(2, 0.9).unwrap()).unwrap();
    let g = random_ensemble((4, 4), (2, 2), 4).unwrap();
    // Behaviour p(a, b | x, y) = tr[M_ab σ_xy].
    let mut vals = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for x in 0..4 {
                for y in 0..4 {
                    vals.push(m.element(a, b).inner(g.state(x, y)));
                }
            }
        }
    }
    let beh = Behaviour::new([4, 4, 4, 4], vals).unwrap();
    let rules = GameRules::discrimination(g.clone(), (4, 4)).unwrap();
    let v = game_value(&rules, &beh).unwrap();
    assert!((v - dsd_aligned_score(&g, &m).unwrap()).abs() < 1e-12);
}

#[test]
fn entropies() {
    assert!((min_entropy(&[0.25; 4]).unwrap() - 2.0).abs() < 1e-15);
    assert!(min_entropy(&[0.5, 0.6]).unwrap_err().is_input());
    // Perfectly correlated: nothing left to guess.
    let joint = [0.5, 0.0, 0.0, 0.5];
    assert!(cond_min_entropy(&joint, (2, 2)).unwrap().abs() < 1e-15);
    // Independent uniform: conditioning does not help.
    assert!((cond_min_entropy(&[0.25; 4], (2, 2)).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn accessible_information_of_maximally_entangled_bell_measurement() {
    let info = min_accessible_info(&bell_bell(&phi(2)).unwrap(), TOL).unwrap();
    assert!((info.bits - 1.0).abs() < 1e-4);
    assert!((info.witness_bits - info.bits).abs() < 1e-4);
    let free = min_accessible_info(&free_fixture(3), TOL).unwrap();
    assert!(free.bits <= 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn relabeled_score_is_a_guessing_probability(seed in 0u64..10_000) {
        let g = random_ensemble((2, 2), (2, 2), seed).unwrap();
        let m = free_fixture(seed);
        let v = dsd_quantum_score(&g, &m).unwrap();
        prop_assert!(v >= g.max_prob() - 1e-12 && v <= 1.0 + 1e-12);
    }

    #[test]
    fn random_subroutines_never_increase_scores(seed in 0u64..10_000) {
        let s = BipartiteState::new(random_state(vec![2, 2], 2, seed).unwrap()).unwrap();
        let m = bell_bell(&s).unwrap();
        let sub = random_subroutine((4, 4), (4, 4), (2, 2), 2, seed + 1).unwrap();
        let gs: Vec<_> = (0..2).map(|k| random_ensemble((4, 4), (2, 2), seed * 3 + k).unwrap()).collect();
        let rep = check_monotone(&m, &sub, &gs).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }
}
