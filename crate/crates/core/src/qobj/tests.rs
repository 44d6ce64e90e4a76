use super::*;
use crate::linalg::C64;
use proptest::prelude::*;

fn index_sum_element(ma: &HermitianOperator, mb: &HermitianOperator, rho: &HermitianOperator, dims: [usize; 4]) -> CMat {
    // Entry ((i,l),(i2,l2)) = Σ M_a[(i,j),(i2,j2)] M_b[(k,l),(k2,l2)] ρ[(j2,k2),(j,k)]
    let [da, dap, dbp, db] = dims;
    let a = ma.matrix();
    let b = mb.matrix();
    let r = rho.matrix();
    let mut out = CMat::zeros(da * db, da * db);
    for i in 0..da {
        for l in 0..db {
            for i2 in 0..da {
                for l2 in 0..db {
                    let mut s = C64::new(0.0, 0.0);
                    for j in 0..dap {
                        for k in 0..dbp {
                            for j2 in 0..dap {
                                for k2 in 0..dbp {
                                    s += a[(i * dap + j, i2 * dap + j2)]
                                        * b[(k * db + l, k2 * db + l2)]
                                        * r[(j2 * dbp + k2, j * dbp + k)];
                                }
                            }
                        }
                    }
                    out[(i * db + l, i2 * db + l2)] = s;
                }
            }
        }
    }
    out
}

#[test]
fn build_distributed_matches_index_sum() {
    let ma = random_povm(vec![2, 3], 3, 1).unwrap();
    let mb = random_povm(vec![2, 2], 2, 2).unwrap();
    let rho = BipartiteState::new(random_state(vec![3, 2], 2, 3).unwrap()).unwrap();
    let m = build_distributed(&ma, &mb, &rho).unwrap();
    assert_eq!(m.outcomes(), (3, 2));
    assert_eq!(m.dims(), (2, 2));
    for a in 0..3 {
        for b in 0..2 {
            let want = index_sum_element(&ma.elements()[a], &mb.elements()[b], rho.op(), [2, 3, 2, 2]);
            let got = m.element(a, b).matrix();
            assert!((got - want).camax() < 1e-13);
        }
    }
    assert!(m.provenance().is_some());
}

#[test]
fn distributed_measurements_do_not_signal() {
    for seed in 0..5 {
        let ma = random_povm(vec![2, 2], 4, 10 + seed).unwrap();
        let mb = random_povm(vec![2, 2], 3, 20 + seed).unwrap();
        let rho = BipartiteState::new(random_state(vec![2, 2], 4, 30 + seed).unwrap()).unwrap();
        let m = build_distributed(&ma, &mb, &rho).unwrap();
        assert!(m.no_signalling_residual() < 1e-12);
    }
}

#[test]
fn bell_basis_is_orthonormal() {
    for d in 2..=3 {
        let p = bell_measurement(d);
        assert_eq!(p.outcomes(), d * d);
        for (i, x) in p.elements().iter().enumerate() {
            for (j, y) in p.elements().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((x.inner(y) - want).abs() < 1e-12, "d={d} ({i},{j})");
            }
        }
    }
}

#[test]
fn entanglement_swapping_gives_scaled_bell_projectors() {
    let phi = BipartiteState::new(max_entangled(2)).unwrap();
    let bell = bell_measurement(2);
    let m = build_distributed(&bell, &bell, &phi).unwrap();
    for e in m.elements() {
        let ev = e.eigenvalues();
        assert!((ev[3] - 0.25).abs() < 1e-12);
        assert!(ev[..3].iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn teleportation_instrument_marginal() {
    let ma = random_povm(vec![2, 2], 3, 5).unwrap();
    let rho = BipartiteState::new(random_state(vec![2, 3], 3, 6).unwrap()).unwrap();
    let t = teleportation_instrument(&ma, &rho).unwrap();
    assert_eq!(t.dims(), (2, 3));
    let mut sum = HermitianOperator::zeros(vec![2, 3]);
    for j in t.elements() {
        sum.add_scaled(1.0, j);
    }
    let want = HermitianOperator::identity(vec![2]).tensor(&rho.marginal(1)).scale(0.5);
    assert!(sum.max_abs_diff(&want) < 1e-13);
}

#[test]
fn bell_teleportation_subchannels_are_unitary() {
    let phi = BipartiteState::new(max_entangled(2)).unwrap();
    let t = teleportation_instrument(&bell_measurement(2), &phi).unwrap();
    for a in 0..4 {
        let ch = t.subchannel(a).unwrap();
        // Each outcome occurs with probability 1/4 and applies a unitary.
        let ks = ch.kraus_sum();
        assert!(ks.max_abs_diff(&HermitianOperator::identity(vec![2]).scale(0.25)) < 1e-12);
        assert_eq!(ch.kraus().len(), 1);
    }
}

#[test]
fn free_measurement_equals_separable_state_measurement() {
    let ma = random_povm(vec![2, 2], 3, 7).unwrap();
    let mb = random_povm(vec![2, 3], 2, 8).unwrap();
    let sep = random_separable(2, 2, 3, 9).unwrap();
    let free = build_free_distributed(&ma, &mb, &sep).unwrap();
    let direct = build_distributed(&ma, &mb, &sep.to_state()).unwrap();
    for (x, y) in free.elements().iter().zip(direct.elements()) {
        assert!(x.max_abs_diff(y) < 1e-13);
    }
}

#[test]
fn controlled_povm_blocks() {
    let settings: Vec<Povm> = (0..3).map(|s| random_povm(vec![2], 2, 40 + s).unwrap()).collect();
    let ca = controlled_povm(&settings, Side::A).unwrap();
    assert_eq!(ca.dims(), &[3, 2]);
    let cb = controlled_povm(&settings, Side::B).unwrap();
    assert_eq!(cb.dims(), &[2, 3]);
    // Block x of the A-side element is the setting-x effect.
    let blk = ca.elements()[1].matrix().view((4, 4), (2, 2)).into_owned();
    assert!((blk - settings[2].elements()[1].matrix()).camax() < 1e-15);
    let bad = vec![random_povm(vec![2], 2, 1).unwrap(), random_povm(vec![2], 3, 2).unwrap()];
    assert!(controlled_povm(&bad, Side::A).unwrap_err().is_input());
}

#[test]
fn behaviour_is_normalized_and_matches_trace() {
    let ma = random_povm(vec![2, 2], 2, 11).unwrap();
    let mb = random_povm(vec![2, 2], 3, 12).unwrap();
    let rho = BipartiteState::new(random_state(vec![2, 2], 1, 13).unwrap()).unwrap();
    let m = build_distributed(&ma, &mb, &rho).unwrap();
    let q = QuestionSet::pauli_eigenstates();
    let p = behaviour(&m, &q, &QuestionSet::basis(2)).unwrap();
    assert_eq!(p.shape(), [2, 3, 6, 2]);
    for x in 0..6 {
        for y in 0..2 {
            let s: f64 = (0..2).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| p.get(a, b, x, y)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
    let want = m.element(1, 2).inner(&q.states()[3].tensor(&QuestionSet::basis(2).states()[0]));
    assert!((p.get(1, 2, 3, 0) - want).abs() < 1e-15);
    assert!(Behaviour::new(p.shape(), p.values().to_vec()).is_ok());
}

#[test]
fn trivial_subroutine_is_identity() {
    let ma = random_povm(vec![2, 2], 2, 14).unwrap();
    let mb = random_povm(vec![2, 2], 2, 15).unwrap();
    let rho = BipartiteState::new(random_state(vec![2, 2], 2, 16).unwrap()).unwrap();
    let m = build_distributed(&ma, &mb, &rho).unwrap();
    let out = simulate(&m, &SimulationSubroutine::trivial((2, 2), (2, 2))).unwrap();
    for (x, y) in out.elements().iter().zip(m.elements()) {
        assert!(x.max_abs_diff(y) < 1e-14);
    }
}

#[test]
fn relabeling_merges_outcomes() {
    let ma = random_povm(vec![2, 2], 3, 17).unwrap();
    let mb = random_povm(vec![2, 2], 2, 18).unwrap();
    let rho = BipartiteState::new(random_state(vec![2, 2], 2, 19).unwrap()).unwrap();
    let m = build_distributed(&ma, &mb, &rho).unwrap();
    let s = SimulationSubroutine::relabeling(&[0, 0, 1], &[0, 0], (2, 2));
    let out = simulate(&m, &s).unwrap();
    assert_eq!(out.outcomes(), (2, 1));
    let want = m.element(0, 0).add(m.element(0, 1)).add(m.element(1, 0)).add(m.element(1, 1));
    assert!(out.element(0, 0).max_abs_diff(&want) < 1e-14);
}

#[test]
fn validation_rejects_bad_objects() {
    let half = HermitianOperator::identity(vec![2]).scale(0.5);
    assert!(Povm::new(vec![half.clone()]).unwrap_err().is_input());
    assert!(Povm::new(vec![]).unwrap_err().is_input());
    let neg = HermitianOperator::diagonal(vec![2], &[1.5, -0.5]).unwrap();
    assert!(Povm::new(vec![neg, HermitianOperator::diagonal(vec![2], &[-0.5, 1.5]).unwrap()]).is_err());
    assert!(BipartiteState::new(HermitianOperator::maximally_mixed(vec![4])).unwrap_err().is_input());
    assert!(BipartiteState::new(HermitianOperator::identity(vec![2, 2])).unwrap_err().is_input());
    assert!(BipartiteState::isotropic(2, 1.5).is_err());
    // A signalling "instrument": outcome sum is not 1/d_V ⊗ ρ.
    let j = HermitianOperator::diagonal(vec![2, 2], &[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(TeleportationInstrument::new(vec![j]).unwrap_err().is_input());
    let ma = random_povm(vec![2, 2], 2, 1).unwrap();
    let rho = BipartiteState::new(random_state(vec![3, 2], 1, 1).unwrap()).unwrap();
    assert!(build_distributed(&ma, &ma, &rho).unwrap_err().is_input());
    let m = build_distributed(&ma, &ma, &BipartiteState::new(max_entangled(2)).unwrap()).unwrap();
    assert!(simulate(&m, &SimulationSubroutine::trivial((3, 2), (2, 2))).unwrap_err().is_input());
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(random_state(vec![2, 2], 2, 99).unwrap(), random_state(vec![2, 2], 2, 99).unwrap());
    assert_ne!(random_state(vec![2, 2], 2, 99).unwrap(), random_state(vec![2, 2], 2, 98).unwrap());
    assert_eq!(random_povm(vec![3], 4, 5).unwrap(), random_povm(vec![3], 4, 5).unwrap());
    let u = random_unitary(4, 3);
    assert!((u.adjoint() * &u - CMat::identity(4, 4)).camax() < 1e-13);
    assert_eq!(random_state(vec![2, 2], 1, 1).unwrap().eigenvalues().iter().filter(|v| v.abs() > 1e-10).count(), 1);
}

#[test]
fn isotropic_and_pure_states() {
    let s = BipartiteState::isotropic(3, 0.4).unwrap();
    assert!((s.op().inner(&max_entangled(3)) - (0.4 + 0.6 / 9.0)).abs() < 1e-14);
    let p = BipartiteState::two_qubit_pure(0.3);
    assert!((p.marginal(0).eigenvalues()[1] - 0.3f64.cos().powi(2)).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulation_composes(seed in 0u64..1000) {
        let ma = random_povm(vec![2, 2], 3, seed).unwrap();
        let mb = random_povm(vec![2, 2], 2, seed + 1).unwrap();
        let rho = BipartiteState::new(random_state(vec![2, 2], 2, seed + 2).unwrap()).unwrap();
        let m = build_distributed(&ma, &mb, &rho).unwrap();
        let s1 = random_subroutine((3, 2), (2, 2), (2, 2), 2, seed + 3).unwrap();
        let s2 = random_subroutine((2, 2), (2, 3), (2, 2), 2, seed + 4).unwrap();
        let twice = simulate(&simulate(&m, &s1).unwrap(), &s2).unwrap();
        let once = simulate(&m, &s1.then(&s2).unwrap()).unwrap();
        for (x, y) in twice.elements().iter().zip(once.elements()) {
            prop_assert!(x.max_abs_diff(y) < 1e-12);
        }
        prop_assert!(twice.no_signalling_residual() < 1e-12);
    }

    #[test]
    fn mixing_preserves_validity(p in 0.0f64..=1.0, seed in 0u64..1000) {
        let phi = BipartiteState::new(max_entangled(2)).unwrap();
        let m1 = build_distributed(&bell_measurement(2), &bell_measurement(2), &phi).unwrap();
        let ma = random_povm(vec![2, 2], 4, seed).unwrap();
        let mb = random_povm(vec![2, 2], 4, seed + 1).unwrap();
        let m2 = build_distributed(&ma, &mb, &phi).unwrap();
        let mix = m1.mix(p, &m2).unwrap();
        prop_assert!(mix.no_signalling_residual() < 1e-12);
    }
}
