use super::*;
use crate::linalg::{max_entangled, CVec};
use crate::qobj::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-8;

fn phi(d: usize) -> BipartiteState {
    BipartiteState::new(max_entangled(d)).unwrap()
}

fn bell_bell(rho: &BipartiteState) -> DistributedMeasurement {
    let (da, db) = rho.dims();
    build_distributed(&bell_measurement(da), &bell_measurement(db), rho).unwrap()
}

// Generalized robustness of a pure state: (Σ Schmidt coefficients)² − 1.
fn pure_state_oracle(schmidt: &[f64]) -> f64 {
    schmidt.iter().sum::<f64>().powi(2) - 1.0
}

// Isotropic d⊗d state with singlet fraction F: max(0, dF − 1).
fn isotropic_oracle(d: usize, p: f64) -> f64 {
    let f = p + (1.0 - p) / (d * d) as f64;
    (d as f64 * f - 1.0).max(0.0)
}

fn random_product_vector(rng: &mut ChaCha8Rng, da: usize, db: usize) -> CVec {
    let mut v = |d: usize| {
        let x = CVec::from_fn(d, |_, _| crate::linalg::C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        x.normalize()
    };
    let a = v(da);
    let b = v(db);
    a.kronecker(&b)
}

/// Recheck the RoE primal witness and certificate without the solver.
fn audit_roe(rho: &BipartiteState, rep: &RobustnessReport) {
    let PrimalWitness::Roe { sigma } = &rep.primal_witness else { panic!() };
    assert!(sigma.sub(rho.op()).min_eigenvalue() > -1e-7);
    assert!(sigma.partial_transpose(1).unwrap().min_eigenvalue() > -1e-7);
    assert!((sigma.trace() - 1.0 - rep.value).abs() < 1e-7);
    let DualCertificate::Roe { a, w } = &rep.dual_certificate else { panic!() };
    assert!(a.min_eigenvalue() > -1e-7);
    assert!((a.inner(rho.op()) - 1.0 - rep.value).abs() < 1e-6);
    // W must be a witness: nonnegative on product states.
    let (da, db) = rho.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let v = random_product_vector(&mut rng, da, db);
        let e = (v.adjoint() * w.matrix() * &v)[(0, 0)].re;
        assert!(e > -1e-7, "witness negative on a product state: {e}");
    }
}

#[test]
fn roe_pure_states_match_schmidt_formula() {
    let r = roe(&phi(2), TOL).unwrap();
    assert!((r.value - pure_state_oracle(&[0.5f64.sqrt(), 0.5f64.sqrt()])).abs() < 1e-6, "{}", r.value);
    audit_roe(&phi(2), &r);
    let theta = std::f64::consts::PI / 8.0;
    let s = BipartiteState::two_qubit_pure(theta);
    let r = roe(&s, TOL).unwrap();
    let want = pure_state_oracle(&[theta.cos(), theta.sin()]);
    assert!((want - (2.0 * theta).sin()).abs() < 1e-15);
    assert!((r.value - want).abs() < 1e-5, "{}", r.value);
    audit_roe(&s, &r);
}

#[test]
fn roe_isotropic_states() {
    for p in [0.2, 0.6, 1.0] {
        let s = BipartiteState::isotropic(2, p).unwrap();
        let r = roe(&s, TOL).unwrap();
        assert!((r.value - isotropic_oracle(2, p)).abs() < 1e-6, "p={p}: {}", r.value);
        audit_roe(&s, &r);
    }
}

#[test]
fn roe_of_separable_states_vanishes() {
    for seed in 0..3 {
        let s = random_separable(2, 3, 4, seed).unwrap().to_state();
        let r = roe(&s, TOL).unwrap();
        assert!(r.value.abs() < 1e-6, "{}", r.value);
    }
}

#[test]
fn robn_faithful_on_free_measurements() {
    let ma = random_povm(vec![2, 2], 2, 3).unwrap();
    let mb = random_povm(vec![2, 2], 2, 4).unwrap();
    let sep = random_separable(2, 2, 3, 5).unwrap();
    let m = build_free_distributed(&ma, &mb, &sep).unwrap();
    let r = robn(&m, TOL).unwrap();
    assert!(r.value.abs() < 1e-6, "{}", r.value);
    assert!(r.value >= -1e-9);
}

#[test]
fn robn_bell_bell_matches_roe() {
    for p in [0.2, 0.6, 1.0] {
        let s = BipartiteState::isotropic(2, p).unwrap();
        let r = robn(&bell_bell(&s), TOL).unwrap();
        assert!((r.value - isotropic_oracle(2, p)).abs() < 1e-5, "p={p}: {}", r.value);
        let e = roe(&s, TOL).unwrap();
        assert!((r.value - e.value).abs() < 1e-5);
    }
}

#[test]
fn robn_certificate_structure() {
    let m = bell_bell(&BipartiteState::isotropic(2, 0.8).unwrap());
    let r = robn(&m, TOL).unwrap();
    let DualCertificate::Robn { a, b, c, d, e, f } = &r.dual_certificate else { panic!() };
    let (oa, ob) = m.outcomes();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..oa {
        for j in 0..ob {
            let k = i * ob + j;
            // B_b + C_a − A_ab = F_ab, and F_ab is nonnegative on product states.
            let lhs = b[j].add(&c[i]).sub(&a[k]);
            assert!(lhs.max_abs_diff(&f[k]) < 1e-6);
            for _ in 0..20 {
                let v = random_product_vector(&mut rng, 2, 2);
                assert!((v.adjoint() * f[k].matrix() * &v)[(0, 0)].re > -1e-7);
            }
        }
        assert!(c[i].partial_trace(&[0]).unwrap().max_abs_diff(d) < 1e-6);
    }
    for j in 0..ob {
        assert!(b[j].partial_trace(&[1]).unwrap().max_abs_diff(e) < 1e-6);
    }
    assert!((d.trace() + e.trace() - 1.0).abs() < 1e-6);
    let PrimalWitness::Robn { o, n } = &r.primal_witness else { panic!() };
    for k in 0..oa * ob {
        assert!(o[k].sub(&n[k]).sub(&m.elements()[k]).min_eigenvalue() > -1e-7);
        assert!(o[k].partial_transpose(1).unwrap().min_eigenvalue() > -1e-7);
    }
}

#[test]
fn rot_values() {
    let t = teleportation_instrument(&bell_measurement(2), &phi(2)).unwrap();
    let r = rot(&t, TOL).unwrap();
    assert!((r.value - 1.0).abs() < 1e-5, "{}", r.value);
    let sep = random_separable(2, 2, 3, 11).unwrap().to_state();
    let ma = random_povm(vec![2, 2], 3, 12).unwrap();
    let r = rot(&teleportation_instrument(&ma, &sep).unwrap(), TOL).unwrap();
    assert!(r.value.abs() < 1e-6, "{}", r.value);
}

#[test]
fn rot_equals_robn_with_bell_bob() {
    for p in [0.3, 0.7, 0.9] {
        let s = BipartiteState::isotropic(2, p).unwrap();
        let t = teleportation_instrument(&bell_measurement(2), &s).unwrap();
        let r1 = rot(&t, TOL).unwrap();
        let r2 = robn(&bell_bell(&s), TOL).unwrap();
        assert!((r1.value - r2.value).abs() < 1e-5, "p={p}: {} vs {}", r1.value, r2.value);
    }
}

#[test]
fn rot_certificate_structure() {
    let s = BipartiteState::isotropic(2, 0.7).unwrap();
    let t = teleportation_instrument(&bell_measurement(2), &s).unwrap();
    let r = rot(&t, TOL).unwrap();
    let DualCertificate::Rot { a, b, w } = &r.dual_certificate else { panic!() };
    let marg = b.partial_trace(&[1]).unwrap().scale(0.5);
    assert!(marg.max_eigenvalue() < 1.0 + 1e-6);
    for (ak, wk) in a.iter().zip(w) {
        assert!(ak.min_eigenvalue() > -1e-7);
        assert!(wk.max_abs_diff(&b.sub(ak)) < 1e-12);
    }
}

#[test]
fn robn_of_state_agrees_on_random_rank_two_states() {
    for seed in 0..20 {
        let s = BipartiteState::new(random_state(vec![2, 2], 2, 100 + seed).unwrap()).unwrap();
        let r = robn_of_state(&s, TOL, 0).unwrap();
        let e = r.roe_value.unwrap();
        assert!((r.value - e).abs() < 1e-5, "seed {seed}: {} vs {e}", r.value);
    }
}

#[test]
fn robn_of_state_seesaw_does_not_exceed_roe() {
    let s = BipartiteState::two_qubit_pure(0.5);
    let r = robn_of_state(&s, TOL, 2).unwrap();
    assert!((r.value - r.roe_value.unwrap()).abs() < 1e-5);
}

#[test]
fn bad_tolerance_is_input_error() {
    assert!(roe(&phi(2), 1e-2).unwrap_err().is_input());
}

#[test]
fn best_povm_picks_top_eigenvectors() {
    let z = HermitianOperator::diagonal(vec![2], &[1.0, -1.0]).unwrap();
    let p = best_povm(&[z.clone(), z.scale(-1.0)], TOL).unwrap();
    assert!((p.elements()[0].matrix()[(0, 0)].re - 1.0).abs() < 1e-6);
    assert!((p.elements()[1].matrix()[(1, 1)].re - 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn roe_is_local_unitary_invariant(seed in 0u64..10_000) {
        let s = BipartiteState::new(random_state(vec![2, 2], 2, seed).unwrap()).unwrap();
        let u = crate::linalg::kron_mat(&random_unitary(2, seed + 1), &random_unitary(2, seed + 2));
        let rot_s = BipartiteState::new(s.op().conjugate_by(&u, vec![2, 2]).unwrap()).unwrap();
        let a = roe(&s, 1e-9).unwrap().value;
        let b = roe(&rot_s, 1e-9).unwrap().value;
        prop_assert!((a - b).abs() < 1e-7, "{} vs {}", a, b);
    }

    #[test]
    fn roe_primal_dual_consistent(seed in 0u64..10_000) {
        let s = BipartiteState::new(random_state(vec![2, 3], 3, seed).unwrap()).unwrap();
        let r = roe(&s, TOL).unwrap();
        prop_assert!((r.value - r.dual_value).abs() < 10.0 * TOL.max(r.gap) * (1.0 + r.value));
        prop_assert!(r.value >= -1e-9);
    }
}

#[test]
fn property_suite_on_all_subjects() {
    let s = BipartiteState::isotropic(2, 0.8).unwrap();
    let subjects = [
        PropertySubject::Measurement(bell_bell(&s)),
        PropertySubject::Instrument(teleportation_instrument(&bell_measurement(2), &s).unwrap()),
        PropertySubject::State(s),
    ];
    for subject in &subjects {
        let rep = property_suite(subject, &[1, 2], TOL).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        assert_eq!(rep.count(PropertyKind::Convexity), 2 * CONVEXITY_GRID.len());
    }
}

#[test]
fn convexity_endpoints_are_equalities() {
    let subject = PropertySubject::State(phi(2));
    for c in check_convexity(&subject, 5, TOL).unwrap() {
        if c.p == Some(0.0) || c.p == Some(1.0) {
            assert!(c.excess().abs() < 1e-12);
        }
    }
}

#[test]
fn identity_simulation_is_an_equality() {
    let m = bell_bell(&phi(2));
    let same = simulate(&m, &SimulationSubroutine::trivial((4, 4), (2, 2))).unwrap();
    let (a, b) = (robn(&m, TOL).unwrap().value, robn(&same, TOL).unwrap().value);
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn failed_check_carries_counterexample() {
    let s = PropertySubject::State(phi(2));
    let v = s.value(TOL).unwrap();
    let check = PropertyCheck::new(PropertyKind::Faithfulness, 0, None, v, 0.0, &[&s]);
    assert!(!check.passed);
    let ce = check.counterexample.unwrap();
    assert_eq!(ce[0]["kind"], "state");
    let doc = serde_json::json!({"schema_version": "1", "kind": ce[0]["kind"], "payload": ce[0]["payload"]});
    let crate::io::Document::State(back) = crate::io::read_document(&doc.to_string()).unwrap() else { panic!() };
    assert_eq!(&back, match &s { PropertySubject::State(x) => x, _ => unreachable!() });
}

#[test]
fn certificates_reproduce_values() {
    let s = BipartiteState::isotropic(2, 0.9).unwrap();
    let m = bell_bell(&s);
    let r = robn(&m, TOL).unwrap();
    assert!(r.certificate_residual(m.elements()) < 1e-6);
    let t = teleportation_instrument(&bell_measurement(2), &s).unwrap();
    let r = rot(&t, TOL).unwrap();
    assert!(r.certificate_residual(t.elements()) < 1e-6);
    let r = roe(&s, TOL).unwrap();
    assert!(r.certificate_residual(std::slice::from_ref(s.op())) < 1e-6);
    assert!(r.duality_gap() < 1e-7, "{}", r.duality_gap());
}
