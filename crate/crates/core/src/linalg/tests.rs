use super::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_cmat(rng: &mut impl Rng, r: usize, cols: usize) -> CMat {
    CMat::from_fn(r, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_herm(rng: &mut impl Rng, dims: Vec<usize>) -> HermitianOperator {
    let n = dims.iter().product();
    let g = random_cmat(rng, n, n);
    HermitianOperator::from_raw(dims, &g + g.adjoint())
}

fn random_density(rng: &mut impl Rng, dims: Vec<usize>) -> HermitianOperator {
    let n = dims.iter().product();
    let g = random_cmat(rng, n, n);
    let p = HermitianOperator::from_raw(dims, &g * g.adjoint());
    let t = p.trace();
    p.scale(1.0 / t)
}

fn pauli_x() -> HermitianOperator {
    HermitianOperator::from_real(vec![2], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
}

fn pauli_z() -> HermitianOperator {
    HermitianOperator::diagonal(vec![2], &[1.0, -1.0]).unwrap()
}

#[test]
fn constructor_rejects_non_hermitian() {
    let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!(HermitianOperator::new(vec![2], m).is_err());
    let mut m = CMat::identity(2, 2);
    m[(0, 1)] = c(1e-14, 0.0);
    let h = HermitianOperator::new(vec![2], m).unwrap();
    assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
    assert!(HermitianOperator::new(vec![3], CMat::identity(2, 2)).is_err());
}

#[test]
fn tensor_identity_and_index_formula() {
    let id = HermitianOperator::identity(vec![2]).tensor(&HermitianOperator::identity(vec![2]));
    assert_eq!(id.dims(), &[2, 2]);
    assert_eq!(id, HermitianOperator::identity(vec![2, 2]));

    let x = pauli_x();
    let z = pauli_z();
    let xz = tensor(&x, &z);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    assert_eq!(xz.matrix()[(2 * i + k, 2 * j + l)], x.matrix()[(i, j)] * z.matrix()[(k, l)]);
                }
            }
        }
    }
}

#[test]
fn trace_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_herm(&mut rng, vec![2]);
    let b = random_herm(&mut rng, vec![3]);
    assert!((a.tensor(&b).trace() - a.trace() * b.trace()).abs() < 1e-12);
}

#[test]
fn partial_trace_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ra = random_density(&mut rng, vec![2]);
    let rb = random_herm(&mut rng, vec![3]);
    let pt = ra.tensor(&rb).partial_trace(&[0]).unwrap();
    assert!(pt.max_abs_diff(&ra.scale(rb.trace())) < 1e-12);

    let marg = max_entangled(2).partial_trace(&[0]).unwrap();
    assert!(marg.max_abs_diff(&HermitianOperator::maximally_mixed(vec![2])) < 1e-15);

    let scalar = ra.partial_trace(&[]).unwrap();
    assert_eq!(scalar.dims(), &[] as &[usize]);
    assert!((scalar.trace() - 1.0).abs() < 1e-12);
}

#[test]
fn partial_trace_matches_index_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_herm(&mut rng, vec![2, 2]);
    let got = x.partial_trace(&[0]).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let want = x.matrix()[(2 * i, 2 * j)] + x.matrix()[(2 * i + 1, 2 * j + 1)];
            assert!((got.matrix()[(i, j)] - want).norm() < 1e-14);
        }
    }
    let x = random_herm(&mut rng, vec![2, 3, 2]);
    let got = x.partial_trace(&[1]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let mut want = c(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    want += x.matrix()[(a * 6 + i * 2 + b, a * 6 + j * 2 + b)];
                }
            }
            assert!((got.matrix()[(i, j)] - want).norm() < 1e-13);
        }
    }
}

#[test]
fn identity_extend_is_adjoint_of_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random_herm(&mut rng, vec![2, 3, 2]);
    let y = random_herm(&mut rng, vec![2, 2]);
    let lhs = x.partial_trace(&[0, 2]).unwrap().inner(&y);
    let rhs = x.inner(&y.identity_extend(&[2, 3, 2], &[0, 2]).unwrap());
    assert!((lhs - rhs).abs() < 1e-12);
    let r = HermitianOperator::scalar(2.5).identity_extend(&[3], &[]).unwrap();
    assert!(r.max_abs_diff(&HermitianOperator::identity(vec![3]).scale(2.5)) < 1e-15);
}

#[test]
fn partial_transpose_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_herm(&mut rng, vec![2]);
    let b = random_herm(&mut rng, vec![3]);
    let got = a.tensor(&b).partial_transpose(1).unwrap();
    assert!(got.max_abs_diff(&a.tensor(&b.transpose())) < 1e-14);

    let phi = max_entangled(2);
    let lam = phi.partial_transpose(1).unwrap().min_eigenvalue();
    // PT of φ₊ is the swap operator divided by 2
    assert!((lam + 0.5).abs() < 1e-12);
}

#[test]
fn max_entangled_definition() {
    let phi = max_entangled(2);
    for i in 0..4 {
        for j in 0..4 {
            let corner = (i == 0 || i == 3) && (j == 0 || j == 3);
            let want = if corner { 0.5 } else { 0.0 };
            assert_eq!(phi.matrix()[(i, j)], c(want, 0.0));
        }
    }
    assert!((phi.trace() - 1.0).abs() < 1e-15);
}

#[test]
fn transpose_transfer_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for d in [2, 3] {
        let a = random_cmat(&mut rng, d, d);
        let phi = max_entangled(d).into_matrix();
        let id = CMat::identity(d, d);
        let lhs = kron_mat(&a, &id) * &phi;
        let rhs = kron_mat(&id, &a.transpose()) * &phi;
        assert!((lhs - rhs).norm() < 1e-13);
    }
}

#[test]
fn heisenberg_weyl_structure() {
    let hw = heisenberg_weyl(2);
    let x = pauli_x().into_matrix();
    let z = pauli_z().into_matrix();
    assert_eq!(hw[0], CMat::identity(2, 2));
    assert_eq!(hw[1], z);
    assert_eq!(hw[2], x);
    assert_eq!(hw[3], &x * &z);
    for d in [2, 3] {
        let hw = heisenberg_weyl(d);
        assert_eq!(hw.len(), d * d);
        for (i, u) in hw.iter().enumerate() {
            for (j, v) in hw.iter().enumerate() {
                let t = (u.adjoint() * v).trace();
                let want = if i == j { d as f64 } else { 0.0 };
                assert!((t - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn heisenberg_weyl_twirl_depolarizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in [2, 3] {
        let rho = random_herm(&mut rng, vec![d]);
        let mut acc = CMat::zeros(d, d);
        for u in heisenberg_weyl(d) {
            acc += &u * rho.matrix() * u.adjoint();
        }
        acc /= c((d * d) as f64, 0.0);
        let want = CMat::identity(d, d) * c(rho.trace() / d as f64, 0.0);
        assert!((acc - want).norm() < 1e-12);
    }
}

fn random_channel(rng: &mut impl Rng, din: usize, dout: usize, nk: usize) -> LinearMapOnOperators {
    let ks: Vec<CMat> = (0..nk).map(|_| random_cmat(rng, dout, din)).collect();
    let mut s = CMat::zeros(din, din);
    for k in &ks {
        s += k.adjoint() * k;
    }
    let inv_sqrt = HermitianOperator::from_raw(vec![din], s).map_spectrum(|v| 1.0 / v.sqrt()).into_matrix();
    let ks = ks.iter().map(|k| k * &inv_sqrt).collect();
    LinearMapOnOperators::from_kraus(ks, vec![din], vec![dout]).unwrap()
}

#[test]
fn map_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random_herm(&mut rng, vec![3]);
    let id = LinearMapOnOperators::identity(vec![3]);
    assert!(apply_map(&id, &x).unwrap().max_abs_diff(&x) < 1e-15);

    let pauli: Vec<CMat> = heisenberg_weyl(2).into_iter().map(|u| u * c(0.5, 0.0)).collect();
    let depol = LinearMapOnOperators::from_kraus(pauli, vec![2], vec![2]).unwrap();
    assert!(depol.is_trace_preserving(1e-12));
    let rho = random_density(&mut rng, vec![2]);
    let out = apply_map(&depol, &rho).unwrap();
    assert!(out.max_abs_diff(&HermitianOperator::maximally_mixed(vec![2])) < 1e-12);

    let ch = random_channel(&mut rng, 2, 3, 3);
    let rho = random_density(&mut rng, vec![2]);
    let via_kraus = apply_map(&ch, &rho).unwrap();
    let via_choi = apply_map(&ch.to_choi_form(), &rho).unwrap();
    assert!(via_kraus.max_abs_diff(&via_choi) < 1e-12);
    let back = LinearMapOnOperators::from_choi(ch.choi(), vec![2], vec![3]).unwrap();
    assert!(apply_map(&back, &rho).unwrap().max_abs_diff(&via_kraus) < 1e-12);

    assert!(apply_map(&ch, &random_herm(&mut rng, vec![3])).is_err());
    let too_big = vec![CMat::identity(2, 2) * c(1.1, 0.0)];
    assert!(LinearMapOnOperators::from_kraus(too_big, vec![2], vec![2]).is_err());
}

#[test]
fn adjoint_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u = heisenberg_weyl(3)[4].clone();
    let m = LinearMapOnOperators::unitary(u.clone(), vec![3]).unwrap();
    let x = random_herm(&mut rng, vec![3]);
    let got = apply_map(&adjoint_map(&m), &x).unwrap();
    let want = HermitianOperator::from_raw(vec![3], u.adjoint() * x.matrix() * &u);
    assert!(got.max_abs_diff(&want) < 1e-13);

    let ch = random_channel(&mut rng, 2, 3, 3);
    let unital = apply_map(&adjoint_map(&ch), &HermitianOperator::identity(vec![3])).unwrap();
    assert!(unital.max_abs_diff(&HermitianOperator::identity(vec![2])) < 1e-12);

    let adj = adjoint_map(&ch);
    for _ in 0..20 {
        let x = random_herm(&mut rng, vec![2]);
        let y = random_herm(&mut rng, vec![3]);
        let lhs = apply_map(&adj, &y).unwrap().inner(&x);
        let rhs = y.inner(&apply_map(&ch, &x).unwrap());
        assert!((lhs - rhs).abs() < 1e-11);
    }
}

/// det(X − λ1) via LU.
fn char_poly(x: &HermitianOperator, lam: f64) -> f64 {
    let n = x.dim();
    let m = x.matrix() - CMat::identity(n, n) * c(lam, 0.0);
    m.lu().determinant().re
}

#[test]
fn min_eigenvalue_examples() {
    assert_eq!(HermitianOperator::identity(vec![4]).min_eigenvalue(), 1.0);
    let (lam, v) = min_eigenvalue(&HermitianOperator::diagonal(vec![2], &[3.0, -2.0]).unwrap());
    assert!((lam + 2.0).abs() < 1e-15);
    assert!((v[1] - c(1.0, 0.0)).norm() < 1e-15 && v[0].norm() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..5 {
        let x = random_herm(&mut rng, vec![4]);
        let lam = x.min_eigenvalue();
        // below λ_min the sign of det(X − λ) is constant (positive for even n)
        let (mut lo, mut hi) = (-20.0, x.eigenvalues()[1] - 1e-9);
        let s_lo = char_poly(&x, lo).signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if char_poly(&x, mid).signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - lam).abs() < 1e-9, "bisection {lo} vs {lam}");
    }
}

#[test]
fn eigenvector_phase_convention() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random_herm(&mut rng, vec![3]);
    let (vals, vecs) = x.eigh();
    assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    for k in 0..3 {
        let lead = vecs.column(k).iter().find(|z| z.norm() > 1e-12).copied().unwrap();
        assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        let v = vecs.column(k);
        let r = x.matrix() * v - v * c(vals[k], 0.0);
        assert!(r.norm() < 1e-12);
    }
}

#[test]
fn permute_swaps_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = random_herm(&mut rng, vec![2]);
    let b = random_herm(&mut rng, vec![3]);
    let swapped = a.tensor(&b).permute(&[1, 0]).unwrap();
    assert_eq!(swapped.dims(), &[3, 2]);
    assert!(swapped.max_abs_diff(&b.tensor(&a)) < 1e-15);
}

fn herm_strategy(dims: Vec<usize>) -> impl Strategy<Value = HermitianOperator> {
    let n: usize = dims.iter().product();
    proptest::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
        let g = CMat::from_fn(n, n, |i, j| c(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
        HermitianOperator::from_raw(dims.clone(), &g + g.adjoint())
    })
}

proptest! {
    #[test]
    fn nested_partial_traces(x in herm_strategy(vec![2, 3, 2])) {
        let direct = x.partial_trace(&[0]).unwrap();
        let nested = x.partial_trace(&[0, 1]).unwrap().partial_trace(&[0]).unwrap();
        prop_assert!(direct.max_abs_diff(&nested) < 1e-12);
        prop_assert!((x.partial_trace(&[1]).unwrap().trace() - x.trace()).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_invariants(x in herm_strategy(vec![2, 3])) {
        let p = x.partial_transpose(1).unwrap();
        prop_assert!((p.trace() - x.trace()).abs() < 1e-12);
        prop_assert!((p.inner(&p) - x.inner(&x)).abs() < 1e-10);
        prop_assert!(p.partial_transpose(1).unwrap().max_abs_diff(&x) < 1e-15);
        prop_assert!(HermitianOperator::new(p.dims().to_vec(), p.matrix().clone()).is_ok());
    }

    #[test]
    fn tensor_associative(a in herm_strategy(vec![2]), b in herm_strategy(vec![2]), c3 in herm_strategy(vec![3])) {
        let l = a.tensor(&b).tensor(&c3);
        let r = a.tensor(&b.tensor(&c3));
        prop_assert_eq!(l.dims(), r.dims());
        prop_assert!(l.max_abs_diff(&r) < 1e-14);
        prop_assert!((l.trace() - a.trace() * b.trace() * c3.trace()).abs() < 1e-10);
    }

    #[test]
    fn channels_preserve_trace(seed in 0u64..1000, x in herm_strategy(vec![2])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, 2, 2, 2);
        prop_assert!((apply_map(&ch, &x).unwrap().trace() - x.trace()).abs() < 1e-10);
    }

    #[test]
    fn twirl_depolarizes(x in herm_strategy(vec![3])) {
        let mut acc = CMat::zeros(3, 3);
        for u in heisenberg_weyl(3) {
            acc += &u * x.matrix() * u.adjoint();
        }
        let want = CMat::identity(3, 3) * c(9.0 * x.trace() / 3.0, 0.0);
        prop_assert!((acc - want).norm() < 1e-11);
    }
}
