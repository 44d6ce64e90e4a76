//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nonlocality_forge::conic::{realify, solve, ConeProgram, ConeTag, LinOp, Sense, Status, Term};
use nonlocality_forge::linalg::{max_entangled, HermitianOperator, C64};
use nonlocality_forge::qobj::{random_separable, BipartiteState};
use nonlocality_forge::robustness::{roe, Audit};
use nonlocality_forge::suites::{run_suite, Suite, SuiteConfig, SuiteReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Library default solver tolerance.
const TOL: f64 = 1e-8;

struct Verdict {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn pure_state_robustness(theta: f64) -> f64 {
    // (Σ Schmidt coefficients)² − 1 for cos θ|00⟩ + sin θ|11⟩.
    (theta.cos() + theta.sin()).powi(2) - 1.0
}

fn roe_exactness(audits: &mut Audit) -> Verdict {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut ok = true;
    let phi = BipartiteState::new(max_entangled(2)).unwrap();
    let r = roe(&phi, TOL).unwrap();
    *audits = audits.max(Audit::of(&r, std::slice::from_ref(phi.op())));
    ok &= (r.value - 1.0).abs() <= 1e-6;
    worst = worst.max((r.value - 1.0).abs());
    for k in [16.0, 8.0, 4.0] {
        let theta = std::f64::consts::PI / k;
        let s = BipartiteState::two_qubit_pure(theta);
        let r = roe(&s, TOL).unwrap();
        *audits = audits.max(Audit::of(&r, std::slice::from_ref(s.op())));
        let want = pure_state_robustness(theta);
        ok &= (want - (2.0 * theta).sin()).abs() < 1e-12 && (r.value - want).abs() <= 1e-5;
        worst = worst.max((r.value - want).abs());
    }
    for seed in 0..10 {
        let s = random_separable(2, 2, 4, 40 + seed).unwrap().to_state();
        let r = roe(&s, TOL).unwrap();
        *audits = audits.max(Audit::of(&r, std::slice::from_ref(s.op())));
        ok &= r.value.abs() <= 1e-6;
        worst = worst.max(r.value.abs());
    }
    let el = t.elapsed();
    Verdict {
        id: 1,
        title: "RoE exactness",
        passed: ok && el < Duration::from_secs(5),
        detail: format!("max error {worst:.2e}, {:.2}s", el.as_secs_f64()),
    }
}

fn suite_verdict(id: usize, title: &'static str, rep: &SuiteReport, expected_cases: usize, limit: Option<Duration>) -> Verdict {
    let mut detail = format!(
        "{}/{} cases, max residual {:.2e}, {:.1}s",
        rep.pass_count(),
        rep.cases.len(),
        rep.max_residual(),
        rep.seconds
    );
    for f in rep.failures() {
        detail.push_str(&format!("\n    failed: {} residual {:.3e} {}", f.name, f.residual, f.error.clone().unwrap_or_default()));
    }
    let in_time = limit.is_none_or(|l| rep.seconds < l.as_secs_f64());
    Verdict { id, title, passed: rep.passed() && rep.cases.len() >= expected_cases && in_time, detail }
}

fn solver_battery() -> Verdict {
    let mut notes = Vec::new();
    // λ_max: min t s.t. t·1 ⪰ X.
    let x = HermitianOperator::diagonal(vec![3], &[1.0, 3.0, 2.0]).unwrap();
    let mut p = ConeProgram::new(Sense::Minimize);
    let t = p.add_variable("t", vec![], ConeTag::Free);
    p.add_inequality("t1-X", vec![Term::new(t).then(LinOp::extend(&[3], &[]))], x).unwrap();
    p.add_objective(t, HermitianOperator::scalar(1.0)).unwrap();
    let s = solve(&p, 1e-10).unwrap();
    let lam_ok = s.status == Status::Optimal && (s.objective_value - 3.0).abs() <= 1e-9;
    notes.push(format!("λ_max error {:.1e}", (s.objective_value - 3.0).abs()));

    // X ⪰ 0 with tr X = −1.
    let mut p = ConeProgram::new(Sense::Minimize);
    let xv = p.add_variable("X", vec![2], ConeTag::Psd);
    let c = p
        .add_equality("trace", vec![Term::new(xv).then(LinOp::partial_trace(&[2], &[]))], HermitianOperator::scalar(-1.0))
        .unwrap();
    let s = solve(&p, 1e-8).unwrap();
    let y = s.dual(c);
    let lstar = p.constraint(c).terms[0].adjoint().apply(y).unwrap();
    let inf_ok = s.status == Status::Infeasible && p.constraint(c).rhs.inner(y) > 0.0 && lstar.max_eigenvalue() < 1e-8;
    notes.push(format!("infeasible status {}", s.status));

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut real_ok = true;
    for _ in 0..20 {
        let g = nonlocality_forge::linalg::CMat::from_fn(4, 4, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = HermitianOperator::new(vec![4], &g + g.adjoint()).unwrap();
        let mut ev: Vec<f64> = realify(&h).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (k, v) in h.eigenvalues().iter().enumerate() {
            real_ok &= (ev[2 * k] - v).abs() < 1e-10 && (ev[2 * k + 1] - v).abs() < 1e-10;
        }
    }
    notes.push(format!("realify doubling {}", if real_ok { "ok" } else { "broken" }));
    Verdict { id: 9, title: "solver battery", passed: lam_ok && inf_ok && real_ok, detail: notes.join(", ") }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cfg = |seeds| SuiteConfig { seeds, dims: 2, tol: TOL };
    let mut audit = Audit::default();
    let mut verdicts = vec![roe_exactness(&mut audit)];

    let r4 = run_suite(Suite::Result4, cfg(10)).unwrap();
    let r2 = run_suite(Suite::Result2, cfg(10)).unwrap();
    let r1 = run_suite(Suite::Result1, cfg(5)).unwrap();
    let r7 = run_suite(Suite::Result7, cfg(5)).unwrap();
    let props = run_suite(Suite::Properties, cfg(50)).unwrap();
    let r6 = run_suite(Suite::Result6, cfg(30)).unwrap();
    for rep in [&r4, &r2, &r1, &r7, &props] {
        audit = audit.max(rep.audit());
    }

    verdicts.push(Verdict {
        id: 2,
        title: "duality",
        passed: audit.gap <= 1e-7 && audit.certificate <= 1e-6,
        detail: format!("max |primal − dual| {:.2e}, max certificate residual {:.2e}", audit.gap, audit.certificate),
    });
    verdicts.push(suite_verdict(3, "Bell/Bell robustness equals entanglement robustness", &r4, 10, Some(Duration::from_secs(180))));
    verdicts.push(suite_verdict(4, "teleportation robustness equals Bell-Bob robustness", &r2, 10, Some(Duration::from_secs(180))));
    verdicts.push(suite_verdict(5, "discrimination advantage ratio", &r1, 5, None));
    verdicts.push(suite_verdict(6, "min-accessible information", &r7, 5, None));
    verdicts.push(suite_verdict(7, "faithfulness, convexity, monotonicity", &props, 80, None));
    verdicts.push(suite_verdict(8, "simulation never raises guessing scores", &r6, 30, None));
    verdicts.push(solver_battery());

    // Determinism: a rerun reproduces every residual bit for bit.
    let again = run_suite(Suite::Result4, cfg(10)).unwrap();
    let same = again.cases.iter().zip(&r4.cases).all(|(a, b)| a.residual.to_bits() == b.residual.to_bits());
    let total = start.elapsed();
    verdicts.push(Verdict {
        id: 10,
        title: "runtime and determinism",
        passed: same && total < Duration::from_secs(15 * 60),
        detail: format!("{:.1}s total, rerun identical: {same}", total.as_secs_f64()),
    });

    let mut all = true;
    for v in &verdicts {
        all &= v.passed;
        println!("{} criterion {:>2} ({}): {}", if v.passed { "PASS" } else { "FAIL" }, v.id, v.title, v.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
