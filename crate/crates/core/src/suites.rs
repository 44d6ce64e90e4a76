//! Verification suites over seeded instances and the bundled fixtures.
//! Cases run in parallel on the rayon pool; results keep case order.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::games::{
    bell_bell, certificate_weight, check_monotone, dsd_classical_score, dsd_quantum_score, min_accessible_info,
    optimal_dsd_ensemble, random_ensemble, verify_result1,
};
use crate::io::{Document, EnsembleDto};
use crate::qobj::{
    bell_measurement, build_distributed, random_state, random_subroutine, teleportation_instrument, BipartiteState,
    DistributedMeasurement,
};
use crate::robustness::{
    check_convexity, check_faithfulness, check_monotonicity, robn, roe, rot, Audit, PropertyCheck, PropertySubject,
    RobustnessReport,
};

pub const EQUALITY_TOL: f64 = 1e-5;
pub const RATIO_TOL: f64 = 1e-4;
pub const FREE_RATIO_TOL: f64 = 1e-5;
pub const INFO_TOL: f64 = 1e-4;
pub const MONOTONE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Result1,
    Result2,
    Result4,
    Result6,
    Result7,
    Properties,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Result1, Suite::Result2, Suite::Result4, Suite::Result6, Suite::Result7, Suite::Properties];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Result1 => "result1",
            Suite::Result2 => "result2",
            Suite::Result4 => "result4",
            Suite::Result6 => "result6",
            Suite::Result7 => "result7",
            Suite::Properties => "properties",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::input(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seeds: usize,
    /// Local dimension d of the seeded d⊗d instances.
    pub dims: usize,
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seeds: 10, dims: 2, tol: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteCase {
    pub name: String,
    pub passed: bool,
    /// Deviation from the asserted relation; must stay under `threshold`.
    pub residual: f64,
    pub threshold: f64,
    /// Worst duality audit among the programs solved.
    pub audit: Audit,
    pub seconds: f64,
    pub error: Option<String>,
    /// Instances to reproduce a failure.
    pub counterexample: Option<Value>,
}

impl SuiteCase {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "name": self.name,
            "passed": self.passed,
            "residual": self.residual,
            "threshold": self.threshold,
            "duality_gap": self.audit.gap,
            "certificate_residual": self.audit.certificate,
            "seconds": self.seconds,
        });
        if let Some(e) = &self.error {
            v["error"] = json!(e);
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub cases: Vec<SuiteCase>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn pass_count(&self) -> usize {
        self.cases.iter().filter(|c| c.passed).count()
    }

    pub fn max_residual(&self) -> f64 {
        self.cases.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn audit(&self) -> Audit {
        self.cases.iter().fold(Audit::default(), |a, c| a.max(c.audit))
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteCase> {
        self.cases.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite.name(),
            "seeds": self.config.seeds,
            "dims": self.config.dims,
            "tol": self.config.tol,
            "passed": self.passed(),
            "pass_count": self.pass_count(),
            "case_count": self.cases.len(),
            "max_residual": self.max_residual(),
            "max_duality_gap": self.audit().gap,
            "max_certificate_residual": self.audit().certificate,
            "seconds": self.seconds,
            "cases": self.cases.iter().map(SuiteCase::to_json).collect::<Vec<_>>(),
        })
    }
}

/// What a case body reports back.
struct Outcome {
    residual: f64,
    threshold: f64,
    audit: Audit,
    counterexample: Option<Value>,
}

impl Outcome {
    fn new(residual: f64, threshold: f64, audit: Audit) -> Self {
        Outcome { residual, threshold, audit, counterexample: None }
    }

    fn with_instance(mut self, doc: Document) -> Self {
        self.counterexample = Some(json!({"kind": doc.kind(), "payload": doc.payload()}));
        self
    }
}

type CaseFn = Box<dyn Fn() -> Result<Outcome> + Send + Sync>;

fn run_cases(cases: Vec<(String, CaseFn)>) -> Vec<SuiteCase> {
    cases
        .into_par_iter()
        .map(|(name, body)| {
            let t = Instant::now();
            let out = body();
            let seconds = t.elapsed().as_secs_f64();
            match out {
                Ok(o) => SuiteCase {
                    name,
                    passed: o.residual <= o.threshold,
                    residual: o.residual,
                    threshold: o.threshold,
                    audit: o.audit,
                    seconds,
                    error: None,
                    counterexample: if o.residual <= o.threshold { None } else { o.counterexample },
                },
                Err(e) => SuiteCase {
                    name,
                    passed: false,
                    residual: f64::INFINITY,
                    threshold: 0.0,
                    audit: Audit::default(),
                    seconds,
                    error: Some(e.to_string()),
                    counterexample: None,
                },
            }
        })
        .collect()
}

fn robn_audited(m: &DistributedMeasurement, tol: f64) -> Result<(RobustnessReport, Audit)> {
    let r = robn(m, tol)?;
    let d = Audit::of(&r, m.elements());
    Ok((r, d))
}

fn roe_audited(s: &BipartiteState, tol: f64) -> Result<(RobustnessReport, Audit)> {
    let r = roe(s, tol)?;
    let d = Audit::of(&r, std::slice::from_ref(s.op()));
    Ok((r, d))
}

/// Seeded d⊗d state whose rank cycles through 1..=d².
pub fn seeded_state(d: usize, index: usize, seed: u64) -> Result<BipartiteState> {
    BipartiteState::new(random_state(vec![d, d], 1 + index % (d * d), seed)?)
}

const SEED_BASE: u64 = 1_000;

fn seed_of(suite: Suite, i: usize) -> u64 {
    SEED_BASE * (suite as u64 + 1) + i as u64
}

pub fn run_suite(suite: Suite, cfg: SuiteConfig) -> Result<SuiteReport> {
    if cfg.dims < 2 {
        return Err(Error::input(format!("dims must be at least 2, got {}", cfg.dims)));
    }
    crate::conic::check_tol(cfg.tol)?;
    let start = Instant::now();
    let cases = match suite {
        Suite::Result1 => result1_cases(cfg)?,
        Suite::Result2 => result2_cases(cfg),
        Suite::Result4 => result4_cases(cfg),
        Suite::Result6 => result6_cases(cfg)?,
        Suite::Result7 => result7_cases(cfg)?,
        Suite::Properties => property_cases(cfg),
    };
    let cases = run_cases(cases);
    Ok(SuiteReport { suite, config: cfg, cases, seconds: start.elapsed().as_secs_f64() })
}

fn result4_cases(cfg: SuiteConfig) -> Vec<(String, CaseFn)> {
    (0..cfg.seeds)
        .map(|i| {
            let seed = seed_of(Suite::Result4, i);
            let body: CaseFn = Box::new(move || {
                let s = seeded_state(cfg.dims, i, seed)?;
                let (b, d1) = robn_audited(&bell_bell(&s)?, cfg.tol)?;
                let (e, d2) = roe_audited(&s, cfg.tol)?;
                Ok(Outcome::new((b.value - e.value).abs(), EQUALITY_TOL, d1.max(d2)).with_instance(Document::State(s)))
            });
            (format!("seed {seed}: robn(Bell, Bell) = roe"), body)
        })
        .collect()
}

fn result2_cases(cfg: SuiteConfig) -> Vec<(String, CaseFn)> {
    (0..cfg.seeds)
        .map(|i| {
            let seed = seed_of(Suite::Result2, i);
            let body: CaseFn = Box::new(move || {
                let s = seeded_state(cfg.dims, i, seed)?;
                let bell = bell_measurement(cfg.dims);
                let t = teleportation_instrument(&bell, &s)?;
                let rt = rot(&t, cfg.tol)?;
                let (b, d1) = robn_audited(&build_distributed(&bell, &bell, &s)?, cfg.tol)?;
                let d = d1.max(Audit::of(&rt, t.elements()));
                Ok(Outcome::new((rt.value - b.value).abs(), EQUALITY_TOL, d).with_instance(Document::State(s)))
            });
            (format!("seed {seed}: rot(instrument) = robn(Bob = Bell)"), body)
        })
        .collect()
}

fn result1_case(m: DistributedMeasurement, expected: Option<f64>, threshold: f64, tol: f64) -> CaseFn {
    Box::new(move || {
        let r = verify_result1(&m, tol);
        let r = match r {
            Ok(r) => r,
            Err(Error::Check(msg)) => {
                return Ok(Outcome { residual: f64::INFINITY, threshold, audit: Audit::default(), counterexample: Some(json!({"error": msg})) }
                    .with_instance(Document::Measurement(m.clone())))
            }
            Err(e) => return Err(e),
        };
        let target = expected.unwrap_or(1.0 + r.robustness.value);
        let d = Audit::of(&r.robustness, m.elements());
        Ok(Outcome::new((r.scores.ratio - target).abs(), threshold, d).with_instance(Document::Measurement(m.clone())))
    })
}

fn result1_cases(cfg: SuiteConfig) -> Result<Vec<(String, CaseFn)>> {
    let tol = cfg.tol;
    let mut cases: Vec<(String, CaseFn)> = vec![(
        "Bell/Bell/phi+: ratio 2".into(),
        result1_case(bell_bell(&fixtures::phi_plus())?, Some(2.0), RATIO_TOL, tol),
    )];
    for p in fixtures::ISOTROPIC_FAMILY {
        let s = BipartiteState::isotropic(2, p)?;
        let m = bell_bell(&s)?;
        let body: CaseFn = Box::new(move || {
            let e = roe(&s, tol)?.value;
            let inner = result1_case(m.clone(), Some(1.0 + e), RATIO_TOL, tol);
            inner()
        });
        cases.push((format!("Bell/Bell/isotropic({p}): ratio 1 + roe"), body));
    }
    cases.push(("free fixture: ratio 1".into(), result1_case(fixtures::free_measurement()?, Some(1.0), FREE_RATIO_TOL, tol)));
    for i in 0..cfg.seeds.div_ceil(5) {
        let seed = seed_of(Suite::Result1, 500 + i);
        let m = PropertySubject::Measurement(bell_bell(&seeded_state(cfg.dims, i, seed)?)?).random_free(seed)?;
        let PropertySubject::Measurement(m) = m else { unreachable!() };
        cases.push((format!("seed {seed}: free construction, ratio 1"), result1_case(m, Some(1.0), FREE_RATIO_TOL, tol)));
    }
    for i in 0..cfg.seeds {
        let seed = seed_of(Suite::Result1, i);
        let s = seeded_state(cfg.dims, i, seed)?;
        cases.push((format!("seed {seed}: ratio 1 + r"), result1_case(bell_bell(&s)?, None, RATIO_TOL, tol)));
    }
    Ok(cases)
}

fn result6_cases(cfg: SuiteConfig) -> Result<Vec<(String, CaseFn)>> {
    let d = cfg.dims;
    let mut cases: Vec<(String, CaseFn)> = (0..cfg.seeds)
        .map(|i| {
            let seed = seed_of(Suite::Result6, i);
            let body: CaseFn = Box::new(move || {
                let s = seeded_state(d, i, seed)?;
                let m = bell_bell(&s)?;
                let o = m.outcomes();
                let sub = random_subroutine(o, o, (d, d), 2, seed + 1)?;
                let g = random_ensemble(o, (d, d), seed + 2)?;
                let rep = check_monotone(&m, &sub, std::slice::from_ref(&g))?;
                Ok(Outcome::new(rep.max_violation.max(0.0), MONOTONE_TOL, Audit::default()).with_instance(Document::Ensemble(g)))
            });
            (format!("seed {seed}: simulation does not raise the score"), body)
        })
        .collect();
    // Converse spot check: the certificate ensemble of Bell/Bell/φ₊ separates it
    // from any free measurement, whose score is capped by the classical value.
    let tol = cfg.tol;
    let body: CaseFn = Box::new(move || {
        let n = bell_bell(&fixtures::phi_plus())?;
        let free = fixtures::free_measurement()?;
        let (rep, dual) = robn_audited(&n, tol)?;
        let a = rep.dual_certificate.a_blocks();
        let g = optimal_dsd_ensemble(&a, n.outcomes(), tol)?;
        let quantum = dsd_quantum_score(&g, &n)?;
        let classical = dsd_classical_score(&g, tol)?;
        let free_score = dsd_quantum_score(&g, &free_on(&free, n.outcomes())?)?;
        let separation = quantum - classical;
        let witness = (certificate_weight(&a) * classical - 1.0).abs();
        let ok = separation > 0.5 / certificate_weight(&a) && free_score <= classical + MONOTONE_TOL;
        let mut out = Outcome::new(if ok { witness } else { f64::INFINITY }, RATIO_TOL, dual);
        out.counterexample = Some(json!({"ensemble": serde_json::to_value(EnsembleDto::from(&g)).expect("dto")}));
        Ok(out)
    });
    cases.push(("converse spot check: Bell/Bell/phi+ vs free fixture".into(), body));
    Ok(cases)
}

/// Pads a free measurement with never-firing outcomes up to `outcomes`.
fn free_on(m: &DistributedMeasurement, outcomes: (usize, usize)) -> Result<DistributedMeasurement> {
    let (oa, ob) = m.outcomes();
    let dims = m.elements()[0].dims().to_vec();
    let zero = crate::linalg::HermitianOperator::zeros(dims);
    let mut el = Vec::with_capacity(outcomes.0 * outcomes.1);
    for a in 0..outcomes.0 {
        for b in 0..outcomes.1 {
            el.push(if a < oa && b < ob { m.element(a, b).clone() } else { zero.clone() });
        }
    }
    DistributedMeasurement::new(outcomes.0, outcomes.1, el)
}

fn result7_case(m: DistributedMeasurement, free: bool, tol: f64) -> CaseFn {
    Box::new(move || {
        let doc = Document::Measurement(m.clone());
        let info = match min_accessible_info(&m, tol) {
            Ok(i) => i,
            Err(Error::Check(msg)) => {
                return Ok(Outcome { residual: f64::INFINITY, threshold: INFO_TOL, audit: Audit::default(), counterexample: Some(json!({"error": msg})) }
                    .with_instance(doc))
            }
            Err(e) => return Err(e),
        };
        let mut residual = (info.witness_bits - info.bits).abs();
        if free {
            residual = residual.max(info.bits);
        }
        Ok(Outcome::new(residual, INFO_TOL, Audit::of(&info.robustness, m.elements())).with_instance(doc))
    })
}

fn result7_cases(cfg: SuiteConfig) -> Result<Vec<(String, CaseFn)>> {
    let tol = cfg.tol;
    let mut cases: Vec<(String, CaseFn)> = Vec::new();
    let phi = bell_bell(&fixtures::phi_plus())?;
    cases.push((
        "Bell/Bell/phi+: 1 bit".into(),
        Box::new(move || {
            let info = min_accessible_info(&phi, tol)?;
            let residual = (info.bits - 1.0).abs().max((info.witness_bits - info.bits).abs());
            Ok(Outcome::new(residual, INFO_TOL, Audit::of(&info.robustness, phi.elements())))
        }),
    ));
    for p in fixtures::ISOTROPIC_FAMILY {
        cases.push((format!("Bell/Bell/isotropic({p}): witness"), result7_case(bell_bell(&BipartiteState::isotropic(2, p)?)?, false, tol)));
    }
    cases.push(("free fixture: no information".into(), result7_case(fixtures::free_measurement()?, true, tol)));
    for i in 0..cfg.seeds {
        let seed = seed_of(Suite::Result7, i);
        let s = seeded_state(cfg.dims, i, seed)?;
        cases.push((format!("seed {seed}: witness attains log2(1 + r)"), result7_case(bell_bell(&s)?, false, tol)));
    }
    Ok(cases)
}

fn property_outcome(checks: Vec<PropertyCheck>) -> Outcome {
    let excess = checks.iter().map(PropertyCheck::excess).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let audit = checks.iter().fold(Audit::default(), |a, c| a.max(c.audit));
    let counterexample = checks.iter().find(|c| !c.passed).and_then(|c| c.counterexample.clone());
    Outcome { residual: excess, threshold: crate::robustness::PROPERTY_TOL, audit, counterexample }
}

/// `seeds` monotonicity checks, 2·seeds/5 convexity pairs and seeds/5
/// faithfulness checks (rounded up), on Bell/Bell measurements of seeded
/// d⊗d states.
fn property_cases(cfg: SuiteConfig) -> Vec<(String, CaseFn)> {
    let d = cfg.dims;
    let tol = cfg.tol;
    let subject = move |i: usize, seed: u64| -> Result<PropertySubject> {
        Ok(PropertySubject::Measurement(bell_bell(&seeded_state(d, i, seed)?)?))
    };
    let mut cases: Vec<(String, CaseFn)> = Vec::new();
    for i in 0..cfg.seeds {
        let seed = seed_of(Suite::Properties, i);
        cases.push((
            format!("seed {seed}: monotonicity"),
            Box::new(move || Ok(property_outcome(vec![check_monotonicity(&subject(i, seed)?, seed, tol)?]))),
        ));
    }
    for i in 0..(2 * cfg.seeds).div_ceil(5) {
        let seed = seed_of(Suite::Properties, 500 + i);
        cases.push((
            format!("seed {seed}: convexity grid"),
            Box::new(move || Ok(property_outcome(check_convexity(&subject(i, seed)?, seed, tol)?))),
        ));
    }
    for i in 0..cfg.seeds.div_ceil(5) {
        let seed = seed_of(Suite::Properties, 900 + i);
        cases.push((
            format!("seed {seed}: faithfulness"),
            Box::new(move || Ok(property_outcome(vec![check_faithfulness(&subject(i, seed)?, seed, tol)?]))),
        ));
    }
    cases
}
