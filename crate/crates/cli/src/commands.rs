use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use nonlocality_forge::conic::{check_tol, ConeProgram};
use nonlocality_forge::error::Error;
use nonlocality_forge::games::{bell_bell, certificate_weight, dsd_scores, optimal_dsd_ensemble, RATIO_TOL};
use nonlocality_forge::io::{robustness_report_json, score_report_json, write_document, Document};
use nonlocality_forge::qobj::{build_distributed, BipartiteState, DistributedMeasurement, TeleportationInstrument};
use nonlocality_forge::robustness::{self as quant, robn_of_state, robn_program, roe_program, rot_program, RobustnessReport, RELAXATION};
use nonlocality_forge::suites::{run_suite, Suite, SuiteConfig};
use nonlocality_forge::{fixtures as bundled, VERSION};

use crate::output::{emit, read, write_atomic, Failure};
use crate::SolveFlags;

/// |RoBN − RoE| under which `robn-state` flags the two as equal.
const EQUALITY_TOL: f64 = 1e-5;

pub enum MeasurementSource {
    File(PathBuf),
    Parts { alice: PathBuf, bob: PathBuf, state: PathBuf },
}

fn wrong_kind(path: &Path, want: &str, got: &Document) -> Failure {
    Failure::Input(format!("{}: expected a {want} document, found {:?}", path.display(), got.kind()))
}

fn load_measurement(path: &Path) -> Result<DistributedMeasurement, Failure> {
    match read(path)? {
        Document::Measurement(m) => Ok(m),
        other => Err(wrong_kind(path, "distributed_measurement", &other)),
    }
}

fn load_state(path: &Path) -> Result<BipartiteState, Failure> {
    match read(path)? {
        Document::State(s) => Ok(s),
        other => Err(wrong_kind(path, "state", &other)),
    }
}

fn load_instrument(path: &Path) -> Result<TeleportationInstrument, Failure> {
    match read(path)? {
        Document::Instrument(t) => Ok(t),
        other => Err(wrong_kind(path, "instrument", &other)),
    }
}

impl MeasurementSource {
    fn load(&self) -> Result<DistributedMeasurement, Failure> {
        match self {
            MeasurementSource::File(p) => load_measurement(p),
            MeasurementSource::Parts { alice, bob, state } => {
                let povm = |p: &Path| match read(p)? {
                    Document::Povm(m) => Ok(m),
                    other => Err(wrong_kind(p, "povm", &other)),
                };
                Ok(build_distributed(&povm(alice)?, &povm(bob)?, &load_state(state)?)?)
            }
        }
    }
}

fn stamp(v: &mut Value, command: &str, start: Instant) {
    v["command"] = json!(command);
    v["seconds"] = json!(start.elapsed().as_secs_f64());
    v["library_version"] = json!(VERSION);
}

fn dump(flags: &SolveFlags, program: impl FnOnce() -> nonlocality_forge::error::Result<ConeProgram>) -> Result<(), Failure> {
    check_tol(flags.tol)?;
    if let Some(path) = &flags.dump_program {
        write_atomic(path, &write_document(&Document::Report(program()?.dump())))?;
    }
    Ok(())
}

/// Writes the report of a solve. Solver and check failures still produce a
/// report carrying the status, then exit 1.
fn finish(
    command: &str,
    quantifier: &str,
    flags: &SolveFlags,
    start: Instant,
    outcome: nonlocality_forge::error::Result<RobustnessReport>,
    extra: impl FnOnce(&RobustnessReport, &mut Value) -> Option<String>,
) -> Result<(), Failure> {
    let (mut v, failure) = match outcome {
        Ok(r) => {
            let mut v = robustness_report_json(&r);
            v["status"] = json!("OPTIMAL");
            let failure = extra(&r, &mut v);
            (v, failure)
        }
        Err(e) if e.is_input() => return Err(e.into()),
        Err(e) => {
            let status = match &e {
                Error::Solver { status, .. } => status.clone(),
                _ => "CHECK_FAILED".to_string(),
            };
            let v = json!({
                "quantifier": quantifier,
                "status": status,
                "error": e.to_string(),
                "tol": flags.tol,
                "relaxation": RELAXATION,
            });
            (v, Some(e.to_string()))
        }
    };
    stamp(&mut v, command, start);
    emit(flags.out.as_deref(), &Document::Report(v))?;
    match failure {
        Some(msg) => Err(Failure::Computation(msg)),
        None => Ok(()),
    }
}

pub fn robn(source: &MeasurementSource, flags: &SolveFlags) -> Result<(), Failure> {
    let start = Instant::now();
    let m = source.load()?;
    dump(flags, || Ok(robn_program(&m)?.program))?;
    finish("robn", "RoBN", flags, start, quant::robn(&m, flags.tol), |_, _| None)
}

pub fn roe(path: &Path, flags: &SolveFlags) -> Result<(), Failure> {
    let start = Instant::now();
    let rho = load_state(path)?;
    dump(flags, || Ok(roe_program(&rho)?.program))?;
    finish("roe", "RoE", flags, start, quant::roe(&rho, flags.tol), |_, _| None)
}

pub fn rot(path: &Path, flags: &SolveFlags) -> Result<(), Failure> {
    let start = Instant::now();
    let t = load_instrument(path)?;
    dump(flags, || Ok(rot_program(&t)?.program))?;
    finish("rot", "RoT", flags, start, quant::rot(&t, flags.tol), |_, _| None)
}

pub fn robn_state(path: &Path, seesaw_rounds: usize, flags: &SolveFlags) -> Result<(), Failure> {
    let start = Instant::now();
    let rho = load_state(path)?;
    dump(flags, || Ok(robn_program(&bell_bell(&rho)?)?.program))?;
    let outcome = robn_of_state(&rho, flags.tol, seesaw_rounds);
    finish("robn-state", "RoBN", flags, start, outcome, |r, v| {
        let e = r.roe_value?;
        v["equal"] = json!((r.value - e).abs() <= EQUALITY_TOL);
        v["equality_tol"] = json!(EQUALITY_TOL);
        None
    })
}

pub fn game(path: &Path, emit_ensemble: Option<&Path>, scores: bool, flags: &SolveFlags) -> Result<(), Failure> {
    let start = Instant::now();
    let m = load_measurement(path)?;
    dump(flags, || Ok(robn_program(&m)?.program))?;
    let report = match quant::robn(&m, flags.tol) {
        Ok(r) => r,
        Err(e) => return finish("game", "RoBN", flags, start, Err(e), |_, _| None),
    };
    let a = report.dual_certificate.a_blocks();
    let ensemble = optimal_dsd_ensemble(&a, m.outcomes(), flags.tol)?;
    if let Some(p) = emit_ensemble {
        write_atomic(p, &write_document(&Document::Ensemble(ensemble.clone())))?;
    }
    let mut v = json!({
        "robustness": report.value,
        "certificate_weight": certificate_weight(&a),
        "ensemble_shape": [ensemble.shape().0, ensemble.shape().1],
        "tol": flags.tol,
        "relaxation": RELAXATION,
    });
    let mut failure = None;
    if scores {
        match dsd_scores(&ensemble, &m, flags.tol) {
            Ok(mut s) => {
                s.robustness = Some(report.value);
                let deviation = (s.ratio - 1.0 - report.value).abs();
                v["scores"] = score_report_json(&s);
                v["ratio_deviation"] = json!(deviation);
                v["ratio_matches_robustness"] = json!(deviation <= RATIO_TOL);
                if deviation > RATIO_TOL {
                    failure = Some(format!("ratio {} differs from 1 + r = {}", s.ratio, 1.0 + report.value));
                }
            }
            Err(e) if e.is_input() => return Err(e.into()),
            Err(e) => {
                v["scores_error"] = json!(e.to_string());
                failure = Some(e.to_string());
            }
        }
    }
    v["certificate"] = robustness_report_json(&report);
    stamp(&mut v, "game", start);
    emit(flags.out.as_deref(), &Document::Report(v))?;
    failure.map_or(Ok(()), |m| Err(Failure::Computation(m)))
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn verify(suite: Suite, seeds: usize, dims: usize, tol: f64, out: Option<&Path>, cx_dir: &Path) -> Result<(), Failure> {
    let start = Instant::now();
    let rep = run_suite(suite, SuiteConfig { seeds, dims, tol })?;
    let mut files = Vec::new();
    for case in rep.failures() {
        let path = cx_dir.join(format!("{}_{}.json", suite.name(), file_stem(&case.name)));
        let mut v = case.to_json();
        v["suite"] = json!(suite.name());
        v["counterexample"] = case.counterexample.clone().unwrap_or(Value::Null);
        write_atomic(&path, &write_document(&Document::Report(v)))?;
        files.push(path.display().to_string());
    }
    let mut v = rep.to_json();
    v["counterexample_files"] = json!(files);
    stamp(&mut v, "verify", start);
    emit(out, &Document::Report(v))?;
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure::Computation(format!(
            "{} of {} cases failed; counterexamples in {}",
            rep.cases.len() - rep.pass_count(),
            rep.cases.len(),
            cx_dir.display()
        )))
    }
}

pub fn fixtures(dir: &Path) -> Result<(), Failure> {
    for (name, doc) in bundled::all()? {
        let path = dir.join(name);
        write_atomic(&path, &write_document(&doc))?;
        println!("{}", path.display());
    }
    Ok(())
}
