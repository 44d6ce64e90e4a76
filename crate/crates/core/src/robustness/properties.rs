//! Randomized checks of faithfulness, convexity and monotonicity under free
//! operations for all three quantifiers.

use rayon::prelude::*;

use super::{robn, roe, rot, RobustnessReport};
use crate::error::Result;
use crate::io::Document;
use crate::linalg::{kron_mat, CMat, HermitianOperator};
use crate::qobj::{
    build_distributed, build_free_distributed, random_channel, random_povm, random_separable, random_state,
    random_stochastic_matrix, random_subroutine, simulate, BipartiteState, DistributedMeasurement,
    TeleportationInstrument, teleportation_instrument,
};

pub const PROPERTY_TOL: f64 = 1e-6;
pub const CONVEXITY_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Shared-resource dimension used for random partners and free instances.
const ANCILLA: usize = 2;

#[derive(Clone, Debug)]
pub enum PropertySubject {
    Measurement(DistributedMeasurement),
    Instrument(TeleportationInstrument),
    State(BipartiteState),
}

impl PropertySubject {
    pub fn report(&self, tol: f64) -> Result<RobustnessReport> {
        match self {
            PropertySubject::Measurement(m) => robn(m, tol),
            PropertySubject::Instrument(t) => rot(t, tol),
            PropertySubject::State(s) => roe(s, tol),
        }
    }

    pub fn value(&self, tol: f64) -> Result<f64> {
        Ok(self.report(tol)?.value)
    }

    /// Value plus its duality audit.
    fn audited(&self, tol: f64) -> Result<(f64, Audit)> {
        let r = self.report(tol)?;
        let blocks = match self {
            PropertySubject::Measurement(m) => m.elements().to_vec(),
            PropertySubject::Instrument(t) => t.elements().to_vec(),
            PropertySubject::State(s) => vec![s.op().clone()],
        };
        Ok((r.value, Audit::of(&r, &blocks)))
    }

    pub fn document(&self) -> Document {
        match self {
            PropertySubject::Measurement(m) => Document::Measurement(m.clone()),
            PropertySubject::Instrument(t) => Document::Instrument(t.clone()),
            PropertySubject::State(s) => Document::State(s.clone()),
        }
    }

    /// A free object of the same shape.
    pub fn random_free(&self, seed: u64) -> Result<PropertySubject> {
        Ok(match self {
            PropertySubject::Measurement(m) => {
                let (oa, ob) = m.outcomes();
                let (da, db) = m.dims();
                let ma = random_povm(vec![da, ANCILLA], oa, seed)?;
                let mb = random_povm(vec![ANCILLA, db], ob, seed + 1)?;
                let sep = random_separable(ANCILLA, ANCILLA, 3, seed + 2)?;
                PropertySubject::Measurement(build_free_distributed(&ma, &mb, &sep)?)
            }
            PropertySubject::Instrument(t) => {
                let (dv, dbp) = t.dims();
                let ma = random_povm(vec![dv, ANCILLA], t.outcomes(), seed)?;
                let sep = random_separable(ANCILLA, dbp, 3, seed + 1)?.to_state();
                PropertySubject::Instrument(teleportation_instrument(&ma, &sep)?)
            }
            PropertySubject::State(s) => {
                let (da, db) = s.dims();
                PropertySubject::State(random_separable(da, db, 4, seed)?.to_state())
            }
        })
    }

    /// A generic, typically resourceful object of the same shape.
    pub fn random_partner(&self, seed: u64) -> Result<PropertySubject> {
        Ok(match self {
            PropertySubject::Measurement(m) => {
                let (oa, ob) = m.outcomes();
                let (da, db) = m.dims();
                let ma = random_povm(vec![da, ANCILLA], oa, seed)?;
                let mb = random_povm(vec![ANCILLA, db], ob, seed + 1)?;
                let rho = BipartiteState::new(random_state(vec![ANCILLA, ANCILLA], 2, seed + 2)?)?;
                PropertySubject::Measurement(build_distributed(&ma, &mb, &rho)?)
            }
            PropertySubject::Instrument(t) => {
                let (dv, dbp) = t.dims();
                let ma = random_povm(vec![dv, ANCILLA], t.outcomes(), seed)?;
                let rho = BipartiteState::new(random_state(vec![ANCILLA, dbp], 2, seed + 1)?)?;
                PropertySubject::Instrument(teleportation_instrument(&ma, &rho)?)
            }
            PropertySubject::State(s) => {
                let (da, db) = s.dims();
                PropertySubject::State(BipartiteState::new(random_state(vec![da, db], 2, seed)?)?)
            }
        })
    }

    /// p·self + (1 − p)·other.
    pub fn mix(&self, p: f64, other: &PropertySubject) -> Result<PropertySubject> {
        let blend = |x: &[HermitianOperator], y: &[HermitianOperator]| -> Vec<HermitianOperator> {
            x.iter().zip(y).map(|(a, b)| a.scale(p).add(&b.scale(1.0 - p))).collect()
        };
        Ok(match (self, other) {
            (PropertySubject::Measurement(a), PropertySubject::Measurement(b)) => {
                PropertySubject::Measurement(a.mix(p, b)?)
            }
            (PropertySubject::Instrument(a), PropertySubject::Instrument(b)) => {
                PropertySubject::Instrument(TeleportationInstrument::new(blend(a.elements(), b.elements()))?)
            }
            (PropertySubject::State(a), PropertySubject::State(b)) => PropertySubject::State(BipartiteState::new(
                a.op().scale(p).add(&b.op().scale(1.0 - p)),
            )?),
            _ => return Err(crate::error::Error::input("cannot mix objects of different kinds")),
        })
    }

    /// Image under a random free operation: a random simulation subroutine
    /// for measurements, outcome coarse-graining followed by a channel on
    /// the output for instruments, local channels for states.
    pub fn random_free_image(&self, seed: u64) -> Result<PropertySubject> {
        Ok(match self {
            PropertySubject::Measurement(m) => {
                let s = random_subroutine(m.outcomes(), m.outcomes(), m.dims(), 2, seed)?;
                PropertySubject::Measurement(simulate(m, &s)?)
            }
            PropertySubject::Instrument(t) => {
                let (dv, dbp) = t.dims();
                let o = t.outcomes();
                let post = random_stochastic_matrix(o, o, seed);
                let lift: Vec<CMat> =
                    random_channel(dbp, seed + 1)?.kraus().iter().map(|k| kron_mat(&CMat::identity(dv, dv), k)).collect();
                let mut out = Vec::with_capacity(o);
                for new in 0..o {
                    let mut acc = HermitianOperator::zeros(vec![dv, dbp]);
                    for (old, j) in t.elements().iter().enumerate() {
                        for k in &lift {
                            acc.add_scaled(post[(new, old)], &j.conjugate_by(k, vec![dv, dbp])?);
                        }
                    }
                    out.push(acc);
                }
                PropertySubject::Instrument(TeleportationInstrument::new(out)?)
            }
            PropertySubject::State(s) => {
                let (da, db) = s.dims();
                let ka = random_channel(da, seed)?.kraus();
                let kb = random_channel(db, seed + 1)?.kraus();
                let mut acc = HermitianOperator::zeros(vec![da, db]);
                for a in &ka {
                    for b in &kb {
                        acc.add_scaled(1.0, &s.op().conjugate_by(&kron_mat(a, b), vec![da, db])?);
                    }
                }
                PropertySubject::State(BipartiteState::new(acc)?)
            }
        })
    }
}

/// |primal − dual| and |Σ tr[A X] − 1 − value| of a solved program.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Audit {
    pub gap: f64,
    pub certificate: f64,
}

impl Audit {
    pub fn of(r: &RobustnessReport, blocks: &[HermitianOperator]) -> Self {
        Audit { gap: r.duality_gap(), certificate: r.certificate_residual(blocks) }
    }

    pub fn max(self, o: Audit) -> Audit {
        Audit { gap: self.gap.max(o.gap), certificate: self.certificate.max(o.certificate) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropertyKind {
    Faithfulness,
    Convexity,
    Monotonicity,
}

impl PropertyKind {
    pub fn name(self) -> &'static str {
        match self {
            PropertyKind::Faithfulness => "faithfulness",
            PropertyKind::Convexity => "convexity",
            PropertyKind::Monotonicity => "monotonicity",
        }
    }
}

/// One inequality `lhs ≤ rhs + PROPERTY_TOL`.
#[derive(Clone, Debug)]
pub struct PropertyCheck {
    pub kind: PropertyKind,
    pub seed: u64,
    /// Mixing weight for convexity checks.
    pub p: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
    /// Worst duality audit among the programs solved.
    pub audit: Audit,
    /// Instances involved, present only on failure.
    pub counterexample: Option<serde_json::Value>,
}

impl PropertyCheck {
    pub(crate) fn new(kind: PropertyKind, seed: u64, p: Option<f64>, lhs: f64, rhs: f64, instances: &[&PropertySubject]) -> Self {
        let passed = lhs <= rhs + PROPERTY_TOL;
        let counterexample = (!passed).then(|| {
            serde_json::Value::Array(
                instances
                    .iter()
                    .map(|s| {
                        let d = s.document();
                        serde_json::json!({"kind": d.kind(), "payload": d.payload()})
                    })
                    .collect(),
            )
        });
        PropertyCheck { kind, seed, p, lhs, rhs, passed, audit: Audit::default(), counterexample }
    }

    fn audited(mut self, audit: Audit) -> Self {
        self.audit = audit;
        self
    }

    pub fn excess(&self) -> f64 {
        self.lhs - self.rhs
    }
}

#[derive(Clone, Debug, Default)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn count(&self, kind: PropertyKind) -> usize {
        self.checks.iter().filter(|c| c.kind == kind).count()
    }

    pub fn audit(&self) -> Audit {
        self.checks.iter().fold(Audit::default(), |a, c| a.max(c.audit))
    }

    pub fn max_excess(&self) -> f64 {
        self.checks.iter().map(PropertyCheck::excess).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A random free object of the subject's shape has value 0.
pub fn check_faithfulness(subject: &PropertySubject, seed: u64, tol: f64) -> Result<PropertyCheck> {
    let free = subject.random_free(seed)?;
    let (v, d) = free.audited(tol)?;
    Ok(PropertyCheck::new(PropertyKind::Faithfulness, seed, None, v, 0.0, &[&free]).audited(d))
}

/// R(p·S + (1 − p)·T) ≤ p·R(S) + (1 − p)·R(T) over the grid, T random.
pub fn check_convexity(subject: &PropertySubject, seed: u64, tol: f64) -> Result<Vec<PropertyCheck>> {
    let partner = subject.random_partner(seed)?;
    let ((r1, d1), (r2, d2)) = (subject.audited(tol)?, partner.audited(tol)?);
    CONVEXITY_GRID
        .iter()
        .map(|&p| {
            let (lhs, d) = if p == 0.0 {
                (r2, d2)
            } else if p == 1.0 {
                (r1, d1)
            } else {
                subject.mix(p, &partner)?.audited(tol)?
            };
            let rhs = p * r1 + (1.0 - p) * r2;
            Ok(PropertyCheck::new(PropertyKind::Convexity, seed, Some(p), lhs, rhs, &[subject, &partner])
                .audited(d.max(d1).max(d2)))
        })
        .collect()
}

/// R(image under a random free operation) ≤ R(subject).
pub fn check_monotonicity(subject: &PropertySubject, seed: u64, tol: f64) -> Result<PropertyCheck> {
    let image = subject.random_free_image(seed)?;
    let (r, d1) = subject.audited(tol)?;
    let (v, d2) = image.audited(tol)?;
    Ok(PropertyCheck::new(PropertyKind::Monotonicity, seed, None, v, r, &[subject, &image]).audited(d1.max(d2)))
}

/// All three properties per seed, seeds evaluated in parallel.
pub fn property_suite(subject: &PropertySubject, seeds: &[u64], tol: f64) -> Result<PropertyReport> {
    let per_seed: Vec<Vec<PropertyCheck>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut v = vec![check_faithfulness(subject, seed, tol)?];
            v.extend(check_convexity(subject, seed, tol)?);
            v.push(check_monotonicity(subject, seed, tol)?);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    Ok(PropertyReport { checks: per_seed.into_iter().flatten().collect() })
}
