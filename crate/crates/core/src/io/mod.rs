//! JSON document format shared by the library and the command line.
//!
//! Every document is an envelope `{schema_version, kind, payload}`. Complex
//! matrices are nested row arrays of `[re, im]` pairs with explicit dims, and
//! probability tables are row-major arrays with a declared shape.

mod format;

pub use format::{to_string, FixedPrecision};

use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::games::{ScoreReport, StateEnsemble};
use crate::linalg::{CMat, HermitianOperator, LinearMapOnOperators, C64};
use crate::qobj::{
    BipartiteState, DistributedMeasurement, MeasurementProvenance, Povm, SimulationSubroutine, TeleportationInstrument,
};
use crate::robustness::{DualCertificate, PrimalWitness, RobustnessReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDto {
    pub dims: Vec<usize>,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl From<&HermitianOperator> for OperatorDto {
    fn from(x: &HermitianOperator) -> Self {
        OperatorDto { dims: x.dims().to_vec(), entries: matrix_rows(x.matrix()) }
    }
}

pub(crate) fn matrix_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<[f64; 2]>], field: &str) -> Result<CMat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::input(format!("{field}: ragged matrix rows")));
    }
    Ok(CMat::from_fn(r, c, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

impl OperatorDto {
    pub fn to_operator(&self, field: &str) -> Result<HermitianOperator> {
        let m = matrix_from_rows(&self.entries, field)?;
        HermitianOperator::new(self.dims.clone(), m).map_err(|e| Error::input(format!("{field}: {e}")))
    }
}

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    State,
    Povm,
    DistributedMeasurement,
    Instrument,
    Ensemble,
    Subroutine,
    Report,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    schema_version: String,
    kind: Kind,
    payload: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDto {
    pub operator: OperatorDto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmDto {
    pub elements: Vec<OperatorDto>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceDto {
    pub alice: PovmDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob: Option<PovmDto>,
    pub state: StateDto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementDto {
    /// [o_A, o_B]
    pub outcomes: [usize; 2],
    /// Row-major in (a, b).
    pub elements: Vec<OperatorDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceDto>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentDto {
    pub elements: Vec<OperatorDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceDto>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleDto {
    /// [|X|, |Y|]
    pub shape: [usize; 2],
    pub probabilities: Vec<f64>,
    pub states: Vec<OperatorDto>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDto {
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDto {
    pub input_dims: Vec<usize>,
    pub output_dims: Vec<usize>,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubroutineDto {
    pub weights: Vec<f64>,
    pub post_a: Vec<TableDto>,
    pub post_b: Vec<TableDto>,
    pub pre_a: Vec<ChannelDto>,
    pub pre_b: Vec<ChannelDto>,
}

fn operators(list: &[OperatorDto], field: &str) -> Result<Vec<HermitianOperator>> {
    list.iter().enumerate().map(|(k, o)| o.to_operator(&format!("{field}[{k}]"))).collect()
}

fn dtos(list: &[HermitianOperator]) -> Vec<OperatorDto> {
    list.iter().map(OperatorDto::from).collect()
}

impl From<&BipartiteState> for StateDto {
    fn from(s: &BipartiteState) -> Self {
        StateDto { operator: s.op().into() }
    }
}

impl StateDto {
    pub fn to_state(&self) -> Result<BipartiteState> {
        BipartiteState::new(self.operator.to_operator("payload.operator")?)
    }
}

impl From<&Povm> for PovmDto {
    fn from(p: &Povm) -> Self {
        PovmDto { elements: dtos(p.elements()) }
    }
}

impl PovmDto {
    pub fn to_povm(&self) -> Result<Povm> {
        Povm::new(operators(&self.elements, "elements")?)
    }
}

impl From<&DistributedMeasurement> for MeasurementDto {
    fn from(m: &DistributedMeasurement) -> Self {
        let (oa, ob) = m.outcomes();
        MeasurementDto {
            outcomes: [oa, ob],
            elements: dtos(m.elements()),
            provenance: m.provenance().map(|p| ProvenanceDto {
                alice: (&p.alice).into(),
                bob: Some((&p.bob).into()),
                state: (&p.state).into(),
            }),
        }
    }
}

impl MeasurementDto {
    pub fn to_measurement(&self) -> Result<DistributedMeasurement> {
        let m = DistributedMeasurement::new(self.outcomes[0], self.outcomes[1], operators(&self.elements, "elements")?)?;
        match &self.provenance {
            None => Ok(m),
            Some(p) => {
                let bob = p.bob.as_ref().ok_or_else(|| Error::input("provenance.bob: missing"))?;
                Ok(m.with_provenance(MeasurementProvenance {
                    alice: p.alice.to_povm()?,
                    bob: bob.to_povm()?,
                    state: p.state.to_state()?,
                }))
            }
        }
    }
}

impl From<&TeleportationInstrument> for InstrumentDto {
    fn from(t: &TeleportationInstrument) -> Self {
        InstrumentDto {
            elements: dtos(t.elements()),
            provenance: t.provenance().map(|(a, s)| ProvenanceDto { alice: a.into(), bob: None, state: s.into() }),
        }
    }
}

impl InstrumentDto {
    pub fn to_instrument(&self) -> Result<TeleportationInstrument> {
        let t = TeleportationInstrument::new(operators(&self.elements, "elements")?)?;
        match &self.provenance {
            None => Ok(t),
            Some(p) => Ok(t.with_provenance(p.alice.to_povm()?, p.state.to_state()?)),
        }
    }
}

impl From<&StateEnsemble> for EnsembleDto {
    fn from(g: &StateEnsemble) -> Self {
        let (nx, ny) = g.shape();
        EnsembleDto { shape: [nx, ny], probabilities: g.probs().to_vec(), states: dtos(g.states()) }
    }
}

impl EnsembleDto {
    pub fn to_ensemble(&self) -> Result<StateEnsemble> {
        StateEnsemble::new((self.shape[0], self.shape[1]), self.probabilities.clone(), operators(&self.states, "states")?)
    }
}

fn table_dto(m: &DMatrix<f64>) -> TableDto {
    TableDto { shape: [m.nrows(), m.ncols()], values: (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect() }
}

fn table(t: &TableDto, field: &str) -> Result<DMatrix<f64>> {
    let [r, c] = t.shape;
    if t.values.len() != r * c {
        return Err(Error::input(format!("{field}: {} values for shape [{r}, {c}]", t.values.len())));
    }
    Ok(DMatrix::from_row_slice(r, c, &t.values))
}

fn channel_dto(c: &LinearMapOnOperators) -> ChannelDto {
    ChannelDto {
        input_dims: c.input_dims().to_vec(),
        output_dims: c.output_dims().to_vec(),
        kraus: c.kraus().iter().map(matrix_rows).collect(),
    }
}

fn channel(c: &ChannelDto, field: &str) -> Result<LinearMapOnOperators> {
    let kraus = c
        .kraus
        .iter()
        .enumerate()
        .map(|(k, rows)| matrix_from_rows(rows, &format!("{field}.kraus[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    LinearMapOnOperators::from_kraus(kraus, c.input_dims.clone(), c.output_dims.clone())
        .map_err(|e| Error::input(format!("{field}: {e}")))
}

impl From<&SimulationSubroutine> for SubroutineDto {
    fn from(s: &SimulationSubroutine) -> Self {
        SubroutineDto {
            weights: s.weights().to_vec(),
            post_a: s.post_a().iter().map(table_dto).collect(),
            post_b: s.post_b().iter().map(table_dto).collect(),
            pre_a: s.pre_a().iter().map(channel_dto).collect(),
            pre_b: s.pre_b().iter().map(channel_dto).collect(),
        }
    }
}

impl SubroutineDto {
    pub fn to_subroutine(&self) -> Result<SimulationSubroutine> {
        let tables = |list: &[TableDto], f: &str| -> Result<Vec<_>> {
            list.iter().enumerate().map(|(k, t)| table(t, &format!("{f}[{k}]"))).collect()
        };
        let channels = |list: &[ChannelDto], f: &str| -> Result<Vec<_>> {
            list.iter().enumerate().map(|(k, c)| channel(c, &format!("{f}[{k}]"))).collect()
        };
        SimulationSubroutine::new(
            self.weights.clone(),
            tables(&self.post_a, "post_a")?,
            tables(&self.post_b, "post_b")?,
            channels(&self.pre_a, "pre_a")?,
            channels(&self.pre_b, "pre_b")?,
        )
    }
}

/// A parsed document of any kind.
#[derive(Clone, Debug)]
pub enum Document {
    State(BipartiteState),
    Povm(Povm),
    Measurement(DistributedMeasurement),
    Instrument(TeleportationInstrument),
    Ensemble(StateEnsemble),
    Subroutine(SimulationSubroutine),
    Report(serde_json::Value),
}

impl Document {
    pub fn kind(&self) -> Kind {
        match self {
            Document::State(_) => Kind::State,
            Document::Povm(_) => Kind::Povm,
            Document::Measurement(_) => Kind::DistributedMeasurement,
            Document::Instrument(_) => Kind::Instrument,
            Document::Ensemble(_) => Kind::Ensemble,
            Document::Subroutine(_) => Kind::Subroutine,
            Document::Report(_) => Kind::Report,
        }
    }

    pub fn payload(&self) -> serde_json::Value {
        let v = match self {
            Document::State(s) => serde_json::to_value(StateDto::from(s)),
            Document::Povm(p) => serde_json::to_value(PovmDto::from(p)),
            Document::Measurement(m) => serde_json::to_value(MeasurementDto::from(m)),
            Document::Instrument(t) => serde_json::to_value(InstrumentDto::from(t)),
            Document::Ensemble(g) => serde_json::to_value(EnsembleDto::from(g)),
            Document::Subroutine(s) => serde_json::to_value(SubroutineDto::from(s)),
            Document::Report(r) => Ok(r.clone()),
        };
        v.expect("DTOs serialize")
    }
}

/// Pretty JSON with 17 significant digits per float.
pub fn write_document(doc: &Document) -> String {
    to_string(&Envelope { schema_version: SCHEMA_VERSION.to_string(), kind: doc.kind(), payload: doc.payload() })
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::input(format!("line {} column {}, field `{}`: {inner}", inner.line(), inner.column(), e.path()))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema_version: String,
    kind: Kind,
    #[allow(dead_code)]
    payload: serde::de::IgnoredAny,
}

fn payload<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    Ok(parse::<Envelope<T>>(text)?.payload)
}

/// Parses and validates a document. Errors name the line and field.
pub fn read_document(text: &str) -> Result<Document> {
    let head: Header = parse(text)?;
    if head.schema_version != SCHEMA_VERSION {
        return Err(Error::input(format!("field `schema_version`: unsupported version {:?}", head.schema_version)));
    }
    let ctx = |e: Error| match e {
        Error::Input(m) => Error::input(format!("payload: {m}")),
        other => other,
    };
    let doc = match head.kind {
        Kind::State => Document::State(payload::<StateDto>(text)?.to_state().map_err(ctx)?),
        Kind::Povm => Document::Povm(payload::<PovmDto>(text)?.to_povm().map_err(ctx)?),
        Kind::DistributedMeasurement => Document::Measurement(payload::<MeasurementDto>(text)?.to_measurement().map_err(ctx)?),
        Kind::Instrument => Document::Instrument(payload::<InstrumentDto>(text)?.to_instrument().map_err(ctx)?),
        Kind::Ensemble => Document::Ensemble(payload::<EnsembleDto>(text)?.to_ensemble().map_err(ctx)?),
        Kind::Subroutine => Document::Subroutine(payload::<SubroutineDto>(text)?.to_subroutine().map_err(ctx)?),
        Kind::Report => Document::Report(payload::<serde_json::Value>(text)?),
    };
    Ok(doc)
}

/// JSON view of a robustness report, certificate included.
pub fn robustness_report_json(r: &RobustnessReport) -> serde_json::Value {
    use serde_json::json;
    let ops = |l: &[HermitianOperator]| serde_json::to_value(dtos(l)).expect("serializes");
    let op = |o: &HermitianOperator| serde_json::to_value(OperatorDto::from(o)).expect("serializes");
    let primal = match &r.primal_witness {
        PrimalWitness::Robn { o, n } => json!({"o_tilde": ops(o), "n_tilde": ops(n)}),
        PrimalWitness::Rot { f, sigma } => json!({"f": ops(f), "sigma_tilde": op(sigma)}),
        PrimalWitness::Roe { sigma } => json!({"sigma_tilde": op(sigma)}),
    };
    let dual = match &r.dual_certificate {
        DualCertificate::Robn { a, b, c, d, e, f } => {
            json!({"a": ops(a), "b": ops(b), "c": ops(c), "d": op(d), "e": op(e), "f": ops(f)})
        }
        DualCertificate::Rot { a, b, w } => json!({"a": ops(a), "b": op(b), "w": ops(w)}),
        DualCertificate::Roe { a, w } => json!({"a": op(a), "w": op(w)}),
    };
    let mut v = json!({
        "quantifier": r.quantifier.name(),
        "value": r.value,
        "dual_value": r.dual_value,
        "gap": r.gap,
        "tol": r.tol,
        "iterations": r.iterations,
        "relaxation": r.relaxation,
        "outcomes": [r.outcomes.0, r.outcomes.1],
    });
    if let Some(e) = r.roe_value {
        v["roe_value"] = json!(e);
    }
    v["primal_witness"] = primal;
    v["dual_certificate"] = dual;
    v
}

pub fn score_report_json(s: &ScoreReport) -> serde_json::Value {
    let mut v = serde_json::json!({
        "quantum_score": s.quantum_score,
        "classical_score": s.classical_score,
        "ratio": s.ratio,
        "quantum_method": s.quantum_method.name(),
        "classical_method": s.classical_method.name(),
        "tol": s.tol,
    });
    if let Some(x) = s.seesaw_score {
        v["seesaw_score"] = x.into();
    }
    if let Some(x) = s.robustness {
        v["robustness"] = x.into();
    }
    v
}
