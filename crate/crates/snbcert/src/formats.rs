//! JSON file formats. Matrices are row-major lists of rows, each entry an
//! `[re, im]` pair.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use snbcert_core::channels::{ChoiOperator, KrausChannel, QuantumMap};
use snbcert_core::decomposition::{standard_kets, StateBasis};
use snbcert_core::game::{GameResult, MeasurementModel, Verdict};
use snbcert_core::witnesses::{Witness, WitnessKind};
use snbcert_core::{ComplexMatrix, GameSpec, ProductDecomposition, RealMatrix};

use crate::FormatError;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix, FormatError> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if n_rows == 0 || n_cols == 0 {
        return Err(FormatError::Invalid("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err(FormatError::Invalid("ragged matrix rows".into()));
    }
    let data = rows.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
    Ok(ComplexMatrix::from_vec(n_rows, n_cols, data)?)
}

pub fn real_to_json(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn real_from_json(rows: &[Vec<f64>]) -> Result<RealMatrix, FormatError> {
    let n_cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err(FormatError::Invalid("ragged table rows".into()));
    }
    Ok(RealMatrix::from_vec(rows.len(), n_cols, rows.concat())?)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::Io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| FormatError::Json(path.display().to_string(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| FormatError::Io(path.display().to_string(), e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Kraus,
    Choi,
}

/// `{"kind": "kraus"|"choi", "d_in", "d_out", "matrices": [...]}`. A Choi
/// file holds one trace-one matrix on `C^d_in ⊗ C^d_out`, input factor first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub kind: ChannelKind,
    pub d_in: usize,
    pub d_out: usize,
    pub matrices: Vec<MatrixJson>,
}

/// A validated channel from either representation.
#[derive(Clone, Debug)]
pub enum Channel {
    Kraus(KrausChannel),
    Choi(ChoiOperator),
}

impl Channel {
    pub fn as_map(&self) -> &(dyn QuantumMap + Sync) {
        match self {
            Self::Kraus(k) => k,
            Self::Choi(c) => c,
        }
    }

    pub fn to_kraus(&self) -> KrausChannel {
        match self {
            Self::Kraus(k) => k.clone(),
            Self::Choi(c) => c.to_kraus(),
        }
    }
}

impl ChannelFile {
    pub fn from_kraus(ch: &KrausChannel) -> Self {
        Self {
            kind: ChannelKind::Kraus,
            d_in: ch.d_in(),
            d_out: ch.d_out(),
            matrices: ch.ops().iter().map(matrix_to_json).collect(),
        }
    }

    pub fn from_choi(j: &ChoiOperator) -> Self {
        Self {
            kind: ChannelKind::Choi,
            d_in: j.d_in(),
            d_out: j.d_out(),
            matrices: vec![matrix_to_json(j.matrix())],
        }
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        read_json(path)
    }

    /// Checks shapes, complete positivity and trace preservation.
    pub fn into_channel(self) -> Result<Channel, FormatError> {
        let mats = self
            .matrices
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>, _>>()?;
        match self.kind {
            ChannelKind::Kraus => {
                if mats.is_empty() {
                    return Err(FormatError::Invalid("kraus channel has no operators".into()));
                }
                if let Some(bad) = mats.iter().find(|m| m.rows() != self.d_out || m.cols() != self.d_in) {
                    return Err(FormatError::Invalid(format!(
                        "kraus operator is {}x{}, expected d_out x d_in = {}x{}",
                        bad.rows(),
                        bad.cols(),
                        self.d_out,
                        self.d_in
                    )));
                }
                Ok(Channel::Kraus(KrausChannel::new(mats)?))
            }
            ChannelKind::Choi => {
                let [m] = <[ComplexMatrix; 1]>::try_from(mats)
                    .map_err(|v| FormatError::Invalid(format!("choi file needs exactly one matrix, got {}", v.len())))?;
                Ok(Channel::Choi(ChoiOperator::new(m, self.d_in, self.d_out)?))
            }
        }
    }
}

/// `{"kind": "sn", "k", "d", "matrix"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub d: usize,
    pub matrix: MatrixJson,
}

impl WitnessFile {
    pub fn from_witness(w: &Witness) -> Self {
        let (kind, k) = match w.kind() {
            WitnessKind::SchmidtNumber { k } => ("sn", Some(k)),
            WitnessKind::Npt => ("npt", None),
        };
        Self {
            kind: kind.into(),
            k,
            d: w.d(),
            matrix: matrix_to_json(w.matrix()),
        }
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        read_json(path)
    }

    pub fn into_witness(self) -> Result<Witness, FormatError> {
        let kind = match (self.kind.as_str(), self.k) {
            ("sn", Some(k)) => WitnessKind::SchmidtNumber { k },
            ("sn", None) => return Err(FormatError::Invalid("sn witness needs a \"k\" field".into())),
            ("npt", _) => WitnessKind::Npt,
            (other, _) => return Err(FormatError::Invalid(format!("unknown witness kind {other:?}"))),
        };
        Ok(Witness::new(matrix_from_json(&self.matrix)?, kind, self.d)?)
    }
}

/// Basis file: either `{"kets": [[[re, im], ...], ...]}` (possibly
/// unnormalized) or `{"states": [matrix, ...]}` (pure density matrices).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFile {
    Kets(Vec<Vec<[f64; 2]>>),
    States(Vec<MatrixJson>),
}

impl BasisFile {
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        read_json(path)
    }

    pub fn standard(d: usize) -> Self {
        Self::Kets(
            standard_kets(d)
                .iter()
                .map(|k| k.data().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        )
    }

    pub fn into_basis(self) -> Result<StateBasis, FormatError> {
        Ok(match self {
            Self::Kets(kets) => StateBasis::from_kets(
                kets.into_iter()
                    .map(|k| ComplexMatrix::column(k.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()))
                    .collect(),
            )?,
            Self::States(states) => {
                StateBasis::from_states(states.iter().map(matrix_from_json).collect::<Result<_, _>>()?)?
            }
        })
    }
}

/// Decomposition export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionFile {
    /// Coefficients over normalized density operators.
    pub gamma: Vec<Vec<f64>>,
    /// Coefficients over the rank-one operators of the kets the basis was built from.
    pub gamma_kets: Vec<Vec<f64>>,
    pub ket_weights_a: Vec<f64>,
    pub ket_weights_b: Vec<f64>,
    pub states_a: Vec<MatrixJson>,
    pub states_b: Vec<MatrixJson>,
    pub residual: f64,
    pub condition_number: f64,
}

impl DecompositionFile {
    pub fn from_decomposition(pd: &ProductDecomposition) -> Self {
        Self {
            gamma: real_to_json(&pd.gamma),
            gamma_kets: real_to_json(&pd.gamma_kets()),
            ket_weights_a: pd.basis_a.weights().to_vec(),
            ket_weights_b: pd.basis_b.weights().to_vec(),
            states_a: pd.basis_a.states().iter().map(matrix_to_json).collect(),
            states_b: pd.basis_b.states().iter().map(matrix_to_json).collect(),
            residual: pd.residual,
            condition_number: pd.condition,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementJson {
    BellProjector,
    Circuit,
    ExplicitPovm { effects: Vec<MatrixJson> },
}

impl MeasurementJson {
    pub fn from_model(m: &MeasurementModel) -> Self {
        match m {
            MeasurementModel::BellProjector => Self::BellProjector,
            MeasurementModel::Circuit => Self::Circuit,
            MeasurementModel::ExplicitPovm(e) => Self::ExplicitPovm {
                effects: e.iter().map(matrix_to_json).collect(),
            },
        }
    }

    pub fn into_model(self) -> Result<MeasurementModel, FormatError> {
        Ok(match self {
            Self::BellProjector => MeasurementModel::BellProjector,
            Self::Circuit => MeasurementModel::Circuit,
            Self::ExplicitPovm { effects } => {
                MeasurementModel::ExplicitPovm(effects.iter().map(matrix_from_json).collect::<Result<_, _>>()?)
            }
        })
    }
}

/// Game spec: `payoff[b][x][y]`; outcomes without a table pay 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameFile {
    pub states_a: Vec<MatrixJson>,
    pub states_b: Vec<MatrixJson>,
    pub priors_a: Vec<f64>,
    pub priors_b: Vec<f64>,
    pub payoff: Vec<Vec<Vec<f64>>>,
    pub measurement: MeasurementJson,
}

impl GameFile {
    pub fn from_spec(spec: &GameSpec) -> Self {
        Self {
            states_a: spec.states_a().iter().map(matrix_to_json).collect(),
            states_b: spec.states_b().iter().map(matrix_to_json).collect(),
            priors_a: spec.priors_a().to_vec(),
            priors_b: spec.priors_b().to_vec(),
            payoff: spec.payoff().iter().map(real_to_json).collect(),
            measurement: MeasurementJson::from_model(spec.measurement()),
        }
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        read_json(path)
    }

    pub fn into_spec(self) -> Result<GameSpec, FormatError> {
        let states = |v: &[MatrixJson]| v.iter().map(matrix_from_json).collect::<Result<Vec<_>, _>>();
        Ok(GameSpec::new(
            states(&self.states_a)?,
            states(&self.states_b)?,
            self.priors_a,
            self.priors_b,
            self.payoff.iter().map(|t| real_from_json(t)).collect::<Result<_, _>>()?,
            self.measurement.into_model()?,
        )?)
    }
}

pub fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::CertifiedNonKSnb => "certified_non_k_snb",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// One line of the result log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub lambda: Option<f64>,
    pub k: usize,
    pub exact: f64,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub shots: u64,
    pub verdict: String,
}

impl ResultRecord {
    pub fn new(lambda: Option<f64>, k: usize, r: &GameResult) -> Self {
        Self {
            lambda,
            k,
            exact: r.exact_payoff,
            estimate: r.estimate,
            stderr: r.stderr,
            shots: r.shots,
            verdict: verdict_str(r.verdict).into(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Gate-list description of the measurement circuit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitFile {
    pub d: usize,
    pub wires: [String; 2],
    pub gates: Vec<GateEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateEntry {
    pub kind: String,
    pub wires: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matrices: Vec<MatrixJson>,
}

impl CircuitFile {
    /// Wire 0 carries A (prepared, sent through the channel, CX target);
    /// wire 1 carries B (prepared, CX control, inverse QFT).
    pub fn build(d: usize, prep_a: &[ComplexMatrix], prep_b: &[ComplexMatrix]) -> Result<Self, FormatError> {
        use snbcert_core::circuit::{controlled_shift, qft};
        let inv_cx = controlled_shift(d)?.inverse();
        let inv_qft = qft(d)?.inverse();
        let gate = |kind: &str, wires: Vec<usize>, matrices: Vec<MatrixJson>| GateEntry {
            kind: kind.into(),
            wires,
            matrices,
        };
        Ok(Self {
            d,
            wires: ["A".into(), "B".into()],
            gates: vec![
                gate("prep_a", vec![0], prep_a.iter().map(matrix_to_json).collect()),
                gate("prep_b", vec![1], prep_b.iter().map(matrix_to_json).collect()),
                gate("channel", vec![0], vec![]),
                gate("inv_cx", vec![0, 1], vec![matrix_to_json(inv_cx.matrix())]),
                gate("inv_qft_b", vec![1], vec![matrix_to_json(inv_qft.matrix())]),
                gate("measure", vec![0, 1], vec![]),
            ],
        })
    }
}
