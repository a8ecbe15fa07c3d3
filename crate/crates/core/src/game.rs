//! Semi-quantum signaling game: the referee prepares `ψˣ` (sent through the
//! channel) and `φʸ` (kept), an untrusted joint measurement returns `b`, and
//! the payoff `𝒥(b, x, y)` is averaged over the priors.
//!
//! Games built from a witness decomposition pay `γ_{x,y} / (p_x p_y)` on
//! outcome 0 and nothing otherwise, so the average payoff equals `Tr[W J]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::channels::{max_entangled_projector, QuantumMap};
use crate::circuit::circuit_povm;
use crate::decomposition::{decompose_witness, game_inputs_from_decomposition, standard_basis, ProductDecomposition};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{product_trace, ComplexMatrix, RealMatrix, DEFAULT_TOL};
use crate::random::seeded_stream;
use crate::witnesses::optimal_sn_witness;

/// Exact payoffs must lie below `-EXACT_MARGIN` to certify.
pub const EXACT_MARGIN: f64 = 1e-7;
/// Sampled estimates certify when `estimate + SIGMA_RULE · stderr < 0`.
pub const SIGMA_RULE: f64 = 5.0;
/// Shots per independently seeded chunk of a sampled run.
pub const SHOT_CHUNK: u64 = 1 << 16;
/// Tolerance on effect positivity and completeness.
pub const MEASUREMENT_TOL: f64 = 1e-10;
/// Tolerance on prior normalization.
pub const PRIOR_TOL: f64 = 1e-12;

/// The joint measurement on (channel output, kept system).
#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementModel {
    /// `{P_d, I − P_d}`.
    BellProjector,
    /// The d² generalized-Bell effects of the readout circuit, outcome `a·d + b`.
    Circuit,
    ExplicitPovm(Vec<ComplexMatrix>),
}

impl MeasurementModel {
    /// Effects on `C^d ⊗ C^d_b` (for the built-in models `d = d_b`).
    pub fn effects(&self, d: usize, d_b: usize) -> Result<Vec<ComplexMatrix>> {
        match self {
            Self::BellProjector | Self::Circuit if d != d_b => Err(dim_err!(
                "generalized-Bell measurement needs equal local dimensions, got {d} and {d_b}"
            )),
            Self::BellProjector => {
                let p = max_entangled_projector(d)?;
                let rest = &ComplexMatrix::identity(d * d) - &p;
                Ok(vec![p, rest])
            }
            Self::Circuit => circuit_povm(d),
            Self::ExplicitPovm(effects) => {
                validate_povm(effects, d * d_b)?;
                Ok(effects.clone())
            }
        }
    }
}

/// Checks shape, positivity and completeness of a POVM on `C^n`.
pub fn validate_povm(effects: &[ComplexMatrix], n: usize) -> Result<()> {
    if effects.is_empty() {
        return Err(Error::InvalidParameter("POVM has no effects".into()));
    }
    let mut sum = ComplexMatrix::zeros(n, n);
    for (i, e) in effects.iter().enumerate() {
        if !e.is_square() || e.rows() != n {
            return Err(dim_err!("effect {i} is {}x{}, expected {n}x{n}", e.rows(), e.cols()));
        }
        let herr = e.hermiticity_error();
        if herr > MEASUREMENT_TOL {
            return Err(Error::NotHermitian(herr));
        }
        let min = e.hermitian_part().min_eigenvalue()?;
        if min < -MEASUREMENT_TOL {
            return Err(Error::NotPositive("effect", min));
        }
        sum = &sum + e;
    }
    let dev = sum.max_abs_diff(&ComplexMatrix::identity(n));
    if dev > MEASUREMENT_TOL {
        return Err(Error::IncompleteMeasurement(dev));
    }
    Ok(())
}

fn validate_state(rho: &ComplexMatrix, what: &'static str) -> Result<()> {
    if !rho.is_square() {
        return Err(dim_err!("{what} is {}x{}, not square", rho.rows(), rho.cols()));
    }
    let herr = rho.hermiticity_error();
    if herr > DEFAULT_TOL {
        return Err(Error::NotHermitian(herr));
    }
    let dev = (rho.trace().re - 1.0).abs();
    if dev > DEFAULT_TOL {
        return Err(Error::NotNormalized(what, dev));
    }
    let min = rho.hermitian_part().min_eigenvalue()?;
    if min < -DEFAULT_TOL {
        return Err(Error::NotPositive(what, min));
    }
    Ok(())
}

fn validate_priors(p: &[f64], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(dim_err!("{} priors for {n} states", p.len()));
    }
    if let Some(&bad) = p.iter().find(|&&v| v.is_nan() || v < 0.0) {
        return Err(Error::InvalidParameter(format!("prior {bad} is negative")));
    }
    let dev = (p.iter().sum::<f64>() - 1.0).abs();
    if dev > PRIOR_TOL {
        return Err(Error::NotNormalized("priors", dev));
    }
    Ok(())
}

/// Inputs, priors, payoff table and measurement of one game.
#[derive(Clone, Debug)]
pub struct GameSpec {
    states_a: Vec<ComplexMatrix>,
    states_b: Vec<ComplexMatrix>,
    priors_a: Vec<f64>,
    priors_b: Vec<f64>,
    payoff: Vec<RealMatrix>,
    measurement: MeasurementModel,
}

impl GameSpec {
    /// `payoff[b][(x, y)] = 𝒥(b, x, y)`; outcomes past `payoff.len()` pay 0.
    pub fn new(
        states_a: Vec<ComplexMatrix>,
        states_b: Vec<ComplexMatrix>,
        priors_a: Vec<f64>,
        priors_b: Vec<f64>,
        payoff: Vec<RealMatrix>,
        measurement: MeasurementModel,
    ) -> Result<Self> {
        if states_a.is_empty() || states_b.is_empty() {
            return Err(Error::InvalidParameter("a game needs at least one input per side".into()));
        }
        for s in &states_a {
            validate_state(s, "input state")?;
        }
        for s in &states_b {
            validate_state(s, "input state")?;
        }
        let (da, db) = (states_a[0].rows(), states_b[0].rows());
        if states_a.iter().any(|s| s.rows() != da) || states_b.iter().any(|s| s.rows() != db) {
            return Err(dim_err!("input states on one side must share a dimension"));
        }
        validate_priors(&priors_a, states_a.len())?;
        validate_priors(&priors_b, states_b.len())?;
        for (b, t) in payoff.iter().enumerate() {
            if t.rows() != states_a.len() || t.cols() != states_b.len() {
                return Err(dim_err!(
                    "payoff table for outcome {b} is {}x{}, expected {}x{}",
                    t.rows(),
                    t.cols(),
                    states_a.len(),
                    states_b.len()
                ));
            }
        }
        if let MeasurementModel::ExplicitPovm(effects) = &measurement {
            let n = effects.first().map(ComplexMatrix::rows).unwrap_or(0);
            validate_povm(effects, n)?;
        }
        Ok(Self {
            states_a,
            states_b,
            priors_a,
            priors_b,
            payoff,
            measurement,
        })
    }

    /// Uniform priors, transposed basis states as inputs and
    /// `𝒥(0, x, y) = γ_{x,y} / (p_x p_y)`.
    pub fn from_decomposition(pd: &ProductDecomposition, measurement: MeasurementModel) -> Result<Self> {
        let (states_a, states_b) = game_inputs_from_decomposition(pd);
        let (na, nb) = (states_a.len(), states_b.len());
        let priors_a = vec![1.0 / na as f64; na];
        let priors_b = vec![1.0 / nb as f64; nb];
        let mut table = pd.gamma.clone();
        for x in 0..na {
            for y in 0..nb {
                table[(x, y)] /= priors_a[x] * priors_b[y];
            }
        }
        Self::new(states_a, states_b, priors_a, priors_b, vec![table], measurement)
    }

    pub fn states_a(&self) -> &[ComplexMatrix] {
        &self.states_a
    }

    pub fn states_b(&self) -> &[ComplexMatrix] {
        &self.states_b
    }

    pub fn priors_a(&self) -> &[f64] {
        &self.priors_a
    }

    pub fn priors_b(&self) -> &[f64] {
        &self.priors_b
    }

    pub fn payoff(&self) -> &[RealMatrix] {
        &self.payoff
    }

    pub fn measurement(&self) -> &MeasurementModel {
        &self.measurement
    }

    /// Same game with another measurement. Explicit effects are checked for
    /// positivity and completeness here and against the channel output
    /// dimension when the game is played.
    pub fn with_measurement(&self, measurement: MeasurementModel) -> Result<Self> {
        if let MeasurementModel::ExplicitPovm(effects) = &measurement {
            let n = effects.first().map(ComplexMatrix::rows).unwrap_or(0);
            validate_povm(effects, n)?;
        }
        let mut out = self.clone();
        out.measurement = measurement;
        Ok(out)
    }

    /// `𝒥(b, x, y)`, zero for outcomes without a table.
    pub fn payoff_of(&self, b: usize, x: usize, y: usize) -> f64 {
        self.payoff.get(b).map_or(0.0, |t| t[(x, y)])
    }
}

/// `p(b | ψ, φ) = Tr[(N(ψ) ⊗ φ) Π^b]` for every outcome `b`.
pub fn correlation(
    ch: &dyn QuantumMap,
    psi: &ComplexMatrix,
    phi: &ComplexMatrix,
    meas: &MeasurementModel,
) -> Result<Vec<f64>> {
    let effects = meas.effects(ch.d_out(), phi.rows())?;
    let out = ch.apply(psi)?;
    Ok(effects.iter().map(|e| product_trace(&out, phi, e).re).collect())
}

/// Outcome distributions of every `(x, y)` setting, with cumulative priors,
/// ready for exact evaluation and sampling.
#[derive(Clone, Debug)]
pub struct OutcomeTable {
    cum_a: Vec<f64>,
    cum_b: Vec<f64>,
    n_y: usize,
    settings: Vec<Setting>,
    exact: f64,
}

#[derive(Clone, Debug)]
struct Setting {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    payoff: Vec<f64>,
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|&v| {
            acc += v.max(0.0);
            acc
        })
        .collect()
}

/// Index of the first cumulative entry exceeding `u`, scaled to the total.
fn draw(cum: &[f64], u: f64) -> usize {
    let target = u * cum.last().copied().unwrap_or(0.0);
    cum.iter().position(|&c| target < c).unwrap_or(cum.len() - 1)
}

impl OutcomeTable {
    pub fn new(spec: &GameSpec, ch: &dyn QuantumMap) -> Result<Self> {
        let d_in = spec.states_a[0].rows();
        if ch.d_in() != d_in {
            return Err(dim_err!("channel input is {} but game inputs are {d_in}-dimensional", ch.d_in()));
        }
        let effects = spec.measurement.effects(ch.d_out(), spec.states_b[0].rows())?;
        let outputs: Vec<ComplexMatrix> = spec.states_a.iter().map(|s| ch.apply(s)).collect::<Result<_>>()?;
        let n_y = spec.states_b.len();
        let mut settings = Vec::with_capacity(outputs.len() * n_y);
        let mut exact = 0.0;
        for (x, out) in outputs.iter().enumerate() {
            for (y, phi) in spec.states_b.iter().enumerate() {
                let probabilities: Vec<f64> = effects.iter().map(|e| product_trace(out, phi, e).re).collect();
                let payoff: Vec<f64> = (0..effects.len()).map(|b| spec.payoff_of(b, x, y)).collect();
                let avg: f64 = probabilities.iter().zip(&payoff).map(|(p, j)| p * j).sum();
                exact += spec.priors_a[x] * spec.priors_b[y] * avg;
                settings.push(Setting {
                    cumulative: cumulative(&probabilities),
                    probabilities,
                    payoff,
                });
            }
        }
        Ok(Self {
            cum_a: cumulative(&spec.priors_a),
            cum_b: cumulative(&spec.priors_b),
            n_y,
            settings,
            exact,
        })
    }

    pub fn exact_payoff(&self) -> f64 {
        self.exact
    }

    /// `p(b | ψˣ, φʸ)` for all outcomes.
    pub fn probabilities(&self, x: usize, y: usize) -> &[f64] {
        &self.settings[x * self.n_y + y].probabilities
    }

    /// Runs `shots` rounds from stream `chunk` of `seed`. Shot indices passed
    /// to `log` start at `chunk · SHOT_CHUNK`.
    pub fn sample_chunk<'f>(
        &self,
        seed: u64,
        chunk: u64,
        shots: u64,
        mut log: Option<&mut (dyn FnMut(&ShotRecord) + 'f)>,
    ) -> RunningStats {
        let mut rng = seeded_stream(seed, chunk);
        let mut stats = RunningStats::default();
        for i in 0..shots {
            let x = draw(&self.cum_a, rng.random::<f64>());
            let y = draw(&self.cum_b, rng.random::<f64>());
            let s = &self.settings[x * self.n_y + y];
            let outcome = draw(&s.cumulative, rng.random::<f64>());
            let payoff = s.payoff[outcome];
            stats.push(payoff);
            if let Some(f) = log.as_deref_mut() {
                f(&ShotRecord {
                    shot: chunk * SHOT_CHUNK + i,
                    x,
                    y,
                    outcome,
                    payoff,
                });
            }
        }
        stats
    }
}

/// One simulated round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotRecord {
    pub shot: u64,
    pub x: usize,
    pub y: usize,
    pub outcome: usize,
    pub payoff: f64,
}

/// Count, mean and sum of squared deviations of a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    /// Pooled statistics of two disjoint samples.
    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let (na, nb, nt) = (self.n as f64, other.n as f64, n as f64);
        let delta = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + delta * nb / nt,
            m2: self.m2 + other.m2 + delta * delta * na * nb / nt,
        }
    }

    /// Sample standard deviation over `√n`; undefined below two samples.
    pub fn stderr(&self) -> Option<f64> {
        (self.n >= 2).then(|| libm::sqrt(self.m2 / (self.n - 1) as f64 / self.n as f64))
    }
}

/// Number of chunks and the size of chunk `i` for a run of `shots`.
pub fn chunk_plan(shots: u64) -> impl Iterator<Item = (u64, u64)> {
    (0..shots.div_ceil(SHOT_CHUNK)).map(move |i| (i, SHOT_CHUNK.min(shots - i * SHOT_CHUNK)))
}

/// One-sided test outcome: a negative payoff certifies the channel is not
/// k-Schmidt-number-breaking; anything else proves nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    CertifiedNonKSnb,
    Inconclusive,
}

impl Verdict {
    pub fn from_exact(payoff: f64) -> Self {
        if payoff < -EXACT_MARGIN {
            Self::CertifiedNonKSnb
        } else {
            Self::Inconclusive
        }
    }

    pub fn from_sample(stats: &RunningStats) -> Self {
        match stats.stderr() {
            Some(se) if stats.mean + SIGMA_RULE * se < 0.0 => Self::CertifiedNonKSnb,
            _ => Self::Inconclusive,
        }
    }

    pub fn is_certified(self) -> bool {
        self == Self::CertifiedNonKSnb
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameResult {
    pub exact_payoff: f64,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub shots: u64,
    pub verdict: Verdict,
}

impl GameResult {
    pub fn exact(exact_payoff: f64) -> Self {
        Self {
            exact_payoff,
            estimate: None,
            stderr: None,
            shots: 0,
            verdict: Verdict::from_exact(exact_payoff),
        }
    }

    pub fn sampled(exact_payoff: f64, stats: &RunningStats) -> Self {
        Self {
            exact_payoff,
            estimate: Some(stats.mean),
            stderr: stats.stderr(),
            shots: stats.n,
            verdict: Verdict::from_sample(stats),
        }
    }
}

/// How a game is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

/// `Σ_{b,x,y} 𝒥(b, x, y) p(b | ψˣ, φʸ) p_x p_y`.
pub fn exact_payoff(spec: &GameSpec, ch: &dyn QuantumMap) -> Result<f64> {
    Ok(OutcomeTable::new(spec, ch)?.exact_payoff())
}

/// Payoff when the honest measurement is replaced by a two-outcome POVM whose
/// outcome 0 carries the payoff.
pub fn adversarial_payoff(spec: &GameSpec, ch: &dyn QuantumMap, povm: &[ComplexMatrix]) -> Result<f64> {
    if povm.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "adversarial measurement must have two outcomes, got {}",
            povm.len()
        )));
    }
    validate_povm(povm, ch.d_out() * spec.states_b[0].rows())?;
    exact_payoff(&spec.with_measurement(MeasurementModel::ExplicitPovm(povm.to_vec()))?, ch)
}

/// Monte-Carlo estimate from `shots` i.i.d. rounds, chunked by `SHOT_CHUNK`
/// with one RNG stream per chunk and merged in chunk order.
pub fn sample_game(spec: &GameSpec, ch: &dyn QuantumMap, shots: u64, seed: u64) -> Result<GameResult> {
    sample_game_logged(spec, ch, shots, seed, None)
}

/// `sample_game` reporting every round to `log`.
pub fn sample_game_logged(
    spec: &GameSpec,
    ch: &dyn QuantumMap,
    shots: u64,
    seed: u64,
    mut log: Option<&mut dyn FnMut(&ShotRecord)>,
) -> Result<GameResult> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let table = OutcomeTable::new(spec, ch)?;
    let mut stats = RunningStats::default();
    for (chunk, n) in chunk_plan(shots) {
        stats = stats.merge(&table.sample_chunk(seed, chunk, n, log.as_deref_mut()));
    }
    Ok(GameResult::sampled(table.exact_payoff(), &stats))
}

pub fn evaluate(spec: &GameSpec, ch: &dyn QuantumMap, mode: Mode) -> Result<GameResult> {
    match mode {
        Mode::Exact => Ok(GameResult::exact(exact_payoff(spec, ch)?)),
        Mode::Sampled { shots, seed } => sample_game(spec, ch, shots, seed),
    }
}

/// Decomposition of the class-k witness on `C^d ⊗ C^d` over the standard basis.
pub fn witness_decomposition(d: usize, k: usize) -> Result<ProductDecomposition> {
    let w = optimal_sn_witness(d, k)?;
    let basis = standard_basis(d)?;
    decompose_witness(&w, &basis, &basis)
}

/// The game whose average payoff is `Tr[W_k J]` under the given measurement.
pub fn certification_game(d: usize, k: usize, measurement: MeasurementModel) -> Result<GameSpec> {
    GameSpec::from_decomposition(&witness_decomposition(d, k)?, measurement)
}

/// Plays the class-k certification game on `ch` with the honest
/// generalized-Bell measurement.
pub fn certify(ch: &dyn QuantumMap, k: usize, d: usize, mode: Mode) -> Result<GameResult> {
    if ch.d_in() != d || ch.d_out() != d {
        return Err(dim_err!(
            "certification at d = {d} needs a {d} -> {d} channel, got {} -> {}",
            ch.d_in(),
            ch.d_out()
        ));
    }
    let spec = certification_game(d, k, MeasurementModel::BellProjector)?;
    evaluate(&spec, ch, mode)
}
