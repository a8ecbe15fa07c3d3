//! Quantum channels and CP maps in Kraus and Choi form.
//!
//! Choi operators use the trace-one convention
//! `J = (id ⊗ E)(|Φ⟩⟨Φ|)` with `|Φ⟩ = Σᵢ |ii⟩/√d_in`, reference system first
//! and channel output second. With that normalization the inverse map is
//! `E(ρ) = d_in · Tr_ref[(ρᵀ ⊗ I) J]`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{c, cr, eig_hermitian, partial_trace, sqrt, ComplexMatrix, DimSpec, DEFAULT_TOL};
use crate::random::{gaussian_matrix, haar_isometry, seeded};

/// Anything that maps density matrices on `C^d_in` to operators on `C^d_out`.
pub trait QuantumMap {
    fn d_in(&self) -> usize;
    fn d_out(&self) -> usize;
    fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix>;
    fn choi(&self) -> ChoiOperator;
}

/// `(1/√d) Σᵢ |i⟩|i⟩` as a column vector of length `d²`.
pub fn max_entangled(d: usize) -> Result<ComplexMatrix> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "maximally entangled state needs d >= 2, got {d}"
        )));
    }
    let mut v = ComplexMatrix::zeros(d * d, 1);
    let amp = cr(1.0 / sqrt(d as f64));
    for i in 0..d {
        v[(i * d + i, 0)] = amp;
    }
    Ok(v)
}

/// Projector onto the maximally entangled state, `P_d = |Φ_d⟩⟨Φ_d|`.
pub fn max_entangled_projector(d: usize) -> Result<ComplexMatrix> {
    Ok(max_entangled(d)?.projector())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "noise parameter must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// A CP map given by Kraus operators `K_i : C^d_in → C^d_out`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<ComplexMatrix>,
    d_in: usize,
    d_out: usize,
    trace_preserving: bool,
}

impl KrausChannel {
    /// A trace-preserving channel; fails unless `Σ K†K = I` within 1e-9.
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let map = Self::cp_map(ops)?;
        let dev = map.trace_preservation_error();
        if dev > DEFAULT_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self {
            trace_preserving: true,
            ..map
        })
    }

    /// A completely positive map with no normalization requirement.
    pub fn cp_map(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidParameter("at least one Kraus operator is required".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if let Some(bad) = ops.iter().find(|k| (k.rows(), k.cols()) != (d_out, d_in)) {
            return Err(dim_err!(
                "Kraus operators must share one shape: {d_out}x{d_in} vs {}x{}",
                bad.rows(),
                bad.cols()
            ));
        }
        let mut map = Self {
            ops,
            d_in,
            d_out,
            trace_preserving: false,
        };
        map.trace_preserving = map.trace_preservation_error() <= DEFAULT_TOL;
        Ok(map)
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(ComplexMatrix::identity(d)).expect("identity is unitary")
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        if !u.is_unitary(1e-10) {
            return Err(Error::InvalidParameter(format!(
                "matrix is not unitary (deviation {:e})",
                u.unitarity_error()
            )));
        }
        Self::new(alloc::vec![u])
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn kraus_rank(&self) -> usize {
        self.ops.len()
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Max-norm of `Σ K†K − I`.
    pub fn trace_preservation_error(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.d_in, self.d_in);
        for k in &self.ops {
            sum = &sum + &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.d_in))
    }

    /// Heisenberg-picture dual, with Kraus operators `K_i†`. Satisfies
    /// `Tr[E(ρ) σ] = Tr[ρ E*(σ)]`.
    pub fn adjoint(&self) -> Self {
        Self::cp_map(self.ops.iter().map(ComplexMatrix::adjoint).collect())
            .expect("adjoints share one shape")
    }

    pub fn to_choi(&self) -> ChoiOperator {
        kraus_to_choi(self)
    }
}

impl QuantumMap for KrausChannel {
    fn d_in(&self) -> usize {
        self.d_in
    }

    fn d_out(&self) -> usize {
        self.d_out
    }

    fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.d_in || rho.cols() != self.d_in {
            return Err(dim_err!(
                "channel input is {0}x{0}, state is {1}x{2}",
                self.d_in,
                rho.rows(),
                rho.cols()
            ));
        }
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.ops {
            out = &out + &(&(k * rho) * &k.adjoint());
        }
        Ok(out)
    }

    fn choi(&self) -> ChoiOperator {
        kraus_to_choi(self)
    }
}

/// `f ∘ e`: Kraus set `{F_i E_j}`.
pub fn compose(f: &KrausChannel, e: &KrausChannel) -> Result<KrausChannel> {
    if e.d_out != f.d_in {
        return Err(dim_err!(
            "cannot compose: inner map outputs dimension {}, outer map expects {}",
            e.d_out,
            f.d_in
        ));
    }
    let ops = f
        .ops
        .iter()
        .flat_map(|fk| e.ops.iter().map(move |ek| fk * ek))
        .collect();
    let mut out = KrausChannel::cp_map(ops)?;
    out.trace_preserving |= f.trace_preserving && e.trace_preserving;
    Ok(out)
}

/// Choi operator on `C^d_in ⊗ C^d_out` (reference first).
#[derive(Clone, Debug)]
pub struct ChoiOperator {
    matrix: ComplexMatrix,
    d_in: usize,
    d_out: usize,
    trace_preserving: bool,
}

impl ChoiOperator {
    /// Choi operator of a channel: positive, with `Tr_out J = I/d_in`.
    pub fn new(matrix: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        let choi = Self::cp_map(matrix, d_in, d_out)?;
        let dev = choi.trace_preservation_error()?;
        if dev > DEFAULT_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self {
            trace_preserving: true,
            ..choi
        })
    }

    /// Choi operator of a CP map: only positivity is required.
    pub fn cp_map(matrix: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != d_in * d_out {
            return Err(dim_err!(
                "Choi operator for {d_in} -> {d_out} must be {0}x{0}, got {1}x{2}",
                d_in * d_out,
                matrix.rows(),
                matrix.cols()
            ));
        }
        let herr = matrix.hermiticity_error();
        if herr > DEFAULT_TOL {
            return Err(Error::NotHermitian(herr));
        }
        let min = matrix.min_eigenvalue()?;
        if min < -DEFAULT_TOL {
            return Err(Error::NotPositive("choi", min));
        }
        let mut choi = Self {
            matrix,
            d_in,
            d_out,
            trace_preserving: false,
        };
        choi.trace_preserving = choi.trace_preservation_error()? <= DEFAULT_TOL;
        Ok(choi)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn dims(&self) -> DimSpec {
        DimSpec::bipartite(self.d_in, self.d_out).expect("positive dimensions")
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Reference-system marginal `Tr_out J`.
    pub fn input_marginal(&self) -> ComplexMatrix {
        partial_trace(&self.matrix, &self.dims(), &[0]).expect("dimensions checked at construction")
    }

    fn trace_preservation_error(&self) -> Result<f64> {
        let target = ComplexMatrix::identity(self.d_in).scale_real(1.0 / self.d_in as f64);
        Ok(partial_trace(&self.matrix, &self.dims(), &[0])?.max_abs_diff(&target))
    }

    /// `J / Tr J`; the zero map stays zero.
    pub fn normalized(&self) -> Self {
        let t = self.matrix.trace().re;
        let matrix = if t > 0.0 {
            self.matrix.scale_real(1.0 / t)
        } else {
            self.matrix.clone()
        };
        Self {
            matrix,
            ..self.clone()
        }
    }

    /// Canonical Kraus operators from the spectral decomposition of `J`.
    pub fn to_kraus(&self) -> KrausChannel {
        let eig = eig_hermitian(&self.matrix).expect("Choi operator is Hermitian");
        let top = eig.values[0].max(0.0);
        let mut ops = Vec::new();
        for (idx, &mu) in eig.values.iter().enumerate() {
            if mu <= 1e-13 * top.max(1e-300) {
                continue;
            }
            let amp = sqrt(self.d_in as f64 * mu);
            let mut k = ComplexMatrix::zeros(self.d_out, self.d_in);
            for i in 0..self.d_in {
                for o in 0..self.d_out {
                    k[(o, i)] = eig.vectors[(i * self.d_out + o, idx)] * amp;
                }
            }
            ops.push(k);
        }
        if ops.is_empty() {
            ops.push(ComplexMatrix::zeros(self.d_out, self.d_in));
        }
        let mut map = KrausChannel::cp_map(ops).expect("common shape");
        map.trace_preserving |= self.trace_preserving;
        map
    }
}

impl QuantumMap for ChoiOperator {
    fn d_in(&self) -> usize {
        self.d_in
    }

    fn d_out(&self) -> usize {
        self.d_out
    }

    fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_via_choi(self, rho)
    }

    fn choi(&self) -> ChoiOperator {
        self.clone()
    }
}

/// `J = Σ_k (I ⊗ K_k)|Φ⟩⟨Φ|(I ⊗ K_k†)`.
pub fn kraus_to_choi(ch: &KrausChannel) -> ChoiOperator {
    let (d_in, d_out) = (ch.d_in, ch.d_out);
    let norm = 1.0 / sqrt(d_in as f64);
    let mut matrix = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for k in &ch.ops {
        let mut v = ComplexMatrix::zeros(d_in * d_out, 1);
        for i in 0..d_in {
            for o in 0..d_out {
                v[(i * d_out + o, 0)] = k[(o, i)] * norm;
            }
        }
        matrix = &matrix + &v.projector();
    }
    ChoiOperator {
        matrix,
        d_in,
        d_out,
        trace_preserving: ch.trace_preserving,
    }
}

/// `E(ρ) = d_in · Tr_ref[(ρᵀ ⊗ I) J]`. Positivity of `ρ` is not checked.
pub fn apply_via_choi(j: &ChoiOperator, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (d_in, d_out) = (j.d_in, j.d_out);
    if rho.rows() != d_in || rho.cols() != d_in {
        return Err(dim_err!(
            "Choi operator expects a {d_in}x{d_in} input, got {}x{}",
            rho.rows(),
            rho.cols()
        ));
    }
    let mut out = ComplexMatrix::zeros(d_out, d_out);
    let scale = d_in as f64;
    for a in 0..d_in {
        for b in 0..d_in {
            // (ρᵀ)[b, a] = ρ[a, b] multiplies the (a, b) reference block of J
            let r = rho[(a, b)];
            if r.re == 0.0 && r.im == 0.0 {
                continue;
            }
            for o in 0..d_out {
                for p in 0..d_out {
                    out[(o, p)] += r * j.matrix[(a * d_out + o, b * d_out + p)] * scale;
                }
            }
        }
    }
    Ok(out)
}

/// Generalized Pauli (Weyl) operator `X^a Z^b` on `C^d`.
pub fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let phase = 2.0 * core::f64::consts::PI * ((b * j) % d) as f64 / d as f64;
        m[((j + a) % d, j)] = c(libm::cos(phase), libm::sin(phase));
    }
    m
}

/// `ρ ↦ (1−λ)ρ + λ Tr(ρ) I/d`, realized with the d² Weyl operators.
pub fn depolarizing(d: usize, lambda: f64) -> Result<KrausChannel> {
    check_lambda(lambda)?;
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {d}")));
    }
    let dd = (d * d) as f64;
    let mut ops = Vec::with_capacity(d * d);
    ops.push(ComplexMatrix::identity(d).scale_real(sqrt(1.0 - lambda + lambda / dd)));
    if lambda > 0.0 {
        let w = sqrt(lambda / dd);
        for a in 0..d {
            for b in 0..d {
                if (a, b) != (0, 0) {
                    ops.push(weyl(d, a, b).scale_real(w));
                }
            }
        }
    }
    KrausChannel::new(ops)
}

/// `ρ ↦ (1−λ)ρ + λ Σᵢ |i⟩⟨i|ρ|i⟩⟨i|`.
pub fn dephasing(d: usize, lambda: f64) -> Result<KrausChannel> {
    check_lambda(lambda)?;
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {d}")));
    }
    let mut ops = Vec::with_capacity(d + 1);
    if lambda < 1.0 {
        ops.push(ComplexMatrix::identity(d).scale_real(sqrt(1.0 - lambda)));
    }
    if lambda > 0.0 {
        for i in 0..d {
            ops.push(ComplexMatrix::basis_ket(d, i).projector().scale_real(sqrt(lambda)));
        }
    }
    KrausChannel::new(ops)
}

/// Random channel `C^d_in → C^d_out` with the given Kraus rank, obtained by
/// tracing the environment out of a Haar-random isometry.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, kraus_rank: usize) -> KrausChannel {
    assert!(
        kraus_rank >= 1 && d_out * kraus_rank >= d_in,
        "a {d_in} -> {d_out} channel needs Kraus rank >= {}",
        d_in.div_ceil(d_out)
    );
    let v = haar_isometry(rng, d_out * kraus_rank, d_in);
    let ops = (0..kraus_rank)
        .map(|l| {
            let mut k = ComplexMatrix::zeros(d_out, d_in);
            for o in 0..d_out {
                for i in 0..d_in {
                    k[(o, i)] = v[(l * d_out + o, i)];
                }
            }
            k
        })
        .collect();
    KrausChannel::new(ops).expect("isometry blocks are trace preserving")
}

/// Random channel with a random admissible Kraus rank, at most `d_in·d_out`.
pub fn random_channel_any_rank<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> KrausChannel {
    let rank = rng.random_range(d_in.div_ceil(d_out)..=d_in * d_out);
    random_channel(rng, d_in, d_out, rank)
}

/// Random CP map with Gaussian Kraus operators (not trace preserving).
pub fn random_cp_map<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, kraus_rank: usize) -> KrausChannel {
    let ops = (0..kraus_rank).map(|_| gaussian_matrix(rng, d_out, d_in)).collect();
    KrausChannel::cp_map(ops).expect("common shape")
}

/// `D ∘ C` with random channels `C : C^d → C^k` and `D : C^k → C^d`.
/// Every such channel is k-Schmidt-number-breaking.
pub fn factor_through_k(d: usize, k: usize, seed: u64) -> Result<KrausChannel> {
    if k < 1 || k > d {
        return Err(Error::InvalidParameter(format!(
            "bottleneck dimension must satisfy 1 <= k <= d, got k = {k}, d = {d}"
        )));
    }
    let mut rng = seeded(seed);
    let encode = random_channel_any_rank(&mut rng, d, k);
    let decode = random_channel_any_rank(&mut rng, k, d);
    compose(&decode, &encode)
}

/// Random POVM with `outcomes` effects on `C^d`: `Π_i = S^{-1/2} G_i S^{-1/2}`
/// for random positive `G_i` of random rank (ranks summing to at least `d`)
/// and `S = Σ G_i`.
pub fn random_povm(d: usize, outcomes: usize, seed: u64) -> Result<Vec<ComplexMatrix>> {
    if outcomes < 2 {
        return Err(Error::InvalidParameter(format!(
            "a POVM needs at least two outcomes, got {outcomes}"
        )));
    }
    let mut rng = seeded(seed);
    let factors: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let rank = rng.random_range(d.div_ceil(outcomes)..=d);
            gaussian_matrix(&mut rng, d, rank)
        })
        .collect();
    let mut s = ComplexMatrix::zeros(d, d);
    for a in &factors {
        s = &s + &(a * &a.adjoint());
    }
    let inv_sqrt = eig_hermitian(&s.hermitian_part())?.map_spectrum(|x| 1.0 / sqrt(x));
    Ok(factors
        .iter()
        .map(|a| {
            let b = &inv_sqrt * a;
            (&b * &b.adjoint()).hermitian_part()
        })
        .collect())
}
