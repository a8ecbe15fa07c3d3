//! Gate-level model of the measurement circuit: prepare `ψˣ` on A and `φʸ`
//! on B, send A through the channel, undo the controlled shift (B controls,
//! A is the target), undo the Fourier transform on B and read out `(a, b)`
//! in the computational basis. Outcome `(0, 0)` is the projection onto
//! `|Φ_d⟩`.

use alloc::format;
use alloc::vec::Vec;

use crate::channels::QuantumMap;
use crate::error::{dim_err, Error, Result};
use crate::linalg::{c, cr, kron, sqrt, ComplexMatrix};

/// Unitaries deviating from `U†U = I` by more than this are rejected.
pub const UNITARITY_TOL: f64 = 1e-10;

/// A unitary acting on `arity` qudits of dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditGate {
    matrix: ComplexMatrix,
    arity: usize,
    d: usize,
}

impl QuditGate {
    pub fn new(matrix: ComplexMatrix, arity: usize, d: usize) -> Result<Self> {
        if !(1..=2).contains(&arity) {
            return Err(Error::InvalidParameter(format!("gate arity must be 1 or 2, got {arity}")));
        }
        let n = d.pow(arity as u32);
        if !matrix.is_square() || matrix.rows() != n {
            return Err(dim_err!(
                "{arity}-qudit gate on d = {d} must be {n}x{n}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            ));
        }
        let err = matrix.unitarity_error();
        if err > UNITARITY_TOL {
            return Err(Error::InvalidParameter(format!("gate is not unitary (deviation {err:e})")));
        }
        Ok(Self { matrix, arity, d })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            arity: self.arity,
            d: self.d,
        }
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        &(&self.matrix * rho) * &self.matrix.adjoint()
    }
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("qudit dimension must be >= 2, got {d}")));
    }
    Ok(())
}

/// `CX|i⟩|j⟩ = |i ⊕_d j⟩|j⟩`: first qudit is the target, second the control.
pub fn controlled_shift(d: usize) -> Result<QuditGate> {
    check_d(d)?;
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(((i + j) % d) * d + j, i * d + j)] = cr(1.0);
        }
    }
    QuditGate::new(m, 2, d)
}

/// `QFT|j⟩ = (1/√d) Σ_k e^{2πi jk/d} |k⟩`.
pub fn qft(d: usize) -> Result<QuditGate> {
    check_d(d)?;
    let s = 1.0 / sqrt(d as f64);
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let phase = 2.0 * core::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
            m[(k, j)] = c(s * libm::cos(phase), s * libm::sin(phase));
        }
    }
    QuditGate::new(m, 1, d)
}

/// `CX · (I ⊗ QFT)`; column `a·d + b` is the state measured by outcome `(a, b)`.
pub fn bell_frame(d: usize) -> Result<ComplexMatrix> {
    let local = kron(&ComplexMatrix::identity(d), qft(d)?.matrix());
    Ok(controlled_shift(d)?.matrix() * &local)
}

/// The d² rank-one effects realized by the circuit, indexed by `a·d + b`.
pub fn circuit_povm(d: usize) -> Result<Vec<ComplexMatrix>> {
    let frame = bell_frame(d)?;
    Ok((0..d * d).map(|idx| frame.col(idx).projector()).collect())
}

/// One readout result of the circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitOutcome {
    pub a: usize,
    pub b: usize,
    pub probability: f64,
}

/// Density-matrix simulation of one `(x, y)` setting. `prep_a[x]` and
/// `prep_b[y]` act on `|0⟩`.
pub fn run_circuit(
    ch: &dyn QuantumMap,
    x: usize,
    y: usize,
    prep_a: &[QuditGate],
    prep_b: &[QuditGate],
) -> Result<Vec<CircuitOutcome>> {
    let ua = prep_a
        .get(x)
        .ok_or_else(|| Error::IndexOutOfRange(format!("x = {x} with {} preparations", prep_a.len())))?;
    let ub = prep_b
        .get(y)
        .ok_or_else(|| Error::IndexOutOfRange(format!("y = {y} with {} preparations", prep_b.len())))?;
    let d = ch.d_out();
    if ua.d != ch.d_in() || ub.d != d || ua.arity != 1 || ub.arity != 1 || ch.d_in() != d {
        return Err(dim_err!(
            "circuit needs single-qudit preparations matching a {0} -> {0} channel, got d_a = {1}, d_b = {2}, channel {3} -> {4}",
            d,
            ua.d,
            ub.d,
            ch.d_in(),
            d
        ));
    }
    let zero = ComplexMatrix::basis_ket(d, 0).projector();
    let psi = ua.conjugate(&zero);
    let phi = ub.conjugate(&zero);
    let mut rho = kron(&ch.apply(&psi)?, &phi);
    rho = controlled_shift(d)?.inverse().conjugate(&rho);
    let inv_qft_b = QuditGate::new(kron(&ComplexMatrix::identity(d), &qft(d)?.matrix().adjoint()), 2, d)?;
    rho = inv_qft_b.conjugate(&rho);
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            out.push(CircuitOutcome {
                a,
                b,
                probability: rho[(a * d + b, a * d + b)].re,
            });
        }
    }
    Ok(out)
}

/// Preparation gates from density matrices, via `decomposition::prep_unitaries`.
pub fn prep_gates(states: &[ComplexMatrix]) -> Result<Vec<QuditGate>> {
    crate::decomposition::prep_unitaries(states)?
        .into_iter()
        .map(|u| {
            let d = u.rows();
            QuditGate::new(u, 1, d)
        })
        .collect()
}
