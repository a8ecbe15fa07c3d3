//! Expansion of a Hermitian bipartite operator over product states,
//! `W = Σ_{x,y} γ_{x,y} ξˣ ⊗ ζʸ`, and the game inputs derived from it.
//!
//! Hermitian operators are handled in isometric real coordinates (diagonal
//! entries, then `√2·Re` and `√2·Im` of each upper off-diagonal entry), so
//! the Hilbert–Schmidt inner product becomes the Euclidean one and the
//! coefficient system is a real square system of size d⁴.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{c, cr, eig_hermitian, kron, sqrt, ComplexMatrix, RealMatrix, DEFAULT_TOL};
use crate::witnesses::Witness;

/// Coefficient systems with a larger 2-norm condition number are refused.
pub const MAX_CONDITION: f64 = 1e8;

/// `d²` pure states whose projectors span the Hermitian operators on `C^d`.
#[derive(Clone, Debug)]
pub struct StateBasis {
    states: Vec<ComplexMatrix>,
    weights: Vec<f64>,
    d: usize,
    condition: f64,
}

impl StateBasis {
    /// Basis from (possibly unnormalized) kets. Each state is the normalized
    /// projector; the squared ket norm is kept as the state's weight so that
    /// coefficients over the unnormalized operators `|k⟩⟨k|` can be reported.
    pub fn from_kets(kets: Vec<ComplexMatrix>) -> Result<Self> {
        let d = kets.first().map(ComplexMatrix::rows).unwrap_or(0);
        let mut states = Vec::with_capacity(kets.len());
        let mut weights = Vec::with_capacity(kets.len());
        for (idx, k) in kets.iter().enumerate() {
            if k.cols() != 1 || k.rows() != d {
                return Err(dim_err!("ket {idx} has shape {}x{}, expected {d}x1", k.rows(), k.cols()));
            }
            let w: f64 = k.data().iter().map(|z| z.norm_sqr()).sum();
            if w <= 1e-300 {
                return Err(Error::InvalidParameter(format!("ket {idx} is zero")));
            }
            states.push(k.projector().scale_real(1.0 / w));
            weights.push(w);
        }
        Self::build(states, weights, d)
    }

    /// Basis from pure density matrices (unit weights).
    pub fn from_states(states: Vec<ComplexMatrix>) -> Result<Self> {
        let d = states.first().map(ComplexMatrix::rows).unwrap_or(0);
        for (idx, s) in states.iter().enumerate() {
            if !s.is_square() || s.rows() != d {
                return Err(dim_err!("state {idx} has shape {}x{}, expected {d}x{d}", s.rows(), s.cols()));
            }
            check_pure(s)?;
        }
        let n = states.len();
        Self::build(states, vec![1.0; n], d)
    }

    fn build(states: Vec<ComplexMatrix>, weights: Vec<f64>, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter("basis states need dimension >= 2".into()));
        }
        if states.len() != d * d {
            return Err(Error::InvalidParameter(format!(
                "a spanning basis on C^{d} needs exactly {} states, got {}",
                d * d,
                states.len()
            )));
        }
        let mut basis = Self {
            states,
            weights,
            d,
            condition: f64::INFINITY,
        };
        basis.condition = gram_condition(&basis.gram())?;
        if basis.condition > MAX_CONDITION {
            return Err(Error::IllConditioned(basis.condition));
        }
        Ok(basis)
    }

    pub fn states(&self) -> &[ComplexMatrix] {
        &self.states
    }

    /// Squared norms of the kets the basis was built from (1 for states).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Condition number of the Hilbert–Schmidt Gram matrix.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// `G[x, y] = Tr[ξˣ ξʸ]`.
    pub fn gram(&self) -> RealMatrix {
        let n = self.states.len();
        let mut g = RealMatrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                g[(x, y)] = self.states[x].trace_product(&self.states[y]).re;
            }
        }
        g
    }
}

fn gram_condition(g: &RealMatrix) -> Result<f64> {
    let eig = eig_hermitian(&g.to_complex())?;
    let max = eig.values[0];
    let min = *eig.values.last().expect("non-empty");
    Ok(if min <= 0.0 { f64::INFINITY } else { max / min })
}

fn check_pure(s: &ComplexMatrix) -> Result<()> {
    let herr = s.hermiticity_error();
    if herr > DEFAULT_TOL {
        return Err(Error::NotHermitian(herr));
    }
    let tr = s.trace().re;
    if (tr - 1.0).abs() > DEFAULT_TOL {
        return Err(Error::NotNormalized("state", (tr - 1.0).abs()));
    }
    let purity = s.trace_product(s).re;
    if (purity - 1.0).abs() > DEFAULT_TOL {
        return Err(Error::NotPure(purity));
    }
    Ok(())
}

/// Informationally complete set of `d²` kets: the computational basis, then
/// `|j⟩+|l⟩` for all `j < l`, then `|j⟩+i|l⟩` for all `j < l`. For d = 3
/// these are the nine qutrit states used by the reference game.
pub fn standard_kets(d: usize) -> Vec<ComplexMatrix> {
    let mut kets: Vec<ComplexMatrix> = (0..d).map(|i| ComplexMatrix::basis_ket(d, i)).collect();
    for phase in [cr(1.0), c(0.0, 1.0)] {
        for j in 0..d {
            for l in j + 1..d {
                let mut v = ComplexMatrix::zeros(d, 1);
                v[(j, 0)] = cr(1.0);
                v[(l, 0)] = phase;
                kets.push(v);
            }
        }
    }
    kets
}

pub fn standard_basis(d: usize) -> Result<StateBasis> {
    StateBasis::from_kets(standard_kets(d))
}

/// The nine qutrit states `|0⟩, |1⟩, |2⟩, |0⟩+|1⟩, |0⟩+|2⟩, |1⟩+|2⟩,
/// |0⟩+i|1⟩, |0⟩+i|2⟩, |1⟩+i|2⟩` (normalized), with ket weights 1 or 2.
pub fn qutrit_basis() -> StateBasis {
    standard_basis(3).expect("the qutrit basis is well conditioned")
}

/// `W = Σ γ_{x,y} ξˣ ⊗ ζʸ` with real `γ`, unique for spanning bases.
#[derive(Clone, Debug)]
pub struct ProductDecomposition {
    pub basis_a: StateBasis,
    pub basis_b: StateBasis,
    /// Coefficients over the normalized density operators.
    pub gamma: RealMatrix,
    /// Max-norm reconstruction error of the solved system.
    pub residual: f64,
    /// Condition number of the d⁴ × d⁴ coefficient system.
    pub condition: f64,
}

impl ProductDecomposition {
    /// Coefficients over the unnormalized operators `|kˣ⟩⟨kˣ| ⊗ |kʸ⟩⟨kʸ|`
    /// built from the kets the bases were defined with:
    /// `γ_{x,y} / (w_x w_y)`.
    pub fn gamma_kets(&self) -> RealMatrix {
        let mut g = self.gamma.clone();
        for x in 0..g.rows() {
            for y in 0..g.cols() {
                g[(x, y)] /= self.basis_a.weights[x] * self.basis_b.weights[y];
            }
        }
        g
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        reconstruct(&self.gamma, &self.basis_a, &self.basis_b)
    }

    pub fn d(&self) -> usize {
        self.basis_a.d
    }
}

fn reconstruct(gamma: &RealMatrix, a: &StateBasis, b: &StateBasis) -> ComplexMatrix {
    let n = a.d * b.d;
    let mut out = ComplexMatrix::zeros(n, n);
    for (x, xi) in a.states.iter().enumerate() {
        for (y, zeta) in b.states.iter().enumerate() {
            let g = gamma[(x, y)];
            if g != 0.0 {
                out = &out + &kron(xi, zeta).scale_real(g);
            }
        }
    }
    out
}

/// Isometric real coordinates of a Hermitian matrix.
pub fn hermitian_coords(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut out = Vec::with_capacity(n * n);
    out.extend((0..n).map(|i| m[(i, i)].re));
    let r2 = sqrt(2.0);
    for i in 0..n {
        for j in i + 1..n {
            out.push(r2 * m[(i, j)].re);
            out.push(r2 * m[(i, j)].im);
        }
    }
    out
}

/// Expands any Hermitian operator on `C^d_a ⊗ C^d_b` over `basis_a ⊗ basis_b`.
pub fn decompose_operator(
    w: &ComplexMatrix,
    basis_a: &StateBasis,
    basis_b: &StateBasis,
) -> Result<ProductDecomposition> {
    let n = basis_a.d * basis_b.d;
    if !w.is_square() || w.rows() != n {
        return Err(dim_err!(
            "operator must be {n}x{n} for bases on C^{} and C^{}, got {}x{}",
            basis_a.d,
            basis_b.d,
            w.rows(),
            w.cols()
        ));
    }
    let herr = w.hermiticity_error();
    if herr > DEFAULT_TOL {
        return Err(Error::NotHermitian(herr));
    }
    // The coordinate map is an isometry, so AᵀA is the Gram matrix of the
    // product basis, G_a ⊗ G_b, and cond(A)² = cond(G_a)·cond(G_b).
    let condition = sqrt(basis_a.condition * basis_b.condition);
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let (na, nb) = (basis_a.len(), basis_b.len());
    let unknowns = na * nb;
    let mut system = RealMatrix::zeros(n * n, unknowns);
    for x in 0..na {
        for y in 0..nb {
            let col = hermitian_coords(&kron(&basis_a.states[x], &basis_b.states[y]));
            for (row, v) in col.into_iter().enumerate() {
                system[(row, x * nb + y)] = v;
            }
        }
    }
    let rhs = hermitian_coords(&w.hermitian_part());
    let solution = system.solve(&rhs)?;
    let gamma = RealMatrix::from_vec(na, nb, solution)?;
    let residual = reconstruct(&gamma, basis_a, basis_b).max_abs_diff(w);
    Ok(ProductDecomposition {
        basis_a: basis_a.clone(),
        basis_b: basis_b.clone(),
        gamma,
        residual,
        condition,
    })
}

pub fn decompose_witness(
    w: &Witness,
    basis_a: &StateBasis,
    basis_b: &StateBasis,
) -> Result<ProductDecomposition> {
    if basis_a.d != w.d() || basis_b.d != w.d() {
        return Err(dim_err!(
            "witness on C^{0} ⊗ C^{0} needs bases of dimension {0}, got {1} and {2}",
            w.d(),
            basis_a.d,
            basis_b.d
        ));
    }
    decompose_operator(w.matrix(), basis_a, basis_b)
}

/// Game inputs `ψˣ = (ξˣ)ᵀ`, `φʸ = (ζʸ)ᵀ` (computational-basis transposes).
pub fn game_inputs_from_decomposition(pd: &ProductDecomposition) -> (Vec<ComplexMatrix>, Vec<ComplexMatrix>) {
    (
        pd.basis_a.states.iter().map(ComplexMatrix::transpose).collect(),
        pd.basis_b.states.iter().map(ComplexMatrix::transpose).collect(),
    )
}

/// State vector of a pure density matrix, with its first non-negligible
/// amplitude made real and positive.
pub fn pure_state_vector(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_pure(rho)?;
    let eig = eig_hermitian(rho)?;
    Ok(normalize_phase(&eig.vectors.col(0)))
}

/// Fixes the global phase so the first amplitude above 1e-12 is real positive.
pub fn normalize_phase(v: &ComplexMatrix) -> ComplexMatrix {
    match v.data().iter().find(|z| z.norm() > 1e-12) {
        Some(&z) => v.scale(z.conj() / z.norm()),
        None => v.clone(),
    }
}

/// Preparation unitaries `U` with `U|0⟩ = |ψ⟩` for each pure state. The
/// remaining columns come from Gram–Schmidt on the computational basis, in
/// order.
pub fn prep_unitaries(states: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    states
        .iter()
        .map(|rho| {
            let psi = pure_state_vector(rho)?;
            let d = psi.rows();
            let mut cols = vec![psi];
            for e in 0..d {
                if cols.len() == d {
                    break;
                }
                let mut w = ComplexMatrix::basis_ket(d, e);
                for _ in 0..2 {
                    for q in &cols {
                        let p = q.inner(&w);
                        w = &w - &q.scale(p);
                    }
                }
                let nrm = w.norm();
                if nrm > 1e-8 {
                    cols.push(w.scale_real(1.0 / nrm));
                }
            }
            let mut u = ComplexMatrix::zeros(d, d);
            for (j, col) in cols.iter().enumerate() {
                u.set_col(j, col);
            }
            Ok(u)
        })
        .collect()
}
