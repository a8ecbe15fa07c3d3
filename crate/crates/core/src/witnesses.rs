//! Schmidt decompositions, Schmidt-number witnesses and the PPT extension.
//!
//! A witness `W` for class k satisfies `Tr[W σ] ≥ 0` for every state of
//! Schmidt number at most k. By the Choi characterization of
//! k-Schmidt-number-breaking channels, `Tr[W J] < 0` on a channel's Choi
//! operator proves that the channel is not k-SNB.

use alloc::format;
use alloc::vec::Vec;

use crate::channels::{max_entangled_projector, ChoiOperator};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{
    eig_hermitian, partial_transpose, svd, ComplexMatrix, DEFAULT_TOL,
};
use crate::random::{haar_isometry, seeded};

/// Relative cutoff below which a Schmidt coefficient counts as zero.
pub const SCHMIDT_RANK_TOL: f64 = 1e-8;

/// Default restart count for [`max_schmidt_k_overlap`].
pub const OVERLAP_RESTARTS: usize = 200;

/// Default alternating iterations per restart for [`max_schmidt_k_overlap`].
pub const OVERLAP_ITERATIONS: usize = 20;

/// Imaginary parts of witness expectation values above this are rejected.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    /// Non-negative on all states of Schmidt number at most `k`.
    SchmidtNumber { k: usize },
    /// Decomposable witness, non-negative on all PPT states.
    Npt,
}

/// Hermitian operator on `C^d ⊗ C^d` with its detection class.
#[derive(Clone, Debug)]
pub struct Witness {
    matrix: ComplexMatrix,
    kind: WitnessKind,
    d: usize,
}

impl Witness {
    pub fn new(matrix: ComplexMatrix, kind: WitnessKind, d: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != d * d {
            return Err(dim_err!(
                "witness on C^{d} ⊗ C^{d} must be {0}x{0}, got {1}x{2}",
                d * d,
                matrix.rows(),
                matrix.cols()
            ));
        }
        let herr = matrix.hermiticity_error();
        if herr > DEFAULT_TOL {
            return Err(Error::NotHermitian(herr));
        }
        if let WitnessKind::SchmidtNumber { k } = kind {
            if k < 1 {
                return Err(Error::InvalidParameter("witness class k must be >= 1".into()));
            }
        }
        Ok(Self { matrix, kind, d })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> WitnessKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `Tr[W J]`; see [`witness_value`].
    pub fn value(&self, j: &ChoiOperator) -> Result<f64> {
        witness_value(self, j)
    }

    /// `Tr[W ρ]` for an arbitrary bipartite operator.
    pub fn expectation(&self, rho: &ComplexMatrix) -> Result<f64> {
        if rho.rows() != self.matrix.rows() || rho.cols() != self.matrix.cols() {
            return Err(dim_err!(
                "witness is {0}x{0}, operator is {1}x{2}",
                self.matrix.rows(),
                rho.rows(),
                rho.cols()
            ));
        }
        let v = self.matrix.trace_product(rho);
        if v.im.abs() > IMAG_TOL * (1.0 + v.re.abs()) {
            return Err(Error::ComplexValue(v.im));
        }
        Ok(v.re)
    }
}

/// Schmidt decomposition `|ψ⟩ = Σᵢ sᵢ |uᵢ⟩|vᵢ⟩`, truncated to its rank.
#[derive(Clone, Debug)]
pub struct SchmidtData {
    /// Non-increasing, positive.
    pub coefficients: Vec<f64>,
    pub left: Vec<ComplexMatrix>,
    pub right: Vec<ComplexMatrix>,
    pub rank: usize,
}

impl SchmidtData {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (da, db) = (self.left[0].rows(), self.right[0].rows());
        let mut psi = ComplexMatrix::zeros(da * db, 1);
        for ((s, u), v) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            psi = &psi + &crate::linalg::kron(u, v).scale_real(*s);
        }
        psi
    }
}

pub fn schmidt_decompose(psi: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<SchmidtData> {
    if psi.cols() != 1 || psi.rows() != d_a * d_b {
        return Err(dim_err!(
            "state on C^{d_a} ⊗ C^{d_b} must be a {}-vector, got {}x{}",
            d_a * d_b,
            psi.rows(),
            psi.cols()
        ));
    }
    let dev = (psi.norm() - 1.0).abs();
    if dev > DEFAULT_TOL {
        return Err(Error::NotNormalized("state", dev));
    }
    // ψ = C as a d_a × d_b coefficient matrix; C = U S V† gives |vᵢ⟩ = conj(V col i).
    let f = svd(&psi.reshape(d_a, d_b)?);
    let top = f.singular_values[0];
    let rank = f
        .singular_values
        .iter()
        .take_while(|&&s| s > SCHMIDT_RANK_TOL * top)
        .count();
    Ok(SchmidtData {
        coefficients: f.singular_values[..rank].to_vec(),
        left: (0..rank).map(|i| f.u.col(i)).collect(),
        right: (0..rank).map(|i| f.v.col(i).conj()).collect(),
        rank,
    })
}

/// `I − (d/k) P_d`: the optimal Schmidt-number witness for class k.
/// The largest overlap of a Schmidt-rank-k state with `P_d` is `k/d`,
/// so the witness is non-negative exactly on that boundary.
pub fn optimal_sn_witness(d: usize, k: usize) -> Result<Witness> {
    if k < 1 || k >= d {
        return Err(Error::InvalidParameter(format!(
            "witness class must satisfy 1 <= k < d, got k = {k}, d = {d}"
        )));
    }
    let p = max_entangled_projector(d)?;
    let matrix = &ComplexMatrix::identity(d * d) - &p.scale_real(d as f64 / k as f64);
    Witness::new(matrix, WitnessKind::SchmidtNumber { k }, d)
}

/// `Tr[W J]`. Negative values certify that the channel behind `J` lies
/// outside the class the witness was built for.
pub fn witness_value(w: &Witness, j: &ChoiOperator) -> Result<f64> {
    if j.d_in() != w.d || j.d_out() != w.d {
        return Err(dim_err!(
            "witness acts on C^{0} ⊗ C^{0}, Choi operator on C^{1} ⊗ C^{2}",
            w.d,
            j.d_in(),
            j.d_out()
        ));
    }
    w.expectation(j.matrix())
}

/// Heuristic minimum of `Tr[W σ]` over pure states of Schmidt rank at most k.
///
/// Alternating minimization: with one Schmidt frame fixed to an orthonormal
/// basis, the best partner factor is the lowest eigenvector of a `dk × dk`
/// Hermitian matrix. Each half-step cannot increase the value. The result is
/// an upper bound on the true minimum; a value that is negative proves the
/// candidate is not a class-k witness, a non-negative value proves nothing.
pub fn max_schmidt_k_overlap(
    w: &ComplexMatrix,
    d: usize,
    k: usize,
    restarts: usize,
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    if !w.is_square() || w.rows() != d * d {
        return Err(dim_err!("operator must be {0}x{0}, got {1}x{2}", d * d, w.rows(), w.cols()));
    }
    let herr = w.hermiticity_error();
    if herr > DEFAULT_TOL {
        return Err(Error::NotHermitian(herr));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("Schmidt rank bound must be >= 1".into()));
    }
    let k = k.min(d);
    let mut rng = seeded(seed);
    let mut best = f64::INFINITY;
    for _ in 0..restarts.max(1) {
        let mut frame = haar_isometry(&mut rng, d, k);
        let mut on_left = false;
        let mut value = f64::INFINITY;
        for _ in 0..iterations.max(1) * 2 {
            let (v, factor) = best_partner(w, d, k, &frame, on_left)?;
            value = v;
            // The next step keeps the factor just found fixed.
            frame = svd(&factor).u;
            on_left = !on_left;
        }
        best = best.min(value);
    }
    Ok(best)
}

/// Minimizes over the free factor with `frame` (orthonormal, d × k) fixed on
/// the left (`frame_on_left`) or right tensor factor. Returns the minimum
/// value and the optimal free factor as a d × k matrix.
fn best_partner(
    w: &ComplexMatrix,
    d: usize,
    k: usize,
    frame: &ComplexMatrix,
    frame_on_left: bool,
) -> Result<(f64, ComplexMatrix)> {
    // ψ[(a, b)] = Σᵢ U[a, i] V[b, i]; the free factor enters linearly through L.
    let mut l = ComplexMatrix::zeros(d * d, d * k);
    for a in 0..d {
        for b in 0..d {
            for i in 0..k {
                let (free_row, coeff) = if frame_on_left { (b, frame[(a, i)]) } else { (a, frame[(b, i)]) };
                l[(a * d + b, free_row * k + i)] = coeff;
            }
        }
    }
    let h = &(&l.adjoint() * w) * &l;
    let eig = eig_hermitian(&h.hermitian_part())?;
    let last = eig.values.len() - 1;
    let mut factor = ComplexMatrix::zeros(d, k);
    for r in 0..d {
        for i in 0..k {
            factor[(r, i)] = eig.vectors[(r * k + i, last)];
        }
    }
    Ok((eig.values[last], factor))
}

/// PPT test on a Choi operator: `(is_ppt, min eigenvalue of J^{T_out})`.
pub fn is_ppt(j: &ChoiOperator) -> Result<(bool, f64)> {
    let pt = partial_transpose(j.matrix(), &j.dims(), 1)?;
    let min = pt.min_eigenvalue()?;
    Ok((min >= -DEFAULT_TOL, min))
}

/// Decomposable witness `(|η⟩⟨η|)^{T_out}` from the most negative eigenvector
/// `η` of `J^{T_out}`. Its value on `J` equals that eigenvalue, and it is
/// non-negative on every PPT operator.
pub fn npt_witness_from_choi(j: &ChoiOperator) -> Result<Witness> {
    if j.d_in() != j.d_out() {
        return Err(dim_err!(
            "witness construction needs equal input and output dimensions, got {} and {}",
            j.d_in(),
            j.d_out()
        ));
    }
    let dims = j.dims();
    let eig = eig_hermitian(&partial_transpose(j.matrix(), &dims, 1)?)?;
    let last = eig.values.len() - 1;
    let min = eig.values[last];
    if min >= -DEFAULT_TOL {
        return Err(Error::PptInput(min));
    }
    let eta = eig.vectors.col(last);
    let matrix = partial_transpose(&eta.projector(), &dims, 1)?;
    Witness::new(matrix, WitnessKind::Npt, j.d_in())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephasing, depolarizing, factor_through_k, max_entangled, KrausChannel};
    use crate::linalg::{cr, sqrt};

    fn ket(d: usize, amps: &[(usize, f64)]) -> ComplexMatrix {
        let mut v = ComplexMatrix::zeros(d, 1);
        for &(i, a) in amps {
            v[(i, 0)] = cr(a);
        }
        v
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt_decompose(&ket(4, &[(1, 1.0)]), 2, 2).unwrap();
        assert_eq!(s.rank, 1);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-15);

        let s = schmidt_decompose(&max_entangled(3).unwrap(), 3, 3).unwrap();
        assert_eq!(s.rank, 3);
        for x in &s.coefficients {
            assert!((x - 1.0 / sqrt(3.0)).abs() < 1e-14);
        }

        let r5 = sqrt(5.0);
        let psi = ket(4, &[(0, 2.0 / r5), (3, 1.0 / r5)]);
        let s = schmidt_decompose(&psi, 2, 2).unwrap();
        assert_eq!(s.rank, 2);
        assert!((s.coefficients[0] - 2.0 / r5).abs() < 1e-14);
        assert!((s.coefficients[1] - 1.0 / r5).abs() < 1e-14);
        assert!(s.reconstruct().max_abs_diff(&psi) < 1e-14);
    }

    #[test]
    fn schmidt_reconstructs_random_states() {
        let mut rng = seeded(4);
        for (da, db, k) in [(3, 3, 2), (2, 5, 2), (4, 3, 3), (3, 3, 1)] {
            let psi = crate::random::random_schmidt_rank_state(&mut rng, da, db, k);
            let s = schmidt_decompose(&psi, da, db).unwrap();
            assert_eq!(s.rank, k);
            assert!(s.rank <= da.min(db));
            assert!((s.coefficients.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(s.reconstruct().max_abs_diff(&psi) < 1e-9);
        }
    }

    #[test]
    fn schmidt_rejects_bad_input() {
        assert!(matches!(
            schmidt_decompose(&ket(4, &[(0, 2.0)]), 2, 2),
            Err(Error::NotNormalized(..))
        ));
        assert!(schmidt_decompose(&ket(4, &[(0, 1.0)]), 2, 3).is_err());
    }

    #[test]
    fn optimal_witness_examples() {
        let w = optimal_sn_witness(3, 2).unwrap();
        let p = max_entangled_projector(3).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((w.matrix()[(i, j)] - cr(id - 1.5 * p[(i, j)].re)).norm() < 1e-15);
            }
        }
        let w1 = optimal_sn_witness(3, 1).unwrap();
        assert!(w1.matrix().max_abs_diff(&(&ComplexMatrix::identity(9) - &p.scale_real(3.0))) < 1e-15);
        let w = optimal_sn_witness(2, 1).unwrap();
        let p2 = max_entangled_projector(2).unwrap();
        assert!((w.expectation(&p2).unwrap() + 1.0).abs() < 1e-14);
        assert!(optimal_sn_witness(3, 3).is_err());
        assert!(optimal_sn_witness(3, 0).is_err());
    }

    #[test]
    fn witness_values_on_noise_families() {
        let w2 = optimal_sn_witness(3, 2).unwrap();
        let w1 = optimal_sn_witness(3, 1).unwrap();
        let id = KrausChannel::identity(3).to_choi();
        assert!((w2.value(&id).unwrap() + 0.5).abs() < 1e-14);
        for step in 0..=10 {
            let lambda = step as f64 / 10.0;
            let dep = depolarizing(3, lambda).unwrap().to_choi();
            let expect = -(1.0 - lambda) / 2.0 + 5.0 * lambda / 6.0;
            assert!((w2.value(&dep).unwrap() - expect).abs() < 1e-12);
            let deph = dephasing(3, lambda).unwrap().to_choi();
            assert!((w1.value(&deph).unwrap() - (2.0 * lambda - 2.0)).abs() < 1e-12);
        }
        let zero = depolarizing(3, 0.375).unwrap().to_choi();
        assert!(w2.value(&zero).unwrap().abs() < 1e-12);
        let wrong = KrausChannel::identity(2).to_choi();
        assert!(w2.value(&wrong).is_err());
    }

    #[test]
    fn overlap_optimizer_examples() {
        let w2 = optimal_sn_witness(3, 2).unwrap();
        let m = max_schmidt_k_overlap(w2.matrix(), 3, 2, 200, 20, 1).unwrap();
        assert!(m >= -1e-7, "{m}");
        assert!(m < 1e-6, "boundary is attained: {m}");
        let w1 = optimal_sn_witness(3, 1).unwrap();
        let m = max_schmidt_k_overlap(w1.matrix(), 3, 1, 200, 20, 2).unwrap();
        assert!((-1e-7..1e-6).contains(&m), "{m}");
        // A class-1 witness is not a class-2 witness.
        let m = max_schmidt_k_overlap(w1.matrix(), 3, 2, 50, 20, 3).unwrap();
        assert!((m + 1.0).abs() < 1e-6, "{m}");
        let minus_p = max_entangled_projector(3).unwrap().scale_real(-1.0);
        let m = max_schmidt_k_overlap(&minus_p, 3, 3, 5, 20, 4).unwrap();
        assert!((m + 1.0).abs() < 1e-10);
    }

    #[test]
    fn ppt_examples() {
        let (ppt, min) = is_ppt(&KrausChannel::identity(3).to_choi()).unwrap();
        assert!(!ppt);
        assert!((min + 1.0 / 3.0).abs() < 1e-14);
        let (ppt, min) = is_ppt(&depolarizing(3, 1.0).unwrap().to_choi()).unwrap();
        assert!(ppt);
        assert!((min - 1.0 / 9.0).abs() < 1e-14);
        for step in 0..=20 {
            let lambda = step as f64 / 20.0;
            let (ppt, min) = is_ppt(&depolarizing(3, lambda).unwrap().to_choi()).unwrap();
            assert!((min - (lambda / 9.0 - (1.0 - lambda) / 3.0)).abs() < 1e-13);
            assert_eq!(ppt, lambda >= 0.75);
        }
    }

    #[test]
    fn npt_witness_examples() {
        let id = KrausChannel::identity(3).to_choi();
        let w = npt_witness_from_choi(&id).unwrap();
        assert_eq!(w.kind(), WitnessKind::Npt);
        assert!((w.value(&id).unwrap() + 1.0 / 3.0).abs() < 1e-13);

        let half = depolarizing(3, 0.5).unwrap().to_choi();
        let w = npt_witness_from_choi(&half).unwrap();
        assert!((w.value(&half).unwrap() - (0.5 / 9.0 - 0.5 / 3.0)).abs() < 1e-13);
        // non-negative on PPT operators, e.g. every factor-through-1 channel
        for seed in 0..10 {
            let eb = factor_through_k(3, 1, seed).unwrap().to_choi();
            assert!(w.value(&eb).unwrap() >= -1e-9);
        }
        let ppt = depolarizing(3, 0.8).unwrap().to_choi();
        assert!(matches!(npt_witness_from_choi(&ppt), Err(Error::PptInput(_))));
    }
}
