//! Seeded random matrices, states and isometries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, qr, ComplexMatrix};

/// Deterministic generator used everywhere in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`.
pub fn seeded_stream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix with i.i.d. standard complex Gaussian entries (E|z|² = 1).
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re * s, im * s)
        })
        .collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("shape matches")
}

/// Haar-distributed isometry `C^cols → C^rows` (rows ≥ cols).
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols, "an isometry C^{cols} -> C^{rows} needs rows >= cols");
    loop {
        let g = gaussian_matrix(rng, rows, cols);
        // Rank deficiency has probability zero; retry if it happens numerically.
        if let Ok((q, _)) = qr(&g) {
            return q;
        }
    }
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    haar_isometry(rng, d, d)
}

/// Haar-random unit column vector.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let v = gaussian_matrix(rng, d, 1);
    let n = v.norm();
    v.scale_real(1.0 / n)
}

/// Random full-rank density matrix `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, d, d);
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    m.scale_real(1.0 / t)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    gaussian_matrix(rng, d, d).hermitian_part()
}

/// Pure state on `C^d_a ⊗ C^d_b` with Schmidt rank exactly `k`: random
/// positive coefficients on random orthonormal k-frames.
pub fn random_schmidt_rank_state<R: Rng + ?Sized>(rng: &mut R, d_a: usize, d_b: usize, k: usize) -> ComplexMatrix {
    assert!(k >= 1 && k <= d_a.min(d_b));
    let u = haar_isometry(rng, d_a, k);
    let v = haar_isometry(rng, d_b, k);
    let weights: alloc::vec::Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
    let norm = libm::sqrt(weights.iter().map(|w| w * w).sum::<f64>());
    let mut psi = ComplexMatrix::zeros(d_a * d_b, 1);
    for (i, w) in weights.iter().enumerate() {
        let term = crate::linalg::kron(&u.col(i), &v.col(i)).scale_real(w / norm);
        psi = &psi + &term;
    }
    psi
}
