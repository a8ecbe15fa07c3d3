//! Dense complex linear algebra and multipartite bookkeeping.
//!
//! All matrices are stored densely in row-major order. For tensor products
//! the leftmost factor is the slowest-varying index: in `kron(a, b)` the
//! entry `(i_a * d_b + i_b, j_a * d_b + j_b)` equals `a[i_a, j_a] * b[i_b, j_b]`.
//! Every subsystem label in the crate (reference/output of a Choi operator,
//! A/B wires of the circuit) follows this convention.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{dim_err, Error, Result};
use crate::C64;

/// Default tolerance for Hermiticity, unitarity and positivity predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
fn cabs(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(dim_err!("matrix dimensions must be positive, got {rows}x{cols}"));
        }
        if data.len() != rows * cols {
            return Err(dim_err!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries. Panics on a length mismatch.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| cr(x)).collect(),
        }
    }

    /// Column vector.
    pub fn column(entries: Vec<C64>) -> Self {
        let n = entries.len();
        Self::from_vec(n, 1, entries).expect("non-empty column")
    }

    /// Computational basis ket `|i⟩` in dimension `d`.
    pub fn basis_ket(d: usize, i: usize) -> Self {
        let mut v = Self::zeros(d, 1);
        v.data[i] = cr(1.0);
        v
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = cr(x);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, j: usize) -> Self {
        Self::column((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn set_col(&mut self, j: usize, v: &ComplexMatrix) {
        assert_eq!(v.rows, self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v.data[i];
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(cr(s))
    }

    /// `Tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = cr(0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// `⟨self|other⟩` for column vectors.
    pub fn inner(&self, other: &ComplexMatrix) -> C64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|&z| cabs(z)).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| cabs(a - b))
            .fold(0.0, f64::max)
    }

    /// `|v⟩⟨v|` for a column vector.
    pub fn projector(&self) -> Self {
        outer(self, self)
    }

    /// Largest entry of `|M − M†|`.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut err: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                err = err.max(cabs(self[(i, j)] - self[(j, i)].conj()));
            }
        }
        err
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = eig_hermitian(self)?;
        Ok(*eig.values.last().expect("non-empty spectrum"))
    }

    pub fn is_positive(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Reshape a `da·db` vector into its `da × db` coefficient matrix.
    pub fn reshape(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows * cols != self.data.len() {
            return Err(dim_err!(
                "cannot reshape {} entries into {rows}x{cols}",
                self.data.len()
            ));
        }
        Self::from_vec(rows, cols, self.data.clone())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matrix product shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// `|a⟩⟨b|` for column vectors.
pub fn outer(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (n, m) = (a.data.len(), b.data.len());
    let mut out = ComplexMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            out.data[i * m + j] = a.data[i] * b.data[j].conj();
        }
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let x = a[(ia, ja)];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for ib in 0..b.rows {
                let base = (ia * b.rows + ib) * cols + ja * b.cols;
                for jb in 0..b.cols {
                    out.data[base + jb] = x * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// `Tr[(a ⊗ b) m]` without forming the Kronecker product.
pub fn product_trace(a: &ComplexMatrix, b: &ComplexMatrix, m: &ComplexMatrix) -> C64 {
    let (da, db) = (a.rows, b.rows);
    assert!(a.is_square() && b.is_square() && m.rows == da * db && m.cols == da * db);
    let mut acc = cr(0.0);
    for i in 0..da {
        for ip in 0..da {
            let x = a[(i, ip)];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for o in 0..db {
                for op in 0..db {
                    acc += x * b[(o, op)] * m[(ip * db + op, i * db + o)];
                }
            }
        }
    }
    acc
}

/// Ordered subsystem dimensions of a multipartite operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimSpec {
    factors: Vec<usize>,
}

impl DimSpec {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "subsystem dimensions must be positive, got {factors:?}"
            )));
        }
        Ok(Self { factors })
    }

    pub fn bipartite(da: usize, db: usize) -> Result<Self> {
        Self::new(vec![da, db])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn total(&self) -> usize {
        self.factors.iter().product()
    }

    fn check(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() {
            return Err(dim_err!("expected a square matrix, got {}x{}", m.rows, m.cols));
        }
        if m.rows != self.total() {
            return Err(dim_err!(
                "subsystem dimensions {:?} multiply to {}, matrix is {}x{}",
                self.factors,
                self.total(),
                m.rows,
                m.cols
            ));
        }
        Ok(())
    }

    /// Splits a flat index into per-subsystem digits (leftmost slowest).
    fn digits(&self, mut idx: usize, out: &mut [usize]) {
        for (slot, &f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = idx % f;
            idx /= f;
        }
    }
}

/// Reduced operator on the subsystems listed in `keep` (any order; output
/// keeps the original relative ordering).
pub fn partial_trace(m: &ComplexMatrix, dims: &DimSpec, keep: &[usize]) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let n = dims.factors.len();
    let mut kept = vec![false; n];
    for &k in keep {
        if k >= n {
            return Err(Error::IndexOutOfRange(alloc::format!(
                "subsystem {k} of a {n}-partite operator"
            )));
        }
        kept[k] = true;
    }
    let out_dim: usize = (0..n).filter(|&s| kept[s]).map(|s| dims.factors[s]).product();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    let total = dims.total();
    let mut ri = vec![0usize; n];
    let mut ci = vec![0usize; n];
    for i in 0..total {
        dims.digits(i, &mut ri);
        for j in 0..total {
            dims.digits(j, &mut ci);
            if (0..n).any(|s| !kept[s] && ri[s] != ci[s]) {
                continue;
            }
            let (mut oi, mut oj) = (0, 0);
            for s in (0..n).filter(|&s| kept[s]) {
                oi = oi * dims.factors[s] + ri[s];
                oj = oj * dims.factors[s] + ci[s];
            }
            out[(oi, oj)] += m[(i, j)];
        }
    }
    Ok(out)
}

/// Transpose on one tensor factor, in the computational basis.
pub fn partial_transpose(m: &ComplexMatrix, dims: &DimSpec, subsystem: usize) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let n = dims.factors.len();
    if subsystem >= n {
        return Err(Error::IndexOutOfRange(alloc::format!(
            "subsystem {subsystem} of a {n}-partite operator"
        )));
    }
    // Stride of the chosen factor in the flat index.
    let stride: usize = dims.factors[subsystem + 1..].iter().product();
    let f = dims.factors[subsystem];
    let total = dims.total();
    let mut out = ComplexMatrix::zeros(total, total);
    for i in 0..total {
        let di = (i / stride) % f;
        for j in 0..total {
            let dj = (j / stride) % f;
            let ni = i - di * stride + dj * stride;
            let nj = j - dj * stride + di * stride;
            out[(ni, nj)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Spectrum and eigenvectors of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] *= self.values[j];
            }
        }
        &scaled * &self.vectors.adjoint()
    }

    /// `f(M) = V f(Λ) V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mapped = EigenDecomposition {
            values: self.values.iter().map(|&x| f(x)).collect(),
            vectors: self.vectors.clone(),
        };
        mapped.reconstruct()
    }
}

/// 2×2 unitary `[[g00, g01], [g10, g11]]` that diagonalizes the Hermitian
/// block `[[app, apq], [conj(apq), aqq]]` when applied as `G† A G`.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> [C64; 4] {
    let mag = cabs(apq);
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + sqrt(1.0 + tau * tau))
    };
    let cs = 1.0 / sqrt(1.0 + t * t);
    let sn = t * cs;
    // G = diag(1, conj(phase)) · [[c, s], [-s, c]]
    [cr(cs), cr(sn), -phase.conj() * sn, phase.conj() * cs]
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(dim_err!("eigendecomposition needs a square matrix, got {}x{}", m.rows, m.cols));
    }
    let herr = m.hermiticity_error();
    if herr > DEFAULT_TOL * m.max_norm().max(1.0) {
        return Err(Error::NotHermitian(herr));
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if sqrt(off) <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if cabs(apq) <= 1e-300 {
                    continue;
                }
                let g = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, apq);
                // A <- A G (columns p, q)
                for k in 0..n {
                    let (xp, xq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = xp * g[0] + xq * g[2];
                    a[(k, q)] = xp * g[1] + xq * g[3];
                }
                // A <- G† A (rows p, q)
                for k in 0..n {
                    let (xp, xq) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = g[0].conj() * xp + g[2].conj() * xq;
                    a[(q, k)] = g[1].conj() * xp + g[3].conj() * xq;
                }
                a[(p, q)] = cr(0.0);
                a[(q, p)] = cr(0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for k in 0..n {
                    let (xp, xq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = xp * g[0] + xq * g[2];
                    v[(k, q)] = xp * g[1] + xq * g[3];
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Thin singular value decomposition `m = u · diag(s) · v†`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Singular values, descending; `min(rows, cols)` of them.
    pub singular_values: Vec<f64>,
    /// `rows × r`, orthonormal columns.
    pub u: ComplexMatrix,
    /// `cols × r`, orthonormal columns.
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows {
            for j in 0..us.cols {
                us[(i, j)] *= self.singular_values[j];
            }
        }
        &us * &self.v.adjoint()
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(m: &ComplexMatrix) -> Svd {
    if m.rows < m.cols {
        let t = svd(&m.adjoint());
        return Svd {
            singular_values: t.singular_values,
            u: t.v,
            v: t.u,
        };
    }
    let (rows, n) = (m.rows, m.cols);
    let mut u = m.clone();
    let mut v = ComplexMatrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, cr(0.0));
                for k in 0..rows {
                    let (up, uq) = (u[(k, p)], u[(k, q)]);
                    alpha += up.norm_sqr();
                    beta += uq.norm_sqr();
                    gamma += up.conj() * uq;
                }
                let g_abs = cabs(gamma);
                if g_abs <= 1e-15 * sqrt(alpha * beta) || g_abs <= 1e-300 {
                    continue;
                }
                rotated = true;
                let g = jacobi_rotation(alpha, beta, gamma);
                for k in 0..rows {
                    let (xp, xq) = (u[(k, p)], u[(k, q)]);
                    u[(k, p)] = xp * g[0] + xq * g[2];
                    u[(k, q)] = xp * g[1] + xq * g[3];
                }
                for k in 0..n {
                    let (xp, xq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = xp * g[0] + xq * g[2];
                    v[(k, q)] = xp * g[1] + xq * g[3];
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| u.col(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let top = norms[order[0]];

    let mut uo = ComplexMatrix::zeros(rows, n);
    let mut vo = ComplexMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        for k in 0..n {
            vo[(k, dst)] = v[(k, src)];
        }
        if s > 1e-14 * top && s > 1e-300 {
            for k in 0..rows {
                uo[(k, dst)] = u[(k, src)] / s;
            }
        } else {
            deficient.push(dst);
        }
    }
    if !deficient.is_empty() {
        complete_orthonormal_columns(&mut uo, &deficient);
    }
    Svd {
        singular_values,
        u: uo,
        v: vo,
    }
}

/// Fills the listed columns with unit vectors orthogonal to all other columns,
/// drawing candidates from the computational basis.
fn complete_orthonormal_columns(m: &mut ComplexMatrix, missing: &[usize]) {
    let rows = m.rows;
    let mut filled: Vec<usize> = (0..m.cols).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < rows, "cannot complete an orthonormal set");
            let mut w = ComplexMatrix::basis_ket(rows, candidate);
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let q = m.col(j);
                    let proj = q.inner(&w);
                    w = &w - &q.scale(proj);
                }
            }
            let nrm = w.norm();
            if nrm > 1e-8 {
                m.set_col(slot, &w.scale_real(1.0 / nrm));
                filled.push(slot);
                break;
            }
        }
    }
}

/// Modified Gram–Schmidt QR with one re-orthogonalization pass.
/// Returns `(q, r)` with `q` having orthonormal columns and `r` upper
/// triangular with a non-negative real diagonal. Fails on rank deficiency.
pub fn qr(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (rows, n) = (m.rows, m.cols);
    if rows < n {
        return Err(dim_err!("QR needs rows >= cols, got {rows}x{n}"));
    }
    let mut q = m.clone();
    let mut r = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut w = q.col(j);
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.col(i);
                let proj = qi.inner(&w);
                r[(i, j)] += proj;
                w = &w - &qi.scale(proj);
            }
        }
        let nrm = w.norm();
        if nrm <= 1e-12 * m.col(j).norm().max(1e-300) {
            return Err(Error::Singular);
        }
        r[(j, j)] = cr(nrm);
        q.set_col(j, &w.scale_real(1.0 / nrm));
    }
    Ok((q, r))
}

/// Dense real matrix, row-major. Used for the real linear systems of the
/// witness decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(dim_err!("{} entries for a {rows}x{cols} matrix", data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_real(self.rows, self.cols, &self.data)
    }

    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// 2-norm condition number from the singular values.
    pub fn condition_number(&self) -> f64 {
        let s = svd(&self.to_complex()).singular_values;
        let smin = *s.last().expect("non-empty");
        if smin <= 0.0 {
            f64::INFINITY
        } else {
            s[0] / smin
        }
    }

    /// Solves `self · x = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.rows;
        if self.cols != n || rhs.len() != n {
            return Err(dim_err!(
                "linear solve needs square system, got {}x{} with rhs {}",
                self.rows,
                self.cols,
                rhs.len()
            ));
        }
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .expect("non-empty range");
            if a[pivot * n + col].abs() <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(pivot * n + k, col * n + k);
                }
                b.swap(pivot, col);
            }
            let diag = a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / diag;
                if f == 0.0 {
                    continue;
                }
                a[i * n + col] = 0.0;
                for k in col + 1..n {
                    a[i * n + k] -= f * a[col * n + k];
                }
                b[i] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[i * n + k] * x[k]).sum();
            x[i] = (b[i] - s) / a[i * n + i];
        }
        Ok(x)
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}
