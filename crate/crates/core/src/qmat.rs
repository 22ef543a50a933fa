//! Dense complex linear algebra for the small operator spaces used here
//! (dimensions 2, 4, 8 and 16).
//!
//! Matrices are stored row-major. Hermitian eigendecomposition is delegated to
//! `nalgebra`; everything else is written out directly since the sizes are tiny.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnqiError};

/// Threshold on `max |M - M^†|` above which a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues with magnitude below this are clamped to zero before entropy or square roots.
pub const EIGEN_CLAMP: f64 = 1e-12;
/// Trace and positivity tolerance for density operators.
pub const DENSITY_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A square complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries; the length must be a perfect square.
    pub fn from_entries(entries: Vec<Complex64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() || dim == 0 {
            return Err(SnqiError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows<const N: usize>(rows: [[Complex64; N]; N]) -> Self {
        Self {
            dim: N,
            entries: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = c(d, 0.0);
        }
        m
    }

    /// `|v⟩⟨w|`.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        assert_eq!(
            v.len(),
            w.len(),
            "outer product of vectors with unequal length"
        );
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * w[j].conj();
            }
        }
        m
    }

    /// Projector `|v⟩⟨v|`.
    pub fn projector(v: &[Complex64]) -> Self {
        Self::outer(v, v)
    }

    /// Matrix unit `|i⟩⟨j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(c(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    /// Product `self · other`, panicking on a dimension mismatch.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    m.entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        m
    }

    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(SnqiError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(self.matmul(other))
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim, other.dim, "trace_product dimension mismatch");
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.entries[i * n + k] * other.entries[k * n + i];
            }
        }
        acc
    }

    /// Hilbert–Schmidt inner product `tr(self^† other)`.
    pub fn hs_inner(&self, other: &Self) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `⟨v| self |v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        let n = self.dim;
        self.entries
            .chunks(n)
            .zip(v)
            .map(|(row, vi)| vi.conj() * row.iter().zip(v).map(|(m, vj)| m * vj).sum::<Complex64>())
            .sum()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[i * n + j] * v[j]).sum())
            .collect()
    }

    /// `U · self · U^†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(M + M^†)/2`.
    pub fn symmetrized(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
    }

    /// Symmetrizes after checking the deviation is below [`HERMITIAN_TOL`].
    pub fn hermitize(&self) -> Result<Self> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(SnqiError::NotHermitian { deviation });
        }
        Ok(self.symmetrized())
    }

    /// Tensor product; `(a⊗b)[(i·db+k),(j·db+l)] = a[i,j]·b[k,l]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let n = da * db;
        let mut m = Self::zeros(n);
        for i in 0..da {
            for j in 0..da {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        m.entries[(i * db + k) * n + j * db + l] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    /// Traces out every subsystem not listed in `keep`. Subsystems are ordered
    /// with the first entry of `dims` as the most significant index.
    pub fn partial_trace(&self, keep: &[usize], dims: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.dim {
            return Err(SnqiError::DimensionMismatch {
                expected: self.dim,
                found: total,
            });
        }
        if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
            return Err(SnqiError::DimensionMismatch {
                expected: dims.len(),
                found: bad + 1,
            });
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        let traced: Vec<usize> = (0..dims.len())
            .filter(|i| !keep_sorted.contains(i))
            .collect();
        let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
        let out_dim: usize = kept_dims.iter().product();
        let traced_total: usize = traced_dims.iter().product();

        let mut out = Self::zeros(out_dim);
        let mut digits = vec![0usize; dims.len()];
        let compose = |digits: &[usize]| -> usize {
            digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
        };
        for a in 0..out_dim {
            for b in 0..out_dim {
                let mut acc = ZERO;
                for t in 0..traced_total {
                    scatter(&mut digits, &keep_sorted, &kept_dims, a);
                    scatter(&mut digits, &traced, &traced_dims, t);
                    let row = compose(&digits);
                    scatter(&mut digits, &keep_sorted, &kept_dims, b);
                    let col = compose(&digits);
                    acc += self[(row, col)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(out)
    }

    /// Reorders tensor factors: factor `k` of the result is factor `perm[k]` of `self`.
    pub fn permute_subsystems(&self, dims: &[usize], perm: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != self.dim || perm.len() != dims.len() {
            return Err(SnqiError::DimensionMismatch {
                expected: self.dim,
                found: total,
            });
        }
        let p = permutation_matrix(dims, perm)?;
        Ok(p.matmul(self).matmul(&p.transpose()))
    }

    pub fn eigh(&self) -> Result<Spectrum> {
        let h = self.hermitize()?;
        let n = self.dim;
        let dm = DMatrix::from_row_slice(n, n, &h.entries);
        let eig = dm.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        Ok(Spectrum {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*self
            .eigenvalues()?
            .last()
            .expect("matrices have positive dimension"))
    }
}

fn scatter(digits: &mut [usize], positions: &[usize], radices: &[usize], mut value: usize) {
    for (&pos, &radix) in positions.iter().zip(radices).rev() {
        digits[pos] = value % radix;
        value /= radix;
    }
}

/// Permutation matrix `P` with `P (v_0 ⊗ … ⊗ v_{k-1}) = v_{perm[0]} ⊗ … ⊗ v_{perm[k-1]}`.
pub fn permutation_matrix(dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let mut seen = vec![false; dims.len()];
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(SnqiError::Degenerate(format!(
                "{perm:?} is not a permutation"
            )));
        }
        seen[p] = true;
    }
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut m = ComplexMatrix::zeros(total);
    let mut old_digits = vec![0usize; dims.len()];
    for idx in 0..total {
        let mut rem = idx;
        for k in (0..dims.len()).rev() {
            old_digits[k] = rem % dims[k];
            rem /= dims[k];
        }
        let new_idx = perm
            .iter()
            .zip(&new_dims)
            .fold(0, |acc, (&p, &n)| acc * n + old_digits[p]);
        m[(new_idx, idx)] = ONE;
    }
    Ok(m)
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-1.0)
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` belongs to `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<Complex64>>,
}

impl Spectrum {
    /// `Σ_k f(λ_k) |v_k⟩⟨v_k|`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut m = ComplexMatrix::zeros(n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let w = f(*lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += v[i] * v[j].conj() * w;
                }
            }
        }
        m
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// A validated density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let matrix = matrix.hermitize()?;
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > DENSITY_TOL {
            return Err(SnqiError::NotNormalized { trace });
        }
        let min_eigenvalue = matrix.min_eigenvalue()?;
        if min_eigenvalue < -DENSITY_TOL {
            return Err(SnqiError::NotPositive { min_eigenvalue });
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix known by construction to be a density operator; only
    /// Hermiticity is enforced.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_hermitian(HERMITIAN_TOL));
        Self {
            matrix: matrix.symmetrized(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// Born probability `tr(ρ E)` for a Hermitian effect.
    pub fn probability(&self, effect: &ComplexMatrix) -> f64 {
        self.matrix.trace_product(effect).re
    }
}

fn clamped_spectrum(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let eigenvalues = m.eigenvalues()?;
    let min = *eigenvalues.last().expect("non-empty spectrum");
    if min < -EIGEN_CLAMP {
        return Err(SnqiError::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(eigenvalues
        .into_iter()
        .map(|l| if l.abs() < EIGEN_CLAMP { 0.0 } else { l })
        .collect())
}

/// Shannon entropy in bits of a probability vector, with `0·log 0 = 0`.
pub fn shannon_entropy(probabilities: &[f64]) -> f64 {
    -probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Von Neumann entropy in bits.
pub fn vn_entropy(rho: &DensityOperator) -> Result<f64> {
    let spectrum = clamped_spectrum(rho.matrix())?;
    Ok(shannon_entropy(&spectrum).max(0.0))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
pub fn matrix_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spectrum = m.eigh()?;
    let min = *spectrum.eigenvalues.last().expect("non-empty spectrum");
    if min < -EIGEN_CLAMP {
        return Err(SnqiError::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(spectrum
        .reconstruct_with(|l| if l < EIGEN_CLAMP { 0.0 } else { l.sqrt() })
        .symmetrized())
}

/// Root fidelity `tr (ρ₁^{1/2} ρ₂ ρ₁^{1/2})^{1/2}`.
pub fn pairwise_fidelity(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(SnqiError::DimensionMismatch {
            expected: rho1.dim(),
            found: rho2.dim(),
        });
    }
    let s = matrix_sqrt(rho1.matrix())?;
    let inner = s.matmul(rho2.matrix()).matmul(&s).symmetrized();
    Ok(matrix_sqrt(&inner)?.trace().re)
}

pub mod pauli {
    //! Pauli matrices and qubit basis kets.
    use super::*;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }
    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]])
    }
    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]])
    }
    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_rows([[ONE, ZERO], [ZERO, -ONE]])
    }
    pub fn all() -> [ComplexMatrix; 3] {
        [x(), y(), z()]
    }
    /// `|0⟩⟨0|`
    pub fn proj0() -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&[1.0, 0.0])
    }
    /// `|1⟩⟨1|`
    pub fn proj1() -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&[0.0, 1.0])
    }
    /// `(1 + r·σ)` scaled by `scale`.
    pub fn bloch_operator(scale: f64, r: [f64; 3]) -> ComplexMatrix {
        ComplexMatrix::from_rows([
            [c(scale * (1.0 + r[2]), 0.0), c(scale * r[0], -scale * r[1])],
            [c(scale * r[0], scale * r[1]), c(scale * (1.0 - r[2]), 0.0)],
        ])
    }
}

/// Hermitian matrix with entries drawn uniformly from the unit square before symmetrization.
pub fn random_hermitian(rng: &mut impl rand::Rng, dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    m.symmetrized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
        // exp(iH) via the spectral decomposition of a random Hermitian H
        let h = random_hermitian(rng, dim);
        let spec = h.eigh().unwrap();
        let mut u = ComplexMatrix::zeros(dim);
        for (l, v) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
            let phase = c(0.0, *l).exp();
            u = &u + &ComplexMatrix::projector(v).scale_c(phase);
        }
        u
    }

    #[test]
    fn kron_examples() {
        let i4 = pauli::identity().kron(&pauli::identity());
        assert_eq!(i4, ComplexMatrix::identity(4));
        let m = pauli::z().kron(&pauli::proj0());
        assert_eq!(m, ComplexMatrix::from_real_diag(&[1.0, 0.0, -1.0, 0.0]));
        let rz = pauli::proj0();
        assert_eq!(
            rz.kron(&rz),
            ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 0.0])
        );
    }

    #[test]
    fn kron_index_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 4);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 8);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..4 {
                    for q in 0..4 {
                        assert_eq!(k[(i * 4 + p, j * 4 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 2);
        let ab = a.kron(&b);
        let first = ab.partial_trace(&[0], &[2, 2]).unwrap();
        assert!(first.max_abs_diff(&a.scale_c(b.trace())) < 1e-12);
        let second = ab.partial_trace(&[1], &[2, 2]).unwrap();
        assert!(second.max_abs_diff(&b.scale_c(a.trace())) < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = [ZERO, c(s, 0.0), c(-s, 0.0), ZERO];
        let reduced = ComplexMatrix::projector(&singlet)
            .partial_trace(&[0], &[2, 2])
            .unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-12);
    }

    #[test]
    fn partial_trace_three_factors_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_hermitian(&mut rng, 8);
        for keep in [&[0usize][..], &[1], &[2], &[0, 2], &[1, 2]] {
            let r = m.partial_trace(keep, &[2, 2, 2]).unwrap();
            assert!((r.trace() - m.trace()).norm() < 1e-12);
        }
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 2);
        let d = random_hermitian(&mut rng, 2);
        let abd = a.kron(&b).kron(&d);
        let ad = abd.partial_trace(&[0, 2], &[2, 2, 2]).unwrap();
        assert!(ad.max_abs_diff(&a.kron(&d).scale_c(b.trace())) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            m.partial_trace(&[0], &[2, 3]),
            Err(SnqiError::DimensionMismatch { .. })
        ));
        assert!(m.partial_trace(&[2], &[2, 2]).is_err());
    }

    #[test]
    fn permutation_swaps_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 4);
        let swapped = a.kron(&b).permute_subsystems(&[2, 4], &[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&b.kron(&a)) < 1e-14);
    }

    #[test]
    fn eigendecomposition_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for dim in [2, 4, 8, 16] {
            let m = random_hermitian(&mut rng, dim);
            let spec = m.eigh().unwrap();
            assert!(spec.reconstruct().max_abs_diff(&m) < 1e-10);
            assert!(spec.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            for (a, va) in spec.eigenvectors.iter().enumerate() {
                for (b, vb) in spec.eigenvectors.iter().enumerate() {
                    let g: Complex64 = va.iter().zip(vb).map(|(x, y)| x.conj() * y).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((g - expected).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn entropy_examples() {
        let mixed = DensityOperator::maximally_mixed(2);
        assert!((vn_entropy(&mixed).unwrap() - 1.0).abs() < 1e-12);
        let pure = DensityOperator::new(pauli::bloch_operator(0.5, [0.6, 0.0, 0.8])).unwrap();
        assert!(vn_entropy(&pure).unwrap().abs() < 1e-12);
        assert!((vn_entropy(&DensityOperator::maximally_mixed(16)).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for dim in [2, 4, 8] {
            let h = random_hermitian(&mut rng, dim);
            let rho_m = h.matmul(&h);
            let t = rho_m.trace().re;
            let rho = DensityOperator::new(rho_m.scale(1.0 / t)).unwrap();
            let u = random_unitary(&mut rng, dim);
            let rotated = DensityOperator::new(rho.matrix().conjugate_by(&u)).unwrap();
            let s0 = vn_entropy(&rho).unwrap();
            let s1 = vn_entropy(&rotated).unwrap();
            assert!((s0 - s1).abs() < 1e-10);
            assert!((0.0..=(dim as f64).log2() + 1e-12).contains(&s0));
        }
    }

    #[test]
    fn entropy_rejects_negative_spectrum() {
        let bad = ComplexMatrix::from_real_diag(&[1.1, -0.1]);
        assert!(DensityOperator::new(bad.clone()).is_err());
        let wrapped = DensityOperator { matrix: bad };
        assert!(matches!(
            vn_entropy(&wrapped),
            Err(SnqiError::NotPositive { .. })
        ));
    }

    #[test]
    fn density_operator_validation() {
        assert!(matches!(
            DensityOperator::new(ComplexMatrix::identity(2)),
            Err(SnqiError::NotNormalized { .. })
        ));
        let mut nh = ComplexMatrix::identity(2).scale(0.5);
        nh[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(
            DensityOperator::new(nh),
            Err(SnqiError::NotHermitian { .. })
        ));
    }

    #[test]
    fn sqrt_examples() {
        let i4 = ComplexMatrix::identity(4);
        assert!(matrix_sqrt(&i4).unwrap().max_abs_diff(&i4) < 1e-12);
        let d = ComplexMatrix::from_real_diag(&[4.0, 1.0]);
        assert!(
            matrix_sqrt(&d)
                .unwrap()
                .max_abs_diff(&ComplexMatrix::from_real_diag(&[2.0, 1.0]))
                < 1e-12
        );
        let proj = pauli::bloch_operator(0.5, [0.0, 0.6, 0.8]);
        assert!(matrix_sqrt(&proj).unwrap().max_abs_diff(&proj) < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for dim in [2, 4, 8, 16] {
            let h = random_hermitian(&mut rng, dim);
            let psd = h.matmul(&h);
            let r = matrix_sqrt(&psd).unwrap();
            assert!(r.matmul(&r).max_abs_diff(&psd) < 1e-10);
            assert!(r.min_eigenvalue().unwrap() > -1e-12);
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        assert!(matches!(
            matrix_sqrt(&pauli::z()),
            Err(SnqiError::NotPositive { .. })
        ));
    }
}
