//! Dense symmetric matrix kernels.
//!
//! [`SymMatrix`] carries the cost matrix, the primal and dual matrices and every
//! intermediate of the solvers. Symmetry is enforced at construction by
//! averaging with the transpose, so `S[(i, j)] == S[(j, i)]` holds bit-for-bit.

use std::ops::{Add, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Result, SdpError};

/// Accuracy target of the spectral decomposition.
pub const EIG_TOL: f64 = 1e-10;

/// Default relative threshold for counting an eigenvalue as nonzero.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Norm of the random column returned when factorizing a zero matrix.
pub const ZERO_FACTOR_NORM: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be positive");
        Self {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be positive");
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "matrix order must be positive");
        Self {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    /// Builds a matrix from the upper triangle produced by `f(i, j)` with `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "matrix order must be positive");
        let mut data = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Self { data }
    }

    /// Wraps a dense square matrix, replacing it by `(S + S^T) / 2`.
    pub fn from_dense(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(SdpError::InvalidInput(
                "matrix order must be positive".into(),
            ));
        }
        check_dim("SymMatrix::from_dense (square)", m.nrows(), m.ncols())?;
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in 0..j {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { data: m }
    }

    pub fn order(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[(i, j)] = value;
        self.data[(j, i)] = value;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// `trace(self * other)`.
    pub fn inner(&self, other: &SymMatrix) -> Result<f64> {
        check_dim("inner", self.order(), other.order())?;
        Ok(self.data.dot(&other.data))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        Self {
            data: &self.data * alpha,
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &SymMatrix) {
        self.data.zip_apply(&other.data, |a, b| *a += alpha * b);
    }

    /// Frobenius norm of the (generally nonsymmetric) product `self * other`.
    pub fn product_norm(&self, other: &SymMatrix) -> f64 {
        (&self.data * &other.data).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.order(), rhs.order(), "order mismatch in add");
        SymMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.order(), rhs.order(), "order mismatch in sub");
        SymMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

/// `trace(a * b)`; see [`SymMatrix::inner`].
pub fn inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    a.inner(b)
}

/// Eigenvalues sorted ascending, with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn of(s: &SymMatrix) -> Result<Self> {
        if !s.is_finite() {
            return Err(SdpError::Numeric {
                op: "eigendecomposition",
                detail: format!("non-finite entry in {0}x{0} input", s.order()),
            });
        }
        let n = s.order();
        let eig = s
            .data
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| SdpError::Numeric {
                op: "eigendecomposition",
                detail: format!(
                    "QR iteration did not converge (n = {n}, |S| = {:e})",
                    s.norm()
                ),
            })?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.order() - 1]
    }

    /// `Q diag(lambda) Q^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        self.weighted_outer(0..self.order(), |l| l)
    }

    /// Number of leading (negative) eigenvalues.
    fn negative_count(&self) -> usize {
        self.eigenvalues.iter().take_while(|&&l| l < 0.0).count()
    }

    /// Index of the first strictly positive eigenvalue.
    fn positive_start(&self) -> usize {
        self.order()
            - self
                .eigenvalues
                .iter()
                .rev()
                .take_while(|&&l| l > 0.0)
                .count()
    }

    fn weighted_outer(&self, cols: std::ops::Range<usize>, w: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.order();
        if cols.is_empty() {
            return SymMatrix::zeros(n);
        }
        let q = self.eigenvectors.columns(cols.start, cols.len());
        let mut scaled = q.clone_owned();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= w(self.eigenvalues[cols.start + k]);
        }
        SymMatrix::symmetrized(scaled * q.transpose())
    }

    /// `((S)_+, (S)_-)`, both assembled from the eigenpairs of their own sign.
    pub fn split(&self) -> (SymMatrix, SymMatrix) {
        let plus = self.weighted_outer(self.positive_start()..self.order(), |l| l);
        let minus = self.weighted_outer(0..self.negative_count(), |l| l);
        (plus, minus)
    }

    /// Factor of the PSD matrix `-(S)_-`, i.e. columns `q_i sqrt(-lambda_i)` for negative
    /// eigenvalues above the rank threshold.
    pub fn negative_part_factor<R: Rng + ?Sized>(&self, rank_tol: f64, rng: &mut R) -> Factor {
        let pairs: Vec<(usize, f64)> = (0..self.negative_count())
            .map(|i| (i, -self.eigenvalues[i]))
            .collect();
        self.factor_from_pairs(&pairs, rank_tol, rng)
    }

    /// Factor of the positive part; used for PSD inputs.
    pub fn positive_part_factor<R: Rng + ?Sized>(&self, rank_tol: f64, rng: &mut R) -> Factor {
        let pairs: Vec<(usize, f64)> = (self.positive_start()..self.order())
            .rev()
            .map(|i| (i, self.eigenvalues[i]))
            .collect();
        self.factor_from_pairs(&pairs, rank_tol, rng)
    }

    fn factor_from_pairs<R: Rng + ?Sized>(
        &self,
        pairs: &[(usize, f64)],
        rank_tol: f64,
        rng: &mut R,
    ) -> Factor {
        let n = self.order();
        let top = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
        let threshold = rank_tol * top.max(1.0);
        let kept: Vec<&(usize, f64)> = pairs.iter().filter(|p| p.1 > threshold).collect();
        if kept.is_empty() {
            return Factor::tiny_random(n, rng);
        }
        let mut v = DMatrix::zeros(n, kept.len());
        for (k, &&(idx, value)) in kept.iter().enumerate() {
            let mut col = v.column_mut(k);
            col.copy_from(&self.eigenvectors.column(idx));
            col *= value.sqrt();
        }
        Factor { v }
    }

    /// Count of eigenvalues of `-(S)_-` above the rank threshold.
    pub fn negative_rank(&self, rank_tol: f64) -> usize {
        let k = self.negative_count();
        if k == 0 {
            return 0;
        }
        let threshold = rank_tol * (-self.eigenvalues[0]).max(1.0);
        (0..k).filter(|&i| -self.eigenvalues[i] > threshold).count()
    }
}

/// `((S)_+, (S)_-)`: projections onto the PSD and NSD cones.
pub fn project_cone_split(s: &SymMatrix) -> Result<(SymMatrix, SymMatrix)> {
    Ok(SpectralDecomposition::of(s)?.split())
}

/// A real `n x r` matrix `V` with `1 <= r <= n`, representing `Z = V V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    v: DMatrix<f64>,
}

impl Factor {
    pub fn new(v: DMatrix<f64>) -> Result<Self> {
        if v.ncols() == 0 || v.ncols() > v.nrows() {
            return Err(SdpError::InvalidInput(format!(
                "factor must have 1..={} columns, got {}",
                v.nrows(),
                v.ncols()
            )));
        }
        Ok(Self { v })
    }

    /// One random column of norm [`ZERO_FACTOR_NORM`].
    pub fn tiny_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut col = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = col.norm();
        if norm > 0.0 {
            col *= ZERO_FACTOR_NORM / norm;
        } else {
            col[(0, 0)] = ZERO_FACTOR_NORM;
        }
        Self { v: col }
    }

    pub fn rows(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.v
    }

    /// `V V^T`.
    pub fn outer(&self) -> SymMatrix {
        SymMatrix::symmetrized(&self.v * self.v.transpose())
    }
}

/// Factorizes a PSD matrix as `V V^T` using the default guard RNG seed.
pub fn factorize_psd(z: &SymMatrix, rank_tol: f64) -> Result<Factor> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    factorize_psd_with_rng(z, rank_tol, &mut rng)
}

/// Factorizes a PSD matrix; eigenvalues at or below `rank_tol * max(1, lambda_max)` are
/// dropped. A matrix of rank zero yields one tiny random column.
pub fn factorize_psd_with_rng<R: Rng + ?Sized>(
    z: &SymMatrix,
    rank_tol: f64,
    rng: &mut R,
) -> Result<Factor> {
    let eig = SpectralDecomposition::of(z)?;
    let scale = eig
        .max_eigenvalue()
        .abs()
        .max(eig.min_eigenvalue().abs())
        .max(1.0);
    let threshold = -10.0 * rank_tol * scale;
    if eig.min_eigenvalue() < threshold {
        return Err(SdpError::NotPsd {
            min_eigenvalue: eig.min_eigenvalue(),
            threshold,
        });
    }
    Ok(eig.positive_part_factor(rank_tol, rng))
}
