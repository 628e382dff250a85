//! Dense Hermitian linear-algebra kernel.
//!
//! Everything the solver needs from a matrix flows through one spectral
//! decomposition per matrix: operator norms, threshold projectors, and
//! eigenvalue-mass sums are all read off the same eigenbasis. Matrices are
//! stored exactly symmetrized so that downstream code never has to reason
//! about sub-tolerance asymmetry.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Relative factor for the Hermitian-symmetry check, scaled by the largest
/// entry magnitude.
pub const SYM_TOL_FACTOR: f64 = 1e-12;
/// Relative factor for positive-semidefiniteness checks, scaled by 1 + ‖A‖.
pub const PSD_TOL_FACTOR: f64 = 1e-9;
/// Relative factor for reconstruction/idempotence checks, scaled by n(1 + ‖A‖).
pub const RECON_TOL_FACTOR: f64 = 1e-9;
/// Relative factor for clustering eigenvalues at a threshold, scaled by ‖A‖.
pub const EIG_CLUSTER_TOL_FACTOR: f64 = 1e-9;

/// Components smaller than this are treated as zero when fixing the phase of
/// an eigenvector (columns are unit norm, so at least one entry is ≥ 1/√n).
const PHASE_TOL: f64 = 1e-12;

/// Iteration cap handed to the tridiagonal QL sweep.
const MAX_EIG_SWEEPS: usize = 50_000;

/// Tolerance for the Hermitian-symmetry check of a matrix whose largest entry
/// magnitude is `max_abs_entry`.
pub fn sym_tol(max_abs_entry: f64) -> f64 {
    SYM_TOL_FACTOR * max_abs_entry
}

/// Tolerance below zero allowed for the smallest eigenvalue of a matrix
/// asserted PSD, given its spectral norm.
pub fn psd_tol(spectral_norm: f64) -> f64 {
    PSD_TOL_FACTOR * (1.0 + spectral_norm)
}

/// Tolerance for reconstruction, unitarity, and idempotence residuals.
pub fn recon_tol(dim: usize, spectral_norm: f64) -> f64 {
    RECON_TOL_FACTOR * dim as f64 * (1.0 + spectral_norm)
}

/// Half-width of the band around a threshold inside which eigenvalues are
/// still counted as lying above it. The band scales with the spectral norm
/// alone: thresholds sit anywhere between the smallest and largest
/// eigenvalue, so an absolute floor would swallow entire spectra whose norm
/// is far below 1.
pub fn eig_cluster_tol(spectral_norm: f64) -> f64 {
    EIG_CLUSTER_TOL_FACTOR * spectral_norm
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("entry ({row},{col}) breaks Hermitian symmetry: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
        tolerance: f64,
    },
    #[error("matrix contains a non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("got {got} entries, which do not fill a {dim}x{dim} matrix")]
    BadEntryCount { dim: usize, got: usize },
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("eigensolver failed to converge within {max_sweeps} sweeps")]
    NonConvergence { max_sweeps: usize },
}

/// Dense n×n complex Hermitian matrix.
///
/// The stored entries satisfy `entries[i][j] == conj(entries[j][i])` exactly:
/// constructors validate symmetry to within [`sym_tol`] and then replace the
/// payload with its Hermitian part.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Builds a matrix from row-major entries, validating finiteness and
    /// Hermitian symmetry.
    pub fn from_entries(dim: usize, entries: &[Complex64]) -> Result<Self, SpectraError> {
        if dim == 0 {
            return Err(SpectraError::EmptyMatrix);
        }
        if entries.len() != dim * dim {
            return Err(SpectraError::BadEntryCount {
                dim,
                got: entries.len(),
            });
        }
        let mut max_abs: f64 = 0.0;
        for (pos, value) in entries.iter().enumerate() {
            if !value.re.is_finite() || !value.im.is_finite() {
                return Err(SpectraError::NonFinite {
                    row: pos / dim,
                    col: pos % dim,
                });
            }
            max_abs = max_abs.max(value.norm());
        }
        let tolerance = sym_tol(max_abs);
        for i in 0..dim {
            for j in i..dim {
                let upper = entries[i * dim + j];
                let lower = entries[j * dim + i];
                let deviation = (upper - lower.conj()).norm();
                if deviation > tolerance {
                    return Err(SpectraError::NotHermitian {
                        row: i,
                        col: j,
                        deviation,
                        tolerance,
                    });
                }
            }
        }
        let data = DMatrix::from_fn(dim, dim, |i, j| entries[i * dim + j]);
        Ok(Self::exactly_symmetrized(data))
    }

    /// Builds a matrix from nested rows; every row must have length equal to
    /// the number of rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, SpectraError> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(SpectraError::BadEntryCount {
                    dim,
                    got: row.len() * dim,
                });
            }
            entries.extend_from_slice(row);
        }
        Self::from_entries(dim, &entries)
    }

    /// Accepts a matrix that is Hermitian only up to roundoff (for example
    /// the product P·A·P of exactly-symmetrized factors) and returns its
    /// Hermitian part. Finiteness is still enforced.
    pub fn symmetrized(data: DMatrix<Complex64>) -> Result<Self, SpectraError> {
        let dim = data.nrows();
        if dim == 0 {
            return Err(SpectraError::EmptyMatrix);
        }
        if data.ncols() != dim {
            return Err(SpectraError::BadEntryCount {
                dim,
                got: data.nrows() * data.ncols(),
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                let value = data[(i, j)];
                if !value.re.is_finite() || !value.im.is_finite() {
                    return Err(SpectraError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self::exactly_symmetrized(data))
    }

    fn exactly_symmetrized(data: DMatrix<Complex64>) -> Self {
        let dim = data.nrows();
        let mut sym = data;
        for i in 0..dim {
            sym[(i, i)] = Complex64::new(sym[(i, i)].re, 0.0);
            for j in (i + 1)..dim {
                let mean = (sym[(i, j)] + sym[(j, i)].conj()) * 0.5;
                sym[(i, j)] = mean;
                sym[(j, i)] = mean.conj();
            }
        }
        Self { data: sym }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diagonal: &[f64]) -> Self {
        let dim = diagonal.len();
        Self {
            data: DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    Complex64::new(diagonal[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn entries_row_major(&self) -> Vec<Complex64> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    /// Trace; real because diagonal entries of a Hermitian matrix are real.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data
            .iter()
            .map(|value| value.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_offdiag_abs(&self) -> f64 {
        let dim = self.dim();
        let mut best: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    best = best.max(self.data[(i, j)].norm());
                }
            }
        }
        best
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpectraError> {
        self.check_same_dim(other)?;
        Ok(Self {
            data: &self.data + &other.data,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: &self.data * Complex64::new(factor, 0.0),
        }
    }

    /// In-place update `self += coeff·other`; the workhorse of the solver's
    /// primal accumulation.
    pub fn add_assign_scaled(&mut self, coeff: f64, other: &Self) -> Result<(), SpectraError> {
        self.check_same_dim(other)?;
        let c = Complex64::new(coeff, 0.0);
        self.data.zip_apply(&other.data, |a, b| *a += c * b);
        Ok(())
    }

    /// tr(A·B); real for Hermitian A, B. Computed entrywise without forming
    /// the product: tr(AB) = Σ_{ij} A_ij·B_ji = Σ_{ij} A_ij·conj(B_ij).
    pub fn trace_product(&self, other: &Self) -> Result<f64, SpectraError> {
        self.check_same_dim(other)?;
        let mut sum = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let a = self.data[(i, j)];
                let b = other.data[(i, j)];
                sum += a.re * b.re + a.im * b.im;
            }
        }
        Ok(sum)
    }

    /// Smallest eigenvalue; requires a full decomposition.
    pub fn min_eigenvalue(&self) -> Result<f64, SpectraError> {
        let decomposition = eigh(self)?;
        Ok(decomposition.min_eigenvalue())
    }

    /// Spectral norm max_i |λ_i|; requires a full decomposition.
    pub fn spectral_norm(&self) -> Result<f64, SpectraError> {
        let decomposition = eigh(self)?;
        Ok(decomposition.spectral_norm())
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), SpectraError> {
        if self.dim() != other.dim() {
            return Err(SpectraError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// Eigendecomposition A = V·diag(λ)·V† with λ sorted non-increasing and the
/// columns of V phase-fixed so equal inputs give bitwise equal outputs.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues sorted non-increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary matrix whose column i pairs with `eigenvalues()[i]`.
    pub fn eigenvector_matrix(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// max_i |λ_i|; for PSD matrices this equals the largest eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.max_eigenvalue().abs().max(self.min_eigenvalue().abs())
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.dim();
        let diag = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self.eigenvalues[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let recon = &self.eigenvectors * diag * self.eigenvectors.adjoint();
        HermitianMatrix::exactly_symmetrized(recon)
    }

    /// Number of eigenvalues counted as ≥ `level`, including any inside the
    /// clustering band just below it.
    pub fn count_at_least(&self, level: f64) -> usize {
        let cutoff = level - eig_cluster_tol(self.spectral_norm());
        self.eigenvalues.iter().take_while(|&&x| x >= cutoff).count()
    }

    /// Sum of eigenvalues counted as ≥ `level` (the mass above a threshold).
    pub fn mass_at_least(&self, level: f64) -> f64 {
        let count = self.count_at_least(level);
        self.eigenvalues[..count].iter().sum()
    }

    /// Projector onto the span of eigenvectors with eigenvalue ≥ `level`,
    /// inclusive of the clustering band.
    pub fn projector_at_least(&self, level: f64) -> Projector {
        let count = self.count_at_least(level);
        self.projector_from_leading(count)
    }

    /// Projector onto the span of the first `count` (largest-eigenvalue)
    /// eigenvectors.
    pub fn projector_from_leading(&self, count: usize) -> Projector {
        let n = self.dim();
        if count == 0 {
            return Projector::zero(n);
        }
        let basis = self.eigenvectors.columns(0, count).into_owned();
        Projector::from_orthonormal_columns(&basis)
    }

    /// V·diag(exp(−λ))·V†.
    pub fn exp_neg(&self) -> HermitianMatrix {
        let n = self.dim();
        let diag = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new((-self.eigenvalues[i]).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let result = &self.eigenvectors * diag * self.eigenvectors.adjoint();
        HermitianMatrix::exactly_symmetrized(result)
    }
}

/// Orthogonal projector, stored with its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: HermitianMatrix,
    rank: usize,
}

impl Projector {
    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::zeros(dim),
            rank: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::identity(dim),
            rank: dim,
        }
    }

    /// P = B·B† for a matrix B with orthonormal columns.
    pub fn from_orthonormal_columns(basis: &DMatrix<Complex64>) -> Self {
        let product = basis * basis.adjoint();
        Self {
            matrix: HermitianMatrix::exactly_symmetrized(product),
            rank: basis.ncols(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

/// Full eigendecomposition with deterministic ordering and phases.
///
/// Eigenvalues are sorted non-increasing; ties keep the tridiagonal solver's
/// deterministic output order. Each eigenvector is rotated by a unit phase so
/// its first above-noise component is real positive.
pub fn eigh(a: &HermitianMatrix) -> Result<SpectralDecomposition, SpectraError> {
    let n = a.dim();
    let eig = nalgebra::SymmetricEigen::try_new(a.data.clone(), f64::EPSILON, MAX_EIG_SWEEPS)
        .ok_or(SpectraError::NonConvergence {
            max_sweeps: MAX_EIG_SWEEPS,
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&left, &right| {
        eig.eigenvalues[right]
            .partial_cmp(&eig.eigenvalues[left])
            .expect("eigenvalues of a finite Hermitian matrix are finite")
            .then(left.cmp(&right))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (target, &source) in order.iter().enumerate() {
        let column = eig.eigenvectors.column(source);
        let phase = column
            .iter()
            .find(|value| value.norm() > PHASE_TOL)
            .map(|value| value.conj() / value.norm())
            .unwrap_or_else(|| Complex64::new(1.0, 0.0));
        for row in 0..n {
            eigenvectors[(row, target)] = column[row] * phase;
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// exp(−A) = V·diag(exp(−λ_i))·V†. PSD with norm exp(−λ_min(A)).
pub fn matrix_exp_neg(a: &HermitianMatrix) -> Result<HermitianMatrix, SpectraError> {
    Ok(eigh(a)?.exp_neg())
}

/// Projector onto the span of eigenvectors of `a` with eigenvalue ≥ `level`,
/// inclusive of the clustering band just below the threshold.
pub fn projector_at_least(a: &HermitianMatrix, level: f64) -> Result<Projector, SpectraError> {
    Ok(eigh(a)?.projector_at_least(level))
}

/// Sum of the eigenvalues of `a` counted as ≥ `level`.
pub fn eigenvalue_mass(a: &HermitianMatrix, level: f64) -> Result<f64, SpectraError> {
    Ok(eigh(a)?.mass_at_least(level))
}

/// P·A·P. Hermitian; PSD whenever A is.
pub fn conjugate(p: &Projector, a: &HermitianMatrix) -> Result<HermitianMatrix, SpectraError> {
    if p.dim() != a.dim() {
        return Err(SpectraError::DimensionMismatch {
            left: p.dim(),
            right: a.dim(),
        });
    }
    let product = p.matrix.as_matrix() * a.as_matrix() * p.matrix.as_matrix();
    Ok(HermitianMatrix::exactly_symmetrized(product))
}
