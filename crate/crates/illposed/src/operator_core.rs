//! Dense operator representations, spectral decomposition, minimal-norm
//! solutions, null-space projectors, and calibrated noise injection.
//!
//! Operators are stored as real dense matrices; solves downstream may be
//! complex. Maximum supported dimension is 2000 (desk scale).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest matrix dimension the dense kernels are meant for.
pub const MAX_DIM: usize = 2000;

fn check_finite(entries: &DMatrix<f64>) -> Result<()> {
    for j in 0..entries.ncols() {
        for i in 0..entries.nrows() {
            if !entries[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Dense real symmetric matrix standing for a selfadjoint operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    entries: DMatrix<f64>,
}

impl SymmetricOperator {
    /// Validates squareness, finiteness and symmetry
    /// (max asymmetry <= 1e-12 * max |entry|).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "SymmetricOperator (square, nonempty)",
                expected: entries.nrows().max(1),
                actual: entries.ncols(),
            });
        }
        check_finite(&entries)?;
        let max_abs = entries.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        let tol = 1e-12 * max_abs;
        let mut asym = 0.0_f64;
        for i in 0..entries.nrows() {
            for j in (i + 1)..entries.ncols() {
                asym = asym.max((entries[(i, j)] - entries[(j, i)]).abs());
            }
        }
        if asym > tol {
            return Err(Error::NotSymmetric {
                asymmetry: asym,
                tolerance: tol,
            });
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Dense real m x n matrix; any finite matrix qualifies.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralOperator {
    entries: DMatrix<f64>,
}

impl GeneralOperator {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                context: "GeneralOperator (nonempty)",
                expected: 1,
                actual: 0,
            });
        }
        check_finite(&entries)?;
        Ok(Self { entries })
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Eigenpairs of a symmetric operator, eigenvalues sorted ascending, columns
/// of `eigenvectors` paired with the eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    source_dim: usize,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    /// max |lambda_k|
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Standard pseudoinverse cutoff: eps * dim * max |lambda|.
    pub fn default_rank_tolerance(&self) -> f64 {
        f64::EPSILON * self.source_dim as f64 * self.spectral_radius()
    }

    /// ||A V - V Lambda||_F, for validating against the source matrix.
    pub fn reconstruction_residual(&self, a: &DMatrix<f64>) -> f64 {
        let av = a * &self.eigenvectors;
        let mut r = 0.0_f64;
        for k in 0..self.eigenvalues.len() {
            let d = av.column(k) - self.eigenvectors.column(k) * self.eigenvalues[k];
            r += d.norm_squared();
        }
        r.sqrt()
    }

    /// ||V^T V - I||_F
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(n, n)).norm()
    }
}

/// Full symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn eigendecompose(op: &SymmetricOperator) -> Result<SpectralDecomposition> {
    let dim = op.dim();
    let sym = nalgebra::SymmetricEigen::try_new(op.entries.clone(), f64::EPSILON, 10_000).ok_or(
        Error::EigenFailure {
            dim,
            norm: op.entries.norm(),
        },
    )?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| sym.eigenvalues[i].total_cmp(&sym.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&k| sym.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        eigenvectors.set_column(col, &sym.eigenvectors.column(k));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        source_dim: dim,
    })
}

/// Pair (f_delta, delta) with ||f_delta - f||_2 = delta by construction.
#[derive(Debug, Clone)]
pub struct NoisyDatum {
    pub f_delta: DVector<f64>,
    pub delta: f64,
}

/// Adds a seeded Gaussian-direction perturbation of exact norm `delta`.
///
/// Deterministic given (f, delta, seed). A zero draw (probability ~0) is
/// retried on the next ChaCha stream.
pub fn make_noisy(f: &DVector<f64>, delta: f64, seed: u64) -> Result<NoisyDatum> {
    if delta < 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            reason: "noise level must be nonnegative",
        });
    }
    if delta == 0.0 {
        return Ok(NoisyDatum {
            f_delta: f.clone(),
            delta,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for stream in 0..64 {
        rng.set_stream(stream);
        let e: DVector<f64> = DVector::from_iterator(
            f.len(),
            (0..f.len()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        let norm = e.norm();
        if norm > 0.0 {
            return Ok(NoisyDatum {
                f_delta: f + e * (delta / norm),
                delta,
            });
        }
    }
    Err(Error::SolverBreakdown(
        "could not draw a nonzero noise direction".into(),
    ))
}

/// Which null space a projector targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullSide {
    /// N = {u : A u = 0} (domain side).
    Domain,
    /// N* = {u : A^T u = 0} (range side).
    Adjoint,
}

fn svd_of(entries: &DMatrix<f64>) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    nalgebra::SVD::try_new(entries.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::SolverBreakdown("SVD did not converge".into()))
}

/// Orthogonal projector onto the numerical null space of A (or A^T).
///
/// Built as I - sum of outer products over singular directions with
/// sigma > rank_tolerance, so trailing directions of a wide/tall matrix are
/// covered as well.
pub fn null_projector(
    entries: &DMatrix<f64>,
    rank_tolerance: f64,
    side: NullSide,
) -> Result<DMatrix<f64>> {
    if rank_tolerance < 0.0 {
        return Err(Error::InvalidParameter {
            name: "rank_tolerance",
            value: rank_tolerance,
            reason: "must be nonnegative",
        });
    }
    let svd = svd_of(entries)?;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let size = match side {
        NullSide::Domain => entries.ncols(),
        NullSide::Adjoint => entries.nrows(),
    };
    let mut p = DMatrix::identity(size, size);
    for (k, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > rank_tolerance {
            match side {
                NullSide::Domain => {
                    let v = v_t.row(k).transpose();
                    p -= &v * v.transpose();
                }
                NullSide::Adjoint => {
                    let col = u.column(k);
                    p -= col * col.transpose();
                }
            }
        }
    }
    Ok(p)
}

/// Pseudoinverse default cutoff eps * max(m, n) * sigma_max.
pub fn default_rank_tolerance(entries: &DMatrix<f64>) -> f64 {
    let sigma_max = entries
        .clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v));
    f64::EPSILON * entries.nrows().max(entries.ncols()) as f64 * sigma_max
}

/// Pseudoinverse solution: components below `rank_tolerance` dropped, hence
/// orthogonal to the numerical null space.
#[derive(Debug, Clone)]
pub struct MinimalNormSolution {
    pub y: DVector<f64>,
    pub rank_tolerance: f64,
    pub effective_rank: usize,
    /// ||A y - f||, the best-approximation residual.
    pub residual: f64,
}

pub fn minimal_norm_solution(
    entries: &DMatrix<f64>,
    f: &DVector<f64>,
    rank_tolerance: f64,
) -> Result<MinimalNormSolution> {
    if f.len() != entries.nrows() {
        return Err(Error::DimensionMismatch {
            context: "minimal_norm_solution rhs",
            expected: entries.nrows(),
            actual: f.len(),
        });
    }
    let svd = svd_of(entries)?;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut y = DVector::zeros(entries.ncols());
    let mut effective_rank = 0;
    for (k, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > rank_tolerance {
            effective_rank += 1;
            let coeff = u.column(k).dot(f) / sigma;
            y += v_t.row(k).transpose() * coeff;
        }
    }
    let residual = (entries * &y - f).norm();
    Ok(MinimalNormSolution {
        y,
        rank_tolerance,
        effective_rank,
        residual,
    })
}

/// splitmix64 of (seed, index); used to derive independent per-row noise
/// seeds so that sweep rows do not depend on evaluation order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
