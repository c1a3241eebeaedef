//! Canonical ill-posed test-problem generators: Hilbert matrices, Gaussian
//! deconvolution, discrete second derivatives, rectangular forward
//! differences and seeded rank-deficient symmetric operators.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator_core::{
    default_rank_tolerance, eigendecompose, GeneralOperator, SymmetricOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Hilbert,
    GaussDeconv,
    SecondDerivativeSym,
    FirstDerivativeRect,
    RankDeficientSym,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Hilbert => "hilbert",
            ProblemKind::GaussDeconv => "gauss_deconv",
            ProblemKind::SecondDerivativeSym => "second_derivative_sym",
            ProblemKind::FirstDerivativeRect => "first_derivative_rect",
            ProblemKind::RankDeficientSym => "rank_deficient_sym",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hilbert" => Ok(ProblemKind::Hilbert),
            "gauss_deconv" => Ok(ProblemKind::GaussDeconv),
            "second_derivative_sym" => Ok(ProblemKind::SecondDerivativeSym),
            "first_derivative_rect" => Ok(ProblemKind::FirstDerivativeRect),
            "rank_deficient_sym" => Ok(ProblemKind::RankDeficientSym),
            _ => Err(Error::InvalidProblem(format!("unknown problem kind `{s}`"))),
        }
    }
}

/// Choice of exact solution used to manufacture consistent data.
///
/// For the symmetric kinds this is the solution y and the data is f = A y.
/// For `first_derivative_rect` it names the target derivative v = A f:
/// `smooth_sine` supplies f = -cos(2 pi x) / (2 pi) so that the target is
/// the sine samples; `custom` supplies f itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactSolution {
    Ones,
    #[default]
    SmoothSine,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub dim: usize,
    /// Column count for rectangular kinds; defaults to dim + 1.
    #[serde(default)]
    pub dim2: Option<usize>,
    /// Kernel width for `gauss_deconv` (default 3.0).
    #[serde(default)]
    pub width: Option<f64>,
    /// Null-space dimension for `rank_deficient_sym` (default 1).
    #[serde(default)]
    pub null_dim: Option<usize>,
    /// Seed for the random orthogonal factor of `rank_deficient_sym`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exact_solution: ExactSolution,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, dim: usize) -> Self {
        Self {
            kind,
            dim,
            dim2: None,
            width: None,
            null_dim: None,
            seed: 0,
            exact_solution: ExactSolution::default(),
        }
    }
}

/// The generated operator, either selfadjoint or rectangular.
#[derive(Debug, Clone)]
pub enum ProblemOperator {
    Symmetric(SymmetricOperator),
    General(GeneralOperator),
}

impl ProblemOperator {
    pub fn entries(&self) -> &DMatrix<f64> {
        match self {
            ProblemOperator::Symmetric(op) => op.entries(),
            ProblemOperator::General(op) => op.entries(),
        }
    }
}

/// A generated instance: operator, data f, and exact target y.
///
/// For symmetric kinds y is the exact solution of A y = f; for the
/// rectangular derivative kind y = A f is the exact derivative samples.
#[derive(Debug, Clone)]
pub struct Problem {
    pub operator: ProblemOperator,
    pub f: DVector<f64>,
    pub y_exact: DVector<f64>,
}

/// H_ij = 1 / (i + j - 1), 1-indexed.
pub fn hilbert_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| 1.0 / ((i + j + 1) as f64))
}

/// Symmetric Toeplitz Gaussian kernel exp(-(i-j)^2 / (2 w^2)) scaled by the
/// full kernel sum, so rows away from the boundary sum to ~1 while symmetry
/// is preserved exactly.
pub fn gauss_deconv_matrix(n: usize, width: f64) -> DMatrix<f64> {
    let z: f64 = (-(n as i64 - 1)..n as i64)
        .map(|k| (-((k * k) as f64) / (2.0 * width * width)).exp())
        .sum();
    DMatrix::from_fn(n, n, |i, j| {
        let d = i as f64 - j as f64;
        (-d * d / (2.0 * width * width)).exp() / z
    })
}

/// Tridiagonal (1, -2, 1) / h^2 with h = 1/(n+1).
pub fn second_derivative_matrix(n: usize) -> DMatrix<f64> {
    let h = 1.0 / (n + 1) as f64;
    let s = 1.0 / (h * h);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -2.0 * s
        } else if i.abs_diff(j) == 1 {
            s
        } else {
            0.0
        }
    })
}

/// m x (m+1) forward differences scaled by 1/h with h = 1/m.
pub fn first_derivative_matrix(m: usize) -> DMatrix<f64> {
    let h = 1.0 / m as f64;
    DMatrix::from_fn(m, m + 1, |i, j| {
        if j == i {
            -1.0 / h
        } else if j == i + 1 {
            1.0 / h
        } else {
            0.0
        }
    })
}

/// V D V^T with a seeded random orthogonal V and exactly `null_dim` zero
/// eigenvalues; the nonzero spectrum is log-spaced in [1e-2, 1].
pub fn rank_deficient_matrix(n: usize, null_dim: usize, seed: u64) -> Result<DMatrix<f64>> {
    if null_dim >= n {
        return Err(Error::InvalidProblem(format!(
            "null-space dimension {null_dim} must be below dim {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = raw.qr();
    let v = qr.q();
    let nonzero = n - null_dim;
    let mut d = DVector::zeros(n);
    for k in 0..nonzero {
        let t = if nonzero == 1 {
            1.0
        } else {
            k as f64 / (nonzero - 1) as f64
        };
        d[k] = 10f64.powf(-2.0 + 2.0 * t);
    }
    let vd = &v * DMatrix::from_diagonal(&d);
    let mut m = vd * v.transpose();
    // exact symmetry for the invariant check
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    Ok(m)
}

/// Samples of sin(2 pi x) at x_j = (j+1)/(n+1).
pub fn smooth_sine(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |j, _| {
        (2.0 * std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).sin()
    })
}

fn solution_vector(choice: &ExactSolution, n: usize) -> Result<DVector<f64>> {
    match choice {
        ExactSolution::Ones => Ok(DVector::from_element(n, 1.0)),
        ExactSolution::SmoothSine => Ok(smooth_sine(n)),
        ExactSolution::Custom(values) => {
            if values.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "custom exact solution",
                    expected: n,
                    actual: values.len(),
                });
            }
            Ok(DVector::from_row_slice(values))
        }
    }
}

pub fn generate_problem(spec: &ProblemSpec) -> Result<Problem> {
    if spec.dim == 0 {
        return Err(Error::InvalidProblem("dim must be at least 1".into()));
    }
    if spec.dim > crate::operator_core::MAX_DIM {
        return Err(Error::InvalidProblem(format!(
            "dim {} exceeds the supported dense scale {}",
            spec.dim,
            crate::operator_core::MAX_DIM
        )));
    }
    match spec.kind {
        ProblemKind::Hilbert => symmetric_problem(hilbert_matrix(spec.dim), spec, false),
        ProblemKind::GaussDeconv => {
            let width = spec.width.unwrap_or(3.0);
            if !(width > 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "kernel width must be positive, got {width}"
                )));
            }
            symmetric_problem(gauss_deconv_matrix(spec.dim, width), spec, false)
        }
        ProblemKind::SecondDerivativeSym => {
            symmetric_problem(second_derivative_matrix(spec.dim), spec, false)
        }
        ProblemKind::RankDeficientSym => {
            let r = spec.null_dim.unwrap_or(1);
            symmetric_problem(rank_deficient_matrix(spec.dim, r, spec.seed)?, spec, true)
        }
        ProblemKind::FirstDerivativeRect => {
            let cols = spec.dim2.unwrap_or(spec.dim + 1);
            if cols != spec.dim + 1 {
                return Err(Error::InvalidProblem(format!(
                    "first_derivative_rect requires dim2 = dim + 1, got {cols}"
                )));
            }
            let a = first_derivative_matrix(spec.dim);
            let f = match &spec.exact_solution {
                // antiderivative of sin(2 pi x): the target derivative is
                // the sine samples, well represented in the operator's
                // low-frequency singular modes
                ExactSolution::SmoothSine => DVector::from_fn(cols, |j, _| {
                    let x = j as f64 / spec.dim as f64;
                    -(2.0 * std::f64::consts::PI * x).cos() / (2.0 * std::f64::consts::PI)
                }),
                ExactSolution::Ones => DVector::from_element(cols, 1.0),
                ExactSolution::Custom(values) => {
                    if values.len() != cols {
                        return Err(Error::DimensionMismatch {
                            context: "custom data for first_derivative_rect",
                            expected: cols,
                            actual: values.len(),
                        });
                    }
                    DVector::from_row_slice(values)
                }
            };
            let y_exact = &a * &f;
            Ok(Problem {
                operator: ProblemOperator::General(GeneralOperator::new(a)?),
                f,
                y_exact,
            })
        }
    }
}

fn symmetric_problem(
    matrix: DMatrix<f64>,
    spec: &ProblemSpec,
    project_onto_range: bool,
) -> Result<Problem> {
    let mut y = solution_vector(&spec.exact_solution, spec.dim)?;
    if project_onto_range {
        // keep y orthogonal to the null space so it is the minimal-norm target
        let decomp = eigendecompose(&SymmetricOperator::new(matrix.clone())?)?;
        let tol = default_rank_tolerance(&matrix);
        let mut projected = DVector::zeros(spec.dim);
        for k in 0..spec.dim {
            if decomp.eigenvalues()[k].abs() > tol {
                let v = decomp.eigenvectors().column(k);
                projected += v * v.dot(&y);
            }
        }
        y = projected;
    }
    let f = &matrix * &y;
    Ok(Problem {
        operator: ProblemOperator::Symmetric(SymmetricOperator::new(matrix)?),
        f,
        y_exact: y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::{null_projector, NullSide};
    use approx::assert_relative_eq;

    #[test]
    fn hilbert_first_row() {
        let p = generate_problem(&ProblemSpec::new(ProblemKind::Hilbert, 3)).unwrap();
        let a = p.operator.entries();
        assert_relative_eq!(a[(0, 0)], 1.0);
        assert_relative_eq!(a[(0, 1)], 0.5);
        assert_relative_eq!(a[(0, 2)], 1.0 / 3.0);
    }

    #[test]
    fn rank_deficient_null_trace() {
        let mut spec = ProblemSpec::new(ProblemKind::RankDeficientSym, 5);
        spec.null_dim = Some(2);
        let p = generate_problem(&spec).unwrap();
        let a = p.operator.entries();
        let tol = crate::operator_core::default_rank_tolerance(a);
        let proj = null_projector(a, tol, NullSide::Domain).unwrap();
        assert_relative_eq!(proj.trace(), 2.0, epsilon = 1e-8);
        // y_exact must already be orthogonal to the null space
        assert!((proj * &p.y_exact).norm() <= 1e-10 * (1.0 + p.y_exact.norm()));
    }

    #[test]
    fn rank_deficient_zero_eigenvalue_count() {
        let mut spec = ProblemSpec::new(ProblemKind::RankDeficientSym, 8);
        spec.null_dim = Some(3);
        let p = generate_problem(&spec).unwrap();
        let a = p.operator.entries();
        let op = SymmetricOperator::new(a.clone()).unwrap();
        let d = eigendecompose(&op).unwrap();
        let norm = a.norm();
        let zeros = d
            .eigenvalues()
            .iter()
            .filter(|l| l.abs() <= 1e-14 * norm * 10.0)
            .count();
        assert_eq!(zeros, 3);
    }

    #[test]
    fn gauss_deconv_is_ill_posed_at_desk_scale() {
        let mut spec = ProblemSpec::new(ProblemKind::GaussDeconv, 64);
        spec.width = Some(3.0);
        let p = generate_problem(&spec).unwrap();
        let op = match &p.operator {
            ProblemOperator::Symmetric(op) => op.clone(),
            _ => unreachable!(),
        };
        let d = eigendecompose(&op).unwrap();
        let max = d.spectral_radius();
        let min = d
            .eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v.abs()));
        assert!(max / min > 1e6);
    }

    #[test]
    fn second_derivative_is_symmetric_tridiagonal() {
        let p = generate_problem(&ProblemSpec::new(ProblemKind::SecondDerivativeSym, 5)).unwrap();
        let a = p.operator.entries();
        let h = 1.0 / 6.0;
        assert_relative_eq!(a[(2, 2)], -2.0 / (h * h), max_relative = 1e-14);
        assert_relative_eq!(a[(2, 3)], 1.0 / (h * h), max_relative = 1e-14);
        assert_relative_eq!(a[(2, 0)], 0.0);
    }

    #[test]
    fn first_derivative_shape_and_target() {
        let p = generate_problem(&ProblemSpec::new(ProblemKind::FirstDerivativeRect, 64)).unwrap();
        let a = p.operator.entries();
        assert_eq!((a.nrows(), a.ncols()), (64, 65));
        // target is close to sine samples at midpoints
        let mid = DVector::from_fn(64, |i, _| {
            (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / 64.0).sin()
        });
        assert!((&p.y_exact - &mid).norm() <= 0.05 * mid.norm());
    }

    #[test]
    fn determinism_of_seeded_generator() {
        let mut spec = ProblemSpec::new(ProblemKind::RankDeficientSym, 6);
        spec.null_dim = Some(2);
        spec.seed = 9;
        let p1 = generate_problem(&spec).unwrap();
        let p2 = generate_problem(&spec).unwrap();
        assert_eq!(p1.operator.entries(), p2.operator.entries());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate_problem(&ProblemSpec::new(ProblemKind::Hilbert, 0)).is_err());
        let mut spec = ProblemSpec::new(ProblemKind::RankDeficientSym, 3);
        spec.null_dim = Some(3);
        assert!(generate_problem(&spec).is_err());
        let mut rect = ProblemSpec::new(ProblemKind::FirstDerivativeRect, 8);
        rect.dim2 = Some(8);
        assert!(generate_problem(&rect).is_err());
    }
}
