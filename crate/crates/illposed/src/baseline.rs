//! Tikhonov variational baseline, condition-number comparison between the
//! shifted and normal-equations routes, and an analytic operation-count
//! model for both.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::operator_core::{
    derive_seed, eigendecompose, make_noisy, SpectralDecomposition, SymmetricOperator,
};
use crate::shift::{complex_error, solve_shift, ShiftSchedule};

/// Solves (A^T A + alpha I) u = A^T f_delta by Cholesky.
pub fn solve_tikhonov(
    entries: &DMatrix<f64>,
    f_delta: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "Tikhonov weight must be positive",
        });
    }
    if f_delta.len() != entries.nrows() {
        return Err(Error::DimensionMismatch {
            context: "solve_tikhonov rhs",
            expected: entries.nrows(),
            actual: f_delta.len(),
        });
    }
    let n = entries.ncols();
    let mut normal = entries.transpose() * entries;
    for k in 0..n {
        normal[(k, k)] += alpha;
    }
    let rhs = entries.transpose() * f_delta;
    let chol = nalgebra::Cholesky::new(normal)
        .ok_or_else(|| Error::SolverBreakdown("Cholesky of A^T A + alpha I failed".into()))?;
    Ok(chol.solve(&rhs))
}

/// Spectral-filter form of the Tikhonov solution for a symmetric operator:
/// coefficients lambda_k <f_delta, v_k> / (lambda_k^2 + alpha).
pub fn solve_tikhonov_spectral(
    decomp: &SpectralDecomposition,
    f_delta: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "Tikhonov weight must be positive",
        });
    }
    if f_delta.len() != decomp.source_dim() {
        return Err(Error::DimensionMismatch {
            context: "solve_tikhonov_spectral rhs",
            expected: decomp.source_dim(),
            actual: f_delta.len(),
        });
    }
    let mut u = DVector::zeros(decomp.source_dim());
    for k in 0..decomp.source_dim() {
        let v = decomp.eigenvectors().column(k);
        let lambda = decomp.eigenvalues()[k];
        let coeff = lambda * v.dot(f_delta) / (lambda * lambda + alpha);
        u += v * coeff;
    }
    Ok(u)
}

/// Condition numbers of the shifted matrix A + i a I and of the normal
/// matrix A^T A + a^2 I, with the exact square-root relation between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondReport {
    pub a: f64,
    pub kappa_shift: f64,
    pub kappa_normal: f64,
    pub ratio_check: f64,
}

/// For real symmetric A the singular values of A + i a I are
/// sqrt(lambda_k^2 + a^2), so kappa_2(A + iaI) = sqrt(kappa_2(A^T A + a^2 I))
/// exactly; both sides are evaluated from one eigendecomposition.
pub fn condition_numbers(decomp: &SpectralDecomposition, a: f64) -> Result<CondReport> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter {
            name: "a",
            value: a,
            reason: "shift must be positive",
        });
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for &lambda in decomp.eigenvalues().iter() {
        let v = lambda * lambda + a * a;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let kappa_shift = (hi / lo).sqrt();
    let kappa_normal = hi / lo;
    Ok(CondReport {
        a,
        kappa_shift,
        kappa_normal,
        ratio_check: kappa_shift / kappa_normal.sqrt(),
    })
}

/// Which solve the operation-count model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Shift,
    Tikhonov,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Shift => "shift",
            Method::Tikhonov => "tikhonov",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" => Ok(Method::Shift),
            "tikhonov" => Ok(Method::Tikhonov),
            _ => Err(Error::InvalidProblem(format!("unknown method `{s}`"))),
        }
    }
}

/// Documented stage list of the operation-count model.
///
/// Counts are multiply-add operations in the solver's scalar field (one
/// complex multiply-add counts as one operation), which keeps the comparison
/// independent of how a target machine prices complex arithmetic:
///
/// * shift: LU factorization of the n x n shifted matrix (n^3/3) plus the
///   two triangular solves (2 n^2), all complex.
/// * tikhonov: forming the normal matrix A^T A (n^3), Cholesky of the
///   regularized normal matrix (n^3/6), forming the right-hand side A^T f
///   (n^2) and the two triangular solves (2 n^2), all real.
///
/// The normal-matrix product is the stage the shifted route never pays for;
/// it dominates the difference at every dimension.
pub fn flop_stages(method: Method, dim: usize) -> Result<Vec<(&'static str, u64)>> {
    if dim == 0 {
        return Err(Error::InvalidParameter {
            name: "dim",
            value: 0.0,
            reason: "dimension must be at least 1",
        });
    }
    let n = dim as u64;
    Ok(match method {
        Method::Shift => vec![
            ("complex_lu_factorization", n * n * n / 3),
            ("complex_triangular_solves", 2 * n * n),
        ],
        Method::Tikhonov => vec![
            ("normal_matrix_product", n * n * n),
            ("cholesky_factorization", n * n * n / 6),
            ("normal_rhs_product", n * n),
            ("triangular_solves", 2 * n * n),
        ],
    })
}

/// Sum of the documented stage counts.
pub fn flop_model(method: Method, dim: usize) -> Result<u64> {
    Ok(flop_stages(method, dim)?.iter().map(|(_, c)| c).sum())
}

/// One row of the side-by-side method comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub delta: f64,
    pub a: f64,
    pub alpha: f64,
    pub error_shift: f64,
    pub error_tikhonov: f64,
    pub kappa_shift: f64,
    pub kappa_normal: f64,
    pub flops_shift: u64,
    pub flops_tikhonov: u64,
}

#[derive(Debug, Clone, Default)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

/// Per delta: shifted solve with a = a(delta) and Tikhonov solve with
/// alpha = a(delta)^2, errors against y, both condition numbers and the
/// modeled operation counts. The alpha = a^2 pairing makes the
/// condition-number relation exact and aligns the two spectral filters.
pub fn compare_methods(
    op: &SymmetricOperator,
    f: &DVector<f64>,
    y: Option<&DVector<f64>>,
    deltas: &[f64],
    schedule: &ShiftSchedule,
    seed: u64,
) -> Result<CompareReport> {
    let decomp = eigendecompose(op)?;
    let y_owned;
    let y_ref = match y {
        Some(y) => y,
        None => {
            y_owned = crate::operator_core::minimal_norm_solution(
                op.entries(),
                f,
                decomp.default_rank_tolerance(),
            )?
            .y;
            &y_owned
        }
    };
    let mut sorted: Vec<f64> = deltas.to_vec();
    sorted.sort_by(|x, z| z.total_cmp(x));
    let dim = op.dim();
    let flops_shift = flop_model(Method::Shift, dim)?;
    let flops_tikhonov = flop_model(Method::Tikhonov, dim)?;

    let rows: Result<Vec<CompareRow>> = sorted
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let a = if delta > 0.0 {
                schedule.a(delta)?
            } else {
                schedule.a(f64::EPSILON)?
            };
            let alpha = a * a;
            let datum = make_noisy(f, delta, derive_seed(seed, i as u64))?;
            let u_shift = solve_shift(op, &datum.f_delta, a)?;
            let u_tik = solve_tikhonov(op.entries(), &datum.f_delta, alpha)?;
            let cond = condition_numbers(&decomp, a)?;
            Ok(CompareRow {
                delta,
                a,
                alpha,
                error_shift: complex_error(&u_shift, y_ref),
                error_tikhonov: (&u_tik - y_ref).norm(),
                kappa_shift: cond.kappa_shift,
                kappa_normal: cond.kappa_normal,
                flops_shift,
                flops_tikhonov,
            })
        })
        .collect();
    Ok(CompareReport { rows: rows? })
}

/// One row of the benchmark output: modeled count plus a wall-clock
/// measurement. Timings are reported, never asserted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub dim: usize,
    pub modeled_flops: u64,
    pub measured_seconds: f64,
    pub kappa: f64,
}

/// Times one shifted solve and one Tikhonov solve on a Hilbert matrix of
/// each requested dimension at a fixed shift a = 1e-3.
pub fn run_bench(dims: &[usize]) -> Result<Vec<BenchRow>> {
    let a = 1e-3;
    let mut rows = Vec::new();
    for &dim in dims {
        let matrix = DMatrix::from_fn(dim, dim, |i, j| 1.0 / ((i + j + 1) as f64));
        let op = SymmetricOperator::new(matrix)?;
        let decomp = eigendecompose(&op)?;
        let cond = condition_numbers(&decomp, a)?;
        let f = DVector::from_fn(dim, |i, _| ((i + 1) as f64).recip());

        let t0 = Instant::now();
        let _ = solve_shift(&op, &f, a)?;
        let shift_seconds = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let _ = solve_tikhonov(op.entries(), &f, a * a)?;
        let tikhonov_seconds = t1.elapsed().as_secs_f64();

        rows.push(BenchRow {
            method: Method::Shift,
            dim,
            modeled_flops: flop_model(Method::Shift, dim)?,
            measured_seconds: shift_seconds,
            kappa: cond.kappa_shift,
        });
        rows.push(BenchRow {
            method: Method::Tikhonov,
            dim,
            modeled_flops: flop_model(Method::Tikhonov, dim)?,
            measured_seconds: tikhonov_seconds,
            kappa: cond.kappa_normal,
        });
    }
    Ok(rows)
}
