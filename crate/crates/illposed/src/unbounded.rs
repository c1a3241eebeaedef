//! Stable evaluation of an unbounded operator on noisy data: build
//! B = (I + Q)^{-1}, F = A (I + T)^{-1}, H = I - B, and run the fixed-point
//! iteration v_{n+1} = H v_n + F f_delta under an n(delta) schedule.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator_core::{
    derive_seed, eigendecompose, make_noisy, null_projector, GeneralOperator, NullSide,
    SpectralDecomposition, SymmetricOperator, MAX_DIM,
};

/// The operator family of the evaluation problem, built once per matrix.
///
/// A is m x n; Q = A A^T and B, H live on the range side (m x m);
/// T = A^T A lives on the domain side (n x n); F = A (I + T)^{-1} is m x n.
#[derive(Debug, Clone)]
pub struct EvaluatorOperators {
    a: DMatrix<f64>,
    q: DMatrix<f64>,
    t: DMatrix<f64>,
    b: DMatrix<f64>,
    f: DMatrix<f64>,
    h: DMatrix<f64>,
    b_decomp: SpectralDecomposition,
    adjoint_null_projector: DMatrix<f64>,
    lemma1_norm: f64,
    commutation_residual: f64,
}

impl EvaluatorOperators {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn t(&self) -> &DMatrix<f64> {
        &self.t
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn f_op(&self) -> &DMatrix<f64> {
        &self.f
    }
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }
    pub fn b_decomp(&self) -> &SpectralDecomposition {
        &self.b_decomp
    }
    /// Orthoprojector onto N* = {u : A^T u = 0}, the fixed-point subspace of H.
    pub fn adjoint_null_projector(&self) -> &DMatrix<f64> {
        &self.adjoint_null_projector
    }
    /// ||F||_2, which Lemma-style analysis bounds by 1/2.
    pub fn lemma1_norm(&self) -> f64 {
        self.lemma1_norm
    }
    /// ||(I+Q)^{-1} A - A (I+T)^{-1}||_F
    pub fn commutation_residual(&self) -> f64 {
        self.commutation_residual
    }
    pub fn range_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn domain_dim(&self) -> usize {
        self.a.ncols()
    }
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Forms Q, T, B, F, H explicitly. F is materialized in its closure form
/// A (I + T)^{-1}; the alternative route (I + Q)^{-1} A is computed once to
/// report the commutation residual.
pub fn build_operators(op: &GeneralOperator) -> Result<EvaluatorOperators> {
    let a = op.entries().clone();
    let (m, n) = (a.nrows(), a.ncols());
    if m > MAX_DIM || n > MAX_DIM {
        return Err(Error::InvalidProblem(format!(
            "operator {m}x{n} exceeds the supported dense scale {MAX_DIM}"
        )));
    }
    let q = symmetrize(&a * a.transpose());
    let t = symmetrize(a.transpose() * &a);
    let iq = DMatrix::identity(m, m) + &q;
    let it = DMatrix::identity(n, n) + &t;

    let chol_q = nalgebra::Cholesky::new(iq)
        .ok_or_else(|| Error::SolverBreakdown("Cholesky of I + Q failed".into()))?;
    let b = symmetrize(chol_q.inverse());

    let chol_t = nalgebra::Cholesky::new(it)
        .ok_or_else(|| Error::SolverBreakdown("Cholesky of I + T failed".into()))?;
    // F = A (I + T)^{-1}: solve (I + T) X = A^T, then F = X^T
    let f = chol_t.solve(&a.transpose()).transpose();
    let f_alt = &b * &a;
    let commutation_residual = (&f_alt - &f).norm();

    let h = DMatrix::identity(m, m) - &b;
    let b_decomp = eigendecompose(&SymmetricOperator::new(b.clone())?)?;
    let lemma1_norm = f
        .clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s));
    let adjoint_null_projector = null_projector(
        &a,
        crate::operator_core::default_rank_tolerance(&a),
        NullSide::Adjoint,
    )?;

    Ok(EvaluatorOperators {
        a,
        q,
        t,
        b,
        f,
        h,
        b_decomp,
        adjoint_null_projector,
        lemma1_norm,
        commutation_residual,
    })
}

/// Returns ||F||_2. Callers assert <= 1/2 + 1e-12; the commutation identity
/// residual is available on the operator bundle.
pub fn verify_lemma1(ops: &EvaluatorOperators) -> f64 {
    ops.lemma1_norm()
}

/// Iteration-count schedule n(delta) = ceil(C * delta^{-q}) with q in (0, 1),
/// so that n(delta) -> infinity while delta * n(delta) -> 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSchedule {
    coefficient: f64,
    exponent: f64,
}

impl IterationSchedule {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0) || !coefficient.is_finite() {
            return Err(Error::InvalidParameter {
                name: "coefficient",
                value: coefficient,
                reason: "must be a positive finite real",
            });
        }
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(Error::InvalidParameter {
                name: "exponent",
                value: exponent,
                reason: "must lie in the open interval (0, 1)",
            });
        }
        Ok(Self {
            coefficient,
            exponent,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// ceil(C * delta^{-q}), at least 1; rejects delta <= 0.
    pub fn n(&self, delta: f64) -> Result<usize> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "iteration schedule requires delta > 0",
            });
        }
        let raw = self.coefficient * delta.powf(-self.exponent);
        if !raw.is_finite() || raw > 1e12 {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                reason: "schedule yields an impractically large iteration count",
            });
        }
        Ok((raw.ceil() as usize).max(1))
    }
}

impl Default for IterationSchedule {
    /// n(delta) = ceil(delta^{-1/2}).
    fn default() -> Self {
        Self {
            coefficient: 1.0,
            exponent: 0.5,
        }
    }
}

/// Projects v0 onto the orthogonal complement of N*; the removed component
/// is reported back so callers can warn when it is non-negligible.
fn project_start(ops: &EvaluatorOperators, v0: &DVector<f64>) -> (DVector<f64>, f64) {
    let removed = ops.adjoint_null_projector() * v0;
    let mass = removed.norm();
    (v0 - removed, mass)
}

/// Runs exactly `n` steps of v <- H v + F f_delta from v0 (projected onto
/// the complement of N* first). n = 0 returns the projected v0.
pub fn iterate_eq7(
    ops: &EvaluatorOperators,
    f_delta: &DVector<f64>,
    n: usize,
    v0: &DVector<f64>,
) -> Result<DVector<f64>> {
    if f_delta.len() != ops.domain_dim() {
        return Err(Error::DimensionMismatch {
            context: "iterate_eq7 data",
            expected: ops.domain_dim(),
            actual: f_delta.len(),
        });
    }
    if v0.len() != ops.range_dim() {
        return Err(Error::DimensionMismatch {
            context: "iterate_eq7 start vector",
            expected: ops.range_dim(),
            actual: v0.len(),
        });
    }
    let (mut v, removed) = project_start(ops, v0);
    if removed > 1e-10 * (1.0 + v0.norm()) {
        log::warn!(
            "start vector had a component of norm {removed:.3e} in N*; it was projected out"
        );
    }
    let g = ops.f_op() * f_delta;
    for _ in 0..n {
        v = ops.h() * v + &g;
    }
    Ok(v)
}

/// Error bound n*delta/2 + sqrt(sum_k (1 - s_k)^{2n} <w0, phi_k>^2) over the
/// eigenpairs (s_k, phi_k) of B.
pub fn bound_eq9(ops: &EvaluatorOperators, w0: &DVector<f64>, n: usize, delta: f64) -> Result<f64> {
    if w0.len() != ops.range_dim() {
        return Err(Error::DimensionMismatch {
            context: "bound_eq9 w0",
            expected: ops.range_dim(),
            actual: w0.len(),
        });
    }
    let coeffs = ops.b_decomp().eigenvectors().transpose() * w0;
    let mut tail = 0.0;
    for k in 0..coeffs.len() {
        // eigenvalues of B lie in [0, 1]; clamp rounding spill
        let one_minus_s = (1.0 - ops.b_decomp().eigenvalues()[k]).clamp(0.0, 1.0);
        tail += one_minus_s.powi(2 * n as i32) * coeffs[k] * coeffs[k];
    }
    Ok(n as f64 * delta / 2.0 + tail.sqrt())
}

/// Deflated spectral tail: sum over modes with s_k >= h of
/// (1 - s_k)^{2n} <w0, phi_k>^2.
pub fn tail_mass_eq10(
    ops: &EvaluatorOperators,
    w0: &DVector<f64>,
    h: f64,
    n: usize,
) -> Result<f64> {
    if w0.len() != ops.range_dim() {
        return Err(Error::DimensionMismatch {
            context: "tail_mass_eq10 w0",
            expected: ops.range_dim(),
            actual: w0.len(),
        });
    }
    if !(0.0..1.0).contains(&h) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            reason: "must lie in [0, 1)",
        });
    }
    let coeffs = ops.b_decomp().eigenvectors().transpose() * w0;
    let mut mass = 0.0;
    for k in 0..coeffs.len() {
        let s = ops.b_decomp().eigenvalues()[k];
        if s >= h {
            let one_minus_s = (1.0 - s).clamp(0.0, 1.0);
            mass += one_minus_s.powi(2 * n as i32) * coeffs[k] * coeffs[k];
        }
    }
    Ok(mass)
}

/// Approximation to A f from noisy data, with the diagnostics the sweeps
/// record.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub v_delta: DVector<f64>,
    pub n_used: usize,
    pub delta: f64,
    /// ||v_delta - A f||, present when the exact f is supplied.
    pub error_vs_af: Option<f64>,
    /// Bound at w0 = v0 - A f, present when the exact f is supplied.
    pub bound_eq9: Option<f64>,
    /// ||F||_2 of the operator bundle.
    pub lemma1_norm: f64,
}

/// Full evaluation pipeline: build operators, pick n (an explicit override
/// or the schedule), iterate, and fill the report. delta = 0 requires an
/// explicit n. The default start vector is 0, which is orthogonal to N*
/// unconditionally.
pub fn evaluate_unbounded(
    op: &GeneralOperator,
    f_delta: &DVector<f64>,
    delta: f64,
    schedule: &IterationSchedule,
    n_override: Option<usize>,
    v0: Option<&DVector<f64>>,
    exact_f: Option<&DVector<f64>>,
) -> Result<EvalReport> {
    let ops = build_operators(op)?;
    evaluate_with_operators(&ops, f_delta, delta, schedule, n_override, v0, exact_f)
}

/// Same as [`evaluate_unbounded`] but reusing a prebuilt operator bundle.
pub fn evaluate_with_operators(
    ops: &EvaluatorOperators,
    f_delta: &DVector<f64>,
    delta: f64,
    schedule: &IterationSchedule,
    n_override: Option<usize>,
    v0: Option<&DVector<f64>>,
    exact_f: Option<&DVector<f64>>,
) -> Result<EvalReport> {
    let n_used = match n_override {
        Some(n) => n,
        None => schedule.n(delta)?,
    };
    let zero;
    let v0 = match v0 {
        Some(v) => v,
        None => {
            zero = DVector::zeros(ops.range_dim());
            &zero
        }
    };
    let v_delta = iterate_eq7(ops, f_delta, n_used, v0)?;
    let (error_vs_af, bound) = match exact_f {
        Some(f) => {
            let af = ops.a() * f;
            let (v0p, _) = project_start(ops, v0);
            let w0 = &v0p - &af;
            (
                Some((&v_delta - &af).norm()),
                Some(bound_eq9(ops, &w0, n_used, delta)?),
            )
        }
        None => (None, None),
    };
    Ok(EvalReport {
        v_delta,
        n_used,
        delta,
        error_vs_af,
        bound_eq9: bound,
        lemma1_norm: ops.lemma1_norm(),
    })
}

/// One row of an unbounded-evaluation delta-sweep:
/// (delta, n_used, error, bound_eq9, lemma1_norm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub delta: f64,
    pub n_used: usize,
    pub error: f64,
    pub bound_eq9: f64,
    pub lemma1_norm: f64,
}

/// Delta-sweep of the evaluation pipeline with calibrated noise on the exact
/// data `f`. Rows are sorted by descending delta; per-row noise seeds derive
/// from (seed, row index).
pub fn unbounded_sweep(
    op: &GeneralOperator,
    f: &DVector<f64>,
    deltas: &[f64],
    schedule: &IterationSchedule,
    seed: u64,
) -> Result<Vec<EvalRow>> {
    let ops = build_operators(op)?;
    let mut sorted: Vec<f64> = deltas.to_vec();
    sorted.sort_by(|x, z| z.total_cmp(x));
    sorted
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let datum = make_noisy(f, delta, derive_seed(seed, i as u64))?;
            let report = evaluate_with_operators(
                &ops,
                &datum.f_delta,
                delta,
                schedule,
                None,
                None,
                Some(f),
            )?;
            Ok(EvalRow {
                delta,
                n_used: report.n_used,
                error: report.error_vs_af.unwrap(),
                bound_eq9: report.bound_eq9.unwrap(),
                lemma1_norm: report.lemma1_norm,
            })
        })
        .collect()
}
