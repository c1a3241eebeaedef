//! CSV parsing and serialization for matrices, vectors and report tables,
//! plus the JSON experiment configuration.
//!
//! Matrices are headerless CSV, one row per line; vectors are single-column
//! CSV. Floating point is emitted with 17 significant digits so parsing a
//! written file reproduces every value exactly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{BenchRow, CompareReport};
use crate::problems::ProblemSpec;
use crate::shift::ConvergenceReport;
use crate::unbounded::EvalRow;

/// Parse failure with a 1-based line number for diagnostics.
#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

fn parse_float(token: &str, line: usize) -> Result<f64, ParseError> {
    let trimmed = token.trim();
    if trimmed.is_empty() {
        return Err(ParseError::new(line, "empty field"));
    }
    trimmed
        .parse::<f64>()
        .map_err(|e| ParseError::new(line, format!("bad float `{trimmed}`: {e}")))
}

/// Parses a headerless CSV matrix. All rows must have the same width;
/// blank lines are rejected except for a single trailing newline.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>, ParseError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            return Err(ParseError::new(line_no, "blank line inside matrix"));
        }
        let row: Vec<f64> = raw
            .split(',')
            .map(|tok| parse_float(tok, line_no))
            .collect::<Result<_, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(ParseError::new(
                    line_no,
                    format!("expected {w} columns, found {}", row.len()),
                ));
            }
            _ => {}
        }
        if rows.len() >= crate::operator_core::MAX_DIM {
            return Err(ParseError::new(line_no, "matrix exceeds supported size"));
        }
        if row.len() > crate::operator_core::MAX_DIM {
            return Err(ParseError::new(line_no, "matrix exceeds supported size"));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ParseError::new(1, "empty matrix"));
    }
    let nrows = rows.len();
    let ncols = width.unwrap();
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Parses a single-column CSV vector, one value per line.
pub fn parse_vector_csv(text: &str) -> Result<DVector<f64>, ParseError> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            return Err(ParseError::new(line_no, "blank line inside vector"));
        }
        if raw.contains(',') {
            return Err(ParseError::new(
                line_no,
                "vectors are single-column CSV; found a comma",
            ));
        }
        values.push(parse_float(raw, line_no)?);
        if values.len() > crate::operator_core::MAX_DIM {
            return Err(ParseError::new(line_no, "vector exceeds supported size"));
        }
    }
    if values.is_empty() {
        return Err(ParseError::new(1, "empty vector"));
    }
    Ok(DVector::from_vec(values))
}

/// 17 significant digits; round-trips through `f64::from_str` exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn format_vector_csv(v: &DVector<f64>) -> String {
    let mut out = String::new();
    for i in 0..v.len() {
        out.push_str(&format_f64(v[i]));
        out.push('\n');
    }
    out
}

/// Complex vectors are emitted as two columns: real part, imaginary part.
pub fn format_complex_vector_csv(v: &DVector<Complex64>) -> String {
    let mut out = String::new();
    for i in 0..v.len() {
        out.push_str(&format_f64(v[i].re));
        out.push(',');
        out.push_str(&format_f64(v[i].im));
        out.push('\n');
    }
    out
}

/// Header `delta,a,error,bound_eq4,residual`.
pub fn format_convergence_report(report: &ConvergenceReport) -> String {
    let mut out = String::from("delta,a,error,bound_eq4,residual\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_f64(row.delta),
            format_f64(row.a),
            format_f64(row.error),
            format_f64(row.bound_eq4),
            format_f64(row.residual)
        ));
    }
    out
}

/// Header `delta,n_used,error,bound_eq9,lemma1_norm`.
pub fn format_eval_report(rows: &[EvalRow]) -> String {
    let mut out = String::from("delta,n_used,error,bound_eq9,lemma1_norm\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_f64(row.delta),
            row.n_used,
            format_f64(row.error),
            format_f64(row.bound_eq9),
            format_f64(row.lemma1_norm)
        ));
    }
    out
}

/// Header
/// `delta,a,alpha,error_shift,error_tikhonov,kappa_shift,kappa_normal,flops_shift,flops_tikhonov`.
pub fn format_compare_report(report: &CompareReport) -> String {
    let mut out = String::from(
        "delta,a,alpha,error_shift,error_tikhonov,kappa_shift,kappa_normal,flops_shift,flops_tikhonov\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            format_f64(row.delta),
            format_f64(row.a),
            format_f64(row.alpha),
            format_f64(row.error_shift),
            format_f64(row.error_tikhonov),
            format_f64(row.kappa_shift),
            format_f64(row.kappa_normal),
            row.flops_shift,
            row.flops_tikhonov
        ));
    }
    out
}

/// Header `method,dim,modeled_flops,measured_seconds,kappa`.
pub fn format_bench_report(rows: &[BenchRow]) -> String {
    let mut out = String::from("method,dim,modeled_flops,measured_seconds,kappa\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.method.name(),
            row.dim,
            row.modeled_flops,
            format_f64(row.measured_seconds),
            format_f64(row.kappa)
        ));
    }
    out
}

/// Schedule parameters (coefficient, exponent) as they appear in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub c: f64,
    pub exponent: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            exponent: 0.5,
        }
    }
}

/// JSON experiment configuration consumed by the `sweep` and `compare`
/// subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    /// Strictly decreasing positive noise levels.
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub shift_schedule: ScheduleConfig,
    #[serde(default)]
    pub iteration_schedule: ScheduleConfig,
    pub seed: u64,
    /// Optional default output path for the report.
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.deltas.is_empty() {
            return Err("deltas must be nonempty".into());
        }
        for pair in self.deltas.windows(2) {
            if !(pair[1] < pair[0]) {
                return Err("deltas must be strictly decreasing".into());
            }
        }
        for &d in &self.deltas {
            if !(d > 0.0) || !d.is_finite() {
                return Err(format!("deltas must be positive finite reals, got {d}"));
            }
        }
        for (name, s) in [
            ("shift_schedule", &self.shift_schedule),
            ("iteration_schedule", &self.iteration_schedule),
        ] {
            if !(s.c > 0.0) || !s.c.is_finite() {
                return Err(format!("{name}.c must be positive, got {}", s.c));
            }
            if !(s.exponent > 0.0 && s.exponent < 1.0) {
                return Err(format!(
                    "{name}.exponent must lie in (0, 1), got {}",
                    s.exponent
                ));
            }
        }
        Ok(())
    }
}

/// Parses and validates an experiment configuration; serde's line/column
/// diagnostics are forwarded as the line number.
pub fn parse_config_json(text: &str) -> Result<ExperimentConfig, ParseError> {
    let config: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| ParseError::new(e.line(), e.to_string()))?;
    config.validate().map_err(|m| ParseError::new(0, m))?;
    Ok(config)
}
