//! Self-check suite behind `illposed verify`: runs the library's structural
//! invariants on the canonical test problems and prints one line per check.

use nalgebra::{DMatrix, DVector};
use std::io::Write;

use crate::baseline::{
    condition_numbers, flop_model, solve_tikhonov, solve_tikhonov_spectral, Method,
};
use crate::operator_core::{eigendecompose, make_noisy, SymmetricOperator};
use crate::problems::{
    first_derivative_matrix, gauss_deconv_matrix, hilbert_matrix, rank_deficient_matrix,
    second_derivative_matrix,
};
use crate::shift::{bound_eq4, complex_error, solve_shift, solve_shift_spectral};
use crate::unbounded::{build_operators, verify_lemma1};

fn check(out: &mut dyn Write, name: &str, ok: bool, detail: String) -> usize {
    let status = if ok { "ok" } else { "FAIL" };
    let _ = writeln!(out, "{status:4} {name}: {detail}");
    usize::from(!ok)
}

/// Runs every check, printing one pass/fail line each; returns the number
/// of failures.
pub fn run_verification(out: &mut dyn Write) -> usize {
    let mut failures = 0;

    // Lemma-style norm bound ||A (I + A^T A)^{-1}||_2 <= 1/2 on the
    // canonical operator set
    let mut worst: f64 = 0.0;
    let mut built_all = true;
    let mut operators: Vec<(String, DMatrix<f64>)> = Vec::new();
    for n in 4..=12 {
        operators.push((format!("hilbert({n})"), hilbert_matrix(n)));
    }
    operators.push(("gauss_deconv(64)".into(), gauss_deconv_matrix(64, 3.0)));
    operators.push(("second_derivative(64)".into(), second_derivative_matrix(64)));
    operators.push(("first_derivative(64)".into(), first_derivative_matrix(64)));
    match rank_deficient_matrix(8, 2, 0) {
        Ok(m) => operators.push(("rank_deficient(8,2)".into(), m)),
        Err(_) => built_all = false,
    }
    let mut commutation_ok = true;
    for (_, m) in &operators {
        match crate::operator_core::GeneralOperator::new(m.clone())
            .and_then(|g| build_operators(&g))
        {
            Ok(ops) => {
                worst = worst.max(verify_lemma1(&ops));
                if ops.commutation_residual() > 1e-10 * (1.0 + m.norm()) {
                    commutation_ok = false;
                }
            }
            Err(_) => built_all = false,
        }
    }
    failures += check(
        out,
        "contraction norm",
        built_all && worst <= 0.5 + 1e-12,
        format!("max ||F||_2 = {worst:.6e} (limit 0.5)"),
    );
    failures += check(
        out,
        "commutation identity",
        commutation_ok,
        "||(I+Q)^-1 A - A (I+T)^-1||_F within 1e-10 (1 + ||A||_F)".into(),
    );

    // condition-number square-root identity on Hilbert matrices
    let mut cond_ok = true;
    let mut worst_ratio_dev: f64 = 0.0;
    for n in [8usize, 10, 12] {
        let op = SymmetricOperator::new(hilbert_matrix(n)).unwrap();
        let d = eigendecompose(&op).unwrap();
        for a in [1e-2, 1e-4, 1e-6] {
            match condition_numbers(&d, a) {
                Ok(c) => {
                    let dev = (c.ratio_check - 1.0).abs();
                    worst_ratio_dev = worst_ratio_dev.max(dev);
                    if dev > 1e-8 {
                        cond_ok = false;
                    }
                }
                Err(_) => cond_ok = false,
            }
        }
    }
    failures += check(
        out,
        "condition identity",
        cond_ok,
        format!("max |kappa_shift/sqrt(kappa_normal) - 1| = {worst_ratio_dev:.3e}"),
    );

    // shifted-solve error bound with calibrated noise on hilbert(10)
    let op = SymmetricOperator::new(hilbert_matrix(10)).unwrap();
    let decomp = eigendecompose(&op).unwrap();
    let y = op.entries() * crate::problems::smooth_sine(10);
    let f = op.entries() * &y;
    let mut bound_ok = true;
    for (i, delta) in [1e-2_f64, 1e-4, 1e-6].into_iter().enumerate() {
        let a = delta.sqrt();
        let datum = make_noisy(&f, delta, 1000 + i as u64).unwrap();
        let u = solve_shift(&op, &datum.f_delta, a).unwrap();
        let err = complex_error(&u, &y);
        let bound = bound_eq4(&decomp, &y, a, delta).unwrap();
        if err > bound + 1e-10 * (1.0 + y.norm()) {
            bound_ok = false;
        }
    }
    failures += check(
        out,
        "shift error bound",
        bound_ok,
        "||u_delta - y|| within delta/a + a ||(A+ia)^-1 y||".into(),
    );

    // the two resolvent routes agree
    let fd = make_noisy(&f, 1e-3, 7).unwrap().f_delta;
    let direct = solve_shift(&op, &fd, 1e-2).unwrap();
    let spectral = solve_shift_spectral(&decomp, &fd, 1e-2).unwrap();
    let resolvent_dev = (&direct - &spectral).norm() / direct.norm();
    failures += check(
        out,
        "resolvent oracle",
        resolvent_dev <= 1e-10,
        format!("relative deviation {resolvent_dev:.3e}"),
    );

    // Tikhonov direct solve vs spectral filter
    let tik = solve_tikhonov(op.entries(), &fd, 1e-4).unwrap();
    let tik_spec = solve_tikhonov_spectral(&decomp, &fd, 1e-4).unwrap();
    let tik_dev = (&tik - &tik_spec).norm() / tik.norm();
    failures += check(
        out,
        "tikhonov oracle",
        tik_dev <= 1e-10,
        format!("relative deviation {tik_dev:.3e}"),
    );

    // iteration error bound on the rectangular derivative problem
    let deriv = crate::operator_core::GeneralOperator::new(first_derivative_matrix(64)).unwrap();
    let ops = build_operators(&deriv).unwrap();
    let x = |j: usize| j as f64 / 64.0;
    let data = DVector::from_fn(65, |j, _| {
        -(2.0 * std::f64::consts::PI * x(j)).cos() / (2.0 * std::f64::consts::PI)
    });
    let af = ops.a() * &data;
    let mut iter_bound_ok = true;
    for (i, delta) in [1e-2, 1e-4].into_iter().enumerate() {
        let datum = make_noisy(&data, delta, 2000 + i as u64).unwrap();
        let n = crate::unbounded::IterationSchedule::default()
            .n(delta)
            .unwrap();
        let v =
            crate::unbounded::iterate_eq7(&ops, &datum.f_delta, n, &DVector::zeros(64)).unwrap();
        let err = (&v - &af).norm();
        let w0 = -&af;
        let bound = crate::unbounded::bound_eq9(&ops, &w0, n, delta).unwrap();
        if err > bound + 1e-8 * (1.0 + af.norm()) {
            iter_bound_ok = false;
        }
    }
    failures += check(
        out,
        "iteration error bound",
        iter_bound_ok,
        "||v_n - Af|| within n delta/2 + spectral tail".into(),
    );

    // operation-count model ordering
    let model_ok = [64usize, 128, 256, 512]
        .iter()
        .all(|&d| flop_model(Method::Tikhonov, d).unwrap() > flop_model(Method::Shift, d).unwrap());
    failures += check(
        out,
        "operation-count model",
        model_ok,
        "normal-equations route exceeds the shifted route for dim >= 64".into(),
    );

    failures
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verification_suite_passes() {
        let mut buf = Vec::new();
        let failures = run_verification(&mut buf);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(failures, 0, "verify output:\n{text}");
        assert!(text.lines().count() >= 7);
    }
}
