//! Regularized solvers for ill-posed linear problems at desk scale.
//!
//! Two stabilization routes for noisy data f_delta with ||f_delta - f|| = delta:
//!
//! * the complex-shift method: solve (A + i a I) u = f_delta for selfadjoint A
//!   under a schedule a(delta), which converges to the minimal-norm solution
//!   of A u = f as delta -> 0 ([`shift`]);
//! * stable evaluation of v = A f for a general (possibly rectangular) A by
//!   the fixed-point iteration v_{n+1} = (I - B) v_n + F f_delta with
//!   B = (I + A A^T)^{-1} and F = A (I + A^T A)^{-1} ([`unbounded`]).
//!
//! A Tikhonov baseline, condition-number comparison and operation-count
//! model live in [`baseline`]; canonical ill-posed test problems in
//! [`problems`]; CSV/JSON formats in [`io`]; the CLI in [`cli`].

// `!(x > 0.0)` is used throughout to reject NaN along with nonpositives
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cli;
pub mod error;
pub mod io;
pub mod operator_core;
pub mod problems;
pub mod shift;
pub mod unbounded;
pub mod verify;

pub use error::{Error, Result};
