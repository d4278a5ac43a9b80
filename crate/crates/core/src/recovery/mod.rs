//! Sparse recovery at the fusion center.
//!
//! Recovers `ŝ` from `y = A s` by greedy `ℓ0` pursuit (OMP) or `ℓ1`
//! minimization (basis pursuit), and reconstructs `x̂ = Ψ ŝ`.

mod bp;
pub(crate) mod l0;
mod omp;

pub use bp::{bp_solve, BpParams};
pub use l0::{l0_oracle, l0_oracle_detailed, L0Outcome, MAX_L0_SUPPORTS};
pub use omp::{omp_solve, omp_solve_traced, OmpParams, OmpTrace};

use nalgebra::{DMatrix, DVector};

use crate::channel::{outcome_to_selection, ChannelOutcome};
use crate::error::{Error, Result};
use crate::matrices::{compose_sensing_matrix, ProjectionMatrix, SensingMatrix};
use crate::signal::{l2_norm, BasisKind, Signal, SparseCoefficients, SparsifyingBasis};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub s_hat: Vec<f64>,
    pub x_hat: Signal,
    /// Indices of the nonzero coefficients chosen by the solver.
    pub support: Vec<usize>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Omp(OmpParams),
    Bp(BpParams),
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Omp(_) => "omp",
            Solver::Bp(_) => "bp",
        }
    }
}

/// `‖x − x̂‖₂ / ‖x‖₂`.
pub fn recovery_error(x: &Signal, x_hat: &Signal) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::DimensionMismatch {
            context: "recovery_error",
            expected: x.len(),
            actual: x_hat.len(),
        });
    }
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: Vec<f64> = x
        .samples()
        .iter()
        .zip(x_hat.samples())
        .map(|(a, b)| a - b)
        .collect();
    Ok(l2_norm(&diff) / norm)
}

/// Full fusion-center pipeline: compose `A`, solve, synthesize `x̂`.
///
/// When `truth` is given the relative recovery error is filled in.
pub fn recover_signal(
    outcome: &ChannelOutcome,
    proj: &ProjectionMatrix,
    basis: &SparsifyingBasis,
    solver: &Solver,
    truth: Option<&Signal>,
) -> Result<RecoveryResult> {
    let sel = outcome_to_selection(outcome);
    let a = compose_sensing_matrix(&sel, proj, basis)?;
    let mut result = match solver {
        Solver::Omp(params) => omp_solve(&a, outcome.y(), params)?,
        Solver::Bp(params) => bp_solve(&a, outcome.y(), params)?,
    };
    if let Some(x) = truth {
        result.relative_error = Some(recovery_error(x, &result.x_hat)?);
    }
    Ok(result)
}

pub(crate) fn check_measurements(a: &SensingMatrix, y: &[f64]) -> Result<()> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "measurement vector",
            expected: a.rows(),
            actual: y.len(),
        });
    }
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample { index });
    }
    Ok(())
}

/// `‖y − A s‖₂`, recomputed from scratch.
pub fn residual_norm(a: &SensingMatrix, y: &[f64], s: &[f64]) -> f64 {
    let fitted = a.mul(s);
    let diff: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    l2_norm(&diff)
}

/// Packages a coefficient vector into a result, synthesizing in the basis
/// recorded in `a`'s provenance (canonical when absent).
pub(crate) fn finish(
    a: &SensingMatrix,
    y: &[f64],
    s_hat: Vec<f64>,
    iterations: usize,
) -> Result<RecoveryResult> {
    let kind = a
        .provenance()
        .map(|p| p.basis)
        .unwrap_or(BasisKind::Canonical);
    let basis = SparsifyingBasis::new(kind, a.cols())?;
    let x_hat = basis.synthesize(&SparseCoefficients::new(s_hat.clone()))?;
    let support = s_hat
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(RecoveryResult {
        residual_norm: residual_norm(a, y, &s_hat),
        s_hat,
        x_hat,
        support,
        iterations,
        relative_error: None,
    })
}

/// Least squares on the columns `support` of `a`; `None` when those
/// columns are numerically dependent.
pub(crate) fn support_least_squares(
    a: &DMatrix<f64>,
    y: &[f64],
    support: &[usize],
    rank_tol: f64,
) -> Option<DVector<f64>> {
    if support.is_empty() {
        return Some(DVector::zeros(0));
    }
    let sub = a.select_columns(support);
    let qr = sub.qr();
    let r = qr.r();
    if (0..support.len()).any(|i| r[(i, i)].abs() <= rank_tol) {
        return None;
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    r.solve_upper_triangular(&qty)
}

pub(crate) fn max_column_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}
