use nalgebra::{DMatrix, DVector};

use super::{check_measurements, finish, max_column_norm, RecoveryResult};
use crate::error::{Error, Result};
use crate::matrices::SensingMatrix;

/// Relative rank-deficiency threshold for a newly selected column.
const RANK_TOL: f64 = 1e-10;
/// Correlations below this fraction of `max‖a_j‖ · ‖y‖` are roundoff.
const CORR_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpParams {
    /// Support size ceiling; `None` means `M / 2`.
    pub max_sparsity: Option<usize>,
    /// Stop once `‖r‖ ≤ residual_tol · ‖y‖`.
    pub residual_tol: f64,
    /// Rank columns by `|a_jᵀ r| / ‖a_j‖` instead of `|a_jᵀ r|`.
    pub normalize_columns: bool,
}

impl Default for OmpParams {
    fn default() -> Self {
        OmpParams {
            max_sparsity: None,
            residual_tol: 1e-6,
            normalize_columns: true,
        }
    }
}

/// Per-iteration record of an OMP run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OmpTrace {
    /// Columns in selection order.
    pub selected: Vec<usize>,
    /// Residual norm after each iteration.
    pub residual_norms: Vec<f64>,
}

pub fn omp_solve(a: &SensingMatrix, y: &[f64], params: &OmpParams) -> Result<RecoveryResult> {
    omp_solve_traced(a, y, params).map(|(r, _)| r)
}

/// Orthogonal matching pursuit.
///
/// Each iteration picks the column with the largest `|a_jᵀ r|`, divided by
/// `‖a_j‖` when `normalize_columns` is set (lowest index on ties; zero
/// columns are never picked), extends an orthonormal basis of the selected columns by
/// re-orthogonalized Gram-Schmidt, and projects `y` onto it. The coefficients
/// are the least-squares fit on the support, recovered from the triangular
/// factor at the end.
pub fn omp_solve_traced(
    a: &SensingMatrix,
    y: &[f64],
    params: &OmpParams,
) -> Result<(RecoveryResult, OmpTrace)> {
    check_measurements(a, y)?;
    let entries = a.entries();
    let (m, n) = entries.shape();
    let max_sparsity = params.max_sparsity.unwrap_or(m / 2);
    if max_sparsity > m {
        return Err(Error::invalid(
            "max_sparsity",
            format!("{max_sparsity} exceeds the {m} measurements"),
        ));
    }
    if !(params.residual_tol >= 0.0) {
        return Err(Error::invalid("residual_tol", "must be nonnegative"));
    }
    let max_sparsity = max_sparsity.min(n);

    let y_vec = DVector::from_column_slice(y);
    let y_norm = y_vec.norm();
    let mut trace = OmpTrace::default();
    if y_norm == 0.0 {
        return Ok((finish(a, y, vec![0.0; n], 0)?, trace));
    }
    let stop_at = params.residual_tol * y_norm;
    let max_norm = max_column_norm(entries);
    let rank_floor = RANK_TOL * max_norm;
    let corr_floor = CORR_FLOOR * max_norm * y_norm;

    let mut q: Vec<DVector<f64>> = Vec::with_capacity(max_sparsity);
    // r_cols[k] holds column k of the upper-triangular factor
    let mut r_cols: Vec<Vec<f64>> = Vec::with_capacity(max_sparsity);
    let mut qty: Vec<f64> = Vec::with_capacity(max_sparsity);
    let mut in_support = vec![false; n];
    let mut residual = y_vec.clone();
    let mut residual_norm = y_norm;

    let weights: Vec<f64> = entries
        .column_iter()
        .map(|c| match c.norm() {
            0.0 => 0.0,
            norm if params.normalize_columns => max_norm / norm,
            _ => 1.0,
        })
        .collect();

    while trace.selected.len() < max_sparsity && residual_norm > stop_at {
        let mut corr = entries.tr_mul(&residual);
        corr.iter_mut().zip(&weights).for_each(|(c, w)| *c *= w);
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in corr.iter().enumerate() {
            if in_support[j] {
                continue;
            }
            if best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let Some((j, best_corr)) = best else { break };
        if best_corr <= corr_floor {
            // residual is orthogonal to every remaining column
            break;
        }

        let iteration = trace.selected.len() + 1;
        let col = entries.column(j).into_owned();
        let mut v = col.clone();
        let mut coeffs = vec![0.0; q.len()];
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let proj = qk.dot(&v);
                coeffs[k] += proj;
                v.axpy(-proj, qk, 1.0);
            }
        }
        let norm = v.norm();
        if norm <= rank_floor {
            return Err(Error::SingularSupport { iteration });
        }
        v /= norm;
        coeffs.push(norm);

        let step = v.dot(&residual);
        residual.axpy(-step, &v, 1.0);
        qty.push(v.dot(&y_vec));
        q.push(v);
        r_cols.push(coeffs);
        in_support[j] = true;
        trace.selected.push(j);
        residual_norm = residual.norm();
        trace.residual_norms.push(residual_norm);
    }

    let k = trace.selected.len();
    let mut s_hat = vec![0.0; n];
    if k > 0 {
        let r = DMatrix::from_fn(
            k,
            k,
            |row, col| if row <= col { r_cols[col][row] } else { 0.0 },
        );
        let z = r
            .solve_upper_triangular(&DVector::from_column_slice(&qty))
            .ok_or(Error::SingularSupport { iteration: k })?;
        for (pos, &j) in trace.selected.iter().enumerate() {
            s_hat[j] = z[pos];
        }
    }
    Ok((finish(a, y, s_hat, k)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_single_spike() {
        let a = SensingMatrix::from_dense(DMatrix::identity(8, 8));
        let mut y = vec![0.0; 8];
        y[2] = 5.0;
        let r = omp_solve(&a, &y, &OmpParams::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.s_hat, y);
        assert_eq!(r.support, vec![2]);
    }

    #[test]
    fn zero_measurements() {
        let a = SensingMatrix::from_dense(DMatrix::from_element(3, 5, 0.5));
        let r = omp_solve(&a, &[0.0; 3], &OmpParams::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.s_hat.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let a = SensingMatrix::from_dense(DMatrix::from_row_slice(
            2,
            3,
            &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ));
        let (_, trace) = omp_solve_traced(&a, &[1.0, 0.0], &OmpParams::default()).unwrap();
        assert_eq!(trace.selected[0], 0);
    }

    #[test]
    fn duplicate_column_is_singular() {
        // exact duplicates: once one is picked the other has zero correlation
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let a = SensingMatrix::from_dense(a);
        let params = OmpParams {
            max_sparsity: Some(3),
            residual_tol: 0.0,
            ..OmpParams::default()
        };
        let r = omp_solve(&a, &[1.0, 2.0, 3.0], &params).unwrap();
        assert_eq!(r.iterations, 2);
        assert_eq!(r.support, vec![0, 2]);
        // a column far below the rank floor still correlates with the residual
        let bad = SensingMatrix::from_dense(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]));
        for normalize_columns in [true, false] {
            let err = omp_solve(
                &bad,
                &[1.0, 1.0],
                &OmpParams {
                    max_sparsity: Some(2),
                    residual_tol: 0.0,
                    normalize_columns,
                },
            );
            assert!(matches!(err, Err(Error::SingularSupport { iteration: 2 })));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let a = SensingMatrix::from_dense(DMatrix::identity(3, 3));
        assert!(omp_solve(&a, &[1.0, 2.0], &OmpParams::default()).is_err());
        let params = OmpParams {
            max_sparsity: Some(4),
            ..Default::default()
        };
        assert!(omp_solve(&a, &[1.0, 2.0, 3.0], &params).is_err());
    }
}
