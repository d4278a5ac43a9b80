//! Exhaustive minimum-support solver for small instances.

use nalgebra::DVector;

use super::{check_measurements, finish, max_column_norm, support_least_squares, RecoveryResult};
use crate::error::{Error, Result};
use crate::matrices::SensingMatrix;

/// Largest `C(N, K)` the exhaustive search will attempt.
pub const MAX_L0_SUPPORTS: u128 = 1_000_000;

/// Relative residual at which a support is taken to reproduce `y`.
const FIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct L0Outcome {
    pub result: RecoveryResult,
    /// Every support of the minimal size that fits `y`, in lexicographic order.
    pub minimal_supports: Vec<Vec<usize>>,
}

impl L0Outcome {
    pub fn is_unique(&self) -> bool {
        self.minimal_supports.len() == 1
    }
}

/// Smallest support (lexicographically first among equals) whose
/// least-squares fit leaves a residual `≤ 1e-8 · ‖y‖`.
pub fn l0_oracle(a: &SensingMatrix, y: &[f64], max_sparsity: usize) -> Result<RecoveryResult> {
    l0_oracle_detailed(a, y, max_sparsity).map(|o| o.result)
}

/// As [`l0_oracle`], also enumerating all minimal fitting supports so callers
/// can tell whether the sparsest solution is unique.
pub fn l0_oracle_detailed(a: &SensingMatrix, y: &[f64], max_sparsity: usize) -> Result<L0Outcome> {
    check_measurements(a, y)?;
    let entries = a.entries();
    let n = entries.ncols();
    if max_sparsity > n {
        return Err(Error::invalid(
            "max_sparsity",
            format!("{max_sparsity} exceeds {n} columns"),
        ));
    }
    let combinations = binomial(n, max_sparsity);
    if combinations > MAX_L0_SUPPORTS {
        return Err(Error::SearchTooLarge {
            combinations,
            limit: MAX_L0_SUPPORTS,
        });
    }
    let y_vec = DVector::from_column_slice(y);
    let tol = FIT_TOL * y_vec.norm();
    let rank_tol = 1e-10 * max_column_norm(entries);

    for size in 0..=max_sparsity {
        let mut fits: Vec<(Vec<usize>, DVector<f64>)> = Vec::new();
        for support in Combinations::new(n, size) {
            let Some(z) = support_least_squares(entries, y, &support, rank_tol) else {
                continue;
            };
            let fitted = if support.is_empty() {
                DVector::zeros(y.len())
            } else {
                entries.select_columns(&support) * &z
            };
            if (&y_vec - fitted).norm() <= tol {
                fits.push((support, z));
            }
        }
        if let Some((support, z)) = fits.first() {
            let mut s = vec![0.0; n];
            for (pos, &j) in support.iter().enumerate() {
                s[j] = z[pos];
            }
            let minimal_supports = fits.iter().map(|(s, _)| s.clone()).collect();
            return Ok(L0Outcome {
                result: finish(a, y, s, size)?,
                minimal_supports,
            });
        }
    }
    Err(Error::NoFeasibleSupport { max_sparsity })
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
