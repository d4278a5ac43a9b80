//! Basis pursuit, `min ‖s‖₁ s.t. A s = y`, as the split linear program
//! `min 1ᵀ(u⁺ + u⁻) s.t. [A, −A][u⁺; u⁻] = y, u ≥ 0`, solved by a two-phase
//! dense tableau simplex. The optimal basis is re-solved directly against
//! the original columns to strip accumulated pivot error.

use nalgebra::{DMatrix, DVector};

use super::{check_measurements, finish, residual_norm, RecoveryResult};
use crate::error::{Error, Result};
use crate::matrices::SensingMatrix;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;
/// Pivots between rebuilds of the tableau from the original columns.
const REINVERT_EVERY: usize = 64;
/// Primal feasibility slack of the Harris ratio test (unit-norm `b`).
const HARRIS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpParams {
    /// Accept when `‖A ŝ − y‖ ≤ feasibility_tol · ‖y‖`.
    pub feasibility_tol: f64,
    /// Pivot budget across both phases; `None` means `50 · (M + N)`.
    pub max_pivots: Option<usize>,
}

impl Default for BpParams {
    fn default() -> Self {
        BpParams {
            feasibility_tol: 1e-8,
            max_pivots: None,
        }
    }
}

pub fn bp_solve(a: &SensingMatrix, y: &[f64], params: &BpParams) -> Result<RecoveryResult> {
    check_measurements(a, y)?;
    let entries = a.entries();
    let (m, n) = entries.shape();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if y_norm == 0.0 {
        return finish(a, y, vec![0.0; n], 0);
    }

    let rank = numerical_rank(entries);
    if rank < m {
        return Err(Error::RankDeficient { rank, rows: m });
    }

    // unit-norm right-hand side makes every tolerance relative
    let b: Vec<f64> = y.iter().map(|v| v / y_norm).collect();
    let budget = params.max_pivots.unwrap_or(50 * (m + n));
    let mut tab = Tableau::new(entries, &b);
    let mut pivots = 0;

    tab.run(Phase::One, budget, &mut pivots)
        .map_err(|_| not_converged(&tab, n, y_norm, budget))?;
    let infeasibility = -tab.objective_value();
    if infeasibility > params.feasibility_tol.max(1e-12) {
        return Err(Error::Infeasible {
            residual: infeasibility * y_norm,
        });
    }
    tab.expel_artificials();
    tab.run(Phase::Two, budget, &mut pivots)
        .map_err(|_| not_converged(&tab, n, y_norm, budget))?;

    let tableau_s = tab.coefficients(n, y_norm);
    let polished = polish(entries, y, &tab.basis, n).unwrap_or_else(|| tableau_s.clone());
    let s_hat = if residual_norm(a, y, &polished) <= residual_norm(a, y, &tableau_s) {
        polished
    } else {
        tableau_s
    };
    let residual = residual_norm(a, y, &s_hat);
    if residual > params.feasibility_tol * y_norm {
        return Err(Error::Infeasible { residual });
    }
    finish(a, y, s_hat, pivots)
}

fn not_converged(tab: &Tableau, n: usize, y_norm: f64, budget: usize) -> Error {
    Error::NotConverged {
        iterations: budget,
        best_iterate: tab.coefficients(n, y_norm),
    }
}

fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

/// Re-solves `B u_B = y` for the final basis using the original columns.
fn polish(a: &DMatrix<f64>, y: &[f64], basis: &[usize], n: usize) -> Option<Vec<f64>> {
    let m = a.nrows();
    if basis.iter().any(|&j| j >= 2 * n) {
        return None;
    }
    let b = DMatrix::from_fn(m, m, |i, k| {
        let j = basis[k];
        if j < n {
            a[(i, j)]
        } else {
            -a[(i, j - n)]
        }
    });
    let u = b.lu().solve(&DVector::from_column_slice(y))?;
    let mut s = vec![0.0; n];
    for (k, &j) in basis.iter().enumerate() {
        if j < n {
            s[j] += u[k];
        } else {
            s[j - n] -= u[k];
        }
    }
    Some(s)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Unfinished;

/// Row-major `(m + 1) x (2n + m + 1)` tableau; the last row holds reduced
/// costs and the last column the right-hand side.
struct Tableau {
    m: usize,
    structural: usize,
    width: usize,
    t: Vec<f64>,
    /// Constraint rows `[S A, −S A, I | S b]` with `S` flipping rows to `b ≥ 0`.
    original: Vec<f64>,
    basis: Vec<usize>,
    phase: Phase,
}

impl Tableau {
    fn new(a: &DMatrix<f64>, b: &[f64]) -> Self {
        let (m, n) = a.shape();
        let structural = 2 * n;
        let width = structural + m + 1;
        let mut original = vec![0.0; m * width];
        for i in 0..m {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut original[i * width..(i + 1) * width];
            for j in 0..n {
                row[j] = sign * a[(i, j)];
                row[n + j] = -sign * a[(i, j)];
            }
            row[structural + i] = 1.0;
            row[width - 1] = sign * b[i];
        }
        let mut t = original.clone();
        t.resize((m + 1) * width, 0.0);
        let mut tab = Tableau {
            m,
            structural,
            width,
            t,
            original,
            basis: (structural..structural + m).collect(),
            phase: Phase::One,
        };
        tab.price();
        tab
    }

    fn cost(&self, j: usize) -> f64 {
        let artificial = j >= self.structural && j < self.width - 1;
        match self.phase {
            Phase::One if artificial => 1.0,
            Phase::Two if j < self.structural => 1.0,
            _ => 0.0,
        }
    }

    /// Recomputes the reduced-cost row `c − c_Bᵀ B⁻¹ K` from the body.
    fn price(&mut self) {
        let w = self.width;
        let obj = self.m * w;
        for j in 0..w - 1 {
            self.t[obj + j] = self.cost(j);
        }
        self.t[obj + w - 1] = 0.0;
        for i in 0..self.m {
            let cb = self.cost(self.basis[i]);
            if cb != 0.0 {
                for j in 0..w {
                    self.t[obj + j] -= cb * self.t[i * w + j];
                }
            }
        }
    }

    /// Rebuilds the body as `B⁻¹ K` from the original rows, discarding
    /// accumulated pivot error. Keeps the current body if `B` is singular.
    fn reinvert(&mut self) {
        let (m, w) = (self.m, self.width);
        let b = DMatrix::from_fn(m, m, |i, k| self.original[i * w + self.basis[k]]);
        let k = DMatrix::from_fn(m, w, |i, j| self.original[i * w + j]);
        let Some(x) = b.lu().solve(&k) else { return };
        for i in 0..m {
            for j in 0..w {
                self.t[i * w + j] = x[(i, j)];
            }
        }
        self.price();
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    /// Current objective `cᵀx` is the negated corner entry.
    fn objective_value(&self) -> f64 {
        -self.rhs(self.m)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.t[r * w + c];
        let (before, rest) = self.t.split_at_mut(r * w);
        let (row, after) = rest.split_at_mut(w);
        row.iter_mut().for_each(|v| *v /= p);
        row[c] = 1.0;
        let eliminate = |chunk: &mut [f64]| {
            for other in chunk.chunks_exact_mut(w) {
                let f = other[c];
                if f != 0.0 {
                    other
                        .iter_mut()
                        .zip(row.iter())
                        .for_each(|(o, v)| *o -= f * v);
                    other[c] = 0.0;
                }
            }
        };
        eliminate(before);
        eliminate(after);
        self.basis[r] = c;
    }

    /// Leaving row for entering column `c`. Bland mode takes the minimum
    /// ratio with lowest basic index; otherwise a two-pass Harris test picks
    /// the largest pivot among rows within a small feasibility slack of the
    /// minimum ratio.
    fn leaving_row(&self, c: usize, bland: bool) -> Option<(usize, f64)> {
        let rows = (0..self.m).filter(|&i| self.at(i, c) > PIVOT_TOL);
        if bland {
            let mut leave: Option<(usize, f64)> = None;
            for i in rows {
                let ratio = self.rhs(i).max(0.0) / self.at(i, c);
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < best - 1e-12
                            || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            return leave;
        }
        let bound = rows
            .clone()
            .map(|i| (self.rhs(i).max(0.0) + HARRIS_SLACK) / self.at(i, c))
            .fold(f64::INFINITY, f64::min);
        rows.filter(|&i| self.rhs(i).max(0.0) / self.at(i, c) <= bound)
            .max_by(|&x, &y| self.at(x, c).total_cmp(&self.at(y, c)).then(y.cmp(&x)))
            .map(|i| (i, self.rhs(i).max(0.0) / self.at(i, c)))
    }

    fn run(&mut self, phase: Phase, budget: usize, pivots: &mut usize) -> Result<(), Unfinished> {
        if self.phase != phase {
            self.phase = phase;
            self.price();
        }
        let allowed = match phase {
            Phase::One => self.width - 1,
            Phase::Two => self.structural,
        };
        let mut degenerate = 0;
        let mut since_reinversion = 0;
        let mut skipped = vec![false; allowed];
        loop {
            if since_reinversion >= REINVERT_EVERY {
                self.reinvert();
                since_reinversion = 0;
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let costs = &self.t[self.m * self.width..self.m * self.width + allowed];
            let mut candidates = costs
                .iter()
                .enumerate()
                .filter(|&(j, &d)| d < -COST_TOL && !skipped[j]);
            let entering = if bland {
                candidates.next().map(|(j, _)| j)
            } else {
                candidates.min_by(|x, y| x.1.total_cmp(y.1)).map(|(j, _)| j)
            };
            let Some(c) = entering else {
                if since_reinversion == 0 {
                    return Ok(());
                }
                // confirm optimality on a freshly rebuilt tableau
                self.reinvert();
                since_reinversion = 0;
                skipped.iter_mut().for_each(|s| *s = false);
                continue;
            };

            // the objective is bounded below by zero, so a column with no
            // usable pivot is numerical noise; skip it until the basis changes
            let Some((r, ratio)) = self.leaving_row(c, bland) else {
                skipped[c] = true;
                continue;
            };
            if *pivots >= budget {
                return Err(Unfinished);
            }
            degenerate = if ratio <= 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(r, c);
            *pivots += 1;
            since_reinversion += 1;
            skipped.iter_mut().for_each(|s| *s = false);
        }
    }

    /// Pivots zero-level artificials out of the basis where possible.
    fn expel_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.structural {
                continue;
            }
            let col = (0..self.structural)
                .filter(|&j| self.at(r, j).abs() > PIVOT_TOL)
                .max_by(|&x, &y| self.at(r, x).abs().total_cmp(&self.at(r, y).abs()));
            if let Some(c) = col {
                self.pivot(r, c);
            }
        }
    }

    fn coefficients(&self, n: usize, scale: f64) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for (i, &j) in self.basis.iter().enumerate() {
            let v = self.rhs(i) * scale;
            if j < n {
                s[j] += v;
            } else if j < 2 * n {
                s[j - n] -= v;
            }
        }
        s
    }
}
