//! Empirical restricted-isometry analysis.
//!
//! A matrix `Φ` has RIP of order `K` with constant `δ_K` when
//! `(1 − δ_K)‖α‖² ≤ ‖Φα‖² ≤ (1 + δ_K)‖α‖²` for every `K`-sparse `α`,
//! i.e. when every `K`-column Gram submatrix has its eigenvalues in
//! `[1 − δ_K, 1 + δ_K]`. This module provides
//!
//! * Gershgorin disc localization of eigenvalues,
//! * the Gram-matrix sufficient condition: `|G_ii − 1| < δ_d` and
//!   `|G_ij| < δ_o / K` with `δ_d + δ_o = δ_K`,
//! * exhaustive verification over all `K`-column submatrices,
//! * Monte-Carlo estimates of the column-norm and inner-product tails of
//!   sparse Gaussian vectors against their exponential bounds,
//! * row-subsampling studies.
//!
//! `Ψ`-RIP is covered by passing a [`SensingMatrix`] (`Φ Ψ`) instead of `Φ`.
//!
//! Matrices are analysed in the unit-expected-column-norm regime: nonzero
//! variance `1 / (density · rows)`, see [`analysis_variance`].

use std::borrow::Cow;
use std::fmt;

use nalgebra::{DMatrix, Matrix2, Matrix3, SymmetricEigen};
use rand::seq::index;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrices::{build_sparse_gaussian, Layout, ProjectionMatrix, SensingMatrix};
use crate::recovery::l0::{binomial, Combinations};
use crate::seed;

/// Largest number of `K`-column submatrices an exhaustive scan will visit.
pub const MAX_EXHAUSTIVE_SUBSETS: u128 = 1_000_000;

/// Monte-Carlo slack, in binomial standard deviations.
pub const TAIL_SLACK_SIGMAS: f64 = 3.0;

/// Anything whose columns can be analysed.
pub trait Columns {
    fn dense(&self) -> Cow<'_, DMatrix<f64>>;
}

impl Columns for DMatrix<f64> {
    fn dense(&self) -> Cow<'_, DMatrix<f64>> {
        Cow::Borrowed(self)
    }
}

impl Columns for ProjectionMatrix {
    fn dense(&self) -> Cow<'_, DMatrix<f64>> {
        Cow::Owned(self.to_dense())
    }
}

impl Columns for SensingMatrix {
    fn dense(&self) -> Cow<'_, DMatrix<f64>> {
        Cow::Borrowed(self.entries())
    }
}

/// Nonzero variance giving every column unit expected squared norm.
pub fn analysis_variance(rows: usize, density: f64) -> f64 {
    1.0 / (density * rows as f64)
}

/// Sparse Gaussian matrix in the analysis normalization.
pub fn analysis_sparse_gaussian(
    rows: usize,
    cols: usize,
    density: f64,
    layout: Layout,
    seed: u64,
) -> Result<ProjectionMatrix> {
    build_sparse_gaussian(
        rows,
        cols,
        density,
        layout,
        analysis_variance(rows, density),
        seed,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: f64,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, re: f64, im: f64) -> bool {
        let dist = ((re - self.center).powi(2) + im * im).sqrt();
        // relative slack for eigenvalues computed on the boundary
        dist <= self.radius + 1e-9 * (1.0 + self.center.abs() + self.radius)
    }
}

/// One disc per row: centered at the diagonal entry with radius equal to
/// the absolute off-diagonal row sum.
pub fn gershgorin_bounds(square: &DMatrix<f64>) -> Result<Vec<Disc>> {
    let (rows, cols) = square.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if square.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix", "non-finite entry"));
    }
    Ok((0..rows)
        .map(|i| Disc {
            center: square[(i, i)],
            radius: (0..cols)
                .filter(|&j| j != i)
                .map(|j| square[(i, j)].abs())
                .sum(),
        })
        .collect())
}

pub fn in_disc_union(discs: &[Disc], re: f64, im: f64) -> bool {
    discs.iter().any(|d| d.contains(re, im))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramStats {
    /// `max_i |G_ii − 1|`.
    pub max_diag_deviation: f64,
    /// `max_{i≠j} |G_ij|`.
    pub max_offdiag: f64,
}

/// Extreme deviations of `G = ΦᵀΦ` restricted to `column_subset`.
pub fn gram_stats<P: Columns + ?Sized>(
    phi: &P,
    column_subset: Option<&[usize]>,
) -> Result<GramStats> {
    let dense = phi.dense();
    let sub;
    let m: &DMatrix<f64> = match column_subset {
        Some([]) => return Err(Error::invalid("column_subset", "empty subset")),
        Some(cols) => {
            if let Some(&bad) = cols.iter().find(|&&c| c >= dense.ncols()) {
                return Err(Error::invalid(
                    "column_subset",
                    format!("column {bad} out of range"),
                ));
            }
            sub = dense.select_columns(cols);
            &sub
        }
        None => &dense,
    };
    let gram = m.tr_mul(m);
    Ok(stats_of_gram(&gram))
}

fn stats_of_gram(gram: &DMatrix<f64>) -> GramStats {
    let n = gram.nrows();
    let mut max_diag_deviation = 0.0f64;
    let mut max_offdiag = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = gram[(i, j)];
            if i == j {
                max_diag_deviation = max_diag_deviation.max((v - 1.0).abs());
            } else {
                max_offdiag = max_offdiag.max(v.abs());
            }
        }
    }
    GramStats {
        max_diag_deviation,
        max_offdiag,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RipVerdict {
    /// The Gram-matrix sufficient condition holds.
    CertifiedByLemma2,
    /// Every `K`-column submatrix was checked and none violates the bound.
    CertifiedByExhaustion,
    /// A `K`-sparse vector violating the isometry bound was found.
    RefutedByWitness,
    /// The sufficient condition fails; nothing is concluded.
    Inconclusive,
}

impl RipVerdict {
    pub fn name(self) -> &'static str {
        match self {
            RipVerdict::CertifiedByLemma2 => "certified_gram",
            RipVerdict::CertifiedByExhaustion => "certified_exhaustive",
            RipVerdict::RefutedByWitness => "refuted",
            RipVerdict::Inconclusive => "inconclusive",
        }
    }

    pub fn holds(self) -> bool {
        matches!(
            self,
            RipVerdict::CertifiedByLemma2 | RipVerdict::CertifiedByExhaustion
        )
    }
}

impl fmt::Display for RipVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RipCertificate {
    pub order: usize,
    pub delta: f64,
    pub verdict: RipVerdict,
    /// `K`-sparse vector violating the bound, for refutations.
    pub witness: Option<Vec<f64>>,
    /// Gram statistics behind a Gram-condition decision.
    pub gram: Option<GramStats>,
    /// Smallest `δ` satisfied by every scanned submatrix (exhaustive scans).
    pub observed_delta: Option<f64>,
}

impl RipCertificate {
    /// Recomputes `‖Φw‖² / ‖w‖²` for the witness and checks it lies outside
    /// `[1 − δ, 1 + δ]`.
    pub fn witness_violates<P: Columns + ?Sized>(&self, phi: &P) -> bool {
        let Some(w) = &self.witness else { return false };
        let dense = phi.dense();
        let v = nalgebra::DVector::from_column_slice(w);
        let ratio = (&*dense * &v).norm_squared() / v.norm_squared();
        let nonzeros = w.iter().filter(|x| **x != 0.0).count();
        nonzeros <= self.order && (ratio < 1.0 - self.delta || ratio > 1.0 + self.delta)
    }
}

fn check_delta(delta_k: f64) -> Result<()> {
    if !(delta_k > 0.0 && delta_k < 1.0) {
        return Err(Error::invalid(
            "delta_K",
            format!("{delta_k} is outside (0, 1)"),
        ));
    }
    Ok(())
}

/// Default split of `δ_K` between diagonal and off-diagonal budgets.
pub fn even_split(delta_k: f64) -> (f64, f64) {
    (delta_k / 2.0, delta_k / 2.0)
}

/// Gram-matrix sufficient condition for RIP(`K`, `δ_K`).
pub fn certify_rip_lemma2<P: Columns + ?Sized>(
    phi: &P,
    k: usize,
    delta_k: f64,
    split: (f64, f64),
) -> Result<RipCertificate> {
    check_delta(delta_k)?;
    let (delta_d, delta_o) = split;
    if !(delta_d > 0.0 && delta_o > 0.0) || (delta_d + delta_o - delta_k).abs() > 1e-12 {
        return Err(Error::invalid(
            "split",
            format!("({delta_d}, {delta_o}) must be positive and sum to {delta_k}"),
        ));
    }
    if k == 0 {
        return Err(Error::invalid("K", "order must be positive"));
    }
    let stats = gram_stats(phi, None)?;
    let certified = stats.max_diag_deviation < delta_d && stats.max_offdiag < delta_o / k as f64;
    Ok(RipCertificate {
        order: k,
        delta: delta_k,
        verdict: if certified {
            RipVerdict::CertifiedByLemma2
        } else {
            RipVerdict::Inconclusive
        },
        witness: None,
        gram: Some(stats),
        observed_delta: None,
    })
}

/// Extreme eigenvalues and eigenvectors of every `K`-column Gram submatrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumScan {
    pub min_eigenvalue: f64,
    pub min_support: Vec<usize>,
    pub min_vector: Vec<f64>,
    pub max_eigenvalue: f64,
    pub max_support: Vec<usize>,
    pub max_vector: Vec<f64>,
}

impl SpectrumScan {
    pub fn restricted_isometry_constant(&self) -> f64 {
        (self.max_eigenvalue - 1.0).max(1.0 - self.min_eigenvalue)
    }
}

/// Scans all `K`-column submatrices of `phi`.
pub fn scan_submatrix_spectra<P: Columns + ?Sized>(phi: &P, k: usize) -> Result<SpectrumScan> {
    let dense = phi.dense();
    let n = dense.ncols();
    if k == 0 || k > n {
        return Err(Error::invalid("K", format!("order {k} outside 1..={n}")));
    }
    let subsets = binomial(n, k);
    if subsets > MAX_EXHAUSTIVE_SUBSETS {
        return Err(Error::SearchTooLarge {
            combinations: subsets,
            limit: MAX_EXHAUSTIVE_SUBSETS,
        });
    }
    let gram = dense.tr_mul(&dense);
    let mut scan = SpectrumScan {
        min_eigenvalue: f64::INFINITY,
        min_support: Vec::new(),
        min_vector: Vec::new(),
        max_eigenvalue: f64::NEG_INFINITY,
        max_support: Vec::new(),
        max_vector: Vec::new(),
    };
    for support in Combinations::new(n, k) {
        let (lo, lo_vec, hi, hi_vec) = extreme_eigenpairs(&gram, &support);
        if lo < scan.min_eigenvalue {
            scan.min_eigenvalue = lo;
            scan.min_vector = lo_vec;
            scan.min_support = support.clone();
        }
        if hi > scan.max_eigenvalue {
            scan.max_eigenvalue = hi;
            scan.max_vector = hi_vec;
            scan.max_support = support;
        }
    }
    Ok(scan)
}

fn extreme_eigenpairs(gram: &DMatrix<f64>, support: &[usize]) -> (f64, Vec<f64>, f64, Vec<f64>) {
    fn pick<const D: usize>(
        values: &[f64],
        vector: impl Fn(usize) -> Vec<f64>,
    ) -> (f64, Vec<f64>, f64, Vec<f64>) {
        let (mut lo, mut hi) = (0, 0);
        for i in 1..D {
            if values[i] < values[lo] {
                lo = i;
            }
            if values[i] > values[hi] {
                hi = i;
            }
        }
        (values[lo], vector(lo), values[hi], vector(hi))
    }
    let g = |a: usize, b: usize| gram[(support[a], support[b])];
    match support.len() {
        1 => {
            let v = g(0, 0);
            (v, vec![1.0], v, vec![1.0])
        }
        2 => {
            let eig = SymmetricEigen::new(Matrix2::new(g(0, 0), g(0, 1), g(1, 0), g(1, 1)));
            let vals = [eig.eigenvalues[0], eig.eigenvalues[1]];
            pick::<2>(&vals, |i| {
                eig.eigenvectors.column(i).iter().copied().collect()
            })
        }
        3 => {
            let m = Matrix3::from_fn(&g);
            let eig = SymmetricEigen::new(m);
            let vals = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
            pick::<3>(&vals, |i| {
                eig.eigenvectors.column(i).iter().copied().collect()
            })
        }
        k => {
            let m = DMatrix::from_fn(k, k, g);
            let eig = SymmetricEigen::new(m);
            let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            let lo = (0..k)
                .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
                .unwrap_or(0);
            let hi = (0..k)
                .max_by(|&a, &b| vals[a].total_cmp(&vals[b]))
                .unwrap_or(0);
            (
                vals[lo],
                eig.eigenvectors.column(lo).iter().copied().collect(),
                vals[hi],
                eig.eigenvectors.column(hi).iter().copied().collect(),
            )
        }
    }
}

fn embed(n: usize, support: &[usize], values: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for (&j, &v) in support.iter().zip(values) {
        w[j] = v;
    }
    w
}

/// Checks RIP(`K`, `δ_K`) over every `K`-column submatrix. By eigenvalue
/// interlacing this also covers all smaller supports.
pub fn verify_rip_exhaustive<P: Columns + ?Sized>(
    phi: &P,
    k: usize,
    delta_k: f64,
) -> Result<RipCertificate> {
    check_delta(delta_k)?;
    let scan = scan_submatrix_spectra(phi, k)?;
    Ok(certificate_from_scan(
        &scan,
        phi.dense().ncols(),
        k,
        delta_k,
    ))
}

/// Turns a spectrum scan into a verdict for one `δ_K`.
pub fn certificate_from_scan(
    scan: &SpectrumScan,
    cols: usize,
    k: usize,
    delta_k: f64,
) -> RipCertificate {
    let low_violation = 1.0 - delta_k - scan.min_eigenvalue;
    let high_violation = scan.max_eigenvalue - 1.0 - delta_k;
    let witness = if low_violation > 0.0 && low_violation >= high_violation {
        Some(embed(cols, &scan.min_support, &scan.min_vector))
    } else if high_violation > 0.0 {
        Some(embed(cols, &scan.max_support, &scan.max_vector))
    } else {
        None
    };
    RipCertificate {
        order: k,
        delta: delta_k,
        verdict: if witness.is_some() {
            RipVerdict::RefutedByWitness
        } else {
            RipVerdict::CertifiedByExhaustion
        },
        witness,
        gram: None,
        observed_delta: Some(scan.restricted_isometry_constant()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailLemma {
    /// `Pr(|Σ x_i² − 1| ≥ δ_d) ≤ 2 exp(−n k δ_d² / 16)`.
    SumOfSquares,
    /// `Pr(|Σ x_i y_i| ≥ t) ≤ 2 exp(−n t² / (4 + 2t))`.
    InnerProduct,
}

impl TailLemma {
    pub fn name(self) -> &'static str {
        match self {
            TailLemma::SumOfSquares => "lemma3",
            TailLemma::InnerProduct => "lemma4",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub lemma: TailLemma,
    pub n: usize,
    pub k: f64,
    pub nonzeros: usize,
    pub trials: usize,
    /// `δ_d` for the sum of squares, `t` for the inner product.
    pub deviation_threshold: f64,
    pub violations: usize,
    pub empirical_tail: f64,
    pub theoretical_bound: f64,
    /// `3 · sqrt(p (1 − p) / trials)` with `p = min(bound, 1)`.
    pub slack: f64,
    pub note: Option<&'static str>,
}

impl ConcentrationReport {
    pub fn bound_exceeded(&self) -> bool {
        self.empirical_tail > self.theoretical_bound + self.slack
    }

    pub fn is_vacuous(&self) -> bool {
        self.theoretical_bound >= 1.0
    }

    pub fn report_row(&self) -> ReportRow {
        let thr = match self.lemma {
            TailLemma::SumOfSquares => "delta_d",
            TailLemma::InnerProduct => "t",
        };
        ReportRow {
            op: self.lemma.name().to_string(),
            params: vec![
                ("n".into(), self.n.to_string()),
                ("k".into(), self.k.to_string()),
                ("nonzeros".into(), self.nonzeros.to_string()),
                (thr.into(), self.deviation_threshold.to_string()),
                ("trials".into(), self.trials.to_string()),
            ],
            empirical: self.empirical_tail,
            bound: Some(self.theoretical_bound),
            verdict: if self.bound_exceeded() {
                "exceeded".into()
            } else if self.is_vacuous() {
                "vacuous".into()
            } else {
                "honored".into()
            },
        }
    }
}

fn binomial_slack(bound: f64, trials: usize) -> f64 {
    let p = bound.clamp(0.0, 1.0);
    TAIL_SLACK_SIGMAS * (p * (1.0 - p) / trials as f64).sqrt()
}

fn sparse_gaussian_nonzeros(n: usize, k: f64) -> Result<usize> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::invalid("k", format!("{k} is outside (0, 1)")));
    }
    let nonzeros = (k * n as f64).round() as usize;
    if nonzeros == 0 {
        return Err(Error::invalid(
            "k",
            format!("k·n = {} rounds to zero", k * n as f64),
        ));
    }
    Ok(nonzeros)
}

/// Monte-Carlo tail of `|Σ x_i² − 1|` for vectors with `round(kn)` nonzero
/// `N(0, 1/(kn))` entries.
pub fn concentration_lemma3(
    n: usize,
    k: f64,
    delta_d: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    let nonzeros = sparse_gaussian_nonzeros(n, k)?;
    if !(delta_d > 0.0) {
        return Err(Error::invalid("delta_d", "must be positive"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    let normal = Normal::new(0.0, (1.0 / nonzeros as f64).sqrt()).expect("finite");
    let violations = (0..trials)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = seed::rng(seed::derive_seed(seed, &[trial as u64]));
            let sum: f64 = (0..nonzeros).map(|_| normal.sample(&mut rng).powi(2)).sum();
            (sum - 1.0).abs() >= delta_d
        })
        .count();
    let bound = 2.0 * (-(n as f64) * k * delta_d * delta_d / 16.0).exp();
    Ok(ConcentrationReport {
        lemma: TailLemma::SumOfSquares,
        n,
        k,
        nonzeros,
        trials,
        deviation_threshold: delta_d,
        violations,
        empirical_tail: violations as f64 / trials as f64,
        theoretical_bound: bound,
        slack: binomial_slack(bound, trials),
        note: None,
    })
}

/// Monte-Carlo tail of `|Σ x_i y_i|` for independent vectors, each with
/// `round(kn)` nonzero `N(0, 1/(kn))` entries at uniform positions.
///
/// The bound is evaluated with `n` in the exponent as printed, not `kn`.
pub fn concentration_lemma4(
    n: usize,
    k: f64,
    t: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    let nonzeros = sparse_gaussian_nonzeros(n, k)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid("t", format!("{t} is outside [0, 1]")));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    let normal = Normal::new(0.0, (1.0 / nonzeros as f64).sqrt()).expect("finite");
    let violations = (0..trials)
        .into_par_iter()
        .filter(|&trial| {
            let sum = sparse_inner_product(
                n,
                nonzeros,
                &normal,
                seed::derive_seed(seed, &[trial as u64]),
            );
            sum.abs() >= t
        })
        .count();
    let bound = 2.0 * (-(n as f64) * t * t / (4.0 + 2.0 * t)).exp();
    Ok(ConcentrationReport {
        lemma: TailLemma::InnerProduct,
        n,
        k,
        nonzeros,
        trials,
        deviation_threshold: t,
        violations,
        empirical_tail: violations as f64 / trials as f64,
        theoretical_bound: bound,
        slack: binomial_slack(bound, trials),
        note: Some("exponent uses n as printed; substituting kn gives the weaker bound"),
    })
}

/// One draw of `Σ x_i y_i` for two independent sparse Gaussian vectors.
pub fn sparse_inner_product(n: usize, nonzeros: usize, normal: &Normal<f64>, seed: u64) -> f64 {
    let mut rng = seed::rng(seed);
    let mut x = vec![0.0; n];
    for p in index::sample(&mut rng, n, nonzeros) {
        x[p] = normal.sample(&mut rng);
    }
    let mut sum = 0.0;
    for p in index::sample(&mut rng, n, nonzeros) {
        sum += x[p] * normal.sample(&mut rng);
    }
    sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleStudy {
    pub mu: f64,
    pub rows_kept: usize,
    pub certificates: Vec<RipCertificate>,
    pub success_rate: f64,
}

/// Draws `trials` uniform row subsets of size `round(mu · rows)`, rescales by
/// `sqrt(rows / rows_kept)` to restore unit expected column norms, and
/// verifies RIP exhaustively on each.
pub fn subsampled_rip_study(
    phi: &ProjectionMatrix,
    mu: f64,
    k: usize,
    delta_k: f64,
    trials: usize,
    seed: u64,
) -> Result<SubsampleStudy> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::invalid("mu", format!("{mu} is outside (0, 1]")));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    check_delta(delta_k)?;
    let rows = phi.rows();
    let kept = ((mu * rows as f64).round() as usize).max(1);
    let subsets = binomial(phi.cols(), k);
    if subsets > MAX_EXHAUSTIVE_SUBSETS {
        return Err(Error::SearchTooLarge {
            combinations: subsets,
            limit: MAX_EXHAUSTIVE_SUBSETS,
        });
    }
    let scale = (rows as f64 / kept as f64).sqrt();
    let certificates = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed::rng(seed::derive_seed(seed, &[trial as u64]));
            let mut chosen = index::sample(&mut rng, rows, kept).into_vec();
            chosen.sort_unstable();
            let sub = phi.select_rows(&chosen).scaled(scale);
            verify_rip_exhaustive(&sub, k, delta_k)
        })
        .collect::<Result<Vec<_>>>()?;
    let successes = certificates.iter().filter(|c| c.verdict.holds()).count();
    Ok(SubsampleStudy {
        mu,
        rows_kept: kept,
        success_rate: successes as f64 / trials as f64,
        certificates,
    })
}

/// Fraction of analysis-normalized `m x n` sparse Gaussian matrices that
/// satisfy RIP(`K`, `δ_K`) under exhaustive verification.
pub fn rip_success_frequency(
    m: usize,
    n: usize,
    density: f64,
    k: usize,
    delta_k: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let verdicts = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let phi = analysis_sparse_gaussian(
                m,
                n,
                density,
                Layout::RandomPlacement,
                seed::derive_seed(seed, &[m as u64, trial as u64]),
            )?;
            verify_rip_exhaustive(&phi, k, delta_k).map(|c| c.verdict.holds())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(verdicts.iter().filter(|&&h| h).count() as f64 / trials as f64)
}

/// One line of an analysis report: `op,params,empirical,bound,verdict`,
/// with `params` as `;`-separated `key=value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub op: String,
    pub params: Vec<(String, String)>,
    pub empirical: f64,
    pub bound: Option<f64>,
    pub verdict: String,
}

impl ReportRow {
    pub const HEADER: &'static str = "op,params,empirical,bound,verdict";

    pub fn to_csv(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!(
            "{},{},{:e},{},{}",
            self.op,
            params.join(";"),
            self.empirical,
            self.bound.map(|b| format!("{b:e}")).unwrap_or_default(),
            self.verdict
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_discs() {
        let discs = gershgorin_bounds(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(
            discs,
            vec![
                Disc {
                    center: 1.0,
                    radius: 0.0
                };
                3
            ]
        );
    }

    #[test]
    fn two_by_two_boundary_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let discs = gershgorin_bounds(&m).unwrap();
        assert_eq!(
            discs,
            vec![
                Disc {
                    center: 2.0,
                    radius: 1.0
                };
                2
            ]
        );
        assert!(in_disc_union(&discs, 1.0, 0.0));
        assert!(in_disc_union(&discs, 3.0, 0.0));
        assert!(!in_disc_union(&discs, 3.1, 0.0));
        assert!(gershgorin_bounds(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn gram_of_orthonormal_and_duplicates() {
        let q = crate::signal::SparsifyingBasis::dct(8)
            .unwrap()
            .synthesis_matrix();
        let s = gram_stats(&q, None).unwrap();
        assert!(s.max_diag_deviation < 1e-12 && s.max_offdiag < 1e-12);
        let mut d = DMatrix::zeros(4, 3);
        d[(0, 0)] = 1.0;
        d[(0, 1)] = 1.0;
        d[(2, 2)] = 1.0;
        let s = gram_stats(&d, None).unwrap();
        assert_eq!(s.max_offdiag, 1.0);
        assert!(gram_stats(&d, Some(&[])).is_err());
        assert_eq!(gram_stats(&d, Some(&[0, 2])).unwrap().max_offdiag, 0.0);
    }

    #[test]
    fn lemma2_on_orthonormal_and_duplicate_columns() {
        let q = DMatrix::<f64>::identity(6, 6);
        for k in 1..=6 {
            let c = certify_rip_lemma2(&q, k, 0.5, (0.25, 0.25)).unwrap();
            assert_eq!(c.verdict, RipVerdict::CertifiedByLemma2);
        }
        let mut d = DMatrix::<f64>::identity(4, 4);
        d.set_column(1, &d.column(0).into_owned());
        for split in [(0.1, 0.8), (0.45, 0.45), (0.8, 0.1)] {
            let c = certify_rip_lemma2(&d, 2, 0.9, split).unwrap();
            assert_eq!(c.verdict, RipVerdict::Inconclusive);
        }
        assert!(certify_rip_lemma2(&q, 2, 0.5, (0.3, 0.3)).is_err());
        assert!(certify_rip_lemma2(&q, 2, 1.0, (0.5, 0.5)).is_err());
    }

    #[test]
    fn exhaustive_identity_and_zero_column() {
        let q = DMatrix::<f64>::identity(5, 5);
        for k in 1..=3 {
            assert_eq!(
                verify_rip_exhaustive(&q, k, 0.01).unwrap().verdict,
                RipVerdict::CertifiedByExhaustion
            );
        }
        let mut z = DMatrix::<f64>::identity(5, 5);
        z.column_mut(3).fill(0.0);
        for delta in [0.1, 0.5, 0.99] {
            let c = verify_rip_exhaustive(&z, 1, delta).unwrap();
            assert_eq!(c.verdict, RipVerdict::RefutedByWitness);
            let w = c.witness.clone().unwrap();
            assert_eq!(w.iter().filter(|v| **v != 0.0).count(), 1);
            assert!(w[3].abs() == 1.0);
            assert!(c.witness_violates(&z));
        }
    }

    #[test]
    fn exhaustive_guard() {
        let q = DMatrix::<f64>::identity(4, 200);
        assert!(matches!(
            verify_rip_exhaustive(&q, 4, 0.5),
            Err(Error::SearchTooLarge { .. })
        ));
    }

    #[test]
    fn vacuous_and_degenerate_concentration() {
        let r = concentration_lemma3(100, 0.1, 1.0, 200, 1).unwrap();
        // 2·exp(-10/16) > 1
        assert!(r.is_vacuous());
        assert!(!r.bound_exceeded());
        let r = concentration_lemma4(200, 0.1, 0.0, 500, 2).unwrap();
        assert_eq!(r.theoretical_bound, 2.0);
        assert_eq!(r.empirical_tail, 1.0);
        assert!(!r.bound_exceeded());
        assert!(concentration_lemma4(200, 0.1, 1.5, 10, 2).is_err());
        assert!(concentration_lemma3(200, 1.0, 0.5, 10, 2).is_err());
        assert!(concentration_lemma3(5, 0.01, 0.5, 10, 2).is_err());
    }

    #[test]
    fn report_row_format() {
        let r = concentration_lemma3(100, 0.1, 0.5, 100, 1).unwrap();
        let line = r.report_row().to_csv();
        assert!(line.starts_with("lemma3,n=100;k=0.1;nonzeros=10;delta_d=0.5;trials=100,"));
        assert_eq!(line.split(',').count(), 5);
    }
}
