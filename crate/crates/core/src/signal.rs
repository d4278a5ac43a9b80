//! Signals, sparsifying bases and signal sources.
//!
//! A signal `x` of length `N` is represented in an orthonormal basis `Ψ` as
//! `x = Ψ s`. Every basis here is real and orthonormal, so the analysis
//! transform is `s = Ψᵀ x`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng as _;
use rustdct::rustfft::num_complex::Complex;
use rustdct::rustfft::{Fft, FftPlanner};
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};
use crate::seed;

/// An `N`-sample real signal with finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
}

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Signal { samples })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Signal::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.samples)
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.samples)
    }
}

/// Coefficients of a signal in a sparsifying basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoefficients {
    values: Vec<f64>,
    sparsity_hint: Option<usize>,
}

impl SparseCoefficients {
    pub fn new(values: Vec<f64>) -> Self {
        SparseCoefficients {
            values,
            sparsity_hint: None,
        }
    }

    /// Attaches a sparsity bound; fails when more than `k` entries are nonzero.
    pub fn with_sparsity(values: Vec<f64>, k: usize) -> Result<Self> {
        let nnz = values.iter().filter(|v| **v != 0.0).count();
        if nnz > k {
            return Err(Error::invalid(
                "sparsity_hint",
                format!("{nnz} nonzero coefficients exceed the declared sparsity {k}"),
            ));
        }
        Ok(SparseCoefficients {
            values,
            sparsity_hint: Some(k),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sparsity_hint(&self) -> Option<usize> {
        self.sparsity_hint
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Canonical,
    /// Orthonormal DCT-II.
    Dct,
    /// Real orthonormal Fourier basis: DC, then interleaved cosine/sine
    /// harmonic pairs, then the Nyquist cosine when `N` is even.
    Fourier,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Canonical => "canonical",
            BasisKind::Dct => "dct",
            BasisKind::Fourier => "fourier",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" | "identity" => Ok(BasisKind::Canonical),
            "dct" => Ok(BasisKind::Dct),
            "fourier" => Ok(BasisKind::Fourier),
            other => Err(Error::invalid("basis", format!("unknown basis `{other}`"))),
        }
    }
}

#[derive(Clone)]
enum Plan {
    Identity,
    Dct(Arc<dyn TransformType2And3<f64>>),
    Fourier {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
}

/// An orthonormal `N x N` transform `Ψ` with a precomputed fast plan.
#[derive(Clone)]
pub struct SparsifyingBasis {
    kind: BasisKind,
    dimension: usize,
    plan: Plan,
}

impl fmt::Debug for SparsifyingBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparsifyingBasis")
            .field("kind", &self.kind)
            .field("dimension", &self.dimension)
            .finish()
    }
}

impl PartialEq for SparsifyingBasis {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.dimension == other.dimension
    }
}

impl SparsifyingBasis {
    pub fn new(kind: BasisKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension", "must be positive"));
        }
        let plan = match kind {
            BasisKind::Canonical => Plan::Identity,
            BasisKind::Dct => Plan::Dct(DctPlanner::new().plan_dct2(dimension)),
            BasisKind::Fourier => {
                let mut planner = FftPlanner::new();
                Plan::Fourier {
                    forward: planner.plan_fft_forward(dimension),
                    inverse: planner.plan_fft_inverse(dimension),
                }
            }
        };
        Ok(SparsifyingBasis {
            kind,
            dimension,
            plan,
        })
    }

    pub fn canonical(dimension: usize) -> Result<Self> {
        Self::new(BasisKind::Canonical, dimension)
    }

    pub fn dct(dimension: usize) -> Result<Self> {
        Self::new(BasisKind::Dct, dimension)
    }

    pub fn fourier(dimension: usize) -> Result<Self> {
        Self::new(BasisKind::Fourier, dimension)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `s = Ψᵀ x`.
    pub fn analyze(&self, x: &Signal) -> Result<SparseCoefficients> {
        self.check_len("analyze", x.len())?;
        Ok(SparseCoefficients::new(self.analyze_slice(x.samples())))
    }

    /// `x = Ψ s`.
    pub fn synthesize(&self, s: &SparseCoefficients) -> Result<Signal> {
        self.check_len("synthesize", s.len())?;
        Signal::new(self.synthesize_slice(s.values()))
    }

    fn check_len(&self, context: &'static str, actual: usize) -> Result<()> {
        if actual != self.dimension {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dimension,
                actual,
            });
        }
        Ok(())
    }

    /// Raw analysis transform on a slice of length `N`.
    ///
    /// Panics if the slice length differs from the basis dimension.
    pub fn analyze_slice(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dimension, "analysis length mismatch");
        let n = self.dimension;
        match &self.plan {
            Plan::Identity => x.to_vec(),
            Plan::Dct(dct) => {
                let mut buf = x.to_vec();
                dct.process_dct2(&mut buf);
                let dc = (1.0 / n as f64).sqrt();
                let ac = (2.0 / n as f64).sqrt();
                buf[0] *= dc;
                buf[1..].iter_mut().for_each(|v| *v *= ac);
                buf
            }
            Plan::Fourier { forward, .. } => {
                let mut spec: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
                forward.process(&mut spec);
                let dc = (1.0 / n as f64).sqrt();
                let ac = (2.0 / n as f64).sqrt();
                let mut out = vec![0.0; n];
                out[0] = spec[0].re * dc;
                for h in 1..=(n - 1) / 2 {
                    // Re X_h = Σ x cos, Im X_h = -Σ x sin
                    out[2 * h - 1] = spec[h].re * ac;
                    out[2 * h] = -spec[h].im * ac;
                }
                if n.is_multiple_of(2) && n > 1 {
                    out[n - 1] = spec[n / 2].re * dc;
                }
                out
            }
        }
    }

    /// Raw synthesis transform on a slice of length `N`.
    ///
    /// Panics if the slice length differs from the basis dimension.
    pub fn synthesize_slice(&self, s: &[f64]) -> Vec<f64> {
        assert_eq!(s.len(), self.dimension, "synthesis length mismatch");
        let n = self.dimension;
        match &self.plan {
            Plan::Identity => s.to_vec(),
            Plan::Dct(dct) => {
                let mut buf = s.to_vec();
                // DCT-III computes x_n = X_0/2 + Σ_{k>=1} X_k cos(πk(2n+1)/2N)
                buf[0] *= 2.0 * (1.0 / n as f64).sqrt();
                let ac = (2.0 / n as f64).sqrt();
                buf[1..].iter_mut().for_each(|v| *v *= ac);
                dct.process_dct3(&mut buf);
                buf
            }
            Plan::Fourier { inverse, .. } => {
                let dc = (1.0 / n as f64).sqrt();
                let ac = (2.0 / n as f64).sqrt();
                let mut spec = vec![Complex::new(0.0, 0.0); n];
                spec[0] = Complex::new(s[0] * dc, 0.0);
                for h in 1..=(n - 1) / 2 {
                    spec[h] = Complex::new(s[2 * h - 1] * ac, -s[2 * h] * ac);
                }
                if n.is_multiple_of(2) && n > 1 {
                    spec[n / 2] = Complex::new(s[n - 1] * dc, 0.0);
                }
                inverse.process(&mut spec);
                spec.into_iter().map(|c| c.re).collect()
            }
        }
    }

    /// Dense `Ψ` (columns are the basis vectors).
    pub fn synthesis_matrix(&self) -> DMatrix<f64> {
        let n = self.dimension;
        let mut psi = DMatrix::zeros(n, n);
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit[j] = 1.0;
            let col = self.synthesize_slice(&unit);
            psi.column_mut(j).copy_from_slice(&col);
            unit[j] = 0.0;
        }
        psi
    }

    /// Dense `Ψᵀ` (rows are the basis vectors).
    pub fn analysis_matrix(&self) -> DMatrix<f64> {
        self.synthesis_matrix().transpose()
    }
}

/// Draws a `k`-sparse coefficient vector and synthesizes its signal.
///
/// The support is uniform without replacement and the nonzero values are
/// uniform on `[lo, hi)`; a draw of exactly zero is redrawn so the support
/// size is always `k`.
pub fn synthesize_sparse_signal(
    n: usize,
    k: usize,
    basis: &SparsifyingBasis,
    value_range: (f64, f64),
    seed: u64,
) -> Result<(Signal, SparseCoefficients)> {
    let (lo, hi) = value_range;
    if k == 0 || k > n {
        return Err(Error::invalid(
            "K",
            format!("need 0 < K <= N, got K={k}, N={n}"),
        ));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(
            "value_range",
            format!("[{lo}, {hi}] is not a nonempty finite interval"),
        ));
    }
    if basis.dimension() != n {
        return Err(Error::DimensionMismatch {
            context: "synthesize_sparse_signal",
            expected: n,
            actual: basis.dimension(),
        });
    }
    let mut rng = seed::rng(seed);
    let mut values = vec![0.0; n];
    for pos in index::sample(&mut rng, n, k) {
        let v = loop {
            let v = rng.random_range(lo..hi);
            if v != 0.0 {
                break v;
            }
        };
        values[pos] = v;
    }
    let coeffs = SparseCoefficients::with_sparsity(values, k)?;
    let signal = basis.synthesize(&coeffs)?;
    Ok((signal, coeffs))
}

/// Column window of a headerless comma-separated file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvWindow {
    pub column: usize,
    pub offset: usize,
    pub length: usize,
    pub skip_rows: usize,
}

impl CsvWindow {
    pub fn new(column: usize, offset: usize, length: usize) -> Self {
        CsvWindow {
            column,
            offset,
            length,
            skip_rows: 0,
        }
    }
}

/// Loads `length` samples of `column` starting `offset` data rows in.
pub fn load_signal_csv(path: impl AsRef<Path>, window: CsvWindow) -> Result<Signal> {
    let path = path.as_ref();
    if window.length == 0 {
        return Err(Error::EmptySignal);
    }
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let first = window.skip_rows + window.offset;
    let needed = window.offset + window.length;
    let mut samples = Vec::with_capacity(window.length);
    let mut rows_seen = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if row < window.skip_rows {
            continue;
        }
        rows_seen += 1;
        if row < first {
            continue;
        }
        let cell = record
            .get(window.column)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                row,
                column: window.column,
            })?;
        let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
            path: path.to_path_buf(),
            row,
            column: window.column,
            cell: cell.to_string(),
        })?;
        samples.push(value);
        if samples.len() == window.length {
            break;
        }
    }
    if samples.len() < window.length {
        return Err(Error::ShortFile {
            path: path.to_path_buf(),
            rows: rows_seen,
            needed,
        });
    }
    Signal::new(samples)
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
