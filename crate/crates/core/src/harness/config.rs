//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma-separated; `M` also accepts `start:stop:step` ranges, inclusive.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrices::{Layout, MatrixKind, ProjectionParams};
use crate::recovery::{BpParams, OmpParams, Solver};
use crate::signal::BasisKind;

#[derive(Debug, Clone, PartialEq)]
pub enum SignalSource {
    /// Column window of a headerless CSV file; `N` samples are read.
    Csv {
        path: PathBuf,
        column: usize,
        offset: usize,
    },
    /// Exactly `k`-sparse in `basis`, nonzeros uniform on `range`.
    Sparse {
        k: usize,
        basis: BasisKind,
        range: (f64, f64),
    },
    /// Every coefficient nonzero, magnitude `(j + 1)^-decay` times a uniform
    /// `[0.5, 1.5)` factor, random sign.
    Compressible { basis: BasisKind, decay: f64 },
}

impl SignalSource {
    /// Basis the recovery runs in.
    pub fn basis(&self) -> BasisKind {
        match self {
            SignalSource::Csv { .. } => BasisKind::Dct,
            SignalSource::Sparse { basis, .. } | SignalSource::Compressible { basis, .. } => *basis,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub signal: SignalSource,
    /// Signal length.
    pub n: usize,
    /// Rows of the source-coding matrix; `None` means `N`.
    pub ms: Option<usize>,
    pub matrix_kinds: Vec<MatrixKind>,
    pub projection: ProjectionParams,
    /// Received sample counts to sweep.
    pub m_values: Vec<usize>,
    pub packet_length: usize,
    pub trials: usize,
    pub solver: Solver,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    /// Adds a `wall_time_ms` column; the output is then not reproducible.
    pub timings: bool,
}

pub const DEFAULT_SEED: u64 = 20_200_601;

impl ExperimentConfig {
    pub fn ms(&self) -> usize {
        self.ms.unwrap_or(self.n)
    }

    /// Checks the cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("N", "must be positive"));
        }
        let ms = self.ms();
        if ms == 0 || ms > self.n {
            return Err(Error::config(
                "Ms",
                format!("{ms} is outside 1..={}", self.n),
            ));
        }
        if self.matrix_kinds.is_empty() {
            return Err(Error::config("kinds", "empty list"));
        }
        if self.m_values.is_empty() {
            return Err(Error::config("M", "empty list"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let l = self.packet_length;
        if l == 0 || !ms.is_multiple_of(l) {
            return Err(Error::config(
                "L",
                format!("{l} does not divide {ms} transmitted samples"),
            ));
        }
        for &m in &self.m_values {
            if m == 0 || m > ms {
                return Err(Error::config("M", format!("{m} is outside 1..={ms}")));
            }
            if m % l != 0 {
                return Err(Error::config(
                    "M",
                    format!("{m} is not a multiple of L = {l}"),
                ));
            }
        }
        let p = &self.projection;
        if !(p.density > 0.0 && p.density <= 1.0) {
            return Err(Error::config(
                "density",
                format!("{} is outside (0, 1]", p.density),
            ));
        }
        if !(p.variance > 0.0 && p.variance.is_finite()) {
            return Err(Error::config("variance", "must be positive and finite"));
        }
        match &self.signal {
            SignalSource::Sparse { k, range, .. } => {
                if *k == 0 || *k > self.n {
                    return Err(Error::config("K", format!("{k} is outside 1..={}", self.n)));
                }
                if !(range.0 < range.1) {
                    return Err(Error::config("range", "empty interval"));
                }
            }
            SignalSource::Compressible { decay, .. } => {
                if !(*decay >= 0.0 && decay.is_finite()) {
                    return Err(Error::config("decay", "must be nonnegative"));
                }
            }
            SignalSource::Csv { .. } => {}
        }
        Ok(())
    }

    /// Serializes to the text accepted by [`parse_config`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("string write");
        line("N", self.n.to_string());
        if let Some(ms) = self.ms {
            line("Ms", ms.to_string());
        }
        line("M", join(&self.m_values));
        line("L", self.packet_length.to_string());
        line("trials", self.trials.to_string());
        line("seed", self.master_seed.to_string());
        line(
            "kinds",
            self.matrix_kinds
                .iter()
                .map(|k| k.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        line("density", self.projection.density.to_string());
        line("variance", self.projection.variance.to_string());
        line("layout", self.projection.layout.name().to_string());
        line(
            "partial_basis",
            self.projection.partial_basis.name().to_string(),
        );
        match &self.solver {
            Solver::Omp(p) => {
                line("solver", "omp".into());
                if let Some(s) = p.max_sparsity {
                    line("max_sparsity", s.to_string());
                }
                line("residual_tol", p.residual_tol.to_string());
                line("normalize_columns", p.normalize_columns.to_string());
            }
            Solver::Bp(p) => {
                line("solver", "bp".into());
                line("feasibility_tol", p.feasibility_tol.to_string());
                if let Some(s) = p.max_pivots {
                    line("max_pivots", s.to_string());
                }
            }
        }
        match &self.signal {
            SignalSource::Csv {
                path,
                column,
                offset,
            } => {
                line("signal", "csv".into());
                line("csv_path", path.display().to_string());
                line("csv_column", column.to_string());
                line("csv_offset", offset.to_string());
            }
            SignalSource::Sparse { k, basis, range } => {
                line("signal", "sparse".into());
                line("K", k.to_string());
                line("basis", basis.name().to_string());
                line("range", format!("{}:{}", range.0, range.1));
            }
            SignalSource::Compressible { basis, decay } => {
                line("signal", "compressible".into());
                line("basis", basis.name().to_string());
                line("decay", decay.to_string());
            }
        }
        if let Some(out_path) = &self.output {
            line("out", out_path.display().to_string());
        }
        if self.timings {
            line("timings", "true".into());
        }
        out
    }
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub const KEYS: &[&str] = &[
    "N",
    "Ms",
    "M",
    "L",
    "trials",
    "seed",
    "kinds",
    "density",
    "variance",
    "layout",
    "partial_basis",
    "solver",
    "max_sparsity",
    "residual_tol",
    "normalize_columns",
    "feasibility_tol",
    "max_pivots",
    "signal",
    "K",
    "basis",
    "range",
    "decay",
    "csv_path",
    "csv_column",
    "csv_offset",
    "out",
    "timings",
];

/// Splits config text into `(key, value)` pairs in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got {line:?}"),
            });
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Builds a validated config from file text plus overrides; later pairs win.
pub fn parse_config(
    text: Option<&str>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut pairs = match text {
        Some(t) => parse_pairs(t)?,
        None => Vec::new(),
    };
    pairs.extend(overrides.iter().cloned());
    let mut raw = Raw::default();
    for (key, value) in &pairs {
        raw.set(key, value)?;
    }
    raw.build()
}

#[derive(Default)]
struct Raw {
    n: Option<usize>,
    ms: Option<usize>,
    m: Option<Vec<usize>>,
    l: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    kinds: Option<Vec<MatrixKind>>,
    density: Option<f64>,
    variance: Option<f64>,
    layout: Option<Layout>,
    partial_basis: Option<BasisKind>,
    solver: Option<String>,
    max_sparsity: Option<usize>,
    residual_tol: Option<f64>,
    normalize_columns: Option<bool>,
    feasibility_tol: Option<f64>,
    max_pivots: Option<usize>,
    signal: Option<String>,
    k: Option<usize>,
    basis: Option<BasisKind>,
    range: Option<(f64, f64)>,
    decay: Option<f64>,
    csv_path: Option<PathBuf>,
    csv_column: Option<usize>,
    csv_offset: Option<usize>,
    out: Option<PathBuf>,
    timings: Option<bool>,
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse {value:?}: {e}")))
}

/// Parses `a,b,c` lists where each item is a number or an inclusive
/// `start:stop:step` range.
pub fn parse_m_values(key: &str, value: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(scalar(key, single)?),
            [start, stop, step] => {
                let (start, stop, step): (usize, usize, usize) =
                    (scalar(key, start)?, scalar(key, stop)?, scalar(key, step)?);
                if step == 0 || start > stop {
                    return Err(Error::config(key, format!("bad range {item:?}")));
                }
                out.extend((start..=stop).step_by(step));
            }
            _ => return Err(Error::config(key, format!("bad item {item:?}"))),
        }
    }
    if out.is_empty() {
        return Err(Error::config(key, "empty list"));
    }
    Ok(out)
}

impl Raw {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "N" => self.n = Some(scalar(key, value)?),
            "Ms" => self.ms = Some(scalar(key, value)?),
            "M" => self.m = Some(parse_m_values(key, value)?),
            "L" => self.l = Some(scalar(key, value)?),
            "trials" => self.trials = Some(scalar(key, value)?),
            "seed" => self.seed = Some(scalar(key, value)?),
            "kinds" => {
                let kinds = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| scalar(key, s))
                    .collect::<Result<Vec<MatrixKind>>>()?;
                self.kinds = Some(kinds);
            }
            "density" => self.density = Some(scalar(key, value)?),
            "variance" => self.variance = Some(scalar(key, value)?),
            "layout" => self.layout = Some(scalar(key, value)?),
            "partial_basis" => self.partial_basis = Some(scalar(key, value)?),
            "solver" => match value {
                "omp" | "bp" => self.solver = Some(value.to_string()),
                _ => return Err(Error::config(key, format!("unknown solver {value:?}"))),
            },
            "max_sparsity" => self.max_sparsity = Some(scalar(key, value)?),
            "residual_tol" => self.residual_tol = Some(scalar(key, value)?),
            "normalize_columns" => self.normalize_columns = Some(scalar(key, value)?),
            "feasibility_tol" => self.feasibility_tol = Some(scalar(key, value)?),
            "max_pivots" => self.max_pivots = Some(scalar(key, value)?),
            "signal" => match value {
                "csv" | "sparse" | "compressible" => self.signal = Some(value.to_string()),
                _ => {
                    return Err(Error::config(
                        key,
                        format!("unknown signal source {value:?}"),
                    ))
                }
            },
            "K" => self.k = Some(scalar(key, value)?),
            "basis" => self.basis = Some(scalar(key, value)?),
            "range" => {
                let (lo, hi) = value
                    .split_once(':')
                    .ok_or_else(|| Error::config(key, "expected lo:hi"))?;
                self.range = Some((scalar(key, lo.trim())?, scalar(key, hi.trim())?));
            }
            "decay" => self.decay = Some(scalar(key, value)?),
            "csv_path" => self.csv_path = Some(PathBuf::from(value)),
            "csv_column" => self.csv_column = Some(scalar(key, value)?),
            "csv_offset" => self.csv_offset = Some(scalar(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "timings" => self.timings = Some(scalar(key, value)?),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    fn build(self) -> Result<ExperimentConfig> {
        let n = self.n.ok_or_else(|| Error::config("N", "required"))?;
        let defaults = ProjectionParams::default();
        let solver = match self.solver.as_deref().unwrap_or("omp") {
            "bp" => {
                let d = BpParams::default();
                Solver::Bp(BpParams {
                    feasibility_tol: self.feasibility_tol.unwrap_or(d.feasibility_tol),
                    max_pivots: self.max_pivots.or(d.max_pivots),
                })
            }
            _ => {
                let d = OmpParams::default();
                Solver::Omp(OmpParams {
                    max_sparsity: self.max_sparsity.or(d.max_sparsity),
                    residual_tol: self.residual_tol.unwrap_or(d.residual_tol),
                    normalize_columns: self.normalize_columns.unwrap_or(d.normalize_columns),
                })
            }
        };
        let basis = self.basis.unwrap_or(BasisKind::Dct);
        let signal = match self.signal.as_deref().unwrap_or("compressible") {
            "csv" => SignalSource::Csv {
                path: self
                    .csv_path
                    .ok_or_else(|| Error::config("csv_path", "required for csv signals"))?,
                column: self.csv_column.unwrap_or(0),
                offset: self.csv_offset.unwrap_or(0),
            },
            "sparse" => SignalSource::Sparse {
                k: self
                    .k
                    .ok_or_else(|| Error::config("K", "required for sparse signals"))?,
                basis,
                range: self.range.unwrap_or((-1.0, 1.0)),
            },
            _ => SignalSource::Compressible {
                basis,
                decay: self.decay.unwrap_or(DEFAULT_DECAY),
            },
        };
        let cfg = ExperimentConfig {
            signal,
            n,
            ms: self.ms,
            matrix_kinds: self.kinds.unwrap_or_else(|| MatrixKind::ALL.to_vec()),
            projection: ProjectionParams {
                density: self.density.unwrap_or(defaults.density),
                variance: self.variance.unwrap_or(defaults.variance),
                layout: self.layout.unwrap_or(defaults.layout),
                partial_basis: self.partial_basis.unwrap_or(defaults.partial_basis),
            },
            m_values: self.m.unwrap_or_else(|| vec![n / 2]),
            packet_length: self.l.unwrap_or(1),
            trials: self.trials.unwrap_or(1),
            solver,
            master_seed: self.seed.unwrap_or(DEFAULT_SEED),
            output: self.out,
            timings: self.timings.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub const DEFAULT_DECAY: f64 = 1.5;
