//! Experiment orchestration and CSV output.
//!
//! Every trial draws its randomness from `derive_seed(master, [trial])`:
//! the signal, the loss pattern (per `M` and `L`) and each matrix kind get
//! their own child seed, so kinds are compared on identical signals and
//! identical loss patterns, and any row can be replayed in isolation.

pub mod config;

use std::cmp::Ordering;
use std::io::Write;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;

pub use config::{parse_config, ExperimentConfig, SignalSource};

use crate::channel::{transmit, LossModel};
use crate::error::{Error, Result};
use crate::matrices::{build_projection, MatrixKind, ProjectionMatrix, ProjectionParams};
use crate::recovery::{recover_signal, OmpParams, RecoveryResult, Solver};
use crate::seed::{self, derive_seed, label};
use crate::signal::{
    load_signal_csv, synthesize_sparse_signal, CsvWindow, Signal, SparseCoefficients,
    SparsifyingBasis,
};

pub const SWEEP_SCHEMA: &str = "# csdc sweep v1";
pub const SUMMARY_SCHEMA: &str = "# csdc sweep-summary v1";
pub const BENCH_SCHEMA: &str = "# csdc bench v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub matrix_kind: MatrixKind,
    pub m: usize,
    pub trial_index: usize,
    pub relative_error: f64,
    pub solver: &'static str,
    /// Trial seed all randomness of the row derives from.
    pub seed: u64,
    pub wall_time_ms: Option<f64>,
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, &[trial as u64])
}

fn signal_seed(trial_seed: u64) -> u64 {
    derive_seed(trial_seed, &[label("signal")])
}

fn matrix_seed(trial_seed: u64, kind: MatrixKind) -> u64 {
    derive_seed(trial_seed, &[label("matrix"), label(kind.name())])
}

fn channel_seed(trial_seed: u64, m: usize, packet_length: usize) -> u64 {
    derive_seed(
        trial_seed,
        &[label("channel"), m as u64, packet_length as u64],
    )
}

/// Power-law coefficients: `|s_j| = (j + 1)^-decay · u`, `u ~ U[0.5, 1.5)`,
/// with random signs.
pub fn synthesize_compressible_signal(
    basis: &SparsifyingBasis,
    decay: f64,
    seed: u64,
) -> Result<Signal> {
    if !(decay >= 0.0 && decay.is_finite()) {
        return Err(Error::invalid("decay", "must be nonnegative"));
    }
    let mut rng = seed::rng(seed);
    let values = (0..basis.dimension())
        .map(|j| {
            let magnitude = (j as f64 + 1.0).powf(-decay) * rng.random_range(0.5..1.5);
            if rng.random_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    basis.synthesize(&SparseCoefficients::new(values))
}

/// The signal a trial runs on. CSV traces are the same for every trial.
pub fn experiment_signal(
    cfg: &ExperimentConfig,
    basis: &SparsifyingBasis,
    trial: usize,
) -> Result<Signal> {
    let seed = signal_seed(trial_seed(cfg.master_seed, trial));
    match &cfg.signal {
        SignalSource::Csv {
            path,
            column,
            offset,
        } => load_signal_csv(path, CsvWindow::new(*column, *offset, cfg.n)),
        SignalSource::Sparse { k, range, .. } => {
            synthesize_sparse_signal(cfg.n, *k, basis, *range, seed).map(|(x, _)| x)
        }
        SignalSource::Compressible { decay, .. } => {
            synthesize_compressible_signal(basis, *decay, seed)
        }
    }
}

fn trial_projection(
    cfg: &ExperimentConfig,
    kind: MatrixKind,
    trial: usize,
) -> Result<ProjectionMatrix> {
    let seed = matrix_seed(trial_seed(cfg.master_seed, trial), kind);
    build_projection(kind, cfg.ms(), cfg.n, &cfg.projection, seed)
}

fn run_cell(
    cfg: &ExperimentConfig,
    basis: &SparsifyingBasis,
    x: &Signal,
    proj: &ProjectionMatrix,
    m: usize,
    trial: usize,
) -> Result<SweepRow> {
    let start = Instant::now();
    let tseed = trial_seed(cfg.master_seed, trial);
    let x_s = proj.project(x)?;
    let loss = LossModel::exact(m, cfg.packet_length);
    let outcome = transmit(&x_s, &loss, channel_seed(tseed, m, cfg.packet_length))?;
    let result = recover_signal(&outcome, proj, basis, &cfg.solver, Some(x))?;
    Ok(SweepRow {
        matrix_kind: proj.kind(),
        m,
        trial_index: trial,
        relative_error: result.relative_error.expect("truth supplied"),
        solver: cfg.solver.name(),
        seed: tseed,
        wall_time_ms: cfg.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Runs every `(kind, M, trial)` cell and returns rows sorted by
/// `(kind, M, trial)`.
pub fn run_recovery_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let basis = SparsifyingBasis::new(cfg.signal.basis(), cfg.n)?;
    let jobs: Vec<(MatrixKind, usize)> = cfg
        .matrix_kinds
        .iter()
        .flat_map(|&kind| (0..cfg.trials).map(move |t| (kind, t)))
        .collect();
    let nested = jobs
        .par_iter()
        .map(|&(kind, trial)| {
            let x = experiment_signal(cfg, &basis, trial)?;
            let proj = trial_projection(cfg, kind, trial)?;
            cfg.m_values
                .iter()
                .map(|&m| run_cell(cfg, &basis, &x, &proj, m, trial))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<SweepRow> = nested.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.matrix_kind, a.m, a.trial_index).cmp(&(b.matrix_kind, b.m, b.trial_index))
    });
    Ok(rows)
}

/// Recomputes a single sweep cell.
pub fn replay_cell(
    cfg: &ExperimentConfig,
    kind: MatrixKind,
    m: usize,
    trial: usize,
) -> Result<SweepRow> {
    cfg.validate()?;
    let basis = SparsifyingBasis::new(cfg.signal.basis(), cfg.n)?;
    let x = experiment_signal(cfg, &basis, trial)?;
    let proj = trial_projection(cfg, kind, trial)?;
    run_cell(cfg, &basis, &x, &proj, m, trial)
}

/// Block-loss sweep: [`run_recovery_sweep`] with packets of `L > 1` samples.
pub fn run_packet_experiment(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    if cfg.packet_length < 2 {
        return Err(Error::config("L", "a packet experiment needs L >= 2"));
    }
    run_recovery_sweep(cfg)
}

/// Canonical-basis `K`-sparse signal recovered through a sparse Gaussian
/// and through a partial-basis source coder; returns `(sparse, partial)`.
pub fn run_canonical_sparse_experiment(
    n: usize,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<(RecoveryResult, RecoveryResult)> {
    run_canonical_sparse_with(
        n,
        k,
        m,
        &ProjectionParams::default(),
        &Solver::Omp(OmpParams::default()),
        seed,
    )
}

pub fn run_canonical_sparse_with(
    n: usize,
    k: usize,
    m: usize,
    params: &ProjectionParams,
    solver: &Solver,
    seed: u64,
) -> Result<(RecoveryResult, RecoveryResult)> {
    if k >= n {
        return Err(Error::invalid("K", format!("need K < N, got K={k}, N={n}")));
    }
    if m > n {
        return Err(Error::invalid(
            "M",
            format!("need M <= N, got M={m}, N={n}"),
        ));
    }
    let basis = SparsifyingBasis::canonical(n)?;
    let (x, _) = synthesize_sparse_signal(n, k, &basis, (-1.0, 1.0), signal_seed(seed))?;
    let run = |kind: MatrixKind| -> Result<RecoveryResult> {
        let proj = build_projection(kind, n, n, params, matrix_seed(seed, kind))?;
        let outcome = transmit(
            &proj.project(&x)?,
            &LossModel::exact(m, 1),
            channel_seed(seed, m, 1),
        )?;
        recover_signal(&outcome, &proj, &basis, solver, Some(&x))
    };
    Ok((
        run(MatrixKind::SparseGaussian)?,
        run(MatrixKind::PartialBasis)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub matrix_kind: MatrixKind,
    pub m: usize,
    pub trials: usize,
    pub mean_error: f64,
    pub median_error: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Mean and median error per `(kind, M)`, in row order.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut out: Vec<SweepSummary> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let key = (rows[i].matrix_kind, rows[i].m);
        let mut errors: Vec<f64> = rows[i..]
            .iter()
            .take_while(|r| (r.matrix_kind, r.m) == key)
            .map(|r| r.relative_error)
            .collect();
        i += errors.len();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        out.push(SweepSummary {
            matrix_kind: key.0,
            m: key.1,
            trials: errors.len(),
            mean_error: mean,
            median_error: median(&mut errors),
        });
    }
    out
}

/// Mean error of `kind` at `m`, if present.
pub fn mean_error(summary: &[SweepSummary], kind: MatrixKind, m: usize) -> Option<f64> {
    summary
        .iter()
        .find(|s| s.matrix_kind == kind && s.m == m)
        .map(|s| s.mean_error)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv {
        path: "<output>".into(),
        message: e.to_string(),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source: e,
    }
}

fn write_table<W: Write>(
    mut out: W,
    schema: &str,
    header: &[&str],
    records: Vec<Vec<String>>,
) -> Result<()> {
    writeln!(out, "{schema}").map_err(io_err)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

/// Per-trial rows. The `wall_time_ms` column appears only when every row
/// carries a timing.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let timed = !rows.is_empty() && rows.iter().all(|r| r.wall_time_ms.is_some());
    let mut header = vec![
        "matrix_kind",
        "M",
        "trial_index",
        "relative_error",
        "solver",
        "seed",
    ];
    if timed {
        header.push("wall_time_ms");
    }
    let records = rows
        .iter()
        .map(|r| {
            let mut rec = vec![
                r.matrix_kind.name().to_string(),
                r.m.to_string(),
                r.trial_index.to_string(),
                r.relative_error.to_string(),
                r.solver.to_string(),
                r.seed.to_string(),
            ];
            if timed {
                rec.push(format!("{:.3}", r.wall_time_ms.unwrap_or(0.0)));
            }
            rec
        })
        .collect();
    write_table(out, SWEEP_SCHEMA, &header, records)
}

pub fn write_summary_csv<W: Write>(summary: &[SweepSummary], out: W) -> Result<()> {
    let records = summary
        .iter()
        .map(|s| {
            vec![
                s.matrix_kind.name().to_string(),
                s.m.to_string(),
                s.trials.to_string(),
                s.mean_error.to_string(),
                s.median_error.to_string(),
            ]
        })
        .collect();
    write_table(
        out,
        SUMMARY_SCHEMA,
        &["matrix_kind", "M", "trials", "mean_error", "median_error"],
        records,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub kind: MatrixKind,
    pub n: usize,
    pub median_ns: u128,
    pub bytes: usize,
}

pub const BENCH_KINDS: [MatrixKind; 3] = [
    MatrixKind::SparseGaussian,
    MatrixKind::DenseGaussian,
    MatrixKind::Bernoulli,
];

/// Median wall time of building an `N x N` matrix of each kind, after one
/// untimed warm-up build, plus its storage footprint.
pub fn run_construction_benchmark(
    n_values: &[usize],
    density: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be positive"));
    }
    let params = ProjectionParams {
        density,
        ..ProjectionParams::default()
    };
    let mut rows = Vec::new();
    for &n in n_values {
        for kind in BENCH_KINDS {
            let build = |t: u64| {
                build_projection(
                    kind,
                    n,
                    n,
                    &params,
                    derive_seed(seed, &[label(kind.name()), n as u64, t]),
                )
            };
            let bytes = build(0)?.storage_bytes();
            let mut times = Vec::with_capacity(trials);
            for t in 1..=trials as u64 {
                let start = Instant::now();
                let m = build(t)?;
                times.push(start.elapsed().as_nanos());
                std::hint::black_box(m);
            }
            times.sort_unstable();
            rows.push(BenchRow {
                kind,
                n,
                median_ns: times[times.len() / 2],
                bytes,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let records = rows
        .iter()
        .map(|r| {
            vec![
                r.kind.name().to_string(),
                r.n.to_string(),
                r.median_ns.to_string(),
                r.bytes.to_string(),
            ]
        })
        .collect();
    write_table(
        out,
        BENCH_SCHEMA,
        &["kind", "N", "median_ns", "bytes"],
        records,
    )
}
