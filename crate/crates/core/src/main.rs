use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csdc::harness::{
    self, config::DEFAULT_SEED, parse_config, run_construction_benchmark, run_packet_experiment,
    run_recovery_sweep, summarize, write_bench_csv, write_summary_csv, write_sweep_csv,
};
use csdc::matrices::Layout;
use csdc::rip::{self, ReportRow};
use csdc::seed::derive_seed;
use csdc::{Error, Result};

/// Seed environment variable; `--seed` takes precedence.
const SEED_ENV: &str = "CSDC_SEED";

#[derive(Parser)]
#[command(
    name = "csdc",
    version,
    about = "Compressive data collection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "N")]
    n: Option<usize>,
    /// Received counts: `64,128` or `64:384:32`.
    #[arg(long = "M")]
    m: Option<String>,
    /// Rows of the source-coding matrix (default N).
    #[arg(long = "Ms")]
    ms: Option<usize>,
    /// Packet length.
    #[arg(long = "L")]
    l: Option<usize>,
    /// Comma-separated matrix kinds.
    #[arg(long)]
    kinds: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    signal: Option<String>,
    /// Extra `key=value` settings, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Also write per-(kind, M) means and medians here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Record per-row wall time (output is then not reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Recovery error versus received count for each matrix kind.
    Sweep(SweepArgs),
    /// As `sweep` with packet loss (defaults: L = 16, sparse Gaussian vs partial basis).
    PacketSweep(SweepArgs),
    /// Canonical-sparse signal through sparse Gaussian and partial-basis coders.
    Canonical {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N", default_value_t = 1024)]
        n: usize,
        #[arg(long = "K", default_value_t = 50)]
        k: usize,
        #[arg(long = "M", default_value_t = 64)]
        m: usize,
    },
    /// Construction time and storage per matrix kind.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(
            long = "N",
            value_delimiter = ',',
            default_value = "64,128,256,512,1024"
        )]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
    },
    /// Gram-condition certificates, exhaustive verification and row subsampling.
    Rip {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        rows: usize,
        #[arg(long, default_value_t = 128)]
        cols: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        #[arg(long, default_value = "random")]
        layout: Layout,
        #[arg(long = "K", value_delimiter = ',', default_value = "1,2,3")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.9")]
        delta: Vec<f64>,
        /// Row-subsampling ratios.
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1.0")]
        mu: Vec<f64>,
    },
    /// Monte-Carlo tails of column norms and inner products.
    Concentration {
        #[command(flatten)]
        common: Common,
        #[arg(long = "n", value_delimiter = ',', default_value = "500,1000,2000")]
        n: Vec<usize>,
        #[arg(long = "k", value_delimiter = ',', default_value = "0.05,0.1,0.2")]
        k: Vec<f64>,
        /// Deviation thresholds (δ_d and t).
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5")]
        threshold: Vec<f64>,
    },
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn sweep(args: SweepArgs, packet: bool) -> Result<()> {
    let text = match &args.common.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        })?),
        None => None,
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    if packet {
        // subcommand defaults sit between the file's defaults and the flags
        let file_keys = text
            .as_deref()
            .map(harness::config::parse_pairs)
            .transpose()?
            .unwrap_or_default();
        for (key, value) in [("L", "16"), ("kinds", "sparse_gaussian,partial_basis")] {
            if !file_keys.iter().any(|(k, _)| k == key) {
                overrides.push((key.into(), value.into()));
            }
        }
    }
    let mut push = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            overrides.push((key.to_string(), v));
        }
    };
    push("N", args.n.map(|v| v.to_string()));
    push("M", args.m);
    push("Ms", args.ms.map(|v| v.to_string()));
    push("L", args.l.map(|v| v.to_string()));
    push("kinds", args.kinds);
    push("solver", args.solver);
    push("density", args.density.map(|v| v.to_string()));
    push("signal", args.signal);
    push("trials", args.common.trials.map(|v| v.to_string()));
    push("seed", args.common.seed.map(|v| v.to_string()));
    push(
        "out",
        args.common.out.as_ref().map(|p| p.display().to_string()),
    );
    if args.timings {
        push("timings", Some("true".into()));
    }
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::invalid("set", format!("expected KEY=VALUE, got {item:?}")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let cfg = parse_config(text.as_deref(), &overrides)?;
    let rows = if packet {
        run_packet_experiment(&cfg)?
    } else {
        run_recovery_sweep(&cfg)?
    };
    write_sweep_csv(&rows, open_out(cfg.output.as_deref())?)?;
    if let Some(p) = &args.summary {
        write_summary_csv(&summarize(&rows), open_out(Some(p))?)?;
    }
    Ok(())
}

fn write_report(rows: &[ReportRow], out: Option<&Path>) -> Result<()> {
    let mut w = open_out(out)?;
    let io = |source| Error::Io {
        path: out
            .map(Path::to_path_buf)
            .unwrap_or_else(|| "<stdout>".into()),
        source,
    };
    writeln!(w, "{}", ReportRow::HEADER).map_err(io)?;
    for r in rows {
        writeln!(w, "{}", r.to_csv()).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn params(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn rip_report(
    common: &Common,
    rows: usize,
    cols: usize,
    density: f64,
    layout: Layout,
    orders: &[usize],
    deltas: &[f64],
    mus: &[f64],
) -> Result<Vec<ReportRow>> {
    let seed = common.seed.unwrap_or(DEFAULT_SEED);
    let matrices = common.trials.unwrap_or(50);
    let phis = (0..matrices)
        .map(|t| {
            rip::analysis_sparse_gaussian(
                rows,
                cols,
                density,
                layout,
                derive_seed(seed, &[t as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = Vec::new();
    for &k in orders {
        let scans = phis
            .iter()
            .map(|phi| rip::scan_submatrix_spectra(phi, k))
            .collect::<Result<Vec<_>>>()?;
        for &delta in deltas {
            let mut certified = 0;
            let mut holds = 0;
            let mut refuted_certified = 0;
            for (phi, scan) in phis.iter().zip(&scans) {
                let gram = rip::certify_rip_lemma2(phi, k, delta, rip::even_split(delta))?;
                let exhaustive = rip::certificate_from_scan(scan, cols, k, delta);
                let is_cert = gram.verdict.holds();
                certified += is_cert as usize;
                holds += exhaustive.verdict.holds() as usize;
                refuted_certified += (is_cert && !exhaustive.verdict.holds()) as usize;
            }
            report.push(ReportRow {
                op: "rip_gram".into(),
                params: params(&[
                    ("rows", rows.to_string()),
                    ("cols", cols.to_string()),
                    ("density", density.to_string()),
                    ("K", k.to_string()),
                    ("delta", delta.to_string()),
                    ("matrices", matrices.to_string()),
                ]),
                empirical: certified as f64 / matrices as f64,
                bound: Some(holds as f64 / matrices as f64),
                verdict: if refuted_certified == 0 {
                    "sound"
                } else {
                    "unsound"
                }
                .into(),
            });
        }
    }
    if let Some(phi) = phis.first() {
        for &k in orders {
            for &delta in deltas {
                for &mu in mus {
                    let study = rip::subsampled_rip_study(
                        phi,
                        mu,
                        k,
                        delta,
                        matrices,
                        derive_seed(seed, &[u64::MAX]),
                    )?;
                    report.push(ReportRow {
                        op: "rip_subsample".into(),
                        params: params(&[
                            ("rows", rows.to_string()),
                            ("cols", cols.to_string()),
                            ("mu", mu.to_string()),
                            ("kept", study.rows_kept.to_string()),
                            ("K", k.to_string()),
                            ("delta", delta.to_string()),
                            ("trials", matrices.to_string()),
                        ]),
                        empirical: study.success_rate,
                        bound: None,
                        verdict: "measured".into(),
                    });
                }
            }
        }
    }
    Ok(report)
}

fn concentration_report(
    common: &Common,
    ns: &[usize],
    ks: &[f64],
    thresholds: &[f64],
) -> Result<Vec<ReportRow>> {
    let seed = common.seed.unwrap_or(DEFAULT_SEED);
    let trials = common.trials.unwrap_or(10_000);
    let mut report = Vec::new();
    for (lemma, tag) in [(3u64, "lemma3"), (4, "lemma4")] {
        for &n in ns {
            for &k in ks {
                for &thr in thresholds {
                    let cell_seed =
                        derive_seed(seed, &[lemma, n as u64, k.to_bits(), thr.to_bits()]);
                    let r = if tag == "lemma3" {
                        rip::concentration_lemma3(n, k, thr, trials, cell_seed)?
                    } else {
                        rip::concentration_lemma4(n, k, thr, trials, cell_seed)?
                    };
                    report.push(r.report_row());
                }
            }
        }
    }
    Ok(report)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(args) => sweep(args, false),
        Command::PacketSweep(args) => sweep(args, true),
        Command::Canonical { common, n, k, m } => {
            let seed = common.seed.unwrap_or(DEFAULT_SEED);
            let trials = common.trials.unwrap_or(1);
            let mut w = open_out(common.out.as_deref())?;
            let io = |source| Error::Io {
                path: "<output>".into(),
                source,
            };
            writeln!(w, "trial,matrix_kind,relative_error,support_size").map_err(io)?;
            for t in 0..trials {
                let (sg, pb) = harness::run_canonical_sparse_experiment(
                    n,
                    k,
                    m,
                    derive_seed(seed, &[t as u64]),
                )?;
                for (name, r) in [("sparse_gaussian", sg), ("partial_basis", pb)] {
                    writeln!(
                        w,
                        "{t},{name},{},{}",
                        r.relative_error.unwrap_or(f64::NAN),
                        r.support.len()
                    )
                    .map_err(io)?;
                }
            }
            w.flush().map_err(io)
        }
        Command::Bench { common, n, density } => {
            let rows = run_construction_benchmark(
                &n,
                density,
                common.trials.unwrap_or(5),
                common.seed.unwrap_or(DEFAULT_SEED),
            )?;
            write_bench_csv(&rows, open_out(common.out.as_deref())?)
        }
        Command::Rip {
            common,
            rows,
            cols,
            density,
            layout,
            k,
            delta,
            mu,
        } => {
            let report = rip_report(&common, rows, cols, density, layout, &k, &delta, &mu)?;
            write_report(&report, common.out.as_deref())
        }
        Command::Concentration {
            common,
            n,
            k,
            threshold,
        } => {
            let report = concentration_report(&common, &n, &k, &threshold)?;
            write_report(&report, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
