//! `ctucker`: synthetic data, decompositions, benchmark sweeps and bound checks.
//!
//! Modes are numbered from 1 on the command line.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use compressed_tucker::bench::{self, BenchConfig};
use compressed_tucker::decompose::{decompose, DecomposerConfig, Init, Method};
use compressed_tucker::embeddings::EmbeddingKind;
use compressed_tucker::io;
use compressed_tucker::verify::{run_suite, Suite, SuiteOptions};
use compressed_tucker::DenseTensor;

#[derive(Parser)]
#[command(name = "ctucker", version, about = "Orthogonal Tucker decomposition with modewise random embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random low-rank tensor plus Gaussian noise as a TKR1 file.
    Synth {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        /// Noise standard deviation.
        #[arg(long, default_value_t = 0.0, conflicts_with = "noise_fraction")]
        noise: f64,
        /// Expected share of noise in the total energy (alternative to --noise).
        #[arg(long)]
        noise_fraction: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decompose a TKR1 tensor and write the result as TKD1.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "hooi-re")]
        method: Method,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        dr: f64,
        /// 1-based modes to compress; defaults to all.
        #[arg(long, value_delimiter = ',')]
        compress_modes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "hosvd")]
        init: Init,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON run report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep methods x ranks x DR grid x replications and write a CSV.
    Bench {
        /// TKR1 input; if absent the tensor is generated from --synth-*.
        #[arg(long, required_unless_present = "synth_dims")]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', requires = "synth_ranks", conflicts_with = "input")]
        synth_dims: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        synth_ranks: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0.0)]
        synth_noise: f64,
        #[arg(long, value_delimiter = ',', default_value = "hooi,hooi-re")]
        methods: Vec<Method>,
        /// Each value is used as the rank of every mode.
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        dr_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        compress_modes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
        /// JSON summary; defaults to the CSV path with a `.summary.json` suffix.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run a bound-verification suite and write a JSON report.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "gaussian")]
        family: EmbeddingKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn zero_based(modes: Option<Vec<usize>>, order: usize) -> Result<Option<Vec<usize>>> {
    let Some(modes) = modes else { return Ok(None) };
    modes
        .into_iter()
        .map(|m| {
            if m == 0 || m > order {
                bail!("mode {m} is outside 1..={order}");
            }
            Ok(m - 1)
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn load(path: &PathBuf) -> Result<DenseTensor> {
    io::load_tensor(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Synth {
            dims,
            ranks,
            noise,
            noise_fraction,
            seed,
            out,
        } => {
            let sigma = match noise_fraction {
                Some(f) => bench::sigma_for_noise_fraction(&dims, &ranks, f)?,
                None => noise,
            };
            let x = bench::synth_tensor(&dims, &ranks, sigma, seed)?;
            io::save_tensor(&out, &x).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {:?} tensor (sigma {sigma:.6}) to {}", dims, out.display());
            Ok(true)
        }
        Command::Decompose {
            input,
            method,
            ranks,
            dr,
            compress_modes,
            tol,
            max_iters,
            seed,
            init,
            out,
            report,
        } => {
            let x = load(&input)?;
            let mut cfg = DecomposerConfig::new(method, ranks)
                .with_dr(dr)
                .with_rel_tol(tol)
                .with_max_iters(max_iters)
                .with_seed(seed)
                .with_init(init);
            if let Some(modes) = zero_based(compress_modes, x.order())? {
                cfg = cfg.with_compress_modes(modes);
            }
            let (t, rep) = decompose(&x, &cfg)?;
            if let Some(out) = out {
                io::save_decomposition(&out, &t).with_context(|| format!("writing {}", out.display()))?;
            }
            if let Some(path) = report {
                write_json(&path, &rep)?;
            }
            println!(
                "{} ranks {:?}: {} iterations, error {:.6e} (relative {:.6e}), {:.1} ms",
                rep.method, rep.ranks, rep.iterations, rep.final_error, rep.relative_error, rep.total_ms
            );
            Ok(true)
        }
        Command::Bench {
            input,
            synth_dims,
            synth_ranks,
            synth_noise,
            methods,
            ranks,
            dr_grid,
            compress_modes,
            reps,
            seed,
            tol,
            max_iters,
            threads,
            out,
            summary,
        } => {
            let x = match (input, synth_dims) {
                (Some(p), _) => load(&p)?,
                (None, Some(dims)) => {
                    let r = synth_ranks.context("--synth-ranks is required with --synth-dims")?;
                    bench::synth_tensor(&dims, &r, synth_noise, seed)?
                }
                (None, None) => bail!("either --input or --synth-dims is required"),
            };
            let cfg = BenchConfig {
                methods,
                ranks,
                dr_grid,
                compress_modes: zero_based(compress_modes, x.order())?,
                reps,
                seed,
                max_iters,
                rel_tol: tol,
                threads,
                ..BenchConfig::default()
            };
            let rows = bench::run_bench(&x, &cfg)?;
            let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            bench::write_rows(BufWriter::new(f), &rows)?;
            let s = bench::summarize(&rows);
            let summary_path = summary.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".summary.json");
                p.into()
            });
            write_json(&summary_path, &s)?;
            println!("{:<14}{:>5}{:>6}{:>6}{:>14}{:>12}{:>12}", "method", "R", "dr", "runs", "error mean", "error sd", "time s");
            for c in &s.cells {
                println!(
                    "{:<14}{:>5}{:>6.2}{:>6}{:>14.5}{:>12.5}{:>12.4}",
                    c.method.as_str(),
                    c.rank,
                    c.dr,
                    c.runs,
                    c.error.mean,
                    c.error.sd,
                    c.time_total_s.mean
                );
            }
            let failures: usize = s.cells.iter().map(|c| c.failures).sum();
            if failures > 0 {
                eprintln!("{failures} run(s) failed; see NaN rows in {}", out.display());
            }
            Ok(true)
        }
        Command::Verify {
            suite,
            trials,
            eps,
            eta,
            seed,
            family,
            out,
        } => {
            let opts = SuiteOptions {
                trials,
                eps,
                eta,
                seed,
                family,
            };
            let r = run_suite(suite, &opts)?;
            if let Some(path) = out {
                write_json(&path, &r)?;
            }
            println!(
                "{}: {} trials ({} discarded), {} failures, fraction {:.4} (allowed {:.4}) -> {}",
                r.check,
                r.trials,
                r.discarded,
                r.failures,
                r.failure_fraction,
                r.allowed_fraction,
                if r.passed { "PASS" } else { "FAIL" }
            );
            for (k, v) in &r.extras {
                println!("  {k} = {v:.6e}");
            }
            Ok(r.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
