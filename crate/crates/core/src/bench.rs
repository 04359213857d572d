//! Synthetic data and the benchmark driver.
//!
//! A benchmark sweeps methods × ranks × DR values × replications over one
//! tensor and produces one [`BenchRow`] per run. Randomized methods see a
//! fresh seed per replication (`derive_seed(seed, Replication { rep })`);
//! the deterministic ones ignore the DR grid and run once per `(R, rep)`
//! with `dr = 1`. A run that errors becomes a row with `NaN` error and
//! timings rather than aborting the sweep.

use std::io::{Read, Write};
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{decompose, DecomposerConfig, Init, Method, StageTimes};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::tensor::DenseTensor;
use crate::tucker::TuckerDecomposition;

/// Header of the results CSV.
pub const CSV_HEADER: &str = "method,R,dr,rep,seed,iters,time_total_s,error,prep_ms,embed_gen_ms,embed_apply_ms,factor_ms,core_ms";

/// `reconstruct(T) + σ Z` for a random orthogonal `T` with standard-normal
/// core and i.i.d. standard-normal `Z`.
pub fn synth_tensor(dims: &[usize], ranks: &[usize], noise_sigma: f64, seed: u64) -> Result<DenseTensor> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidConfig(format!("noise sigma {noise_sigma} must be finite and non-negative")));
    }
    if dims.is_empty() {
        return Err(Error::InvalidShape("empty dimension list".into()));
    }
    if let Some(j) = ranks.iter().position(|&r| r == 0) {
        return Err(Error::InvalidShape(format!("rank of mode {j} is zero")));
    }
    let mut rng = stream_rng(seed, Stream::Synth);
    let t = TuckerDecomposition::random_orthogonal(dims, ranks, &mut rng)?;
    let mut x = t.reconstruct()?;
    if noise_sigma > 0.0 {
        for v in x.data_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += noise_sigma * z;
        }
    }
    Ok(x)
}

/// Noise level giving an expected noise share `fraction` of the total
/// energy for [`synth_tensor`]: `σ² = f/(1 − f) · ∏R_j / ∏n_j`.
pub fn sigma_for_noise_fraction(dims: &[usize], ranks: &[usize], fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!("noise fraction {fraction} outside [0, 1)")));
    }
    let signal: f64 = ranks.iter().map(|&r| r as f64).product();
    let cells: f64 = dims.iter().map(|&n| n as f64).product();
    Ok((fraction / (1.0 - fraction) * signal / cells).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    /// Each entry is used as the rank of every mode.
    pub ranks: Vec<usize>,
    pub dr_grid: Vec<f64>,
    /// Zero-based; `None` compresses every mode.
    pub compress_modes: Option<Vec<usize>>,
    pub reps: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub init: Init,
    /// Worker threads for replications; `1` runs everything in order.
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Hooi, Method::HooiRe],
            ranks: vec![5],
            dr_grid: vec![0.5],
            compress_modes: None,
            reps: 100,
            seed: 0,
            max_iters: 100,
            rel_tol: 1e-5,
            init: Init::Hosvd,
            threads: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods given".into()));
        }
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return Err(Error::InvalidConfig("ranks must be a non-empty list of positive integers".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if let Some(dr) = self.dr_grid.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(Error::InvalidConfig(format!("dr = {dr} is outside (0, 1]")));
        }
        if self.dr_grid.is_empty() && self.methods.iter().any(|m| m.is_randomized()) {
            return Err(Error::InvalidConfig("randomized methods need a non-empty dr grid".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Every `(method, R, dr, rep)` in output order.
    pub fn cells(&self) -> Vec<(Method, usize, f64, usize)> {
        let mut out = Vec::new();
        for &method in &self.methods {
            for &r in &self.ranks {
                let drs: Vec<f64> = if method.is_randomized() { self.dr_grid.clone() } else { vec![1.0] };
                for dr in drs {
                    for rep in 0..self.reps {
                        out.push((method, r, dr, rep));
                    }
                }
            }
        }
        out
    }
}

/// One run. Stage columns are per-iteration means in milliseconds;
/// `prep_ms` covers mixing and initialisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    #[serde(rename = "R")]
    pub rank: usize,
    pub dr: f64,
    pub rep: usize,
    pub seed: u64,
    pub iters: usize,
    pub time_total_s: f64,
    pub error: f64,
    pub prep_ms: f64,
    pub embed_gen_ms: f64,
    pub embed_apply_ms: f64,
    pub factor_ms: f64,
    pub core_ms: f64,
}

impl BenchRow {
    pub fn is_failure(&self) -> bool {
        self.error.is_nan()
    }
}

fn run_one(x: &DenseTensor, cfg: &BenchConfig, method: Method, rank: usize, dr: f64, rep: usize) -> BenchRow {
    let seed = derive_seed(cfg.seed, Stream::Replication { index: rep });
    let q = x.order();
    let mut dc = DecomposerConfig::new(method, vec![rank; q])
        .with_dr(dr)
        .with_seed(seed)
        .with_max_iters(cfg.max_iters)
        .with_rel_tol(cfg.rel_tol)
        .with_init(cfg.init);
    if let Some(modes) = &cfg.compress_modes {
        dc = dc.with_compress_modes(modes.clone());
    }
    let start = Instant::now();
    match decompose(x, &dc) {
        Ok((_, report)) => {
            let mean = StageTimes::mean(&report.stage_times);
            BenchRow {
                method,
                rank,
                dr,
                rep,
                seed,
                iters: report.iterations,
                time_total_s: start.elapsed().as_secs_f64(),
                error: report.final_error,
                prep_ms: report.preprocess_ms + report.init_ms,
                embed_gen_ms: mean.embed_generate_ms,
                embed_apply_ms: mean.embed_apply_ms,
                factor_ms: mean.factor_update_ms,
                core_ms: mean.core_update_ms,
            }
        }
        Err(_) => BenchRow {
            method,
            rank,
            dr,
            rep,
            seed,
            iters: 0,
            time_total_s: f64::NAN,
            error: f64::NAN,
            prep_ms: f64::NAN,
            embed_gen_ms: f64::NAN,
            embed_apply_ms: f64::NAN,
            factor_ms: f64::NAN,
            core_ms: f64::NAN,
        },
    }
}

/// Runs every cell of the sweep; rows come back in [`BenchConfig::cells`]
/// order regardless of the thread count.
pub fn run_bench(x: &DenseTensor, cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let cells = cfg.cells();
    if cfg.threads == 1 {
        return Ok(cells
            .into_iter()
            .map(|(m, r, dr, rep)| run_one(x, cfg, m, r, dr, rep))
            .collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .into_par_iter()
            .map(|(m, r, dr, rep)| run_one(x, cfg, m, r, dr, rep))
            .collect()
    }))
}

pub fn write_rows<W: Write>(w: W, rows: &[BenchRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    if rows.is_empty() {
        wtr.write_record(CSV_HEADER.split(','))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Format(format!("unexpected CSV header `{}`", header.join(","))));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Mean, sample standard deviation and median of one column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
}

impl Stats {
    /// `NaN` entries are skipped; all fields are `NaN` when nothing is left.
    /// The standard deviation uses `n − 1` and is zero for one value.
    pub fn of(values: &[f64]) -> Stats {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return Stats {
                mean: f64::NAN,
                sd: f64::NAN,
                median: f64::NAN,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        v.sort_by(f64::total_cmp);
        let k = v.len();
        let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
        Stats { mean, sd, median }
    }
}

/// Aggregate of one `(method, R, dr)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    #[serde(rename = "R")]
    pub rank: usize,
    pub dr: f64,
    pub runs: usize,
    pub failures: usize,
    pub error: Stats,
    pub time_total_s: Stats,
    pub iters: Stats,
    pub prep_ms: Stats,
    pub embed_gen_ms: Stats,
    pub embed_apply_ms: Stats,
    pub factor_ms: Stats,
    pub core_ms: Stats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub cells: Vec<CellSummary>,
}

impl BenchSummary {
    pub fn cell(&self, method: Method, rank: usize, dr: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.rank == rank && c.dr == dr)
    }
}

/// Groups rows by `(method, R, dr)` in first-appearance order.
pub fn summarize(rows: &[BenchRow]) -> BenchSummary {
    let mut keys: Vec<(Method, usize, f64)> = Vec::new();
    for r in rows {
        let k = (r.method, r.rank, r.dr);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let cells = keys
        .into_iter()
        .map(|(method, rank, dr)| {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.method == method && r.rank == rank && r.dr == dr)
                .collect();
            let col = |f: fn(&BenchRow) -> f64| Stats::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            CellSummary {
                method,
                rank,
                dr,
                runs: group.len(),
                failures: group.iter().filter(|r| r.is_failure()).count(),
                error: col(|r| r.error),
                time_total_s: col(|r| r.time_total_s),
                iters: Stats::of(
                    &group
                        .iter()
                        .filter(|r| !r.is_failure())
                        .map(|r| r.iters as f64)
                        .collect::<Vec<_>>(),
                ),
                prep_ms: col(|r| r.prep_ms),
                embed_gen_ms: col(|r| r.embed_gen_ms),
                embed_apply_ms: col(|r| r.embed_apply_ms),
                factor_ms: col(|r| r.factor_ms),
                core_ms: col(|r| r.core_ms),
            }
        })
        .collect();
    BenchSummary { cells }
}

pub fn write_summary<W: Write>(w: W, summary: &BenchSummary) -> Result<()> {
    serde_json::to_writer_pretty(w, summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_is_seed_deterministic() {
        let a = synth_tensor(&[6, 5, 4], &[2, 2, 2], 0.1, 3).unwrap();
        let b = synth_tensor(&[6, 5, 4], &[2, 2, 2], 0.1, 3).unwrap();
        let c = synth_tensor(&[6, 5, 4], &[2, 2, 2], 0.1, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(synth_tensor(&[3, 3], &[4, 1], 0.0, 0).is_err());
        assert!(synth_tensor(&[3, 3], &[1, 1], -1.0, 0).is_err());
    }

    #[test]
    fn noise_fraction_sigma() {
        let s = sigma_for_noise_fraction(&[80, 80, 80], &[15, 15, 15], 0.2).unwrap();
        assert!((s - (0.25f64 * 3375.0 / 512000.0).sqrt()).abs() < 1e-15);
        assert_eq!(sigma_for_noise_fraction(&[4], &[1], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn stats_follow_sample_conventions() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0, f64::NAN]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stats::of(&[7.0]).sd, 0.0);
        assert!(Stats::of(&[]).mean.is_nan());
    }

    #[test]
    fn config_validation() {
        let mut c = BenchConfig {
            methods: vec![Method::HooiRe],
            dr_grid: vec![],
            ..BenchConfig::default()
        };
        assert!(c.validate().is_err());
        c.methods = vec![Method::Hooi];
        assert!(c.validate().is_ok());
        c.dr_grid = vec![0.0];
        assert!(c.validate().is_err());
        c.dr_grid = vec![0.5];
        c.reps = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn deterministic_methods_ignore_dr_grid() {
        let c = BenchConfig {
            methods: vec![Method::Hosvd, Method::HooiRe],
            ranks: vec![2],
            dr_grid: vec![0.3, 0.6],
            reps: 2,
            ..BenchConfig::default()
        };
        let cells = c.cells();
        assert_eq!(cells.len(), 2 + 4);
        assert!(cells[..2].iter().all(|c| c.2 == 1.0));
    }
}
