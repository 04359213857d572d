//! HOSVD, HOOI and HOOI with modewise random embeddings.
//!
//! All iterative methods share one alternating scheme. Each outer iteration
//! updates every factor in turn by an orthogonal Procrustes step
//! (`Γ_j ← U Vᵀ` from the thin SVD of `[X ×_{k≠j} Γ_kᵀ]_(j) Λ_(j)ᵀ`,
//! using the most recent factors and core), then refits the core once.
//!
//! * `hooi` works on `X` directly.
//! * `hooi-re` mixes the data once with `F_j D_j`, draws fresh row samples
//!   `S_j` every iteration, replaces `X` by `X̃ ×_{k≠j} S_k` and `Γ_k` by
//!   `S_k Γ_k` in the factor step, and refits the core by least squares on
//!   the fully sampled tensor. Factors are unmixed at the end.
//! * `hooi-re-star` is `hooi-re` with the core refit against the full mixed
//!   tensor (`Λ = X̃ ×_k Γ_kᵀ`).
//!
//! The stopping rule compares successive relative fits on the data each
//! method fits; the reported `final_error` is always `‖X − X̂‖` on the
//! original tensor.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embeddings::{sample_rows, MixOperators};
use crate::error::{Error, Result};
use crate::linalg::{leading_left_singular_vectors, polar_factor, pseudo_inverse, random_orthonormal};
use crate::matrix::Matrix;
use crate::rng::{stream_rng, Stream};
use crate::tensor::DenseTensor;
use crate::tucker::TuckerDecomposition;

/// Relative singular-value cutoff of the least-squares core update.
pub const PINV_RCOND: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "hosvd")]
    Hosvd,
    #[serde(rename = "hooi")]
    Hooi,
    #[serde(rename = "hooi-re")]
    HooiRe,
    #[serde(rename = "hooi-re-star")]
    HooiReStar,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Hosvd, Method::Hooi, Method::HooiRe, Method::HooiReStar];

    /// Whether the method draws random embeddings.
    pub fn is_randomized(self) -> bool {
        matches!(self, Method::HooiRe | Method::HooiReStar)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hosvd => "hosvd",
            Method::Hooi => "hooi",
            Method::HooiRe => "hooi-re",
            Method::HooiReStar => "hooi-re-star",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hosvd" => Ok(Method::Hosvd),
            "hooi" => Ok(Method::Hooi),
            "hooi-re" | "hooi_re" => Ok(Method::HooiRe),
            "hooi-re-star" | "hooi-re*" | "hooi_re_star" => Ok(Method::HooiReStar),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// HOSVD of the data being fitted (the mixed tensor for RE methods).
    Hosvd,
    /// QR of Gaussian matrices.
    RandomOrthonormal,
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hosvd" => Ok(Init::Hosvd),
            "random" | "random-orthonormal" => Ok(Init::RandomOrthonormal),
            other => Err(Error::InvalidConfig(format!("unknown init `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposerConfig {
    pub ranks: Vec<usize>,
    pub method: Method,
    /// Target `m_j / n_j` on compressed modes, in `(0, 1]`.
    pub dr: f64,
    /// Zero-based modes that are mixed and sampled (RE methods only).
    pub compress_modes: Vec<usize>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub init: Init,
}

impl DecomposerConfig {
    /// Defaults: `dr = 0.5`, every mode compressed, 100 iterations,
    /// tolerance `1e-5`, seed 0, HOSVD initialisation.
    pub fn new(method: Method, ranks: Vec<usize>) -> Self {
        let q = ranks.len();
        Self {
            ranks,
            method,
            dr: 0.5,
            compress_modes: (0..q).collect(),
            max_iters: 100,
            rel_tol: 1e-5,
            seed: 0,
            init: Init::Hosvd,
        }
    }

    pub fn with_dr(mut self, dr: f64) -> Self {
        self.dr = dr;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_compress_modes(mut self, modes: Vec<usize>) -> Self {
        self.compress_modes = modes;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.ranks.len() != dims.len() {
            return Err(Error::InvalidConfig(format!(
                "{} ranks for an order-{} tensor",
                self.ranks.len(),
                dims.len()
            )));
        }
        for (j, (&r, &n)) in self.ranks.iter().zip(dims).enumerate() {
            if r == 0 {
                return Err(Error::InvalidConfig(format!("rank of mode {j} is zero")));
            }
            if r > n {
                return Err(Error::RankExceedsDimension { mode: j, rank: r, dim: n });
            }
        }
        if !(self.dr > 0.0 && self.dr <= 1.0) {
            return Err(Error::InvalidConfig(format!("dr = {} is outside (0, 1]", self.dr)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        if self.method.is_randomized() {
            if self.compress_modes.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "{} needs at least one compressed mode",
                    self.method
                )));
            }
            let mut seen = vec![false; dims.len()];
            for &j in &self.compress_modes {
                if j >= dims.len() {
                    return Err(Error::ModeOutOfRange { mode: j, order: dims.len() });
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(Error::InvalidConfig(format!("mode {j} listed twice")));
                }
            }
        }
        Ok(())
    }

    /// Embedding dimensions: `max(1, round(dr · n_j))` on compressed modes
    /// (halves round up), `n_j` elsewhere.
    pub fn embedding_dims(&self, dims: &[usize]) -> Vec<usize> {
        dims.iter()
            .enumerate()
            .map(|(j, &n)| {
                if self.method.is_randomized() && self.compress_modes.contains(&j) {
                    embedding_dim(n, self.dr)
                } else {
                    n
                }
            })
            .collect()
    }
}

/// `max(1, round(dr · n))`, capped at `n`.
pub fn embedding_dim(n: usize, dr: f64) -> usize {
    ((dr * n as f64 + 0.5).floor() as usize).clamp(1, n)
}

/// Milliseconds spent per stage in one outer iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub embed_generate_ms: f64,
    pub embed_apply_ms: f64,
    pub factor_update_ms: f64,
    pub core_update_ms: f64,
}

impl StageTimes {
    pub fn total_ms(&self) -> f64 {
        self.embed_generate_ms + self.embed_apply_ms + self.factor_update_ms + self.core_update_ms
    }

    /// Element-wise mean over iterations; zero for an empty slice.
    pub fn mean(times: &[StageTimes]) -> StageTimes {
        if times.is_empty() {
            return StageTimes::default();
        }
        let k = times.len() as f64;
        let sum = times.iter().fold(StageTimes::default(), |a, t| StageTimes {
            embed_generate_ms: a.embed_generate_ms + t.embed_generate_ms,
            embed_apply_ms: a.embed_apply_ms + t.embed_apply_ms,
            factor_update_ms: a.factor_update_ms + t.factor_update_ms,
            core_update_ms: a.core_update_ms + t.core_update_ms,
        });
        StageTimes {
            embed_generate_ms: sum.embed_generate_ms / k,
            embed_apply_ms: sum.embed_apply_ms / k,
            factor_update_ms: sum.factor_update_ms / k,
            core_update_ms: sum.core_update_ms / k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub ranks: Vec<usize>,
    pub dr: f64,
    pub seed: u64,
    pub embedding_dims: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative fit after each outer iteration.
    pub fit_trace: Vec<f64>,
    /// `‖X − X̂‖` on the original data.
    pub final_error: f64,
    /// `final_error / ‖X‖`.
    pub relative_error: f64,
    pub stage_times: Vec<StageTimes>,
    /// Mixing time.
    pub preprocess_ms: f64,
    /// Initial factor and core estimation.
    pub init_ms: f64,
    pub total_ms: f64,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// `‖X − reconstruct(T)‖`.
pub fn reconstruction_error(x: &DenseTensor, t: &TuckerDecomposition) -> Result<f64> {
    x.distance(&t.reconstruct()?)
}

/// `‖X − reconstruct(T)‖ / ‖X‖`; undefined for `X = 0`.
pub fn relative_error(x: &DenseTensor, t: &TuckerDecomposition) -> Result<f64> {
    let nx = x.norm();
    if nx == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(reconstruction_error(x, t)? / nx)
}

/// `1 − ‖X − X̂‖ / ‖X‖`.
pub fn relative_fit(x: &DenseTensor, t: &TuckerDecomposition) -> Result<f64> {
    Ok(1.0 - relative_error(x, t)?)
}

fn validate_ranks(dims: &[usize], ranks: &[usize]) -> Result<()> {
    if dims.len() != ranks.len() {
        return Err(Error::InvalidConfig(format!(
            "{} ranks for an order-{} tensor",
            ranks.len(),
            dims.len()
        )));
    }
    for (j, (&r, &n)) in ranks.iter().zip(dims).enumerate() {
        if r == 0 || r > n {
            return Err(Error::RankExceedsDimension { mode: j, rank: r, dim: n });
        }
    }
    Ok(())
}

fn hosvd_factors(x: &DenseTensor, ranks: &[usize]) -> Result<Vec<Matrix>> {
    (0..x.order())
        .map(|j| leading_left_singular_vectors(&x.matricize(j)?, ranks[j]))
        .collect()
}

/// `X ×_k Γ_kᵀ` over all modes.
fn project_core(x: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let ts: Vec<Matrix> = factors.iter().map(Matrix::transpose).collect();
    let maps: Vec<Option<&Matrix>> = ts.iter().map(Some).collect();
    x.multi_mode_multiply(&maps)
}

/// Truncated HOSVD: `Γ_j` are the leading `R_j` left singular vectors of
/// `X_(j)` and `Λ = X ×_j Γ_jᵀ`.
pub fn hosvd(x: &DenseTensor, ranks: &[usize]) -> Result<TuckerDecomposition> {
    validate_ranks(x.shape(), ranks)?;
    let factors = hosvd_factors(x, ranks)?;
    let core = project_core(x, &factors)?;
    TuckerDecomposition::new_orthogonal(core, factors)
}

/// Runs the method named in `config`.
pub fn decompose(x: &DenseTensor, config: &DecomposerConfig) -> Result<(TuckerDecomposition, RunReport)> {
    match config.method {
        Method::Hosvd => hosvd_with_report(x, config),
        Method::Hooi => hooi(x, config),
        Method::HooiRe => hooi_re(x, config),
        Method::HooiReStar => hooi_re_star(x, config),
    }
}

fn hosvd_with_report(x: &DenseTensor, config: &DecomposerConfig) -> Result<(TuckerDecomposition, RunReport)> {
    config.validate(x.shape())?;
    let nx = x.norm();
    if nx == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let start = Instant::now();
    let t0 = Instant::now();
    let factors = hosvd_factors(x, &config.ranks)?;
    let factor_ms = ms(t0);
    let t0 = Instant::now();
    let core = project_core(x, &factors)?;
    let core_ms = ms(t0);
    let t = TuckerDecomposition::new_orthogonal(core, factors)?;
    let total_ms = ms(start);
    let final_error = reconstruction_error(x, &t)?;
    let report = RunReport {
        method: Method::Hosvd,
        ranks: config.ranks.clone(),
        dr: 1.0,
        seed: config.seed,
        embedding_dims: x.shape().to_vec(),
        iterations: 1,
        converged: true,
        fit_trace: vec![1.0 - final_error / nx],
        final_error,
        relative_error: final_error / nx,
        stage_times: vec![StageTimes {
            factor_update_ms: factor_ms,
            core_update_ms: core_ms,
            ..StageTimes::default()
        }],
        preprocess_ms: 0.0,
        init_ms: 0.0,
        total_ms,
    };
    Ok((t, report))
}

/// Plain higher-order orthogonal iteration.
pub fn hooi(x: &DenseTensor, config: &DecomposerConfig) -> Result<(TuckerDecomposition, RunReport)> {
    run_alternating(x, config, Variant::Plain)
}

/// HOOI with random embeddings: sampled factor and core updates.
pub fn hooi_re(x: &DenseTensor, config: &DecomposerConfig) -> Result<(TuckerDecomposition, RunReport)> {
    run_alternating(x, config, Variant::Sketched { full_core: false })
}

/// HOOI-RE with the core refit on the full (mixed) data.
pub fn hooi_re_star(x: &DenseTensor, config: &DecomposerConfig) -> Result<(TuckerDecomposition, RunReport)> {
    run_alternating(x, config, Variant::Sketched { full_core: true })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Variant {
    Plain,
    Sketched { full_core: bool },
}

/// Row sample for one mode in one iteration.
struct ModeSample {
    rows: Vec<usize>,
    scale: f64,
}

impl ModeSample {
    /// `S Γ`.
    fn apply(&self, gamma: &Matrix) -> Matrix {
        gamma.select_rows(&self.rows).scaled(self.scale)
    }
}

fn subsample(x: &DenseTensor, samples: &[Option<ModeSample>], skip: Option<usize>) -> Result<DenseTensor> {
    let mut out: Option<DenseTensor> = None;
    for (k, s) in samples.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        if let Some(s) = s {
            let cur = out.as_ref().unwrap_or(x);
            out = Some(cur.select_mode(k, &s.rows, s.scale)?);
        }
    }
    Ok(out.unwrap_or_else(|| x.clone()))
}

/// Procrustes factor step: polar factor of `[Y ×_{k≠j} Φ_kᵀ]_(j) Λ_(j)ᵀ`.
fn factor_step(y: &DenseTensor, effective: &[Matrix], core: &DenseTensor, j: usize) -> Result<Matrix> {
    let ts: Vec<Matrix> = effective
        .iter()
        .enumerate()
        .map(|(k, f)| if k == j { Matrix::zeros(0, 0) } else { f.transpose() })
        .collect();
    let maps: Vec<Option<&Matrix>> = ts.iter().enumerate().map(|(k, t)| (k != j).then_some(t)).collect();
    let w = y.multi_mode_multiply(&maps)?;
    let g = w.matricize(j)?.matmul_t(&core.matricize(j)?)?;
    polar_factor(&g)
}

fn run_alternating(
    x: &DenseTensor,
    config: &DecomposerConfig,
    variant: Variant,
) -> Result<(TuckerDecomposition, RunReport)> {
    let expected = match variant {
        Variant::Plain => Method::Hooi,
        Variant::Sketched { full_core: false } => Method::HooiRe,
        Variant::Sketched { full_core: true } => Method::HooiReStar,
    };
    if config.method != expected {
        return Err(Error::InvalidConfig(format!(
            "configuration names {} but {} was requested",
            config.method, expected
        )));
    }
    let dims = x.shape().to_vec();
    config.validate(&dims)?;
    let q = dims.len();
    let x_norm = x.norm();
    if x_norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let start = Instant::now();
    let emb_dims = config.embedding_dims(&dims);

    // Mix once.
    let t0 = Instant::now();
    let mix = match variant {
        Variant::Plain => None,
        Variant::Sketched { .. } => Some(MixOperators::generate(&dims, &config.compress_modes, config.seed)?),
    };
    let mixed;
    let work: &DenseTensor = match &mix {
        Some(m) => {
            mixed = m.mix(x)?;
            &mixed
        }
        None => x,
    };
    let preprocess_ms = ms(t0);
    let work_norm = work.norm();

    // Initial estimates.
    let t0 = Instant::now();
    let mut factors = match config.init {
        Init::Hosvd => hosvd_factors(work, &config.ranks)?,
        Init::RandomOrthonormal => (0..q)
            .map(|j| random_orthonormal(dims[j], config.ranks[j], &mut stream_rng(config.seed, Stream::Init { mode: j })))
            .collect::<Result<Vec<_>>>()?,
    };
    let mut core = project_core(work, &factors)?;
    let init_ms = ms(t0);

    let full_fit = |core: &DenseTensor, factors: &[Matrix]| -> Result<f64> {
        let t = TuckerDecomposition::new(core.clone(), factors.to_vec())?;
        Ok(1.0 - work.distance(&t.reconstruct()?)? / work_norm)
    };

    let mut prev_fit = match variant {
        Variant::Sketched { full_core: false } => None,
        _ => Some(full_fit(&core, &factors)?),
    };
    let mut fit_trace = Vec::new();
    let mut stage_times = Vec::new();
    let mut converged = false;

    for iter in 1..=config.max_iters {
        let mut times = StageTimes::default();

        let samples: Vec<Option<ModeSample>> = match variant {
            Variant::Plain => (0..q).map(|_| None).collect(),
            Variant::Sketched { .. } => {
                let t0 = Instant::now();
                let s = (0..q)
                    .map(|k| {
                        config.compress_modes.contains(&k).then(|| {
                            let mut rng = stream_rng(config.seed, Stream::Sample { mode: k, iter });
                            ModeSample {
                                rows: sample_rows(dims[k], emb_dims[k], &mut rng),
                                scale: (dims[k] as f64 / emb_dims[k] as f64).sqrt(),
                            }
                        })
                    })
                    .collect();
                times.embed_generate_ms = ms(t0);
                s
            }
        };

        for j in 0..q {
            let t0 = Instant::now();
            let sampled;
            let y: &DenseTensor = if samples.iter().enumerate().any(|(k, s)| k != j && s.is_some()) {
                sampled = subsample(work, &samples, Some(j))?;
                &sampled
            } else {
                work
            };
            times.embed_apply_ms += ms(t0);

            let t0 = Instant::now();
            let effective: Vec<Matrix> = factors
                .iter()
                .zip(&samples)
                .map(|(f, s)| match s {
                    Some(s) => s.apply(f),
                    None => f.clone(),
                })
                .collect();
            factors[j] = factor_step(y, &effective, &core, j)?;
            times.factor_update_ms += ms(t0);
        }

        let fit = match variant {
            Variant::Plain | Variant::Sketched { full_core: true } => {
                let t0 = Instant::now();
                core = project_core(work, &factors)?;
                times.core_update_ms = ms(t0);
                full_fit(&core, &factors)?
            }
            Variant::Sketched { full_core: false } => {
                let t0 = Instant::now();
                let compressed = subsample(work, &samples, None)?;
                times.embed_apply_ms += ms(t0);

                let t0 = Instant::now();
                let effective: Vec<Matrix> = factors
                    .iter()
                    .zip(&samples)
                    .map(|(f, s)| match s {
                        Some(s) => s.apply(f),
                        None => f.clone(),
                    })
                    .collect();
                let solvers = effective
                    .iter()
                    .zip(&samples)
                    .map(|(e, s)| match s {
                        Some(_) => pseudo_inverse(e, PINV_RCOND),
                        None => Ok(e.transpose()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let maps: Vec<Option<&Matrix>> = solvers.iter().map(Some).collect();
                core = compressed.multi_mode_multiply(&maps)?;
                times.core_update_ms = ms(t0);

                let maps: Vec<Option<&Matrix>> = effective.iter().map(Some).collect();
                let model = core.multi_mode_multiply(&maps)?;
                let cn = compressed.norm();
                if cn == 0.0 {
                    1.0
                } else {
                    1.0 - compressed.distance(&model)? / cn
                }
            }
        };

        fit_trace.push(fit);
        stage_times.push(times);
        if let Some(prev) = prev_fit {
            if fit - prev < config.rel_tol {
                converged = true;
                break;
            }
        }
        prev_fit = Some(fit);
    }

    if let Some(m) = &mix {
        for (j, f) in factors.iter_mut().enumerate() {
            *f = m.unmix_factor(f, j)?;
        }
    }
    let t = match TuckerDecomposition::new_orthogonal(core.clone(), factors.clone()) {
        Ok(t) => t,
        Err(Error::InvalidConfig(_)) => TuckerDecomposition::new(core, factors)?,
        Err(e) => return Err(e),
    };
    let total_ms = ms(start);
    let final_error = reconstruction_error(x, &t)?;
    let report = RunReport {
        method: config.method,
        ranks: config.ranks.clone(),
        dr: if config.method.is_randomized() { config.dr } else { 1.0 },
        seed: config.seed,
        embedding_dims: emb_dims,
        iterations: fit_trace.len(),
        converged,
        fit_trace,
        final_error,
        relative_error: final_error / x_norm,
        stage_times,
        preprocess_ms,
        init_ms,
        total_ms,
    };
    Ok((t, report))
}
