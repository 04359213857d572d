//! Empirical checks of the embedding bounds.
//!
//! Two kinds of check live here:
//!
//! * Conditional implications (inner products under an `ε`-JL map of
//!   `{x ± y}`, and the three consequences of embedding one factor's column
//!   set). A draw is first tested against the hypothesis with
//!   [`is_eps_jl`]; draws that fail it are discarded and counted, and every
//!   accepted draw must satisfy the conclusion. Any violation is a bug.
//! * Monte-Carlo probability statements (multimode distortion of a Tucker
//!   point and distortion of residuals `X − Y` over a Tucker manifold). These
//!   pass when the empirical failure fraction stays below
//!   `η + 2 √(η(1 − η)/trials)`.
//!
//! Conclusions of the conditional checks are compared with a relative
//! floating-point allowance of [`FLOAT_SLACK`] on the bound's natural scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embeddings::{is_eps_jl, random_unit_vector, EmbeddingKind, LinearEmbedding, ModewiseEmbedding};
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, random_orthonormal};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, stream_rng, Stream, StreamRng};
use crate::tensor::DenseTensor;
use crate::tucker::TuckerDecomposition;

use rand::Rng;
use rand_distr::StandardNormal;

/// Relative allowance for rounding when comparing a conclusion with its bound.
pub const FLOAT_SLACK: f64 = 1e-12;

/// Conditional suites give up after this many draws per requested trial.
pub const MAX_ATTEMPTS_PER_TRIAL: usize = 50;

/// Tolerance of the Tucker norm identity suite.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub eps: f64,
    pub eta: f64,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    /// Embedding dimension `m_j` per mode.
    pub embed_dims: Vec<usize>,
    pub trials: usize,
    /// Absolute constant `C̃` of the dimension bounds.
    pub cconst: f64,
    pub seed: u64,
    pub family: EmbeddingKind,
}

impl BoundParams {
    pub fn new(dims: Vec<usize>, ranks: Vec<usize>, embed_dims: Vec<usize>, eps: f64, eta: f64) -> Self {
        Self {
            eps,
            eta,
            dims,
            ranks,
            embed_dims,
            trials: 500,
            cconst: 1.0,
            seed: 0,
            family: EmbeddingKind::Gaussian,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_family(mut self, family: EmbeddingKind) -> Self {
        self.family = family;
        self
    }

    pub fn with_cconst(mut self, cconst: f64) -> Self {
        self.cconst = cconst;
        self
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// `R̃ = max_j R_j`.
    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.dims.len();
        if q == 0 {
            return Err(Error::InvalidConfig("empty dimension list".into()));
        }
        if self.ranks.len() != q || self.embed_dims.len() != q {
            return Err(Error::InvalidConfig(format!(
                "{q} dims, {} ranks and {} embedding dims",
                self.ranks.len(),
                self.embed_dims.len()
            )));
        }
        for j in 0..q {
            if self.dims[j] == 0 || self.ranks[j] == 0 || self.embed_dims[j] == 0 {
                return Err(Error::InvalidConfig(format!("zero size in mode {j}")));
            }
            if self.ranks[j] > self.dims[j] {
                return Err(Error::RankExceedsDimension {
                    mode: j,
                    rank: self.ranks[j],
                    dim: self.dims[j],
                });
            }
        }
        if !(self.eps > 0.0 && self.eps < 1.0) || !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eps = {} and eta = {} must lie in (0, 1)",
                self.eps, self.eta
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        if !(self.cconst >= 0.0) {
            return Err(Error::InvalidConfig("cconst must be non-negative".into()));
        }
        Ok(())
    }

    /// Largest `ε` admitted by the multimode distortion theorem:
    /// `ln 2 / (1/R̃ + 1/2 + 1/(q R̃))`.
    pub fn max_eps_multimode(&self) -> f64 {
        let r = self.max_rank() as f64;
        let q = self.order() as f64;
        std::f64::consts::LN_2 / (1.0 / r + 0.5 + 1.0 / (q * r))
    }

    /// Largest `ε` admitted by the residual theorem:
    /// `ln 2 / (1/(2R̃) + 1/4 + 1/(2qR̃))`.
    pub fn max_eps_residual(&self) -> f64 {
        let r = self.max_rank() as f64;
        let q = self.order() as f64;
        std::f64::consts::LN_2 / (0.5 / r + 0.25 + 0.5 / (q * r))
    }
}

/// Pass/fail outcome of one named claim inside a conditional check.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClaimSummary {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Largest observed `lhs / rhs`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub check: String,
    /// Trials that entered the statistics (hypothesis satisfied, for
    /// conditional checks).
    pub trials: usize,
    /// Draws rejected because the hypothesis failed.
    pub discarded: usize,
    /// Per-trial measured quantity (a distortion or the left-hand side).
    pub distortions: Vec<f64>,
    /// Per-trial right-hand side the measurement is compared against.
    pub bound_rhs: Vec<f64>,
    pub failures: usize,
    pub failure_fraction: f64,
    /// Largest failure fraction that still passes.
    pub allowed_fraction: f64,
    pub claims: Vec<ClaimSummary>,
    /// Scalar diagnostics (admissible ε, subspace dimension, ...).
    pub extras: BTreeMap<String, f64>,
    pub passed: bool,
}

impl BoundReport {
    fn new(check: &str, allowed_fraction: f64) -> Self {
        Self {
            check: check.to_string(),
            allowed_fraction,
            ..Self::default()
        }
    }

    fn record(&mut self, value: f64, rhs: f64, failed: bool) {
        self.trials += 1;
        self.distortions.push(value);
        self.bound_rhs.push(rhs);
        if failed {
            self.failures += 1;
        }
    }

    fn claim(&mut self, name: &str, lhs: f64, rhs: f64, scale: f64) -> bool {
        let ok = lhs <= rhs + FLOAT_SLACK * scale.max(f64::MIN_POSITIVE);
        let idx = match self.claims.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.claims.push(ClaimSummary {
                    name: name.to_string(),
                    ..ClaimSummary::default()
                });
                self.claims.len() - 1
            }
        };
        let c = &mut self.claims[idx];
        c.checked += 1;
        if !ok {
            c.violations += 1;
        }
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        c.max_ratio = c.max_ratio.max(ratio);
        ok
    }

    /// Folds `other` (same check) into `self`.
    fn absorb(&mut self, other: BoundReport) {
        self.trials += other.trials;
        self.discarded += other.discarded;
        self.distortions.extend(other.distortions);
        self.bound_rhs.extend(other.bound_rhs);
        self.failures += other.failures;
        for c in other.claims {
            match self.claims.iter_mut().find(|x| x.name == c.name) {
                Some(x) => {
                    x.checked += c.checked;
                    x.violations += c.violations;
                    x.max_ratio = x.max_ratio.max(c.max_ratio);
                }
                None => self.claims.push(c),
            }
        }
    }

    fn finish(mut self) -> Self {
        self.failure_fraction = if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        };
        self.passed = self.failure_fraction <= self.allowed_fraction;
        self
    }
}

/// `η + 2 √(η(1 − η)/trials)`.
pub fn binomial_allowance(eta: f64, trials: usize) -> f64 {
    eta + 2.0 * (eta * (1.0 - eta) / trials as f64).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner-product bound for one map and one pair: if `a` is an `eps`-JL
/// embedding of `{x + y, x − y}`, then
/// `|⟨Ax, Ay⟩ − ⟨x, y⟩| ≤ (eps/2)(‖x‖² + ‖y‖²)`.
pub fn check_inner_product_bound<E: LinearEmbedding + ?Sized>(
    a: &E,
    x: &[f64],
    y: &[f64],
    eps: f64,
) -> Result<BoundReport> {
    let mut report = BoundReport::new("inner-product", 0.0);
    let plus: Vec<f64> = x.iter().zip(y).map(|(u, v)| u + v).collect();
    let minus: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
    if !is_eps_jl(a, &[plus, minus], eps)?.all_passed {
        report.discarded = 1;
        return Ok(report.finish());
    }
    let ax = a.apply_vector(x)?;
    let ay = a.apply_vector(y)?;
    let lhs = (dot(&ax, &ay) - dot(x, y)).abs();
    let scale = dot(x, x) + dot(y, y);
    let rhs = 0.5 * eps * scale;
    let ok = report.claim("inner-product", lhs, rhs, scale);
    report.record(lhs, rhs, !ok);
    Ok(report.finish())
}

/// Column set `{Γ_r ± Γ_s : r < s} ∪ {Γ_r}` of one factor.
fn factor_test_set(gamma: &Matrix) -> Vec<Vec<f64>> {
    let r = gamma.cols();
    let mut set: Vec<Vec<f64>> = (0..r).map(|c| gamma.column(c).to_vec()).collect();
    for a in 0..r {
        for b in a + 1..r {
            let (u, v) = (gamma.column(a), gamma.column(b));
            set.push(u.iter().zip(v).map(|(x, y)| x + y).collect());
            set.push(u.iter().zip(v).map(|(x, y)| x - y).collect());
        }
    }
    set
}

/// Consequences of `a` being an `eps`-JL embedding of mode `j`'s column
/// set, for an orthogonal decomposition `t` and `Y′ = Y ×_j A`:
///
/// * `core`: every entry of the rescaled core obeys `|λ′ − λ| ≤ eps |λ|`;
/// * `coherence`: the mapped factor's coherence is at most `eps/(1 − eps)`;
/// * `norm`: `|‖Y′‖² − ‖Y‖²| ≤ eps Σ_{r,s} |(Ψ_j Ψ_jᵀ)_{rs}|`.
pub fn check_prop1(t: &TuckerDecomposition, a: &Matrix, j: usize, eps: f64) -> Result<BoundReport> {
    if !t.is_orthogonal() {
        return Err(Error::InvalidConfig("check_prop1 needs an orthogonal decomposition".into()));
    }
    if j >= t.order() {
        return Err(Error::ModeOutOfRange { mode: j, order: t.order() });
    }
    let mut report = BoundReport::new("prop1", 0.0);
    let gamma = t.factor(j);
    if !is_eps_jl(a, &factor_test_set(gamma), eps)?.all_passed {
        report.discarded = 1;
        return Ok(report.finish());
    }
    let mapped = t.apply_mode_map(a, j)?;

    let mut ok = true;
    let mut worst = 0.0f64;
    for (l0, l1) in t.core().data().iter().zip(mapped.core().data()) {
        let lhs = (l1 - l0).abs();
        let rhs = eps * l0.abs();
        ok &= report.claim("core", lhs, rhs, l0.abs());
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }

    let mu = mapped.mode_coherence(j)?;
    ok &= report.claim("coherence", mu, eps / (1.0 - eps), 1.0);

    let y = t.reconstruct()?;
    let y_mapped = y.mode_multiply(a, j)?;
    let lhs = (y_mapped.norm_sq() - y.norm_sq()).abs();
    let envelope: f64 = t.psi_gram(j)?.as_slice().iter().map(|v| v.abs()).sum();
    ok &= report.claim("norm", lhs, eps * envelope, envelope);

    report.record(lhs, eps * envelope, !ok);
    report.extras.insert("max_core_ratio".into(), worst);
    Ok(report.finish())
}

fn embedding_for(kind: EmbeddingKind, n: usize, m: usize, seed: u64) -> Result<ModewiseEmbedding> {
    ModewiseEmbedding::new(kind, n, m, seed)
}

/// Runs a conditional check until `trials` draws satisfy the hypothesis,
/// giving up after `MAX_ATTEMPTS_PER_TRIAL * trials` draws.
fn collect_conditional(
    name: &str,
    trials: usize,
    seed: u64,
    mut one: impl FnMut(u64) -> Result<BoundReport>,
) -> Result<BoundReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let mut total = BoundReport::new(name, 0.0);
    let max_attempts = trials.saturating_mul(MAX_ATTEMPTS_PER_TRIAL);
    let mut attempt = 0;
    while total.trials < trials && attempt < max_attempts {
        total.absorb(one(derive_seed(seed, Stream::Trial { index: attempt }))?);
        attempt += 1;
    }
    total.extras.insert("attempts".into(), attempt as f64);
    total.extras.insert("requested_trials".into(), trials as f64);
    let mut report = total.finish();
    // Too few accepted draws is inconclusive, not a pass.
    report.passed &= report.trials >= trials;
    Ok(report)
}

/// Inner-product suite: random unit `x, y ∈ R^n` and a fresh `m x n` map
/// per draw, until `trials` draws satisfy the hypothesis.
pub fn inner_product_suite(
    kind: EmbeddingKind,
    n: usize,
    m: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    collect_conditional("lemma-a", trials, seed, |s| {
        let mut rng = stream_rng(s, Stream::Synth);
        let x = random_unit_vector(n, &mut rng);
        let y = random_unit_vector(n, &mut rng);
        let a = embedding_for(kind, n, m, s)?;
        check_inner_product_bound(&a, &x, &y, eps)
    })
}

/// Factor-embedding suite: a random orthogonal decomposition and a fresh
/// `m x n_j` map per draw; the mode cycles through `0..q`.
pub fn prop1_suite(
    kind: EmbeddingKind,
    dims: &[usize],
    ranks: &[usize],
    m: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    let mut attempt = 0usize;
    collect_conditional("prop1", trials, seed, |s| {
        let j = attempt % dims.len();
        attempt += 1;
        let mut rng = stream_rng(s, Stream::Synth);
        let t = TuckerDecomposition::random_orthogonal(dims, ranks, &mut rng)?;
        let a = embedding_for(kind, dims[j], m, s)?.to_matrix();
        check_prop1(&t, &a, j, eps)
    })
}

fn draw_maps(kind: EmbeddingKind, dims: &[usize], embed: &[usize], seed: u64) -> Result<Vec<ModewiseEmbedding>> {
    (0..dims.len())
        .map(|k| embedding_for(kind, dims[k], embed[k], derive_seed(seed, Stream::Gaussian { mode: k })))
        .collect()
}

fn apply_all(x: &DenseTensor, maps: &[ModewiseEmbedding]) -> Result<DenseTensor> {
    let mut cur = maps[0].apply_to_tensor(x, 0)?;
    for (k, a) in maps.iter().enumerate().skip(1) {
        cur = a.apply_to_tensor(&cur, k)?;
    }
    Ok(cur)
}

/// Multimode distortion: per trial a random orthogonal Tucker tensor `Y`
/// of the configured ranks and fresh maps `A_1, ..., A_q`; a trial fails
/// when `|‖Y ×_j A_j‖² − ‖Y‖²| > eps ‖Y‖²`.
pub fn check_multimode_distortion(params: &BoundParams) -> Result<BoundReport> {
    params.validate()?;
    let admissible = params.max_eps_multimode();
    if params.eps > admissible {
        return Err(Error::InvalidConfig(format!(
            "eps = {} exceeds the admissible {admissible:.6}",
            params.eps
        )));
    }
    let mut report = BoundReport::new("th1", binomial_allowance(params.eta, params.trials));
    for t in 0..params.trials {
        let s = derive_seed(params.seed, Stream::Trial { index: t });
        let mut rng = stream_rng(s, Stream::Synth);
        let y = TuckerDecomposition::random_orthogonal(&params.dims, &params.ranks, &mut rng)?.reconstruct()?;
        let maps = draw_maps(params.family, &params.dims, &params.embed_dims, s)?;
        let before = y.norm_sq();
        let d = apply_all(&y, &maps)?.norm_sq() / before - 1.0;
        report.record(d, params.eps, d.abs() > params.eps);
    }
    report.extras.insert("admissible_eps".into(), admissible);
    Ok(report.finish())
}

/// Smallest candidate `m` (used for every mode) whose empirical failure
/// fraction is at most `eta`; `None` if no candidate qualifies.
pub fn calibrate_embedding_dim(params: &BoundParams, candidates: &[usize]) -> Result<Option<usize>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    for m in sorted {
        if params.dims.iter().any(|&n| m > n) && params.family == EmbeddingKind::Srft {
            continue;
        }
        let mut p = params.clone();
        p.embed_dims = vec![m; p.order()];
        if check_multimode_distortion(&p)?.failure_fraction <= params.eta {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// Which dimension bound [`embedding_dim_bound`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundForm {
    /// `m_j ≥ C̃ R̃² q² / ε² · ln(R_j² q / η)`.
    Multimode,
    /// `m_k ≥ C̃ (q+1)³ p̃_j / ε² · ln(4 ñ / η^{1/(q+1)})` with
    /// `ñ = max n_k`. `p_tilde` defaults to `n_j · min(R_j, ∏_{k≠j} R_k)`,
    /// the dimension for a generic core.
    Residual { mode: usize, p_tilde: Option<usize> },
}

/// `n_j · min(R_j, ∏_{k≠j} R_k)`.
pub fn generic_p_tilde(dims: &[usize], ranks: &[usize], mode: usize) -> usize {
    let others: usize = ranks.iter().enumerate().filter(|&(k, _)| k != mode).map(|(_, &r)| r).product();
    dims[mode] * ranks[mode].min(others)
}

/// Per-mode embedding dimension from the chosen bound, rounded up and
/// clamped to at least 1.
pub fn embedding_dim_bound(params: &BoundParams, form: BoundForm) -> Result<Vec<usize>> {
    let q = params.order();
    if q == 0 || params.ranks.len() != q {
        return Err(Error::InvalidConfig("dims and ranks must have the same positive length".into()));
    }
    if !(params.eps > 0.0) || !(params.eta > 0.0 && params.eta < 1.0) {
        return Err(Error::InvalidConfig("eps must be positive and eta in (0, 1)".into()));
    }
    if !(params.cconst > 0.0) {
        return Err(Error::InvalidConfig("cconst must be positive".into()));
    }
    let qf = q as f64;
    let eps2 = params.eps * params.eps;
    let clamp = |v: f64| -> usize { v.ceil().max(1.0) as usize };
    match form {
        BoundForm::Multimode => {
            let rt = params.max_rank() as f64;
            Ok(params
                .ranks
                .iter()
                .map(|&r| {
                    let rj = r as f64;
                    let log = (rj * rj * qf / params.eta).ln();
                    clamp(params.cconst * rt * rt * qf * qf / eps2 * log)
                })
                .collect())
        }
        BoundForm::Residual { mode, p_tilde } => {
            if mode >= q {
                return Err(Error::ModeOutOfRange { mode, order: q });
            }
            let p = p_tilde.unwrap_or_else(|| generic_p_tilde(&params.dims, &params.ranks, mode)) as f64;
            let n_max = params.dims.iter().copied().max().unwrap_or(1) as f64;
            let log = (4.0 * n_max / params.eta.powf(1.0 / (qf + 1.0))).ln();
            let m = clamp(params.cconst * (qf + 1.0).powi(3) * p / eps2 * log);
            Ok(vec![m; q])
        }
    }
}

/// Fixed part of a Tucker manifold: the core `Λ` and the factors of every
/// mode except `mode`, whose factor ranges over all orthonormal matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualSubspace {
    pub mode: usize,
    pub core: DenseTensor,
    /// One factor per mode; entry `mode` is a placeholder that sampled
    /// points replace.
    pub factors: Vec<Matrix>,
}

impl ResidualSubspace {
    /// Standard-normal core and Haar factors.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], ranks: &[usize], mode: usize, rng: &mut R) -> Result<Self> {
        if mode >= dims.len() {
            return Err(Error::ModeOutOfRange { mode, order: dims.len() });
        }
        let t = TuckerDecomposition::random_orthogonal(dims, ranks, rng)?;
        let (core, factors) = t.into_parts();
        Ok(Self { mode, core, factors })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// A point of the manifold with the given mode factor.
    pub fn point(&self, gamma: Matrix) -> Result<TuckerDecomposition> {
        let mut factors = self.factors.clone();
        factors[self.mode] = gamma;
        TuckerDecomposition::new(self.core.clone(), factors)
    }

    /// Exact `dim span`: `n_j · rank(Λ_(j))`.
    pub fn p_tilde(&self) -> Result<usize> {
        let rank = numerical_rank(&self.core.matricize(self.mode)?, 1e-12)?;
        Ok(self.factors[self.mode].rows() * rank)
    }
}

/// Residual distortion: per trial a fresh `L = ×_k A_k` and
/// `samples_per_trial` points `Y` with random orthonormal mode factor; the
/// trial fails when any `|‖L(X − Y)‖² − ‖X − Y‖²| > eps ‖X − Y‖²`.
/// `L(X − Y)` is computed as `L(X) − L(Y)` with `L(Y)` in Tucker form.
pub fn check_residual_distortion(
    x: &DenseTensor,
    params: &BoundParams,
    subspace: &ResidualSubspace,
    samples_per_trial: usize,
) -> Result<BoundReport> {
    params.validate()?;
    if x.shape() != params.dims.as_slice() || subspace.dims() != params.dims {
        return Err(Error::DimensionMismatch("tensor, parameters and subspace disagree on dims".into()));
    }
    if samples_per_trial == 0 {
        return Err(Error::InvalidConfig("at least one sample per trial is required".into()));
    }
    let admissible = params.max_eps_residual();
    if params.eps > admissible {
        return Err(Error::InvalidConfig(format!(
            "eps = {} exceeds the admissible {admissible:.6}",
            params.eps
        )));
    }
    let j = subspace.mode;
    let (nj, rj) = (params.dims[j], subspace.core.shape()[j]);
    let mut report = BoundReport::new("th4", binomial_allowance(params.eta, params.trials));
    for t in 0..params.trials {
        let s = derive_seed(params.seed, Stream::Trial { index: t });
        let maps = draw_maps(params.family, &params.dims, &params.embed_dims, s)?;
        let lx = apply_all(x, &maps)?;
        let mut rng: StreamRng = stream_rng(s, Stream::Synth);
        let mut worst = 0.0f64;
        for _ in 0..samples_per_trial {
            let gamma = random_orthonormal(nj, rj, &mut rng)?;
            let y = subspace.point(gamma)?;
            let residual = x.sub(&y.reconstruct()?)?;
            let before = residual.norm_sq();
            if before == 0.0 {
                continue;
            }
            let mapped: Vec<Matrix> = y
                .factors()
                .iter()
                .zip(&maps)
                .map(|(f, a)| a.apply(f))
                .collect::<Result<_>>()?;
            let factor_maps: Vec<Option<&Matrix>> = mapped.iter().map(Some).collect();
            let ly = y.core().multi_mode_multiply(&factor_maps)?;
            let d = lx.distance(&ly)?.powi(2) / before - 1.0;
            if d.abs() > worst.abs() {
                worst = d;
            }
        }
        report.record(worst, params.eps, worst.abs() > params.eps);
    }
    report.extras.insert("admissible_eps".into(), admissible);
    report.extras.insert("p_tilde".into(), subspace.p_tilde()? as f64);
    report.extras.insert("samples_per_trial".into(), samples_per_trial as f64);
    Ok(report.finish())
}

/// Tucker norm identity and mode-map equivalence on random small
/// instances: `q ∈ {3, 4}`, `n_j ≤ 12`, `R_j ≤ 4`, Gaussian `B` with
/// `R_j..=12` rows. Distortions hold the relative error of
/// `norm_via_gram` against `‖reconstruct ×_j B‖²`; the `map` claim records
/// `reconstruct(apply_mode_map)` against the dense product.
pub fn lemma21_suite(instances: usize, seed: u64) -> Result<BoundReport> {
    if instances == 0 {
        return Err(Error::InvalidConfig("at least one instance is required".into()));
    }
    let mut report = BoundReport::new("lemma21", 0.0);
    let mut max_map = 0.0f64;
    for i in 0..instances {
        let mut rng = stream_rng(derive_seed(seed, Stream::Trial { index: i }), Stream::Synth);
        let q = rng.random_range(3..=4);
        let dims: Vec<usize> = (0..q).map(|_| rng.random_range(1..=12)).collect();
        let ranks: Vec<usize> = dims.iter().map(|&n| rng.random_range(1..=n.min(4))).collect();
        let j = rng.random_range(0..q);
        let rows = rng.random_range(ranks[j]..=12);
        let b = Matrix::from_fn(rows, dims[j], |_, _| rng.sample(StandardNormal));
        let t = TuckerDecomposition::random_orthogonal(&dims, &ranks, &mut rng)?;

        let dense = t.reconstruct()?.mode_multiply(&b, j)?;
        let direct = dense.norm_sq();
        let via = t.norm_via_gram(&b, j)?;
        let rel = (via - direct).abs() / direct.max(f64::MIN_POSITIVE);
        let ok = report.claim("gram", rel, IDENTITY_TOL, 0.0);

        match t.apply_mode_map(&b, j) {
            Ok(mapped) => {
                let rel_map = mapped.reconstruct()?.distance(&dense)? / dense.norm().max(f64::MIN_POSITIVE);
                max_map = max_map.max(rel_map);
                report.claim("map", rel_map, 1e-11, 0.0);
            }
            Err(Error::SingularMap { .. }) => {}
            Err(e) => return Err(e),
        }
        report.record(rel, IDENTITY_TOL, !ok);
    }
    report.extras.insert("max_map_error".into(), max_map);
    report
        .extras
        .insert("max_identity_error".into(), report.distortions.iter().cloned().fold(0.0, f64::max));
    let mut report = report.finish();
    report.passed &= report.claims.iter().all(|c| c.violations == 0);
    Ok(report)
}

/// Named suites exposed on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "lemma21")]
    Lemma21,
    #[serde(rename = "lemma-a")]
    LemmaA,
    #[serde(rename = "prop1")]
    Prop1,
    #[serde(rename = "th1")]
    Th1,
    #[serde(rename = "th4")]
    Th4,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma21" => Ok(Suite::Lemma21),
            "lemma-a" => Ok(Suite::LemmaA),
            "prop1" => Ok(Suite::Prop1),
            "th1" => Ok(Suite::Th1),
            "th4" => Ok(Suite::Th4),
            other => Err(Error::InvalidConfig(format!(
                "unknown suite `{other}` (expected lemma21, lemma-a, prop1, th1 or th4)"
            ))),
        }
    }
}

/// Shared knobs of [`run_suite`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub trials: usize,
    pub eps: f64,
    pub eta: f64,
    pub seed: u64,
    pub family: EmbeddingKind,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            trials: 500,
            eps: 0.5,
            eta: 0.1,
            seed: 1,
            family: EmbeddingKind::Gaussian,
        }
    }
}

/// Runs a suite at its reference configuration:
///
/// | suite | setting |
/// |---|---|
/// | `lemma21` | `trials` random instances |
/// | `lemma-a` | `n = 128`, `m = 64` |
/// | `prop1` | `n = (32,32,32)`, `R = (3,3,3)`, `m = 24` |
/// | `th1` | `n = (64,64,64)`, `R = (3,3,3)`, `m_j = 48` |
/// | `th4` | `n = (32,32,32)`, `R = (2,2,2)`, `m_k = 24`, 20 samples per trial, dense Gaussian `X` |
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<BoundReport> {
    match suite {
        Suite::Lemma21 => lemma21_suite(opts.trials, opts.seed),
        Suite::LemmaA => inner_product_suite(opts.family, 128, 64, opts.eps, opts.trials, opts.seed),
        Suite::Prop1 => prop1_suite(opts.family, &[32, 32, 32], &[3, 3, 3], 24, opts.eps, opts.trials, opts.seed),
        Suite::Th1 => {
            let params = BoundParams::new(vec![64; 3], vec![3; 3], vec![48; 3], opts.eps, opts.eta)
                .with_trials(opts.trials)
                .with_seed(opts.seed)
                .with_family(opts.family);
            check_multimode_distortion(&params)
        }
        Suite::Th4 => {
            let dims = vec![32; 3];
            let params = BoundParams::new(dims.clone(), vec![2; 3], vec![24; 3], opts.eps, opts.eta)
                .with_trials(opts.trials)
                .with_seed(opts.seed)
                .with_family(opts.family);
            let mut rng = stream_rng(opts.seed, Stream::Synth);
            let x = DenseTensor::from_fn(dims.clone(), |_| rng.sample(StandardNormal))?;
            let subspace = ResidualSubspace::random(&dims, &[2, 2, 2], 0, &mut rng)?;
            check_residual_distortion(&x, &params, &subspace, 20)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthonormal;

    #[test]
    fn dimension_bound_reference_value() {
        let p = BoundParams::new(vec![64; 3], vec![3; 3], vec![48; 3], 0.5, 0.1);
        assert_eq!(embedding_dim_bound(&p, BoundForm::Multimode).unwrap(), vec![1814; 3]);
    }

    #[test]
    fn dimension_bound_clamps_degenerate_log() {
        let p = BoundParams::new(vec![4], vec![1], vec![2], 0.5, 0.99);
        assert_eq!(embedding_dim_bound(&p, BoundForm::Multimode).unwrap(), vec![1]);
    }

    #[test]
    fn orthogonal_map_keeps_inner_products() {
        let mut rng = stream_rng(3, Stream::Synth);
        let q = random_orthonormal(16, 16, &mut rng).unwrap();
        let x = random_unit_vector(16, &mut rng);
        let y = random_unit_vector(16, &mut rng);
        let r = check_inner_product_bound(&q, &x, &y, 0.1).unwrap();
        assert_eq!(r.trials, 1);
        assert!(r.passed);
        assert!(r.distortions[0] < 1e-14);

        let zero = vec![0.0; 16];
        assert!(check_inner_product_bound(&q, &x, &zero, 0.1).unwrap().passed);
    }

    #[test]
    fn prop1_with_orthogonal_map_is_exact() {
        let mut rng = stream_rng(4, Stream::Synth);
        let t = TuckerDecomposition::random_orthogonal(&[8, 6, 5], &[3, 2, 1], &mut rng).unwrap();
        let a = random_orthonormal(8, 8, &mut rng).unwrap();
        let r = check_prop1(&t, &a, 0, 0.05).unwrap();
        assert!(r.passed && r.trials == 1);
        assert!(r.distortions[0] < 1e-10);
        let rank_one = check_prop1(&t, &random_orthonormal(5, 5, &mut rng).unwrap(), 2, 0.05).unwrap();
        assert_eq!(rank_one.claims.iter().find(|c| c.name == "coherence").unwrap().max_ratio, 0.0);
    }

    #[test]
    fn full_size_srft_has_no_distortion() {
        let p = BoundParams::new(vec![8, 6, 5], vec![2, 2, 2], vec![8, 6, 5], 0.5, 0.1)
            .with_trials(5)
            .with_family(EmbeddingKind::Srft);
        let r = check_multimode_distortion(&p).unwrap();
        assert!(r.distortions.iter().all(|d| d.abs() < 1e-12));
        assert_eq!(r, check_multimode_distortion(&p).unwrap());
    }

    #[test]
    fn inadmissible_eps_is_rejected() {
        let p = BoundParams::new(vec![8; 3], vec![3; 3], vec![4; 3], 0.9, 0.1);
        assert!(check_multimode_distortion(&p).is_err());
    }

    #[test]
    fn lemma21_small_run_passes() {
        let r = lemma21_suite(20, 5).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
