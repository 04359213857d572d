//! Oblivious Johnson–Lindenstrauss embeddings applied along one mode.
//!
//! Two families are provided:
//!
//! * `srft`: `A = √(n/m) · S F D` with `D` a diagonal of Rademacher signs,
//!   `F` the orthonormal DCT-II matrix and `S` a uniform row sample drawn
//!   without replacement. `S` is never formed; it is applied by subsetting.
//!   The `√(n/m)` factor makes `E‖Ax‖² = ‖x‖²`.
//! * `gaussian`: dense `m x n` matrix with i.i.d. `N(0, 1/m)` entries.
//!
//! The HOOI-RE decomposer splits the SRFT: `F D` is applied once to the data
//! ([`MixOperators`]) and a fresh `S` is drawn every outer iteration.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::tensor::DenseTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Srft,
    Gaussian,
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingKind::Srft => "srft",
            EmbeddingKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for EmbeddingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "srft" => Ok(EmbeddingKind::Srft),
            "gaussian" => Ok(EmbeddingKind::Gaussian),
            other => Err(Error::InvalidConfig(format!("unknown embedding kind `{other}`"))),
        }
    }
}

/// Orthogonal mixing transform used by the SRFT family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mixer {
    /// Orthonormal DCT-II.
    Dct2,
}

impl Mixer {
    pub fn matrix(self, n: usize) -> Matrix {
        match self {
            Mixer::Dct2 => dct2_matrix(n),
        }
    }
}

/// Orthonormal DCT-II: `F[k, i] = c_k cos(π (2i + 1) k / 2n)` with
/// `c_0 = √(1/n)` and `c_k = √(2/n)` otherwise.
pub fn dct2_matrix(n: usize) -> Matrix {
    let nf = n as f64;
    let c0 = (1.0 / nf).sqrt();
    let ck = (2.0 / nf).sqrt();
    Matrix::from_fn(n, n, |k, i| {
        let c = if k == 0 { c0 } else { ck };
        c * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    })
}

/// `n` independent Rademacher signs as `±1.0`.
pub fn rademacher_signs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// `m` distinct indices from `0..n`, uniformly without replacement, sorted.
pub fn sample_rows<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut rows = index::sample(rng, n, m).into_vec();
    rows.sort_unstable();
    rows
}

/// A linear map `R^n -> R^m` that can be applied to vectors and matrices.
pub trait LinearEmbedding {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Applies the map to every column of `m`.
    fn apply(&self, m: &Matrix) -> Result<Matrix>;

    fn apply_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let col = Matrix::from_col_major(x.len(), 1, x.to_vec())?;
        Ok(self.apply(&col)?.into_vec())
    }
}

impl LinearEmbedding for Matrix {
    fn input_dim(&self) -> usize {
        self.cols()
    }

    fn output_dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, m: &Matrix) -> Result<Matrix> {
        self.matmul(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Operator {
    Srft {
        sample_rows: Vec<usize>,
        signs: Vec<f64>,
        mixer: Mixer,
        scale: f64,
        mixing: Matrix,
    },
    Gaussian {
        matrix: Matrix,
    },
}

/// One draw from an embedding family, fully determined by
/// `(kind, n, m, seed)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModewiseEmbedding {
    kind: EmbeddingKind,
    n: usize,
    m: usize,
    seed: u64,
    op: Operator,
}

impl ModewiseEmbedding {
    pub fn new(kind: EmbeddingKind, n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidConfig(format!(
                "embedding dimensions must be positive (n = {n}, m = {m})"
            )));
        }
        let op = match kind {
            EmbeddingKind::Srft => {
                if m > n {
                    return Err(Error::InvalidConfig(format!(
                        "srft embedding cannot map dimension {n} up to {m}"
                    )));
                }
                let signs = rademacher_signs(n, &mut stream_rng(seed, Stream::Signs { mode: 0 }));
                let rows = sample_rows(n, m, &mut stream_rng(seed, Stream::Sample { mode: 0, iter: 0 }));
                Operator::Srft {
                    sample_rows: rows,
                    signs,
                    mixer: Mixer::Dct2,
                    scale: (n as f64 / m as f64).sqrt(),
                    mixing: Mixer::Dct2.matrix(n),
                }
            }
            EmbeddingKind::Gaussian => {
                let mut rng = stream_rng(seed, Stream::Gaussian { mode: 0 });
                let sd = (1.0 / m as f64).sqrt();
                let matrix = Matrix::from_fn(m, n, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
                Operator::Gaussian { matrix }
            }
        };
        Ok(Self { kind, n, m, seed, op })
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sampled rows of an SRFT embedding.
    pub fn sample_rows(&self) -> Option<&[usize]> {
        match &self.op {
            Operator::Srft { sample_rows, .. } => Some(sample_rows),
            Operator::Gaussian { .. } => None,
        }
    }

    /// Rademacher signs of an SRFT embedding.
    pub fn signs(&self) -> Option<&[f64]> {
        match &self.op {
            Operator::Srft { signs, .. } => Some(signs),
            Operator::Gaussian { .. } => None,
        }
    }

    pub fn mixer(&self) -> Option<Mixer> {
        match &self.op {
            Operator::Srft { mixer, .. } => Some(*mixer),
            Operator::Gaussian { .. } => None,
        }
    }

    /// Row scale `√(n/m)` (SRFT) or `1` (Gaussian, whose entries already
    /// carry the `1/√m`).
    pub fn scale(&self) -> f64 {
        match &self.op {
            Operator::Srft { scale, .. } => *scale,
            Operator::Gaussian { .. } => 1.0,
        }
    }

    /// The `m x n` matrix of the map.
    pub fn to_matrix(&self) -> Matrix {
        match &self.op {
            Operator::Srft {
                sample_rows,
                signs,
                scale,
                mixing,
                ..
            } => Matrix::from_fn(self.m, self.n, |i, c| scale * mixing.get(sample_rows[i], c) * signs[c]),
            Operator::Gaussian { matrix } => matrix.clone(),
        }
    }

    /// `X ×_mode A`; the SRFT path mixes along the mode and then subsets.
    pub fn apply_to_tensor(&self, x: &DenseTensor, mode: usize) -> Result<DenseTensor> {
        x.check_mode(mode)?;
        if x.shape()[mode] != self.n {
            return Err(Error::DimensionMismatch(format!(
                "embedding of dimension {} applied along mode {mode} of length {}",
                self.n,
                x.shape()[mode]
            )));
        }
        match &self.op {
            Operator::Srft {
                sample_rows,
                signs,
                scale,
                mixing,
                ..
            } => {
                let fd = mixing_times_signs(mixing, signs);
                x.mode_multiply(&fd, mode)?.select_mode(mode, sample_rows, *scale)
            }
            Operator::Gaussian { matrix } => x.mode_multiply(matrix, mode),
        }
    }
}

fn mixing_times_signs(f: &Matrix, signs: &[f64]) -> Matrix {
    Matrix::from_fn(f.rows(), f.cols(), |i, j| f.get(i, j) * signs[j])
}

impl LinearEmbedding for ModewiseEmbedding {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn output_dim(&self) -> usize {
        self.m
    }

    fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if m.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "embedding of dimension {} applied to a matrix with {} rows",
                self.n,
                m.rows()
            )));
        }
        match &self.op {
            Operator::Srft {
                sample_rows,
                signs,
                scale,
                mixing,
                ..
            } => {
                let mixed = mixing.matmul(&m.scale_rows(signs))?;
                Ok(mixed.select_rows(sample_rows).scaled(*scale))
            }
            Operator::Gaussian { matrix } => matrix.matmul(m),
        }
    }
}

/// `make_embedding(kind, n, m, seed)`.
pub fn make_embedding(kind: EmbeddingKind, n: usize, m: usize, seed: u64) -> Result<ModewiseEmbedding> {
    ModewiseEmbedding::new(kind, n, m, seed)
}

/// Orthogonal `F_j D_j` for one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMix {
    mixing: Matrix,
    signs: Vec<f64>,
    combined: Matrix,
}

impl ModeMix {
    /// `mixing` must be orthogonal and `signs` entries `±1`.
    pub fn new(mixing: Matrix, signs: Vec<f64>) -> Result<Self> {
        if mixing.rows() != mixing.cols() || mixing.cols() != signs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} mixer with {} signs",
                mixing.rows(),
                mixing.cols(),
                signs.len()
            )));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidConfig("sign entries must be +1 or -1".into()));
        }
        let defect = mixing.orthonormality_defect();
        if defect > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "mixing matrix is not orthogonal (defect {defect:e})"
            )));
        }
        let combined = mixing_times_signs(&mixing, &signs);
        Ok(Self {
            mixing,
            signs,
            combined,
        })
    }

    pub fn mixing(&self) -> &Matrix {
        &self.mixing
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    /// `F D`.
    pub fn combined(&self) -> &Matrix {
        &self.combined
    }
}

/// Per-mode mixing operators; modes without an entry are left unmixed.
#[derive(Clone, Debug, PartialEq)]
pub struct MixOperators {
    modes: Vec<Option<ModeMix>>,
}

impl MixOperators {
    /// DCT-II mixers with fresh Rademacher signs on `compress_modes`.
    pub fn generate(dims: &[usize], compress_modes: &[usize], seed: u64) -> Result<Self> {
        let mut modes = vec![None; dims.len()];
        for &j in compress_modes {
            if j >= dims.len() {
                return Err(Error::ModeOutOfRange {
                    mode: j,
                    order: dims.len(),
                });
            }
            let signs = rademacher_signs(dims[j], &mut stream_rng(seed, Stream::Signs { mode: j }));
            modes[j] = Some(ModeMix::new(Mixer::Dct2.matrix(dims[j]), signs)?);
        }
        Ok(Self { modes })
    }

    pub fn from_modes(modes: Vec<Option<ModeMix>>) -> Self {
        Self { modes }
    }

    pub fn mode(&self, j: usize) -> Option<&ModeMix> {
        self.modes.get(j).and_then(Option::as_ref)
    }

    pub fn order(&self) -> usize {
        self.modes.len()
    }

    /// `X ×_j (F_j D_j)` over every mixed mode.
    pub fn mix(&self, x: &DenseTensor) -> Result<DenseTensor> {
        if x.order() != self.modes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} mixers for an order-{} tensor",
                self.modes.len(),
                x.order()
            )));
        }
        let maps: Vec<Option<&Matrix>> = self.modes.iter().map(|m| m.as_ref().map(ModeMix::combined)).collect();
        x.multi_mode_multiply(&maps)
    }

    /// `F_j D_j Γ`, the factor seen in mixed coordinates.
    pub fn mix_factor(&self, gamma: &Matrix, j: usize) -> Result<Matrix> {
        match self.mode(j) {
            Some(mm) => mm.combined.matmul(gamma),
            None => Ok(gamma.clone()),
        }
    }

    /// `D_j F_j^T Γ`, mapping a factor back to the original coordinates.
    pub fn unmix_factor(&self, gamma: &Matrix, j: usize) -> Result<Matrix> {
        match self.mode(j) {
            Some(mm) => Ok(mm.mixing.t_matmul(gamma)?.scale_rows(&mm.signs)),
            None => Ok(gamma.clone()),
        }
    }
}

/// Realised distortions of one map on a finite set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JlReport {
    /// `ε_x = ‖Ax‖²/‖x‖² − 1` (zero for `x = 0`).
    pub distortions: Vec<f64>,
    pub passed: Vec<bool>,
    pub all_passed: bool,
}

/// Checks whether `e` is an `eps`-JL embedding of `set`: `|ε_x| < eps` for
/// every vector. Zero vectors pass vacuously.
pub fn is_eps_jl<E: LinearEmbedding + ?Sized>(e: &E, set: &[Vec<f64>], eps: f64) -> Result<JlReport> {
    let n = e.input_dim();
    if let Some(bad) = set.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for an embedding of dimension {n}",
            bad.len()
        )));
    }
    if set.is_empty() {
        return Ok(JlReport {
            distortions: vec![],
            passed: vec![],
            all_passed: true,
        });
    }
    let stacked = Matrix::from_col_major(n, set.len(), set.concat())?;
    let mapped = e.apply(&stacked)?;
    let mut distortions = Vec::with_capacity(set.len());
    let mut passed = Vec::with_capacity(set.len());
    for (c, x) in set.iter().enumerate() {
        let before: f64 = x.iter().map(|v| v * v).sum();
        let d = if before == 0.0 {
            0.0
        } else {
            mapped.column(c).iter().map(|v| v * v).sum::<f64>() / before - 1.0
        };
        distortions.push(d);
        passed.push(d.abs() < eps);
    }
    let all_passed = passed.iter().all(|&p| p);
    Ok(JlReport {
        distortions,
        passed,
        all_passed,
    })
}

/// Source of the finite sets used by [`jl_failure_rate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum VectorSet {
    /// `count` fresh uniformly random unit vectors per trial.
    RandomUnit { count: usize },
    /// The same vectors in every trial.
    Fixed(Vec<Vec<f64>>),
}

impl VectorSet {
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        match self {
            VectorSet::RandomUnit { count } => (0..*count).map(|_| random_unit_vector(n, rng)).collect(),
            VectorSet::Fixed(v) => v.clone(),
        }
    }
}

pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 0.0 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Fraction of `trials` independent draws from the family that fail to be
/// an `eps`-JL embedding of the set (at least one vector outside the band).
pub fn jl_failure_rate(
    kind: EmbeddingKind,
    n: usize,
    m: usize,
    set: &VectorSet,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let mut failures = 0usize;
    for t in 0..trials {
        let trial_seed = derive_seed(seed, Stream::Trial { index: t });
        let mut rng = stream_rng(trial_seed, Stream::Synth);
        let vectors = set.draw(n, &mut rng);
        let e = ModewiseEmbedding::new(kind, n, m, trial_seed)?;
        if !is_eps_jl(&e, &vectors, eps)?.all_passed {
            failures += 1;
        }
    }
    Ok(failures as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_is_orthogonal() {
        for n in [1, 2, 7, 16] {
            assert!(dct2_matrix(n).orthonormality_defect() < 1e-12);
        }
    }

    #[test]
    fn full_sampling_srft_preserves_norms() {
        let e = make_embedding(EmbeddingKind::Srft, 8, 8, 11).unwrap();
        assert_eq!(e.scale(), 1.0);
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).cos()).collect();
        let y = e.apply_vector(&x).unwrap();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let ny: f64 = y.iter().map(|v| v * v).sum();
        assert!((nx - ny).abs() < 1e-12 * nx);
    }

    #[test]
    fn full_sampling_on_identity_gives_scaled_rows() {
        let e = make_embedding(EmbeddingKind::Srft, 6, 6, 3).unwrap();
        let out = e.apply(&Matrix::identity(6)).unwrap();
        let f = dct2_matrix(6);
        let signs = e.signs().unwrap();
        let rows = e.sample_rows().unwrap();
        let expected = Matrix::from_fn(6, 6, |i, j| f.get(rows[i], j) * signs[j]);
        assert!(out.sub(&expected).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn construction_is_deterministic_and_validated() {
        for kind in [EmbeddingKind::Srft, EmbeddingKind::Gaussian] {
            let a = make_embedding(kind, 20, 5, 42).unwrap();
            let b = make_embedding(kind, 20, 5, 42).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, make_embedding(kind, 20, 5, 43).unwrap());
        }
        assert!(make_embedding(EmbeddingKind::Srft, 4, 5, 0).is_err());
        assert!(make_embedding(EmbeddingKind::Gaussian, 4, 5, 0).is_ok());
        assert!(make_embedding(EmbeddingKind::Gaussian, 4, 0, 0).is_err());
    }

    #[test]
    fn srft_invariants() {
        let e = make_embedding(EmbeddingKind::Srft, 50, 17, 9).unwrap();
        let rows = e.sample_rows().unwrap();
        assert_eq!(rows.len(), 17);
        assert!(rows.windows(2).all(|w| w[0] < w[1]));
        assert!(e.signs().unwrap().iter().all(|&s| s == 1.0 || s == -1.0));
    }

    #[test]
    fn zero_input_and_zero_vector() {
        let e = make_embedding(EmbeddingKind::Gaussian, 5, 3, 1).unwrap();
        assert_eq!(e.apply(&Matrix::zeros(5, 2)).unwrap(), Matrix::zeros(3, 2));
        let rep = is_eps_jl(&e, &[vec![0.0; 5]], 0.1).unwrap();
        assert!(rep.all_passed);
        assert_eq!(rep.distortions, vec![0.0]);
    }

    #[test]
    fn orthogonal_map_has_zero_distortion() {
        let e = make_embedding(EmbeddingKind::Srft, 16, 16, 2).unwrap();
        let mut rng = stream_rng(0, Stream::Synth);
        let set = VectorSet::RandomUnit { count: 5 }.draw(16, &mut rng);
        let rep = is_eps_jl(&e, &set, 1e-9).unwrap();
        assert!(rep.all_passed);
        assert!(rep.distortions.iter().all(|d| d.abs() < 1e-12));
        let rate = jl_failure_rate(EmbeddingKind::Srft, 32, 32, &VectorSet::RandomUnit { count: 4 }, 1e-9, 20, 1)
            .unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn mixing_round_trip() {
        let mix = MixOperators::generate(&[5, 4, 3], &[0, 2], 8).unwrap();
        assert!(mix.mode(1).is_none());
        let g = Matrix::from_fn(5, 2, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
        let back = mix.unmix_factor(&mix.mix_factor(&g, 0).unwrap(), 0).unwrap();
        assert!(back.sub(&g).unwrap().max_abs() < 1e-12);
        assert_eq!(mix.unmix_factor(&g.leading_columns(1), 1).unwrap(), g.leading_columns(1));
    }
}
