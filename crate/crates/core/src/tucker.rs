//! Tucker decompositions `[Λ | Γ_1, …, Γ_q]`, reconstruction, modewise
//! coherence and the single-mode transformation identities.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random_orthonormal;
use crate::matrix::Matrix;
use crate::tensor::DenseTensor;

/// Tolerance on `Γ^T Γ = I` for decompositions flagged orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Columns of `B Γ_j` shorter than this make [`TuckerDecomposition::apply_mode_map`] fail.
pub const SINGULAR_COLUMN_NORM: f64 = 1e-14;

/// A core tensor of shape `(R_1, …, R_q)` and factor matrices `Γ_j` of
/// shape `n_j x R_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerDecomposition {
    core: DenseTensor,
    factors: Vec<Matrix>,
    orthogonal: bool,
}

/// Per-mode and overall coherence of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub per_mode: Vec<f64>,
    pub overall: f64,
}

impl TuckerDecomposition {
    /// Validates shapes and rank bounds. The orthogonal flag starts cleared.
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if core.order() != factors.len() {
            return Err(Error::DimensionMismatch(format!(
                "order-{} core with {} factor matrices",
                core.order(),
                factors.len()
            )));
        }
        for (j, (f, &r)) in factors.iter().zip(core.shape()).enumerate() {
            if f.cols() != r {
                return Err(Error::DimensionMismatch(format!(
                    "factor {j} has {} columns but the core has {r} entries along mode {j}",
                    f.cols()
                )));
            }
            if r > f.rows() {
                return Err(Error::RankExceedsDimension {
                    mode: j,
                    rank: r,
                    dim: f.rows(),
                });
            }
        }
        Ok(Self {
            core,
            factors,
            orthogonal: false,
        })
    }

    /// Like [`TuckerDecomposition::new`], additionally checking that every
    /// factor has orthonormal columns and setting the orthogonal flag.
    pub fn new_orthogonal(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        let mut t = Self::new(core, factors)?;
        for (j, f) in t.factors.iter().enumerate() {
            let defect = f.orthonormality_defect();
            if defect > ORTHOGONALITY_TOL {
                return Err(Error::InvalidConfig(format!(
                    "factor {j} deviates from orthonormality by {defect:e}"
                )));
            }
        }
        t.orthogonal = true;
        Ok(t)
    }

    /// Random orthogonal decomposition: Haar factors and an i.i.d.
    /// standard-normal core.
    pub fn random_orthogonal<R: Rng + ?Sized>(
        dims: &[usize],
        ranks: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() != ranks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} dims vs {} ranks",
                dims.len(),
                ranks.len()
            )));
        }
        for (j, (&n, &r)) in dims.iter().zip(ranks).enumerate() {
            if r > n {
                return Err(Error::RankExceedsDimension { mode: j, rank: r, dim: n });
            }
        }
        let factors = dims
            .iter()
            .zip(ranks)
            .map(|(&n, &r)| random_orthonormal(n, r, rng))
            .collect::<Result<Vec<_>>>()?;
        let core = DenseTensor::from_fn(ranks.to_vec(), |_| rng.sample(StandardNormal))?;
        Self::new_orthogonal(core, factors)
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &Matrix {
        &self.factors[mode]
    }

    pub fn into_parts(self) -> (DenseTensor, Vec<Matrix>) {
        (self.core, self.factors)
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.shape()
    }

    /// Shape `(n_1, …, n_q)` of the represented tensor.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// `Λ ×_1 Γ_1 ⋯ ×_q Γ_q`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let maps: Vec<Option<&Matrix>> = self.factors.iter().map(Some).collect();
        self.core.multi_mode_multiply(&maps)
    }

    /// Largest normalised absolute inner product between distinct columns
    /// of `Γ_mode`; zero when the factor has a single column.
    pub fn mode_coherence(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        column_coherence(&self.factors[mode]).map_err(|column| Error::ZeroColumn { mode, column })
    }

    pub fn coherence(&self) -> Result<CoherenceReport> {
        let per_mode = (0..self.order())
            .map(|j| self.mode_coherence(j))
            .collect::<Result<Vec<_>>>()?;
        let overall = per_mode.iter().cloned().fold(0.0, f64::max);
        Ok(CoherenceReport { per_mode, overall })
    }

    /// Rewrites `reconstruct(self) ×_mode b` in Tucker form with unit-norm
    /// columns in the new `mode` factor: column `r` becomes
    /// `B Γ_r / ‖B Γ_r‖` and core entries are scaled by `‖B Γ_{r_mode}‖`.
    /// Other factors are untouched; the orthogonal flag is cleared.
    pub fn apply_mode_map(&self, b: &Matrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let mapped = b.matmul(&self.factors[mode])?;
        let mut norms = Vec::with_capacity(mapped.cols());
        let mut factor = mapped;
        for r in 0..factor.cols() {
            let col = factor.column_mut(r);
            let nrm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(nrm >= SINGULAR_COLUMN_NORM) {
                return Err(Error::SingularMap { column: r, norm: nrm });
            }
            col.iter_mut().for_each(|v| *v /= nrm);
            norms.push(nrm);
        }
        let core = self.core.mode_multiply(&Matrix::diag(&norms), mode)?;
        let mut factors = self.factors.clone();
        factors[mode] = factor;
        let mut out = Self::new(core, factors)?;
        out.orthogonal = false;
        Ok(out)
    }

    /// `Ψ_mode = Λ_(mode) (⊗_{k≠mode} Γ_k)^T`, the `R_mode x N_mode`
    /// matrix with `Y_(mode) = Γ_mode Ψ_mode`. Can be large; it is only
    /// materialised on request.
    pub fn psi(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        let maps: Vec<Option<&Matrix>> = self
            .factors
            .iter()
            .enumerate()
            .map(|(k, f)| (k != mode).then_some(f))
            .collect();
        self.core.multi_mode_multiply(&maps)?.matricize(mode)
    }

    /// `Ψ_mode Ψ_mode^T`.
    pub fn psi_gram(&self, mode: usize) -> Result<Matrix> {
        let psi = self.psi(mode)?;
        psi.matmul_t(&psi)
    }

    /// `‖reconstruct(self) ×_mode b‖²` evaluated as
    /// `Σ_{r,s} (Ψ Ψ^T)_{r,s} ⟨B Γ_r, B Γ_s⟩`.
    pub fn norm_via_gram(&self, b: &Matrix, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let bg = b.matmul(&self.factors[mode])?;
        let inner = bg.t_matmul(&bg)?;
        let pp = self.psi_gram(mode)?;
        Ok(pp
            .as_slice()
            .iter()
            .zip(inner.as_slice())
            .map(|(a, b)| a * b)
            .sum())
    }
}

/// Column coherence of a matrix; `Err(column)` names a zero column.
pub(crate) fn column_coherence(m: &Matrix) -> std::result::Result<f64, usize> {
    let norms: Vec<f64> = (0..m.cols())
        .map(|r| m.column(r).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if let Some(column) = norms.iter().position(|&n| n == 0.0) {
        return Err(column);
    }
    let mut worst: f64 = 0.0;
    for r in 0..m.cols() {
        for s in r + 1..m.cols() {
            let dot: f64 = m.column(r).iter().zip(m.column(s)).map(|(a, b)| a * b).sum();
            worst = worst.max(dot.abs() / (norms[r] * norms[s]));
        }
    }
    Ok(worst.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn single_term_reconstruction_is_outer_product() {
        let g1 = Matrix::from_col_major(2, 1, vec![0.6, 0.8]).unwrap();
        let g2 = Matrix::from_col_major(3, 1, vec![0.0, 1.0, 0.0]).unwrap();
        let core = DenseTensor::new(vec![1, 1], vec![2.5]).unwrap();
        let t = TuckerDecomposition::new_orthogonal(core, vec![g1.clone(), g2.clone()]).unwrap();
        let y = t.reconstruct().unwrap();
        let expected = g1.matmul_t(&g2).unwrap().scaled(2.5);
        assert_eq!(y.data(), expected.as_slice());
    }

    #[test]
    fn identity_factors_return_core() {
        let x = DenseTensor::from_fn(vec![2, 3, 2], |i| (i[0] * 7 + i[1] * 3 + i[2]) as f64).unwrap();
        let t = TuckerDecomposition::new(
            x.clone(),
            vec![Matrix::identity(2), Matrix::identity(3), Matrix::identity(2)],
        )
        .unwrap();
        assert_eq!(t.reconstruct().unwrap(), x);
    }

    #[test]
    fn rank_validation() {
        let core = DenseTensor::zeros(vec![3, 1]).unwrap();
        let err = TuckerDecomposition::new(core, vec![Matrix::zeros(2, 3), Matrix::zeros(2, 1)]);
        assert!(matches!(err, Err(Error::RankExceedsDimension { mode: 0, rank: 3, dim: 2 })));
        let core = DenseTensor::zeros(vec![2, 1]).unwrap();
        assert!(TuckerDecomposition::new(core, vec![Matrix::zeros(4, 2)]).is_err());
    }

    #[test]
    fn coherence_cases() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let skew = Matrix::from_rows(&[vec![1.0, h], vec![0.0, h]]).unwrap();
        let core = DenseTensor::zeros(vec![2, 1]).unwrap();
        let single = Matrix::from_col_major(2, 1, vec![1.0, 0.0]).unwrap();
        let t = TuckerDecomposition::new(core, vec![skew, single]).unwrap();
        assert!((t.mode_coherence(0).unwrap() - h).abs() < 1e-15);
        assert_eq!(t.mode_coherence(1).unwrap(), 0.0);
        let rep = t.coherence().unwrap();
        assert_eq!(rep.overall, rep.per_mode[0]);

        let mut rng = stream_rng(1, Stream::Synth);
        let orth = TuckerDecomposition::random_orthogonal(&[6, 5], &[3, 2], &mut rng).unwrap();
        assert!(orth.coherence().unwrap().overall < 1e-12);

        let zero = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let t = TuckerDecomposition::new(DenseTensor::zeros(vec![2]).unwrap(), vec![zero]).unwrap();
        assert!(matches!(t.mode_coherence(0), Err(Error::ZeroColumn { mode: 0, column: 1 })));
    }

    #[test]
    fn identity_and_scaled_identity_maps() {
        let mut rng = stream_rng(2, Stream::Synth);
        let t = TuckerDecomposition::random_orthogonal(&[5, 4, 3], &[2, 2, 2], &mut rng).unwrap();
        let same = t.apply_mode_map(&Matrix::identity(4), 1).unwrap();
        assert!(!same.is_orthogonal());
        assert!(same.core().distance(t.core()).unwrap() < 1e-14);
        let doubled = t.apply_mode_map(&Matrix::identity(4).scaled(2.0), 1).unwrap();
        assert!(doubled.core().distance(&t.core().scaled(2.0)).unwrap() < 1e-13);
        assert!(doubled.factor(1).sub(t.factor(1)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn singular_map_is_rejected() {
        let mut rng = stream_rng(3, Stream::Synth);
        let t = TuckerDecomposition::random_orthogonal(&[4, 4], &[2, 2], &mut rng).unwrap();
        let err = t.apply_mode_map(&Matrix::zeros(3, 4), 0);
        assert!(matches!(err, Err(Error::SingularMap { .. })));
    }

    #[test]
    fn gram_norm_trivial_cases() {
        let mut rng = stream_rng(4, Stream::Synth);
        let t = TuckerDecomposition::random_orthogonal(&[5, 6, 4], &[2, 3, 2], &mut rng).unwrap();
        let id = t.norm_via_gram(&Matrix::identity(6), 1).unwrap();
        assert!((id - t.core().norm_sq()).abs() < 1e-12 * t.core().norm_sq());
        assert_eq!(t.norm_via_gram(&Matrix::zeros(3, 6), 1).unwrap(), 0.0);
    }
}
