//! Dense real tensors and the multilinear primitives built on them.
//!
//! Data is stored with the first index varying fastest, so the flat data of
//! a tensor is exactly the column-stacked mode-1 unfolding. The mode-`j`
//! unfolding enumerates the complementary indices in increasing mode order
//! with the lowest mode fastest (the Kolda–Bader ordering).
//!
//! Modes are zero-based throughout the library.

use crate::error::{Error, Result};
use crate::linalg::gemm;
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn validate_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("tensor order must be at least 1".into()));
    }
    if let Some(pos) = shape.iter().position(|&n| n == 0) {
        return Err(Error::InvalidShape(format!("mode {pos} has zero length")));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::InvalidShape(format!("{shape:?} overflows usize")))
}

/// `(left, n_mode, right)` where `left` is the product of the dimensions
/// before `mode` and `right` the product of those after it.
#[inline]
fn split_at_mode(shape: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = shape[..mode].iter().product();
    let right = shape[mode + 1..].iter().product();
    (left, shape[mode], right)
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = validate_shape(&shape)?;
        if data.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = validate_shape(&shape)?;
        Ok(Self {
            shape,
            data: vec![0.0; len],
        })
    }

    /// Fills entries from a function of the multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = validate_shape(&shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (k, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < shape[k] {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self { shape, data })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order());
        let mut off = 0;
        let mut stride = 1;
        for (i, n) in index.iter().zip(&self.shape) {
            debug_assert!(i < n);
            off += i * stride;
            stride *= n;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Mode-`mode` unfolding: an `n_mode x prod_{k != mode} n_k` matrix.
    pub fn matricize(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        let (left, n, right) = split_at_mode(&self.shape, mode);
        if left == 1 {
            return Matrix::from_col_major(n, right, self.data.clone());
        }
        let cols = left * right;
        let mut out = vec![0.0; n * cols];
        for r in 0..right {
            for i in 0..n {
                let src = &self.data[left * (i + n * r)..left * (i + n * r + 1)];
                for (l, v) in src.iter().enumerate() {
                    out[i + n * (l + left * r)] = *v;
                }
            }
        }
        Matrix::from_col_major(n, cols, out)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn dematricize(m: &Matrix, mode: usize, shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        if mode >= shape.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: shape.len(),
            });
        }
        let (left, n, right) = split_at_mode(shape, mode);
        if m.rows() != n || m.cols() != left * right {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix cannot be folded along mode {mode} into {shape:?}",
                m.rows(),
                m.cols()
            )));
        }
        let src = m.as_slice();
        let mut data = vec![0.0; n * left * right];
        if left == 1 {
            data.copy_from_slice(src);
        } else {
            for r in 0..right {
                for i in 0..n {
                    let dst = &mut data[left * (i + n * r)..left * (i + n * r + 1)];
                    for (l, v) in dst.iter_mut().enumerate() {
                        *v = src[i + n * (l + left * r)];
                    }
                }
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Mode product `self ×_mode b`, defined by
    /// `(X ×_j B)_(j) = B X_(j)`; requires `b.cols() == n_mode`.
    pub fn mode_multiply(&self, b: &Matrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let (left, n, right) = split_at_mode(&self.shape, mode);
        if b.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied along mode {mode} of length {n}",
                b.rows(),
                b.cols()
            )));
        }
        let m = b.rows();
        let mut shape = self.shape.clone();
        shape[mode] = m;
        let mut data = vec![0.0; left * m * right];
        if left == 1 {
            // Contiguous case: C (m x right) = B (m x n) * X (n x right).
            gemm(
                m,
                n,
                right,
                (b.as_slice(), 1, m),
                (&self.data, 1, n),
                (&mut data, 1, m),
            );
        } else {
            // Each slab r is a left x n matrix; C_r = X_r * B^T.
            for r in 0..right {
                let x_r = &self.data[left * n * r..left * n * (r + 1)];
                let c_r = &mut data[left * m * r..left * m * (r + 1)];
                gemm(left, n, m, (x_r, 1, left), (b.as_slice(), m, 1), (c_r, 1, left));
            }
        }
        Ok(Self { shape, data })
    }

    /// Multiplies along several modes; `None` entries leave a mode alone.
    pub fn multi_mode_multiply(&self, maps: &[Option<&Matrix>]) -> Result<Self> {
        if maps.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} mode maps for an order-{} tensor",
                maps.len(),
                self.order()
            )));
        }
        // Shrinking modes first keeps the intermediates small.
        let mut order: Vec<usize> = (0..maps.len()).filter(|&k| maps[k].is_some()).collect();
        order.sort_by(|&a, &b| {
            let ra = maps[a].map_or(1.0, |m| m.rows() as f64 / m.cols() as f64);
            let rb = maps[b].map_or(1.0, |m| m.rows() as f64 / m.cols() as f64);
            ra.total_cmp(&rb).then(a.cmp(&b))
        });
        let mut out: Option<DenseTensor> = None;
        for k in order {
            let m = maps[k].expect("filtered above");
            let cur = out.as_ref().unwrap_or(self);
            out = Some(cur.mode_multiply(m, k)?);
        }
        Ok(out.unwrap_or_else(|| self.clone()))
    }

    /// Keeps the listed slices along `mode` (in the listed order), each
    /// scaled by `scale`. This is the row-sampling matrix applied implicitly.
    pub fn select_mode(&self, mode: usize, indices: &[usize], scale: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let (left, n, right) = split_at_mode(&self.shape, mode);
        if let Some(bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::DimensionMismatch(format!(
                "index {bad} out of range for mode {mode} of length {n}"
            )));
        }
        let m = indices.len();
        let mut shape = self.shape.clone();
        shape[mode] = m;
        validate_shape(&shape)?;
        let mut data = Vec::with_capacity(left * m * right);
        for r in 0..right {
            for &i in indices {
                let src = &self.data[left * (i + n * r)..left * (i + n * r + 1)];
                data.extend(src.iter().map(|v| v * scale));
            }
        }
        Ok(Self { shape, data })
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn scaled(&self, alpha: f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}
