//! Dense linear-algebra kernels: GEMM on strided views, thin SVD with a
//! fixed sign convention, polar factors, pseudoinverses and random
//! orthonormal bases.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `C = A * B` with `A` of shape `m x k` and `B` of shape `k x n`.
/// Each operand is given as `(slice, row_stride, col_stride)`; `C` is
/// overwritten.
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: (&[f64], usize, usize),
    b: (&[f64], usize, usize),
    c: (&mut [f64], usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.0.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    debug_assert!(a.0.len() > (m - 1) * a.1 + (k - 1) * a.2);
    debug_assert!(b.0.len() > (k - 1) * b.1 + (n - 1) * b.2);
    debug_assert!(c.0.len() > (m - 1) * c.1 + (n - 1) * c.2);
    // SAFETY: the debug assertions above spell out the bounds every caller
    // maintains: each strided view stays inside its slice.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1 as isize,
            a.2 as isize,
            b.0.as_ptr(),
            b.1 as isize,
            b.2 as isize,
            0.0,
            c.0.as_mut_ptr(),
            c.1 as isize,
            c.2 as isize,
        );
    }
}

/// Thin singular value decomposition `M = U diag(s) V^T` with singular
/// values in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

fn svd_raw(
    m: &Matrix,
    compute_u: bool,
    compute_v: bool,
) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::Linalg("SVD of an empty matrix".into()));
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Linalg("SVD input contains non-finite values".into()));
    }
    nalgebra::SVD::try_new(m.as_nalgebra(), compute_u, compute_v, f64::EPSILON * 5.0, 0)
        .ok_or_else(|| Error::Linalg("SVD failed to converge".into()))
}

/// Thin SVD. Each left singular vector is flipped so that its
/// largest-magnitude entry is positive (ties go to the lowest index), with
/// the matching right singular vector flipped alongside.
pub fn thin_svd(m: &Matrix) -> Result<Svd> {
    let svd = svd_raw(m, true, true)?;
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let mut u = Matrix::from_nalgebra(u);
    let mut vt = Matrix::from_nalgebra(vt);
    let s = svd.singular_values.as_slice().to_vec();
    for col in 0..u.cols() {
        if needs_flip(u.column(col)) {
            u.column_mut(col).iter_mut().for_each(|v| *v = -*v);
            for j in 0..vt.cols() {
                vt.set(col, j, -vt.get(col, j));
            }
        }
    }
    Ok(Svd { u, s, vt })
}

fn needs_flip(column: &[f64]) -> bool {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for v in column {
        if v.abs() > best {
            best = v.abs();
            sign = v.signum();
        }
    }
    sign < 0.0
}

/// The leading `r` left singular vectors of `m`, sign-normalised as in
/// [`thin_svd`].
pub fn leading_left_singular_vectors(m: &Matrix, r: usize) -> Result<Matrix> {
    if r > m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "requested {r} singular vectors of a matrix with {} rows",
            m.rows()
        )));
    }
    // Work on whichever orientation has the smaller Gram side; nalgebra's
    // bidiagonalisation is cheapest when the matrix is tall.
    let u = if m.rows() <= m.cols() {
        let svd = svd_raw(&m.transpose(), false, true)?;
        let vt = svd.v_t.expect("requested V^T");
        Matrix::from_nalgebra(&vt.transpose())
    } else {
        let svd = svd_raw(m, true, false)?;
        Matrix::from_nalgebra(svd.u.as_ref().expect("requested U"))
    };
    let mut lead = u.leading_columns(r);
    for col in 0..lead.cols() {
        if needs_flip(lead.column(col)) {
            lead.column_mut(col).iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(lead)
}

/// Orthonormal polar factor `U V^T` of a tall matrix: the solution of the
/// orthogonal Procrustes problem `max tr(G^T Q)` over `Q^T Q = I`.
pub fn polar_factor(g: &Matrix) -> Result<Matrix> {
    if g.rows() < g.cols() {
        return Err(Error::DimensionMismatch(format!(
            "polar factor needs a tall matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    let svd = thin_svd(g)?;
    svd.u.matmul(&svd.vt)
}

/// Moore–Penrose pseudoinverse with relative singular-value cutoff
/// `rcond * s_max`.
pub fn pseudo_inverse(a: &Matrix, rcond: f64) -> Result<Matrix> {
    let svd = thin_svd(a)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let cutoff = rcond * smax;
    let k = svd.s.len();
    // V diag(1/s) U^T, dropping singular values at or below the cutoff.
    let inv: Vec<f64> = svd
        .s
        .iter()
        .map(|&s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    let v_scaled = Matrix::from_fn(svd.vt.cols(), k, |i, j| svd.vt.get(j, i) * inv[j]);
    v_scaled.matmul_t(&svd.u)
}

/// Haar-distributed `n x r` matrix with orthonormal columns (QR of a
/// Gaussian matrix with the sign of `diag(R)` fixed positive).
pub fn random_orthonormal<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<Matrix> {
    if r > n {
        return Err(Error::DimensionMismatch(format!(
            "cannot draw {r} orthonormal columns in dimension {n}"
        )));
    }
    let g = DMatrix::<f64>::from_fn(n, r, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let rmat = qr.r();
    let mut q = Matrix::from_nalgebra(&qr.q());
    for col in 0..r {
        if rmat[(col, col)] < 0.0 {
            q.column_mut(col).iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(q)
}

/// `rows x cols` matrix of i.i.d. standard normal entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Numerical rank: count of singular values above `rtol * s_max`.
pub fn numerical_rank(m: &Matrix, rtol: f64) -> Result<usize> {
    let svd = svd_raw(m, false, false)?;
    let s = svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    Ok(s.iter().filter(|&&v| v > rtol * smax && v > 0.0).count())
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    let eig = nalgebra::SymmetricEigen::new(m.as_nalgebra());
    let mut vals = eig.eigenvalues.as_slice().to_vec();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}
