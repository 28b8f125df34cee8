//! Small dense linear algebra for low-dimensional covariance work.
//!
//! Everything here assumes matrices on the order of d ≤ 50: storage is
//! plain row-major `Vec<f64>`, factorizations are unblocked, and there are
//! no sparse paths. Positive-definite systems are solved through an
//! unpivoted Cholesky factorization; an explicit inverse is only formed
//! where a downstream formula genuinely needs the inverse as data (the
//! common-mean weighting), never to solve a single system.

use crate::error::{Error, Result};
use crate::statistics::MultivariateSample;

/// Relative pivot floor for the Cholesky factorization: a pivot at or
/// below `CHOLESKY_PIVOT_RTOL * max_diagonal` fails as singular.
pub const CHOLESKY_PIVOT_RTOL: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from row-major data. Errors if the buffer length does not
    /// factor as rows × cols.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    left: r.len(),
                    right: cols,
                });
            }
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Symmetric matrix intended to be positive definite. Symmetry is checked
/// at construction; definiteness is only established when a factorization
/// succeeds, so rank deficiency surfaces at [`cholesky`] / [`spd_solve`]
/// rather than here.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: Matrix,
}

impl SpdMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                left: m.rows(),
                right: m.cols(),
            });
        }
        let scale = m.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..m.rows() {
            for j in (i + 1)..m.cols() {
                if (m.get(i, j) - m.get(j, i)).abs() > 1e-10 * scale.max(1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(SpdMatrix { m })
    }

    /// Construction path for matrices that are symmetric by build (both
    /// triangles written from the same arithmetic), skipping the check.
    pub(crate) fn from_symmetric(m: Matrix) -> Self {
        debug_assert_eq!(m.rows(), m.cols());
        SpdMatrix { m }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    /// Elementwise sum with another matrix of the same dimension.
    pub fn add(&self, other: &SpdMatrix) -> Result<SpdMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let mut m = self.m.clone();
        for (a, b) in m.data.iter_mut().zip(&other.m.data) {
            *a += *b;
        }
        Ok(SpdMatrix { m })
    }

    /// Multiply every entry by `k` (k > 0 preserves definiteness).
    pub fn scale(&self, k: f64) -> SpdMatrix {
        let mut m = self.m.clone();
        for v in &mut m.data {
            *v *= k;
        }
        SpdMatrix { m }
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        (0..d)
            .map(|i| self.m.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Lower-triangular Cholesky factor L with A = L Lᵀ.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

/// Factor a symmetric matrix, failing with `SingularCovariance` when a
/// pivot falls at or below `CHOLESKY_PIVOT_RTOL` times the largest
/// diagonal entry of the input.
pub fn cholesky(a: &SpdMatrix) -> Result<Cholesky> {
    let d = a.dim();
    let max_diag = (0..d).fold(0.0f64, |acc, i| acc.max(a.get(i, i)));
    let floor = CHOLESKY_PIVOT_RTOL * max_diag;
    let mut l = Matrix::zeros(d, d);
    for j in 0..d {
        let mut pivot = a.get(j, j);
        for k in 0..j {
            pivot -= l.get(j, k) * l.get(j, k);
        }
        if !(pivot > floor) || !pivot.is_finite() {
            return Err(Error::SingularCovariance { row: j, pivot });
        }
        let ljj = pivot.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..d {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(Cholesky { l })
}

impl Cholesky {
    /// Solve A x = b by forward then back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.l.rows();
        debug_assert_eq!(b.len(), d);
        let mut y = b.to_vec();
        for i in 0..d {
            for k in 0..i {
                y[i] -= self.l.get(i, k) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        for i in (0..d).rev() {
            for k in (i + 1)..d {
                y[i] -= self.l.get(k, i) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        y
    }
}

/// Solve A x = b for symmetric positive definite A.
pub fn spd_solve(a: &SpdMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: b.len(),
            right: a.dim(),
        });
    }
    Ok(cholesky(a)?.solve(b))
}

/// Explicit inverse of a symmetric positive definite matrix, formed by
/// solving against the identity columns and symmetrizing the result.
/// Reserved for formulas that use the inverse as data; plain systems
/// should go through [`spd_solve`].
pub fn spd_inverse(a: &SpdMatrix) -> Result<SpdMatrix> {
    let d = a.dim();
    let chol = cholesky(a)?;
    let mut inv = Matrix::zeros(d, d);
    let mut e = vec![0.0; d];
    for j in 0..d {
        e[j] = 1.0;
        let col = chol.solve(&e);
        e[j] = 0.0;
        for i in 0..d {
            inv.set(i, j, col[i]);
        }
    }
    // The exact inverse is symmetric; rounding in the per-column solves is
    // averaged away so callers can rely on the type's invariant.
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
            inv.set(i, j, v);
            inv.set(j, i, v);
        }
    }
    Ok(SpdMatrix::from_symmetric(inv))
}

/// Column means of a sample matrix.
pub fn col_means(m: &MultivariateSample) -> Vec<f64> {
    let x = m.matrix();
    let (n, d) = (x.rows(), x.cols());
    let mut means = vec![0.0; d];
    for i in 0..n {
        for (j, v) in x.row(i).iter().enumerate() {
            means[j] += v;
        }
    }
    for v in &mut means {
        *v /= n as f64;
    }
    means
}

/// Unbiased sample covariance (divisor n−1), computed from centered
/// cross-products. Rank deficiency is not detected here; it surfaces when
/// the result is factored.
pub fn covariance(m: &MultivariateSample) -> SpdMatrix {
    let x = m.matrix();
    let (n, d) = (x.rows(), x.cols());
    let means = col_means(m);
    let mut s = Matrix::zeros(d, d);
    let mut centered = vec![0.0; d];
    for i in 0..n {
        for (j, v) in x.row(i).iter().enumerate() {
            centered[j] = v - means[j];
        }
        for j in 0..d {
            let cj = centered[j];
            for k in j..d {
                let v = s.get(j, k) + cj * centered[k];
                s.set(j, k, v);
            }
        }
    }
    let denom = (n - 1) as f64;
    for j in 0..d {
        for k in j..d {
            let v = s.get(j, k) / denom;
            s.set(j, k, v);
            s.set(k, j, v);
        }
    }
    SpdMatrix::from_symmetric(s)
}

/// Mean vector and unbiased covariance in one pass over the sample.
pub fn means_and_covariance(m: &MultivariateSample) -> (Vec<f64>, SpdMatrix) {
    (col_means(m), covariance(m))
}

/// Shift two samples onto their common weighted mean.
///
/// With A_k = cov(y_k)/n_k, the common mean solves
/// (A1⁻¹ + A2⁻¹) mc = A1⁻¹ ȳ1 + A2⁻¹ ȳ2, and each sample is translated
/// rowwise by (mc − ȳ_k). This leaves every within-sample covariance
/// untouched while aligning both column-mean vectors at mc, which is what
/// bootstrap resampling under the equal-means hypothesis requires. The
/// weighting matrices are the one place an explicit SPD inverse is formed.
pub fn common_mean_center(
    y1: &MultivariateSample,
    y2: &MultivariateSample,
) -> Result<(MultivariateSample, MultivariateSample)> {
    if y1.dim() != y2.dim() {
        return Err(Error::DimensionMismatch {
            left: y1.dim(),
            right: y2.dim(),
        });
    }
    let (n1, n2) = (y1.n(), y2.n());
    let m1 = col_means(y1);
    let m2 = col_means(y2);
    let a1_inv = spd_inverse(&covariance(y1).scale(1.0 / n1 as f64))?;
    let a2_inv = spd_inverse(&covariance(y2).scale(1.0 / n2 as f64))?;
    let mut rhs = a1_inv.mul_vec(&m1);
    for (r, v) in rhs.iter_mut().zip(a2_inv.mul_vec(&m2)) {
        *r += v;
    }
    let mc = spd_solve(&a1_inv.add(&a2_inv)?, &rhs)?;

    let shift = |m: &MultivariateSample, mean: &[f64]| {
        let x = m.matrix();
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                out.set(i, j, x.get(i, j) + (mc[j] - mean[j]));
            }
        }
        MultivariateSample::from_validated(out)
    };
    Ok((shift(y1, &m1), shift(y2, &m2)))
}
