//! Dense matrices and the symmetric factorization used by the solvers.
//!
//! Problem sizes here are small (tens to a few hundred rows), so everything
//! is plain row-major storage and textbook O(n^3) factorization.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

/// Row-major dense matrix of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// y += A x
    pub fn matvec_add(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] += acc;
        }
    }

    /// x' A x
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(self.rows, self.cols);
        assert_eq!(x.len(), self.rows);
        let mut total = 0.0;
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            total += x[i] * acc;
        }
        total
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Square submatrix on the given (sorted or unsorted) index set.
    pub fn submatrix(&self, idx: &[usize]) -> Mat {
        let n = idx.len();
        let mut out = Mat::zeros(n, n);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }
}

/// Failure of the symmetric factorization even after jitter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularMatrix;

impl core::fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "matrix is singular to working precision")
    }
}

impl core::error::Error for SingularMatrix {}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Mat,
    /// Diagonal boost that was needed, 0 when the plain factorization held.
    pub jitter: f64,
}

impl Cholesky {
    /// Factor `a`, retrying once with diagonal jitter 1e-10 when a pivot
    /// collapses (restricted covariance blocks are often rank-deficient
    /// when tasks have fewer observations than variables).
    pub fn factor(a: &Mat) -> Result<Cholesky, SingularMatrix> {
        match Self::try_plain(a, 0.0) {
            Some(l) => Ok(Cholesky { l, jitter: 0.0 }),
            None => {
                let jitter = 1e-10;
                match Self::try_plain(a, jitter) {
                    Some(l) => Ok(Cholesky { l, jitter }),
                    None => Err(SingularMatrix),
                }
            }
        }
    }

    /// Factor without any jitter fallback (used where positive definiteness
    /// is an invariant, e.g. simulated concentration matrices).
    pub fn factor_strict(a: &Mat) -> Result<Cholesky, SingularMatrix> {
        Self::try_plain(a, 0.0)
            .map(|l| Cholesky { l, jitter: 0.0 })
            .ok_or(SingularMatrix)
    }

    fn try_plain(a: &Mat, jitter: f64) -> Option<Mat> {
        let n = a.rows();
        assert_eq!(n, a.cols());
        let mut scale: f64 = 0.0;
        for i in 0..n {
            scale = scale.max(a.get(i, i).abs());
        }
        let floor = 1e-14 * scale.max(1e-300);
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = a.get(j, j) + jitter;
            for k in 0..j {
                let v = l.get(j, k);
                d -= v * v;
            }
            if !(d > floor) {
                return None;
            }
            let dj = sqrt(d);
            l.set(j, j, dj);
            for i in (j + 1)..n {
                let mut v = a.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, v / dj);
            }
        }
        Some(l)
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                v -= self.l.get(i, k) * x[k];
            }
            x[i] = v / self.l.get(i, i);
        }
        // backward: L' x = y
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in (i + 1)..n {
                v -= self.l.get(k, i) * x[k];
            }
            x[i] = v / self.l.get(i, i);
        }
        x
    }

    /// Solve L' x = b only (used to draw N(0, A^-1) vectors from standard
    /// normals b: cov(x) = L^-T L^-1 = A^-1).
    pub fn solve_lt(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in (i + 1)..n {
                v -= self.l.get(k, i) * x[k];
            }
            x[i] = v / self.l.get(i, i);
        }
        x
    }
}
