//! Minimal dense numerics shared by the models: a row-major `f64` matrix,
//! slice-level vector helpers, activations, a shift-stabilized softmax, Adam,
//! a symmetric positive-definite solve, and a central-difference gradient
//! checker. Nothing here allocates behind the caller's back beyond the
//! returned values.

mod adam;
mod gradcheck;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::finite_diff_check;

use crate::{Error, Result};
use rand::Rng;

/// Dense row-major matrix. Row and column counts are fixed at construction;
/// all public ops preserve finiteness of the data they produce.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{}x{} tensor needs {} values, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    /// Entries drawn i.i.d. from `[-limit, limit)`.
    pub fn uniform(rows: usize, cols: usize, limit: f64, rng: &mut impl Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
        Tensor2 { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor2::zeros(n, n);
        for i in 0..n {
            t.set(i, i, 1.0);
        }
        t
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
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matmul(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Tensor2::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let dst = out.row_mut(i);
                let src = rhs.row(k);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// `self += factor * other`, shapes must agree.
    pub fn add_scaled(&mut self, other: &Tensor2, factor: f64) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "add {}x{} to {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += factor * s;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Dot product; lengths must match (panics otherwise, an index bug).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `dst += factor * src`.
#[inline]
pub fn axpy(dst: &mut [f64], src: &[f64], factor: f64) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += factor * s;
    }
}

/// Row vector times matrix: `v (1xR) * m (RxC) -> 1xC`.
pub fn vec_mat(v: &[f64], m: &Tensor2) -> Vec<f64> {
    debug_assert_eq!(v.len(), m.rows());
    let mut out = vec![0.0; m.cols()];
    for (r, &x) in v.iter().enumerate() {
        if x != 0.0 {
            axpy(&mut out, m.row(r), x);
        }
    }
    out
}

/// Row vector times transposed matrix: `v (1xC) * m^T (CxR) -> 1xR`.
pub fn vec_mat_t(v: &[f64], m: &Tensor2) -> Vec<f64> {
    debug_assert_eq!(v.len(), m.cols());
    (0..m.rows()).map(|r| dot(v, m.row(r))).collect()
}

/// Outer-product accumulate: `dst (RxC) += col (R) * row (C)`.
pub fn outer_acc(dst: &mut Tensor2, col: &[f64], row: &[f64]) {
    debug_assert_eq!(col.len(), dst.rows());
    debug_assert_eq!(row.len(), dst.cols());
    for (r, &c) in col.iter().enumerate() {
        if c != 0.0 {
            axpy(dst.row_mut(r), row, c);
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn relu_slice(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| relu(x)).collect()
}

pub fn tanh_slice(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.tanh()).collect()
}

/// Shift-stabilized softmax. Errors on an empty slice and on non-finite
/// inputs; output entries are positive and sum to 1 up to rounding.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::invalid("softmax over an empty slice"));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("softmax over non-finite scores"));
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// Solve `a x = b` for symmetric positive-definite `a` via Cholesky.
/// Errors when the factorization hits a non-positive pivot.
pub fn cholesky_solve(a: &Tensor2, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::shape(format!(
            "cholesky_solve on {}x{} with rhs {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    // Lower-triangular factor, row-major.
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::invalid(format!(
                        "cholesky pivot {} is not positive: {}",
                        i, sum
                    )));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // Forward then back substitution.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Ok(x)
}
