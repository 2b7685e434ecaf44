//! Dense 64-bit matrix kernels used by every other module.
//!
//! Matrices are immutable row-major values with explicit shape checks;
//! there is no broadcasting. Operations on finite inputs produce finite
//! outputs (the score-matrix diagonal sentinel in `attacks` is the one
//! deliberate exception to finiteness, planted outside this module).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumError {
    #[error("{op}: shape mismatch between ({left_rows}x{left_cols}) and ({right_rows}x{right_cols})")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{op}: dimensions {rows}x{cols} do not match {len} values")]
    BadLength {
        op: &'static str,
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("{op}: input must have at least one row")]
    EmptyInput { op: &'static str },
    #[error("class label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, NumError> {
        if values.len() != rows * cols {
            return Err(NumError::BadLength {
                op: "from_vec",
                rows,
                cols,
                len: values.len(),
            });
        }
        Ok(Matrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut values = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(NumError::BadLength {
                    op: "from_rows",
                    rows: r,
                    cols: c,
                    len: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, NumError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, NumError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix, NumError> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    /// In-place `self += other * s`; shapes must match.
    pub fn add_scaled(&mut self, other: &Matrix, s: f64) -> Result<(), NumError> {
        if self.shape() != other.shape() {
            return Err(shape_err("add_scaled", self, other));
        }
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += b * s;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Copy of columns `lo..hi`.
    pub fn col_slice(&self, lo: usize, hi: usize) -> Matrix {
        let mut out = Matrix::zeros(self.rows, hi - lo);
        for i in 0..self.rows {
            for (jo, j) in (lo..hi).enumerate() {
                out.set(i, jo, self.get(i, j));
            }
        }
        out
    }

    /// Horizontal concatenation; all parts must share the row count.
    pub fn hcat(parts: &[&Matrix]) -> Result<Matrix, NumError> {
        let rows = parts.first().map_or(0, |m| m.rows);
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut offset = 0;
        for part in parts {
            if part.rows != rows {
                return Err(shape_err("hcat", parts[0], part));
            }
            for i in 0..rows {
                for j in 0..part.cols {
                    out.set(i, offset + j, part.get(i, j));
                }
            }
            offset += part.cols;
        }
        Ok(out)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix, NumError> {
        if self.shape() != other.shape() {
            return Err(shape_err(op, self, other));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

fn shape_err(op: &'static str, a: &Matrix, b: &Matrix) -> NumError {
    NumError::ShapeMismatch {
        op,
        left_rows: a.rows,
        left_cols: a.cols,
        right_rows: b.rows,
        right_cols: b.cols,
    }
}

/// Standard matrix product.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, NumError> {
    if a.cols != b.rows {
        return Err(shape_err("matmul", a, b));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.get(i, k);
            if aik == 0.0 {
                continue;
            }
            let b_row = b.row(k);
            let out_row = &mut out.values[i * b.cols..(i + 1) * b.cols];
            for (o, &bv) in out_row.iter_mut().zip(b_row.iter()) {
                *o += aik * bv;
            }
        }
    }
    Ok(out)
}

/// Elementwise max(0, x).
pub fn relu(m: &Matrix) -> Matrix {
    m.map(|v| v.max(0.0))
}

/// Column-wise max over rows, plus the argmax row index per column for
/// backward routing. Ties go to the smallest row index.
pub fn row_max_pool(m: &Matrix) -> Result<(Matrix, Vec<usize>), NumError> {
    if m.rows == 0 {
        return Err(NumError::EmptyInput { op: "row_max_pool" });
    }
    let mut pooled = Matrix::zeros(1, m.cols);
    let mut argmax = vec![0usize; m.cols];
    for j in 0..m.cols {
        let mut best = m.get(0, j);
        let mut best_row = 0usize;
        for i in 1..m.rows {
            let v = m.get(i, j);
            if v > best {
                best = v;
                best_row = i;
            }
        }
        pooled.set(0, j, best);
        argmax[j] = best_row;
    }
    Ok((pooled, argmax))
}

/// Cross-entropy loss of a single-row logit matrix against a class index,
/// with the gradient `softmax(logits) - onehot(label)`.
///
/// Softmax uses max-subtraction so any finite logits stay finite.
pub fn softmax_cross_entropy(logits: &Matrix, label: usize) -> Result<(f64, Matrix), NumError> {
    if logits.rows != 1 || logits.cols < 2 {
        return Err(NumError::ShapeMismatch {
            op: "softmax_cross_entropy",
            left_rows: logits.rows,
            left_cols: logits.cols,
            right_rows: 1,
            right_cols: 2,
        });
    }
    let k = logits.cols;
    if label >= k {
        return Err(NumError::LabelOutOfRange { label, classes: k });
    }
    let row = logits.row(0);
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = row.iter().map(|&z| (z - max).exp()).sum();
    let log_sum = max + sum_exp.ln();
    let loss = log_sum - row[label];
    let mut dlogits = Matrix::zeros(1, k);
    for j in 0..k {
        let p = (row[j] - log_sum).exp();
        dlogits.set(0, j, p - if j == label { 1.0 } else { 0.0 });
    }
    Ok((loss, dlogits))
}

/// Softmax probabilities of a single-row matrix.
pub fn softmax_row(logits: &Matrix) -> Matrix {
    let row = logits.row(0);
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = row.iter().map(|&z| (z - max).exp()).sum();
    let log_sum = max + sum_exp.ln();
    Matrix {
        rows: 1,
        cols: logits.cols,
        values: row.iter().map(|&z| (z - log_sum).exp()).collect(),
    }
}
