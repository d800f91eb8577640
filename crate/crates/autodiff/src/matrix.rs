use crate::scalar::{lit, Scalar};
use crate::{AutodiffError, Result};

/// Dense row-major matrix. Public constructors reject NaN/Inf entries;
/// arithmetic assumes shapes were validated by the caller (the tape does so)
/// and panics with a dimension report otherwise.
#[derive(Clone, PartialEq)]
pub struct Matrix<F: Scalar = f64> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> std::fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Matrix {}x{} {:?}", self.rows, self.cols, &self.data)
    }
}

impl<F: Scalar> Default for Matrix<F> {
    fn default() -> Self {
        Self::raw(0, 0, Vec::new())
    }
}

impl<F: Scalar> Matrix<F> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(AutodiffError::BadLength { rows, cols, len: data.len() });
        }
        for (index, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(AutodiffError::NonFinite {
                    index,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Internal constructor for op results; skips the finite check.
    pub(crate) fn raw(rows: usize, cols: usize, data: Vec<F>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::raw(rows, cols, vec![F::zero(); rows * cols])
    }

    pub fn filled(rows: usize, cols: usize, value: F) -> Self {
        Self::raw(rows, cols, vec![value; rows * cols])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::raw(rows, cols, data)
    }

    /// 1xN row vector from a slice of f64 literals (test and setup helper).
    pub fn row_from_f64(values: &[f64]) -> Self {
        Self::raw(1, values.len(), values.iter().map(|&v| lit(v)).collect())
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self::raw(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(F, F) -> F) -> Self {
        assert_eq!(
            self.shape(),
            other.shape(),
            "zip_map shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::raw(self.rows, self.cols, data)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul_elem(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: F) -> Self {
        self.map(|v| v * c)
    }

    /// a*x + b applied elementwise.
    pub fn affine(&self, a: F, b: F) -> Self {
        self.map(|v| a * v + b)
    }

    /// Adds a 1xC bias row to every row.
    pub fn add_bias(&self, bias: &Self) -> Self {
        assert!(
            bias.rows == 1 && bias.cols == self.cols,
            "add_bias expects 1x{} bias, got {}x{}",
            self.cols,
            bias.rows,
            bias.cols
        );
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * self.cols + j] += bias.data[j];
            }
        }
        out
    }

    /// Scales row i by col[i, 0].
    pub fn row_scale(&self, col: &Self) -> Self {
        assert!(
            col.rows == self.rows && col.cols == 1,
            "row_scale expects {}x1 column, got {}x{}",
            self.rows,
            col.rows,
            col.cols
        );
        let mut out = self.clone();
        for i in 0..self.rows {
            let s = col.data[i];
            for j in 0..self.cols {
                out.data[i * self.cols + j] *= s;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = vec![F::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            let a_row = &self.data[i * self.cols..(i + 1) * self.cols];
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == F::zero() {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a * b;
                }
            }
        }
        Self::raw(self.rows, other.cols, out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![F::zero(); self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self::raw(self.cols, self.rows, out)
    }

    pub fn sum(&self) -> F {
        self.data.iter().fold(F::zero(), |acc, &v| acc + v)
    }

    pub fn mean(&self) -> F {
        self.sum() / lit(self.data.len() as f64)
    }

    /// Column sums as a 1xC row.
    pub fn sum_rows(&self) -> Self {
        let mut out = vec![F::zero(); self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j] += self.data[i * self.cols + j];
            }
        }
        Self::raw(1, self.cols, out)
    }

    /// Row sums as an Rx1 column.
    pub fn sum_cols(&self) -> Self {
        let mut out = vec![F::zero(); self.rows];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[i] += self.data[i * self.cols + j];
            }
        }
        Self::raw(self.rows, 1, out)
    }

    pub fn frobenius_norm(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    pub fn concat_cols(&self, other: &Self) -> Self {
        assert_eq!(
            self.rows, other.rows,
            "concat_cols row mismatch: {}x{} vs {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Self::raw(self.rows, cols, data)
    }

    pub fn slice_cols(&self, start: usize, end: usize) -> Self {
        assert!(
            start < end && end <= self.cols,
            "slice_cols {}..{} out of bounds for width {}",
            start,
            end,
            self.cols
        );
        let cols = end - start;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[start..end]);
        }
        Self::raw(self.rows, cols, data)
    }

    /// Gathers the given rows into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::raw(indices.len(), self.cols, data)
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix::raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .map(|v| v.to_f64().expect("scalar convertible to f64"))
                .collect(),
        )
    }

    pub fn from_f64(src: &Matrix<f64>) -> Self {
        Self::raw(
            src.rows,
            src.cols,
            src.data.iter().map(|&v| lit(v)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_non_finite() {
        let err = Matrix::<f64>::from_vec(1, 2, vec![1.0, f64::NAN]);
        assert!(err.is_err());
        let err = Matrix::<f64>::from_vec(1, 2, vec![f64::INFINITY, 0.0]);
        assert!(err.is_err());
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Matrix::<f64>::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn matmul_transpose_roundtrip() {
        let a = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Matrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c.shape(), (2, 2));
        assert_eq!(c.get(0, 0), 58.0);
        assert_eq!(c.get(1, 1), 154.0);
        let ct = c.transpose().transpose();
        assert_eq!(ct, c);
    }

    #[test]
    fn slice_concat_inverse() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 1, vec![5.0, 6.0]).unwrap();
        let c = a.concat_cols(&b);
        assert_eq!(c.slice_cols(0, 2), a);
        assert_eq!(c.slice_cols(2, 3), b);
    }
}
