//! Matrix form of valid convolution and its regularized inverse.
//!
//! With input and output fields unrolled left to right, top to bottom, valid
//! cross-correlation with an `m × n` kernel `ω` over an `M × N` input is a
//! sparse `(M−m+1)(N−n+1) × MN` matrix `C`. Row `k` holds `ω[i][j]` at the
//! flattened positions of the `k`-th window. `Cᵀ` is the transposed
//! convolution of the same kernel.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::linalg::spd_solve;
use crate::{Error, Result};

/// One nonzero of a convolution matrix and the kernel entry it carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvEntry {
    pub row: usize,
    pub col: usize,
    pub kernel_index: (usize, usize),
    pub value: f64,
}

/// Sparse convolution matrix in row-major entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<ConvEntry>,
}

impl ConvMatrix {
    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.rows, self.cols));
        for e in &self.entries {
            a[[e.row, e.col]] = e.value;
        }
        a
    }

    /// Kernel index at each matrix position, `None` for structural zeros.
    pub fn pattern(&self) -> Vec<Vec<Option<(usize, usize)>>> {
        let mut p = vec![vec![None; self.cols]; self.rows];
        for e in &self.entries {
            p[e.row][e.col] = Some(e.kernel_index);
        }
        p
    }

    pub fn matvec(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut y = Array1::zeros(self.rows);
        for e in &self.entries {
            y[e.row] += e.value * x[e.col];
        }
        y
    }

    pub fn transpose_matvec(&self, y: ArrayView1<f64>) -> Array1<f64> {
        let mut x = Array1::zeros(self.cols);
        for e in &self.entries {
            x[e.col] += e.value * y[e.row];
        }
        x
    }
}

pub fn build_conv_matrix(kernel: ArrayView2<f64>, input_shape: (usize, usize)) -> Result<ConvMatrix> {
    let (m, n) = kernel.dim();
    let (rows_in, cols_in) = input_shape;
    if m == 0 || n == 0 || m > rows_in || n > cols_in {
        return Err(Error::shape(
            "build_conv_matrix",
            format!("kernel {m}x{n} over input {rows_in}x{cols_in}"),
        ));
    }
    let (oh, ow) = (rows_in - m + 1, cols_in - n + 1);
    let mut entries = Vec::with_capacity(oh * ow * m * n);
    for oi in 0..oh {
        for oj in 0..ow {
            let row = oi * ow + oj;
            for i in 0..m {
                for j in 0..n {
                    entries.push(ConvEntry {
                        row,
                        col: (oi + i) * cols_in + oj + j,
                        kernel_index: (i, j),
                        value: kernel[[i, j]],
                    });
                }
            }
        }
    }
    Ok(ConvMatrix {
        rows: oh * ow,
        cols: rows_in * cols_in,
        entries,
    })
}

/// Minimizer of `‖Cx − y‖² + λ‖x‖²`, i.e. `x = (CᵀC + λI)⁻¹ Cᵀ y`.
///
/// No nonnegativity constraint is imposed on `x`.
pub fn ridge_deconvolve(c: &Array2<f64>, y: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
    if y.len() != c.nrows() {
        return Err(Error::shape(
            "ridge_deconvolve",
            format!("C has {} rows, y has {} entries", c.nrows(), y.len()),
        ));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Input(format!("lambda {lambda} must be nonnegative")));
    }
    let mut normal = c.t().dot(c);
    for k in 0..normal.nrows() {
        normal[[k, k]] += lambda;
    }
    let rhs = c.t().dot(&y);
    spd_solve(&normal, rhs.view()).map_err(|e| match e {
        Error::Singular(detail) if lambda == 0.0 => Error::Singular(format!(
            "CᵀC is singular without regularization (always so for a wide convolution matrix); use lambda > 0 ({detail})"
        )),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn identity_kernel_gives_identity() {
        let c = build_conv_matrix(array![[1.0]].view(), (2, 2)).unwrap();
        assert_eq!(c.to_dense(), Array2::<f64>::eye(4));
    }

    #[test]
    fn identity_ridge_cases() {
        let c = Array2::<f64>::eye(3);
        let y = array![1.5, -2.0, 0.3];
        assert_eq!(ridge_deconvolve(&c, y.view(), 0.0).unwrap(), y);
        assert_eq!(ridge_deconvolve(&c, y.view(), 1.0).unwrap(), &y / 2.0);
    }

    #[test]
    fn unregularized_wide_matrix_is_singular() {
        let k = Array2::from_elem((3, 3), 1.0);
        let c = build_conv_matrix(k.view(), (4, 4)).unwrap().to_dense();
        let err = ridge_deconvolve(&c, array![1.0, 2.0, 3.0, 4.0].view(), 0.0).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
    }

    #[test]
    fn oversized_kernel() {
        assert!(build_conv_matrix(Array2::zeros((3, 3)).view(), (2, 4)).is_err());
    }
}
