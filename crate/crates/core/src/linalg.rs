//! Dense symmetric positive-definite solves via `L D Lᵀ`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::{Error, Result};

/// Unit lower-triangular `L` and diagonal `D` with `a = L D Lᵀ`.
#[derive(Debug, Clone)]
pub(crate) struct Ldl {
    l: Array2<f64>,
    d: Array1<f64>,
}

impl Ldl {
    /// Fails unless every pivot is positive, i.e. `a` is positive definite.
    pub(crate) fn factor(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::shape("ldl", format!("{}x{} is not square", n, a.ncols())));
        }
        let mut l = Array2::<f64>::eye(n);
        let mut d = Array1::<f64>::zeros(n);
        for j in 0..n {
            let mut dj = a[[j, j]];
            for k in 0..j {
                dj -= l[[j, k]] * l[[j, k]] * d[k];
            }
            if !(dj > 0.0) || !dj.is_finite() {
                return Err(Error::Singular(format!(
                    "matrix is not positive definite (pivot {j} = {dj:e})"
                )));
            }
            d[j] = dj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]] * d[k];
                }
                l[[i, j]] = s / dj;
            }
        }
        Ok(Self { l, d })
    }

    /// Solves `L z = b`.
    fn forward(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let n = self.d.len();
        let mut z = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[[i, k]] * z[k];
            }
            z[i] = s;
        }
        z
    }

    pub(crate) fn solve(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let n = self.d.len();
        let z = self.forward(b);
        let mut x = Array1::<f64>::zeros(n);
        for i in (0..n).rev() {
            let mut s = z[i] / self.d[i];
            for k in (i + 1)..n {
                s -= self.l[[k, i]] * x[k];
            }
            x[i] = s;
        }
        x
    }

    /// `bᵀ a⁻¹ b`.
    pub(crate) fn quadratic_form(&self, b: ArrayView1<f64>) -> f64 {
        let z = self.forward(b);
        z.iter().zip(self.d.iter()).map(|(z, d)| z * z / d).sum()
    }
}

/// Solves `a x = b` for symmetric positive-definite `a`.
pub(crate) fn spd_solve(a: &Array2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::shape(
            "spd_solve",
            format!("rhs length {} vs matrix order {}", b.len(), a.nrows()),
        ));
    }
    Ok(Ldl::factor(a)?.solve(b))
}
