//! Symmetric banded Toeplitz kernels and the pieces of their inverses the
//! solvers need: diagonal sums, dense inverse, leading blocks.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, toeplitz};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToeplitzPath {
    /// Levinson–Durbin plus the Gohberg–Semencul formula; exact, O(T²).
    #[default]
    Levinson,
    /// Cholesky inverse of the dense T×T matrix; exact, O(T³).
    DenseExact,
    /// Circulant approximation, exact only up to boundary effects.
    CirculantFast,
}

/// Symmetric Toeplitz matrix of dimension `dim` with `k_q` on lag ±q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzKernel {
    values: Vec<f64>,
    dim: usize,
}

impl ToeplitzKernel {
    pub fn new(mut values: Vec<f64>, dim: usize) -> Self {
        values.truncate(dim);
        ToeplitzKernel { values, dim }
    }

    pub fn zeros(dim: usize) -> Self {
        ToeplitzKernel { values: vec![0.0], dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored lags `k_0 … k_Q`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bandwidth(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn get(&self, q: isize) -> f64 {
        self.values.get(q.unsigned_abs()).copied().unwrap_or(0.0)
    }

    pub fn dense(&self) -> Array2<f64> {
        toeplitz(&self.values, self.dim)
    }

    /// `shift·I + scale·K` as a first column.
    pub fn shifted(&self, shift: f64, scale: f64) -> Vec<f64> {
        let mut col: Vec<f64> = self.values.iter().map(|v| scale * v).collect();
        if col.is_empty() {
            col.push(0.0);
        }
        col[0] += shift;
        col
    }
}

/// `(1/T) Σ_i B_{i,i+q}` for a dense square matrix.
pub fn kernel_trace_dense(b: &Array2<f64>, q: isize) -> f64 {
    let t = b.nrows();
    let lag = q.unsigned_abs();
    if lag >= t {
        return 0.0;
    }
    let sum: f64 = if q >= 0 {
        (0..t - lag).map(|i| b[[i, i + lag]]).sum()
    } else {
        (0..t - lag).map(|i| b[[i + lag, i]]).sum()
    };
    sum / t as f64
}

/// `(1/T) tr(J^q K) = k_q (T−|q|)/T`.
pub fn kernel_trace(kernel: &ToeplitzKernel, q: isize) -> f64 {
    let t = kernel.dim();
    let lag = q.unsigned_abs();
    if lag >= t {
        return 0.0;
    }
    kernel.get(q) * (t - lag) as f64 / t as f64
}

/// Inverse of a symmetric positive-definite Toeplitz matrix in
/// Gohberg–Semencul form `A⁻¹ = (L(x)L(x)ᵀ − L(ŷ)L(ŷ)ᵀ)/x₀`, with `x = A⁻¹e₁`
/// and `ŷ = (0, x_{T−1}, …, x_1)`.
#[derive(Clone, Debug)]
pub struct ToeplitzInverse {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ToeplitzInverse {
    /// `col` is the (possibly banded) first column; missing lags are zero.
    pub fn new(col: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "Toeplitz dimension must be positive"));
        }
        let a0 = col.first().copied().unwrap_or(0.0);
        if !(a0 > 0.0) || col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("Toeplitz kernel"));
        }
        let band = col.len().min(dim);
        // normalized lags r_1 … r_{band−1}
        let r: Vec<f64> = col[1..band].iter().map(|v| v / a0).collect();
        let m = dim - 1;
        let rk = |k: usize| if k < r.len() { r[k] } else { 0.0 };

        // Durbin: solve Toep(1, r_1..r_{m−1}) z = −(r_1..r_m)
        let mut z = vec![0.0; m];
        if m > 0 {
            z[0] = -rk(0);
            let mut beta = 1.0;
            let mut alpha = -rk(0);
            let mut scratch = vec![0.0; m];
            for k in 1..m {
                beta *= 1.0 - alpha * alpha;
                if !(beta > 0.0) {
                    return Err(Error::NotPositiveDefinite("Toeplitz kernel"));
                }
                // Σ_{i<k} r_{k−1−i} z_i, only lags inside the band contribute
                let lo = k.saturating_sub(r.len());
                let acc: f64 = (lo..k).map(|i| rk(k - 1 - i) * z[i]).sum();
                alpha = -(rk(k) + acc) / beta;
                for i in 0..k {
                    scratch[i] = z[i] + alpha * z[k - 1 - i];
                }
                z[..k].copy_from_slice(&scratch[..k]);
                z[k] = alpha;
            }
            if !(1.0 - alpha * alpha > 0.0) {
                return Err(Error::NotPositiveDefinite("Toeplitz kernel"));
            }
        }
        let denom = 1.0 + (0..m).map(|i| rk(i) * z[i]).sum::<f64>();
        if !(denom > 0.0) {
            return Err(Error::NotPositiveDefinite("Toeplitz kernel"));
        }
        let x0 = 1.0 / denom;
        let mut x = Vec::with_capacity(dim);
        x.push(x0 / a0);
        x.extend(z.iter().map(|v| x0 * v / a0));
        let mut y = vec![0.0; dim];
        for l in 1..dim {
            y[l] = x[dim - l];
        }
        Ok(ToeplitzInverse { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// First column of the inverse.
    pub fn first_column(&self) -> &[f64] {
        &self.x
    }

    /// `Σ_i (A⁻¹)_{i,i+q}` for `q = 0..count`.
    pub fn diagonal_sums(&self, count: usize) -> Vec<f64> {
        let t = self.dim();
        let x0 = self.x[0];
        (0..count)
            .map(|q| {
                if q >= t {
                    return 0.0;
                }
                let mut acc = 0.0;
                for l in 0..t - q {
                    let w = (t - q - l) as f64;
                    acc += w * (self.x[l] * self.x[l + q] - self.y[l] * self.y[l + q]);
                }
                acc / x0
            })
            .collect()
    }

    /// Leading `size × size` block of the inverse.
    pub fn leading_block(&self, size: usize) -> Array2<f64> {
        let size = size.min(self.dim());
        let x0 = self.x[0];
        let mut out = Array2::<f64>::zeros((size, size));
        for j in 0..size {
            out[[0, j]] = self.x[j];
            out[[j, 0]] = self.x[j];
        }
        for i in 1..size {
            for j in i..size {
                let v = out[[i - 1, j - 1]] + (self.x[i] * self.x[j] - self.y[i] * self.y[j]) / x0;
                out[[i, j]] = v;
                out[[j, i]] = v;
            }
        }
        out
    }

    pub fn dense(&self) -> Array2<f64> {
        self.leading_block(self.dim())
    }
}

/// `(1/T) Σ_i [(A)⁻¹]_{i,i+q}` for `q = 0..count`, `A = Toep(col)` of dimension `dim`.
pub fn inverse_lag_traces(col: &[f64], dim: usize, count: usize, path: ToeplitzPath) -> Result<Vec<f64>> {
    let tf = dim as f64;
    let sums = match path {
        ToeplitzPath::Levinson => ToeplitzInverse::new(col, dim)?.diagonal_sums(count),
        ToeplitzPath::DenseExact => {
            let inv = spd_inverse(&toeplitz(col, dim), "Toeplitz kernel")?;
            (0..count).map(|q| kernel_trace_dense(&inv, q as isize) * tf).collect()
        }
        ToeplitzPath::CirculantFast => {
            let band = col.len().min(dim);
            let omega = 2.0 * std::f64::consts::PI / tf;
            let inv_eig: Vec<f64> = (0..dim)
                .map(|j| {
                    let f = col[0]
                        + 2.0 * (1..band).map(|q| col[q] * (omega * (j * q) as f64).cos()).sum::<f64>();
                    if f > 0.0 {
                        Ok(1.0 / f)
                    } else {
                        Err(Error::NotPositiveDefinite("circulant kernel"))
                    }
                })
                .collect::<Result<_>>()?;
            (0..count)
                .map(|q| {
                    if q >= dim {
                        return 0.0;
                    }
                    let c: f64 = inv_eig
                        .iter()
                        .enumerate()
                        .map(|(j, e)| e * (omega * ((j * q) % dim) as f64).cos())
                        .sum::<f64>()
                        / tf;
                    c * (dim - q) as f64
                })
                .collect()
        }
    };
    Ok(sums.into_iter().map(|v| v / tf).collect())
}
