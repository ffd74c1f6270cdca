//! Small dense helpers shared by the simulation and solver layers.

use ndarray::{Array1, Array2, ArrayView2, Axis, OwnedRepr};
use ndarray_linalg::cholesky::CholeskyFactorized;
use ndarray_linalg::{c64, FactorizeC, InverseC, SolveC, UPLO};

use crate::error::{Error, Result};

/// Cholesky factorization of a symmetric positive-definite matrix.
pub(crate) struct Spd {
    factor: CholeskyFactorized<OwnedRepr<f64>>,
}

impl Spd {
    pub fn new(a: &Array2<f64>, context: &'static str) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite(context));
        }
        let factor = a
            .factorizec(UPLO::Lower)
            .map_err(|_| Error::NotPositiveDefinite(context))?;
        Ok(Spd { factor })
    }

    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        self.factor
            .solvec(b)
            .expect("triangular solve after a successful factorization")
    }

    pub fn inverse(&self) -> Array2<f64> {
        let mut inv = self
            .factor
            .invc()
            .expect("inverse after a successful factorization");
        symmetrize(&mut inv);
        inv
    }
}

pub(crate) fn spd_inverse(a: &Array2<f64>, context: &'static str) -> Result<Array2<f64>> {
    Ok(Spd::new(a, context)?.inverse())
}

/// Lower Cholesky factor `L` with `a = L Lᵀ`.
pub(crate) fn cholesky_lower(a: &Array2<f64>, context: &'static str) -> Result<Array2<f64>> {
    use ndarray_linalg::Cholesky;
    a.cholesky(UPLO::Lower)
        .map_err(|_| Error::NotPositiveDefinite(context))
}

pub(crate) fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
}

pub(crate) fn frobenius(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn add_diagonal(a: &mut Array2<f64>, v: f64) {
    a.diag_mut().mapv_inplace(|d| d + v);
}

pub(crate) fn split(a: &Array2<c64>) -> (Array2<f64>, Array2<f64>) {
    (a.mapv(|z| z.re), a.mapv(|z| z.im))
}

/// `Re(A · diag(d) · B)` for complex `A`, `B` given as real and imaginary parts.
pub(crate) fn real_part_scaled_product(
    a: (&Array2<f64>, &Array2<f64>),
    d: &[c64],
    b: (&Array2<f64>, &Array2<f64>),
) -> Array2<f64> {
    let dr = Array1::from_iter(d.iter().map(|z| z.re));
    let di = Array1::from_iter(d.iter().map(|z| z.im));
    // A diag(d) = (Ar dr - Ai di) + i (Ar di + Ai dr), column scaling.
    let scale = |m: &Array2<f64>, s: &Array1<f64>| m * &s.view().insert_axis(Axis(0));
    let left_re = scale(a.0, &dr) - scale(a.1, &di);
    let left_im = scale(a.0, &di) + scale(a.1, &dr);
    left_re.dot(b.0) - left_im.dot(b.1)
}

/// Dense symmetric Toeplitz matrix from its first column.
pub(crate) fn toeplitz(col: &[f64], dim: usize) -> Array2<f64> {
    Array2::from_shape_fn((dim, dim), |(i, j)| {
        let d = i.abs_diff(j);
        if d < col.len() {
            col[d]
        } else {
            0.0
        }
    })
}
