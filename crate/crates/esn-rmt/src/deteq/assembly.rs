//! Train/test MSE and memory capacity assembled from solved pairs.

use ndarray::{s, Array1, Array2};
use serde::Serialize;

use super::toeplitz::ToeplitzInverse;
use super::{EquivalentPair, Regime, SecondOrderPair};
use crate::error::{Error, Result};
use crate::gram::{input_columns, GramFamily};
use crate::linalg::{add_diagonal, spd_inverse, symmetrize, toeplitz, Spd};

/// Below this `n/T` the test error uses the direct `c = 0` expression.
pub const C_ZERO_THRESHOLD: f64 = 0.01;

/// Relative norm below which columns `W^j m` are dropped from `A = MU`.
const COLUMN_FLOOR: f64 = 1e-20;

/// Training and test data of one task. `u` is the T×T lag matrix with
/// `u[[j, t]] = u_{t−j}/√T` (history included), likewise `u_hat` with `√T̂`.
#[derive(Clone, Copy, Debug)]
pub struct TestTask<'a> {
    pub m: &'a Array1<f64>,
    pub u: &'a Array2<f64>,
    pub u_hat: &'a Array2<f64>,
    pub r: &'a Array1<f64>,
    pub r_hat: &'a Array1<f64>,
}

/// `A = M U` with `M = [m, Wm, W²m, …]`, truncated where `W^j m` vanishes.
pub fn data_matrix(gram: &GramFamily, m: &Array1<f64>, u: &Array2<f64>) -> Result<Array2<f64>> {
    if m.len() != gram.n() {
        return Err(Error::invalid("m", format!("expected length {}", gram.n())));
    }
    let cols = input_columns(gram.w(), m, u.nrows(), COLUMN_FLOOR);
    let l = cols.ncols();
    Ok(cols.dot(&u.slice(s![..l, ..])))
}

fn check_task(t_len: usize, u: &Array2<f64>, r: &Array1<f64>, what: &'static str) -> Result<()> {
    if u.ncols() != t_len || r.len() != t_len {
        return Err(Error::invalid(
            what,
            format!("expected {t_len} columns and targets, got {} and {}", u.ncols(), r.len()),
        ));
    }
    Ok(())
}

/// `(1/T) rᵀ(I + 𝓡 + η⁻² Aᵀ𝓡̃⁻¹A)⁻¹ r` for c<1, exactly 0 for c>1.
pub fn train_mse_deteq(
    pair: &EquivalentPair,
    gram: &GramFamily,
    m: &Array1<f64>,
    u: &Array2<f64>,
    r: &Array1<f64>,
    eta2: f64,
) -> Result<f64> {
    if pair.regime == Regime::Over {
        return Ok(0.0);
    }
    if !(eta2 > 0.0) {
        return Err(Error::invalid("eta2", "noise variance must be positive"));
    }
    let t_len = pair.t_len();
    check_task(t_len, u, r, "U")?;
    let cols = input_columns(gram.w(), m, u.nrows(), COLUMN_FLOOR);
    let l = cols.ncols();
    let kn = gram.resolvent(0.0, 1.0, &pair.coefficients)?;
    let d = cols.t().dot(&kn).dot(&cols);
    let u_l = u.slice(s![..l, ..]);
    let mut inner = u_l.t().dot(&d).dot(&u_l) / eta2;
    inner += &toeplitz(&pair.t_side_column(), t_len);
    symmetrize(&mut inner);
    let x = Spd::new(&inner, "training resolvent")?.solve(r);
    Ok(r.dot(&x) / t_len as f64)
}

/// Three-term test error for a solved pair and its `B = S₀` companion.
pub fn test_mse_deteq(
    pair: &EquivalentPair,
    second: &SecondOrderPair,
    gram: &GramFamily,
    task: &TestTask<'_>,
    eta2: f64,
) -> Result<f64> {
    if !(eta2 > 0.0) {
        return Err(Error::invalid("eta2", "noise variance must be positive"));
    }
    let t_len = pair.t_len();
    check_task(t_len, task.u, task.r, "U")?;
    if task.u_hat.ncols() != task.r_hat.len() {
        return Err(Error::invalid("U_hat", "column count must match the test target length"));
    }
    if pair.c < C_ZERO_THRESHOLD {
        return test_mse_c0(gram, task, eta2);
    }
    let a = data_matrix(gram, task.m, task.u)?;
    let a_hat = data_matrix(gram, task.m, task.u_hat)?;
    let tf = t_len as f64;
    let t_hat = task.r_hat.len() as f64;

    let t_col = pair.t_side_column();
    let y = ToeplitzInverse::new(&t_col, t_len)?.dense();
    let mut kn_inv = pair.r_tilde.clone();
    add_diagonal(&mut kn_inv, pair.regime.n_shift());

    // w = 𝓠 A Y r with 𝓠 = (Kn⁻¹ + η⁻² A Y Aᵀ)⁻¹
    let ay = a.dot(&y);
    let mut q_inv = &kn_inv + &(ay.dot(&a.t()) / eta2);
    symmetrize(&mut q_inv);
    let w = Spd::new(&q_inv, "test resolvent (n side)")?.solve(&ay.dot(task.r));

    // z = Q̃ r with Q̃ = (Y⁻¹ + η⁻² Aᵀ Kn A)⁻¹
    let kn = spd_inverse(&kn_inv, "delta I + R~")?;
    let mut qt_inv = a.t().dot(&kn.dot(&a)) / eta2;
    qt_inv += &toeplitz(&t_col, t_len);
    symmetrize(&mut qt_inv);
    let z = Spd::new(&qt_inv, "test resolvent (T side)")?.solve(task.r);

    let fit = a_hat.t().dot(&w) / (eta2 * tf.sqrt()) - task.r_hat / t_hat.sqrt();
    let term1 = fit.dot(&fit);
    let gz = toeplitz(second.kernel.values(), t_len).dot(&z);
    let term2 = z.dot(&gz) / tf;
    let mid = gram.s0() + &second.g_tilde;
    let term3 = w.dot(&mid.dot(&w)) / (eta2 * tf);
    Ok(term1 + term2 + term3)
}

/// Test error in the `c = 0` limit, where `𝓡 = 0`, `𝓡̃ = S₀` and `𝓖 = 𝓖̃ = 0`:
/// `‖Âᵀ K⁻¹ A r/√T − r̂/√T̂‖² + (η²/T) rᵀAᵀK⁻¹S₀K⁻¹A r`, `K = η²S₀ + AAᵀ`.
pub fn test_mse_c0(gram: &GramFamily, task: &TestTask<'_>, eta2: f64) -> Result<f64> {
    let t_len = task.r.len();
    check_task(t_len, task.u, task.r, "U")?;
    let a = data_matrix(gram, task.m, task.u)?;
    let a_hat = data_matrix(gram, task.m, task.u_hat)?;
    let tf = t_len as f64;
    let t_hat = task.r_hat.len() as f64;
    let mut k = gram.s0() * eta2 + a.dot(&a.t());
    symmetrize(&mut k);
    let v = Spd::new(&k, "eta^2 S0 + A A^T")?.solve(&a.dot(task.r));
    let fit = a_hat.t().dot(&v) / tf.sqrt() - task.r_hat / t_hat.sqrt();
    Ok(fit.dot(&fit) + eta2 * v.dot(&gram.s0().dot(&v)) / tf)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MemoryCapacity {
    pub tau: usize,
    /// Value at the probe noise level.
    pub value: f64,
    /// Value at a tenth of the probe level.
    pub refined: f64,
    pub stabilized: bool,
}

/// `MC(τ) = 1/[(η²(I+𝓡) + {mᵀ(Wⁱ)ᵀ𝓡̃⁻¹Wʲm})⁻¹]_{ττ}` at small η².
pub fn memory_capacity(
    pair: &EquivalentPair,
    gram: &GramFamily,
    m: &Array1<f64>,
    tau: usize,
    eta2_probe: f64,
) -> Result<MemoryCapacity> {
    Ok(memory_curve(pair, gram, m, tau, eta2_probe)?[tau])
}

/// `MC(τ)` for `τ = 0..=tau_max` sharing one factorization per noise level.
///
/// Only the leading L×L block matters, L being the number of non-negligible
/// columns `W^j m`; the rest of `I + 𝓡` enters through the Schur complement
/// `([(I+𝓡)⁻¹]_{LL})⁻¹`.
///
/// At finite n the value still falls slowly as η² shrinks: the columns with
/// `‖Wʲm‖² ≳ η²` are nearly n-dimensional Gram vectors and absorb part of
/// column τ, a relative loss of about their count over n. `stabilized` flags
/// whether the drift over one decade of η² stays below 1%.
pub fn memory_curve(
    pair: &EquivalentPair,
    gram: &GramFamily,
    m: &Array1<f64>,
    tau_max: usize,
    eta2_probe: f64,
) -> Result<Vec<MemoryCapacity>> {
    if pair.regime != Regime::Under {
        return Err(Error::invalid("c", "memory capacity is defined for n < T"));
    }
    if !(eta2_probe > 0.0) {
        return Err(Error::invalid("eta2_probe", "must be positive"));
    }
    let t_len = pair.t_len();
    if tau_max >= t_len {
        return Err(Error::invalid("tau", format!("delay must be below T = {t_len}")));
    }
    if m.len() != gram.n() {
        return Err(Error::invalid("m", format!("expected length {}", gram.n())));
    }
    let mut cols = input_columns(gram.w(), m, t_len, 1e-15);
    if cols.ncols() <= tau_max {
        cols = input_columns(gram.w(), m, tau_max + 1, 0.0);
    }
    let l = cols.ncols();
    let kn = gram.resolvent(0.0, 1.0, &pair.coefficients)?;
    let d = cols.t().dot(&kn).dot(&cols);
    let y_ll = ToeplitzInverse::new(&pair.t_side_column(), t_len)?.leading_block(l);
    let schur = spd_inverse(&y_ll, "(I + R)^-1 leading block")?;

    let diag_at = |eta2: f64| -> Result<Array1<f64>> {
        let mut mat = &d + &(&schur * eta2);
        symmetrize(&mut mat);
        let inv = Spd::new(&mat, "memory capacity matrix")?.inverse();
        Ok((0..=tau_max).map(|t| 1.0 / inv[[t, t]]).collect())
    };
    let coarse = diag_at(eta2_probe)?;
    let fine = diag_at(eta2_probe / 10.0)?;
    let out: Vec<MemoryCapacity> = (0..=tau_max)
        .map(|tau| {
            let (v, f) = (coarse[tau], fine[tau]);
            let stabilized = (v - f).abs() <= 0.01 * v.abs().max(f.abs());
            if !stabilized {
                log::warn!("MC({tau}) not stabilized: {v:.4e} at eta2 = {eta2_probe:.1e}, {f:.4e} at a tenth of it");
            }
            MemoryCapacity { tau, value: v, refined: f, stabilized }
        })
        .collect();
    Ok(out)
}
