//! Deterministic equivalents for a fixed connectivity `W`: the coupled
//! Toeplitz / Gram-family fixed points, their second-order companions, and
//! the train, test and memory-capacity expressions assembled from them.

mod assembly;
pub(crate) mod fixed_point;
pub mod toeplitz;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{GramFamily, SecondOrderSource};
use crate::linalg::{add_diagonal, spd_inverse, symmetrize};
use fixed_point::{FixedPoint, IterationOptions};
pub use assembly::{
    data_matrix, memory_capacity, memory_curve, test_mse_c0, test_mse_deteq, train_mse_deteq, MemoryCapacity,
    TestTask, C_ZERO_THRESHOLD,
};
pub use toeplitz::{kernel_trace, kernel_trace_dense, inverse_lag_traces, ToeplitzInverse, ToeplitzKernel, ToeplitzPath};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Sup-norm tolerance, relative to `max(1, ‖x‖∞)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight on the previous iterate in a plain damped step.
    pub damping: f64,
    /// Trailing kernel lags below `band_tol·|k₀|` are dropped.
    pub band_tol: f64,
    /// Regularization for the finite-γ system.
    pub gamma: f64,
    pub toeplitz_path: ToeplitzPath,
    /// Anderson history length; 0 gives plain damped iteration.
    pub anderson_depth: usize,
    /// Start c<1 solves from the invariant solution `c/(1−c)·I`.
    pub warm_start: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-10,
            max_iter: 1000,
            damping: 0.5,
            band_tol: 1e-14,
            gamma: 1e-6,
            toeplitz_path: ToeplitzPath::Levinson,
            anderson_depth: 5,
            warm_start: true,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::invalid("damping", "must lie in [0, 1)"));
        }
        if !(self.band_tol >= 0.0) {
            return Err(Error::invalid("band_tol", "must be non-negative"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be positive"));
        }
        Ok(())
    }

    pub(crate) fn iteration(&self) -> IterationOptions {
        IterationOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            depth: self.anderson_depth,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "c_lt_1")]
    Under,
    #[serde(rename = "c_gt_1")]
    Over,
}

impl Regime {
    pub fn from_ratio(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::invalid("c", format!("ratio n/T = {c} is not a finite non-negative number")));
        }
        if (c - 1.0).abs() < 1e-12 {
            return Err(Error::invalid("c", "n = T is excluded; choose n < T or n > T"));
        }
        Ok(if c < 1.0 { Regime::Under } else { Regime::Over })
    }

    /// `δ_{c<1}`
    pub fn t_shift(self) -> f64 {
        if self == Regime::Under {
            1.0
        } else {
            0.0
        }
    }

    /// `δ_{c>1}`
    pub fn n_shift(self) -> f64 {
        if self == Regime::Over {
            1.0
        } else {
            0.0
        }
    }
}

/// Solved pair: Toeplitz kernel `𝓡` (T×T) and `𝓡̃ = Σ_q t_q S_q` (n×n).
#[derive(Clone, Debug)]
pub struct EquivalentPair {
    pub kernel: ToeplitzKernel,
    /// `t_q`, `q ≥ 0`, with `𝓡̃ = Σ_{|q|} t_{|q|} S_q`.
    pub coefficients: Vec<f64>,
    pub r_tilde: Array2<f64>,
    pub regime: Regime,
    pub c: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl EquivalentPair {
    pub fn t_len(&self) -> usize {
        self.kernel.dim()
    }

    /// `(δ_{c<1} I + 𝓡)` as a first column.
    pub(crate) fn t_side_column(&self) -> Vec<f64> {
        self.kernel.shifted(self.regime.t_shift(), 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Zero,
    S0,
    Dense,
}

/// Solved second-order pair `(𝓖^{[B]}, 𝓖̃^{[B]})`.
#[derive(Clone, Debug)]
pub struct SecondOrderPair {
    pub kernel: ToeplitzKernel,
    pub coefficients: Vec<f64>,
    pub g_tilde: Array2<f64>,
    pub source: SourceKind,
    pub iterations: usize,
    pub residual: f64,
}

/// Parameters of the generic coupled system
/// `k_q = n_pref·(1/n) tr(S_q (n_shift I + n_scale Σ t S)⁻¹)`,
/// `t_q = t_pref·(1/T) Σ_i [(t_shift I + t_scale Toep(k))⁻¹]_{i,i+q}`.
#[derive(Clone, Copy, Debug)]
struct Coupling {
    n_shift: f64,
    n_scale: f64,
    n_pref: f64,
    t_shift: f64,
    t_scale: f64,
    t_pref: f64,
}

impl Coupling {
    fn coefficients(&self, k: &[f64], t_len: usize, count: usize, path: ToeplitzPath) -> Result<Vec<f64>> {
        let mut col: Vec<f64> = k.iter().map(|v| self.t_scale * v).collect();
        col[0] += self.t_shift;
        let traces = inverse_lag_traces(&col, t_len, count, path)?;
        Ok(traces.into_iter().map(|v| self.t_pref * v).collect())
    }

    fn kernel(&self, gram: &GramFamily, t: &[f64], count: usize) -> Result<Vec<f64>> {
        let traces = gram.resolvent_lag_traces(self.n_shift, self.n_scale, t, count)?;
        Ok(traces.into_iter().map(|v| self.n_pref * v).collect())
    }
}

fn band_count(gram: &GramFamily, t_len: usize) -> usize {
    (gram.q_max() + 1).min(t_len).max(1)
}

fn trim(mut values: Vec<f64>, band_tol: f64) -> Vec<f64> {
    let k0 = values.first().copied().unwrap_or(0.0).abs();
    while values.len() > 1 && values.last().is_some_and(|v| v.abs() <= band_tol * k0) {
        values.pop();
    }
    values
}

fn solve_coupled(
    what: &'static str,
    gram: &GramFamily,
    t_len: usize,
    cp: Coupling,
    start: Vec<f64>,
    settings: &SolverSettings,
) -> Result<(FixedPoint, Vec<f64>)> {
    let count = start.len();
    let path = settings.toeplitz_path;
    let map = |k: &[f64]| -> Result<Vec<f64>> {
        let t = cp.coefficients(k, t_len, count, path)?;
        cp.kernel(gram, &t, count)
    };
    let fp = fixed_point::solve(what, start, map, &settings.iteration())?;
    let t = cp.coefficients(&fp.x, t_len, count, path)?;
    Ok((fp, t))
}

/// Solve the γ↓0 pair `(𝓡, 𝓡̃)` for `T = t_len` samples.
pub fn solve_prop1(gram: &GramFamily, t_len: usize, settings: &SolverSettings) -> Result<EquivalentPair> {
    settings.validate()?;
    if t_len == 0 {
        return Err(Error::invalid("T", "training length must be positive"));
    }
    let c = gram.n() as f64 / t_len as f64;
    let regime = Regime::from_ratio(c)?;
    let count = band_count(gram, t_len);
    let cp = Coupling {
        n_shift: regime.n_shift(),
        n_scale: 1.0,
        n_pref: c,
        t_shift: regime.t_shift(),
        t_scale: 1.0,
        t_pref: 1.0,
    };
    let mut start = vec![0.0; count];
    match regime {
        Regime::Under if settings.warm_start => start[0] = c / (1.0 - c),
        Regime::Under => {}
        // Toep(k) alone must be positive definite; begin from the t = 0 image
        Regime::Over => start = cp.kernel(gram, &[0.0], count)?,
    }
    let (fp, t) = solve_coupled("fixed point for (R, R~)", gram, t_len, cp, start, settings)?;
    log::debug!("pair solved in {} iterations, residual {:.2e}", fp.iterations, fp.residual);
    let coefficients = trim(t, settings.band_tol);
    let r_tilde = gram.weighted_sum(&coefficients);
    Ok(EquivalentPair {
        kernel: ToeplitzKernel::new(trim(fp.x, settings.band_tol), t_len),
        coefficients,
        r_tilde,
        regime,
        c,
        iterations: fp.iterations,
        residual: fp.residual,
    })
}

/// Finite-γ solution with the data-driven resolvents it implies.
#[derive(Clone, Debug)]
pub struct RegularizedEquivalent {
    pub kernel: ToeplitzKernel,
    pub coefficients: Vec<f64>,
    pub r_tilde: Array2<f64>,
    pub q_bar: Array2<f64>,
    pub q_tilde_bar: Array2<f64>,
    pub iterations: usize,
}

/// Finite-γ system with the low-rank simplification inside the traces:
/// `R_γ = (c/γ){(1/n)tr S_{i−j}(I+η²R̃_γ)⁻¹}`, `R̃_γ = Σ (1/(γT)) tr(J^q(I+η²R_γ)⁻¹) S_q`.
/// `a` is the n×T deterministic input part.
pub fn solve_theorem1(gram: &GramFamily, a: &Array2<f64>, eta2: f64, settings: &SolverSettings) -> Result<RegularizedEquivalent> {
    settings.validate()?;
    if !(eta2 > 0.0) {
        return Err(Error::invalid("eta2", "noise variance must be positive"));
    }
    let n = gram.n();
    if a.nrows() != n || a.ncols() == 0 {
        return Err(Error::invalid("A", format!("expected {n} rows and at least one column")));
    }
    let t_len = a.ncols();
    let gamma = settings.gamma;
    let c = n as f64 / t_len as f64;
    let count = band_count(gram, t_len);
    let cp = Coupling {
        n_shift: 1.0,
        n_scale: eta2,
        n_pref: c / gamma,
        t_shift: 1.0,
        t_scale: eta2,
        t_pref: 1.0 / gamma,
    };
    let (fp, t) = solve_coupled("fixed point for (R_gamma, R~_gamma)", gram, t_len, cp, vec![0.0; count], settings)?;
    let kernel = ToeplitzKernel::new(fp.x, t_len);
    let r_tilde = gram.weighted_sum(&t);

    // (I + η²R̃)⁻¹ and (I + η²R)⁻¹
    let mut n_side = &r_tilde * eta2;
    add_diagonal(&mut n_side, 1.0);
    let n_inv = spd_inverse(&n_side, "I + eta^2 R~")?;
    let t_inv = ToeplitzInverse::new(&kernel.shifted(1.0, eta2), t_len)?.dense();

    let mut q_inner = &n_side + &(a.dot(&t_inv).dot(&a.t()) / gamma);
    symmetrize(&mut q_inner);
    let q_bar = spd_inverse(&q_inner, "Q bar")? / gamma;

    let mut qt_inner = kernel.dense() * eta2 + a.t().dot(&n_inv).dot(a) / gamma;
    add_diagonal(&mut qt_inner, 1.0);
    symmetrize(&mut qt_inner);
    let q_tilde_bar = spd_inverse(&qt_inner, "Q tilde bar")? / gamma;

    Ok(RegularizedEquivalent {
        kernel,
        coefficients: t,
        r_tilde,
        q_bar,
        q_tilde_bar,
        iterations: fp.iterations,
    })
}

/// Solve the second-order pair for source `B` around a solved first-order pair.
pub fn solve_prop2(
    pair: &EquivalentPair,
    gram: &GramFamily,
    source: SecondOrderSource<'_>,
    settings: &SolverSettings,
) -> Result<SecondOrderPair> {
    settings.validate()?;
    let kind = match source {
        SecondOrderSource::Zero => SourceKind::Zero,
        SecondOrderSource::S0 => SourceKind::S0,
        SecondOrderSource::Dense(b) => {
            let n = gram.n();
            if b.dim() != (n, n) {
                return Err(Error::invalid("B", format!("expected a {n}x{n} matrix")));
            }
            SourceKind::Dense
        }
    };
    let t_len = pair.t_len();
    let count = band_count(gram, t_len);
    let y = ToeplitzInverse::new(&pair.t_side_column(), t_len)?.dense();
    let n_shift = pair.regime.n_shift();
    let c = pair.c;

    let coefficients_of = |g: &[f64]| -> Vec<f64> {
        let gy = toeplitz_times(g, &y);
        let ygy = y.dot(&gy);
        (0..count).map(|q| kernel_trace_dense(&ygy, q as isize)).collect()
    };
    let map = |g: &[f64]| -> Result<Vec<f64>> {
        let gt = coefficients_of(g);
        let traces = gram.second_order_lag_traces(n_shift, 1.0, &pair.coefficients, source, &gt, count)?;
        Ok(traces.into_iter().map(|v| c * v).collect())
    };
    let opts = settings.iteration();
    let fp = fixed_point::solve("second-order fixed point", vec![0.0; count], map, &opts)?;
    let coefficients = trim(coefficients_of(&fp.x), settings.band_tol);
    let g_tilde = gram.weighted_sum(&coefficients);
    Ok(SecondOrderPair {
        kernel: ToeplitzKernel::new(trim(fp.x, settings.band_tol), t_len),
        coefficients,
        g_tilde,
        source: kind,
        iterations: fp.iterations,
        residual: fp.residual,
    })
}

/// `Toep(g) · B` for a dense `B` with `T` rows, exploiting the band.
fn toeplitz_times(g: &[f64], b: &Array2<f64>) -> Array2<f64> {
    let t = b.nrows();
    let mut out = b * g[0];
    for (q, &gq) in g.iter().enumerate().skip(1) {
        if gq == 0.0 || q >= t {
            continue;
        }
        // rows i ← i+q and i+q ← i
        {
            let src = b.slice(ndarray::s![q.., ..]);
            let mut dst = out.slice_mut(ndarray::s![..t - q, ..]);
            dst.scaled_add(gq, &src);
        }
        let src = b.slice(ndarray::s![..t - q, ..]);
        let mut dst = out.slice_mut(ndarray::s![q.., ..]);
        dst.scaled_add(gq, &src);
    }
    out
}
