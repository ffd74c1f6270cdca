//! Exact simulation of the noisy linear reservoir `x_{t+1} = W x_t + m u_{t+1} + η ε_{t+1}`,
//! least-squares readouts and their empirical errors.

use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{EigVals, JobSvd, SVDDC};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, LinalgContext, Result};
use crate::gram::{lyapunov_smith, GramFamily};
use crate::linalg::{add_diagonal, cholesky_lower, Spd};

#[derive(Clone, Debug)]
pub struct Reservoir {
    w: Array2<f64>,
    m: Array1<f64>,
    eta2: f64,
    /// Lower Cholesky factor of `S₀`, for stationary noise draws.
    s0_factor: Array2<f64>,
}

impl Reservoir {
    pub fn new(w: Array2<f64>, m: Array1<f64>, eta2: f64) -> Result<Self> {
        let n = check_shapes(&w, &m, eta2)?;
        let vals = w.eigvals().ctx("reservoir eigenvalues")?;
        let rho = vals.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if rho >= 1.0 {
            return Err(Error::invalid("W", format!("spectral radius {rho:.6} is not below 1")));
        }
        let s0 = lyapunov_smith(&w, 1e-13)?;
        debug_assert_eq!(s0.nrows(), n);
        let s0_factor = cholesky_lower(&s0, "S0")?;
        Ok(Reservoir { w, m, eta2, s0_factor })
    }

    /// Reuse a solved Gram family (stability already checked there).
    pub fn from_gram(gram: &GramFamily, m: Array1<f64>, eta2: f64) -> Result<Self> {
        check_shapes(gram.w(), &m, eta2)?;
        let s0_factor = cholesky_lower(gram.s0(), "S0")?;
        Ok(Reservoir { w: gram.w().clone(), m, eta2, s0_factor })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn m(&self) -> &Array1<f64> {
        &self.m
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn with_eta2(&self, eta2: f64) -> Result<Self> {
        if !(eta2 >= 0.0) || !eta2.is_finite() {
            return Err(Error::invalid("eta2", "noise variance must be finite and non-negative"));
        }
        Ok(Reservoir { eta2, ..self.clone() })
    }
}

fn check_shapes(w: &Array2<f64>, m: &Array1<f64>, eta2: f64) -> Result<usize> {
    let n = w.nrows();
    if n == 0 || w.ncols() != n {
        return Err(Error::invalid("W", "connectivity must be a non-empty square matrix"));
    }
    if m.len() != n {
        return Err(Error::invalid("m", format!("expected length {n}, got {}", m.len())));
    }
    if w.iter().chain(m.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("W", "entries must be finite"));
    }
    if !(eta2 >= 0.0) || !eta2.is_finite() {
        return Err(Error::invalid("eta2", "noise variance must be finite and non-negative"));
    }
    Ok(n)
}

/// Input samples `u_{−H} … u_{T−1}`; times outside the buffer read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSeries {
    values: Vec<f64>,
    history: usize,
}

impl InputSeries {
    pub fn new(values: Vec<f64>, history: usize) -> Result<Self> {
        if history > values.len() {
            return Err(Error::invalid("history", "longer than the supplied samples"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("u", "samples must be finite"));
        }
        Ok(InputSeries { values, history })
    }

    /// Series with no past.
    pub fn without_history(values: Vec<f64>) -> Self {
        InputSeries { values, history: 0 }
    }

    pub fn history(&self) -> usize {
        self.history
    }

    /// Number of samples at times `t ≥ 0`.
    pub fn len(&self) -> usize {
        self.values.len() - self.history
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, t: isize) -> f64 {
        let idx = t + self.history as isize;
        if idx < 0 {
            return 0.0;
        }
        self.values.get(idx as usize).copied().unwrap_or(0.0)
    }

    /// In-window samples `u_0 … u_{T−1}`.
    pub fn window(&self) -> &[f64] {
        &self.values[self.history..]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Pre-window noise state drawn from `N(0, η²S₀)`.
    #[default]
    Stationary,
    /// Run this many noisy steps from the zero state before recording.
    Washout(usize),
}

/// Washout length after which `ρ^K` falls below 1e-12.
pub fn default_washout(spectral_radius: f64) -> usize {
    if spectral_radius <= 0.0 {
        return 1;
    }
    ((1e-12f64).ln() / spectral_radius.ln()).ceil().max(1.0) as usize
}

/// Standard normal draws driving one episode: an initial vector for the
/// stationary start and one innovation per recorded step after the first.
#[derive(Clone, Debug)]
pub struct NoisePath {
    pub start: Array1<f64>,
    pub innovations: Array2<f64>,
}

impl NoisePath {
    pub fn sample(n: usize, t_len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = Array1::from_shape_simple_fn(n, || StandardNormal.sample(&mut rng));
        let innovations =
            Array2::from_shape_simple_fn((n, t_len.saturating_sub(1)), || StandardNormal.sample(&mut rng));
        NoisePath { start, innovations }
    }
}

/// Deterministic part `Σ_{j<T} Wʲ m u_{t−j}` of every recorded state.
fn driven_states(res: &Reservoir, input: &InputSeries, t_len: usize) -> Array2<f64> {
    let n = res.n();
    let lags = input.history().min(t_len.saturating_sub(1)) as isize;
    let mut state = Array1::<f64>::zeros(n);
    for t in -lags..0 {
        state = res.w.dot(&state) + &res.m * input.at(t);
    }
    let mut out = Array2::<f64>::zeros((n, t_len));
    for t in 0..t_len {
        state = res.w.dot(&state) + &res.m * input.at(t as isize);
        out.column_mut(t).assign(&state);
    }
    out
}

/// Noise part of the stationary states, `√T·Z`.
pub fn noise_states(res: &Reservoir, path: &NoisePath, t_len: usize) -> Result<Array2<f64>> {
    let n = res.n();
    if path.start.len() != n || path.innovations.ncols() + 1 < t_len {
        return Err(Error::invalid("noise", "noise path does not cover the episode"));
    }
    let eta = res.eta2.sqrt();
    let mut out = Array2::<f64>::zeros((n, t_len));
    if t_len == 0 {
        return Ok(out);
    }
    let mut state = res.s0_factor.dot(&path.start) * eta;
    out.column_mut(0).assign(&state);
    for t in 1..t_len {
        state = res.w.dot(&state);
        state.scaled_add(eta, &path.innovations.column(t - 1));
        out.column_mut(t).assign(&state);
    }
    Ok(out)
}

/// States `x_0 … x_{T−1}` with a fresh noise path drawn from `seed`.
pub fn simulate_states(res: &Reservoir, input: &InputSeries, t_len: usize, seed: u64, init: Init) -> Result<Array2<f64>> {
    let path = NoisePath::sample(res.n(), t_len, seed);
    match init {
        Init::Stationary => simulate_with_noise(res, input, t_len, &path),
        Init::Washout(steps) => Ok(simulate_washout(res, input, t_len, steps, seed)),
    }
}

/// Stationary-start states for a given noise path; equals `√T(A + Z)`.
pub fn simulate_with_noise(res: &Reservoir, input: &InputSeries, t_len: usize, path: &NoisePath) -> Result<Array2<f64>> {
    Ok(driven_states(res, input, t_len) + noise_states(res, path, t_len)?)
}

fn simulate_washout(res: &Reservoir, input: &InputSeries, t_len: usize, steps: usize, seed: u64) -> Array2<f64> {
    let n = res.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_ca11);
    let eta = res.eta2.sqrt();
    let mut state = Array1::<f64>::zeros(n);
    let mut out = Array2::<f64>::zeros((n, t_len));
    for t in -(steps as isize)..t_len as isize {
        let eps: Array1<f64> = Array1::from_shape_simple_fn(n, || StandardNormal.sample(&mut rng));
        state = res.w.dot(&state) + &res.m * input.at(t) + eps * eta;
        if t >= 0 {
            out.column_mut(t as usize).assign(&state);
        }
    }
    out
}

/// `M = [m, Wm, …, W^{T−1}m]`, `U_{ij} = u_{j−i}/√T`, `A = MU`.
pub fn input_matrices(res: &Reservoir, input: &InputSeries, t_len: usize) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let n = res.n();
    let mut m_mat = Array2::<f64>::zeros((n, t_len));
    let mut col = res.m.clone();
    for j in 0..t_len {
        m_mat.column_mut(j).assign(&col);
        col = res.w.dot(&col);
    }
    let u = lag_matrix(input, t_len);
    let a = m_mat.dot(&u);
    (m_mat, u, a)
}

/// `U_{ij} = u_{j−i}/√T`, T×T.
pub fn lag_matrix(input: &InputSeries, t_len: usize) -> Array2<f64> {
    let scale = 1.0 / (t_len as f64).sqrt();
    Array2::from_shape_fn((t_len, t_len), |(i, j)| input.at(j as isize - i as isize) * scale)
}

/// Minimum-norm least-squares solution of `Xᵀω = r`, singular values below
/// `1e-12·s_max` discarded.
pub fn train_readout(x: &Array2<f64>, r: &Array1<f64>) -> Result<Array1<f64>> {
    if x.ncols() != r.len() {
        return Err(Error::invalid("r", format!("expected length {}, got {}", x.ncols(), r.len())));
    }
    let (u, s, vt) = x.svddc(JobSvd::Some).ctx("readout SVD")?;
    let (u, vt) = (u.expect("left vectors requested"), vt.expect("right vectors requested"));
    let s_max = s.iter().fold(0.0f64, |a, v| a.max(*v));
    if !(s_max > 0.0) {
        return Err(Error::invalid("X", "state matrix is identically zero"));
    }
    let proj = vt.dot(r);
    let mut coef = Array1::<f64>::zeros(s.len());
    for i in 0..s.len() {
        if s[i] > 1e-12 * s_max {
            coef[i] = proj[i] / s[i];
        }
    }
    Ok(u.dot(&coef))
}

/// `(1/T)‖r − Xᵀω‖²`
pub fn train_mse(x: &Array2<f64>, r: &Array1<f64>, omega: &Array1<f64>) -> f64 {
    residual_energy(x, r.view(), omega) / r.len() as f64
}

/// `(1/T̂)‖r̂ − X̂ᵀω‖²`
pub fn test_mse(x_hat: &Array2<f64>, r_hat: &Array1<f64>, omega: &Array1<f64>) -> f64 {
    residual_energy(x_hat, r_hat.view(), omega) / r_hat.len() as f64
}

fn residual_energy(x: &Array2<f64>, r: ArrayView1<f64>, omega: &Array1<f64>) -> f64 {
    let diff = &r - &x.t().dot(omega);
    diff.dot(&diff)
}

/// `γ(1/T) rᵀ(XᵀX/T + γI)⁻¹ r`, evaluated through the thin SVD of X.
pub fn resolvent_train_mse(x: &Array2<f64>, r: &Array1<f64>, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    if x.ncols() != r.len() {
        return Err(Error::invalid("r", format!("expected length {}, got {}", x.ncols(), r.len())));
    }
    let t = r.len() as f64;
    let (_, s, vt) = x.svddc(JobSvd::Some).ctx("resolvent SVD")?;
    let vt = vt.expect("right vectors requested");
    let p = vt.dot(r);
    let mut acc = r.dot(r);
    for i in 0..s.len() {
        let lambda = s[i] * s[i] / t;
        acc += p[i] * p[i] * (gamma / (lambda + gamma) - 1.0);
    }
    Ok(acc.max(0.0) / t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RidgeErrors {
    pub train: f64,
    pub test: f64,
}

/// Noiseless ridge readout on `X = √T A`: train `γ²(1/T) rᵀQ̃²r` with
/// `Q̃ = (AᵀA + γI)⁻¹`, test `‖Âᵀ(γI + AAᵀ)⁻¹Ar/√T − r̂/√T̂‖²`.
pub fn ridge_baseline(
    a: &Array2<f64>,
    a_hat: &Array2<f64>,
    r: &Array1<f64>,
    r_hat: &Array1<f64>,
    gamma: f64,
) -> Result<RidgeErrors> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    if a.ncols() != r.len() || a_hat.ncols() != r_hat.len() || a.nrows() != a_hat.nrows() {
        return Err(Error::invalid("A", "shapes of A, Â, r, r̂ are inconsistent"));
    }
    let t = r.len() as f64;
    let t_hat = r_hat.len() as f64;
    let mut qt = a.t().dot(a);
    add_diagonal(&mut qt, gamma);
    let z = Spd::new(&qt, "ridge resolvent")?.solve(r);
    let train = gamma * gamma * z.dot(&z) / t;
    let mut qn = a.dot(&a.t());
    add_diagonal(&mut qn, gamma);
    let v = Spd::new(&qn, "ridge resolvent")?.solve(&a.dot(r));
    let fit = a_hat.t().dot(&v) / t.sqrt() - r_hat / t_hat.sqrt();
    Ok(RidgeErrors { train, test: fit.dot(&fit) })
}

/// `MSE·T/‖r‖²`
pub fn normalized(mse: f64, r: &Array1<f64>) -> f64 {
    let energy = r.dot(r) / r.len() as f64;
    if energy > 0.0 {
        mse / energy
    } else {
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_connectivity, sample_input_weights, Ensemble, InputWeights, MatrixSpec};
    use proptest::prelude::*;

    fn reservoir(n: usize, sigma: f64, eta2: f64, seed: u64) -> Reservoir {
        let w = sample_connectivity(&MatrixSpec::new(Ensemble::GaussianIid { sigma }, n), seed).unwrap();
        let m = sample_input_weights(n, &InputWeights::UnitGaussianNormalized, seed + 1, None).unwrap();
        Reservoir::new(w, m, eta2).unwrap()
    }

    fn gaussian_vec(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn noiseless_zero_input_gives_zero_states() {
        let res = reservoir(10, 0.5, 0.0, 1);
        let x = simulate_states(&res, &InputSeries::without_history(vec![0.0; 8]), 8, 3, Init::Stationary).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn impulse_unrolls_matrix_powers() {
        let res = reservoir(6, 0.7, 0.0, 2);
        let t_len = 5;
        let mut u = vec![0.0; t_len];
        u[0] = (t_len as f64).sqrt();
        let x = simulate_states(&res, &InputSeries::without_history(u.clone()), t_len, 0, Init::Stationary).unwrap();
        let mut col = res.m.clone() * (t_len as f64).sqrt();
        for t in 0..t_len {
            let err = (&x.column(t) - &col).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(err < 1e-12);
            col = res.w.dot(&col);
        }
        // U = I and A = M for the same impulse
        let (m_mat, u_mat, a) = input_matrices(&res, &InputSeries::without_history(u), t_len);
        assert!((&u_mat - &Array2::<f64>::eye(t_len)).iter().all(|v| v.abs() < 1e-15));
        assert!((&a - &m_mat).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn lag_matrix_by_hand() {
        let input = InputSeries::new(vec![3.0, 1.0, 2.0], 1).unwrap();
        let u = lag_matrix(&input, 2);
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(u, ndarray::array![[1.0 * s, 2.0 * s], [3.0 * s, 1.0 * s]]);
    }

    #[test]
    fn simulation_equals_data_plus_noise_matrices() {
        let res = reservoir(12, 0.6, 0.3, 4);
        let t_len = 60;
        let input = InputSeries::new(gaussian_vec(2 * t_len - 1, 9), t_len - 1).unwrap();
        let path = NoisePath::sample(12, t_len, 5);
        let x = simulate_with_noise(&res, &input, t_len, &path).unwrap();
        let (_, _, a) = input_matrices(&res, &input, t_len);
        let z = noise_states(&res, &path, t_len).unwrap() / (t_len as f64).sqrt();
        let expect = (a + z) * (t_len as f64).sqrt();
        let err = (&x - &expect).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn stationary_noise_has_covariance_s0() {
        let n = 50;
        let t_len = 10_000;
        let res = reservoir(n, 0.5, 1.0, 6);
        let s0 = lyapunov_smith(res.w(), 1e-13).unwrap();
        let mut cov = Array2::<f64>::zeros((n, n));
        let seeds = 4;
        for seed in 0..seeds {
            let x = simulate_states(&res, &InputSeries::without_history(vec![0.0; t_len]), t_len, seed, Init::Stationary)
                .unwrap();
            cov += &(x.dot(&x.t()) / t_len as f64);
        }
        cov /= seeds as f64;
        let rel = crate::linalg::frobenius((&cov - &s0).view()) / crate::linalg::frobenius(s0.view());
        assert!(rel < 0.05, "{rel}");
    }

    #[test]
    fn washout_matches_stationary_statistics() {
        let n = 20;
        let res = reservoir(n, 0.5, 1.0, 7);
        let x = simulate_states(&res, &InputSeries::without_history(vec![0.0; 4000]), 4000, 1, Init::Washout(200)).unwrap();
        let s0 = lyapunov_smith(res.w(), 1e-13).unwrap();
        let cov = x.dot(&x.t()) / 4000.0;
        let rel = crate::linalg::frobenius((&cov - &s0).view()) / crate::linalg::frobenius(s0.view());
        assert!(rel < 0.1, "{rel}");
        assert_eq!(default_washout(0.9), 263);
    }

    #[test]
    fn identity_states_reproduce_targets() {
        let x = Array2::<f64>::eye(4);
        let r = Array1::from(vec![1.0, -2.0, 0.5, 3.0]);
        let omega = train_readout(&x, &r).unwrap();
        assert!((&omega - &r).iter().all(|v| v.abs() < 1e-14));
        assert!(train_mse(&x, &r, &omega) < 1e-28);
    }

    #[test]
    fn readout_matches_gram_inverse_formula() {
        let (n, t_len) = (20, 50);
        let res = reservoir(n, 0.8, 1.0, 8);
        let input = InputSeries::without_history(gaussian_vec(t_len, 1));
        let x = simulate_states(&res, &input, t_len, 2, Init::Stationary).unwrap();
        let r = Array1::from(gaussian_vec(t_len, 3));
        let omega = train_readout(&x, &r).unwrap();
        let gram = x.dot(&x.t());
        let direct = Spd::new(&gram, "test").unwrap().solve(&x.dot(&r));
        let err = (&omega - &direct).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn interpolation_when_states_outnumber_samples() {
        let (n, t_len) = (40, 25);
        let res = reservoir(n, 0.8, 0.5, 9);
        let x = simulate_states(&res, &InputSeries::without_history(gaussian_vec(t_len, 4)), t_len, 3, Init::Stationary)
            .unwrap();
        let r = Array1::from(gaussian_vec(t_len, 5));
        let omega = train_readout(&x, &r).unwrap();
        assert!(train_mse(&x, &r, &omega) <= 1e-10 * r.dot(&r) / t_len as f64);
    }

    #[test]
    fn orthogonal_target_is_unexplained() {
        // states span e_0, e_1 in time; target lives on e_2
        let mut x = Array2::<f64>::zeros((2, 3));
        x[[0, 0]] = 1.0;
        x[[1, 1]] = 2.0;
        let r = Array1::from(vec![0.0, 0.0, 5.0]);
        let omega = train_readout(&x, &r).unwrap();
        assert!((train_mse(&x, &r, &omega) - 25.0 / 3.0).abs() < 1e-12);
        assert!(train_readout(&Array2::zeros((2, 3)), &r).is_err());
    }

    #[test]
    fn resolvent_error_converges_to_least_squares() {
        let (n, t_len) = (50, 100);
        let res = reservoir(n, 0.8, 1.0, 10);
        let x = simulate_states(&res, &InputSeries::without_history(gaussian_vec(t_len, 6)), t_len, 4, Init::Stationary)
            .unwrap();
        let r = Array1::from(gaussian_vec(t_len, 7));
        let exact = train_mse(&x, &r, &train_readout(&x, &r).unwrap());
        let mut last = f64::INFINITY;
        for k in 2..=12 {
            let e = resolvent_train_mse(&x, &r, 10f64.powi(-k)).unwrap();
            assert!(e <= last + 1e-15);
            last = e;
        }
        let tiny = resolvent_train_mse(&x, &r, 1e-10).unwrap();
        assert!((tiny - exact).abs() < 1e-6 * exact);
        // X = 0 gives the target energy
        let zero = resolvent_train_mse(&Array2::zeros((n, t_len)), &r, 0.3).unwrap();
        assert!((zero - r.dot(&r) / t_len as f64).abs() < 1e-12);
    }

    #[test]
    fn ridge_matches_explicit_memory_matrix_form() {
        let (n, t_len) = (15, 30);
        let res = reservoir(n, 0.7, 0.0, 11);
        let input = InputSeries::new(gaussian_vec(2 * t_len, 8), t_len).unwrap();
        let (m_mat, u, a) = input_matrices(&res, &input, t_len);
        let r = Array1::from(gaussian_vec(t_len, 9));
        let gamma = 0.05;
        let out = ridge_baseline(&a, &a, &r, &r, gamma).unwrap();
        // (1/T) rᵀ(I + (1/γ)Uᵀ{mᵀ(Wⁱ)ᵀWʲm}U)⁻² r
        let d = m_mat.t().dot(&m_mat);
        let mut inner = u.t().dot(&d).dot(&u) / gamma;
        add_diagonal(&mut inner, 1.0);
        let y = Spd::new(&inner, "t").unwrap().solve(&r);
        let explicit = y.dot(&y) / t_len as f64;
        assert!((out.train - explicit).abs() < 1e-8 * explicit);
        let big = ridge_baseline(&a, &a, &r, &r, 1e12).unwrap();
        assert!((big.train - r.dot(&r) / t_len as f64).abs() < 1e-6);
    }

    #[test]
    fn zero_readout_test_error_is_target_energy() {
        let x = Array2::<f64>::ones((3, 4));
        let r = Array1::from(vec![1.0, 2.0, 3.0, 4.0]);
        assert!((test_mse(&x, &r, &Array1::zeros(3)) - 7.5).abs() < 1e-15);
        assert!((normalized(7.5, &r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fresh_seeds_give_independent_noise() {
        let a = NoisePath::sample(5, 10, 1);
        let b = NoisePath::sample(5, 10, 2);
        assert!(a.innovations.iter().zip(b.innovations.iter()).all(|(x, y)| x != y));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn least_squares_beats_perturbations(seed in 0u64..1000, scale in 1e-3f64..1.0) {
            let res = reservoir(8, 0.6, 0.5, seed);
            let t_len = 20;
            let x = simulate_states(&res, &InputSeries::without_history(gaussian_vec(t_len, seed)), t_len, seed, Init::Stationary).unwrap();
            let r = Array1::from(gaussian_vec(t_len, seed + 1));
            let omega = train_readout(&x, &r).unwrap();
            let best = train_mse(&x, &r, &omega);
            let other = &omega + &(Array1::from(gaussian_vec(8, seed + 2)) * scale);
            prop_assert!(best <= train_mse(&x, &r, &other) + 1e-12);
        }
    }
}
