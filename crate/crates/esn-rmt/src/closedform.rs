//! Closed-form errors for ensembles whose lag profile `D` has a known limit:
//! orthogonally invariant W (Haar, multi-memory) on both sides of `c = 1`,
//! normal W through its spectral measure, and a few structured special cases.
//!
//! Lag matrices follow the crate convention `u[[j, t]] = u_{t−j}/√T`.

use ndarray::{s, Array1, Array2, ArrayView2};
use serde::Serialize;

use crate::deteq::{fixed_point, ToeplitzInverse, ToeplitzKernel, SolverSettings, Regime};
use crate::ensembles::{Ensemble, MemoryMode, SpectralMeasure};
use crate::error::{Error, Result};
use crate::gram::{input_columns, GramFamily};
use crate::linalg::{add_diagonal, symmetrize, Spd};

/// Profile entries at or below this value are treated as inactive.
pub const PROFILE_FLOOR: f64 = 1e-14;

/// Relative floor for the columns `W^j m` entering finite-W profiles.
const COLUMN_FLOOR: f64 = 1e-20;

/// Asymptotically diagonal lag profile `D_ii`, `i = 1..max(T, T̂)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalProfile {
    pub entries: Vec<f64>,
    pub t_len: usize,
    pub t_hat: usize,
    pub ensemble: &'static str,
    /// `D₂` of the c>1 test error, when it is known in closed form.
    pub second: Option<Vec<f64>>,
}

impl DiagonalProfile {
    pub fn train(&self) -> &[f64] {
        &self.entries[..self.t_len]
    }

    pub fn test(&self) -> &[f64] {
        &self.entries[..self.t_hat]
    }

    /// Number of leading entries above [`PROFILE_FLOOR`].
    pub fn active(&self) -> usize {
        active_len(&self.entries)
    }
}

fn active_len(d: &[f64]) -> usize {
    d.iter().rposition(|&v| v > PROFILE_FLOOR).map_or(0, |i| i + 1)
}

/// Lag profile either in diagonal limit form or as the dense matrix
/// `{mᵀ(Wⁱ)ᵀ K Wʲ m}` of one connectivity matrix, on its leading lags.
#[derive(Clone, Debug)]
pub enum LagProfile {
    Diagonal(Vec<f64>),
    Dense(Array2<f64>),
}

impl LagProfile {
    fn len(&self) -> usize {
        match self {
            LagProfile::Diagonal(d) => d.len(),
            LagProfile::Dense(d) => d.nrows(),
        }
    }

    /// `leftᵀ D right` with `left`, `right` lag matrices (rows are lags).
    fn sandwich(&self, left: &Array2<f64>, right: &Array2<f64>) -> Array2<f64> {
        let l = self.len().min(left.nrows()).min(right.nrows());
        let (a, b) = (left.slice(s![..l, ..]), right.slice(s![..l, ..]));
        match self {
            LagProfile::Diagonal(d) => {
                let mut scaled = b.to_owned();
                for (i, mut row) in scaled.rows_mut().into_iter().enumerate() {
                    row *= d[i];
                }
                a.t().dot(&scaled)
            }
            LagProfile::Dense(d) => a.t().dot(&d.slice(s![..l, ..l]).dot(&b)),
        }
    }
}

/// Training and test lag matrices with their targets.
#[derive(Clone, Copy, Debug)]
pub struct TaskMatrices<'a> {
    pub u: &'a Array2<f64>,
    pub u_hat: &'a Array2<f64>,
    pub r: &'a Array1<f64>,
    pub r_hat: &'a Array1<f64>,
}

impl TaskMatrices<'_> {
    fn check(&self) -> Result<()> {
        if self.u.ncols() != self.r.len() {
            return Err(Error::invalid("U", "column count must match the training target length"));
        }
        if self.u_hat.ncols() != self.r_hat.len() {
            return Err(Error::invalid("U_hat", "column count must match the test target length"));
        }
        Ok(())
    }
}

fn check_under(c: f64) -> Result<()> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::invalid("c", format!("expected 0 <= c < 1, got {c}")));
    }
    Ok(())
}

fn check_over(c: f64) -> Result<()> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::invalid("c", format!("expected c > 1, got {c}")));
    }
    Ok(())
}

fn check_eta(eta2: f64) -> Result<()> {
    if !(eta2 > 0.0 && eta2.is_finite()) {
        return Err(Error::invalid("eta2", "noise variance must be positive"));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::invalid("sigma", format!("must lie in (0, 1), got {sigma}")));
    }
    Ok(())
}

fn haar_entries(sigma: f64, len: usize) -> Vec<f64> {
    let s2 = sigma * sigma;
    (0..len).map(|i| (1.0 - s2) * s2.powi(i as i32)).collect()
}

fn multimemory_entries(modes: &[MemoryMode], len: usize) -> Vec<f64> {
    let load: f64 = modes.iter().map(|md| md.fraction / (1.0 - md.sigma * md.sigma)).sum();
    (0..len)
        .map(|i| modes.iter().map(|md| md.fraction * (md.sigma * md.sigma).powi(i as i32)).sum::<f64>() / load)
        .collect()
}

/// Limit profile of an asymptotically diagonal ensemble.
///
/// Multi-memory uses the mode-averaged form
/// `Σ_j c_j σ_j^{2(i−1)} / Σ_j c_j (1−σ_j²)⁻¹`; see [`block_profile`] for the
/// per-block limit of `mᵀ(Wⁱ)ᵀS₀⁻¹Wⁱm`. For c>1 only the Haar case has a
/// closed profile; the `c·η²` rescaling is applied by [`test_mse_haar_c_gt1`].
pub fn invariant_profile(ensemble: &Ensemble, t_len: usize, t_hat: usize, regime: Regime) -> Result<DiagonalProfile> {
    let len = t_len.max(t_hat);
    if t_len == 0 || t_hat == 0 {
        return Err(Error::invalid("T", "lengths must be positive"));
    }
    let (entries, tag) = match (ensemble, regime) {
        (Ensemble::HaarScaled { sigma }, _) => {
            check_sigma(*sigma)?;
            (haar_entries(*sigma, len), "haar_scaled")
        }
        (Ensemble::MultiMemory { modes }, Regime::Under) => {
            check_modes(modes)?;
            (multimemory_entries(modes, len), "multi_memory")
        }
        _ => {
            return Err(Error::invalid(
                "ensemble",
                "no closed diagonal profile for this ensemble and regime; use the fixed-W solver",
            ))
        }
    };
    Ok(DiagonalProfile { entries, t_len, t_hat, ensemble: tag, second: None })
}

fn check_modes(modes: &[MemoryMode]) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::invalid("modes", "at least one memory mode is required"));
    }
    if modes.iter().any(|md| !(md.sigma > 0.0 && md.sigma < 1.0) || !(md.fraction > 0.0)) {
        return Err(Error::invalid("modes", "each mode needs 0 < sigma < 1 and a positive fraction"));
    }
    Ok(())
}

/// Per-block limit `D_ii = Σ_j c_j (1−σ_j²) σ_j^{2(i−1)}` of the c<1 profile
/// `mᵀ(Wⁱ)ᵀS₀⁻¹Wⁱm` for block-diagonal Haar W and a random unit `m`.
pub fn block_profile(modes: &[MemoryMode], len: usize) -> Result<Vec<f64>> {
    check_modes(modes)?;
    let total: f64 = modes.iter().map(|md| md.fraction).sum();
    Ok((0..len)
        .map(|i| {
            modes
                .iter()
                .map(|md| {
                    let s2 = md.sigma * md.sigma;
                    md.fraction / total * (1.0 - s2) * s2.powi(i as i32)
                })
                .sum()
        })
        .collect())
}

/// Closed memory curve `MC(τ)` (delay τ = 0, 1, …) for c<1.
pub fn mc_closed(ensemble: &Ensemble, c: f64, tau: usize) -> Result<f64> {
    check_under(c)?;
    let d = match ensemble {
        Ensemble::HaarScaled { sigma } => {
            check_sigma(*sigma)?;
            haar_entries(*sigma, tau + 1)[tau]
        }
        Ensemble::MultiMemory { modes } => {
            check_modes(modes)?;
            multimemory_entries(modes, tau + 1)[tau]
        }
        _ => return Err(Error::invalid("ensemble", "closed memory curve needs a Haar or multi-memory ensemble")),
    };
    Ok(d / (1.0 - c))
}

/// `P r` with `P = (I + scale·G)⁻¹`, `G` symmetric nonnegative.
fn resolvent_apply(g: &Array2<f64>, scale: f64, r: &Array1<f64>) -> Result<Array1<f64>> {
    let mut a = g * scale;
    add_diagonal(&mut a, 1.0);
    symmetrize(&mut a);
    Ok(Spd::new(&a, "I + U^T D U / eta^2")?.solve(r))
}

/// `‖scale·cross·Pr/√T − r̂/√T̂‖²`
fn deviation(cross: &Array2<f64>, scale: f64, pr: &Array1<f64>, task: &TaskMatrices<'_>) -> f64 {
    let tf = task.r.len() as f64;
    let t_hat = task.r_hat.len() as f64;
    let fit = cross.dot(pr) * (scale / tf.sqrt()) - task.r_hat / t_hat.sqrt();
    fit.dot(&fit)
}

/// `(1−c)(1/T) rᵀ(I + η⁻²UᵀDU)⁻¹r`
pub fn train_mse_inv_c_lt1(d: &[f64], u: &Array2<f64>, r: &Array1<f64>, eta2: f64, c: f64) -> Result<f64> {
    train_mse_inv_profile(&LagProfile::Diagonal(d.to_vec()), u, r, eta2, c)
}

/// Same as [`train_mse_inv_c_lt1`] for any lag profile.
pub fn train_mse_inv_profile(d: &LagProfile, u: &Array2<f64>, r: &Array1<f64>, eta2: f64, c: f64) -> Result<f64> {
    check_under(c)?;
    check_eta(eta2)?;
    if u.ncols() != r.len() {
        return Err(Error::invalid("U", "column count must match the target length"));
    }
    let pr = resolvent_apply(&d.sandwich(u, u), 1.0 / eta2, r)?;
    Ok((1.0 - c) * r.dot(&pr) / r.len() as f64)
}

/// Three-term test error of the invariant c<1 limit: deviation term,
/// `(1−c)⁻¹` resolvent term, minus the squared-resolvent term.
pub fn test_mse_inv_c_lt1(d: &[f64], task: &TaskMatrices<'_>, eta2: f64, c: f64) -> Result<f64> {
    test_mse_inv_profile(&LagProfile::Diagonal(d.to_vec()), task, eta2, c)
}

pub fn test_mse_inv_profile(d: &LagProfile, task: &TaskMatrices<'_>, eta2: f64, c: f64) -> Result<f64> {
    check_under(c)?;
    check_eta(eta2)?;
    task.check()?;
    let tf = task.r.len() as f64;
    let pr = resolvent_apply(&d.sandwich(task.u, task.u), 1.0 / eta2, task.r)?;
    let cross = d.sandwich(task.u_hat, task.u);
    Ok(deviation(&cross, 1.0 / eta2, &pr, task) + task.r.dot(&pr) / ((1.0 - c) * tf) - pr.dot(&pr) / tf)
}

/// Root of `1 = c·(1/n) tr S₀(αI + S₀)⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaSolution {
    pub alpha: f64,
    pub residual: f64,
}

/// Solve for α by bisection over `(0, c·mean(s)]`. `spectrum` holds
/// eigenvalues of S₀ with their weights (equal weights for a finite matrix).
pub fn solve_alpha(spectrum: &[(f64, f64)], c: f64) -> Result<AlphaSolution> {
    check_over(c)?;
    if spectrum.is_empty() || spectrum.iter().any(|&(s, w)| !(s > 0.0) || !(w >= 0.0)) {
        return Err(Error::invalid("spectrum", "S0 eigenvalues must be positive with nonnegative weights"));
    }
    let total: f64 = spectrum.iter().map(|a| a.1).sum();
    let f = |alpha: f64| c * spectrum.iter().map(|&(s, w)| w * s / (alpha + s)).sum::<f64>() / total - 1.0;
    let mean = spectrum.iter().map(|&(s, w)| w * s).sum::<f64>() / total;
    let (mut lo, mut hi) = (0.0, c * mean);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let residual = f(alpha).abs();
    if residual > 1e-12 {
        return Err(Error::NonConvergence { what: "alpha bisection", iterations: 200, residual });
    }
    Ok(AlphaSolution { alpha, residual })
}

/// α for the S₀ of one connectivity matrix.
pub fn solve_alpha_gram(gram: &GramFamily, c: f64) -> Result<AlphaSolution> {
    let spec: Vec<(f64, f64)> = gram.s0_spectrum()?.into_iter().map(|s| (s, 1.0)).collect();
    solve_alpha(&spec, c)
}

/// Profiles of the c>1 invariant test error: `D`, `D₂` and the scalar
/// `1 − c·(1/n) tr S₀²(αI+S₀)⁻²`.
#[derive(Clone, Debug)]
pub struct OverProfiles {
    pub alpha: AlphaSolution,
    pub d: LagProfile,
    pub d2: LagProfile,
    pub denominator: f64,
}

/// Diagonal c>1 limit profiles of block-diagonal Haar W (k = 1 is plain Haar).
pub fn over_profiles_multimemory(modes: &[MemoryMode], c: f64, len: usize) -> Result<OverProfiles> {
    check_modes(modes)?;
    let total: f64 = modes.iter().map(|md| md.fraction).sum();
    let atoms: Vec<(f64, f64, f64)> = modes
        .iter()
        .map(|md| (1.0 / (1.0 - md.sigma * md.sigma), md.fraction / total, md.sigma * md.sigma))
        .collect();
    let alpha = solve_alpha(&atoms.iter().map(|a| (a.0, a.1)).collect::<Vec<_>>(), c)?;
    let al = alpha.alpha;
    let profile = |weight: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (0..len)
            .map(|i| atoms.iter().map(|&(s, w, s2)| w * s2.powi(i as i32) * weight(s)).sum())
            .collect()
    };
    let d = profile(&|s| 1.0 / (al + s));
    let d2 = profile(&|s| s / ((al + s) * (al + s)));
    let denominator = 1.0 - c * atoms.iter().map(|&(s, w, _)| w * s * s / ((al + s) * (al + s))).sum::<f64>();
    Ok(OverProfiles { alpha, d: LagProfile::Diagonal(d), d2: LagProfile::Diagonal(d2), denominator })
}

/// Dense c>1 profiles `{mᵀ(Wⁱ)ᵀ K Wʲ m}` with `K = (αI+S₀)⁻¹` and
/// `K S₀ K` for one connectivity matrix, over `len` leading lags.
pub fn over_profiles_gram(gram: &GramFamily, m: &Array1<f64>, c: f64, len: usize) -> Result<OverProfiles> {
    let alpha = solve_alpha_gram(gram, c)?;
    let mut shifted = gram.s0().clone();
    add_diagonal(&mut shifted, alpha.alpha);
    let k = Spd::new(&shifted, "alpha I + S0")?.inverse();
    let ks0k = k.dot(gram.s0()).dot(&k);
    let cols = input_columns(gram.w(), m, len, COLUMN_FLOOR);
    let kc = k.dot(&cols);
    let d = cols.t().dot(&kc);
    let d2 = cols.t().dot(&ks0k.dot(&cols));
    let n = gram.n() as f64;
    let denominator = 1.0 - c * (&ks0k * gram.s0()).sum() / n;
    Ok(OverProfiles { alpha, d: LagProfile::Dense(d), d2: LagProfile::Dense(d2), denominator })
}

/// c>1 invariant test error:
/// `‖η⁻²ÛᵀD̂U P r/√T − r̂/√T̂‖² − (1/T)rᵀP²r + (1/T)rᵀP(I+η⁻²UᵀD₂U)P r / den`,
/// `P = (I + η⁻²UᵀDU)⁻¹`.
///
/// The middle term carries the squared resolvent; with it the Haar case
/// reduces exactly to [`test_mse_haar_c_gt1`].
pub fn test_mse_over_profiles(p: &OverProfiles, task: &TaskMatrices<'_>, eta2: f64) -> Result<f64> {
    check_eta(eta2)?;
    task.check()?;
    if !(p.denominator > 0.0) {
        return Err(Error::invalid("denominator", "1 - c tr S0^2 (alpha I + S0)^-2 / n must be positive"));
    }
    let tf = task.r.len() as f64;
    let pr = resolvent_apply(&p.d.sandwich(task.u, task.u), 1.0 / eta2, task.r)?;
    let cross = p.d.sandwich(task.u_hat, task.u);
    let g2 = p.d2.sandwich(task.u, task.u);
    let mid = pr.dot(&pr) + pr.dot(&g2.dot(&pr)) / eta2;
    Ok(deviation(&cross, 1.0 / eta2, &pr, task) - pr.dot(&pr) / tf + mid / (tf * p.denominator))
}

/// Full c>1 invariant test error using the S₀ and `W^j m` of one matrix.
pub fn test_mse_inv_c_gt1(gram: &GramFamily, m: &Array1<f64>, task: &TaskMatrices<'_>, eta2: f64, c: f64) -> Result<f64> {
    let len = task.u.nrows().max(task.u_hat.nrows());
    let p = over_profiles_gram(gram, m, c, len)?;
    test_mse_over_profiles(&p, task, eta2)
}

/// Haar shortcut for c>1, `D` being the c<1 profile `mᵀ(Wⁱ)ᵀS₀⁻¹Wʲm`:
/// `‖(cη²)⁻¹ÛᵀD̂U P r/√T − r̂/√T̂‖² + (c−1)⁻¹(1/T)rᵀP r`, `P = (I + (cη²)⁻¹UᵀDU)⁻¹`.
pub fn test_mse_haar_c_gt1(d: &LagProfile, task: &TaskMatrices<'_>, eta2: f64, c: f64) -> Result<f64> {
    check_over(c)?;
    check_eta(eta2)?;
    task.check()?;
    let tf = task.r.len() as f64;
    let scale = 1.0 / (c * eta2);
    let pr = resolvent_apply(&d.sandwich(task.u, task.u), scale, task.r)?;
    let cross = d.sandwich(task.u_hat, task.u);
    Ok(deviation(&cross, scale, &pr, task) + task.r.dot(&pr) / ((c - 1.0) * tf))
}

/// Dense profile `{mᵀ(Wⁱ)ᵀS₀⁻¹Wʲm}` over `len` leading lags.
pub fn lag_profile_gram(gram: &GramFamily, m: &Array1<f64>, len: usize) -> Result<LagProfile> {
    let cols = input_columns(gram.w(), m, len, COLUMN_FLOOR);
    let spd = Spd::new(gram.s0(), "S0")?;
    let mut sol = Array2::<f64>::zeros(cols.raw_dim());
    for (j, col) in cols.columns().into_iter().enumerate() {
        sol.column_mut(j).assign(&spd.solve(&col.to_owned()));
    }
    let mut d = cols.t().dot(&sol);
    symmetrize(&mut d);
    Ok(LagProfile::Dense(d))
}

/// Fisher memory `f(k) = η⁻² mᵀ(Wᵏ)ᵀS₀⁻¹Wᵏm`.
pub fn fisher_memory(gram: &GramFamily, m: &Array1<f64>, k: usize, eta2: f64) -> Result<f64> {
    check_eta(eta2)?;
    if m.len() != gram.n() {
        return Err(Error::invalid("m", format!("expected length {}", gram.n())));
    }
    let mut x = m.clone();
    for _ in 0..k {
        x = gram.w().dot(&x);
    }
    let y = Spd::new(gram.s0(), "S0")?.solve(&x);
    Ok(x.dot(&y) / eta2)
}

/// Solution of the normal-W kernel equation.
#[derive(Clone, Debug)]
pub struct NormalKernel {
    pub kernel: ToeplitzKernel,
    /// `Σ_q (1/T) tr(J^q (I+𝓡)⁻¹) t^{|q|}` at each quadrature node.
    pub denominators: Vec<(f64, f64)>,
    pub iterations: usize,
    pub residual: f64,
}

/// `Σ_q φ_q t^{|q|}` with `φ_{−q} = φ_q`.
fn lag_series(phi: &[f64], t: f64) -> f64 {
    let mut acc = phi[0];
    let mut p = 1.0;
    for v in &phi[1..] {
        p *= t;
        acc += 2.0 * v * p;
    }
    acc
}

/// Solve `𝓡_ab = c ∫ t^{|a−b|} μ(dt) / Σ_q (1/T) tr(J^q (I+𝓡)⁻¹) t^{|q|}`.
///
/// For symmetric μ the odd lags are fixed at zero.
pub fn normal_kernel_solver(mu: &SpectralMeasure, c: f64, t_len: usize, settings: &SolverSettings) -> Result<NormalKernel> {
    check_under(c)?;
    mu.validate()?;
    settings.validate()?;
    if t_len == 0 {
        return Err(Error::invalid("T", "length must be positive"));
    }
    let nodes = mu.nodes();
    let radius = nodes.iter().map(|n| n.0.abs()).fold(0.0f64, f64::max);
    let tol = settings.band_tol.max(1e-300);
    let count = if radius == 0.0 {
        1
    } else {
        ((tol.ln() / radius.ln()).ceil() as usize + 1).clamp(1, t_len)
    };
    let symmetric = mu.is_symmetric();
    let phi_of = |k: &[f64]| -> Result<Vec<f64>> {
        let mut col = k.to_vec();
        col[0] += 1.0;
        let sums = ToeplitzInverse::new(&col, t_len)?.diagonal_sums(count);
        Ok(sums.into_iter().map(|v| v / t_len as f64).collect())
    };
    let map = |k: &[f64]| -> Result<Vec<f64>> {
        let phi = phi_of(k)?;
        let den: Vec<f64> = nodes.iter().map(|&(t, _)| lag_series(&phi, t)).collect();
        Ok((0..count)
            .map(|q| {
                if symmetric && q % 2 == 1 {
                    return 0.0;
                }
                c * nodes.iter().zip(&den).map(|(&(t, w), d)| w * t.powi(q as i32) / d).sum::<f64>()
            })
            .collect())
    };
    let mut start = vec![0.0; count];
    start[0] = c / (1.0 - c);
    let fp = fixed_point::solve("normal-W kernel equation", start, map, &settings.iteration())?;
    let phi = phi_of(&fp.x)?;
    let denominators = nodes.iter().map(|&(t, _)| (t, lag_series(&phi, t))).collect();
    Ok(NormalKernel {
        kernel: ToeplitzKernel::new(fp.x, t_len),
        denominators,
        iterations: fp.iterations,
        residual: fp.residual,
    })
}

/// Vectors `v = (1,0,σ²,0,σ⁴,…)` and `w = (0,σ,0,σ³,…)` with
/// `{σ^{i+j} δ_{|i−j| even}} = vvᵀ + wwᵀ`.
pub fn checkerboard_factors(sigma: f64, len: usize) -> (Array1<f64>, Array1<f64>) {
    let mut v = Array1::<f64>::zeros(len);
    let mut w = Array1::<f64>::zeros(len);
    for i in 0..len {
        let p = sigma.powi(i as i32);
        if i % 2 == 0 {
            v[i] = p;
        } else {
            w[i] = p;
        }
    }
    (v, w)
}

/// Scalar `r₀` of the two-point measure `½(δ_σ + δ_{−σ})`, where
/// `𝓡_ab = σ^{|a−b|} r₀ δ_{|a−b| even}`.
pub fn projection_r0(sigma: f64, c: f64, t_len: usize, settings: &SolverSettings) -> Result<(f64, NormalKernel)> {
    let nk = normal_kernel_solver(&SpectralMeasure::TwoPoint { sigma }, c, t_len, settings)?;
    Ok((nk.kernel.get(0), nk))
}

/// Training error for a projection-type normal W with random unit `m`:
/// `(1/T) rᵀ(I + 𝓡 + r₀(1−σ²)/(η²c) · Uᵀ{σ^{i+j}δ_{|i−j| even}}U)⁻¹ r`.
pub fn projection_train_mse(
    sigma: f64,
    c: f64,
    u: &Array2<f64>,
    r: &Array1<f64>,
    eta2: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    check_under(c)?;
    check_eta(eta2)?;
    let t_len = r.len();
    if u.ncols() != t_len {
        return Err(Error::invalid("U", "column count must match the target length"));
    }
    if c == 0.0 {
        return Ok(r.dot(r) / t_len as f64);
    }
    let (r0, nk) = projection_r0(sigma, c, t_len, settings)?;
    let weight = r0 * (1.0 - sigma * sigma) / (eta2 * c);
    let (v, w) = checkerboard_factors(sigma, u.nrows());
    let mut low = Array2::<f64>::zeros((t_len, 2));
    low.column_mut(0).assign(&(u.t().dot(&v) * weight.sqrt()));
    low.column_mut(1).assign(&(u.t().dot(&w) * weight.sqrt()));
    // Woodbury on the Toeplitz part I + 𝓡
    let y = ToeplitzInverse::new(&nk.kernel.shifted(1.0, 1.0), t_len)?.dense();
    let yr = y.dot(r);
    let yl = y.dot(&low);
    let mut cap = low.t().dot(&yl);
    add_diagonal(&mut cap, 1.0);
    symmetrize(&mut cap);
    let corr = Spd::new(&cap, "projection capacitance")?.solve(&low.t().dot(&yr));
    Ok((r.dot(&yr) - yl.t().dot(r).dot(&corr)) / t_len as f64)
}

/// `(1−c)(‖r‖²/T − (1/T)(dᵀUr)²/(η² + ‖dᵀU‖²))` for a rank-one profile `D = ddᵀ`.
pub fn rank_one_train_mse(d: &Array1<f64>, u: &Array2<f64>, r: &Array1<f64>, eta2: f64, c: f64) -> Result<f64> {
    check_under(c)?;
    check_eta(eta2)?;
    if u.ncols() != r.len() || d.len() > u.nrows() {
        return Err(Error::invalid("U", "shape does not match d and r"));
    }
    let tf = r.len() as f64;
    let du = u.slice(s![..d.len(), ..]).t().dot(d);
    let proj = du.dot(r);
    Ok((1.0 - c) * (r.dot(r) / tf - proj * proj / (tf * (eta2 + du.dot(&du)))))
}

/// Pieces of the whitened linear-combination errors on the active block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearComboErrors {
    /// `(1−c) η² xᵀG(I+G)⁻¹x`, `x = D^{−½}b`, `G = η⁻²D^{½}UUᵀD^{½}`.
    pub train: f64,
    /// `η²/(1−c) xᵀG(I+G)⁻¹x + yᵀD^{½}ΔD^{½}y`, `y = (I+G)⁻¹x`.
    pub test: f64,
    /// `s²‖(I+G)⁻¹Gx‖²`, the contribution of impulsive input noise.
    pub impulsive: f64,
}

impl LinearComboErrors {
    pub fn test_total(&self) -> f64 {
        self.test + self.impulsive
    }
}

fn lag_gram(u: ArrayView2<f64>, size: usize) -> Array2<f64> {
    let mut g = Array2::<f64>::zeros((size, size));
    let k = size.min(u.nrows());
    let uk = u.slice(s![..k, ..]);
    g.slice_mut(s![..k, ..k]).assign(&uk.dot(&uk.t()));
    g
}

/// Errors for targets `r = √T Uᵀb`, `r̂ = √T̂ Ûᵀb̂` with `b`, `b̂` sharing
/// their leading entries, under a diagonal profile `D`.
///
/// Whitening is confined to the leading entries with `D_ii >` [`PROFILE_FLOOR`];
/// `b` must vanish beyond them. `s2` is the per-sample variance of noise added
/// to the test input.
pub fn linear_combo_test_mse(
    b: &[f64],
    d: &[f64],
    u: &Array2<f64>,
    u_hat: &Array2<f64>,
    eta2: f64,
    c: f64,
    s2: f64,
) -> Result<LinearComboErrors> {
    check_under(c)?;
    check_eta(eta2)?;
    if !(s2 >= 0.0) {
        return Err(Error::invalid("s2", "noise variance must be nonnegative"));
    }
    let k = active_len(d).min(u.nrows());
    if k == 0 {
        return Err(Error::invalid("D", "no profile entry above the floor"));
    }
    if d[..k].iter().any(|&v| !(v > PROFILE_FLOOR)) {
        return Err(Error::invalid("D", "profile entries in the active block must be positive"));
    }
    if b.iter().skip(k).any(|&v| v != 0.0) {
        return Err(Error::invalid("b", format!("coefficients beyond the {k} active lags must be zero")));
    }
    let sqrt_d: Array1<f64> = d[..k].iter().map(|v| v.sqrt()).collect();
    let x: Array1<f64> = (0..k).map(|i| b.get(i).copied().unwrap_or(0.0) / sqrt_d[i]).collect();
    let whiten = |m: Array2<f64>| {
        let mut out = m;
        for i in 0..k {
            for j in 0..k {
                out[[i, j]] *= sqrt_d[i] * sqrt_d[j];
            }
        }
        out
    };
    let uu = lag_gram(u.view(), k);
    let g = whiten(uu.clone()) / eta2;
    let y = resolvent_apply(&g, 1.0, &x)?;
    let gx_part = &x - &y; // G(I+G)⁻¹x
    let quad = x.dot(&gx_part);
    let delta = whiten(lag_gram(u_hat.view(), k) - uu);
    let dev = y.dot(&delta.dot(&y));
    Ok(LinearComboErrors {
        train: (1.0 - c) * eta2 * quad,
        test: eta2 / (1.0 - c) * quad + dev,
        impulsive: s2 * gx_part.dot(&gx_part),
    })
}

/// Training error of the τ-delay task on an AR(1) input with correlation
/// `q^{|i−j|}`: `η²(1−c)/D_{τ+1}·[1 − [(I + η⁻²{√D_i q^{|i−j|} √D_j})⁻¹]_{τ+1,τ+1}]`.
pub fn ar_delay_train_mse(d: &[f64], q_ar: f64, tau: usize, eta2: f64, c: f64) -> Result<f64> {
    check_under(c)?;
    check_eta(eta2)?;
    if !(0.0..1.0).contains(&q_ar) {
        return Err(Error::invalid("q_ar", "AR coefficient must lie in [0, 1)"));
    }
    if tau >= d.len() || !(d[tau] > PROFILE_FLOOR) {
        return Err(Error::invalid("tau", "delay lies outside the active profile"));
    }
    let k = active_len(d).max(tau + 1);
    let mut a = Array2::<f64>::from_shape_fn((k, k), |(i, j)| {
        (d[i].max(0.0) * d[j].max(0.0)).sqrt() * q_ar.powi((i as i32 - j as i32).abs()) / eta2
    });
    add_diagonal(&mut a, 1.0);
    let mut e = Array1::<f64>::zeros(k);
    e[tau] = 1.0;
    let inv_tt = Spd::new(&a, "AR delay resolvent")?.solve(&e)[tau];
    Ok(eta2 * (1.0 - c) / d[tau] * (1.0 - inv_tt))
}

/// Impulse-task value `η²(1−c)/(η² + D_{τ+1})` of the diagonal limit.
pub fn impulse_train_mse(d: &[f64], tau: usize, eta2: f64, c: f64) -> Result<f64> {
    check_under(c)?;
    check_eta(eta2)?;
    let dt = *d.get(tau).ok_or_else(|| Error::invalid("tau", "delay beyond the profile"))?;
    Ok(eta2 * (1.0 - c) / (eta2 + dt))
}

/// Estimated delay profile `b̂` and its fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayProfile {
    /// `b̂ = (UUᵀ + γI)⁻¹ U r/√T`, so that `r = √T Uᵀb` returns `b`.
    pub b_hat: Vec<f64>,
    pub gamma: f64,
}

pub fn estimate_delay_profile(u: &Array2<f64>, r: &Array1<f64>, gamma: f64) -> Result<DelayProfile> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid("gamma", "must be nonnegative"));
    }
    if u.ncols() != r.len() {
        return Err(Error::invalid("U", "column count must match the target length"));
    }
    let mut g = u.dot(&u.t());
    add_diagonal(&mut g, gamma);
    symmetrize(&mut g);
    let rhs = u.dot(r) / (r.len() as f64).sqrt();
    let b = Spd::new(&g, "U U^T + gamma I").map_err(|_| {
        Error::invalid("gamma", "U U^T is singular; use a positive regularization")
    })?;
    Ok(DelayProfile { b_hat: b.solve(&rhs).to_vec(), gamma })
}

/// Design score `Σ_i b̂_i²/D_ii` over the entries with `D_ii >` [`PROFILE_FLOOR`].
pub fn design_score(b_hat: &[f64], d: &[f64]) -> Result<f64> {
    let k = active_len(d).min(b_hat.len());
    if k == 0 {
        return Err(Error::invalid("D", "no profile entry above the floor"));
    }
    Ok((0..k).filter(|&i| d[i] > PROFILE_FLOOR).map(|i| b_hat[i] * b_hat[i] / d[i]).sum())
}

/// Haar σ minimizing the design score for `b̂_i = α^{i−1}`: `σ² = |α|`.
pub fn geometric_design_sigma(alpha: f64) -> Result<f64> {
    if !(alpha.abs() < 1.0) {
        return Err(Error::invalid("alpha", "geometric rate must lie in (-1, 1)"));
    }
    Ok(alpha.abs().sqrt())
}
