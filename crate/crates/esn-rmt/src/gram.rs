//! Lag Gram matrices `S_q = W^{(-q)+} S_0 (Wᵀ)^{q+}` of a stable connectivity matrix.
//!
//! The fixed-point solvers only ever need three things from the family:
//! weighted sums `Σ_q t_q S_q`, normalized lag traces `(1/n) tr(S_q M)`, and
//! resolvent lag traces. Three engines provide them:
//!
//! - `Normal`: W = V Λ V* with unitary V (symmetric or complex-normal W).
//!   Everything is diagonal in V, so resolvent traces cost O(nQ).
//! - `Eigen`: diagonalizable non-normal W, traces via `tr(S_q M) = Σ_a λ_a^q [V⁻¹S₀MV]_aa`.
//! - `Powers`: cached `W^q`, the reference implementation for small n.

use ndarray::{s, Array1, Array2, Axis};
use ndarray_linalg::{c64, Eig, Eigh, Inverse, UPLO};
use serde::{Deserialize, Serialize};

use crate::ensembles::is_symmetric;
use crate::error::{Error, LinalgContext, Result};
use crate::linalg::{self, frobenius, real_part_scaled_product, spd_inverse, split, symmetrize};

/// Largest cached-power family we are willing to build, in stored entries.
const POWERS_BUDGET: usize = 60_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    #[default]
    Auto,
    Normal,
    Eigen,
    Powers,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    Normal,
    Eigen,
    Powers,
}

/// Solution of `S = I + W S Wᵀ` by Smith doubling: `S ← S + A S Aᵀ`, `A ← A²`.
pub fn lyapunov_smith(w: &Array2<f64>, tol: f64) -> Result<Array2<f64>> {
    let n = w.nrows();
    let mut s = Array2::<f64>::eye(n);
    let mut a = w.clone();
    for _ in 0..64 {
        let a_norm2 = a.iter().map(|v| v * v).sum::<f64>();
        if !a_norm2.is_finite() {
            break;
        }
        if a_norm2 < 1e-2 * tol.min(1e-12) {
            symmetrize(&mut s);
            return Ok(s);
        }
        let as_ = a.dot(&s);
        s = s + as_.dot(&a.t());
        a = a.dot(&a);
    }
    Err(Error::NonConvergence {
        what: "Lyapunov doubling",
        iterations: 64,
        residual: frobenius(a.view()),
    })
}

pub fn lyapunov_residual(w: &Array2<f64>, s0: &Array2<f64>) -> f64 {
    let mut r = s0 - &w.dot(s0).dot(&w.t());
    linalg::add_diagonal(&mut r, -1.0);
    frobenius(r.view()) / frobenius(s0.view())
}

struct NormalSpectrum {
    lambda: Vec<c64>,
    /// `1 / (1 − |λ_a|²)`, the eigenvalues of `S₀`.
    s: Vec<f64>,
    v_re: Array2<f64>,
    /// `None` for symmetric W (real orthogonal eigenvectors).
    v_im: Option<Array2<f64>>,
}

struct EigenBasis {
    lambda: Vec<c64>,
    v: (Array2<f64>, Array2<f64>),
    vinv: (Array2<f64>, Array2<f64>),
    /// `V⁻¹ S₀`
    l: (Array2<f64>, Array2<f64>),
}

enum Engine {
    Normal(NormalSpectrum),
    Eigen(EigenBasis),
    Powers(Vec<Array2<f64>>),
}

/// Right-hand side `B` of the second-order equations.
#[derive(Clone, Copy, Debug)]
pub enum SecondOrderSource<'a> {
    Zero,
    S0,
    Dense(&'a Array2<f64>),
}

pub struct GramFamily {
    w: Array2<f64>,
    s0: Array2<f64>,
    q_max: usize,
    engine: Engine,
}

impl std::fmt::Debug for GramFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GramFamily")
            .field("n", &self.n())
            .field("q_max", &self.q_max)
            .field("engine", &self.engine_kind())
            .finish()
    }
}

fn check_stable(lambda: &[c64]) -> Result<()> {
    let rho = lambda.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if rho >= 1.0 {
        return Err(Error::invalid("W", format!("spectral radius {rho:.6} is not below 1")));
    }
    Ok(())
}

/// Smallest q with `f(q) < tol`, for f decreasing eventually; doubling then bisection.
fn first_below(tol: f64, cap: usize, f: impl Fn(usize) -> f64) -> usize {
    if f(0) < tol {
        return 0;
    }
    let mut hi = 1usize;
    while f(hi) >= tol {
        if hi >= cap {
            return cap;
        }
        hi = (hi * 2).min(cap);
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if f(mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

const Q_CAP: usize = 1 << 16;

impl GramFamily {
    pub fn new(w: &Array2<f64>, tol: f64) -> Result<Self> {
        Self::with_engine(w, tol, EngineChoice::Auto)
    }

    pub fn with_engine(w: &Array2<f64>, tol: f64, choice: EngineChoice) -> Result<Self> {
        let n = w.nrows();
        if n == 0 || w.ncols() != n {
            return Err(Error::invalid("W", "connectivity must be a non-empty square matrix"));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("W", "entries must be finite"));
        }
        if !(tol > 0.0) {
            return Err(Error::invalid("tol", "tolerance must be positive"));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Ok(GramFamily {
                w: w.clone(),
                s0: Array2::eye(n),
                q_max: 0,
                engine: Engine::Powers(vec![Array2::eye(n)]),
            });
        }
        let family = match choice {
            EngineChoice::Powers => Self::build_powers(w, tol)?,
            EngineChoice::Normal => match Self::try_normal(w, tol)? {
                Some(f) => f,
                None => return Err(Error::invalid("W", "matrix is not normal")),
            },
            EngineChoice::Eigen => match Self::try_eigen(w, tol)? {
                Some(f) => f,
                None => return Err(Error::invalid("W", "eigenvector basis too ill-conditioned")),
            },
            EngineChoice::Auto => match Self::try_normal(w, tol)? {
                Some(f) => f,
                None => match Self::try_eigen(w, tol)? {
                    Some(f) => f,
                    None => {
                        log::info!("falling back to cached powers for the Gram family");
                        Self::build_powers(w, tol)?
                    }
                },
            },
        };
        let residual = lyapunov_residual(w, &family.s0);
        if residual > tol.max(1e-10) {
            log::warn!("Lyapunov residual {residual:.2e} above tolerance");
        }
        Ok(family)
    }

    fn try_normal(w: &Array2<f64>, tol: f64) -> Result<Option<Self>> {
        let n = w.nrows();
        let spectrum = if is_symmetric(w) {
            let (vals, vecs) = w.eigh(UPLO::Lower).ctx("symmetric eigendecomposition")?;
            NormalSpectrum {
                lambda: vals.iter().map(|&l| c64::new(l, 0.0)).collect(),
                s: Vec::new(),
                v_re: vecs,
                v_im: None,
            }
        } else {
            let (vals, vecs) = w.eig().ctx("eigendecomposition")?;
            let (v_re, v_im) = split(&vecs);
            // V*V = (Vr' Vr + Vi' Vi) + i (Vr' Vi − Vi' Vr)
            let gram_re = v_re.t().dot(&v_re) + v_im.t().dot(&v_im);
            let gram_im = v_re.t().dot(&v_im) - v_im.t().dot(&v_re);
            let off = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let target = if i == j { 1.0 } else { 0.0 };
                    (gram_re[[i, j]] - target).abs().max(gram_im[[i, j]].abs())
                })
                .fold(0.0f64, f64::max);
            if off > 1e-10 {
                return Ok(None);
            }
            NormalSpectrum { lambda: vals.to_vec(), s: Vec::new(), v_re, v_im: Some(v_im) }
        };
        check_stable(&spectrum.lambda)?;
        let s: Vec<f64> = spectrum.lambda.iter().map(|l| 1.0 / (1.0 - l.norm_sqr())).collect();
        let spectrum = NormalSpectrum { s, ..spectrum };
        let s0 = spectrum.dense(&spectrum.s);
        let q_max = first_below(tol, Q_CAP, |q| {
            spectrum.lambda.iter().map(|l| l.norm_sqr().powi(q as i32)).sum::<f64>()
        });
        Ok(Some(GramFamily { w: w.clone(), s0, q_max, engine: Engine::Normal(spectrum) }))
    }

    fn try_eigen(w: &Array2<f64>, tol: f64) -> Result<Option<Self>> {
        let n = w.nrows();
        let (vals, vecs) = w.eig().ctx("eigendecomposition")?;
        check_stable(vals.as_slice().unwrap())?;
        let vinv = match vecs.inv() {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        let v = split(&vecs);
        let vi = split(&vinv);
        let lambda: Vec<c64> = vals.to_vec();
        let recon = real_part_scaled_product((&v.0, &v.1), &lambda, (&vi.0, &vi.1));
        let err = frobenius((&recon - w).view()) / frobenius(w.view());
        if !(err < 1e-9) {
            log::info!("eigenbasis reconstruction error {err:.2e}, rejecting eigen engine");
            return Ok(None);
        }
        // S₀ = V C V* with C_ab = [V⁻¹V⁻*]_ab / (1 − λ_a λ̄_b); then refine to the
        // Lyapunov tolerance by doubling when V is poorly conditioned.
        let g2 = cmul(&vi, &adjoint(&vi));
        let mut c = g2;
        for a in 0..n {
            for b in 0..n {
                let d = c64::new(1.0, 0.0) - lambda[a] * lambda[b].conj();
                let z = c64::new(c.0[[a, b]], c.1[[a, b]]) / d;
                c.0[[a, b]] = z.re;
                c.1[[a, b]] = z.im;
            }
        }
        let vh = adjoint(&v);
        let mut s0 = cmul(&v, &cmul(&c, &vh)).0;
        symmetrize(&mut s0);
        let residual = lyapunov_residual(w, &s0);
        let l = if residual <= tol.max(1e-10) {
            cmul(&c, &vh)
        } else {
            log::info!("spectral S0 residual {residual:.2e}, refining by doubling");
            s0 = lyapunov_smith(w, tol)?;
            (vi.0.dot(&s0), vi.1.dot(&s0))
        };
        // ‖W^q‖_F² = tr(Λ^q G₂ Λ̄^q G₁), G₁ = V*V, G₂ = V⁻¹V⁻*
        let g1 = cmul(&vh, &v);
        let g2 = cmul(&vi, &adjoint(&vi));
        let q_max = first_below(tol, Q_CAP, |q| {
            let pw: Vec<c64> = lambda.iter().map(|l| l.powu(q as u32)).collect();
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let x = pw[a] * c64::new(g2.0[[a, b]], g2.1[[a, b]]) * pw[b].conj()
                        * c64::new(g1.0[[b, a]], g1.1[[b, a]]);
                    acc += x.re;
                }
            }
            acc
        });
        Ok(Some(GramFamily {
            w: w.clone(),
            s0,
            q_max,
            engine: Engine::Eigen(EigenBasis { lambda, v, vinv: vi, l }),
        }))
    }

    fn build_powers(w: &Array2<f64>, tol: f64) -> Result<Self> {
        let n = w.nrows();
        let s0 = lyapunov_smith(w, tol)?;
        let mut powers = vec![Array2::<f64>::eye(n)];
        loop {
            let last = powers.last().unwrap();
            let norm2: f64 = last.iter().map(|v| v * v).sum();
            if norm2 < tol {
                break;
            }
            if !norm2.is_finite() || (powers.len() + 1) * n * n > POWERS_BUDGET {
                return Err(Error::NonConvergence {
                    what: "Gram power cache",
                    iterations: powers.len(),
                    residual: norm2,
                });
            }
            let next = w.dot(last);
            powers.push(next);
        }
        let q_max = powers.len() - 1;
        Ok(GramFamily { w: w.clone(), s0, q_max, engine: Engine::Powers(powers) })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn s0(&self) -> &Array2<f64> {
        &self.s0
    }

    /// Bandwidth: smallest q with `‖W^q‖_F² < tol`.
    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn engine_kind(&self) -> EngineKind {
        match self.engine {
            Engine::Normal(_) => EngineKind::Normal,
            Engine::Eigen(_) => EngineKind::Eigen,
            Engine::Powers(_) => EngineKind::Powers,
        }
    }

    pub fn lyapunov_residual(&self) -> f64 {
        lyapunov_residual(&self.w, &self.s0)
    }

    /// Eigenvalues of S₀ (ascending for the dense path).
    pub fn s0_spectrum(&self) -> Result<Vec<f64>> {
        match &self.engine {
            Engine::Normal(ns) => Ok(ns.s.clone()),
            _ => {
                use ndarray_linalg::EigValsh;
                Ok(self.s0.eigvalsh(UPLO::Lower).ctx("S0 spectrum")?.to_vec())
            }
        }
    }

    pub fn power(&self, q: usize) -> Array2<f64> {
        if let Engine::Powers(p) = &self.engine {
            if q < p.len() {
                return p[q].clone();
            }
        }
        let mut out = Array2::<f64>::eye(self.n());
        for _ in 0..q {
            out = self.w.dot(&out);
        }
        out
    }

    /// Dense `S_q`.
    pub fn s_q(&self, q: isize) -> Array2<f64> {
        let wq = self.power(q.unsigned_abs());
        if q >= 0 {
            self.s0.dot(&wq.t())
        } else {
            wq.dot(&self.s0)
        }
    }

    /// `Σ_{|q|≤len−1} t_{|q|} S_q` for a symmetric coefficient sequence `t`.
    pub fn weighted_sum(&self, t: &[f64]) -> Array2<f64> {
        let t0 = t.first().copied().unwrap_or(0.0);
        let mut out = match &self.engine {
            Engine::Normal(ns) => {
                let d: Vec<f64> = (0..ns.lambda.len())
                    .map(|a| ns.s[a] * phi(t, ns.lambda[a]))
                    .collect();
                ns.dense(&d)
            }
            Engine::Eigen(eb) => {
                let psi: Vec<c64> = eb.lambda.iter().map(|&l| tail_poly(t, l)).collect();
                let p = real_part_scaled_product((&eb.v.0, &eb.v.1), &psi, (&eb.vinv.0, &eb.vinv.1));
                let ps = p.dot(&self.s0);
                &ps + &ps.t() + &self.s0 * t0
            }
            Engine::Powers(powers) => {
                let mut p = Array2::<f64>::zeros((self.n(), self.n()));
                for (q, &tq) in t.iter().enumerate().skip(1) {
                    if tq != 0.0 {
                        match powers.get(q) {
                            Some(wq) => p.scaled_add(tq, wq),
                            None => break,
                        }
                    }
                }
                let ps = p.dot(&self.s0);
                &ps + &ps.t() + &self.s0 * t0
            }
        };
        symmetrize(&mut out);
        out
    }

    /// `(1/n) tr(S_q M)` for `q = 0..count`, `M` symmetric.
    pub fn lag_traces(&self, m: &Array2<f64>, count: usize) -> Vec<f64> {
        let n = self.n() as f64;
        match &self.engine {
            Engine::Normal(ns) => {
                // tr(S_q M) = Σ_a s_a λ_a^q (V* M V)_aa
                let diag = ns.quadratic_diagonal(m);
                let weights: Vec<f64> = (0..diag.len()).map(|a| ns.s[a] * diag[a]).collect();
                moment_sums(&ns.lambda, &weights, count).into_iter().map(|v| v / n).collect()
            }
            Engine::Eigen(eb) => {
                // diag(L M V)
                let lm_re = eb.l.0.dot(m);
                let lm_im = eb.l.1.dot(m);
                let nn = self.n();
                let mut diag = vec![c64::new(0.0, 0.0); nn];
                for (a, d) in diag.iter_mut().enumerate() {
                    let (mut re, mut im) = (0.0, 0.0);
                    for b in 0..nn {
                        let (xr, xi) = (lm_re[[a, b]], lm_im[[a, b]]);
                        let (vr, vi) = (eb.v.0[[b, a]], eb.v.1[[b, a]]);
                        re += xr * vr - xi * vi;
                        im += xr * vi + xi * vr;
                    }
                    *d = c64::new(re, im);
                }
                complex_moment_sums(&eb.lambda, &diag, count).into_iter().map(|v| v / n).collect()
            }
            Engine::Powers(powers) => {
                let ms = m.dot(&self.s0);
                (0..count)
                    .map(|q| match powers.get(q) {
                        Some(wq) => (wq * &ms).sum() / n,
                        None => 0.0,
                    })
                    .collect()
            }
        }
    }

    /// `(1/n) tr(S_q (shift·I + scale·Σ t S)⁻¹)` for `q = 0..count`.
    pub fn resolvent_lag_traces(&self, shift: f64, scale: f64, t: &[f64], count: usize) -> Result<Vec<f64>> {
        match &self.engine {
            Engine::Normal(ns) => {
                let n = self.n() as f64;
                let mut weights = Vec::with_capacity(ns.lambda.len());
                for a in 0..ns.lambda.len() {
                    let den = shift + scale * ns.s[a] * phi(t, ns.lambda[a]);
                    if !(den > 0.0) {
                        return Err(Error::NotPositiveDefinite("kernel resolvent"));
                    }
                    weights.push(ns.s[a] / den);
                }
                Ok(moment_sums(&ns.lambda, &weights, count).into_iter().map(|v| v / n).collect())
            }
            _ => {
                let k = self.resolvent(shift, scale, t)?;
                Ok(self.lag_traces(&k, count))
            }
        }
    }

    /// `(shift·I + scale·Σ t S)⁻¹` as a dense matrix.
    pub fn resolvent(&self, shift: f64, scale: f64, t: &[f64]) -> Result<Array2<f64>> {
        if let Engine::Normal(ns) = &self.engine {
            let mut d = Vec::with_capacity(ns.lambda.len());
            for a in 0..ns.lambda.len() {
                let den = shift + scale * ns.s[a] * phi(t, ns.lambda[a]);
                if !(den > 0.0) {
                    return Err(Error::NotPositiveDefinite("kernel resolvent"));
                }
                d.push(1.0 / den);
            }
            return Ok(ns.dense(&d));
        }
        let mut m = self.weighted_sum(t) * scale;
        linalg::add_diagonal(&mut m, shift);
        spd_inverse(&m, "kernel resolvent")
    }

    /// `(1/n) tr(S_q K (B + Σ g S) K)` with `K = (shift·I + scale·Σ t S)⁻¹`, `q = 0..count`.
    pub fn second_order_lag_traces(
        &self,
        shift: f64,
        scale: f64,
        t: &[f64],
        source: SecondOrderSource<'_>,
        g: &[f64],
        count: usize,
    ) -> Result<Vec<f64>> {
        match &self.engine {
            Engine::Normal(ns) => {
                let n = self.n() as f64;
                let beta: Vec<f64> = match source {
                    SecondOrderSource::Zero => vec![0.0; ns.lambda.len()],
                    SecondOrderSource::S0 => ns.s.clone(),
                    SecondOrderSource::Dense(b) => ns.quadratic_diagonal(b),
                };
                let mut weights = Vec::with_capacity(ns.lambda.len());
                for a in 0..ns.lambda.len() {
                    let den = shift + scale * ns.s[a] * phi(t, ns.lambda[a]);
                    if !(den > 0.0) {
                        return Err(Error::NotPositiveDefinite("kernel resolvent"));
                    }
                    let mid = beta[a] + ns.s[a] * phi(g, ns.lambda[a]);
                    weights.push(ns.s[a] * mid / (den * den));
                }
                Ok(moment_sums(&ns.lambda, &weights, count).into_iter().map(|v| v / n).collect())
            }
            _ => {
                let k = self.resolvent(shift, scale, t)?;
                let mut c = self.weighted_sum(g);
                match source {
                    SecondOrderSource::Zero => {}
                    SecondOrderSource::S0 => c += &self.s0,
                    SecondOrderSource::Dense(b) => c += b,
                }
                let mut kck = k.dot(&c).dot(&k);
                symmetrize(&mut kck);
                Ok(self.lag_traces(&kck, count))
            }
        }
    }
}

impl NormalSpectrum {
    /// `Re(V diag(d) V*)`
    fn dense(&self, d: &[f64]) -> Array2<f64> {
        let dv = Array1::from(d.to_vec());
        let scaled_re = &self.v_re * &dv.view().insert_axis(Axis(0));
        let mut out = scaled_re.dot(&self.v_re.t());
        if let Some(v_im) = &self.v_im {
            let scaled_im = v_im * &dv.view().insert_axis(Axis(0));
            out += &scaled_im.dot(&v_im.t());
        }
        symmetrize(&mut out);
        out
    }

    /// `Re(v_a* M v_a)` for every eigenvector.
    fn quadratic_diagonal(&self, m: &Array2<f64>) -> Vec<f64> {
        let mv = m.dot(&self.v_re);
        let mut out: Vec<f64> = (0..self.lambda.len())
            .map(|a| self.v_re.column(a).dot(&mv.column(a)))
            .collect();
        if let Some(v_im) = &self.v_im {
            let mvi = m.dot(v_im);
            for (a, o) in out.iter_mut().enumerate() {
                *o += v_im.column(a).dot(&mvi.column(a));
            }
        }
        out
    }
}

/// `φ_t(λ) = t₀ + 2 Re Σ_{q≥1} t_q λ^q`
fn phi(t: &[f64], lambda: c64) -> f64 {
    let t0 = t.first().copied().unwrap_or(0.0);
    t0 + 2.0 * tail_poly(t, lambda).re
}

/// `Σ_{q≥1} t_q λ^q`
fn tail_poly(t: &[f64], lambda: c64) -> c64 {
    // Horner on q = len−1 … 1
    let mut acc = c64::new(0.0, 0.0);
    for &tq in t.iter().skip(1).rev() {
        acc = (acc + tq) * lambda;
    }
    acc
}

/// `Σ_a w_a Re(λ_a^q)`, `q = 0..count`.
fn moment_sums(lambda: &[c64], w: &[f64], count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    for (l, &wa) in lambda.iter().zip(w) {
        if l.im == 0.0 {
            let mut p = wa;
            for o in out.iter_mut() {
                *o += p;
                p *= l.re;
            }
        } else {
            let mut p = c64::new(wa, 0.0);
            for o in out.iter_mut() {
                *o += p.re;
                p *= l;
            }
        }
    }
    out
}

/// `Re Σ_a d_a λ_a^q`, `q = 0..count`.
fn complex_moment_sums(lambda: &[c64], d: &[c64], count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    for (l, &da) in lambda.iter().zip(d) {
        let mut p = da;
        for o in out.iter_mut() {
            *o += p.re;
            p *= l;
        }
    }
    out
}

fn adjoint(a: &(Array2<f64>, Array2<f64>)) -> (Array2<f64>, Array2<f64>) {
    (a.0.t().to_owned(), a.1.t().mapv(|v| -v))
}

/// Complex product on split storage.
fn cmul(a: &(Array2<f64>, Array2<f64>), b: &(Array2<f64>, Array2<f64>)) -> (Array2<f64>, Array2<f64>) {
    let re = a.0.dot(&b.0) - a.1.dot(&b.1);
    let im = a.0.dot(&b.1) + a.1.dot(&b.0);
    (re, im)
}

/// Columns `W^j m`, `j = 0..`, stopping once the norm falls below
/// `floor · ‖m‖` (or at `max_cols`).
pub fn input_columns(w: &Array2<f64>, m: &Array1<f64>, max_cols: usize, floor: f64) -> Array2<f64> {
    let n = w.nrows();
    let m_norm = m.dot(m).sqrt();
    let mut cols: Vec<Array1<f64>> = Vec::new();
    let mut x = m.clone();
    while cols.len() < max_cols {
        let norm = x.dot(&x).sqrt();
        cols.push(x.clone());
        if norm <= floor * m_norm {
            break;
        }
        x = w.dot(&x);
    }
    let mut out = Array2::<f64>::zeros((n, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        out.slice_mut(s![.., j]).assign(c);
    }
    out
}
