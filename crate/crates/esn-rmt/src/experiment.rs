//! Batch experiments behind the `esn-rmt` binary: η² sweeps, memory curves,
//! σ design and ensemble comparison.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closedform::{
    self, block_profile, design_score, estimate_delay_profile, geometric_design_sigma, invariant_profile,
    over_profiles_multimemory, test_mse_haar_c_gt1, test_mse_inv_c_lt1, test_mse_over_profiles, train_mse_inv_c_lt1,
    LagProfile, TaskMatrices, PROFILE_FLOOR,
};
use crate::csvio::{write_csv_atomic, write_results_csv, write_table_atomic, ResultRow};
use crate::deteq::{
    memory_curve, solve_prop1, solve_prop2, test_mse_deteq, train_mse_deteq, EquivalentPair, Regime,
    SecondOrderPair, SolverSettings, TestTask,
};
use crate::ensembles::{sample_connectivity, sample_input_weights, Ensemble, InputWeights, MatrixSpec};
use crate::error::{Error, Result};
use crate::esn::{lag_matrix, normalized, simulate_states, test_mse, train_mse, train_readout, Init, InputSeries, Reservoir};
use crate::gram::{GramFamily, SecondOrderSource};
use crate::tasks::{build_task, pollute_input, Episode, TaskSpec};

const GRAM_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eta2Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for Eta2Grid {
    fn default() -> Self {
        Eta2Grid { min: 1e-5, max: 10.0, points: 25 }
    }
}

impl Eta2Grid {
    /// Log-spaced values from `min` to `max`.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let (a, b) = (self.min.ln(), self.max.ln());
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    self.min
                } else if i + 1 == self.points {
                    self.max
                } else {
                    (a + (b - a) * i as f64 / (self.points - 1) as f64).exp()
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.min > 0.0) || !(self.max >= self.min) || !self.max.is_finite() {
            return Err(Error::Config(format!("eta2 grid needs 0 < min <= max, got [{}, {}]", self.min, self.max)));
        }
        if self.points == 0 {
            return Err(Error::Config("eta2 grid needs at least one point".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryPaths {
    #[serde(rename = "fixedW", alias = "fixed_w")]
    FixedW,
    Limit,
    #[default]
    Both,
    None,
}

impl TheoryPaths {
    fn fixed_w(self) -> bool {
        matches!(self, TheoryPaths::FixedW | TheoryPaths::Both)
    }
    fn limit(self) -> bool {
        matches!(self, TheoryPaths::Limit | TheoryPaths::Both)
    }
}

/// Impulsive Gaussian pollution of the test input; targets stay clean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestNoise {
    pub p: f64,
    pub s2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemorySettings {
    pub tau_max: usize,
    pub eta2_probe: f64,
    /// Independent W draws averaged per τ.
    pub w_draws: usize,
}

impl Default for MemorySettings {
    fn default() -> Self {
        MemorySettings { tau_max: 10, eta2_probe: 1e-8, w_draws: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSettings {
    /// Haar σ values to score.
    pub candidates: Vec<f64>,
    /// Geometric rate of a known profile; adds `√|α|` to the candidates.
    pub alpha: Option<f64>,
    /// Regularization of the `b̂` estimate.
    pub gamma: f64,
    /// `b̂` entries below this fraction of `max|b̂|` are treated as zero.
    pub b_floor: f64,
    /// Noise level of the reported test NMSE.
    pub eta2: f64,
}

impl Default for DesignSettings {
    fn default() -> Self {
        DesignSettings { candidates: vec![0.3, 0.5, 0.7], alpha: None, gamma: 1e-10, b_floor: 1e-8, eta2: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Connectivity; `matrix.seed` drives W and nothing else.
    pub matrix: MatrixSpec,
    #[serde(default)]
    pub input_weights: InputWeights,
    pub task: TaskSpec,
    #[serde(default)]
    pub eta2_grid: Eta2Grid,
    #[serde(default = "one")]
    pub trials: usize,
    /// Seed for m, the task, test pollution and network noise.
    pub seed: u64,
    #[serde(default)]
    pub theory: TheoryPaths,
    #[serde(default = "yes")]
    pub monte_carlo: bool,
    #[serde(default)]
    pub init: Init,
    /// Draw a new W for every trial instead of one per experiment.
    #[serde(default)]
    pub redraw_w: bool,
    #[serde(default)]
    pub test_noise: Option<TestNoise>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub memory: MemorySettings,
    #[serde(default)]
    pub design: DesignSettings,
    /// Column prefix in `compare` output.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        // an unreadable config is a configuration error, not an I/O failure
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.matrix.validate().map_err(cfg_err)?;
        self.task.validate().map_err(cfg_err)?;
        self.eta2_grid.validate()?;
        self.solver.validate().map_err(cfg_err)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.matrix.n == self.task.t_len {
            return Err(Error::Config("n = T is excluded (c = 1)".into()));
        }
        if let Some(noise) = &self.test_noise {
            if !(0.0..=1.0).contains(&noise.p) || !(noise.s2 >= 0.0) {
                return Err(Error::Config("test_noise needs p in [0, 1] and s2 >= 0".into()));
            }
        }
        if !(self.memory.eta2_probe > 0.0) || self.memory.w_draws == 0 {
            return Err(Error::Config("memory needs eta2_probe > 0 and w_draws >= 1".into()));
        }
        Ok(())
    }

    pub fn c(&self) -> f64 {
        self.matrix.n as f64 / self.task.t_len as f64
    }

    fn regime(&self) -> Result<Regime> {
        Regime::from_ratio(self.c())
    }
}

/// Independent sub-seed `index` of stream `stream`.
pub fn sub_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

const STREAM_M: u64 = 1;
const STREAM_TASK: u64 = 2;
const STREAM_POLLUTION: u64 = 3;
const STREAM_TRAIN_NOISE: u64 = 4;
const STREAM_TEST_NOISE: u64 = 5;
const STREAM_W: u64 = 6;

/// Connectivity, input weights and Gram family of one network.
pub struct Network {
    pub w: Array2<f64>,
    pub m: Array1<f64>,
    pub gram: GramFamily,
}

impl Network {
    /// Draw `index` uses `matrix.seed` itself for 0 and sub-seeds after that.
    pub fn draw(cfg: &ExperimentConfig, index: u64) -> Result<Self> {
        let w_seed = if index == 0 { cfg.matrix.seed } else { sub_seed(cfg.matrix.seed, STREAM_W, index) };
        let w = sample_connectivity(&cfg.matrix, w_seed)?;
        let m = sample_input_weights(cfg.matrix.n, &cfg.input_weights, sub_seed(cfg.seed, STREAM_M, index), Some(&w))?;
        let gram = GramFamily::new(&w, GRAM_TOL)?;
        Ok(Network { w, m, gram })
    }

    pub fn reservoir(&self, eta2: f64) -> Result<Reservoir> {
        Reservoir::from_gram(&self.gram, self.m.clone(), eta2)
    }
}

/// Episode with the test input polluted when configured.
pub struct Workload {
    pub episode: Episode,
    pub test_input: InputSeries,
    pub u: Array2<f64>,
    pub u_hat: Array2<f64>,
}

impl Workload {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let episode = build_task(&cfg.task, sub_seed(cfg.seed, STREAM_TASK, 0))?;
        let test_input = match &cfg.test_noise {
            Some(TestNoise { p, s2 }) => pollute_input(&episode.test, *p, *s2, sub_seed(cfg.seed, STREAM_POLLUTION, 0))?,
            None => episode.test.clone(),
        };
        let u = lag_matrix(&episode.train, cfg.task.t_len);
        let u_hat = lag_matrix(&test_input, cfg.task.t_hat);
        Ok(Workload { episode, test_input, u, u_hat })
    }

    pub fn matrices(&self) -> TaskMatrices<'_> {
        TaskMatrices { u: &self.u, u_hat: &self.u_hat, r: &self.episode.r, r_hat: &self.episode.r_hat }
    }
}

/// Mean and unbiased standard deviation; std is NaN for a single sample.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One noisy train/test episode; returns the two NMSEs.
pub fn run_trial(net: &Network, work: &Workload, eta2: f64, init: Init, trial_seed: (u64, u64)) -> Result<(f64, f64)> {
    let res = net.reservoir(eta2)?;
    let ep = &work.episode;
    let x = simulate_states(&res, &ep.train, ep.r.len(), trial_seed.0, init)?;
    let omega = train_readout(&x, &ep.r)?;
    let x_hat = simulate_states(&res, &work.test_input, ep.r_hat.len(), trial_seed.1, init)?;
    Ok((
        normalized(train_mse(&x, &ep.r, &omega), &ep.r),
        normalized(test_mse(&x_hat, &ep.r_hat, &omega), &ep.r_hat),
    ))
}

/// Solved first and second order pairs for one W, reused over the grid.
pub struct FixedWTheory {
    pub pair: EquivalentPair,
    pub second: SecondOrderPair,
}

impl FixedWTheory {
    pub fn solve(net: &Network, t_len: usize, settings: &SolverSettings) -> Result<Self> {
        let pair = solve_prop1(&net.gram, t_len, settings)?;
        let second = solve_prop2(&pair, &net.gram, SecondOrderSource::S0, settings)?;
        Ok(FixedWTheory { pair, second })
    }

    /// (train, test) MSE.
    pub fn mse(&self, net: &Network, work: &Workload, eta2: f64) -> Result<(f64, f64)> {
        let ep = &work.episode;
        let train = train_mse_deteq(&self.pair, &net.gram, &net.m, &work.u, &ep.r, eta2)?;
        let task = TestTask { m: &net.m, u: &work.u, u_hat: &work.u_hat, r: &ep.r, r_hat: &ep.r_hat };
        let test = test_mse_deteq(&self.pair, &self.second, &net.gram, &task, eta2)?;
        Ok((train, test))
    }
}

/// Large-n formulas for the ensembles that have them.
pub enum LimitTheory {
    Under { d: Vec<f64>, c: f64 },
    HaarOver { d: LagProfile, c: f64 },
    MultiOver(closedform::OverProfiles),
}

impl LimitTheory {
    /// `None` when the ensemble has no closed form in this regime.
    pub fn for_config(cfg: &ExperimentConfig) -> Result<Option<Self>> {
        let (t, th) = (cfg.task.t_len, cfg.task.t_hat);
        let len = t.max(th);
        let c = cfg.c();
        Ok(match (&cfg.matrix.ensemble, cfg.regime()?) {
            (Ensemble::HaarScaled { .. }, Regime::Under) => {
                Some(LimitTheory::Under { d: invariant_profile(&cfg.matrix.ensemble, t, th, Regime::Under)?.entries, c })
            }
            (Ensemble::MultiMemory { modes }, Regime::Under) => Some(LimitTheory::Under { d: block_profile(modes, len)?, c }),
            (Ensemble::HaarScaled { .. }, Regime::Over) => {
                let d = invariant_profile(&cfg.matrix.ensemble, t, th, Regime::Over)?.entries;
                Some(LimitTheory::HaarOver { d: LagProfile::Diagonal(d), c })
            }
            (Ensemble::MultiMemory { modes }, Regime::Over) => {
                Some(LimitTheory::MultiOver(over_profiles_multimemory(modes, c, len)?))
            }
            _ => None,
        })
    }

    pub fn mse(&self, work: &Workload, eta2: f64) -> Result<(f64, f64)> {
        let task = work.matrices();
        match self {
            LimitTheory::Under { d, c } => Ok((
                train_mse_inv_c_lt1(d, &work.u, &work.episode.r, eta2, *c)?,
                test_mse_inv_c_lt1(d, &task, eta2, *c)?,
            )),
            LimitTheory::HaarOver { d, c } => Ok((0.0, test_mse_haar_c_gt1(d, &task, eta2, *c)?)),
            LimitTheory::MultiOver(p) => Ok((0.0, test_mse_over_profiles(p, &task, eta2)?)),
        }
    }
}

fn limit_or_error(cfg: &ExperimentConfig) -> Result<Option<LimitTheory>> {
    if !cfg.theory.limit() {
        return Ok(None);
    }
    let lim = LimitTheory::for_config(cfg)?;
    if lim.is_none() && cfg.theory == TheoryPaths::Limit {
        return Err(Error::Config(format!(
            "no limit formulas for {:?} at c = {:.4}",
            cfg.matrix.ensemble,
            cfg.c()
        )));
    }
    Ok(lim)
}

/// Per-η² Monte Carlo and theory values.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub eta2: f64,
    pub mc_train: Vec<f64>,
    pub mc_test: Vec<f64>,
    pub fixed_w: Option<(f64, f64)>,
    pub limit: Option<(f64, f64)>,
}

/// Run the grid. Trial `i` reuses its noise seeds at every η².
pub fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let grid = cfg.eta2_grid.values();
    let work = Workload::build(cfg)?;
    let base = Network::draw(cfg, 0)?;
    let limit = limit_or_error(cfg)?;
    let fixed = if cfg.theory.fixed_w() {
        Some(FixedWTheory::solve(&base, cfg.task.t_len, &cfg.solver)?)
    } else {
        None
    };

    let nets: Vec<Network> = if cfg.redraw_w && cfg.monte_carlo {
        (0..cfg.trials as u64).into_par_iter().map(|i| Network::draw(cfg, i)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let net_for = |i: usize| if nets.is_empty() { &base } else { &nets[i] };

    let mc: Vec<(f64, f64)> = if cfg.monte_carlo {
        let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|k| (0..cfg.trials).map(move |i| (k, i))).collect();
        jobs.par_iter()
            .map(|&(k, i)| {
                let seeds = (sub_seed(cfg.seed, STREAM_TRAIN_NOISE, i as u64), sub_seed(cfg.seed, STREAM_TEST_NOISE, i as u64));
                run_trial(net_for(i), &work, grid[k], cfg.init, seeds)
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    grid.par_iter()
        .enumerate()
        .map(|(k, &eta2)| {
            let (mc_train, mc_test) = if cfg.monte_carlo {
                mc[k * cfg.trials..(k + 1) * cfg.trials].iter().copied().unzip()
            } else {
                (Vec::new(), Vec::new())
            };
            let er = work.episode.r.dot(&work.episode.r) / work.episode.r.len() as f64;
            let erh = work.episode.r_hat.dot(&work.episode.r_hat) / work.episode.r_hat.len() as f64;
            let norm = |(a, b): (f64, f64)| (a / er, b / erh);
            let fixed_w = fixed.as_ref().map(|f| f.mse(&base, &work, eta2).map(norm)).transpose()?;
            let limit = limit.as_ref().map(|l| l.mse(&work, eta2).map(norm)).transpose()?;
            Ok(SweepPoint { eta2, mc_train, mc_test, fixed_w, limit })
        })
        .collect()
}

pub fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let nan2 = (f64::NAN, f64::NAN);
    Ok(sweep_points(cfg)?
        .into_iter()
        .map(|p| {
            let (tr, tr_sd) = if p.mc_train.is_empty() { nan2 } else { mean_std(&p.mc_train) };
            let (te, te_sd) = if p.mc_test.is_empty() { nan2 } else { mean_std(&p.mc_test) };
            let fw = p.fixed_w.unwrap_or(nan2);
            let lim = p.limit.unwrap_or(nan2);
            ResultRow {
                eta2: p.eta2,
                train_nmse_mc: tr,
                train_nmse_mc_std: tr_sd,
                test_nmse_mc: te,
                test_nmse_mc_std: te_sd,
                train_nmse_theory_fixed_w: fw.0,
                test_nmse_theory_fixed_w: fw.1,
                train_nmse_theory_limit: lim.0,
                test_nmse_theory_limit: lim.1,
                n: cfg.matrix.n,
                t_len: cfg.task.t_len,
                t_hat: cfg.task.t_hat,
                trials: cfg.trials,
                seed: cfg.seed,
            }
        })
        .collect())
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, timestamp: bool) -> Result<Vec<ResultRow>> {
    let rows = sweep_rows(cfg)?;
    write_results_csv(out, &rows, timestamp)?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryRow {
    pub tau: usize,
    pub mc_deteq: f64,
    pub mc_deteq_std: f64,
    pub mc_closed: f64,
    pub stabilized: bool,
    pub n: usize,
    #[serde(rename = "T")]
    pub t_len: usize,
    pub w_draws: usize,
    pub seed: u64,
}

/// `MC(τ)` from the solver (mean over W draws) and the closed form when the
/// ensemble has one.
pub fn memory_rows(cfg: &ExperimentConfig) -> Result<Vec<MemoryRow>> {
    cfg.validate()?;
    if cfg.regime()? != Regime::Under {
        return Err(Error::Config("memory curve needs n < T".into()));
    }
    let ms = &cfg.memory;
    let t_len = cfg.task.t_len;
    if ms.tau_max >= t_len {
        return Err(Error::Config(format!("tau_max must be below T = {t_len}")));
    }
    let curves: Vec<Vec<_>> = (0..ms.w_draws as u64)
        .into_par_iter()
        .map(|draw| {
            let net = Network::draw(cfg, draw)?;
            let pair = solve_prop1(&net.gram, t_len, &cfg.solver)?;
            memory_curve(&pair, &net.gram, &net.m, ms.tau_max, ms.eta2_probe)
        })
        .collect::<Result<_>>()?;
    let c = cfg.c();
    (0..=ms.tau_max)
        .map(|tau| {
            let vals: Vec<f64> = curves.iter().map(|cv| cv[tau].value).collect();
            let (mean, sd) = mean_std(&vals);
            let closed = match &cfg.matrix.ensemble {
                Ensemble::HaarScaled { .. } | Ensemble::MultiMemory { .. } => {
                    closedform::mc_closed(&cfg.matrix.ensemble, c, tau)?
                }
                _ => f64::NAN,
            };
            Ok(MemoryRow {
                tau,
                mc_deteq: mean,
                mc_deteq_std: sd,
                mc_closed: closed,
                stabilized: curves.iter().all(|cv| cv[tau].stabilized),
                n: cfg.matrix.n,
                t_len,
                w_draws: ms.w_draws,
                seed: cfg.seed,
            })
        })
        .collect()
}

pub fn cmd_memory_curve(cfg: &ExperimentConfig, out: &Path, timestamp: bool) -> Result<Vec<MemoryRow>> {
    let rows = memory_rows(cfg)?;
    write_csv_atomic(out, &rows, timestamp)?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignRow {
    pub rank: usize,
    pub sigma: f64,
    pub score: f64,
    pub test_nmse_theory: f64,
    pub winner: bool,
}

fn haar_profile(sigma: f64, len: usize) -> Result<Vec<f64>> {
    Ok(invariant_profile(&Ensemble::HaarScaled { sigma }, len, len, Regime::Under)?.entries)
}

/// Score Haar σ candidates by `b̂ᵀD⁻¹b̂` and report their limit test NMSE at
/// `design.eta2`; rows come sorted by score.
pub fn design_rows(cfg: &ExperimentConfig) -> Result<Vec<DesignRow>> {
    cfg.validate()?;
    if cfg.regime()? != Regime::Under {
        return Err(Error::Config("design needs n < T".into()));
    }
    let ds = &cfg.design;
    let mut candidates = ds.candidates.clone();
    if let Some(alpha) = ds.alpha {
        let s = geometric_design_sigma(alpha).map_err(|e| Error::Config(e.to_string()))?;
        if !candidates.iter().any(|&c| (c - s).abs() < 1e-12) {
            candidates.push(s);
        }
    }
    if candidates.is_empty() {
        return Err(Error::Config("design needs at least one candidate sigma".into()));
    }
    if candidates.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
        return Err(Error::Config("design candidates must lie in (0, 1)".into()));
    }
    let work = Workload::build(cfg)?;
    let mut b = estimate_delay_profile(&work.u, &work.episode.r, ds.gamma)?.b_hat;
    let peak = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(peak > PROFILE_FLOOR) {
        return Err(Error::invalid("b_hat", "estimated delay profile vanishes"));
    }
    b.iter_mut().filter(|v| v.abs() < ds.b_floor * peak).for_each(|v| *v = 0.0);

    let c = cfg.c();
    let len = cfg.task.t_len.max(cfg.task.t_hat);
    let erh = work.episode.r_hat.dot(&work.episode.r_hat) / work.episode.r_hat.len() as f64;
    let mut rows: Vec<DesignRow> = candidates
        .par_iter()
        .map(|&sigma| {
            let d = haar_profile(sigma, len)?;
            let score = design_score(&b, &d)?;
            let test = test_mse_inv_c_lt1(&d, &work.matrices(), ds.eta2, c)? / erh;
            Ok(DesignRow { rank: 0, sigma, score, test_nmse_theory: test, winner: false })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.score.total_cmp(&b.score));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
        r.winner = i == 0;
    }
    Ok(rows)
}

pub fn cmd_design(cfg: &ExperimentConfig, out: &Path, timestamp: bool) -> Result<Vec<DesignRow>> {
    let rows = design_rows(cfg)?;
    write_csv_atomic(out, &rows, timestamp)?;
    Ok(rows)
}

/// Aligned columns of several configs sharing a task and grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn compare_table(cfgs: &[ExperimentConfig]) -> Result<CompareTable> {
    if cfgs.len() < 2 {
        return Err(Error::Config("compare needs at least two configs".into()));
    }
    let first = &cfgs[0];
    for c in &cfgs[1..] {
        if c.task != first.task || c.eta2_grid != first.eta2_grid {
            return Err(Error::Config("compared configs must share the task and eta2 grid".into()));
        }
    }
    let mut header = vec!["eta2".to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (i, cfg) in cfgs.iter().enumerate() {
        let label = cfg.label.clone().unwrap_or_else(|| format!("cfg{i}"));
        let points = sweep_points(cfg)?;
        let mut push = |name: &str, col: Vec<f64>| {
            header.push(format!("{label}_{name}"));
            columns.push(col);
        };
        if cfg.monte_carlo {
            push("test_nmse_mc", points.iter().map(|p| mean_std(&p.mc_test).0).collect());
            push("test_nmse_mc_std", points.iter().map(|p| mean_std(&p.mc_test).1).collect());
        }
        if cfg.theory.fixed_w() {
            push("test_nmse_theory_fixedW", points.iter().map(|p| p.fixed_w.map_or(f64::NAN, |v| v.1)).collect());
        }
        if cfg.theory.limit() {
            push("test_nmse_theory_limit", points.iter().map(|p| p.limit.map_or(f64::NAN, |v| v.1)).collect());
        }
    }
    let grid = first.eta2_grid.values();
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, &eta2)| std::iter::once(eta2).chain(columns.iter().map(|col| col[k])).collect())
        .collect();
    Ok(CompareTable { header, rows })
}

pub fn cmd_compare(cfgs: &[ExperimentConfig], out: &Path, timestamp: bool) -> Result<CompareTable> {
    let table = compare_table(cfgs)?;
    write_table_atomic(out, &table.header, &table.rows, timestamp)?;
    Ok(table)
}
