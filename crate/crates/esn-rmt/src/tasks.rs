//! Input series and targets: Mackey-Glass, Gaussian and AR(1) inputs, delay,
//! look-ahead, filter and impulse targets, and impulsive test-input noise.

use std::path::PathBuf;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::csvio::load_series_csv;
use crate::error::{Error, Result};
use crate::esn::InputSeries;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MackeyGlassParams {
    pub beta: f64,
    pub gamma: f64,
    pub delay: f64,
    pub exponent: f64,
    pub dt: f64,
    /// Integrator steps per output sample.
    pub subsample: usize,
    /// Output samples discarded before recording.
    pub transient: usize,
    pub initial: f64,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        MackeyGlassParams {
            beta: 0.2,
            gamma: 0.1,
            delay: 17.0,
            exponent: 10.0,
            dt: 0.1,
            subsample: 10,
            transient: 1000,
            initial: 1.2,
        }
    }
}

impl MackeyGlassParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delay > 0.0) {
            return Err(Error::invalid("delay", "Mackey-Glass delay must be positive"));
        }
        if !(self.dt > 0.0) || self.subsample == 0 {
            return Err(Error::invalid("dt", "step and subsampling must be positive"));
        }
        if !(self.delay / self.dt >= 1.0) {
            return Err(Error::invalid("dt", "step must not exceed the delay"));
        }
        if ![self.beta, self.gamma, self.exponent, self.initial].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("params", "Mackey-Glass parameters must be finite"));
        }
        Ok(())
    }
}

/// Standardized Mackey-Glass series of `length` samples.
///
/// RK4 on `x' = β x(t−τ)/(1 + x(t−τ)^p) − γ x(t)`, delayed midpoints by linear
/// interpolation. The seed perturbs the constant initial history.
pub fn mackey_glass(length: usize, seed: u64, params: &MackeyGlassParams) -> Result<Vec<f64>> {
    params.validate()?;
    if length == 0 {
        return Err(Error::invalid("length", "must be at least 1"));
    }
    let p = params;
    let lag = (p.delay / p.dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..=lag).map(|_| p.initial + 0.1 * (rng.random::<f64>() - 0.5)).collect();
    let f = |xt: f64, xd: f64| p.beta * xd / (1.0 + xd.abs().powf(p.exponent)) - p.gamma * xt;

    let total = (p.transient + length) * p.subsample;
    x.reserve(total);
    let mut out = Vec::with_capacity(length);
    for step in 0..total {
        let k = x.len() - 1;
        let (d0, d1) = (x[k - lag], x[k - lag + 1]);
        let dm = 0.5 * (d0 + d1);
        let xk = x[k];
        let k1 = f(xk, d0);
        let k2 = f(xk + 0.5 * p.dt * k1, dm);
        let k3 = f(xk + 0.5 * p.dt * k2, dm);
        let k4 = f(xk + p.dt * k3, d1);
        x.push(xk + p.dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        if (step + 1) % p.subsample == 0 && (step + 1) / p.subsample > p.transient {
            out.push(*x.last().unwrap());
        }
        // keep only the delay window
        if x.len() > 4 * lag + 4 {
            x.drain(..x.len() - lag - 1);
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged("Mackey-Glass integration"));
    }
    standardize(&mut out);
    Ok(out)
}

/// Shift to zero mean and scale to unit (population) variance.
pub fn standardize(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter_mut().for_each(|v| *v -= mean);
    let var = x.iter().map(|v| v * v).sum::<f64>() / n;
    if var > 0.0 {
        let s = var.sqrt();
        x.iter_mut().for_each(|v| *v /= s);
    }
    // second pass removes the rounding left by the first
    let mean = x.iter().sum::<f64>() / n;
    x.iter_mut().for_each(|v| *v -= mean);
    let var = x.iter().map(|v| v * v).sum::<f64>() / n;
    if var > 0.0 {
        let s = var.sqrt();
        x.iter_mut().for_each(|v| *v /= s);
    }
}

/// Stationary Gaussian AR(1) series with covariance `q^{|a−b|}`.
pub fn ar1(length: usize, q: f64, seed: u64) -> Result<Vec<f64>> {
    if !(q.abs() < 1.0) {
        return Err(Error::invalid("q_ar", "AR coefficient must satisfy |q| < 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innov = (1.0 - q * q).sqrt();
    let mut out = Vec::with_capacity(length);
    let mut x: f64 = rng.sample(StandardNormal);
    for _ in 0..length {
        out.push(x);
        x = q * x + innov * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(out)
}

pub fn gaussian_series(length: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..length).map(|_| rng.sample(StandardNormal)).collect()
}

/// Where the input samples of delay and filter tasks come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSource {
    Gaussian,
    MackeyGlass {
        #[serde(default)]
        params: MackeyGlassParams,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        column: Option<String>,
    },
}

impl Default for InputSource {
    fn default() -> Self {
        InputSource::Gaussian
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    /// `r_t = u_{t+steps}` on a standardized Mackey-Glass input.
    MackeyGlassAhead {
        steps: usize,
        #[serde(default)]
        params: MackeyGlassParams,
    },
    /// `r_t = u_{t−τ}`.
    Delay {
        tau: usize,
        #[serde(default)]
        input: InputSource,
    },
    /// `r_t = Σ_i b_i u_{t−i}`.
    LinearFilter {
        b: Vec<f64>,
        #[serde(default)]
        input: InputSource,
    },
    /// `u = √T δ_0`, `r = √T δ_τ`.
    Impulse { tau: usize },
    /// Delay task on a Gaussian AR(1) input.
    Ar1Delay { q_ar: f64, tau: usize },
    /// `r_t = u_{t+shift}` on a standardized CSV series.
    CsvSeries {
        path: PathBuf,
        #[serde(default)]
        column: Option<String>,
        #[serde(default = "one")]
        shift: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(flatten)]
    pub kind: TaskKind,
    pub t_len: usize,
    pub t_hat: usize,
    /// Samples before each window available as past inputs.
    pub history: usize,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_len == 0 || self.t_hat == 0 {
            return Err(Error::invalid("T", "train and test lengths must be positive"));
        }
        match &self.kind {
            TaskKind::Ar1Delay { q_ar, .. } if !(q_ar.abs() < 1.0) => {
                Err(Error::invalid("q_ar", "AR coefficient must satisfy |q| < 1"))
            }
            TaskKind::LinearFilter { b, .. } if b.is_empty() || b.iter().any(|v| !v.is_finite()) => {
                Err(Error::invalid("b", "filter coefficients must be finite and non-empty"))
            }
            TaskKind::MackeyGlassAhead { params, .. } => params.validate(),
            TaskKind::Delay { input: InputSource::MackeyGlass { params }, .. }
            | TaskKind::LinearFilter { input: InputSource::MackeyGlass { params }, .. } => params.validate(),
            _ => Ok(()),
        }
    }
}

/// Train and test windows with their targets.
#[derive(Clone, Debug)]
pub struct Episode {
    pub train: InputSeries,
    pub r: Array1<f64>,
    pub test: InputSeries,
    pub r_hat: Array1<f64>,
}

fn source_series(src: &InputSource, length: usize, seed: u64) -> Result<Vec<f64>> {
    match src {
        InputSource::Gaussian => Ok(gaussian_series(length, seed)),
        InputSource::MackeyGlass { params } => mackey_glass(length, seed, params),
        InputSource::Csv { path, column } => csv_series(path, column.as_deref(), length),
    }
}

fn csv_series(path: &std::path::Path, column: Option<&str>, length: usize) -> Result<Vec<f64>> {
    let mut s = load_series_csv(path, column)?;
    if s.len() < length {
        return Err(Error::Data {
            path: path.to_path_buf(),
            reason: format!("holds {} samples, the task needs {length}", s.len()),
        });
    }
    s.truncate(length);
    standardize(&mut s);
    Ok(s)
}

/// Cut a series into `[history | train | test | lead]`; the test history is
/// the tail of the samples before it.
fn windows(series: &[f64], spec: &TaskSpec) -> Result<(InputSeries, InputSeries)> {
    let h = spec.history;
    let train_end = h + spec.t_len;
    let test_start = train_end;
    let train = InputSeries::new(series[..train_end].to_vec(), h)?;
    let test = InputSeries::new(series[test_start - h..test_start + spec.t_hat].to_vec(), h)?;
    Ok((train, test))
}

fn shifted(input: &InputSeries, len: usize, offset: isize) -> Array1<f64> {
    (0..len).map(|t| input.at(t as isize + offset)).collect()
}

fn filtered(input: &InputSeries, len: usize, b: &[f64]) -> Array1<f64> {
    (0..len)
        .map(|t| b.iter().enumerate().map(|(i, bi)| bi * input.at(t as isize - i as isize)).sum())
        .collect()
}

/// Build the train and test windows of a task. Look-ahead targets read
/// samples past the window, so the stored series extend beyond it.
pub fn build_task(spec: &TaskSpec, seed: u64) -> Result<Episode> {
    spec.validate()?;
    let (t, th, h) = (spec.t_len, spec.t_hat, spec.history);
    let base = h + t + th;
    let lookahead = |series: Vec<f64>, steps: usize| -> Result<Episode> {
        let (train, test) = windows(&series, spec)?;
        // targets read the true continuation, not the zero padding
        let train_full = InputSeries::new(series[..h + t + steps].to_vec(), h)?;
        let test_full = InputSeries::new(series[t..h + t + th + steps].to_vec(), h)?;
        let r = shifted(&train_full, t, steps as isize);
        let r_hat = shifted(&test_full, th, steps as isize);
        Ok(Episode { train, r, test, r_hat })
    };
    match &spec.kind {
        TaskKind::MackeyGlassAhead { steps, params } => lookahead(mackey_glass(base + steps, seed, params)?, *steps),
        TaskKind::CsvSeries { path, column, shift } => {
            lookahead(csv_series(path, column.as_deref(), base + shift)?, *shift)
        }
        TaskKind::Delay { tau, input } => {
            let (train, test) = windows(&source_series(input, base, seed)?, spec)?;
            let r = shifted(&train, t, -(*tau as isize));
            let r_hat = shifted(&test, th, -(*tau as isize));
            Ok(Episode { train, r, test, r_hat })
        }
        TaskKind::LinearFilter { b, input } => {
            let (train, test) = windows(&source_series(input, base, seed)?, spec)?;
            let r = filtered(&train, t, b);
            let r_hat = filtered(&test, th, b);
            Ok(Episode { train, r, test, r_hat })
        }
        TaskKind::Ar1Delay { q_ar, tau } => {
            let (train, test) = windows(&ar1(base, *q_ar, seed)?, spec)?;
            let r = shifted(&train, t, -(*tau as isize));
            let r_hat = shifted(&test, th, -(*tau as isize));
            Ok(Episode { train, r, test, r_hat })
        }
        TaskKind::Impulse { tau } => {
            let pulse = |len: usize| -> Result<(InputSeries, Array1<f64>)> {
                let mut v = vec![0.0; h + len];
                v[h] = (len as f64).sqrt();
                let mut r = Array1::zeros(len);
                if *tau < len {
                    r[*tau] = (len as f64).sqrt();
                }
                Ok((InputSeries::new(v, h)?, r))
            };
            let (train, r) = pulse(t)?;
            let (test, r_hat) = pulse(th)?;
            Ok(Episode { train, r, test, r_hat })
        }
    }
}

/// Add `N(0, s²)` to each sample independently with probability `p`.
/// Returns the polluted series and the mask of touched samples.
pub fn inject_impulsive_noise(series: &[f64], p: f64, s2: f64, seed: u64) -> Result<(Vec<f64>, Vec<bool>)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", "probability must lie in [0, 1]"));
    }
    if !(s2 >= 0.0) {
        return Err(Error::invalid("s2", "variance must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = s2.sqrt();
    let mut mask = Vec::with_capacity(series.len());
    let out = series
        .iter()
        .map(|&x| {
            let hit = rng.random::<f64>() < p;
            mask.push(hit);
            if hit {
                x + s * rng.sample::<f64, _>(StandardNormal)
            } else {
                x
            }
        })
        .collect();
    Ok((out, mask))
}

/// Pollute an input series in place of its in-window and history samples.
pub fn pollute_input(input: &InputSeries, p: f64, s2: f64, seed: u64) -> Result<InputSeries> {
    let h = input.history();
    let all: Vec<f64> = (-(h as isize)..input.len() as isize).map(|t| input.at(t)).collect();
    let (noisy, _) = inject_impulsive_noise(&all, p, s2, seed)?;
    InputSeries::new(noisy, h)
}
