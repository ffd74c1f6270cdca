//! Damped fixed-point iteration with Anderson mixing.

use std::collections::VecDeque;

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub(crate) struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight kept on the previous iterate in a plain damped step.
    pub damping: f64,
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct FixedPoint {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn relative_residual(x: &[f64], f: &[f64]) -> f64 {
    sup(f) / sup(x).max(1.0)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Solve `x = g(x)`. `g` may fail with `NotPositiveDefinite` on a step that
/// leaves the admissible set; the step is then retried as a plain damped step
/// with a shrinking step length.
pub(crate) fn solve<G>(what: &'static str, x0: Vec<f64>, mut g: G, opts: &IterationOptions) -> Result<FixedPoint>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let beta = 1.0 - opts.damping;
    let mut x = x0;
    let mut f = sub(&g(&x)?, &x);
    let mut res = relative_residual(&x, &f);
    // (Δx, Δf) pairs
    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();

    for iter in 0..opts.max_iter {
        if res < opts.tol {
            return Ok(FixedPoint { x, iterations: iter, residual: res });
        }
        let mut candidate = anderson_step(&x, &f, &history, beta);
        let mut step = beta;
        let gx = loop {
            match g(&candidate) {
                Ok(v) if v.iter().all(|e| e.is_finite()) => break v,
                Ok(_) | Err(Error::NotPositiveDefinite(_)) => {
                    history.clear();
                    step *= 0.5;
                    if step < 1e-8 {
                        return Err(Error::NonConvergence { what, iterations: iter, residual: res });
                    }
                    candidate = x.iter().zip(&f).map(|(a, b)| a + step * b).collect();
                }
                Err(e) => return Err(e),
            }
        };
        let f_new = sub(&gx, &candidate);
        let res_new = relative_residual(&candidate, &f_new);
        if res_new > 1e3 * res.max(opts.tol) {
            // mixing went astray; restart the history from the new point
            history.clear();
        } else {
            history.push_back((sub(&candidate, &x), sub(&f_new, &f)));
            if history.len() > opts.depth {
                history.pop_front();
            }
        }
        x = candidate;
        f = f_new;
        res = res_new;
    }
    if res < opts.tol {
        return Ok(FixedPoint { x, iterations: opts.max_iter, residual: res });
    }
    Err(Error::NonConvergence { what, iterations: opts.max_iter, residual: res })
}

fn anderson_step(x: &[f64], f: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>)>, beta: f64) -> Vec<f64> {
    let plain: Vec<f64> = x.iter().zip(f).map(|(a, b)| a + beta * b).collect();
    let m = history.len();
    if m == 0 {
        return plain;
    }
    // min_γ ‖f − ΔF γ‖ through regularized normal equations
    let mut gram = Array2::<f64>::zeros((m, m));
    let mut rhs = Array1::<f64>::zeros(m);
    for i in 0..m {
        let fi = &history[i].1;
        rhs[i] = fi.iter().zip(f).map(|(a, b)| a * b).sum();
        for j in 0..=i {
            let v: f64 = fi.iter().zip(&history[j].1).map(|(a, b)| a * b).sum();
            gram[[i, j]] = v;
            gram[[j, i]] = v;
        }
    }
    let scale = (0..m).map(|i| gram[[i, i]]).fold(0.0f64, f64::max);
    if !(scale > 0.0) {
        return plain;
    }
    for i in 0..m {
        gram[[i, i]] += 1e-12 * scale;
    }
    let gamma = match gram.solve_into(rhs) {
        Ok(g) if g.iter().all(|v| v.is_finite()) => g,
        _ => return plain,
    };
    let mut out = plain;
    for (i, (dx, df)) in history.iter().enumerate() {
        for k in 0..out.len() {
            out[k] -= gamma[i] * (dx[k] + beta * df[k]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> IterationOptions {
        IterationOptions { tol: 1e-12, max_iter: 500, damping: 0.5, depth: 5 }
    }

    #[test]
    fn solves_scalar_contraction() {
        let out = solve("cos", vec![0.0], |x| Ok(vec![x[0].cos()]), &opts()).unwrap();
        assert!((out.x[0] - 0.739_085_133_215_160_6).abs() < 1e-11);
    }

    #[test]
    fn linear_system_converges_quickly() {
        // x = Mx + b with ρ(M) = 0.95: plain damping needs hundreds of steps
        let m = [[0.9, 0.05, 0.0], [0.05, 0.8, 0.1], [0.0, 0.1, 0.85]];
        let b = [1.0, -2.0, 0.5];
        let g = |x: &[f64]| {
            Ok((0..3).map(|i| (0..3).map(|j| m[i][j] * x[j]).sum::<f64>() + b[i]).collect())
        };
        let out = solve("linear", vec![0.0; 3], g, &opts()).unwrap();
        assert!(out.iterations < 40, "{} iterations", out.iterations);
        let gx: Vec<f64> = g(&out.x).unwrap();
        assert!(relative_residual(&out.x, &sub(&gx, &out.x)) < 1e-12);
    }

    #[test]
    fn inadmissible_steps_are_shortened() {
        // g is only defined for x < 1; fixed point at 0.9
        let g = |x: &[f64]| {
            if x[0] >= 1.0 {
                Err(Error::NotPositiveDefinite("test"))
            } else {
                Ok(vec![0.9 + 2.0 * (x[0] - 0.9) * (x[0] - 0.9)])
            }
        };
        let out = solve("domain", vec![0.5], g, &opts()).unwrap();
        assert!((out.x[0] - 0.9).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let o = IterationOptions { max_iter: 1, ..opts() };
        let err = solve("slow", vec![0.0], |x| Ok(vec![x[0].cos()]), &o).unwrap_err();
        assert!(err.is_non_convergence());
    }
}
