//! Random connectivity matrices and input weights.
//!
//! - Haar-scaled orthogonal, i.i.d. Gaussian, Wigner, block multi-memory and
//!   projection-type normal ensembles, plus user-supplied matrices.
//! - Spectral measures used by the normal-matrix kernel equation.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigVals, EigValsh, Eig, JobSvd, QR, SVDDC, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LinalgContext, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryMode {
    pub sigma: f64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ensemble {
    HaarScaled { sigma: f64 },
    GaussianIid { sigma: f64 },
    Wigner { sigma: f64 },
    MultiMemory { modes: Vec<MemoryMode> },
    ProjectionNormal { sigma: f64 },
    UserSupplied { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    #[serde(flatten)]
    pub ensemble: Ensemble,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl MatrixSpec {
    pub fn new(ensemble: Ensemble, n: usize) -> Self {
        MatrixSpec { ensemble, n, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n <= 1 {
            return Err(Error::invalid("n", format!("dimension must exceed 1, got {}", self.n)));
        }
        let check_sigma = |s: f64| {
            if s > 0.0 && s < 1.0 {
                Ok(())
            } else {
                Err(Error::invalid("sigma", format!("must lie in (0, 1), got {s}")))
            }
        };
        match &self.ensemble {
            Ensemble::HaarScaled { sigma }
            | Ensemble::GaussianIid { sigma }
            | Ensemble::Wigner { sigma }
            | Ensemble::ProjectionNormal { sigma } => check_sigma(*sigma),
            Ensemble::MultiMemory { modes } => {
                if modes.is_empty() {
                    return Err(Error::invalid("modes", "at least one memory mode required"));
                }
                for mode in modes {
                    check_sigma(mode.sigma)?;
                    if !(mode.fraction > 0.0) {
                        return Err(Error::invalid("fraction", "fractions must be positive"));
                    }
                }
                let total: f64 = modes.iter().map(|m| m.fraction).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("fraction", format!("fractions sum to {total}, not 1")));
                }
                block_sizes(modes, self.n).map(|_| ())
            }
            Ensemble::UserSupplied { matrix } => {
                if matrix.len() != self.n || matrix.iter().any(|row| row.len() != self.n) {
                    return Err(Error::invalid("matrix", format!("expected a square {0}x{0} matrix", self.n)));
                }
                if matrix.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("matrix", "entries must be finite"));
                }
                Ok(())
            }
        }
    }
}

/// Block sizes `round(c_j n)` by largest remainder, so they always sum to `n`.
pub fn block_sizes(modes: &[MemoryMode], n: usize) -> Result<Vec<usize>> {
    let exact: Vec<f64> = modes.iter().map(|m| m.fraction * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|v| v.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &j in order.iter().take(n.saturating_sub(assigned)) {
        sizes[j] += 1;
    }
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::invalid(
            "modes",
            format!("mode {j} receives no neurons at n = {n}"),
        ));
    }
    Ok(sizes)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs of
/// `diag(R)` folded into `Q`.
fn haar_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Result<Array2<f64>> {
    let g = gaussian_matrix(rng, n, n, 1.0);
    let (mut q, r) = g.qr().ctx("QR of Gaussian matrix")?;
    for j in 0..n {
        if r[[j, j]] < 0.0 {
            q.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok(q)
}

pub fn sample_connectivity(spec: &MatrixSpec, seed: u64) -> Result<Array2<f64>> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = match &spec.ensemble {
        Ensemble::HaarScaled { sigma } => haar_orthogonal(&mut rng, n)? * *sigma,
        Ensemble::GaussianIid { sigma } => gaussian_matrix(&mut rng, n, n, sigma / (n as f64).sqrt()),
        Ensemble::Wigner { sigma } => {
            let sd = sigma / (4.0 * n as f64).sqrt();
            let mut w = Array2::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let v = sd * rng.sample::<f64, _>(StandardNormal);
                    w[[i, j]] = v;
                    w[[j, i]] = v;
                }
            }
            w
        }
        Ensemble::MultiMemory { modes } => {
            let sizes = block_sizes(modes, n)?;
            let mut w = Array2::zeros((n, n));
            let mut offset = 0;
            for (mode, &size) in modes.iter().zip(&sizes) {
                let block = haar_orthogonal(&mut rng, size)? * mode.sigma;
                w.slice_mut(ndarray::s![offset..offset + size, offset..offset + size])
                    .assign(&block);
                offset += size;
            }
            w
        }
        Ensemble::ProjectionNormal { sigma } => {
            let v = haar_orthogonal(&mut rng, n)?;
            let positive = n.div_ceil(2);
            let lambda = Array1::from_shape_fn(n, |i| if i < positive { *sigma } else { -*sigma });
            let mut w = (&v * &lambda.view().insert_axis(ndarray::Axis(0))).dot(&v.t());
            crate::linalg::symmetrize(&mut w);
            w
        }
        Ensemble::UserSupplied { matrix } => {
            Array2::from_shape_fn((n, n), |(i, j)| matrix[i][j])
        }
    };
    Ok(w)
}

pub(crate) fn is_symmetric(w: &Array2<f64>) -> bool {
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let n = w.nrows();
    (0..n).all(|i| (i + 1..n).all(|j| (w[[i, j]] - w[[j, i]]).abs() <= 1e-14 * scale))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralStats {
    pub spectral_radius: f64,
    pub operator_norm: f64,
}

pub fn spectral_stats(w: &Array2<f64>) -> Result<SpectralStats> {
    if w.nrows() != w.ncols() {
        return Err(Error::invalid("W", "matrix must be square"));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("W", "entries must be finite"));
    }
    if w.iter().all(|&v| v == 0.0) {
        return Ok(SpectralStats { spectral_radius: 0.0, operator_norm: 0.0 });
    }
    let spectral_radius = if is_symmetric(w) {
        let ev = w.eigvalsh(UPLO::Lower).ctx("symmetric eigenvalues")?;
        ev.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        let ev = w.eigvals().ctx("eigenvalues")?;
        ev.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    };
    let (_, s, _) = w.svddc(JobSvd::None).ctx("singular values")?;
    Ok(SpectralStats {
        spectral_radius,
        operator_norm: s.iter().cloned().fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputWeights {
    UnitGaussianNormalized,
    EigvecOf { index: usize },
}

impl Default for InputWeights {
    fn default() -> Self {
        InputWeights::UnitGaussianNormalized
    }
}

/// Input weight vector `m` with unit Euclidean norm.
///
/// `EigvecOf { index }` orders eigenvalues by decreasing modulus and needs `w`.
pub fn sample_input_weights(
    n: usize,
    mode: &InputWeights,
    seed: u64,
    w: Option<&Array2<f64>>,
) -> Result<Array1<f64>> {
    if n == 0 {
        return Err(Error::invalid("n", "dimension must be positive"));
    }
    match mode {
        InputWeights::UnitGaussianNormalized => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            loop {
                let m = Array1::from_shape_simple_fn(n, || rng.sample::<f64, _>(StandardNormal));
                let norm = m.dot(&m).sqrt();
                if norm > 0.0 {
                    return Ok(m / norm);
                }
            }
        }
        InputWeights::EigvecOf { index } => {
            let w = w.ok_or_else(|| Error::invalid("W", "eigvec_of needs the connectivity matrix"))?;
            if w.nrows() != n || w.ncols() != n {
                return Err(Error::invalid("W", format!("expected {n}x{n}")));
            }
            if *index >= n {
                return Err(Error::invalid("index", format!("{index} out of range for n = {n}")));
            }
            let (vals, vecs) = w.eig().ctx("eigendecomposition")?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| vals[b].norm().partial_cmp(&vals[a].norm()).unwrap().then(a.cmp(&b)));
            let k = order[*index];
            let lambda = vals[k];
            if lambda.im.abs() > 1e-12 * lambda.norm().max(1.0) {
                return Err(Error::invalid(
                    "index",
                    format!("eigenvalue {lambda} is complex and has no real eigenvector"),
                ));
            }
            let col = vecs.column(k);
            // A real eigenvalue admits a real eigenvector; take whichever part carries it.
            let re = col.mapv(|z| z.re);
            let im = col.mapv(|z| z.im);
            let v = if re.dot(&re) >= im.dot(&im) { re } else { im };
            let norm = v.dot(&v).sqrt();
            Ok(v / norm)
        }
    }
}

/// Limiting spectral measure of a normal connectivity matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralMeasure {
    Discrete { atoms: Vec<(f64, f64)> },
    Semicircle { sigma: f64 },
    TwoPoint { sigma: f64 },
}

impl SpectralMeasure {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralMeasure::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::invalid("atoms", "measure needs at least one atom"));
                }
                if atoms.iter().any(|&(t, w)| !(t.abs() < 1.0) || !(w >= 0.0)) {
                    return Err(Error::invalid("atoms", "atoms must lie in (-1, 1) with nonnegative weights"));
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("atoms", format!("weights sum to {total}")));
                }
                Ok(())
            }
            SpectralMeasure::Semicircle { sigma } | SpectralMeasure::TwoPoint { sigma } => {
                if *sigma > 0.0 && *sigma < 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("sigma", format!("must lie in (0, 1), got {sigma}")))
                }
            }
        }
    }

    /// True when the measure is invariant under `t -> -t`.
    pub fn is_symmetric(&self) -> bool {
        match self {
            SpectralMeasure::Semicircle { .. } | SpectralMeasure::TwoPoint { .. } => true,
            SpectralMeasure::Discrete { atoms } => {
                let mut pos: Vec<(f64, f64)> = atoms.iter().filter(|a| a.0 > 0.0).cloned().collect();
                let mut neg: Vec<(f64, f64)> =
                    atoms.iter().filter(|a| a.0 < 0.0).map(|a| (-a.0, a.1)).collect();
                pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
                neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pos == neg
            }
        }
    }

    /// Quadrature nodes and weights: exact atoms, or 128-node Gauss–Chebyshev
    /// (second kind) for the semicircle law on `[-σ, σ]`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match self {
            SpectralMeasure::Discrete { atoms } => atoms.clone(),
            SpectralMeasure::TwoPoint { sigma } => vec![(*sigma, 0.5), (-*sigma, 0.5)],
            SpectralMeasure::Semicircle { sigma } => {
                const NODES: usize = 128;
                let h = std::f64::consts::PI / (NODES + 1) as f64;
                (1..=NODES)
                    .map(|i| {
                        let theta = i as f64 * h;
                        // density (2/π)√(1−x²) on [−1,1]; Chebyshev-U weights h·sin²θ
                        (sigma * theta.cos(), 2.0 / std::f64::consts::PI * h * theta.sin().powi(2))
                    })
                    .collect()
            }
        }
    }
}
