//! Synthetic noisy test functions and the sampling procedures used by the
//! experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff_engine::PointSet;
use crate::error::{domain, Error, Result};

/// Counter-based generator keyed by `(seed, stream)`.
///
/// The same key yields the same sequence on every platform, so trials can
/// run on any thread as long as each trial owns its stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng {
            seed,
            stream,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw (Box–Muller, pairs cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroundTruth {
    /// `x^T x`
    Quadratic,
    /// `(sum_i x_i)^degree`
    PowerSum { degree: u32 },
}

impl GroundTruth {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            GroundTruth::Quadratic => x.iter().map(|v| v * v).sum(),
            GroundTruth::PowerSum { degree } => x.iter().sum::<f64>().powi(*degree as i32),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `f_s(x) (1 + xi)`
    Multiplicative { sigma: f64 },
    /// `f_s(x) + xi`
    Additive { sigma: f64 },
}

impl NoiseModel {
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::Multiplicative { sigma } | NoiseModel::Additive { sigma } => sigma,
        }
    }
}

/// Ground truth plus Gaussian noise `xi ~ N(0, sigma^2)` on `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyFunctionSpec {
    pub ground_truth: GroundTruth,
    pub noise: NoiseModel,
    pub dim: usize,
}

impl NoisyFunctionSpec {
    pub fn validate(&self) -> Result<()> {
        let sigma = self.noise.sigma();
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return domain("noise sigma must be finite and nonnegative");
        }
        if self.dim == 0 {
            return domain("function dimension must be at least 1");
        }
        Ok(())
    }

    /// Same function family in another dimension.
    pub fn with_dim(&self, dim: usize) -> Self {
        NoisyFunctionSpec { dim, ..*self }
    }

    pub fn noiseless(&self, x: &[f64]) -> f64 {
        self.ground_truth.value(x)
    }

    /// Standard deviation of `f(x)` about `f_s(x)`.
    pub fn noise_level_at(&self, x: &[f64]) -> f64 {
        match self.noise {
            NoiseModel::Additive { sigma } => sigma,
            NoiseModel::Multiplicative { sigma } => sigma * self.noiseless(x).abs(),
        }
    }
}

/// One noisy evaluation of `spec` at `x`; consumes one normal draw.
pub fn evaluate(spec: &NoisyFunctionSpec, x: &[f64], rng: &mut SeededRng) -> Result<f64> {
    if x.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: x.len(),
        });
    }
    let fs = spec.noiseless(x);
    let xi = rng.normal();
    Ok(match spec.noise {
        NoiseModel::Multiplicative { sigma } => fs * (1.0 + sigma * xi),
        NoiseModel::Additive { sigma } => fs + sigma * xi,
    })
}

/// Evaluates every point of `points` in order.
pub fn evaluate_all(spec: &NoisyFunctionSpec, points: &[Vec<f64>], rng: &mut SeededRng) -> Result<Vec<f64>> {
    points.iter().map(|x| evaluate(spec, x, rng)).collect()
}

/// Collinear, equally spaced points `y0 + j h d`, `j = 0..count`.
pub fn standard_points(y0: &[f64], d: &[f64], h: f64, count: usize) -> Result<PointSet> {
    if y0.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: y0.len(),
            got: d.len(),
        });
    }
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return domain(format!("direction must have unit length, got {norm}"));
    }
    if !(h > 0.0) {
        return domain("spacing h must be positive");
    }
    let points = (0..count)
        .map(|j| y0.iter().zip(d).map(|(a, b)| a + j as f64 * h * b).collect())
        .collect();
    PointSet::new(points)
}

/// `y0` followed by `count - 1` points drawn uniformly from the box
/// `||y - y0||_inf <= h`.
pub fn arbitrary_points(y0: &[f64], h: f64, count: usize, rng: &mut SeededRng) -> Result<PointSet> {
    if !(h > 0.0) {
        return domain("box radius h must be positive");
    }
    if count < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: count });
    }
    let mut points = Vec::with_capacity(count);
    points.push(y0.to_vec());
    for _ in 1..count {
        points.push(box_point(y0, h, rng));
    }
    PointSet::new(points)
}

/// One point uniform in the box of radius `h` about `center`.
pub fn box_point(center: &[f64], h: f64, rng: &mut SeededRng) -> Vec<f64> {
    center.iter().map(|c| c + rng.uniform_in(-h, h)).collect()
}

/// Base point uniform on `[-box, box]^n` and a direction from a normalised
/// Gaussian vector.
pub fn random_base_and_direction(n: usize, box_radius: f64, rng: &mut SeededRng) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return domain("dimension must be at least 1");
    }
    if !(box_radius > 0.0) {
        return domain("box radius must be positive");
    }
    let y0: Vec<f64> = (0..n).map(|_| rng.uniform_in(-box_radius, box_radius)).collect();
    let d = loop {
        let g: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-300 {
            break g.into_iter().map(|v| v / norm).collect();
        }
    };
    Ok((y0, d))
}
