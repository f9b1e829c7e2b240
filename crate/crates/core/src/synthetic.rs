//! Seeded generators for experiment inputs.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::Matrix;
use crate::rng;
use crate::tensor::{validate_shape, DenseTensor};

/// Default toy-video spatial grid (per side) and frame count.
pub const TOY_VIDEO_GRID: usize = 200;
pub const TOY_VIDEO_FRAMES: usize = 215;

/// Temporal frequencies of the toy-video modes, in cycles per window.
const TOY_FREQUENCIES: [f64; 4] = [2.0, 5.0, 9.0, 14.0];

/// Additive white noise at a given signal-to-noise ratio, defined as
/// `std(signal) / std(noise)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub snr: f64,
    pub seed: u64,
}

/// A rank-`rank` tensor with standard-normal factors, plus its normalized
/// ground-truth model.
pub fn random_lowrank(
    shape: &[usize],
    rank: usize,
    seed: u64,
) -> Result<(DenseTensor, KruskalTensor)> {
    validate_shape(shape)?;
    if rank == 0 {
        return Err(Error::InvalidConfig("rank must be at least 1".into()));
    }
    let factors = shape
        .iter()
        .enumerate()
        .map(|(n, &dim)| {
            let mut rng = rng::stream(seed, rng::SYNTH + n as u64);
            let data = (0..dim * rank)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            Matrix::new(dim, rank, data)
        })
        .collect::<Result<Vec<_>>>()?;
    let model = KruskalTensor::from_factors(factors)?.normalize();
    Ok((model.reconstruct(), model))
}

/// Population standard deviation of the entries.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// `t + E` with `E` i.i.d. `N(0, σ²)`, `σ = std(t) / snr`.
pub fn add_noise(t: &DenseTensor, spec: NoiseSpec) -> Result<DenseTensor> {
    if spec.snr.is_nan() || spec.snr <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "snr must be positive, got {}",
            spec.snr
        )));
    }
    if t.frobenius_norm() == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let sigma = std_dev(t.data()) / spec.snr;
    if sigma == 0.0 {
        return Ok(t.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = rng::stream(spec.seed, rng::NOISE);
    let data = t
        .data()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    DenseTensor::new(t.shape().to_vec(), data)
}

/// Frame range `[start, end)` of toy-video window `w`.
pub fn toy_video_window(frames: usize, w: usize) -> (usize, usize) {
    (w * frames / 4, (w + 1) * frames / 4)
}

/// A `grid x grid x frames` video of four separable Gaussian spots, one per
/// quadrant, each oscillating only inside its own quarter of the frames.
/// Returns the dense tensor and its rank-4 ground truth.
pub fn toy_video(grid: usize, frames: usize, seed: u64) -> Result<(DenseTensor, KruskalTensor)> {
    if grid < 16 || frames < 16 {
        return Err(Error::InvalidConfig(format!(
            "toy video needs grid >= 16 and frames >= 16, got {grid} and {frames}"
        )));
    }
    let g = grid as f64;
    let lo = g / 4.0;
    let hi = 3.0 * g / 4.0;
    let centers = [(lo, lo), (hi, lo), (lo, hi), (hi, hi)];
    let width = g / 10.0;
    let gauss = |c: f64| -> Vec<f64> {
        (0..grid)
            .map(|i| (-(i as f64 - c).powi(2) / (2.0 * width * width)).exp())
            .collect()
    };
    let mut rng = rng::stream(seed, rng::VIDEO);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ts = Vec::new();
    for (w, &(cx, cy)) in centers.iter().enumerate() {
        xs.push(gauss(cx));
        ys.push(gauss(cy));
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let (start, end) = toy_video_window(frames, w);
        let len = (end - start) as f64;
        let temporal = (0..frames)
            .map(|f| {
                if (start..end).contains(&f) {
                    (2.0 * PI * TOY_FREQUENCIES[w] * (f - start) as f64 / len + phase).sin()
                } else {
                    0.0
                }
            })
            .collect();
        ts.push(temporal);
    }
    let model = KruskalTensor::from_factors(vec![
        Matrix::from_columns(grid, &xs)?,
        Matrix::from_columns(grid, &ys)?,
        Matrix::from_columns(frames, &ts)?,
    ])?
    .normalize();
    Ok((model.reconstruct(), model))
}
