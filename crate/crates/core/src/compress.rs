//! Randomized tensor compression.
//!
//! Each selected mode is sketched with a random test matrix, sharpened by
//! normalized power iterations, orthonormalized, and projected out before the
//! next mode is processed, so later modes see the already-compressed tensor.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng;
use crate::tensor::{self, DenseTensor};

/// Below this `min|R_ii| / max|R_ii|` the final QR of a sketch is reported as
/// rank-deficient.
const RANK_COLLAPSE_RATIO: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SketchDistribution {
    /// Standard normal entries.
    #[default]
    Gaussian,
    /// Entries uniform on `[-1, 1]`.
    Uniform,
}

impl FromStr for SketchDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::InvalidConfig(format!(
                "unknown sketch distribution `{other}`"
            ))),
        }
    }
}

impl fmt::Display for SketchDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Uniform => "uniform",
        })
    }
}

/// How the sample matrix is re-orthonormalized between power iterations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PowerScheme {
    /// Permuted unit-lower factor of a partially pivoted LU.
    #[default]
    Lu,
    /// Orthonormal factor of a thin QR.
    Qr,
}

impl FromStr for PowerScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lu" => Ok(Self::Lu),
            "qr" => Ok(Self::Qr),
            other => Err(Error::InvalidConfig(format!(
                "unknown power scheme `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressConfig {
    pub target_rank: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    /// Zero-based modes to compress; `None` compresses every mode.
    pub modes: Option<Vec<usize>>,
    pub distribution: SketchDistribution,
    pub scheme: PowerScheme,
    pub seed: u64,
}

impl CompressConfig {
    pub fn new(target_rank: usize) -> Self {
        Self {
            target_rank,
            oversampling: 10,
            power_iterations: 2,
            modes: None,
            distribution: SketchDistribution::Gaussian,
            scheme: PowerScheme::Lu,
            seed: 0,
        }
    }

    pub fn oversampling(mut self, p: usize) -> Self {
        self.oversampling = p;
        self
    }

    pub fn power_iterations(mut self, q: usize) -> Self {
        self.power_iterations = q;
        self
    }

    pub fn modes(mut self, modes: Vec<usize>) -> Self {
        self.modes = Some(modes);
        self
    }

    pub fn distribution(mut self, d: SketchDistribution) -> Self {
        self.distribution = d;
        self
    }

    pub fn scheme(mut self, s: PowerScheme) -> Self {
        self.scheme = s;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn selected_modes(&self, order: usize) -> Result<Vec<usize>> {
        let mut modes = match &self.modes {
            None => (0..order).collect(),
            Some(m) => m.clone(),
        };
        if let Some(&bad) = modes.iter().find(|&&m| m >= order) {
            return Err(Error::InvalidMode { mode: bad, order });
        }
        modes.sort_unstable();
        modes.dedup();
        Ok(modes)
    }
}

/// Basis for one mode of a compressed tensor.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    /// Mode left uncompressed; carries the extent.
    Identity(usize),
    /// `I_n x l_n` matrix with orthonormal columns.
    Orthonormal(Matrix),
}

impl Basis {
    /// Ambient extent `I_n`.
    pub fn dim(&self) -> usize {
        match self {
            Basis::Identity(n) => *n,
            Basis::Orthonormal(q) => q.rows(),
        }
    }

    /// Compressed extent `l_n`.
    pub fn width(&self) -> usize {
        match self {
            Basis::Identity(n) => *n,
            Basis::Orthonormal(q) => q.cols(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Basis::Identity(_))
    }

    pub fn to_matrix(&self) -> Matrix {
        match self {
            Basis::Identity(n) => Matrix::identity(*n),
            Basis::Orthonormal(q) => q.clone(),
        }
    }

    /// `Q · m`, mapping compressed-space rows back to the ambient space.
    pub fn lift(&self, m: &Matrix) -> Result<Matrix> {
        match self {
            Basis::Identity(n) if m.rows() == *n => Ok(m.clone()),
            Basis::Identity(n) => Err(Error::DimensionMismatch(format!(
                "identity basis of size {n} applied to {} rows",
                m.rows()
            ))),
            Basis::Orthonormal(q) => q.matmul(m),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressionResult {
    pub compressed: DenseTensor,
    pub bases: Vec<Basis>,
    /// Modes whose final sketch was numerically rank-deficient.
    pub rank_deficient_modes: Vec<usize>,
}

fn sketch_matrix(
    rows: usize,
    cols: usize,
    dist: SketchDistribution,
    seed: u64,
    mode: usize,
) -> Matrix {
    let mut rng = rng::stream(seed, mode as u64);
    let data: Vec<f64> = match dist {
        SketchDistribution::Gaussian => (0..rows * cols)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect(),
        SketchDistribution::Uniform => {
            let u = Uniform::new_inclusive(-1.0, 1.0).expect("finite bounds");
            (0..rows * cols).map(|_| rng.sample(u)).collect()
        }
    };
    Matrix::new(rows, cols, data).expect("sized by construction")
}

fn orthogonalize(m: &Matrix, scheme: PowerScheme) -> Matrix {
    match scheme {
        PowerScheme::Lu => linalg::lu_lower(m),
        PowerScheme::Qr => linalg::thin_qr(m).0,
    }
}

/// Compress `t` into a small tensor plus one basis per mode.
///
/// The sketch width is `l = min(k + p, I_n)`; a mode with `l ≥ I_n` is left
/// uncompressed with an identity basis.
pub fn compress(t: &DenseTensor, cfg: &CompressConfig) -> Result<CompressionResult> {
    if cfg.target_rank == 0 {
        return Err(Error::InvalidConfig(
            "target rank must be at least 1".into(),
        ));
    }
    if t.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let modes = cfg.selected_modes(t.order())?;
    let mut bases: Vec<Basis> = t.shape().iter().map(|&n| Basis::Identity(n)).collect();
    let mut rank_deficient_modes = Vec::new();
    let mut work = t.clone();
    let l_target = cfg.target_rank + cfg.oversampling;

    for mode in modes {
        let n = work.shape()[mode];
        let l = l_target.min(n);
        if l >= n {
            continue;
        }
        let unfolded = tensor::unfold(&work, mode)?;
        let omega = sketch_matrix(unfolded.cols(), l, cfg.distribution, cfg.seed, mode);
        let mut y = unfolded.matmul(&omega)?;
        for _ in 0..cfg.power_iterations {
            let q = orthogonalize(&y, cfg.scheme);
            let z = orthogonalize(&unfolded.t_matmul(&q)?, cfg.scheme);
            y = unfolded.matmul(&z)?;
        }
        let (q, ratio) = linalg::thin_qr(&y);
        if ratio < RANK_COLLAPSE_RATIO {
            rank_deficient_modes.push(mode);
        }
        work = tensor::mode_n_product(&work, &q.transpose(), mode)?;
        bases[mode] = Basis::Orthonormal(q);
    }

    Ok(CompressionResult {
        compressed: work,
        bases,
        rank_deficient_modes,
    })
}

/// `t ×_0 P_0 ×_1 … ×_{N-1} P_{N-1}` with `P_n = Q_n Q_nᵀ` (identity modes skipped).
pub fn project(t: &DenseTensor, bases: &[Basis]) -> Result<DenseTensor> {
    check_bases(t, bases)?;
    let mut work = t.clone();
    for (mode, b) in bases.iter().enumerate() {
        if let Basis::Orthonormal(q) = b {
            work = tensor::mode_n_product(&work, &q.transpose(), mode)?;
        }
    }
    for (mode, b) in bases.iter().enumerate() {
        if let Basis::Orthonormal(q) = b {
            work = tensor::mode_n_product(&work, q, mode)?;
        }
    }
    Ok(work)
}

/// `‖X − X ×_0 P_0 ⋯ ×_{N-1} P_{N-1}‖_F`.
pub fn projection_residual(t: &DenseTensor, r: &CompressionResult) -> Result<f64> {
    let projected = project(t, &r.bases)?;
    Ok(t.sub(&projected)?.frobenius_norm())
}

/// `‖X ×_n (I − P_n)‖_F` for every mode (zero for identity modes).
pub fn per_mode_residuals(t: &DenseTensor, r: &CompressionResult) -> Result<Vec<f64>> {
    check_bases(t, &r.bases)?;
    r.bases
        .iter()
        .enumerate()
        .map(|(mode, b)| match b {
            Basis::Identity(_) => Ok(0.0),
            Basis::Orthonormal(q) => {
                let low = tensor::mode_n_product(t, &q.transpose(), mode)?;
                let back = tensor::mode_n_product(&low, q, mode)?;
                Ok(t.sub(&back)?.frobenius_norm())
            }
        })
        .collect()
}

fn check_bases(t: &DenseTensor, bases: &[Basis]) -> Result<()> {
    if bases.len() != t.order() || bases.iter().zip(t.shape()).any(|(b, &n)| b.dim() != n) {
        return Err(Error::DimensionMismatch(format!(
            "bases {:?} do not match tensor shape {:?}",
            bases.iter().map(Basis::dim).collect::<Vec<_>>(),
            t.shape()
        )));
    }
    Ok(())
}
