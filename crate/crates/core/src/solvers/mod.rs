//! CP solvers and the compress → solve → recover pipeline.
//!
//! Solvers implement [`CpSolver`] and are looked up by name in a
//! [`SolverRegistry`]; the stock registry carries `als` and `bcd`.

mod als;
mod bcd;

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};

pub use als::Als;
pub use bcd::Bcd;

use crate::compress::{self, CompressConfig};
use crate::error::{Error, Result};
use crate::kruskal::{self, KruskalTensor};
use crate::linalg::{self, Matrix};
use crate::rng;
use crate::tensor::{self, DenseTensor};

/// Inner iteration cap for each rank-one block in BCD.
pub const BCD_INNER_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitStrategy {
    /// Leading eigenvectors of each mode's Gram matrix.
    #[default]
    Eigen,
    /// Seeded standard-normal columns scaled to unit norm.
    Random,
}

impl FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigen" => Ok(Self::Eigen),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidConfig(format!(
                "unknown init strategy `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecomposeConfig {
    pub rank: usize,
    /// Registry name of the solver, e.g. `"als"` or `"bcd"`.
    pub method: String,
    pub randomized: bool,
    pub compress: CompressConfig,
    /// Stop once the fit changes by less than this between iterations.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub init: InitStrategy,
}

impl DecomposeConfig {
    /// Randomized ALS with `p = 10`, `q = 2`, `tol = 1e-5`, `max_iter = 500`.
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            method: "als".into(),
            randomized: true,
            compress: CompressConfig::new(rank),
            tol: 1e-5,
            max_iter: 500,
            seed: 0,
            init: InitStrategy::Eigen,
        }
    }

    pub fn method(mut self, name: &str) -> Self {
        self.method = name.to_string();
        self
    }

    pub fn randomized(mut self, on: bool) -> Self {
        self.randomized = on;
        self
    }

    pub fn deterministic(self) -> Self {
        self.randomized(false)
    }

    pub fn oversampling(mut self, p: usize) -> Self {
        self.compress.oversampling = p;
        self
    }

    pub fn power_iterations(mut self, q: usize) -> Self {
        self.compress.power_iterations = q;
        self
    }

    pub fn compress_modes(mut self, modes: Vec<usize>) -> Self {
        self.compress.modes = Some(modes);
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    /// Seeds both the initialization and the sketches.
    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.compress.seed = seed;
        self
    }

    pub fn init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 || !self.tol.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.randomized && self.compress.target_rank != self.rank {
            return Err(Error::InvalidConfig(format!(
                "compression target rank {} differs from CP rank {}",
                self.compress.target_rank, self.rank
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub fit: f64,
    /// Wall-clock seconds since the solver started.
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitTrace {
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative error of the returned model. [`decompose`] measures it
    /// exactly against the original (uncompressed) tensor; a bare solver
    /// reports `sqrt(1 - fit)` on the tensor it was given.
    pub relative_error: f64,
    /// Wall-clock seconds of the whole solve (compression and recovery
    /// included, final error evaluation excluded).
    pub seconds: f64,
}

impl FitTrace {
    pub fn final_fit(&self) -> Option<f64> {
        self.records.last().map(|r| r.fit)
    }
}

/// A CP fitting strategy.
pub trait CpSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Fit a rank-`cfg.rank` model to `t`, returning it in normalized form.
    fn solve(&self, t: &DenseTensor, cfg: &DecomposeConfig) -> Result<(KruskalTensor, FitTrace)>;
}

#[derive(Clone, Default)]
pub struct SolverRegistry {
    solvers: BTreeMap<String, Arc<dyn CpSolver>>,
}

impl SolverRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding [`Als`] and [`Bcd`].
    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(Als));
        reg.register(Arc::new(Bcd));
        reg
    }

    pub fn register(&mut self, solver: Arc<dyn CpSolver>) {
        self.solvers.insert(solver.name().to_string(), solver);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CpSolver>> {
        self.solvers
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.solvers.keys().map(String::as_str).collect()
    }
}

/// Initial factor matrices: for modes `1..N` the top-`rank` eigenvectors of
/// `X_(n) X_(n)ᵀ`, eigenvalues descending. Mode 0 is returned as zeros since
/// the first update overwrites it. When `rank > I_n` the block is padded with
/// seeded unit-norm random columns.
pub fn init_factors(t: &DenseTensor, rank: usize, seed: u64) -> Result<Vec<Matrix>> {
    init_factors_with(t, rank, seed, InitStrategy::Eigen)
}

pub fn init_factors_with(
    t: &DenseTensor,
    rank: usize,
    seed: u64,
    strategy: InitStrategy,
) -> Result<Vec<Matrix>> {
    if rank == 0 {
        return Err(Error::InvalidConfig("rank must be at least 1".into()));
    }
    let mut factors = Vec::with_capacity(t.order());
    for (mode, &n) in t.shape().iter().enumerate() {
        if mode == 0 {
            factors.push(Matrix::zeros(n, rank));
            continue;
        }
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(rank);
        if strategy == InitStrategy::Eigen {
            let gram = tensor::mode_gram(t, mode)?;
            let (_, vecs) = linalg::symmetric_eigen_desc(&gram);
            columns.extend((0..rank.min(n)).map(|j| vecs.column(j)));
        }
        let mut rng = rng::stream(seed, rng::INIT + mode as u64);
        while columns.len() < rank {
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if columns.len() < n {
                for c in &columns {
                    let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            columns.push(v);
        }
        factors.push(Matrix::from_columns(n, &columns)?);
    }
    Ok(factors)
}

/// Solve directly on `t`, or compress, solve, and recover when
/// `cfg.randomized`. Uses the stock solver registry.
pub fn decompose(t: &DenseTensor, cfg: &DecomposeConfig) -> Result<(KruskalTensor, FitTrace)> {
    decompose_with(&SolverRegistry::with_defaults(), t, cfg)
}

pub fn decompose_with(
    registry: &SolverRegistry,
    t: &DenseTensor,
    cfg: &DecomposeConfig,
) -> Result<(KruskalTensor, FitTrace)> {
    cfg.validate()?;
    let solver = registry.get(&cfg.method)?;
    let start = Instant::now();
    let (model, mut trace) = if cfg.randomized {
        let compressed = compress::compress(t, &cfg.compress)?;
        let (small, trace) = solver.solve(&compressed.compressed, cfg)?;
        (kruskal::recover(&small, &compressed.bases)?, trace)
    } else {
        let (model, trace) = solver.solve(t, cfg)?;
        (model.normalize(), trace)
    };
    trace.seconds = start.elapsed().as_secs_f64();
    trace.relative_error = kruskal::relative_error(t, &model)?;
    Ok((model, trace))
}

/// Direct ALS on `t` (no compression), regardless of `cfg.method`.
pub fn als_solve(t: &DenseTensor, cfg: &DecomposeConfig) -> Result<(KruskalTensor, FitTrace)> {
    cfg.validate()?;
    Als.solve(t, cfg)
}

/// Direct BCD on `t` (no compression), regardless of `cfg.method`.
pub fn bcd_solve(t: &DenseTensor, cfg: &DecomposeConfig) -> Result<(KruskalTensor, FitTrace)> {
    cfg.validate()?;
    Bcd.solve(t, cfg)
}

/// Hadamard product of the Gram matrices of every mode except `skip`.
pub(crate) fn gram_hadamard_except(grams: &[Matrix], skip: usize, rank: usize) -> Matrix {
    let mut h = Matrix::new(rank, rank, vec![1.0; rank * rank]).expect("square");
    for (n, g) in grams.iter().enumerate() {
        if n != skip {
            h = h.hadamard(g).expect("rank-sized grams");
        }
    }
    h
}

/// Divides each column by its norm, returning the norms. Zero columns are
/// left untouched.
pub(crate) fn normalize_columns(m: &mut Matrix) -> Vec<f64> {
    let norms = m.column_norms();
    let cols = m.cols();
    for row in m.data_mut().chunks_exact_mut(cols.max(1)) {
        for (v, &n) in row.iter_mut().zip(&norms) {
            if n > 0.0 {
                *v /= n;
            }
        }
    }
    norms
}

pub(crate) fn seconds_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}
