//! Expected-error bound for the randomized compression, its empirical check,
//! compression ratios, and paired benchmark sweeps.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::compress::{self, CompressConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::solvers::{decompose, DecomposeConfig, FitTrace};
use crate::synthetic::{self, NoiseSpec};
use crate::tensor::{self, DenseTensor};

pub const BENCH_CSV_HEADER: &str =
    "shape,rank,method,randomized,p,q,seed,seconds,iterations,error,speedup,converged";
pub const BOUND_CSV_HEADER: &str = "k,p,trials,tail_energy,bound,mean_residual,holds";

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub k: usize,
    pub p: usize,
    /// `Σ_{j>k} σ_{nj}²` for each mode `n`.
    pub tail_energies: Vec<f64>,
    /// `sqrt(1 + k/(p-1)) · sqrt(Σ_n tail_n)`.
    pub bound: f64,
    /// Mean of `‖X − X ×_1 P_1 ⋯ ×_N P_N‖_F` over the trials, if any were run.
    pub mean_residual: Option<f64>,
    pub trials: usize,
    /// `‖X‖_F` of the tensor the bound refers to.
    pub norm: f64,
}

impl BoundReport {
    pub fn tail_energy(&self) -> f64 {
        self.tail_energies.iter().sum()
    }

    /// The empirical mean does not exceed the bound, up to `floor`
    /// (absolute) round-off.
    pub fn holds(&self, floor: f64) -> bool {
        self.mean_residual.is_none_or(|m| m <= self.bound + floor)
    }

    /// Round-off floor used by [`BoundReport::holds`] in the CSV output:
    /// residuals below `1e-10 ‖X‖_F` are indistinguishable from zero.
    pub fn roundoff_floor(&self) -> f64 {
        1e-10 * self.norm
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{:e},{}",
            self.k,
            self.p,
            self.trials,
            self.tail_energy(),
            self.bound,
            self.mean_residual.unwrap_or(f64::NAN),
            self.holds(self.roundoff_floor())
        )
    }
}

/// Squared singular values of every mode unfolding, descending.
pub fn mode_spectra(t: &DenseTensor) -> Result<Vec<Vec<f64>>> {
    (0..t.order())
        .map(|mode| {
            let gram = tensor::mode_gram(t, mode)?;
            let (vals, _) = linalg::symmetric_eigen_desc(&gram);
            Ok(vals.into_iter().map(|v| v.max(0.0)).collect())
        })
        .collect()
}

fn check_bound_params(shape: &[usize], k: usize, p: usize) -> Result<()> {
    if k < 2 || p < 2 {
        return Err(Error::InvalidConfig(format!(
            "the bound needs k >= 2 and p >= 2, got k={k}, p={p}"
        )));
    }
    if let Some(&n) = shape.iter().find(|&&n| k >= n) {
        return Err(Error::InvalidConfig(format!(
            "target rank {k} is not below mode extent {n}"
        )));
    }
    Ok(())
}

fn bound_from_spectra(spectra: &[Vec<f64>], k: usize, p: usize, norm: f64) -> BoundReport {
    let tail_energies: Vec<f64> = spectra.iter().map(|s| s.iter().skip(k).sum()).collect();
    let prefactor = (1.0 + k as f64 / (p as f64 - 1.0)).sqrt();
    let bound = prefactor * tail_energies.iter().sum::<f64>().sqrt();
    BoundReport {
        k,
        p,
        tail_energies,
        bound,
        mean_residual: None,
        trials: 0,
        norm,
    }
}

/// Closed-form expected-error bound for compressing `t` at target rank `k`
/// with oversampling `p` and no power iterations.
pub fn expected_error_bound(t: &DenseTensor, k: usize, p: usize) -> Result<BoundReport> {
    check_bound_params(t.shape(), k, p)?;
    Ok(bound_from_spectra(
        &mode_spectra(t)?,
        k,
        p,
        t.frobenius_norm(),
    ))
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn mean_residual(t: &DenseTensor, k: usize, p: usize, trials: usize, seed: u64) -> Result<f64> {
    let residuals = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let cfg = CompressConfig::new(k)
                .oversampling(p)
                .power_iterations(0)
                .seed(trial_seed(seed, trial));
            let r = compress::compress(t, &cfg)?;
            compress::projection_residual(t, &r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(residuals.iter().sum::<f64>() / trials as f64)
}

/// Draws one random rank-`rank` tensor and, for each `k`, compares the mean
/// projection residual over `trials` independent sketches (`q = 0`) with the
/// closed-form bound.
pub fn validate_bound_sweep(
    shape: &[usize],
    rank: usize,
    ks: &[usize],
    p: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    if trials == 0 {
        return Err(Error::InvalidConfig(
            "at least one trial is required".into(),
        ));
    }
    for &k in ks {
        check_bound_params(shape, k, p)?;
    }
    let (t, _) = synthetic::random_lowrank(shape, rank, seed)?;
    let spectra = mode_spectra(&t)?;
    let norm = t.frobenius_norm();
    ks.iter()
        .map(|&k| {
            let mut report = bound_from_spectra(&spectra, k, p, norm);
            report.mean_residual = Some(mean_residual(
                &t,
                k,
                p,
                trials,
                seed.wrapping_add(k as u64),
            )?);
            report.trials = trials;
            Ok(report)
        })
        .collect()
}

pub fn validate_bound(
    shape: &[usize],
    rank: usize,
    k: usize,
    p: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    Ok(validate_bound_sweep(shape, rank, &[k], p, trials, seed)?.remove(0))
}

fn three_way(shape: &[usize], rank: usize) -> Result<(f64, f64, f64, f64)> {
    if shape.len() != 3 {
        return Err(Error::InvalidShape(format!(
            "compression ratios need a 3-way shape, got {shape:?}"
        )));
    }
    if rank == 0 {
        return Err(Error::InvalidConfig("rank must be at least 1".into()));
    }
    Ok((
        shape[0] as f64,
        shape[1] as f64,
        shape[2] as f64,
        rank as f64,
    ))
}

/// `IJK / (R (I + J + K + 1))`.
pub fn compression_ratio_cp(shape: &[usize], rank: usize) -> Result<f64> {
    let (i, j, k, r) = three_way(shape, rank)?;
    Ok(i * j * k / (r * (i + j + k + 1.0)))
}

/// `IJK / (R (IJ + K + 1))`: a rank-`R` SVD of the `IJ x K` reshaping.
pub fn compression_ratio_svd(shape: &[usize], rank: usize) -> Result<f64> {
    let (i, j, k, r) = three_way(shape, rank)?;
    Ok(i * j * k / (r * (i * j + k + 1.0)))
}

/// One matched deterministic/randomized comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub shape: Vec<usize>,
    pub rank: usize,
    pub method: String,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
    /// Additive noise level; `None` for noise-free data.
    pub snr: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Timed repetitions; the median is reported.
    pub repeat: usize,
}

impl BenchSpec {
    pub fn new(shape: Vec<usize>, rank: usize, method: &str, seed: u64) -> Self {
        Self {
            shape,
            rank,
            method: method.to_string(),
            oversampling: 10,
            power_iterations: 2,
            seed,
            snr: None,
            tol: 1e-5,
            max_iter: 500,
            repeat: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub shape: Vec<usize>,
    pub rank: usize,
    pub method: String,
    pub randomized: bool,
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    pub seconds: f64,
    pub iterations: usize,
    pub error: f64,
    /// Matched deterministic seconds over this record's seconds (1 for the
    /// deterministic record itself).
    pub speedup: f64,
    pub converged: bool,
    /// Set when the run errored; numeric fields are then NaN.
    pub failure: Option<String>,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        let shape = self
            .shape
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("x");
        let mut row = String::new();
        let _ = write!(
            row,
            "{shape},{},{},{},{},{},{},{:.6},{},{:e},{:.4},{}",
            self.rank,
            self.method,
            self.randomized,
            self.p,
            self.q,
            self.seed,
            self.seconds,
            self.iterations,
            self.error,
            self.speedup,
            self.converged
        );
        row
    }
}

fn timed_run(t: &DenseTensor, cfg: &DecomposeConfig, repeat: usize) -> Result<(FitTrace, f64)> {
    let mut seconds = Vec::with_capacity(repeat.max(1));
    let mut last = None;
    for _ in 0..repeat.max(1) {
        let (_, trace) = decompose(t, cfg)?;
        seconds.push(trace.seconds.max(f64::MIN_POSITIVE));
        last = Some(trace);
    }
    seconds.sort_by(f64::total_cmp);
    Ok((last.expect("ran at least once"), seconds[seconds.len() / 2]))
}

fn record(spec: &BenchSpec, randomized: bool, run: &Result<(FitTrace, f64)>) -> BenchRecord {
    let (p, q) = if randomized {
        (spec.oversampling, spec.power_iterations)
    } else {
        (0, 0)
    };
    let mut rec = BenchRecord {
        shape: spec.shape.clone(),
        rank: spec.rank,
        method: spec.method.clone(),
        randomized,
        p,
        q,
        seed: spec.seed,
        seconds: f64::NAN,
        iterations: 0,
        error: f64::NAN,
        speedup: f64::NAN,
        converged: false,
        failure: None,
    };
    match run {
        Ok((trace, secs)) => {
            rec.seconds = *secs;
            rec.iterations = trace.iterations;
            rec.error = trace.relative_error;
            rec.converged = trace.converged;
        }
        Err(e) => rec.failure = Some(e.to_string()),
    }
    rec
}

fn bench_one(spec: &BenchSpec) -> Vec<BenchRecord> {
    let data =
        synthetic::random_lowrank(&spec.shape, spec.rank, spec.seed).and_then(|(t, _)| match spec
            .snr
        {
            Some(snr) => synthetic::add_noise(
                &t,
                NoiseSpec {
                    snr,
                    seed: spec.seed.wrapping_add(1),
                },
            ),
            None => Ok(t),
        });
    let t = match data {
        Ok(t) => t,
        Err(e) => {
            let failed = Err(e);
            return vec![record(spec, false, &failed), record(spec, true, &failed)];
        }
    };
    let base = DecomposeConfig::new(spec.rank)
        .method(&spec.method)
        .oversampling(spec.oversampling)
        .power_iterations(spec.power_iterations)
        .tol(spec.tol)
        .max_iter(spec.max_iter)
        .seed(spec.seed);
    let det = record(
        spec,
        false,
        &timed_run(&t, &base.clone().deterministic(), spec.repeat),
    );
    let mut rnd = record(spec, true, &timed_run(&t, &base, spec.repeat));
    let mut det = det;
    det.speedup = if det.failure.is_none() { 1.0 } else { f64::NAN };
    rnd.speedup = det.seconds / rnd.seconds;
    vec![det, rnd]
}

/// Runs each spec as a deterministic/randomized pair on shared data. Runs are
/// sequential unless `parallel` is set (only sensible when timings are not
/// of interest). Failures are recorded, never propagated.
pub fn bench_sweep(specs: &[BenchSpec], parallel: bool) -> Vec<BenchRecord> {
    if parallel {
        specs.par_iter().flat_map_iter(bench_one).collect()
    } else {
        specs.iter().flat_map(bench_one).collect()
    }
}

pub fn bench_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn bound_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from(BOUND_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compression_ratios() {
        assert!((compression_ratio_cp(&[100, 100, 100], 4).unwrap() - 830.56).abs() < 0.01);
        assert!((compression_ratio_svd(&[100, 100, 100], 4).unwrap() - 24.75).abs() < 0.01);
        assert_eq!(compression_ratio_cp(&[2, 2, 2], 1).unwrap(), 8.0 / 7.0);
        assert!(compression_ratio_cp(&[2, 2], 1).is_err());
    }

    #[test]
    fn bound_preconditions() {
        let (t, _) = synthetic::random_lowrank(&[8, 8, 8], 2, 0).unwrap();
        assert!(expected_error_bound(&t, 1, 2).is_err());
        assert!(expected_error_bound(&t, 2, 1).is_err());
        assert!(expected_error_bound(&t, 8, 2).is_err());
        assert!(expected_error_bound(&t, 2, 2).is_ok());
    }

    #[test]
    fn bound_vanishes_on_exact_rank_and_scales() {
        let (t, _) = synthetic::random_lowrank(&[12, 11, 10], 3, 5).unwrap();
        let b = expected_error_bound(&t, 3, 2).unwrap();
        assert!(b.bound <= 1e-6 * t.frobenius_norm());
        let noisy = synthetic::add_noise(&t, NoiseSpec { snr: 3.0, seed: 1 }).unwrap();
        let b1 = expected_error_bound(&noisy, 3, 2).unwrap();
        let b2 = expected_error_bound(&noisy.scale(2.5), 3, 2).unwrap();
        assert!((b2.bound - 2.5 * b1.bound).abs() <= 1e-10 * b2.bound);
    }

    #[test]
    fn bound_decreases_in_p() {
        let t = DenseTensor::from_fn(&[10, 10, 10], |ix| {
            ((ix[0] * 13 + ix[1] * 7 + ix[2] * 3) as f64).sin()
        })
        .unwrap();
        let bounds: Vec<f64> = (2..6)
            .map(|p| expected_error_bound(&t, 3, p).unwrap().bound)
            .collect();
        assert!(bounds.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bench_csv_shape() {
        let mut spec = BenchSpec::new(vec![12, 12, 12], 2, "als", 1);
        spec.oversampling = 2;
        let recs = bench_sweep(&[spec], false);
        assert_eq!(recs.len(), 2);
        let csv = bench_csv(&recs);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(BENCH_CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 12);
        assert_eq!(row[0], "12x12x12");
        assert_eq!(row[3], "false");
    }

    #[test]
    fn bench_failure_is_recorded() {
        let spec = BenchSpec::new(vec![5, 5, 5], 2, "nope", 1);
        let recs = bench_sweep(&[spec], false);
        assert!(recs.iter().all(|r| r.failure.is_some() && !r.converged));
    }
}
