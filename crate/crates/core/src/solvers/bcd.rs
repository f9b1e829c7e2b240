use std::time::Instant;

use super::{
    init_factors_with, seconds_since, CpSolver, DecomposeConfig, FitTrace, IterationRecord,
    BCD_INNER_MAX_ITER,
};
use crate::error::{Error, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::{pinv_symmetric, Matrix};
use crate::tensor::{self, DenseTensor};

/// Block coordinate descent over rank-one components.
///
/// The first sweep is successive deflation: component `r` is fit by rank-one
/// ALS against the residual `X − Σ_{r' < r} λ_{r'} u_{r'}∘…`, and the residual
/// is updated once it converges. Later sweeps revisit each component against
/// the residual of all the others, until the overall fit stops changing.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bcd;

struct Component {
    weight: f64,
    columns: Vec<Vec<f64>>,
}

impl CpSolver for Bcd {
    fn name(&self) -> &'static str {
        "bcd"
    }

    fn solve(&self, t: &DenseTensor, cfg: &DecomposeConfig) -> Result<(KruskalTensor, FitTrace)> {
        let start = Instant::now();
        let norm_x2 = t.frobenius_norm().powi(2);
        if norm_x2 == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let rank = cfg.rank;
        let init = init_factors_with(t, rank, cfg.seed, cfg.init)?;
        let mut comps: Vec<Component> = (0..rank)
            .map(|r| Component {
                weight: 0.0,
                columns: init.iter().map(|f| f.column(r)).collect(),
            })
            .collect();

        let mut residual = t.data().to_vec();
        let mut trace = FitTrace::default();
        let mut fit_old = 0.0;

        for iteration in 1..=cfg.max_iter {
            for comp in comps.iter_mut() {
                if comp.weight != 0.0 {
                    add_rank_one(&mut residual, t.shape(), comp, 1.0);
                }
                let target = DenseTensor::from_raw(t.shape().to_vec(), residual);
                fit_rank_one(&target, comp, cfg.tol, iteration)?;
                residual = target.into_data();
                add_rank_one(&mut residual, t.shape(), comp, -1.0);
            }
            let resid2: f64 = residual.iter().map(|v| v * v).sum();
            let fit = 1.0 - resid2 / norm_x2;
            if !fit.is_finite() {
                return Err(Error::NonFinite { iteration });
            }
            trace.records.push(IterationRecord {
                iteration,
                fit,
                seconds: seconds_since(start),
            });
            trace.iterations = iteration;
            if iteration > 1 && (fit - fit_old).abs() < cfg.tol {
                trace.converged = true;
                break;
            }
            fit_old = fit;
        }

        let weights = comps.iter().map(|c| c.weight).collect();
        let factors = (0..t.order())
            .map(|n| {
                let cols: Vec<Vec<f64>> = comps.iter().map(|c| c.columns[n].clone()).collect();
                Matrix::from_columns(t.shape()[n], &cols)
            })
            .collect::<Result<Vec<_>>>()?;
        let model = KruskalTensor::new(weights, factors)?.normalize();
        trace.seconds = seconds_since(start);
        trace.relative_error = (1.0 - trace.final_fit().unwrap_or(0.0)).max(0.0).sqrt();
        Ok((model, trace))
    }
}

/// Rank-one ALS on `target`, stopping when the fit of the single component
/// to `target` changes by less than `tol`.
fn fit_rank_one(
    target: &DenseTensor,
    comp: &mut Component,
    tol: f64,
    iteration: usize,
) -> Result<()> {
    let order = target.order();
    let last = order - 1;
    let target2 = target.frobenius_norm().powi(2);
    if target2 == 0.0 {
        comp.weight = 0.0;
        return Ok(());
    }
    let mut factors: Vec<Matrix> = comp
        .columns
        .iter()
        .map(|c| Matrix::new(c.len(), 1, c.clone()))
        .collect::<Result<_>>()?;
    let mut sq_norms: Vec<f64> = comp
        .columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    let mut fit_old = 0.0;
    for inner in 1..=BCD_INNER_MAX_ITER {
        let mut proj = 0.0;
        for mode in 0..order {
            let m = tensor::mttkrp(target, &factors, mode)?;
            let denom: f64 = sq_norms
                .iter()
                .enumerate()
                .filter(|&(n, _)| n != mode)
                .map(|(_, v)| v)
                .product();
            let scale = pinv_symmetric(&Matrix::new(1, 1, vec![denom])?).get(0, 0);
            let mut v: Vec<f64> = m.data().iter().map(|x| x * scale).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            if mode == last {
                comp.weight = norm;
                // ⟨target, u_0∘…∘u_last⟩ with unit columns
                proj = m.data().iter().zip(&v).map(|(a, b)| a * b).sum();
            }
            sq_norms[mode] = if norm > 0.0 { 1.0 } else { 0.0 };
            factors[mode] = Matrix::new(v.len(), 1, v)?;
        }
        let w = comp.weight;
        let fit = 1.0 - (target2 + w * w - 2.0 * w * proj) / target2;
        if !fit.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        if inner > 1 && (fit - fit_old).abs() < tol {
            break;
        }
        fit_old = fit;
    }
    comp.columns = factors.into_iter().map(Matrix::into_data).collect();
    Ok(())
}

/// `data += sign · λ · u_0∘…∘u_{N-1}` in row-major layout.
fn add_rank_one(data: &mut [f64], shape: &[usize], comp: &Component, sign: f64) {
    let s: usize = shape[1..].iter().product();
    let mut tail = vec![sign * comp.weight];
    for col in &comp.columns[1..] {
        tail = tail
            .iter()
            .flat_map(|&a| col.iter().map(move |&b| a * b))
            .collect();
    }
    debug_assert_eq!(tail.len(), s);
    for (row, &a) in data.chunks_exact_mut(s).zip(&comp.columns[0]) {
        for (d, &b) in row.iter_mut().zip(&tail) {
            *d += a * b;
        }
    }
}
