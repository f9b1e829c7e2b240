use std::time::Instant;

use super::{
    gram_hadamard_except, init_factors_with, normalize_columns, seconds_since, CpSolver,
    DecomposeConfig, FitTrace, IterationRecord,
};
use crate::error::{Error, Result};
use crate::kruskal::{inner_from_mttkrp, KruskalTensor};
use crate::linalg::{pinv_symmetric, Matrix};
use crate::tensor::{self, DenseTensor};

/// Alternating least squares.
///
/// Each sweep updates the factors in ascending mode order by
/// `U_n = X_(n) (⊙_{m≠n} U_m) (∗_{m≠n} U_mᵀU_m)†`. Every factor but the last
/// is scaled to unit columns right after its update; the last one's column
/// norms become the weights.
#[derive(Clone, Copy, Debug, Default)]
pub struct Als;

impl CpSolver for Als {
    fn name(&self) -> &'static str {
        "als"
    }

    fn solve(&self, t: &DenseTensor, cfg: &DecomposeConfig) -> Result<(KruskalTensor, FitTrace)> {
        let start = Instant::now();
        let norm_x2 = t.frobenius_norm().powi(2);
        if norm_x2 == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let rank = cfg.rank;
        let order = t.order();
        let last = order - 1;

        let mut factors = init_factors_with(t, rank, cfg.seed, cfg.init)?;
        let mut grams: Vec<Matrix> = factors.iter().map(Matrix::gram).collect();
        let mut weights = vec![1.0; rank];
        let mut trace = FitTrace::default();
        let mut fit_old = 0.0;
        let mut best: Option<(f64, Vec<f64>, Vec<Matrix>)> = None;

        for iteration in 1..=cfg.max_iter {
            let mut last_mttkrp = None;
            for mode in 0..order {
                let m = tensor::mttkrp(t, &factors, mode)?;
                let h = gram_hadamard_except(&grams, mode, rank);
                let mut u = m.matmul(&pinv_symmetric(&h))?;
                let norms = normalize_columns(&mut u);
                if mode == last {
                    weights = norms;
                    last_mttkrp = Some(m);
                }
                grams[mode] = u.gram();
                factors[mode] = u;
            }

            let m = last_mttkrp.expect("last mode updated");
            let inner = inner_from_mttkrp(&m, &factors[last], &weights);
            let norm_hat2 =
                quadratic_form(&gram_hadamard_except(&grams, usize::MAX, rank), &weights);
            let fit = 1.0 - (norm_x2 + norm_hat2 - 2.0 * inner) / norm_x2;
            if !fit.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::NonFinite { iteration });
            }
            trace.records.push(IterationRecord {
                iteration,
                fit,
                seconds: seconds_since(start),
            });
            trace.iterations = iteration;

            if best.as_ref().is_none_or(|(f, _, _)| fit >= *f) {
                best = Some((fit, weights.clone(), factors.clone()));
            }
            if iteration > 1 && (fit - fit_old).abs() < cfg.tol {
                trace.converged = true;
                break;
            }
            fit_old = fit;
        }

        let (fit, weights, factors) = best.expect("at least one iteration");
        let model = KruskalTensor::new(weights, factors)?.normalize();
        trace.seconds = seconds_since(start);
        trace.relative_error = (1.0 - fit).max(0.0).sqrt();
        Ok((model, trace))
    }
}

fn quadratic_form(h: &Matrix, w: &[f64]) -> f64 {
    let r = w.len();
    (0..r)
        .map(|i| (0..r).map(|j| w[i] * h.get(i, j) * w[j]).sum::<f64>())
        .sum()
}
