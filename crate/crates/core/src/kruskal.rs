//! The Kruskal (CP) model: a weight vector plus one factor matrix per mode.

use std::cmp::Ordering;

use crate::compress::Basis;
use crate::error::{Error, Result};
use crate::linalg::{gemm_raw, Matrix};
use crate::tensor::{self, DenseTensor};

/// `Σ_r λ_r · u⁰_r ∘ u¹_r ∘ … ∘ u^{N-1}_r`.
///
/// After [`KruskalTensor::normalize`] every factor column has unit norm, the
/// weights are non-negative and sorted in non-increasing order, and each
/// column of the first factor has a non-negative largest-magnitude entry
/// (for order ≥ 2).
#[derive(Clone, Debug, PartialEq)]
pub struct KruskalTensor {
    weights: Vec<f64>,
    factors: Vec<Matrix>,
}

impl KruskalTensor {
    pub fn new(weights: Vec<f64>, factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidShape(
                "a Kruskal tensor needs at least one factor".into(),
            ));
        }
        let r = weights.len();
        for (n, f) in factors.iter().enumerate() {
            if f.cols() != r {
                return Err(Error::DimensionMismatch(format!(
                    "factor {n} has {} columns but there are {r} weights",
                    f.cols()
                )));
            }
            if f.rows() == 0 {
                return Err(Error::InvalidShape(format!("factor {n} has no rows")));
            }
        }
        Ok(Self { weights, factors })
    }

    /// Unit weights.
    pub fn from_factors(factors: Vec<Matrix>) -> Result<Self> {
        let r = factors.first().map_or(0, Matrix::cols);
        Self::new(vec![1.0; r], factors)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &Matrix {
        &self.factors[mode]
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<Matrix>) {
        (self.weights, self.factors)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite()) && self.factors.iter().all(Matrix::is_finite)
    }

    /// Dense tensor of the model.
    pub fn reconstruct(&self) -> DenseTensor {
        let r = self.rank();
        let shape = self.shape();
        let n0 = shape[0];
        let s: usize = shape[1..].iter().product();
        let mut out = vec![0.0; n0 * s];
        if r > 0 {
            let scaled = Matrix::from_fn(n0, r, |i, j| self.factors[0].get(i, j) * self.weights[j]);
            let rest: Vec<&Matrix> = self.factors[1..].iter().collect();
            let kr = tensor::khatri_rao_chain(&rest, r);
            gemm_raw(
                n0,
                r,
                s,
                scaled.data(),
                r as isize,
                1,
                kr.data(),
                1,
                r as isize,
                &mut out,
                s as isize,
                1,
                0.0,
            );
        }
        DenseTensor::from_raw(shape, out)
    }

    /// `‖X̂‖²` from factor Gram matrices: `λᵀ (∗_n U_nᵀU_n) λ`.
    pub fn norm_squared(&self) -> f64 {
        let r = self.rank();
        let mut h = Matrix::from_raw(r, r, vec![1.0; r * r]);
        for f in &self.factors {
            h = h.hadamard(&f.gram()).expect("square rank-sized grams");
        }
        let mut acc = 0.0;
        for i in 0..r {
            for j in 0..r {
                acc += self.weights[i] * h.get(i, j) * self.weights[j];
            }
        }
        acc
    }

    /// `⟨X, X̂⟩` via one MTTKRP, without forming `X̂`.
    pub fn inner_product(&self, x: &DenseTensor) -> Result<f64> {
        if x.shape() != self.shape().as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "model shape {:?} vs tensor shape {:?}",
                self.shape(),
                x.shape()
            )));
        }
        let last = self.order() - 1;
        let m = tensor::mttkrp(x, &self.factors, last)?;
        Ok(inner_from_mttkrp(&m, &self.factors[last], &self.weights))
    }

    /// Canonical form: unit columns, absorbed non-negative weights sorted in
    /// non-increasing order, and the sign convention on the first factor.
    /// Components whose columns vanish get weight 0 and `e_1` columns.
    pub fn normalize(&self) -> KruskalTensor {
        let r = self.rank();
        let order = self.order();
        let mut weights = self.weights.clone();
        let mut factors = self.factors.clone();
        for (c, weight) in weights.iter_mut().enumerate() {
            let mut zero = *weight == 0.0;
            for f in factors.iter_mut() {
                let col = f.column(c);
                let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    zero = true;
                } else if norm != 1.0 {
                    let scaled: Vec<f64> = col.iter().map(|v| v / norm).collect();
                    f.set_column(c, &scaled);
                    *weight *= norm;
                }
            }
            if zero {
                *weight = 0.0;
                for f in factors.iter_mut() {
                    let mut e1 = vec![0.0; f.rows()];
                    e1[0] = 1.0;
                    f.set_column(c, &e1);
                }
                continue;
            }
            if *weight < 0.0 {
                *weight = -*weight;
                flip_column(&mut factors[0], c);
            }
            if order >= 2 && max_magnitude_entry(&factors[0].column(c)) < 0.0 {
                flip_column(&mut factors[0], c);
                flip_column(&mut factors[1], c);
            }
        }

        let mut perm: Vec<usize> = (0..r).collect();
        let first = &factors[0];
        perm.sort_by(|&a, &b| {
            weights[b].total_cmp(&weights[a]).then_with(|| {
                (0..first.rows())
                    .map(|i| first.get(i, a).total_cmp(&first.get(i, b)))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
        });
        if perm.iter().enumerate().any(|(i, &p)| i != p) {
            weights = perm.iter().map(|&p| weights[p]).collect();
            factors = factors
                .iter()
                .map(|f| Matrix::from_fn(f.rows(), r, |i, j| f.get(i, perm[j])))
                .collect();
        }
        KruskalTensor { weights, factors }
    }
}

pub(crate) fn inner_from_mttkrp(m: &Matrix, last: &Matrix, weights: &[f64]) -> f64 {
    let r = weights.len();
    let mut acc = vec![0.0; r];
    for (mrow, frow) in m
        .data()
        .chunks_exact(r.max(1))
        .zip(last.data().chunks_exact(r.max(1)))
    {
        for ((a, x), y) in acc.iter_mut().zip(mrow).zip(frow) {
            *a += x * y;
        }
    }
    acc.iter().zip(weights).map(|(a, w)| a * w).sum()
}

fn flip_column(f: &mut Matrix, c: usize) {
    for i in 0..f.rows() {
        let v = f.get(i, c);
        f.set(i, c, -v);
    }
}

/// The entry of largest magnitude (first one on ties).
fn max_magnitude_entry(col: &[f64]) -> f64 {
    let mut best = 0.0_f64;
    for &v in col {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    best
}

pub fn reconstruct(k: &KruskalTensor) -> DenseTensor {
    k.reconstruct()
}

pub fn normalize(k: &KruskalTensor) -> KruskalTensor {
    k.normalize()
}

/// `ρ = 1 − (‖X‖² + ‖X̂‖² − 2⟨X̂, X⟩) / ‖X‖²`, evaluated from factor algebra.
pub fn fit(x: &DenseTensor, k: &KruskalTensor) -> Result<f64> {
    let xx = x.frobenius_norm().powi(2);
    if xx == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let inner = k.inner_product(x)?;
    Ok(1.0 - (xx + k.norm_squared() - 2.0 * inner) / xx)
}

/// `‖X − X̂‖_F / ‖X‖_F` with `X̂` materialized.
pub fn relative_error(x: &DenseTensor, k: &KruskalTensor) -> Result<f64> {
    let nx = x.frobenius_norm();
    if nx == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let xhat = k.reconstruct();
    Ok(x.sub(&xhat)?.frobenius_norm() / nx)
}

/// Maps compressed-space factors back through the per-mode bases
/// (`U_n ← Q_n Ũ_n`) and re-normalizes.
pub fn recover(compressed: &KruskalTensor, bases: &[Basis]) -> Result<KruskalTensor> {
    if bases.len() != compressed.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} bases for a model of order {}",
            bases.len(),
            compressed.order()
        )));
    }
    let factors = compressed
        .factors
        .iter()
        .zip(bases)
        .map(|(f, b)| b.lift(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(KruskalTensor::new(compressed.weights.clone(), factors)?.normalize())
}
