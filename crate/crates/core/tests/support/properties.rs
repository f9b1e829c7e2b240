//! Property checks shared by the proptest suite and the acceptance runner.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rcp::compress::{self, CompressConfig, PowerScheme};
use rcp::tensor::{self, DenseTensor};
use rcp::{decompose, DecomposeConfig, KruskalTensor, Matrix};

pub type Check = fn(u32) -> Result<(), String>;

pub const ALL: &[(&str, Check)] = &[
    ("unfold/fold round-trip", unfold_fold_round_trip),
    ("norm preserved by unfolding", unfold_preserves_norm),
    ("Khatri-Rao Gram identity", khatri_rao_gram),
    ("basis orthonormality", basis_orthonormal),
    (
        "normalize idempotent and value-preserving",
        normalize_idempotent,
    ),
    ("per-mode residual inequality", per_mode_residual_sum),
    ("ALS fit monotone on exact rank", als_fit_monotone),
    ("end-to-end seed determinism", seed_determinism),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn tensor_strategy(max_order: usize, max_dim: usize) -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(1..=max_dim, 1..=max_order).prop_flat_map(|shape| {
        let len = shape.iter().product::<usize>();
        prop::collection::vec(-10.0..10.0f64, len).prop_map(move |data| {
            DenseTensor::new(shape.clone(), data).expect("valid by construction")
        })
    })
}

fn matrix_strategy(
    rows: impl Strategy<Value = usize>,
    cols: usize,
) -> impl Strategy<Value = Matrix> {
    rows.prop_flat_map(move |r| {
        prop::collection::vec(-1.0..1.0f64, r * cols)
            .prop_map(move |d| Matrix::new(r, cols, d).expect("sized"))
    })
}

fn factors_strategy(
    order: std::ops::RangeInclusive<usize>,
    max_dim: usize,
    rank: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Vec<Matrix>> {
    (order, rank)
        .prop_flat_map(move |(n, r)| prop::collection::vec(matrix_strategy(2..=max_dim, r), n))
}

pub fn unfold_fold_round_trip(cases: u32) -> Result<(), String> {
    run(
        cases,
        tensor_strategy(4, 5).prop_flat_map(|t| (0..t.order(), Just(t))),
        |(mode, t)| {
            let m = tensor::unfold(&t, mode).unwrap();
            prop_assert_eq!(m.rows(), t.shape()[mode]);
            prop_assert_eq!(tensor::fold(&m, mode, t.shape()).unwrap(), t);
            Ok(())
        },
    )
}

pub fn unfold_preserves_norm(cases: u32) -> Result<(), String> {
    run(
        cases,
        tensor_strategy(4, 5).prop_flat_map(|t| (0..t.order(), Just(t))),
        |(mode, t)| {
            let a = tensor::unfold(&t, mode).unwrap().frobenius_norm();
            let b = t.frobenius_norm();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
            Ok(())
        },
    )
}

pub fn khatri_rao_gram(cases: u32) -> Result<(), String> {
    let s = (1..=5usize).prop_flat_map(|r| {
        (
            matrix_strategy(1..=7usize, r),
            matrix_strategy(1..=7usize, r),
        )
    });
    run(cases, s, |(a, b)| {
        let lhs = tensor::khatri_rao(&a, &b).unwrap().gram();
        let rhs = a.gram().hadamard(&b.gram()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        Ok(())
    })
}

pub fn basis_orthonormal(cases: u32) -> Result<(), String> {
    let s = (
        tensor_strategy(3, 9),
        1..=4usize,
        0..=4usize,
        0..=2usize,
        any::<bool>(),
        any::<u64>(),
    );
    run(cases, s, |(t, k, p, q, qr, seed)| {
        let scheme = if qr { PowerScheme::Qr } else { PowerScheme::Lu };
        let cfg = CompressConfig::new(k)
            .oversampling(p)
            .power_iterations(q)
            .scheme(scheme)
            .seed(seed);
        let r = compress::compress(&t, &cfg).unwrap();
        for b in &r.bases {
            let q = b.to_matrix();
            prop_assert!(q.gram().max_abs_diff(&Matrix::identity(q.cols())) <= 1e-10);
        }
        Ok(())
    })
}

pub fn normalize_idempotent(cases: u32) -> Result<(), String> {
    let s = (
        factors_strategy(1..=4, 5, 1..=4),
        prop::collection::vec(-3.0..3.0f64, 4),
    );
    run(cases, s, |(factors, w)| {
        let r = factors[0].cols();
        let k = KruskalTensor::new(w[..r].to_vec(), factors).unwrap();
        let once = k.normalize();
        let twice = once.normalize();
        prop_assert_eq!(twice.rank(), once.rank());
        prop_assert!(
            max_diff(twice.weights(), once.weights()) <= 1e-12 * once.weights()[0].max(1.0)
        );
        for (a, b) in twice.factors().iter().zip(once.factors()) {
            prop_assert!(a.max_abs_diff(b) <= 1e-12);
        }
        let (a, b) = (k.reconstruct(), once.reconstruct());
        prop_assert!(a.max_abs_diff(&b) <= 1e-12 * a.frobenius_norm().max(1.0));
        prop_assert!(once.weights().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(once.weights().iter().all(|&w| w >= 0.0));
        Ok(())
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn per_mode_residual_sum(cases: u32) -> Result<(), String> {
    let s = (
        tensor_strategy(4, 7),
        1..=3usize,
        0..=2usize,
        0..=1usize,
        any::<u64>(),
    );
    run(cases, s, |(t, k, p, q, seed)| {
        let cfg = CompressConfig::new(k)
            .oversampling(p)
            .power_iterations(q)
            .seed(seed);
        let r = compress::compress(&t, &cfg).unwrap();
        let total = compress::projection_residual(&t, &r).unwrap();
        let sum: f64 = compress::per_mode_residuals(&t, &r).unwrap().iter().sum();
        prop_assert!(
            total <= sum + 1e-10 * t.frobenius_norm(),
            "{} > {}",
            total,
            sum
        );
        Ok(())
    })
}

pub fn als_fit_monotone(cases: u32) -> Result<(), String> {
    let s = (factors_strategy(3..=3, 6, 1..=3), any::<u64>());
    run(cases, s, |(factors, seed)| {
        let t = KruskalTensor::from_factors(factors).unwrap().reconstruct();
        prop_assume!(t.frobenius_norm() > 1e-6);
        let r = t.shape().iter().copied().min().unwrap().min(3);
        let cfg = DecomposeConfig::new(r)
            .deterministic()
            .max_iter(40)
            .tol(1e-12)
            .seed(seed);
        let (_, trace) = decompose(&t, &cfg).unwrap();
        for w in trace.records.windows(2) {
            prop_assert!(
                w[1].fit >= w[0].fit - 1e-10,
                "fit fell from {} to {}",
                w[0].fit,
                w[1].fit
            );
        }
        Ok(())
    })
}

pub fn seed_determinism(cases: u32) -> Result<(), String> {
    let s = (
        tensor_strategy(3, 8),
        1..=3usize,
        any::<bool>(),
        any::<bool>(),
        any::<u64>(),
    );
    run(cases, s, |(t, r, bcd, randomized, seed)| {
        prop_assume!(t.frobenius_norm() > 0.0);
        let cfg = DecomposeConfig::new(r)
            .method(if bcd { "bcd" } else { "als" })
            .randomized(randomized)
            .oversampling(2)
            .max_iter(15)
            .seed(seed);
        let (a, _) = decompose(&t, &cfg).unwrap();
        let (b, _) = decompose(&t, &cfg).unwrap();
        let bits = |k: &KruskalTensor| -> Vec<u64> {
            k.weights()
                .iter()
                .chain(k.factors().iter().flat_map(|f| f.data()))
                .map(|v| v.to_bits())
                .collect()
        };
        prop_assert_eq!(bits(&a), bits(&b));
        Ok(())
    })
}
