mod support;

use support::properties::*;

const CASES: u32 = 256;

#[test]
fn unfold_fold() {
    unfold_fold_round_trip(CASES).unwrap();
}

#[test]
fn unfold_norm() {
    unfold_preserves_norm(CASES).unwrap();
}

#[test]
fn khatri_rao_gram_identity() {
    khatri_rao_gram(CASES).unwrap();
}

#[test]
fn compression_bases_orthonormal() {
    basis_orthonormal(CASES).unwrap();
}

#[test]
fn normalize_is_idempotent() {
    normalize_idempotent(CASES).unwrap();
}

#[test]
fn residual_bounded_by_per_mode_sum() {
    per_mode_residual_sum(CASES).unwrap();
}

#[test]
fn als_fit_never_decreases() {
    als_fit_monotone(CASES).unwrap();
}

#[test]
fn decompose_is_deterministic() {
    seed_determinism(CASES).unwrap();
}
