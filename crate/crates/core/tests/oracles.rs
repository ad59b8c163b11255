//! Independent reference implementations: dense linear algebra for the
//! LPC normal equations and the spectral norm.

use abas::dsp::{self, autocorrelate, levinson_durbin, Window};
use abas::model::{ArchConfig, Discriminator, Generator};
use abas::nn::{GateKind, ParamStore};
use nalgebra::{DMatrix, DVector};
use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};

fn toeplitz_solve(r: &[f64], order: usize) -> Vec<f64> {
    let m = DMatrix::from_fn(order, order, |i, j| r[i.abs_diff(j)]);
    let b = DVector::from_fn(order, |i, _| r[i + 1]);
    m.lu().solve(&b).expect("positive-definite system").iter().copied().collect()
}

#[test]
fn levinson_matches_direct_toeplitz_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..200 {
        let order = 1 + case % 16;
        let n = rng.random_range(64..400);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = autocorrelate(&x, order, Window::Rectangular).unwrap();
        let fast = levinson_durbin(&r, order).unwrap().coeffs;
        let direct = toeplitz_solve(&r, order);
        for (a, b) in fast.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "case {case}: {a} vs {b}");
        }
    }
}

#[test]
fn analysis_synthesis_round_trip_random_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..100 {
        let n = rng.random_range(320..4000);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (track, e) = dsp::analyze(&x, 16, 320).unwrap();
        let y = dsp::synthesize(&e, &track).unwrap();
        let num: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        assert!((num / den).sqrt() <= 1e-9, "case {case}: {}", (num / den).sqrt());
    }
}

/// Largest singular value from the eigenvalues of the smaller Gram matrix.
fn top_singular(rows: usize, cols: usize, data: &[f64]) -> f64 {
    let w = DMatrix::from_row_slice(rows, cols, data);
    let gram = if rows <= cols { &w * w.transpose() } else { w.transpose() * &w };
    gram.symmetric_eigen().eigenvalues.max().sqrt()
}

/// Worst `|sigma_1(W / sigma_hat) - 1|` over the store after `iterations`
/// more power iterations. Also asserts the estimate never exceeds the true
/// top singular value, as `u^T W v <= sigma_1` for unit `u`, `v`.
fn worst_normalized_error(store: &mut ParamStore<f64>, iterations: usize) -> f64 {
    for _ in 0..iterations {
        store.power_iterate();
    }
    let mut worst = 0.0f64;
    for p in store.iter() {
        let Some(s) = &p.spectral else { continue };
        let w = &p.value;
        let top = top_singular(w.channels(), w.length(), w.data());
        let sigma = s.sigma(w);
        assert!(sigma > 0.0 && sigma <= top * (1.0 + 1e-12), "{}: {sigma} > {top}", p.name);
        worst = worst.max((top / sigma - 1.0).abs());
    }
    worst
}

#[test]
fn spectral_estimate_is_bounded_by_svd() {
    let mut g = Generator::<f64>::new(ArchConfig::paper(), GateKind::SoftmaxChannel, 4).unwrap();
    let early = worst_normalized_error(&mut g.store, 0);
    let later = worst_normalized_error(&mut g.store, 50);
    assert!(later < early, "{later} vs {early}");
}

#[test]
fn spectral_norm_converges_to_svd_on_discriminator() {
    let mut d = Discriminator::<f64>::new(ArchConfig::paper(), 3).unwrap();
    let err = worst_normalized_error(&mut d.store, 600);
    assert!(err <= 1e-5, "{err}");
}
