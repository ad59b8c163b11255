//! SSNR, L1 and LSD on a clean clip against noisy and scaled copies.
//!
//! cargo run --release --example metrics

use abas::metrics::evaluate_corpus;
use abas::train::synthetic_clip;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> abas::Result<()> {
    let clean = synthetic_clip(16000, 5, 0);
    let mut rng = rand::rngs::ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.01f32).expect("valid sigma");
    let noisy: Vec<f32> = clean.iter().map(|&v| v + noise.sample(&mut rng)).collect();
    let halved: Vec<f32> = clean.iter().map(|v| v * 0.5).collect();
    let pairs = [
        ("identical", &clean[..], &clean[..]),
        ("noisy", &clean[..], &noisy[..]),
        ("halved", &clean[..], &halved[..]),
    ];
    print!("{}", evaluate_corpus(pairs)?.to_csv());
    Ok(())
}
