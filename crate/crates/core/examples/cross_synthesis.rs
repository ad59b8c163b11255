//! Imposing a speech envelope on white noise and on the speech itself.
//!
//! cargo run --release --example cross_synthesis

use abas::dsp::{self, DEFAULT_FRAME_LEN, DEFAULT_ORDER};
use abas::metrics::{log_spectral_distance, ssnr, LsdParams, SsnrParams};
use abas::train::synthetic_clip;
use abas::wavio::quantize;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn to_f32(x: &[f64]) -> Vec<f32> {
    x.iter().map(|&v| v as f32).collect()
}

fn main() -> abas::Result<()> {
    let mut rng = rand::rngs::ChaCha8Rng::seed_from_u64(3);
    let white = Normal::new(0.0, 0.1).expect("valid sigma");
    for i in 0..4 {
        let speech = synthetic_clip(8000, 11, i);
        let x: Vec<f64> = speech.iter().map(|&v| v as f64).collect();
        let track = dsp::estimate_track(&x, DEFAULT_ORDER, DEFAULT_FRAME_LEN)?;
        let noise: Vec<f64> = (0..x.len()).map(|_| white.sample(&mut rng)).collect();
        let shaped = dsp::cross_synthesize_f64(&noise, &track, None)?;
        let lsd = |s: &[f64]| log_spectral_distance(&speech, &to_f32(s), LsdParams::default());
        let same = quantize(&to_f32(&dsp::cross_synthesize_f64(&x, &track, None)?));
        println!(
            "clip {i}: lsd noise {:.2} dB -> shaped {:.2} dB   self ssnr {:.2} dB",
            lsd(&noise)?,
            lsd(&shaped)?,
            ssnr(&speech, &same, SsnrParams::default())?
        );
    }
    Ok(())
}
