use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

use crate::dsp::SAMPLE_RATE;
use crate::error::Result;
use crate::rng::rng_for;
use crate::wavio;

const PEAK: f64 = 0.5;
const NOISE_DB: f64 = -20.0;

/// One speech-like clip: a few harmonics over a wandering fundamental,
/// syllable-rate amplitude modulation and low-level band-limited noise,
/// peak-normalized and snapped to the PCM16 grid.
pub fn synthetic_clip(len: usize, seed: u64, index: usize) -> Vec<f32> {
    let mut rng = rng_for(seed, &[0x5e7, index as u64]);
    let fs = SAMPLE_RATE as f64;
    let harmonics = rng.random_range(3..=8usize);
    let f0_base: f64 = rng.random_range(100.0..220.0);
    let vib_rate: f64 = rng.random_range(0.5..2.0);
    let vib_depth: f64 = rng.random_range(0.1..0.3);
    let am_rate: f64 = rng.random_range(2.0..6.0);
    let am_phase: f64 = rng.random_range(0.0..2.0 * PI);
    let amps: Vec<f64> = (1..=harmonics)
        .map(|h| rng.random_range(0.5..1.0) / h as f64)
        .collect();
    let mut phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();

    let mut voiced = Vec::with_capacity(len);
    for n in 0..len {
        let t = n as f64 / fs;
        let f0 = (f0_base * (1.0 + vib_depth * (2.0 * PI * vib_rate * t).sin())).clamp(80.0, 300.0);
        let env = 0.6 + 0.4 * (2.0 * PI * am_rate * t + am_phase).sin();
        let mut s = 0.0;
        for (h, (a, ph)) in amps.iter().zip(phases.iter_mut()).enumerate() {
            let f = f0 * (h + 1) as f64;
            if f < 0.45 * fs {
                s += a * ph.sin();
            }
            *ph = (*ph + 2.0 * PI * f / fs) % (2.0 * PI);
        }
        voiced.push(env * s);
    }

    // white noise through a two-pole resonator around 1-3 kHz
    let centre: f64 = rng.random_range(1000.0..3000.0);
    let (r, w) = (0.9, 2.0 * PI * centre / fs);
    let (a1, a2) = (2.0 * r * w.cos(), -r * r);
    let (mut y1, mut y2) = (0.0, 0.0);
    let noise: Vec<f64> = (0..len)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            let y = e + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            y
        })
        .collect();

    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    let gain = if rms(&noise) > 0.0 {
        rms(&voiced) * 10f64.powf(NOISE_DB / 20.0) / rms(&noise)
    } else {
        0.0
    };
    let mixed: Vec<f64> = voiced.iter().zip(&noise).map(|(v, e)| v + gain * e).collect();
    let peak = mixed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { PEAK / peak } else { 0.0 };
    let clip: Vec<f32> = mixed.iter().map(|v| (v * scale) as f32).collect();
    wavio::quantize(&clip)
}

/// In-memory corpus identical to what [`gen_synthetic_corpus`] writes.
pub fn synthetic_clips(n_clips: usize, clip_len: usize, seed: u64) -> Vec<Vec<f32>> {
    (0..n_clips).map(|i| synthetic_clip(clip_len, seed, i)).collect()
}

/// Writes `clip_000.wav`, `clip_001.wav`, ... into `out_dir`.
pub fn gen_synthetic_corpus(n_clips: usize, clip_len: usize, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    (0..n_clips)
        .map(|i| {
            let path = out_dir.join(format!("clip_{i:03}.wav"));
            wavio::write_samples(&path, &synthetic_clip(clip_len, seed, i))?;
            Ok(path)
        })
        .collect()
}
