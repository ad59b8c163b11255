//! Order-16 LPC analysis of a synthetic clip, the residual's flatness and
//! the analysis/synthesis round trip.
//!
//! cargo run --release --example lpc_analysis

use abas::dsp::{self, DEFAULT_FRAME_LEN, DEFAULT_ORDER};
use abas::metrics::{ssnr, Stft, SsnrParams};
use abas::train::synthetic_clip;

fn flatness(x: &[f32]) -> f64 {
    let mags = Stft::new(512, 160).magnitudes(x);
    let mut power = vec![0.0; mags[0].len()];
    for frame in &mags {
        for (p, m) in power.iter_mut().zip(frame) {
            *p += m * m;
        }
    }
    let n = power.len() as f64;
    let geo = (power.iter().map(|p| (p + 1e-20).ln()).sum::<f64>() / n).exp();
    geo / (power.iter().sum::<f64>() / n)
}

fn main() -> abas::Result<()> {
    let clip = synthetic_clip(16000, 7, 0);
    let x: Vec<f64> = clip.iter().map(|&v| v as f64).collect();
    let (track, residual) = dsp::analyze(&x, DEFAULT_ORDER, DEFAULT_FRAME_LEN)?;
    println!("frames: {}  order: {}", track.frames.len(), track.order);
    println!("first frame a_1..a_4: {:.4?}", &track.frames[0].coeffs[..4]);

    let e: Vec<f32> = residual[..x.len()].iter().map(|&v| v as f32).collect();
    println!("spectral flatness: speech {:.4}  residual {:.4}", flatness(&clip), flatness(&e));

    let y = dsp::synthesize(&residual, &track)?;
    let worst = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("round trip max abs error: {worst:.3e}");
    let y32: Vec<f32> = y[..x.len()].iter().map(|&v| v as f32).collect();
    println!("round trip ssnr: {:.2} dB", ssnr(&clip, &y32, SsnrParams::default())?);
    Ok(())
}
