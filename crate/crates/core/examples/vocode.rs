//! Full pipeline on one clip: LPC analysis, generation from the residual
//! and cross synthesis, with and without the envelope replacement.
//!
//! cargo run --release --example vocode -- [checkpoint]
//!
//! Without a checkpoint, a freshly initialized generator is used.

use abas::dsp::AudioSignal;
use abas::metrics::{l1_distance, log_spectral_distance, ssnr, LsdParams, SsnrParams};
use abas::train::{load_checkpoint, synthetic_clip, TrainConfig, Trainer};
use abas::vocoder::Vocoder;

fn main() -> abas::Result<()> {
    let vocoder = match std::env::args().nth(1) {
        Some(path) => Vocoder::from_checkpoint(&load_checkpoint(path)?)?,
        None => {
            let t = Trainer::new(TrainConfig::desk())?;
            Vocoder::new(t.generator, t.config)
        }
    };
    let speech = AudioSignal::speech(synthetic_clip(8000, 3, 0))?;
    for cross in [false, true] {
        let v = vocoder.vocode(&speech, 0, cross)?;
        let (x, y) = (speech.samples(), v.output.samples());
        println!(
            "cross synthesis {cross:<5}  ssnr {:7.2} dB  l1 {:.4}  lsd {:6.2} dB",
            ssnr(x, y, SsnrParams::default())?,
            l1_distance(x, y)?,
            log_spectral_distance(x, y, LsdParams::default())?
        );
    }
    Ok(())
}
