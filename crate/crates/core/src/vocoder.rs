//! End-to-end vocoding: LPC analysis, segment-wise generation and cross
//! synthesis with the original envelope.

use crate::dsp::{self, AudioSignal, LpcTrack, Role};
use crate::error::{Error, Result};
use crate::model::Generator;
use crate::rng::derive_seed;
use crate::train::{Checkpoint, TargetMode, TrainConfig, Trainer};

const SEGMENT_NOISE_STREAM: u64 = 0x70c0;

/// Products of one vocoding pass.
#[derive(Debug, Clone)]
pub struct Vocoded {
    /// Final signal, input length.
    pub output: AudioSignal,
    /// Raw generator output, input length.
    pub fake: Vec<f32>,
    /// Envelope of the input.
    pub track: LpcTrack,
}

/// A trained generator with the settings it was trained under.
#[derive(Debug, Clone)]
pub struct Vocoder {
    pub generator: Generator<f32>,
    pub config: TrainConfig,
}

impl Vocoder {
    pub fn new(generator: Generator<f32>, config: TrainConfig) -> Self {
        Self { generator, config }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let t = Trainer::from_checkpoint(ckpt)?;
        Ok(Self::new(t.generator, t.config))
    }

    /// Shortest input the generator accepts.
    pub fn min_input_len(&self) -> usize {
        self.config.arch.min_segment_len()
    }

    /// Generates `residual.len()` samples from non-overlapping segments of
    /// the training segment length; the last segment is zero-padded and the
    /// result truncated. Segment `i` draws its noise from `(seed, i)`.
    pub fn generate(&self, residual: &[f32], seed: u64) -> Result<Vec<f32>> {
        let min = self.min_input_len();
        if residual.len() < min {
            return Err(Error::invalid(format!(
                "input of {} samples is too short (minimum {min})",
                residual.len()
            )));
        }
        let seg = self.config.segment_len;
        let mut out = Vec::with_capacity(residual.len() + seg);
        for (i, chunk) in residual.chunks(seg).enumerate() {
            let mut r = chunk.to_vec();
            r.resize(seg, 0.0);
            let noise = self
                .generator
                .draw_noise(seg, derive_seed(seed, &[SEGMENT_NOISE_STREAM, i as u64]));
            out.extend(self.generator.generate(&r, &noise)?);
        }
        out.truncate(residual.len());
        Ok(out)
    }

    /// Full pipeline. With `cross_synth` off, the output is the raw fake.
    /// A residual-target generator's fake is filtered by the original
    /// envelope directly instead of being re-analysed.
    pub fn vocode(&self, speech: &AudioSignal, seed: u64, cross_synth: bool) -> Result<Vocoded> {
        speech.require_pipeline_rate()?;
        let x = speech.to_f64();
        let (track, residual) = dsp::analyze(&x, self.config.lpc_order, self.config.frame_len())?;
        let residual: Vec<f32> = residual[..x.len()].iter().map(|&v| v as f32).collect();
        let fake = self.generate(&residual, seed)?;
        let output = if !cross_synth {
            AudioSignal::new(fake.clone(), dsp::SAMPLE_RATE, Role::Fake)?
        } else {
            let f: Vec<f64> = fake.iter().map(|&v| v as f64).collect();
            let y = match self.config.target {
                TargetMode::Speech => dsp::cross_synthesize_f64(&f, &track, None)?,
                TargetMode::Residual => {
                    let mut padded = f;
                    padded.resize(track.coverage(), 0.0);
                    let mut y = dsp::synthesize(&padded, &track)?;
                    y.truncate(x.len());
                    y
                }
            };
            AudioSignal::from_f64(&y, Role::Speech)?
        };
        Ok(Vocoded { output, fake, track })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArchConfig;
    use crate::train::synthetic_clip;

    fn vocoder(target: TargetMode) -> Vocoder {
        let config = TrainConfig {
            arch: ArchConfig::tiny(),
            segment_len: 640,
            target,
            ..TrainConfig::default()
        };
        let t = Trainer::new(config).unwrap();
        Vocoder::new(t.generator, t.config)
    }

    #[test]
    fn lengths_roles_and_determinism() {
        let v = vocoder(TargetMode::Speech);
        let x = AudioSignal::speech(synthetic_clip(1500, 2, 0)).unwrap();
        let a = v.vocode(&x, 7, true).unwrap();
        assert_eq!(a.output.len(), 1500);
        assert_eq!(a.fake.len(), 1500);
        assert_eq!(a.output.samples(), v.vocode(&x, 7, true).unwrap().output.samples());
        let raw = v.vocode(&x, 7, false).unwrap();
        assert_eq!(raw.output.samples(), &a.fake[..]);
        assert_eq!(raw.output.role(), Role::Fake);
        assert_ne!(raw.fake, v.vocode(&x, 8, false).unwrap().fake);
    }

    #[test]
    fn residual_target_and_short_input() {
        let v = vocoder(TargetMode::Residual);
        let x = AudioSignal::speech(synthetic_clip(700, 2, 1)).unwrap();
        assert_eq!(v.vocode(&x, 0, true).unwrap().output.len(), 700);
        let short = AudioSignal::speech(vec![0.1; v.min_input_len() - 1]).unwrap();
        assert!(v.vocode(&short, 0, true).is_err());
    }
}
