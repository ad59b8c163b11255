use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ArchConfig;
use crate::nn::GateKind;

/// What the generator is trained to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Fake speech compared against the clean speech segment.
    Speech,
    /// Fake residual compared against the LPC residual itself.
    Residual,
}

impl std::str::FromStr for TargetMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speech" => Ok(TargetMode::Speech),
            "residual" => Ok(TargetMode::Residual),
            other => Err(Error::invalid(format!("unknown target mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for TargetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TargetMode::Speech => "speech",
            TargetMode::Residual => "residual",
        })
    }
}

/// Where training clips come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSpec {
    /// Every `.wav` file in a directory (16 kHz mono PCM16).
    Dir(PathBuf),
    /// Clips from the built-in speech-like generator.
    Synthetic { clips: usize, clip_len: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lr_d: f64,
    pub lr_g: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    pub batch_size: usize,
    pub segment_len: usize,
    pub steps: u64,
    pub seed: u64,
    pub gate: GateKind,
    pub target: TargetMode,
    pub lpc_order: usize,
    pub frame_ms: usize,
    pub corpus: CorpusSpec,
    /// Write `step_N.ckpt` every this many steps; 0 disables.
    pub checkpoint_every: u64,
    pub arch: ArchConfig,
}

impl Default for TrainConfig {
    /// Full-scale recipe.
    fn default() -> Self {
        Self {
            gamma: 0.00015,
            lr_d: 0.0006,
            lr_g: 0.00015,
            betas: (0.5, 0.99),
            eps: 1e-8,
            batch_size: 32,
            segment_len: 16000,
            steps: 1000,
            seed: 0,
            gate: GateKind::SoftmaxChannel,
            target: TargetMode::Speech,
            lpc_order: 16,
            frame_ms: 20,
            corpus: CorpusSpec::Synthetic {
                clips: 8,
                clip_len: 16000,
                seed: 0,
            },
            checkpoint_every: 0,
            arch: ArchConfig::paper(),
        }
    }
}

impl TrainConfig {
    /// Same recipe sized for a single CPU core.
    pub fn desk() -> Self {
        Self {
            batch_size: 4,
            segment_len: 1600,
            ..Self::default()
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_ms * crate::dsp::SAMPLE_RATE as usize / 1000
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.lr_d > 0.0 && self.lr_g > 0.0) {
            return bad("learning rates must be positive".into());
        }
        let (b1, b2) = self.betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad(format!("betas must lie in [0, 1), got ({b1}, {b2})"));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.lpc_order == 0 || self.frame_len() <= self.lpc_order {
            return bad(format!(
                "frame of {} samples cannot carry an order-{} predictor",
                self.frame_len(),
                self.lpc_order
            ));
        }
        self.arch.validate()?;
        self.arch.check_segment_len(self.segment_len)
    }
}
