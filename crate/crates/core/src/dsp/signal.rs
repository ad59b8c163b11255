use crate::error::{Error, Result};

/// Operating sample rate of the whole pipeline.
pub const SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Speech,
    Residual,
    Fake,
}

/// Mono audio at a fixed rate. Samples are stored as `f32`; DSP routines
/// lift them to `f64` internally.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f32>,
    sample_rate: u32,
    role: Role,
}

impl AudioSignal {
    pub fn new(samples: Vec<f32>, sample_rate: u32, role: Role) -> Result<Self> {
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            role,
        })
    }

    /// 16 kHz signal with the given role.
    pub fn speech(samples: Vec<f32>) -> Result<Self> {
        Self::new(samples, SAMPLE_RATE, Role::Speech)
    }

    pub fn from_f64(samples: &[f64], role: Role) -> Result<Self> {
        Self::new(samples.iter().map(|&v| v as f32).collect(), SAMPLE_RATE, role)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&v| v as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn truncated(mut self, len: usize) -> Self {
        self.samples.truncate(len);
        self
    }

    /// Entry check used by every pipeline stage.
    pub fn require_pipeline_rate(&self) -> Result<()> {
        if self.sample_rate != SAMPLE_RATE {
            return Err(Error::invalid(format!(
                "expected {SAMPLE_RATE} Hz signal, got {} Hz",
                self.sample_rate
            )));
        }
        Ok(())
    }
}
