use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer plan for the generator cascade and the discriminator.
///
/// [`ArchConfig::paper`] is the full-size network. Smaller plans keep the
/// same topology and are used for fast tests and gradient checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    /// Channel plan of the encoder, input first; one stride-2 layer per step.
    pub encoder_channels: Vec<usize>,
    pub encoder_kernel: usize,
    pub compressor_kernel: usize,
    pub decoder_channels: usize,
    pub decoder_layers: usize,
    /// Kernel of every gated convolution (odd).
    pub gate_kernel: usize,
    pub upsampler_signal_channels: usize,
    pub upsampler_noise_channels: usize,
    /// Transposed-conv kernel (even), cropped by `(k - 2) / 2` per side.
    pub upsampler_kernel: usize,
    pub output_kernel: usize,
    /// Channel plan of the discriminator, input (2) first.
    pub discriminator_channels: Vec<usize>,
    pub discriminator_kernel: usize,
    pub leaky_slope: f64,
    pub spectral_norm_generator: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ArchConfig {
    pub fn paper() -> Self {
        Self {
            encoder_channels: vec![1, 32, 64, 64, 128],
            encoder_kernel: 64,
            compressor_kernel: 65,
            decoder_channels: 64,
            decoder_layers: 10,
            gate_kernel: 65,
            upsampler_signal_channels: 32,
            upsampler_noise_channels: 32,
            upsampler_kernel: 66,
            output_kernel: 65,
            discriminator_channels: vec![2, 16, 16, 32, 32, 64, 32],
            discriminator_kernel: 32,
            leaky_slope: 0.2,
            spectral_norm_generator: true,
        }
    }

    /// Same topology with a handful of channels and short kernels; valid
    /// down to 64-sample segments.
    pub fn tiny() -> Self {
        Self {
            encoder_channels: vec![1, 2, 3, 3, 4],
            encoder_kernel: 4,
            compressor_kernel: 3,
            decoder_channels: 4,
            decoder_layers: 2,
            gate_kernel: 3,
            upsampler_signal_channels: 2,
            upsampler_noise_channels: 2,
            upsampler_kernel: 4,
            output_kernel: 3,
            discriminator_channels: vec![2, 3, 3, 4, 4, 5, 3],
            discriminator_kernel: 4,
            leaky_slope: 0.2,
            spectral_norm_generator: true,
        }
    }

    /// Number of stride-2 stages, both down (encoder) and up (upsampler).
    pub fn stages(&self) -> usize {
        self.encoder_channels.len() - 1
    }

    /// Residual-to-context compression factor.
    pub fn factor(&self) -> usize {
        1 << self.stages()
    }

    pub(crate) fn same_pad(kernel: usize) -> usize {
        (kernel - 1) / 2
    }

    pub(crate) fn tconv_crop(&self) -> usize {
        (self.upsampler_kernel - 2) / 2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.encoder_channels.len() < 2 || self.encoder_channels[0] != 1 {
            return bad("encoder channel plan must start at 1 and have at least one layer".into());
        }
        if self.discriminator_channels.len() < 2 || self.discriminator_channels[0] != 2 {
            return bad("discriminator channel plan must start at 2".into());
        }
        if self.encoder_kernel < 2 || self.discriminator_kernel < 2 {
            return bad("downsampling kernels must be at least 2".into());
        }
        for (name, k) in [
            ("gate_kernel", self.gate_kernel),
            ("compressor_kernel", self.compressor_kernel),
            ("output_kernel", self.output_kernel),
        ] {
            if k % 2 == 0 {
                return bad(format!("{name} must be odd, got {k}"));
            }
        }
        if self.upsampler_kernel % 2 != 0 || self.upsampler_kernel < 2 {
            return bad(format!("upsampler_kernel must be even, got {}", self.upsampler_kernel));
        }
        if self.upsampler_signal_channels != self.upsampler_noise_channels {
            return bad("upsampler stages split channels equally between signal and noise".into());
        }
        if self.decoder_channels == 0 || self.upsampler_signal_channels == 0 {
            return bad("channel counts must be positive".into());
        }
        if !(0.0..1.0).contains(&self.leaky_slope) {
            return bad("leaky slope must lie in [0, 1)".into());
        }
        Ok(())
    }

    /// Checks that a segment of `len` samples passes every layer: the length
    /// divides by the compression factor and every reflect pad is shorter
    /// than the tensor it pads.
    pub fn check_segment_len(&self, len: usize) -> Result<()> {
        let f = self.factor();
        if len == 0 || len % f != 0 {
            return Err(Error::LengthMismatch(format!("length must be divisible by {f}, got {len}")));
        }
        let enc_pad = Self::same_pad(self.encoder_kernel);
        for s in 0..self.stages() {
            let l = len >> s;
            if enc_pad >= l {
                return Err(Error::LengthMismatch(format!(
                    "segment of {len} samples too short: encoder layer {s} sees {l} samples, reflect pad {enc_pad}"
                )));
            }
        }
        let m = len / f;
        let pad = Self::same_pad(self.compressor_kernel).max(Self::same_pad(self.gate_kernel));
        if pad >= m {
            return Err(Error::LengthMismatch(format!(
                "segment of {len} samples too short: context length {m} must exceed reflect pad {pad} (minimum {})",
                self.min_segment_len()
            )));
        }
        if Self::same_pad(self.output_kernel) >= len {
            return Err(Error::LengthMismatch(format!("segment of {len} samples too short")));
        }
        Ok(())
    }

    /// Smallest valid segment length.
    pub fn min_segment_len(&self) -> usize {
        let f = self.factor();
        (1..)
            .map(|i| i * f)
            .find(|&l| self.check_segment_len_inner(l))
            .expect("some length is valid")
    }

    fn check_segment_len_inner(&self, len: usize) -> bool {
        let enc_pad = Self::same_pad(self.encoder_kernel);
        let m = len / self.factor();
        (0..self.stages()).all(|s| enc_pad < len >> s)
            && Self::same_pad(self.compressor_kernel).max(Self::same_pad(self.gate_kernel)) < m
            && Self::same_pad(self.output_kernel) < len
    }
}
