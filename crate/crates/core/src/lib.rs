//! Analysis-by-adversarial-synthesis speech vocoding.
//!
//! The pipeline analyzes speech with frame-wise LPC, compresses the
//! residual into a low-rate context, regenerates a waveform with a
//! conditional GAN and re-imposes the original spectral envelope by cross
//! synthesis.

pub mod autodiff;
pub mod cli;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod rng;
pub mod train;
pub mod verify;
pub mod vocoder;
pub mod wavio;

pub use error::{Error, Result};
