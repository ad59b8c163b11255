//! Source-filter signal processing: framing, LPC estimation, analysis and
//! synthesis filtering, and cross synthesis.

mod filter;
mod lpc;
mod signal;

pub use filter::{
    analysis_filter, analyze, cross_synthesize, cross_synthesize_f64, estimate_track, inverse_filter, lpc_analyze,
    lpc_synthesize, synthesis_filter, synthesize, LpcFrame, LpcTrack,
};
pub use lpc::{
    autocorrelate, frame_signal, levinson_durbin, padded_len, LpcSolution, Window, REFLECTION_LIMIT, SILENCE_ENERGY,
};
pub use signal::{AudioSignal, Role, SAMPLE_RATE};

/// LPC order used throughout the pipeline.
pub const DEFAULT_ORDER: usize = 16;
/// 20 ms at 16 kHz.
pub const DEFAULT_FRAME_LEN: usize = 320;
