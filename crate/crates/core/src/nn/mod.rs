//! Layers on top of the autodiff engine: convolutions with optional
//! spectral normalization, the gated convolution, PReLU, and Xavier
//! initialization.

mod init;
mod layers;
mod params;
mod spectral;

pub use init::{xavier_limit, xavier_uniform};
pub use layers::{Conv1d, GateKind, GatedConv, PRelu, PadMode, TConv1d, PRELU_INIT};
pub use params::{Binder, ParamId, ParamStore, Parameter};
pub use spectral::{spectral_normalize, SpectralNormState, WARMUP_ITERATIONS};
