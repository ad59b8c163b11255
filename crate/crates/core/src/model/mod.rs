//! The generator cascade (residual encoder, context decoder, adversarial
//! upsampler) and the conditional discriminator.

mod arch;
mod discriminator;
mod generator;

pub use arch::ArchConfig;
pub use discriminator::{Discriminator, DISCRIMINATOR_STORE};
pub use generator::{
    AdversarialUpsampler, ContextDecoder, Generator, GeneratorTrace, NoiseBundle, ResidualEncoder, Trace,
    UpsampleStage, GENERATOR_STORE,
};
