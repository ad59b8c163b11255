//! Feature-map traces and parameter counts of the full-size networks.
//!
//! cargo run --release --example model_shapes

use abas::autodiff::{Graph, Tensor};
use abas::model::{ArchConfig, Discriminator, Generator, GeneratorTrace};
use abas::nn::GateKind;

fn main() -> abas::Result<()> {
    let arch = ArchConfig::paper();
    let gen = Generator::<f32>::new(arch.clone(), GateKind::SoftmaxChannel, 0)?;
    let disc = Discriminator::<f32>::new(arch.clone(), 1)?;
    println!("generator params: {}", gen.param_count());
    println!("discriminator params: {}", disc.param_count());
    println!("shortest segment: {}", arch.min_segment_len());

    let len = 16000;
    let mut g = Graph::new();
    let r = g.input(Tensor::from_signal(&vec![0.01f32; len])?, false);
    let mut trace = GeneratorTrace::default();
    let y = gen.forward(&mut g, r, &gen.draw_noise(len, 2), false, Some(&mut trace))?;
    println!("encoder:   {:?}", trace.encoder);
    println!("decoder:   {:?}", trace.decoder);
    println!("upsampler: {:?}", trace.upsampler);

    let mut d_trace = Vec::new();
    disc.forward(&mut g, y, r, false, Some(&mut d_trace))?;
    println!("discriminator: {d_trace:?}");
    Ok(())
}
