use rand_distr::{Distribution, StandardNormal};

use super::arch::ArchConfig;
use crate::autodiff::{Graph, Scalar, Tensor, Var};
use crate::error::{Error, Result};
use crate::nn::{Binder, Conv1d, GateKind, GatedConv, PRelu, PadMode, ParamStore, TConv1d};
use crate::rng::rng_for;

pub const GENERATOR_STORE: u32 = 0;

/// Records `(channels, length)` of intermediate feature maps.
pub type Trace = Vec<(usize, usize)>;

fn record<T: Scalar>(trace: &mut Option<&mut Trace>, g: &Graph<T>, v: Var) {
    if let Some(t) = trace.as_deref_mut() {
        t.push(g.shape(v));
    }
}

/// Gaussian noise feeding the upsampler's noise branch.
#[derive(Debug, Clone)]
pub struct NoiseBundle<T> {
    pub z: Tensor<T>,
    pub seed: u64,
}

impl<T: Scalar> NoiseBundle<T> {
    /// `channels x len` draws from N(0, 1), reproducible per seed.
    pub fn draw(channels: usize, len: usize, seed: u64) -> Self {
        let mut rng = rng_for(seed, &[]);
        let data = (0..channels * len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                T::from_f64(z)
            })
            .collect();
        Self {
            z: Tensor::from_vec(channels, len, data).expect("positive noise dims"),
            seed,
        }
    }
}

/// Stride-2 convolution stack compressing the residual into the context.
#[derive(Debug, Clone)]
pub struct ResidualEncoder {
    pub down: Vec<(Conv1d, PRelu)>,
    pub compressor: Conv1d,
}

impl ResidualEncoder {
    fn new<T: Scalar>(store: &mut ParamStore<T>, arch: &ArchConfig, rng: &mut impl rand::Rng) -> Result<Self> {
        let sn = arch.spectral_norm_generator;
        let pad = ArchConfig::same_pad(arch.encoder_kernel);
        let down = arch
            .encoder_channels
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let conv = Conv1d::new(
                    store,
                    &format!("gen.enc.down{i}"),
                    w[0],
                    w[1],
                    arch.encoder_kernel,
                    2,
                    (pad, pad),
                    PadMode::Reflect,
                    sn,
                    rng,
                )?;
                let act = PRelu::new(store, &format!("gen.enc.act{i}"))?;
                Ok((conv, act))
            })
            .collect::<Result<Vec<_>>>()?;
        let cpad = ArchConfig::same_pad(arch.compressor_kernel);
        let compressor = Conv1d::new(
            store,
            "gen.enc.compressor",
            *arch.encoder_channels.last().expect("validated"),
            1,
            arch.compressor_kernel,
            1,
            (cpad, cpad),
            PadMode::Reflect,
            sn,
            rng,
        )?;
        Ok(Self { down, compressor })
    }

    pub fn forward<T: Scalar>(
        &self,
        b: &Binder<'_, T>,
        g: &mut Graph<T>,
        residual: Var,
        mut trace: Option<&mut Trace>,
    ) -> Result<Var> {
        let mut x = residual;
        for (conv, act) in &self.down {
            x = conv.forward(b, g, x)?;
            x = act.forward(b, g, x)?;
            record(&mut trace, g, x);
        }
        let ctx = self.compressor.forward(b, g, x)?;
        record(&mut trace, g, ctx);
        Ok(ctx)
    }
}

/// Pointwise expansion followed by a stack of gated convolutions.
#[derive(Debug, Clone)]
pub struct ContextDecoder {
    pub expand: Conv1d,
    pub layers: Vec<GatedConv>,
}

impl ContextDecoder {
    fn new<T: Scalar>(store: &mut ParamStore<T>, arch: &ArchConfig, rng: &mut impl rand::Rng) -> Result<Self> {
        let sn = arch.spectral_norm_generator;
        let c = arch.decoder_channels;
        let expand = Conv1d::new(store, "gen.dec.expand", 1, c, 1, 1, (0, 0), PadMode::Zero, sn, rng)?;
        let layers = (0..arch.decoder_layers)
            .map(|i| GatedConv::new(store, &format!("gen.dec.gated{i}"), c, c, arch.gate_kernel, sn, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { expand, layers })
    }

    pub fn forward<T: Scalar>(
        &self,
        b: &Binder<'_, T>,
        g: &mut Graph<T>,
        context: Var,
        gate: GateKind,
        mut trace: Option<&mut Trace>,
    ) -> Result<Var> {
        let mut h = self.expand.forward(b, g, context)?;
        for layer in &self.layers {
            h = layer.forward(b, g, h, gate)?;
        }
        record(&mut trace, g, h);
        Ok(h)
    }
}

#[derive(Debug, Clone)]
pub struct UpsampleStage {
    pub tconv: TConv1d,
    pub refine: GatedConv,
}

/// Progressive x2 upsampling with a parallel noise branch concatenated at
/// every stage, then a tanh output convolution.
#[derive(Debug, Clone)]
pub struct AdversarialUpsampler {
    pub stages: Vec<UpsampleStage>,
    pub noise: Vec<TConv1d>,
    pub output: Conv1d,
    pub noise_channels: usize,
}

impl AdversarialUpsampler {
    fn new<T: Scalar>(store: &mut ParamStore<T>, arch: &ArchConfig, rng: &mut impl rand::Rng) -> Result<Self> {
        let sn = arch.spectral_norm_generator;
        let sig = arch.upsampler_signal_channels;
        let noise_ch = arch.upsampler_noise_channels;
        let k = arch.upsampler_kernel;
        let crop = arch.tconv_crop();
        let mut stages = Vec::new();
        let mut noise = Vec::new();
        for s in 0..arch.stages() {
            let in_ch = if s == 0 { arch.decoder_channels } else { sig + noise_ch };
            let tconv = TConv1d::new(store, &format!("gen.ups{s}.tconv"), in_ch, sig, k, 2, (crop, crop), sn, rng)?;
            let refine = GatedConv::new(store, &format!("gen.ups{s}.refine"), sig, sig, arch.gate_kernel, sn, rng)?;
            stages.push(UpsampleStage { tconv, refine });
            noise.push(TConv1d::new(
                store,
                &format!("gen.noise{s}.tconv"),
                noise_ch,
                noise_ch,
                k,
                2,
                (crop, crop),
                sn,
                rng,
            )?);
        }
        let opad = ArchConfig::same_pad(arch.output_kernel);
        let output = Conv1d::new(
            store,
            "gen.out",
            sig + noise_ch,
            1,
            arch.output_kernel,
            1,
            (opad, opad),
            PadMode::Reflect,
            sn,
            rng,
        )?;
        Ok(Self {
            stages,
            noise,
            output,
            noise_channels: noise_ch,
        })
    }

    pub fn forward<T: Scalar>(
        &self,
        b: &Binder<'_, T>,
        g: &mut Graph<T>,
        hidden: Var,
        noise: &NoiseBundle<T>,
        gate: GateKind,
        mut trace: Option<&mut Trace>,
    ) -> Result<Var> {
        let m = g.shape(hidden).1;
        if noise.z.shape() != (self.noise_channels, m) {
            return Err(Error::shape(format!(
                "noise must be {}x{m}, got {:?}",
                self.noise_channels,
                noise.z.shape()
            )));
        }
        let mut z = g.input(noise.z.clone(), false);
        let mut h = hidden;
        for (stage, ntconv) in self.stages.iter().zip(&self.noise) {
            h = stage.tconv.forward(b, g, h)?;
            h = stage.refine.forward(b, g, h, gate)?;
            z = ntconv.forward(b, g, z)?;
            h = g.concat_channels(h, z)?;
            record(&mut trace, g, h);
        }
        let y = self.output.forward(b, g, h)?;
        let y = g.tanh(y)?;
        record(&mut trace, g, y);
        Ok(y)
    }
}

/// Conditional generator: residual encoder, context decoder, adversarial
/// upsampler.
#[derive(Debug, Clone)]
pub struct Generator<T> {
    pub arch: ArchConfig,
    pub gate: GateKind,
    pub store: ParamStore<T>,
    pub encoder: ResidualEncoder,
    pub decoder: ContextDecoder,
    pub upsampler: AdversarialUpsampler,
}

/// Feature-map shapes through the generator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneratorTrace {
    pub encoder: Trace,
    pub decoder: Trace,
    pub upsampler: Trace,
}

impl<T: Scalar> Generator<T> {
    pub fn new(arch: ArchConfig, gate: GateKind, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng_for(seed, &[GENERATOR_STORE as u64, 0x1417]);
        let mut store = ParamStore::new(GENERATOR_STORE);
        let encoder = ResidualEncoder::new(&mut store, &arch, &mut rng)?;
        let decoder = ContextDecoder::new(&mut store, &arch, &mut rng)?;
        let upsampler = AdversarialUpsampler::new(&mut store, &arch, &mut rng)?;
        Ok(Self {
            arch,
            gate,
            store,
            encoder,
            decoder,
            upsampler,
        })
    }

    pub fn param_count(&self) -> usize {
        self.store.numel()
    }

    pub fn noise_channels(&self) -> usize {
        self.arch.upsampler_noise_channels
    }

    /// Noise bundle sized for a segment of `segment_len` samples.
    pub fn draw_noise(&self, segment_len: usize, seed: u64) -> NoiseBundle<T> {
        NoiseBundle::draw(self.noise_channels(), segment_len / self.arch.factor(), seed)
    }

    pub fn encode(&self, b: &Binder<'_, T>, g: &mut Graph<T>, residual: Var, trace: Option<&mut Trace>) -> Result<Var> {
        let (ch, len) = g.shape(residual);
        if ch != 1 {
            return Err(Error::shape(format!("residual must be single-channel, got {ch}")));
        }
        self.arch.check_segment_len(len)?;
        self.encoder.forward(b, g, residual, trace)
    }

    /// Full cascade on a `1 x L` residual leaf; returns the `1 x L` fake.
    pub fn forward(
        &self,
        g: &mut Graph<T>,
        residual: Var,
        noise: &NoiseBundle<T>,
        trainable: bool,
        mut trace: Option<&mut GeneratorTrace>,
    ) -> Result<Var> {
        let b = self.store.binder(trainable);
        let ctx = self.encode(&b, g, residual, trace.as_deref_mut().map(|t| &mut t.encoder))?;
        let h = self
            .decoder
            .forward(&b, g, ctx, self.gate, trace.as_deref_mut().map(|t| &mut t.decoder))?;
        let y = self
            .upsampler
            .forward(&b, g, h, noise, self.gate, trace.as_deref_mut().map(|t| &mut t.upsampler))?;
        g.label(y, "generator output");
        Ok(y)
    }

    /// Forward-only generation of one segment.
    pub fn generate(&self, residual: &[T], noise: &NoiseBundle<T>) -> Result<Vec<T>> {
        let mut g = Graph::new().with_finite_checks(true);
        let r = g.input(Tensor::from_signal(residual)?, false);
        let y = self.forward(&mut g, r, noise, false, None)?;
        Ok(g.value(y).data().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(len: usize) -> Vec<f32> {
        (0..len).map(|i| 0.1 * ((i as f32) * 0.37).sin()).collect()
    }

    #[test]
    fn paper_trace_at_one_second() {
        let gen = Generator::<f32>::new(ArchConfig::paper(), GateKind::SoftmaxChannel, 1).unwrap();
        let noise = gen.draw_noise(16000, 2);
        let mut g = Graph::new();
        let r = g.input(Tensor::from_signal(&residual(16000)).unwrap(), false);
        let mut trace = GeneratorTrace::default();
        let y = gen.forward(&mut g, r, &noise, false, Some(&mut trace)).unwrap();
        assert_eq!(trace.encoder, vec![(32, 8000), (64, 4000), (64, 2000), (128, 1000), (1, 1000)]);
        assert_eq!(trace.decoder, vec![(64, 1000)]);
        assert_eq!(
            trace.upsampler,
            vec![(64, 2000), (64, 4000), (64, 8000), (64, 16000), (1, 16000)]
        );
        assert_eq!(g.shape(y), (1, 16000));
        assert!(g.value(y).data().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn desk_segment_and_too_short() {
        let gen = Generator::<f32>::new(ArchConfig::paper(), GateKind::Sigmoid, 1).unwrap();
        let mut g = Graph::new();
        let r = g.input(Tensor::from_signal(&residual(1600)).unwrap(), false);
        let mut t = Trace::new();
        let ctx = gen.encode(&gen.store.binder(false), &mut g, r, Some(&mut t)).unwrap();
        assert_eq!(g.shape(ctx), (1, 100));
        let short = g.input(Tensor::from_signal(&residual(100)).unwrap(), false);
        assert!(gen.encode(&gen.store.binder(false), &mut g, short, None).is_err());
    }

    #[test]
    fn seeded_and_noise_dependent() {
        let arch = ArchConfig::tiny();
        let a = Generator::<f64>::new(arch.clone(), GateKind::SoftmaxChannel, 5).unwrap();
        let b = Generator::<f64>::new(arch, GateKind::SoftmaxChannel, 5).unwrap();
        let r: Vec<f64> = residual(128).iter().map(|&v| v as f64).collect();
        let n1 = a.draw_noise(128, 1);
        let n2 = a.draw_noise(128, 2);
        let y1 = a.generate(&r, &n1).unwrap();
        assert_eq!(y1, b.generate(&r, &n1).unwrap());
        assert_ne!(y1, a.generate(&r, &n2).unwrap());
        assert!(a.generate(&r, &a.draw_noise(64, 1)).is_err());
    }
}
