use super::arch::ArchConfig;
use super::generator::Trace;
use crate::autodiff::{Graph, Scalar, Tensor, Var};
use crate::error::{Error, Result};
use crate::nn::{Conv1d, PadMode, ParamStore};
use crate::rng::rng_for;

pub const DISCRIMINATOR_STORE: u32 = 1;

/// Conditional critic over `(candidate, residual)` pairs. Every layer is a
/// spectrally normalized stride-2 convolution; all but the last use a leaky
/// ReLU. The score is the mean of the final feature map.
#[derive(Debug, Clone)]
pub struct Discriminator<T> {
    pub arch: ArchConfig,
    pub store: ParamStore<T>,
    pub layers: Vec<Conv1d>,
}

impl<T: Scalar> Discriminator<T> {
    pub fn new(arch: ArchConfig, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng_for(seed, &[DISCRIMINATOR_STORE as u64, 0x1417]);
        let mut store = ParamStore::new(DISCRIMINATOR_STORE);
        let k = arch.discriminator_kernel;
        let pad = ArchConfig::same_pad(k);
        let layers = arch
            .discriminator_channels
            .windows(2)
            .enumerate()
            .map(|(i, w)| Conv1d::new(&mut store, &format!("disc.conv{i}"), w[0], w[1], k, 2, (pad, pad), PadMode::Zero, true, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { arch, store, layers })
    }

    pub fn param_count(&self) -> usize {
        self.store.numel()
    }

    /// Scalar score for a candidate/residual pair of `1 x L` leaves.
    pub fn forward(
        &self,
        g: &mut Graph<T>,
        candidate: Var,
        residual: Var,
        trainable: bool,
        mut trace: Option<&mut Trace>,
    ) -> Result<Var> {
        let (cs, rs) = (g.shape(candidate), g.shape(residual));
        if cs.0 != 1 || rs.0 != 1 {
            return Err(Error::shape("discriminator inputs must be single-channel"));
        }
        if cs.1 != rs.1 {
            return Err(Error::LengthMismatch(format!(
                "candidate has {} samples, residual {}",
                cs.1, rs.1
            )));
        }
        let b = self.store.binder(trainable);
        let mut x = g.concat_channels(candidate, residual)?;
        let last = self.layers.len() - 1;
        for (i, conv) in self.layers.iter().enumerate() {
            x = conv.forward(&b, g, x)?;
            if i < last {
                x = g.leaky_relu(x, self.arch.leaky_slope)?;
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(g.shape(x));
            }
        }
        let score = g.mean(x)?;
        g.label(score, "discriminator score");
        Ok(score)
    }

    /// Forward-only score.
    pub fn score(&self, candidate: &[T], residual: &[T]) -> Result<T> {
        let mut g = Graph::new();
        let c = g.input(Tensor::from_signal(candidate)?, false);
        let r = g.input(Tensor::from_signal(residual)?, false);
        let s = self.forward(&mut g, c, r, false, None)?;
        Ok(g.value(s).item())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_trace() {
        let d = Discriminator::<f32>::new(ArchConfig::paper(), 3).unwrap();
        let x: Vec<f32> = (0..16000).map(|i| ((i as f32) * 0.01).sin() * 0.3).collect();
        let mut g = Graph::new();
        let c = g.input(Tensor::from_signal(&x).unwrap(), false);
        let r = g.input(Tensor::from_signal(&x).unwrap(), false);
        let mut trace = Trace::new();
        let s = d.forward(&mut g, c, r, false, Some(&mut trace)).unwrap();
        assert_eq!(
            trace,
            vec![(16, 8000), (16, 4000), (32, 2000), (32, 1000), (64, 500), (32, 250)]
        );
        assert!(g.value(s).is_scalar());
    }

    #[test]
    fn zero_weights_score_zero() {
        let mut d = Discriminator::<f64>::new(ArchConfig::tiny(), 3).unwrap();
        for p in d.store.iter_mut() {
            p.value.fill(0.0);
        }
        let x = vec![0.5; 64];
        assert_eq!(d.score(&x, &x).unwrap(), 0.0);
        assert!(d.score(&x, &x[..32]).is_err());
    }
}
