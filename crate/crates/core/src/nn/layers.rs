use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::xavier_uniform;
use super::params::{Binder, ParamId, ParamStore};
use super::spectral::SpectralNormState;
use crate::autodiff::{ConvGeometry, Graph, Scalar, TConvGeometry, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadMode {
    Zero,
    Reflect,
}

/// Gate nonlinearity of a gated convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// Softmax across channels at every time step.
    #[serde(alias = "softmax")]
    SoftmaxChannel,
    /// Elementwise logistic gate.
    Sigmoid,
}

impl std::str::FromStr for GateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" | "softmax_channel" => Ok(GateKind::SoftmaxChannel),
            "sigmoid" => Ok(GateKind::Sigmoid),
            other => Err(Error::invalid(format!("unknown gate kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GateKind::SoftmaxChannel => "softmax",
            GateKind::Sigmoid => "sigmoid",
        })
    }
}

fn to_t<T: Scalar>(v: Vec<f64>) -> Vec<T> {
    v.into_iter().map(T::from_f64).collect()
}

fn add_weight<T: Scalar, R: Rng + ?Sized>(
    store: &mut ParamStore<T>,
    name: &str,
    dims: [usize; 3],
    fan: (usize, usize),
    spectral: bool,
    rng: &mut R,
) -> Result<ParamId> {
    let n = dims.iter().product();
    let w = store.add(format!("{name}.weight"), dims.to_vec(), to_t(xavier_uniform(n, fan.0, fan.1, rng)))?;
    if spectral {
        let state = SpectralNormState::new(&store.get(w).value, rng);
        store.set_spectral(w, state);
    }
    Ok(w)
}

/// Strided 1-D convolution layer with bias.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: (usize, usize),
    pub pad_mode: PadMode,
}

impl Conv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: (usize, usize),
        pad_mode: PadMode,
        spectral: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = add_weight(
            store,
            name,
            [out_channels, in_channels, kernel],
            (in_channels * kernel, out_channels * kernel),
            spectral,
            rng,
        )?;
        let bias = store.add(format!("{name}.bias"), vec![out_channels], vec![T::zero(); out_channels])?;
        Ok(Self {
            weight,
            bias,
            in_channels,
            out_channels,
            kernel,
            stride,
            pad,
            pad_mode,
        })
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        ConvGeometry {
            kernel: self.kernel,
            stride: self.stride,
            pad_left: self.pad.0,
            pad_right: self.pad.1,
        }
        .output_len(len)
    }

    pub fn forward<T: Scalar>(&self, b: &Binder<'_, T>, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let padded = self.pad_input(g, x)?;
        self.forward_padded(b, g, padded)
    }

    fn pad_input<T: Scalar>(&self, g: &mut Graph<T>, x: Var) -> Result<Var> {
        match self.pad_mode {
            PadMode::Reflect if self.pad != (0, 0) => g.reflect_pad(x, self.pad.0, self.pad.1),
            _ => Ok(x),
        }
    }

    /// Convolution of an input that already carries this layer's reflect
    /// padding (used when two layers share one padded input).
    fn forward_padded<T: Scalar>(&self, b: &Binder<'_, T>, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let w = b.weight(g, self.weight)?;
        let bias = b.bind(g, self.bias);
        let (pl, pr) = match self.pad_mode {
            PadMode::Zero => self.pad,
            PadMode::Reflect => (0, 0),
        };
        let geom = ConvGeometry {
            kernel: self.kernel,
            stride: self.stride,
            pad_left: pl,
            pad_right: pr,
        };
        g.conv1d(x, w, Some(bias), geom)
    }
}

/// Transposed 1-D convolution layer with symmetric output crop.
#[derive(Debug, Clone)]
pub struct TConv1d {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub crop: (usize, usize),
}

impl TConv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        crop: (usize, usize),
        spectral: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = add_weight(
            store,
            name,
            [in_channels, out_channels, kernel],
            (in_channels * kernel, out_channels * kernel),
            spectral,
            rng,
        )?;
        let bias = store.add(format!("{name}.bias"), vec![out_channels], vec![T::zero(); out_channels])?;
        Ok(Self {
            weight,
            bias,
            in_channels,
            out_channels,
            kernel,
            stride,
            crop,
        })
    }

    pub fn geometry(&self) -> TConvGeometry {
        TConvGeometry {
            kernel: self.kernel,
            stride: self.stride,
            crop_left: self.crop.0,
            crop_right: self.crop.1,
        }
    }

    pub fn forward<T: Scalar>(&self, b: &Binder<'_, T>, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let w = b.weight(g, self.weight)?;
        let bias = b.bind(g, self.bias);
        g.tconv1d(x, w, Some(bias), self.geometry())
    }
}

/// `tanh(W_f * X) (.) gate(W_g * X)`, length-preserving via reflect padding
/// shared by both paths.
#[derive(Debug, Clone)]
pub struct GatedConv {
    pub filter: Conv1d,
    pub gate: Conv1d,
}

impl GatedConv {
    /// `kernel` must be odd so symmetric padding preserves the length.
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        spectral: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(Error::invalid(format!("gated conv kernel must be odd, got {kernel}")));
        }
        let half = kernel / 2;
        let mk = |store: &mut ParamStore<T>, path: &str, rng: &mut R| {
            Conv1d::new(
                store,
                &format!("{name}.{path}"),
                in_channels,
                out_channels,
                kernel,
                1,
                (half, half),
                PadMode::Reflect,
                spectral,
                rng,
            )
        };
        let filter = mk(store, "filter", rng)?;
        let gate = mk(store, "gate", rng)?;
        Ok(Self { filter, gate })
    }

    pub fn forward<T: Scalar>(&self, b: &Binder<'_, T>, g: &mut Graph<T>, x: Var, kind: GateKind) -> Result<Var> {
        if g.shape(x).0 != self.filter.in_channels {
            return Err(Error::shape(format!(
                "gated conv expects {} channels, got {}",
                self.filter.in_channels,
                g.shape(x).0
            )));
        }
        let padded = self.filter.pad_input(g, x)?;
        let f = self.filter.forward_padded(b, g, padded)?;
        let gt = self.gate.forward_padded(b, g, padded)?;
        let f = g.tanh(f)?;
        let gt = match kind {
            GateKind::SoftmaxChannel => g.channel_softmax(gt)?,
            GateKind::Sigmoid => g.sigmoid(gt)?,
        };
        g.mul(f, gt)
    }
}

/// PReLU with one learned slope for the whole layer.
#[derive(Debug, Clone)]
pub struct PRelu {
    pub slope: ParamId,
}

pub const PRELU_INIT: f64 = 0.25;

impl PRelu {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str) -> Result<Self> {
        let slope = store.add(format!("{name}.slope"), vec![1], vec![T::from_f64(PRELU_INIT)])?;
        Ok(Self { slope })
    }

    pub fn forward<T: Scalar>(&self, b: &Binder<'_, T>, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let a = b.bind(g, self.slope);
        g.prelu(x, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::rng::rng_for;

    fn random_input(ch: usize, len: usize, seed: u64) -> Tensor<f64> {
        let mut rng = rng_for(seed, &[]);
        use rand::RngExt;
        Tensor::from_vec(ch, len, (0..ch * len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_filter_gives_zero_output() {
        let mut store = ParamStore::<f64>::new(0);
        let layer = GatedConv::new(&mut store, "g", 3, 4, 5, false, &mut rng_for(1, &[])).unwrap();
        store.get_mut(layer.filter.weight).value.fill(0.0);
        let mut g = Graph::new();
        let x = g.input(random_input(3, 20, 2), false);
        for kind in [GateKind::SoftmaxChannel, GateKind::Sigmoid] {
            let y = layer.forward(&store.binder(false), &mut g, x, kind).unwrap();
            assert!(g.value(y).data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_channel_softmax_gate_is_identity() {
        let mut store = ParamStore::<f64>::new(0);
        let layer = GatedConv::new(&mut store, "g", 2, 1, 5, false, &mut rng_for(3, &[])).unwrap();
        let b = store.binder(false);
        let mut g = Graph::new();
        let x = g.input(random_input(2, 16, 4), false);
        let y = layer.forward(&b, &mut g, x, GateKind::SoftmaxChannel).unwrap();
        let f = layer.filter.forward(&b, &mut g, x).unwrap();
        let f = g.tanh(f).unwrap();
        assert_eq!(g.value(y).data(), g.value(f).data());
    }

    #[test]
    fn sigmoid_gate_matches_primitive_composition() {
        let mut store = ParamStore::<f64>::new(0);
        let layer = GatedConv::new(&mut store, "g", 3, 3, 7, true, &mut rng_for(5, &[])).unwrap();
        let b = store.binder(false);
        let mut g = Graph::new();
        let x = g.input(random_input(3, 40, 6), false);
        let y = layer.forward(&b, &mut g, x, GateKind::Sigmoid).unwrap();
        let f = layer.filter.forward(&b, &mut g, x).unwrap();
        let gt = layer.gate.forward(&b, &mut g, x).unwrap();
        let f = g.tanh(f).unwrap();
        let gt = g.sigmoid(gt).unwrap();
        let want = g.mul(f, gt).unwrap();
        assert_eq!(g.value(y).data(), g.value(want).data());
    }

    #[test]
    fn gated_output_bounded_and_length_preserved() {
        let mut store = ParamStore::<f64>::new(0);
        let layer = GatedConv::new(&mut store, "g", 4, 4, 65, false, &mut rng_for(7, &[])).unwrap();
        for len in [33usize, 34, 100] {
            let mut g = Graph::new();
            let x = g.input(random_input(4, len, len as u64).map(|v| v * 10.0), false);
            let y = layer.forward(&store.binder(false), &mut g, x, GateKind::SoftmaxChannel).unwrap();
            assert_eq!(g.shape(y), (4, len));
            assert!(g.value(y).data().iter().all(|v| v.abs() <= 1.0));
        }
        let mut g = Graph::new();
        let x = g.input(random_input(4, 32, 1), false);
        assert!(layer.forward(&store.binder(false), &mut g, x, GateKind::SoftmaxChannel).is_err());
        let x = g.input(random_input(3, 40, 1), false);
        assert!(layer.forward(&store.binder(false), &mut g, x, GateKind::SoftmaxChannel).is_err());
    }

    #[test]
    fn even_gate_kernel_rejected() {
        let mut store = ParamStore::<f64>::new(0);
        assert!(GatedConv::new(&mut store, "g", 1, 1, 4, false, &mut rng_for(0, &[])).is_err());
    }

    #[test]
    fn gate_kind_parses() {
        assert_eq!("softmax".parse::<GateKind>().unwrap(), GateKind::SoftmaxChannel);
        assert_eq!("sigmoid".parse::<GateKind>().unwrap(), GateKind::Sigmoid);
        assert!("relu".parse::<GateKind>().is_err());
    }
}
