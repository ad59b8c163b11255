//! Strided 1-D convolution and transposed convolution kernels.
//!
//! Both directions lower to a single GEMM against a column buffer. The
//! column buffer for a `channels x len` source holds, for every
//! `(channel, tap)` row and every output step `t`, the source sample at
//! `t * stride + tap - offset` (zero when that index falls outside the
//! source). Convolution gathers through that mapping (`im2col`); the
//! transposed convolution scatters through it (`col2im`), which is what
//! makes the two operators exact adjoints.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Valid `t` range for which `t * stride + tap - offset` lands in `[0, len)`.
fn valid_steps(tap: usize, stride: usize, offset: usize, len: usize, steps: usize) -> (usize, usize) {
    let tap = tap as isize;
    let offset = offset as isize;
    let stride_i = stride as isize;
    // smallest t with t*stride + tap - offset >= 0
    let lo_num = offset - tap;
    let lo = if lo_num <= 0 {
        0
    } else {
        (lo_num + stride_i - 1) / stride_i
    };
    // largest t with t*stride + tap - offset <= len - 1
    let hi_num = len as isize - 1 + offset - tap;
    if hi_num < 0 {
        return (0, 0);
    }
    let hi = (hi_num / stride_i + 1).min(steps as isize);
    let lo = lo.min(hi);
    (lo as usize, hi as usize)
}

pub(crate) fn im2col<T: Scalar>(
    src: &[T],
    channels: usize,
    len: usize,
    kernel: usize,
    stride: usize,
    offset: usize,
    steps: usize,
) -> Vec<T> {
    let mut cols = vec![T::zero(); channels * kernel * steps];
    for c in 0..channels {
        let row_src = &src[c * len..(c + 1) * len];
        for tap in 0..kernel {
            let dst = &mut cols[(c * kernel + tap) * steps..(c * kernel + tap + 1) * steps];
            let (lo, hi) = valid_steps(tap, stride, offset, len, steps);
            if lo >= hi {
                continue;
            }
            let start = lo * stride + tap - offset;
            if stride == 1 {
                dst[lo..hi].copy_from_slice(&row_src[start..start + (hi - lo)]);
            } else {
                for (d, s) in dst[lo..hi].iter_mut().zip(row_src[start..].iter().step_by(stride)) {
                    *d = *s;
                }
            }
        }
    }
    cols
}

pub(crate) fn col2im<T: Scalar>(
    cols: &[T],
    channels: usize,
    len: usize,
    kernel: usize,
    stride: usize,
    offset: usize,
    steps: usize,
    dst: &mut [T],
) {
    for c in 0..channels {
        let row_dst = &mut dst[c * len..(c + 1) * len];
        for tap in 0..kernel {
            let src = &cols[(c * kernel + tap) * steps..(c * kernel + tap + 1) * steps];
            let (lo, hi) = valid_steps(tap, stride, offset, len, steps);
            if lo >= hi {
                continue;
            }
            let start = lo * stride + tap - offset;
            if stride == 1 {
                for (d, &s) in row_dst[start..start + (hi - lo)].iter_mut().zip(&src[lo..hi]) {
                    *d = *d + s;
                }
            } else {
                for (d, &s) in row_dst[start..].iter_mut().step_by(stride).zip(&src[lo..hi]) {
                    *d = *d + s;
                }
            }
        }
    }
}

fn add_bias<T: Scalar>(out: &mut Tensor<T>, bias: Option<&Tensor<T>>) {
    if let Some(b) = bias {
        for c in 0..out.channels() {
            let bc = b.data()[c];
            out.row_mut(c).iter_mut().for_each(|v| *v = *v + bc);
        }
    }
}

fn bias_grad<T: Scalar>(dy: &Tensor<T>) -> Tensor<T> {
    let sums = (0..dy.channels())
        .map(|c| dy.row(c).iter().copied().sum())
        .collect();
    Tensor::from_vec(dy.channels(), 1, sums).expect("bias grad shape")
}

/// Geometry of a zero-padded strided convolution. Weights are stored as
/// `out_channels x (in_channels * kernel)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub kernel: usize,
    pub stride: usize,
    pub pad_left: usize,
    pub pad_right: usize,
}

impl ConvGeometry {
    pub fn output_len(&self, len: usize) -> Result<usize> {
        let padded = len + self.pad_left + self.pad_right;
        if self.stride == 0 || self.kernel == 0 {
            return Err(Error::invalid("kernel and stride must be positive"));
        }
        if padded < self.kernel {
            return Err(Error::shape(format!(
                "padded length {padded} shorter than kernel {}",
                self.kernel
            )));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }
}

pub(crate) fn check_conv_weight<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    kernel: usize,
) -> Result<(usize, usize)> {
    if w.length() % kernel != 0 {
        return Err(Error::shape(format!(
            "weight row length {} not a multiple of kernel {kernel}",
            w.length()
        )));
    }
    let in_ch = w.length() / kernel;
    if in_ch != x.channels() {
        return Err(Error::shape(format!(
            "conv expects {in_ch} input channels, got {}",
            x.channels()
        )));
    }
    if let Some(b) = bias {
        if b.len() != w.channels() {
            return Err(Error::shape(format!(
                "bias has {} entries for {} output channels",
                b.len(),
                w.channels()
            )));
        }
    }
    Ok((in_ch, w.channels()))
}

pub fn conv1d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    geom: ConvGeometry,
) -> Result<Tensor<T>> {
    let (in_ch, out_ch) = check_conv_weight(x, w, bias, geom.kernel)?;
    let steps = geom.output_len(x.length())?;
    let mut out = Tensor::zeros(out_ch, steps);
    if geom.kernel == 1 && geom.stride == 1 && geom.pad_left == 0 && geom.pad_right == 0 {
        T::gemm(false, false, out_ch, in_ch, steps, T::one(), w.data(), x.data(), T::zero(), out.data_mut());
    } else {
        let cols = im2col(x.data(), in_ch, x.length(), geom.kernel, geom.stride, geom.pad_left, steps);
        T::gemm(
            false,
            false,
            out_ch,
            in_ch * geom.kernel,
            steps,
            T::one(),
            w.data(),
            &cols,
            T::zero(),
            out.data_mut(),
        );
    }
    add_bias(&mut out, bias);
    Ok(out)
}

pub struct ConvGrads<T> {
    pub input: Option<Tensor<T>>,
    pub weight: Option<Tensor<T>>,
    pub bias: Option<Tensor<T>>,
}

pub fn conv1d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
    geom: ConvGeometry,
    need_input: bool,
    need_weight: bool,
    need_bias: bool,
) -> ConvGrads<T> {
    let in_ch = x.channels();
    let out_ch = w.channels();
    let steps = dy.length();
    let rows = in_ch * geom.kernel;
    let pointwise = geom.kernel == 1 && geom.stride == 1 && geom.pad_left == 0 && geom.pad_right == 0;

    let weight = need_weight.then(|| {
        let mut dw = Tensor::zeros(out_ch, rows);
        if pointwise {
            T::gemm(false, true, out_ch, steps, rows, T::one(), dy.data(), x.data(), T::zero(), dw.data_mut());
        } else {
            let cols = im2col(x.data(), in_ch, x.length(), geom.kernel, geom.stride, geom.pad_left, steps);
            T::gemm(false, true, out_ch, steps, rows, T::one(), dy.data(), &cols, T::zero(), dw.data_mut());
        }
        dw
    });

    let input = need_input.then(|| {
        let mut dx = Tensor::zeros(in_ch, x.length());
        if pointwise {
            T::gemm(true, false, rows, out_ch, steps, T::one(), w.data(), dy.data(), T::zero(), dx.data_mut());
        } else {
            let mut dcols = vec![T::zero(); rows * steps];
            T::gemm(true, false, rows, out_ch, steps, T::one(), w.data(), dy.data(), T::zero(), &mut dcols);
            col2im(&dcols, in_ch, x.length(), geom.kernel, geom.stride, geom.pad_left, steps, dx.data_mut());
        }
        dx
    });

    ConvGrads {
        input,
        weight,
        bias: need_bias.then(|| bias_grad(dy)),
    }
}

/// Geometry of a transposed convolution. Weights are stored as
/// `in_channels x (out_channels * kernel)`, i.e. the same layout as the
/// convolution it is the adjoint of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TConvGeometry {
    pub kernel: usize,
    pub stride: usize,
    pub crop_left: usize,
    pub crop_right: usize,
}

impl TConvGeometry {
    pub fn raw_len(&self, len: usize) -> usize {
        (len - 1) * self.stride + self.kernel
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        if self.stride == 0 || self.kernel == 0 || len == 0 {
            return Err(Error::invalid("kernel, stride and length must be positive"));
        }
        let raw = self.raw_len(len);
        if self.crop_left + self.crop_right >= raw {
            return Err(Error::shape(format!(
                "crop ({}, {}) exceeds transposed-conv output length {raw}",
                self.crop_left, self.crop_right
            )));
        }
        Ok(raw - self.crop_left - self.crop_right)
    }
}

pub fn tconv1d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    geom: TConvGeometry,
) -> Result<Tensor<T>> {
    if w.channels() != x.channels() {
        return Err(Error::shape(format!(
            "transposed conv expects {} input channels, got {}",
            w.channels(),
            x.channels()
        )));
    }
    if w.length() % geom.kernel != 0 {
        return Err(Error::shape("weight row length not a multiple of kernel"));
    }
    let in_ch = x.channels();
    let out_ch = w.length() / geom.kernel;
    if let Some(b) = bias {
        if b.len() != out_ch {
            return Err(Error::shape(format!(
                "bias has {} entries for {out_ch} output channels",
                b.len()
            )));
        }
    }
    let out_len = geom.output_len(x.length())?;
    let steps = x.length();
    let rows = out_ch * geom.kernel;
    let mut cols = vec![T::zero(); rows * steps];
    T::gemm(true, false, rows, in_ch, steps, T::one(), w.data(), x.data(), T::zero(), &mut cols);
    let mut out = Tensor::zeros(out_ch, out_len);
    col2im(&cols, out_ch, out_len, geom.kernel, geom.stride, geom.crop_left, steps, out.data_mut());
    add_bias(&mut out, bias);
    Ok(out)
}

pub fn tconv1d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
    geom: TConvGeometry,
    need_input: bool,
    need_weight: bool,
    need_bias: bool,
) -> ConvGrads<T> {
    let in_ch = x.channels();
    let out_ch = dy.channels();
    let steps = x.length();
    let rows = out_ch * geom.kernel;
    let dcols = if need_input || need_weight {
        im2col(dy.data(), out_ch, dy.length(), geom.kernel, geom.stride, geom.crop_left, steps)
    } else {
        Vec::new()
    };
    let input = need_input.then(|| {
        let mut dx = Tensor::zeros(in_ch, steps);
        T::gemm(false, false, in_ch, rows, steps, T::one(), w.data(), &dcols, T::zero(), dx.data_mut());
        dx
    });
    let weight = need_weight.then(|| {
        let mut dw = Tensor::zeros(in_ch, rows);
        T::gemm(false, true, in_ch, steps, rows, T::one(), x.data(), &dcols, T::zero(), dw.data_mut());
        dw
    });
    ConvGrads {
        input,
        weight,
        bias: need_bias.then(|| bias_grad(dy)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ch: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(ch, v.len() / ch, v.to_vec()).unwrap()
    }

    /// Direct-sum convolution used as the reference for the GEMM path.
    fn direct_conv(x: &Tensor<f64>, w: &Tensor<f64>, k: usize, s: usize, pl: usize, pr: usize) -> Tensor<f64> {
        let ci = x.channels();
        let co = w.channels();
        let steps = (x.length() + pl + pr - k) / s + 1;
        let mut out = Tensor::zeros(co, steps);
        for o in 0..co {
            for t in 0..steps {
                let mut acc = 0.0;
                for c in 0..ci {
                    for j in 0..k {
                        let idx = (t * s + j) as isize - pl as isize;
                        if idx >= 0 && (idx as usize) < x.length() {
                            acc += w.get(o, c * k + j) * x.get(c, idx as usize);
                        }
                    }
                }
                out.data_mut()[o * steps + t] = acc;
            }
        }
        out
    }

    #[test]
    fn conv_small_examples() {
        let g = ConvGeometry { kernel: 3, stride: 1, pad_left: 0, pad_right: 0 };
        let y = conv1d_forward(&t(1, &[1., 2., 3.]), &t(1, &[1., 0., -1.]), None, g).unwrap();
        assert_eq!(y.data(), &[-2.0]);

        let g = ConvGeometry { kernel: 2, stride: 2, pad_left: 0, pad_right: 0 };
        let y = conv1d_forward(&t(1, &[1., 2., 3., 4.]), &t(1, &[1., 1.]), None, g).unwrap();
        assert_eq!(y.data(), &[3.0, 7.0]);
    }

    #[test]
    fn conv_matches_direct_sum() {
        let x = Tensor::from_vec(3, 11, (0..33).map(|i| ((i * 7) as f64 * 0.13).sin()).collect()).unwrap();
        let w = Tensor::from_vec(2, 3 * 4, (0..24).map(|i| ((i * 5) as f64 * 0.29).cos()).collect()).unwrap();
        for (s, pl, pr) in [(1, 0, 0), (2, 1, 2), (3, 3, 0), (2, 0, 5)] {
            let g = ConvGeometry { kernel: 4, stride: s, pad_left: pl, pad_right: pr };
            let y = conv1d_forward(&x, &w, None, g).unwrap();
            let want = direct_conv(&x, &w, 4, s, pl, pr);
            assert_eq!(y.shape(), want.shape());
            for (a, b) in y.data().iter().zip(want.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_rejects_short_and_mismatched() {
        let g = ConvGeometry { kernel: 4, stride: 1, pad_left: 0, pad_right: 0 };
        assert!(conv1d_forward(&t(1, &[1., 2.]), &t(1, &[1., 1., 1., 1.]), None, g).is_err());
        assert!(conv1d_forward(&t(2, &[1., 2., 3., 4., 5., 6., 7., 8.]), &t(1, &[1., 1., 1., 1.]), None, g).is_err());
    }

    #[test]
    fn tconv_small_examples() {
        let g = TConvGeometry { kernel: 2, stride: 2, crop_left: 0, crop_right: 0 };
        let y = tconv1d_forward(&t(1, &[1.]), &t(1, &[1., 2.]), None, g).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0]);
        let y = tconv1d_forward(&t(1, &[1., 1.]), &t(1, &[1., 1.]), None, g).unwrap();
        assert_eq!(y.data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn tconv_doubles_length_with_symmetric_crop() {
        let g = TConvGeometry { kernel: 66, stride: 2, crop_left: 32, crop_right: 32 };
        assert_eq!(g.output_len(1000).unwrap(), 2000);
        let g = TConvGeometry { kernel: 2, stride: 2, crop_left: 1, crop_right: 1 };
        assert!(g.output_len(1).is_err());
    }

    #[test]
    fn valid_steps_bounds() {
        // len 5, offset 2, stride 2, tap 0: t*2 - 2 in [0,5) -> t in [1, 3]
        assert_eq!(valid_steps(0, 2, 2, 5, 10), (1, 4));
        assert_eq!(valid_steps(3, 1, 0, 2, 4), (0, 0));
    }
}
