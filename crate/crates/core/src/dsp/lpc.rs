//! Framing, windowed autocorrelation and the Levinson-Durbin recursion.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest reflection-coefficient magnitude the recursion will produce.
pub const REFLECTION_LIMIT: f64 = 0.999;

/// Frames whose zero-lag energy is below this are treated as silent.
pub const SILENCE_ENERGY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hamming,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hamming if len == 1 => vec![1.0],
            Window::Hamming => (0..len)
                .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
                .collect(),
        }
    }
}

/// Splits `samples` into contiguous `frame_len` frames, zero-padding the
/// tail to a whole number of frames.
pub fn frame_signal<T: Copy + Default>(samples: &[T], frame_len: usize) -> Result<Vec<Vec<T>>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if frame_len == 0 {
        return Err(Error::invalid("frame length must be positive"));
    }
    Ok(samples
        .chunks(frame_len)
        .map(|c| {
            let mut f = c.to_vec();
            f.resize(frame_len, T::default());
            f
        })
        .collect())
}

/// Length of `len` samples after tail padding to the frame grid.
pub fn padded_len(len: usize, frame_len: usize) -> usize {
    len.div_ceil(frame_len) * frame_len
}

/// Autocorrelation of the windowed frame for lags `0..=max_lag`.
pub fn autocorrelate(frame: &[f64], max_lag: usize, window: Window) -> Result<Vec<f64>> {
    if max_lag >= frame.len() {
        return Err(Error::invalid(format!(
            "max lag {max_lag} must be below the frame length {}",
            frame.len()
        )));
    }
    let w = window.coefficients(frame.len());
    let xw: Vec<f64> = frame.iter().zip(&w).map(|(x, w)| x * w).collect();
    Ok((0..=max_lag)
        .map(|k| xw[..xw.len() - k].iter().zip(&xw[k..]).map(|(a, b)| a * b).sum())
        .collect())
}

/// Solution of the order-`p` normal equations.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcSolution {
    /// Predictor coefficients `a_1..a_p` of `A(z) = 1 - sum a_k z^-k`.
    pub coeffs: Vec<f64>,
    pub reflection: Vec<f64>,
    pub error_power: f64,
}

/// Levinson-Durbin recursion with clamped reflection coefficients.
///
/// A frame with `r[0]` below [`SILENCE_ENERGY`] (including non-positive
/// energy) yields all-zero coefficients and zero error power.
pub fn levinson_durbin(autocorr: &[f64], order: usize) -> Result<LpcSolution> {
    if order == 0 {
        return Err(Error::invalid("LPC order must be at least 1"));
    }
    if autocorr.len() < order + 1 {
        return Err(Error::invalid(format!(
            "need {} autocorrelation lags for order {order}, got {}",
            order + 1,
            autocorr.len()
        )));
    }
    let r0 = autocorr[0];
    if !(r0 >= SILENCE_ENERGY) {
        return Ok(LpcSolution {
            coeffs: vec![0.0; order],
            reflection: vec![0.0; order],
            error_power: 0.0,
        });
    }

    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r0;
    for i in 0..order {
        let acc = autocorr[i + 1] - (0..i).map(|j| a[j] * autocorr[i - j]).sum::<f64>();
        let k = (acc / err).clamp(-REFLECTION_LIMIT, REFLECTION_LIMIT);
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        reflection.push(k);
    }
    Ok(LpcSolution {
        coeffs: a,
        reflection,
        error_power: err.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_examples() {
        let x = vec![1.0f32; 640];
        assert_eq!(frame_signal(&x, 320).unwrap().len(), 2);
        let x = vec![1.0f32; 321];
        let f = frame_signal(&x, 320).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[1][0], 1.0);
        assert!(f[1][1..].iter().all(|&v| v == 0.0));
        assert_eq!(f[1].len(), 320);
        assert_eq!(frame_signal(&vec![0.0f32; 16000], 320).unwrap().len(), 50);
        assert!(matches!(frame_signal::<f32>(&[], 320), Err(Error::EmptyInput)));
    }

    #[test]
    fn autocorrelation_examples() {
        let r = autocorrelate(&[1.0, 0.0, 0.0], 1, Window::Rectangular).unwrap();
        assert_eq!(r, vec![1.0, 0.0]);
        let r = autocorrelate(&[1.0, 1.0], 1, Window::Rectangular).unwrap();
        assert_eq!(r, vec![2.0, 1.0]);
        assert!(autocorrelate(&[1.0, 1.0], 2, Window::Rectangular).is_err());
    }

    #[test]
    fn levinson_examples() {
        let s = levinson_durbin(&[1.0, 0.0], 1).unwrap();
        assert_eq!(s.coeffs, vec![0.0]);
        assert_eq!(s.error_power, 1.0);

        let s = levinson_durbin(&[1.0, 0.5], 1).unwrap();
        assert!((s.coeffs[0] - 0.5).abs() < 1e-15);
        assert!((s.error_power - 0.75).abs() < 1e-15);

        let s = levinson_durbin(&[1.0, 0.5, 0.25], 2).unwrap();
        assert!((s.coeffs[0] - 0.5).abs() < 1e-15);
        assert!(s.coeffs[1].abs() < 1e-15);
        assert!((s.error_power - 0.75).abs() < 1e-15);
    }

    #[test]
    fn silent_and_degenerate_frames() {
        let s = levinson_durbin(&[0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(s.coeffs, vec![0.0, 0.0]);
        assert_eq!(s.error_power, 0.0);
        let s = levinson_durbin(&[-1.0, 0.0], 1).unwrap();
        assert_eq!(s.coeffs, vec![0.0]);
        // perfectly predictable lag: reflection clamps at the limit
        let s = levinson_durbin(&[1.0, 1.0], 1).unwrap();
        assert!((s.coeffs[0] - REFLECTION_LIMIT).abs() < 1e-15);
        assert!(s.error_power > 0.0);
        assert!(levinson_durbin(&[1.0], 1).is_err());
    }
}
