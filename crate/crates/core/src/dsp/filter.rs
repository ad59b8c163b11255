//! Frame-wise LPC analysis/synthesis filtering and cross synthesis.

use super::lpc::{autocorrelate, frame_signal, levinson_durbin, padded_len, Window};
use super::signal::{AudioSignal, Role};
use crate::error::{Error, Result};

/// LPC coefficients of one analysis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcFrame {
    /// Predictor coefficients `a_1..a_p`.
    pub coeffs: Vec<f64>,
    /// Prediction error power left by the recursion.
    pub gain_error: f64,
    pub frame_index: usize,
}

/// Per-frame spectral envelope of a signal on a contiguous frame grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcTrack {
    pub frames: Vec<LpcFrame>,
    pub order: usize,
    pub frame_len: usize,
}

impl LpcTrack {
    /// Number of samples the track covers.
    pub fn coverage(&self) -> usize {
        self.frames.len() * self.frame_len
    }
}

/// `e[n] = x[n] - sum_k a_k x[n-k]`, reading `x[n-k]` from `history` (the
/// previous frame's last `p` samples, oldest first) across the boundary.
pub fn inverse_filter(frame: &[f64], coeffs: &[f64], history: &[f64]) -> Result<Vec<f64>> {
    check_history(coeffs, history)?;
    let p = coeffs.len();
    let at = |n: usize, k: usize| -> f64 {
        if n >= k {
            frame[n - k]
        } else {
            history[p + n - k]
        }
    };
    Ok((0..frame.len())
        .map(|n| frame[n] - (1..=p).map(|k| coeffs[k - 1] * at(n, k)).sum::<f64>())
        .collect())
}

/// `y[n] = e[n] + sum_k a_k y[n-k]`, the exact inverse of [`inverse_filter`];
/// `history` holds the last `p` output samples of the previous frame.
pub fn synthesis_filter(residual: &[f64], coeffs: &[f64], history: &[f64]) -> Result<Vec<f64>> {
    check_history(coeffs, history)?;
    let p = coeffs.len();
    let mut y: Vec<f64> = Vec::with_capacity(residual.len());
    for n in 0..residual.len() {
        let mut acc = residual[n];
        for k in 1..=p {
            let past = if n >= k { y[n - k] } else { history[p + n - k] };
            acc += coeffs[k - 1] * past;
        }
        y.push(acc);
    }
    Ok(y)
}

fn check_history(coeffs: &[f64], history: &[f64]) -> Result<()> {
    if history.len() != coeffs.len() {
        return Err(Error::invalid(format!(
            "filter history has {} samples for order {}",
            history.len(),
            coeffs.len()
        )));
    }
    Ok(())
}

/// Last `p` samples before `start` in `buf`, zero-filled before the origin.
fn history_before(buf: &[f64], start: usize, p: usize) -> Vec<f64> {
    (0..p)
        .map(|i| {
            let back = p - i;
            if start >= back {
                buf[start - back]
            } else {
                0.0
            }
        })
        .collect()
}

/// Estimates the envelope track of `samples` (Hamming-windowed
/// autocorrelation per frame) without filtering.
pub fn estimate_track(samples: &[f64], order: usize, frame_len: usize) -> Result<LpcTrack> {
    if order == 0 || order >= frame_len {
        return Err(Error::invalid(format!(
            "LPC order {order} must be in 1..{frame_len}"
        )));
    }
    let frames = frame_signal(samples, frame_len)?;
    let frames = frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let r = autocorrelate(f, order, Window::Hamming)?;
            let sol = levinson_durbin(&r, order)?;
            Ok(LpcFrame {
                coeffs: sol.coeffs,
                gain_error: sol.error_power,
                frame_index: i,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LpcTrack {
        frames,
        order,
        frame_len,
    })
}

/// Filters the (tail-padded) signal through each frame's `A(z)` using the
/// unwindowed samples, carrying history across frames.
pub fn analysis_filter(samples: &[f64], track: &LpcTrack) -> Result<Vec<f64>> {
    let padded = pad_to(samples, track.coverage())?;
    let mut residual = Vec::with_capacity(padded.len());
    for (i, frame) in track.frames.iter().enumerate() {
        let start = i * track.frame_len;
        let hist = history_before(&padded, start, track.order);
        residual.extend(inverse_filter(
            &padded[start..start + track.frame_len],
            &frame.coeffs,
            &hist,
        )?);
    }
    Ok(residual)
}

fn pad_to(samples: &[f64], len: usize) -> Result<Vec<f64>> {
    if samples.len() > len {
        return Err(Error::LengthMismatch(format!(
            "{} samples exceed track coverage {len}",
            samples.len()
        )));
    }
    let mut v = samples.to_vec();
    v.resize(len, 0.0);
    Ok(v)
}

/// 64-bit LPC analysis: envelope track plus residual of the padded signal.
pub fn analyze(samples: &[f64], order: usize, frame_len: usize) -> Result<(LpcTrack, Vec<f64>)> {
    let track = estimate_track(samples, order, frame_len)?;
    let residual = analysis_filter(samples, &track)?;
    Ok((track, residual))
}

/// 64-bit LPC synthesis; `residual` must cover the track exactly.
pub fn synthesize(residual: &[f64], track: &LpcTrack) -> Result<Vec<f64>> {
    if residual.len() != track.coverage() {
        return Err(Error::LengthMismatch(format!(
            "residual has {} samples, track covers {}",
            residual.len(),
            track.coverage()
        )));
    }
    let mut out: Vec<f64> = Vec::with_capacity(residual.len());
    for (i, frame) in track.frames.iter().enumerate() {
        let start = i * track.frame_len;
        let hist = history_before(&out, start, track.order);
        let y = synthesis_filter(&residual[start..start + track.frame_len], &frame.coeffs, &hist)?;
        out.extend(y);
    }
    Ok(out)
}

/// Envelope track and residual of `signal`. The residual spans the signal
/// zero-padded to the frame grid.
pub fn lpc_analyze(signal: &AudioSignal, order: usize, frame_len: usize) -> Result<(LpcTrack, AudioSignal)> {
    signal.require_pipeline_rate()?;
    let (track, residual) = analyze(&signal.to_f64(), order, frame_len)?;
    Ok((track, AudioSignal::from_f64(&residual, Role::Residual)?))
}

/// Drives `track`'s synthesis filters with `residual`.
pub fn lpc_synthesize(residual: &AudioSignal, track: &LpcTrack) -> Result<AudioSignal> {
    residual.require_pipeline_rate()?;
    let y = synthesize(&residual.to_f64(), track)?;
    AudioSignal::from_f64(&y, Role::Speech)
}

/// 64-bit cross synthesis: the residual of `fake` (analysed at
/// `analysis_order`) filtered by `original`'s envelope. `fake` may be
/// shorter than the track as long as it pads to the same frame grid; the
/// output has `fake`'s length.
pub fn cross_synthesize_f64(fake: &[f64], original: &LpcTrack, analysis_order: Option<usize>) -> Result<Vec<f64>> {
    if fake.is_empty() {
        return Err(Error::EmptyInput);
    }
    if padded_len(fake.len(), original.frame_len) != original.coverage() {
        return Err(Error::LengthMismatch(format!(
            "fake signal of {} samples does not match track coverage {}",
            fake.len(),
            original.coverage()
        )));
    }
    let order = analysis_order.unwrap_or(original.order);
    let (_, residual) = analyze(fake, order, original.frame_len)?;
    let mut out = synthesize(&residual, original)?;
    out.truncate(fake.len());
    Ok(out)
}

/// Replaces the spectral envelope of `fake` with `original`'s.
pub fn cross_synthesize(fake: &AudioSignal, original: &LpcTrack, analysis_order: Option<usize>) -> Result<AudioSignal> {
    fake.require_pipeline_rate()?;
    let out = cross_synthesize_f64(&fake.to_f64(), original, analysis_order)?;
    AudioSignal::from_f64(&out, Role::Speech)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_filter_examples() {
        let e = inverse_filter(&[1.0, 1.0, 1.0], &[0.5], &[0.0]).unwrap();
        assert_eq!(e, vec![1.0, 0.5, 0.5]);
        let x = [0.3, -0.7, 0.2];
        assert_eq!(inverse_filter(&x, &[0.0, 0.0], &[0.4, 0.1]).unwrap(), x.to_vec());
        assert!(inverse_filter(&x, &[0.5], &[]).is_err());
    }

    #[test]
    fn synthesis_filter_examples() {
        let y = synthesis_filter(&[1.0, 0.5, 0.5], &[0.5], &[0.0]).unwrap();
        assert_eq!(y, vec![1.0, 1.0, 1.0]);
        assert_eq!(synthesis_filter(&[0.0; 4], &[0.3, 0.2], &[0.0, 0.0]).unwrap(), vec![0.0; 4]);
        let y = synthesis_filter(&[1.0, 0.0, 0.0, 0.0], &[0.9], &[0.0]).unwrap();
        for (n, v) in y.iter().enumerate() {
            assert!((v - 0.9f64.powi(n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn history_crosses_frame_boundary() {
        // previous frame ended with 2.0; a = [1] predicts x[n] = x[n-1]
        let e = inverse_filter(&[2.0, 3.0], &[1.0], &[2.0]).unwrap();
        assert_eq!(e, vec![0.0, 1.0]);
        let y = synthesis_filter(&e, &[1.0], &[2.0]).unwrap();
        assert_eq!(y, vec![2.0, 3.0]);
    }

    #[test]
    fn silence_analyzes_to_zero() {
        let (track, residual) = analyze(&vec![0.0; 640], 16, 320).unwrap();
        assert_eq!(track.frames.len(), 2);
        assert!(track.frames.iter().all(|f| f.coeffs.iter().all(|&a| a == 0.0)));
        assert!(residual.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn synthesize_checks_length() {
        let (track, residual) = analyze(&[0.1, 0.2, -0.1, 0.05], 2, 4).unwrap();
        assert!(synthesize(&residual[..3], &track).is_err());
        let zeros = synthesize(&[0.0; 4], &track).unwrap();
        assert_eq!(zeros, vec![0.0; 4]);
    }

    #[test]
    fn zero_track_is_identity() {
        let track = LpcTrack {
            frames: (0..2)
                .map(|i| LpcFrame { coeffs: vec![0.0; 3], gain_error: 0.0, frame_index: i })
                .collect(),
            order: 3,
            frame_len: 4,
        };
        let r = [0.5, -0.25, 0.125, 0.0, 1.0, 2.0, -3.0, 0.5];
        assert_eq!(synthesize(&r, &track).unwrap(), r.to_vec());
    }

    #[test]
    fn cross_synthesis_of_zeros_is_zero() {
        let x: Vec<f64> = (0..640).map(|n| (n as f64 * 0.1).sin() * 0.3).collect();
        let (track, _) = analyze(&x, 16, 320).unwrap();
        let out = cross_synthesize_f64(&vec![0.0; 640], &track, None).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
        assert!(cross_synthesize_f64(&vec![0.0; 100], &track, None).is_err());
    }
}
