//! Objective quality measures: segmental SNR, mean absolute error and
//! log-spectral distance, plus corpus-level reports.

use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Segmental SNR conventions.
#[derive(Debug, Clone, Copy)]
pub struct SsnrParams {
    pub frame_len: usize,
    pub min_db: f64,
    pub max_db: f64,
    /// Frames with reference energy at or below this are skipped.
    pub silence_energy: f64,
}

impl Default for SsnrParams {
    fn default() -> Self {
        Self {
            frame_len: 320,
            min_db: -10.0,
            max_db: 35.0,
            silence_energy: 1e-8,
        }
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(format!("signals have {a} and {b} samples")));
    }
    Ok(())
}

/// Mean over active frames of the clamped per-frame SNR of `degraded`
/// against `reference`, in dB.
pub fn ssnr(reference: &[f32], degraded: &[f32], params: SsnrParams) -> Result<f64> {
    check_lengths(reference.len(), degraded.len())?;
    let mut total = 0.0;
    let mut frames = 0usize;
    for (x, y) in reference.chunks(params.frame_len).zip(degraded.chunks(params.frame_len)) {
        let sig: f64 = x.iter().map(|&v| (v as f64).powi(2)).sum();
        if sig <= params.silence_energy {
            continue;
        }
        let noise: f64 = x.iter().zip(y).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum();
        let db = if noise == 0.0 {
            params.max_db
        } else {
            (10.0 * (sig / noise).log10()).clamp(params.min_db, params.max_db)
        };
        total += db;
        frames += 1;
    }
    if frames == 0 {
        return Err(Error::NoActiveFrames);
    }
    Ok(total / frames as f64)
}

pub fn l1_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    check_lengths(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).abs()).sum::<f64>() / a.len() as f64)
}

/// Log-spectral distance settings.
#[derive(Debug, Clone, Copy)]
pub struct LsdParams {
    pub fft_len: usize,
    pub hop: usize,
    pub floor: f64,
}

impl Default for LsdParams {
    fn default() -> Self {
        Self {
            fft_len: 512,
            hop: 160,
            floor: 1e-8,
        }
    }
}

/// Short-time magnitude spectra with a periodic Hann window. Signals
/// shorter than one frame are zero-padded to a single frame.
pub struct Stft {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    hop: usize,
}

impl Stft {
    pub fn new(fft_len: usize, hop: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        let window = (0..fft_len)
            .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / fft_len as f64).cos())
            .collect();
        Self { fft, window, hop }
    }

    pub fn frame_count(&self, len: usize) -> usize {
        let n = self.window.len();
        if len <= n {
            1
        } else {
            1 + (len - n).div_ceil(self.hop)
        }
    }

    /// Magnitudes of bins `0..=fft_len/2` for every frame.
    pub fn magnitudes(&self, x: &[f32]) -> Vec<Vec<f64>> {
        let n = self.window.len();
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        (0..self.frame_count(x.len()))
            .map(|f| {
                let start = f * self.hop;
                for (i, b) in buf.iter_mut().enumerate() {
                    let v = x.get(start + i).copied().unwrap_or(0.0) as f64;
                    *b = Complex::new(v * self.window[i], 0.0);
                }
                self.fft.process(&mut buf);
                buf[..=n / 2].iter().map(|c| c.norm()).collect()
            })
            .collect()
    }
}

/// RMS over frames of the RMS over bins of `20 log10(|A| / |B|)`.
pub fn log_spectral_distance(a: &[f32], b: &[f32], params: LsdParams) -> Result<f64> {
    check_lengths(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    let stft = Stft::new(params.fft_len, params.hop);
    let (sa, sb) = (stft.magnitudes(a), stft.magnitudes(b));
    let mut acc = 0.0;
    for (fa, fb) in sa.iter().zip(&sb) {
        let ms: f64 = fa
            .iter()
            .zip(fb)
            .map(|(&x, &y)| {
                let d = 20.0 * (x.max(params.floor).log10() - y.max(params.floor).log10());
                d * d
            })
            .sum::<f64>()
            / fa.len() as f64;
        acc += ms;
    }
    Ok((acc / sa.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub file: String,
    pub ssnr_db: f64,
    pub l1: f64,
    pub lsd_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub mean: MetricRow,
}

impl MetricReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("file,ssnr_db,l1,lsd_db\n");
        for r in self.rows.iter().chain(std::iter::once(&self.mean)) {
            writeln!(s, "{},{:.6},{:.9},{:.6}", r.file, r.ssnr_db, r.l1, r.lsd_db).expect("write to string");
        }
        s
    }
}

/// Scores every `(name, reference, degraded)` triple and the corpus mean.
pub fn evaluate_corpus<'a, I>(pairs: I) -> Result<MetricReport>
where
    I: IntoIterator<Item = (&'a str, &'a [f32], &'a [f32])>,
{
    let rows = pairs
        .into_iter()
        .map(|(name, reference, degraded)| {
            Ok(MetricRow {
                file: name.to_string(),
                ssnr_db: ssnr(reference, degraded, SsnrParams::default())?,
                l1: l1_distance(reference, degraded)?,
                lsd_db: log_spectral_distance(reference, degraded, LsdParams::default())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = rows.len() as f64;
    let mean = MetricRow {
        file: "MEAN".to_string(),
        ssnr_db: rows.iter().map(|r| r.ssnr_db).sum::<f64>() / n,
        l1: rows.iter().map(|r| r.l1).sum::<f64>() / n,
        lsd_db: rows.iter().map(|r| r.lsd_db).sum::<f64>() / n,
    };
    Ok(MetricReport { rows, mean })
}
