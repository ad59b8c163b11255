//! RIFF/WAVE PCM16 mono 16 kHz reading and writing.
//!
//! Reading skips unknown chunks; writing always emits the canonical 44-byte
//! header. Samples map to reals as `s / 32768`; writing clamps to
//! `[-1, 1 - 1/32768]` and rounds half away from zero.

use std::fs;
use std::path::Path;

use crate::dsp::{AudioSignal, Role, SAMPLE_RATE};
use crate::error::{Error, Result, WavError};

const PCM_FORMAT: u16 = 1;
const EXTENSIBLE_FORMAT: u16 = 0xFFFE;

/// Format fields of a WAV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavSpec {
    pub sample_rate: u32,
    pub channels: u16,
    pub bits_per_sample: u16,
    /// Number of sample frames in the data chunk.
    pub data_length: usize,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a WAV byte buffer into its spec and raw PCM16 samples.
pub fn decode_wav(bytes: &[u8]) -> Result<(WavSpec, Vec<i16>)> {
    let malformed = |m: &str| Error::from(WavError::Malformed(m.to_string()));
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE signature"));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| malformed("chunk runs past end of file"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed("fmt chunk too short"));
                }
                let mut tag = u16_at(body, 0);
                if tag == EXTENSIBLE_FORMAT && body.len() >= 26 {
                    tag = u16_at(body, 24);
                }
                fmt = Some((tag, u16_at(body, 2), u32_at(body, 4), u16_at(body, 14)));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }
    let (tag, channels, rate, bits) = fmt.ok_or_else(|| malformed("no fmt chunk"))?;
    if tag != PCM_FORMAT {
        return Err(WavError::NotPcm(tag).into());
    }
    if rate != SAMPLE_RATE {
        return Err(WavError::SampleRate(rate).into());
    }
    if channels != 1 {
        return Err(WavError::Channels(channels).into());
    }
    if bits != 16 {
        return Err(WavError::BitDepth(bits).into());
    }
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(malformed("odd-sized PCM16 data chunk"));
    }
    let samples: Vec<i16> = data.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
    Ok((
        WavSpec {
            sample_rate: rate,
            channels,
            bits_per_sample: bits,
            data_length: samples.len(),
        },
        samples,
    ))
}

/// Canonical 44-byte-header PCM16 mono 16 kHz file.
pub fn encode_wav(samples: &[i16]) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(SAMPLE_RATE * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn pcm_to_real(s: i16) -> f32 {
    s as f32 / 32768.0
}

pub fn real_to_pcm(x: f32) -> i16 {
    let scaled = (x as f64).clamp(-1.0, 1.0 - 1.0 / 32768.0) * 32768.0;
    // f64::round is half-away-from-zero
    scaled.round() as i16
}

/// Snaps samples onto the PCM16 grid (what a write/read round trip yields).
pub fn quantize(samples: &[f32]) -> Vec<f32> {
    samples.iter().map(|&x| pcm_to_real(real_to_pcm(x))).collect()
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let bytes = fs::read(path)?;
    let (_, pcm) = decode_wav(&bytes)?;
    AudioSignal::new(pcm.into_iter().map(pcm_to_real).collect(), SAMPLE_RATE, Role::Speech)
}

pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    write_samples(path, signal.samples())
}

pub fn write_samples(path: impl AsRef<Path>, samples: &[f32]) -> Result<()> {
    let pcm: Vec<i16> = samples.iter().map(|&x| real_to_pcm(x)).collect();
    fs::write(path, encode_wav(&pcm))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_fmt(rate: u32, channels: u16, bits: u16, tag: u16) -> Vec<u8> {
        let mut b = encode_wav(&[0, 1, 2]);
        b[20..22].copy_from_slice(&tag.to_le_bytes());
        b[22..24].copy_from_slice(&channels.to_le_bytes());
        b[24..28].copy_from_slice(&rate.to_le_bytes());
        b[34..36].copy_from_slice(&bits.to_le_bytes());
        b
    }

    #[test]
    fn scaling_rule() {
        let bytes = encode_wav(&[0, 16384, -32768]);
        let (spec, pcm) = decode_wav(&bytes).unwrap();
        assert_eq!(spec.data_length, 3);
        let v: Vec<f32> = pcm.into_iter().map(pcm_to_real).collect();
        assert_eq!(v, vec![0.0, 0.5, -1.0]);
    }

    #[test]
    fn write_conversion() {
        assert_eq!(real_to_pcm(0.0), 0);
        assert_eq!(real_to_pcm(0.5), 16384);
        assert_eq!(real_to_pcm(1.5), 32767);
        assert_eq!(real_to_pcm(-1.5), -32768);
        // exactly half a step rounds away from zero
        assert_eq!(real_to_pcm(0.5 / 32768.0), 1);
        assert_eq!(real_to_pcm(-0.5 / 32768.0), -1);
    }

    #[test]
    fn header_constants() {
        let b = encode_wav(&[1, 2]);
        assert_eq!(b.len(), 48);
        assert_eq!(&b[0..4], b"RIFF");
        assert_eq!(&b[8..12], b"WAVE");
        assert_eq!(&b[12..16], b"fmt ");
        assert_eq!(&b[36..40], b"data");
    }

    #[test]
    fn format_errors_are_distinct() {
        let e = decode_wav(&with_fmt(48_000, 1, 16, 1)).unwrap_err();
        assert!(e.to_string().contains("expected 16000 Hz"), "{e}");
        assert!(matches!(decode_wav(&with_fmt(16_000, 2, 16, 1)), Err(Error::Wav(WavError::Channels(2)))));
        assert!(matches!(decode_wav(&with_fmt(16_000, 1, 24, 1)), Err(Error::Wav(WavError::BitDepth(24)))));
        assert!(matches!(decode_wav(&with_fmt(16_000, 1, 16, 3)), Err(Error::Wav(WavError::NotPcm(3)))));
        assert!(matches!(decode_wav(b"RIFX0000WAVE"), Err(Error::Wav(WavError::Malformed(_)))));
        let mut truncated = encode_wav(&[1, 2, 3]);
        truncated.truncate(46);
        assert!(matches!(decode_wav(&truncated), Err(Error::Wav(WavError::Malformed(_)))));
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let canon = encode_wav(&[7, -7, 100]);
        let mut b = canon[..36].to_vec();
        b.extend_from_slice(b"LIST");
        b.extend_from_slice(&3u32.to_le_bytes());
        b.extend_from_slice(&[1, 2, 3, 0]); // odd chunk plus pad byte
        b.extend_from_slice(&canon[36..]);
        let riff_len = (b.len() - 8) as u32;
        b[4..8].copy_from_slice(&riff_len.to_le_bytes());
        let (_, pcm) = decode_wav(&b).unwrap();
        assert_eq!(pcm, vec![7, -7, 100]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x = quantize(&[0.1, -0.25, 0.999, -1.0, 0.0]);
        write_samples(&p, &x).unwrap();
        let y = read_wav(&p).unwrap();
        assert_eq!(y.samples(), &x[..]);
    }
}
