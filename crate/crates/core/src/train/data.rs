use std::path::Path;

use rand::seq::SliceRandom;
use rand::RngExt;

use super::config::{CorpusSpec, TrainConfig};
use super::synth::synthetic_clips;
use crate::dsp;
use crate::error::{Error, Result};
use crate::rng::rng_for;
use crate::wavio;

const PERMUTATION_STREAM: u64 = 0xba7c;
const CROP_STREAM: u64 = 0xc409;

/// A clip with its LPC residual computed once over the whole clip.
#[derive(Debug, Clone)]
pub struct Clip {
    pub name: String,
    pub speech: Vec<f32>,
    pub residual: Vec<f32>,
}

impl Clip {
    pub fn analyze(name: impl Into<String>, speech: Vec<f32>, order: usize, frame_len: usize) -> Result<Self> {
        let x: Vec<f64> = speech.iter().map(|&v| v as f64).collect();
        let (_, e) = dsp::analyze(&x, order, frame_len)?;
        let residual = e[..speech.len()].iter().map(|&v| v as f32).collect();
        Ok(Self {
            name: name.into(),
            speech,
            residual,
        })
    }

    pub fn len(&self) -> usize {
        self.speech.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speech.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub clips: Vec<Clip>,
}

impl Corpus {
    pub fn from_clips(clips: Vec<(String, Vec<f32>)>, order: usize, frame_len: usize) -> Result<Self> {
        let clips = clips
            .into_iter()
            .map(|(n, s)| Clip::analyze(n, s, order, frame_len))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { clips })
    }

    /// All `.wav` files of a directory, in name order.
    pub fn load_dir(dir: &Path, order: usize, frame_len: usize) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        paths.sort();
        let clips = paths
            .iter()
            .map(|p| {
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                Ok((name, wavio::read_wav(p)?.into_samples()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_clips(clips, order, frame_len)
    }

    pub fn from_config(config: &TrainConfig) -> Result<Self> {
        let (order, frame_len) = (config.lpc_order, config.frame_len());
        match &config.corpus {
            CorpusSpec::Dir(dir) => Self::load_dir(dir, order, frame_len),
            CorpusSpec::Synthetic { clips, clip_len, seed } => Self::from_clips(
                synthetic_clips(*clips, *clip_len, *seed)
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| (format!("clip_{i:03}.wav"), c))
                    .collect(),
                order,
                frame_len,
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn shortest(&self) -> Option<usize> {
        self.clips.iter().map(Clip::len).min()
    }
}

/// Aligned speech and residual segments of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub speech: Vec<Vec<f32>>,
    pub residual: Vec<Vec<f32>>,
    /// `(clip index, crop offset)` per element.
    pub origin: Vec<(usize, usize)>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.speech.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speech.is_empty()
    }
}

/// Deterministic batch source. Sample `i` of the run belongs to epoch
/// `i / n_clips`; each epoch visits the usable clips in a seeded
/// permutation, and every crop starts on the analysis frame grid.
/// Batches are a pure function of `(seed, step)`.
#[derive(Debug, Clone)]
pub struct BatchSampler<'a> {
    corpus: &'a Corpus,
    usable: Vec<usize>,
    segment_len: usize,
    batch_size: usize,
    frame_len: usize,
    seed: u64,
}

impl<'a> BatchSampler<'a> {
    pub fn new(corpus: &'a Corpus, segment_len: usize, batch_size: usize, frame_len: usize, seed: u64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Config("corpus is empty".into()));
        }
        let mut usable = Vec::new();
        for (i, c) in corpus.clips.iter().enumerate() {
            if c.len() < segment_len {
                log::warn!("skipping {}: {} samples is shorter than the {segment_len}-sample segment", c.name, c.len());
            } else {
                usable.push(i);
            }
        }
        if usable.is_empty() {
            return Err(Error::Config(format!("no clip holds a {segment_len}-sample segment")));
        }
        Ok(Self {
            corpus,
            usable,
            segment_len,
            batch_size,
            frame_len,
            seed,
        })
    }

    pub fn usable_clips(&self) -> &[usize] {
        &self.usable
    }

    fn permutation(&self, epoch: u64) -> Vec<usize> {
        let mut p = self.usable.clone();
        p.shuffle(&mut rng_for(self.seed, &[PERMUTATION_STREAM, epoch]));
        p
    }

    pub fn batch_at(&self, step: u64) -> Batch {
        let n = self.usable.len() as u64;
        let mut batch = Batch {
            speech: Vec::with_capacity(self.batch_size),
            residual: Vec::with_capacity(self.batch_size),
            origin: Vec::with_capacity(self.batch_size),
        };
        let mut perm: Option<(u64, Vec<usize>)> = None;
        for b in 0..self.batch_size as u64 {
            let i = step * self.batch_size as u64 + b;
            let epoch = i / n;
            if perm.as_ref().is_none_or(|(e, _)| *e != epoch) {
                perm = Some((epoch, self.permutation(epoch)));
            }
            let clip_idx = perm.as_ref().expect("set above").1[(i % n) as usize];
            let clip = &self.corpus.clips[clip_idx];
            let slots = (clip.len() - self.segment_len) / self.frame_len;
            let offset = rng_for(self.seed, &[CROP_STREAM, i]).random_range(0..=slots) * self.frame_len;
            let range = offset..offset + self.segment_len;
            batch.speech.push(clip.speech[range.clone()].to_vec());
            batch.residual.push(clip.residual[range].to_vec());
            batch.origin.push((clip_idx, offset));
        }
        batch
    }
}

/// Endless stream of batches starting at step 0.
pub fn make_batches<'a>(
    corpus: &'a Corpus,
    segment_len: usize,
    batch_size: usize,
    frame_len: usize,
    seed: u64,
) -> Result<impl Iterator<Item = Batch> + 'a> {
    let sampler = BatchSampler::new(corpus, segment_len, batch_size, frame_len, seed)?;
    Ok((0u64..).map(move |s| sampler.batch_at(s)))
}
