use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, NamedTensor, Provenance};
use super::config::{TargetMode, TrainConfig};
use super::data::{Batch, BatchSampler, Corpus};
use super::loss::{generator_loss_graph, hinge_d_loss_graph};
use super::optim::AdamState;
use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{CheckpointError, Error, Result};
use crate::model::{Discriminator, Generator};
use crate::nn::ParamStore;
use crate::rng::derive_seed;

const INIT_STREAM: u64 = 0x1417;
const NOISE_STREAM: u64 = 0x2015;
const BATCH_STREAM: u64 = 0xda7a;

pub const LOSS_HEADER: &str = "step,d_loss,g_loss,l1,adv";

/// Losses of one alternating update, averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// 1-based index of the completed step.
    pub step: u64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub l1: f64,
    /// Adversarial generator term, `-D(G(z, r), r)`.
    pub adv: f64,
}

impl StepStats {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.8e},{:.8e},{:.8e},{:.8e}",
            self.step, self.d_loss, self.g_loss, self.l1, self.adv
        )
    }

    pub fn is_finite(&self) -> bool {
        [self.d_loss, self.g_loss, self.l1, self.adv].iter().all(|v| v.is_finite())
    }
}

/// Generator, discriminator and their optimizers at a given step.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub generator: Generator<f32>,
    pub discriminator: Discriminator<f32>,
    pub opt_g: AdamState<f32>,
    pub opt_d: AdamState<f32>,
    pub step: u64,
    pub provenance: Provenance,
}

fn non_finite(g: &Graph<f32>, what: &str, step: u64, v: f64) -> Error {
    let first = g.first_non_finite().unwrap_or_else(|| "no tape value".into());
    Error::NonFinite(format!("{what} = {v} at step {step}; first non-finite tensor: {first}"))
}

fn input(g: &mut Graph<f32>, x: &[f32]) -> Result<Var> {
    Ok(g.input(Tensor::from_signal(x)?, false))
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let generator = Generator::new(config.arch.clone(), config.gate, derive_seed(config.seed, &[INIT_STREAM, 0]))?;
        let discriminator = Discriminator::new(config.arch.clone(), derive_seed(config.seed, &[INIT_STREAM, 1]))?;
        let opt_g = AdamState::for_store(&generator.store, config.lr_g, config.betas, config.eps);
        let opt_d = AdamState::for_store(&discriminator.store, config.lr_d, config.betas, config.eps);
        Ok(Self {
            provenance: Provenance::of(&config),
            config,
            generator,
            discriminator,
            opt_g,
            opt_d,
            step: 0,
        })
    }

    fn noise_seed(&self, phase: u64, element: usize) -> u64 {
        derive_seed(self.config.seed, &[NOISE_STREAM, self.step, phase, element as u64])
    }

    /// One discriminator update followed by one generator update.
    pub fn train_step(&mut self, batch: &Batch) -> Result<StepStats> {
        let seg = self.config.segment_len;
        let n = batch.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if batch.speech.iter().chain(&batch.residual).any(|s| s.len() != seg) {
            return Err(Error::LengthMismatch(format!("every batch segment must hold {seg} samples")));
        }
        let inv = 1.0 / n as f64;
        let gamma = self.config.gamma;
        let target_of = |b: usize| match self.config.target {
            TargetMode::Speech => &batch.speech[b],
            TargetMode::Residual => &batch.residual[b],
        };

        // discriminator phase, generator frozen
        self.discriminator.store.zero_grad();
        self.discriminator.store.power_iterate();
        let mut d_loss = 0.0;
        for b in 0..n {
            let noise = self.generator.draw_noise(seg, self.noise_seed(0, b));
            let fake = self.generator.generate(&batch.residual[b], &noise)?;
            let mut g = Graph::new();
            let real = input(&mut g, target_of(b))?;
            let fake = input(&mut g, &fake)?;
            let cond = input(&mut g, &batch.residual[b])?;
            let d_real = self.discriminator.forward(&mut g, real, cond, true, None)?;
            let d_fake = self.discriminator.forward(&mut g, fake, cond, true, None)?;
            let hinge = hinge_d_loss_graph(&mut g, d_real, d_fake)?;
            let h = g.value(hinge).item() as f64;
            if !h.is_finite() {
                return Err(non_finite(&g, "d_loss", self.step, h));
            }
            let loss = g.scale(hinge, inv)?;
            self.discriminator.store.accumulate(&g.backward(loss)?);
            d_loss += h * inv;
        }
        self.opt_d.step(&mut self.discriminator.store)?;

        // generator phase, discriminator frozen
        self.generator.store.zero_grad();
        self.generator.store.power_iterate();
        let (mut g_loss, mut l1_sum, mut adv) = (0.0, 0.0, 0.0);
        for b in 0..n {
            let noise = self.generator.draw_noise(seg, self.noise_seed(1, b));
            let mut g = Graph::new();
            let cond = input(&mut g, &batch.residual[b])?;
            let fake = self.generator.forward(&mut g, cond, &noise, true, None)?;
            let target = input(&mut g, target_of(b))?;
            let diff = g.sub(fake, target)?;
            let l1 = g.abs_mean(diff)?;
            let d_fake = self.discriminator.forward(&mut g, fake, cond, false, None)?;
            let total = generator_loss_graph(&mut g, l1, d_fake, gamma)?;
            let gl = g.value(total).item() as f64;
            if !gl.is_finite() {
                return Err(non_finite(&g, "g_loss", self.step, gl));
            }
            let loss = g.scale(total, inv)?;
            self.generator.store.accumulate(&g.backward(loss)?);
            g_loss += gl * inv;
            l1_sum += g.value(l1).item() as f64 * inv;
            adv -= g.value(d_fake).item() as f64 * inv;
        }
        self.opt_g.step(&mut self.generator.store)?;

        self.step += 1;
        let stats = StepStats {
            step: self.step,
            d_loss,
            g_loss,
            l1: l1_sum,
            adv,
        };
        if !stats.is_finite() {
            return Err(Error::NonFinite(format!("step {} losses {stats:?}", self.step)));
        }
        Ok(stats)
    }

    /// Snapshot of parameters, power-iteration vectors and optimizer moments.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut tensors = Vec::new();
        let stores = [
            (&self.generator.store, &self.opt_g),
            (&self.discriminator.store, &self.opt_d),
        ];
        for (store, _) in stores {
            for p in store.iter() {
                tensors.push(NamedTensor::new(&p.name, p.dims.clone(), p.value.data().to_vec()));
                if let Some(s) = &p.spectral {
                    tensors.push(NamedTensor::new(format!("{}.sn_u", p.name), vec![s.u.len()], s.u.clone()));
                    tensors.push(NamedTensor::new(format!("{}.sn_v", p.name), vec![s.v.len()], s.v.clone()));
                }
            }
        }
        for (store, opt) in stores {
            for (p, mo) in store.iter().zip(&opt.moments) {
                for (suffix, data) in [(".m", &mo.m), (".v", &mo.v), (".vmax", &mo.vmax)] {
                    tensors.push(NamedTensor::new(format!("{}{suffix}", p.name), p.dims.clone(), data.clone()));
                }
            }
        }
        Checkpoint {
            config: self.config.clone(),
            provenance: self.provenance.clone(),
            tensors,
            step: self.step,
        }
    }

    /// Rebuilds the trainer stored in a checkpoint.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        Self::from_checkpoint_with(ckpt, ckpt.config.clone())
    }

    /// Loads checkpoint state into a run with `config`. The architectures
    /// must agree tensor by tensor; other settings (gate kind, learning
    /// rates, ...) may differ and are noted in the provenance.
    pub fn from_checkpoint_with(ckpt: &Checkpoint, config: TrainConfig) -> Result<Self> {
        let mut t = Self::new(config)?;
        restore_store(&mut t.generator.store, &mut t.opt_g, ckpt)?;
        restore_store(&mut t.discriminator.store, &mut t.opt_d, ckpt)?;
        t.step = ckpt.step;
        t.opt_g.t = ckpt.step;
        t.opt_d.t = ckpt.step;
        let p = &ckpt.provenance;
        if p.gate != t.config.gate || p.target != t.config.target || p.seed != t.config.seed {
            let note = format!("{} (gate {}, target {}, seed {}, step {})", p.producer, p.gate, p.target, p.seed, ckpt.step);
            log::info!("continuing from checkpoint trained with different settings: {note}");
            t.provenance.resumed_from = Some(note);
        } else {
            t.provenance.resumed_from = p.resumed_from.clone();
        }
        Ok(t)
    }
}

fn fetch<'a>(ckpt: &'a Checkpoint, name: &str, dims: &[usize]) -> Result<&'a [f32]> {
    let t = ckpt
        .tensor(name)
        .ok_or_else(|| CheckpointError::MissingTensor(name.to_string()))?;
    if t.dims != dims {
        return Err(CheckpointError::ShapeMismatch {
            name: name.to_string(),
            found: t.dims.clone(),
            expected: dims.to_vec(),
        }
        .into());
    }
    Ok(&t.values)
}

fn restore_store(store: &mut ParamStore<f32>, opt: &mut AdamState<f32>, ckpt: &Checkpoint) -> Result<()> {
    for (p, mo) in store.iter_mut().zip(&mut opt.moments) {
        let values = fetch(ckpt, &p.name, &p.dims)?;
        p.value.data_mut().copy_from_slice(values);
        if let Some(s) = &mut p.spectral {
            let (nu, nv) = (s.u.len(), s.v.len());
            s.u.copy_from_slice(fetch(ckpt, &format!("{}.sn_u", p.name), &[nu])?);
            s.v.copy_from_slice(fetch(ckpt, &format!("{}.sn_v", p.name), &[nv])?);
        }
        mo.m.copy_from_slice(fetch(ckpt, &format!("{}.m", p.name), &p.dims)?);
        mo.v.copy_from_slice(fetch(ckpt, &format!("{}.v", p.name), &p.dims)?);
        mo.vmax.copy_from_slice(fetch(ckpt, &format!("{}.vmax", p.name), &p.dims)?);
    }
    Ok(())
}

/// Artifacts of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trainer: Trainer,
    pub log: Vec<StepStats>,
    pub loss_csv: PathBuf,
    pub final_checkpoint: PathBuf,
}

fn batch_seed(config: &TrainConfig) -> u64 {
    derive_seed(config.seed, &[BATCH_STREAM])
}

/// Rows of an existing loss log up to and including `step`.
fn kept_rows(path: &Path, step: u64) -> Result<Vec<String>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    Ok(std::fs::read_to_string(path)?
        .lines()
        .skip(1)
        .filter(|l| {
            l.split(',')
                .next()
                .and_then(|s| s.parse::<u64>().ok())
                .is_some_and(|s| s <= step)
        })
        .map(str::to_string)
        .collect())
}

/// Runs `config.steps` alternating updates, writing `loss.csv`,
/// periodic `step_N.ckpt` and `final.ckpt` into `out_dir`. With `resume`,
/// continues from that checkpoint; the continuation is bit-identical to
/// an uninterrupted run.
pub fn train_loop(config: &TrainConfig, out_dir: &Path, resume: Option<&Path>) -> Result<TrainOutcome> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let corpus = Corpus::from_config(config)?;
    if corpus.is_empty() {
        return Err(Error::Config("corpus is empty".into()));
    }
    let shortest = corpus.shortest().expect("non-empty corpus");
    if config.segment_len > shortest {
        return Err(Error::Config(format!(
            "segment of {} samples is longer than the shortest clip ({shortest} samples)",
            config.segment_len
        )));
    }
    let sampler = BatchSampler::new(
        &corpus,
        config.segment_len,
        config.batch_size,
        config.frame_len(),
        batch_seed(config),
    )?;

    let mut trainer = match resume {
        Some(p) => Trainer::from_checkpoint_with(&load_checkpoint(p)?, config.clone())?,
        None => Trainer::new(config.clone())?,
    };
    let loss_csv = out_dir.join("loss.csv");
    let mut csv = String::from(LOSS_HEADER);
    csv.push('\n');
    if resume.is_some() {
        for row in kept_rows(&loss_csv, trainer.step)? {
            csv.push_str(&row);
            csv.push('\n');
        }
    }

    let mut log = Vec::new();
    while trainer.step < config.steps {
        let batch = sampler.batch_at(trainer.step);
        let stats = trainer.train_step(&batch)?;
        writeln!(csv, "{}", stats.csv_row()).expect("write to string");
        log::debug!("{}", stats.csv_row());
        log.push(stats);
        if config.checkpoint_every > 0 && trainer.step % config.checkpoint_every == 0 {
            save_checkpoint(out_dir.join(format!("step_{}.ckpt", trainer.step)), &trainer.to_checkpoint())?;
        }
    }
    std::fs::write(&loss_csv, &csv)?;
    let final_checkpoint = out_dir.join("final.ckpt");
    save_checkpoint(&final_checkpoint, &trainer.to_checkpoint())?;
    Ok(TrainOutcome {
        trainer,
        log,
        loss_csv,
        final_checkpoint,
    })
}
