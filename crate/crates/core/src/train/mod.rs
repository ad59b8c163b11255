//! Adversarial training: losses, AMSGrad, batching, the synthetic corpus,
//! checkpoints, the alternating update loop and ablation runs.

mod ablation;
mod checkpoint;
mod config;
mod data;
mod loss;
mod optim;
mod synth;
mod trainer;

pub use ablation::{ablation_summary, run_ablations, AblationRun};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, NamedTensor, Provenance, MAGIC, VERSION};
pub use config::{CorpusSpec, TargetMode, TrainConfig};
pub use data::{make_batches, Batch, BatchSampler, Clip, Corpus};
pub use loss::{generator_loss, generator_loss_graph, hinge_d_loss, hinge_d_loss_graph};
pub use optim::{AdamState, Moments};
pub use synth::{gen_synthetic_corpus, synthetic_clip, synthetic_clips};
pub use trainer::{train_loop, StepStats, TrainOutcome, Trainer, LOSS_HEADER};
