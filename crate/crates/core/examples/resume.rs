//! Checkpoint and resume: a run split at step 3 matches an uninterrupted one.
//!
//! cargo run --release --example resume

use abas::model::ArchConfig;
use abas::train::{train_loop, CorpusSpec, TrainConfig};

fn main() -> abas::Result<()> {
    let dir = std::env::temp_dir().join("abas_resume_example");
    let config = TrainConfig {
        arch: ArchConfig::tiny(),
        batch_size: 2,
        segment_len: 640,
        steps: 6,
        checkpoint_every: 3,
        corpus: CorpusSpec::Synthetic {
            clips: 2,
            clip_len: 3200,
            seed: 0,
        },
        ..TrainConfig::default()
    };
    let full = train_loop(&config, &dir.join("full"), None)?;
    let half = TrainConfig { steps: 3, ..config.clone() };
    train_loop(&half, &dir.join("split"), None)?;
    let resumed = train_loop(&config, &dir.join("split"), Some(&dir.join("split/step_3.ckpt")))?;
    let same = full.trainer.to_checkpoint().tensors == resumed.trainer.to_checkpoint().tensors;
    println!("identical parameters and moments after resume: {same}");
    println!(
        "identical loss logs: {}",
        std::fs::read(&full.loss_csv)? == std::fs::read(&resumed.loss_csv)?
    );
    Ok(())
}
