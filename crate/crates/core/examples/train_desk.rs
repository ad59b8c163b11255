//! A short single-core training run on the synthetic corpus.
//!
//! cargo run --release --example train_desk -- [steps] [out_dir]

use std::path::PathBuf;

use abas::train::{train_loop, CorpusSpec, TrainConfig, LOSS_HEADER};

fn main() -> abas::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let steps = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/desk".into()));
    let config = TrainConfig {
        steps,
        batch_size: 2,
        checkpoint_every: 10,
        corpus: CorpusSpec::Synthetic {
            clips: 8,
            clip_len: 16000,
            seed: 0,
        },
        ..TrainConfig::desk()
    };
    let outcome = train_loop(&config, &out, None)?;
    println!("{LOSS_HEADER}");
    for s in &outcome.log {
        println!("{}", s.csv_row());
    }
    println!("checkpoint: {}", outcome.final_checkpoint.display());
    Ok(())
}
