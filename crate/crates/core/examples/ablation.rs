//! Gating and target-mode comparisons from one seed.
//!
//! cargo run --release --example ablation -- [steps] [out_dir]

use std::path::PathBuf;

use abas::train::{ablation_summary, run_ablations, CorpusSpec, TrainConfig};

fn main() -> abas::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let steps = args.next().and_then(|s| s.parse().ok()).unwrap_or(30);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/ablation".into()));
    let base = TrainConfig {
        steps,
        batch_size: 2,
        corpus: CorpusSpec::Synthetic {
            clips: 8,
            clip_len: 16000,
            seed: 0,
        },
        ..TrainConfig::desk()
    };
    let runs = run_ablations(&base, &out)?;
    print!("{}", ablation_summary(&runs)?);
    for r in &runs {
        println!("{}: {}", r.name, r.loss_csv.display());
    }
    Ok(())
}
