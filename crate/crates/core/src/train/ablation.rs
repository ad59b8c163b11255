//! Paired runs for the gating and target-mode comparisons.
//!
//! Three runs share one seed and corpus: softmax/speech (the reference),
//! sigmoid/speech and softmax/residual. The first two form the gating
//! pair, the first and third the target pair. Outcomes are reported, not
//! judged.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{TargetMode, TrainConfig};
use super::trainer::{train_loop, StepStats};
use crate::error::{Error, Result};
use crate::nn::GateKind;

#[derive(Debug, Clone)]
pub struct AblationRun {
    pub name: String,
    pub gate: GateKind,
    pub target: TargetMode,
    pub log: Vec<StepStats>,
    pub loss_csv: PathBuf,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl AblationRun {
    fn window(&self) -> usize {
        (self.log.len() / 10).max(1)
    }

    /// Mean L1 over the last tenth of the run divided by the mean over the
    /// first tenth. Below 1 means the loss fell.
    pub fn l1_decay(&self) -> f64 {
        let w = self.window();
        let head = mean(self.log.iter().take(w).map(|s| s.l1));
        let tail = mean(self.log.iter().rev().take(w).map(|s| s.l1));
        tail / head
    }

    /// Mean discriminator loss over the last tenth of the run.
    pub fn final_d_loss(&self) -> f64 {
        mean(self.log.iter().rev().take(self.window()).map(|s| s.d_loss))
    }

    pub fn all_finite(&self) -> bool {
        self.log.iter().all(StepStats::is_finite)
    }
}

/// Trains the three configurations into `out_dir/<name>/`.
pub fn run_ablations(base: &TrainConfig, out_dir: &Path) -> Result<Vec<AblationRun>> {
    let plan = [
        (GateKind::SoftmaxChannel, TargetMode::Speech),
        (GateKind::Sigmoid, TargetMode::Speech),
        (GateKind::SoftmaxChannel, TargetMode::Residual),
    ];
    plan.iter()
        .map(|&(gate, target)| {
            let name = format!("{gate}_{target}");
            let config = TrainConfig {
                gate,
                target,
                checkpoint_every: 0,
                ..base.clone()
            };
            log::info!("ablation run {name}: {} steps", config.steps);
            let outcome = train_loop(&config, &out_dir.join(&name), None)?;
            Ok(AblationRun {
                name,
                gate,
                target,
                log: outcome.log,
                loss_csv: outcome.loss_csv,
            })
        })
        .collect()
}

fn find<'a>(runs: &'a [AblationRun], gate: GateKind, target: TargetMode) -> Result<&'a AblationRun> {
    runs.iter()
        .find(|r| r.gate == gate && r.target == target)
        .ok_or_else(|| Error::invalid(format!("no {gate}/{target} run")))
}

/// Human-readable comparison of both pairs.
pub fn ablation_summary(runs: &[AblationRun]) -> Result<String> {
    let soft = find(runs, GateKind::SoftmaxChannel, TargetMode::Speech)?;
    let sig = find(runs, GateKind::Sigmoid, TargetMode::Speech)?;
    let res = find(runs, GateKind::SoftmaxChannel, TargetMode::Residual)?;
    let mut s = String::new();
    for r in [soft, sig, res] {
        writeln!(
            s,
            "{:<18} steps {:>4}  l1 tail/head {:.4}  final d_loss {:.4}",
            r.name,
            r.log.len(),
            r.l1_decay(),
            r.final_d_loss()
        )
        .expect("write to string");
    }
    let faster = if soft.l1_decay() < sig.l1_decay() { "softmax" } else { "sigmoid" };
    writeln!(s, "gating: faster L1 decay with {faster}").expect("write to string");
    writeln!(
        s,
        "target: final d_loss speech {:.4} vs residual {:.4}",
        soft.final_d_loss(),
        res.final_d_loss()
    )
    .expect("write to string");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArchConfig;
    use crate::train::CorpusSpec;

    #[test]
    fn three_runs_and_summary() {
        let base = TrainConfig {
            arch: ArchConfig::tiny(),
            batch_size: 1,
            segment_len: 640,
            steps: 4,
            corpus: CorpusSpec::Synthetic {
                clips: 2,
                clip_len: 960,
                seed: 1,
            },
            ..TrainConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let runs = run_ablations(&base, dir.path()).unwrap();
        assert_eq!(runs.len(), 3);
        assert!(runs.iter().all(|r| r.log.len() == 4 && r.all_finite() && r.loss_csv.exists()));
        let text = ablation_summary(&runs).unwrap();
        assert!(text.contains("gating: faster L1 decay with"));
        assert!(text.contains("sigmoid_speech"));
    }
}
