//! Command-line front end. Every subcommand prints its resolved settings
//! to stderr before working.
//!
//! Exit codes: 0 success, 1 verification or runtime failure, 2 usage or
//! configuration error, 3 I/O, WAV or checkpoint error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dsp::{self, AudioSignal};
use crate::error::{Error, Result};
use crate::metrics::{self, LsdParams, SsnrParams};
use crate::model::ArchConfig;
use crate::nn::GateKind;
use crate::train::{self, load_checkpoint, CorpusSpec, TargetMode, TrainConfig};
use crate::verify::{run_grad_suite, SuiteScope, TOLERANCE};
use crate::vocoder::Vocoder;
use crate::wavio;

#[derive(Debug, Parser)]
#[command(name = "abas", version, about = "Analysis-by-adversarial-synthesis speech vocoder")]
pub struct Cli {
    /// Worker cap. Every stage of this build runs on one thread.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic speech-like corpus of WAV files.
    GenCorpus(GenCorpusArgs),
    /// Train generator and discriminator; writes loss.csv and checkpoints.
    Train(TrainArgs),
    /// Analyze, regenerate and cross-synthesize a WAV file.
    Vocode(VocodeArgs),
    /// Filter the residual of one signal with the envelope of another.
    CrossSynth(CrossSynthArgs),
    /// LPC analysis: residual, resynthesis or coefficient table.
    Lpc(LpcArgs),
    /// Score degraded files against references paired by file name.
    Eval(EvalArgs),
    /// Finite-difference check of every differentiable op and layer.
    GradCheck(GradCheckArgs),
    /// Summarize a checkpoint file.
    InspectCheckpoint(InspectArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub clips: usize,
    /// Samples per clip.
    #[arg(long, default_value_t = 16000)]
    pub len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchPreset {
    Paper,
    Tiny,
}

/// Training settings. Flags override the JSON file, which overrides the
/// defaults.
#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// JSON file with any subset of the training config fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from the single-core preset (batch 4, segment 1600).
    #[arg(long, conflicts_with = "config")]
    pub desk: bool,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lr_d: Option<f64>,
    #[arg(long)]
    pub lr_g: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seg_len: Option<usize>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// softmax | sigmoid
    #[arg(long)]
    pub gate: Option<GateKind>,
    /// speech | residual
    #[arg(long)]
    pub target: Option<TargetMode>,
    /// Directory of 16 kHz mono PCM16 WAV files.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub arch: Option<ArchPreset>,
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    /// Continue from this checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None if self.desk => TrainConfig::desk(),
            None => TrainConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag.clone() { c.$field = v; })*
            };
        }
        set!(gamma => gamma, lr_d => lr_d, lr_g => lr_g, batch => batch_size, seg_len => segment_len,
             steps => steps, seed => seed, gate => gate, target => target, checkpoint_every => checkpoint_every);
        if let Some(dir) = &self.corpus {
            c.corpus = CorpusSpec::Dir(dir.clone());
        }
        if let Some(a) = self.arch {
            c.arch = match a {
                ArchPreset::Paper => ArchConfig::paper(),
                ArchPreset::Tiny => ArchConfig::tiny(),
            };
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct VocodeArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the raw generator output.
    #[arg(long)]
    pub skip_cross_synth: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossSynthArgs {
    /// Signal whose residual is kept.
    #[arg(long)]
    pub carrier: PathBuf,
    /// Signal whose spectral envelope is imposed.
    #[arg(long)]
    pub envelope: PathBuf,
    #[arg(long, default_value_t = dsp::DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = 20)]
    pub frame_ms: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpcEmit {
    Residual,
    Resynth,
    CoeffsCsv,
}

#[derive(Debug, Args, Serialize)]
pub struct LpcArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = dsp::DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = 20)]
    pub frame_ms: usize,
    #[arg(long, value_enum)]
    pub emit: LpcEmit,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub deg: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeArg {
    Layer,
    Model,
}

#[derive(Debug, Args, Serialize)]
pub struct GradCheckArgs {
    #[arg(long, value_enum, default_value = "layer")]
    pub scope: ScopeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append a deliberately wrong gradient to exercise the failure path.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct InspectArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// List every tensor.
    #[arg(long)]
    pub tensors: bool,
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// A check ran and reported a failure.
    Verification(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Error(e) => exit_code(e),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Verification(m) => f.write_str(m),
            Failure::Error(e) => write!(f, "{e}"),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Wav(_) | Error::Checkpoint(_) => 3,
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

fn announce<T: Serialize>(command: &str, args: &T) {
    let json = serde_json::to_string(args).unwrap_or_else(|e| format!("<{e}>"));
    eprintln!("abas {command}: {json}");
}

pub fn run(cli: Cli) -> std::result::Result<(), Failure> {
    if cli.threads != 1 {
        log::info!("--threads {} recorded; this build is single-threaded", cli.threads);
    }
    match cli.command {
        Command::GenCorpus(a) => gen_corpus(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Vocode(a) => cmd_vocode(&a),
        Command::CrossSynth(a) => cmd_cross_synth(&a),
        Command::Lpc(a) => cmd_lpc(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::GradCheck(a) => cmd_grad_check(&a),
        Command::InspectCheckpoint(a) => cmd_inspect(&a),
    }
}

/// Parses `args` (program name first), runs and returns the exit code.
pub fn main_with_args<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn gen_corpus(a: &GenCorpusArgs) -> std::result::Result<(), Failure> {
    announce("gen-corpus", a);
    let paths = train::gen_synthetic_corpus(a.clips, a.len, a.seed, &a.out)?;
    println!("wrote {} clips to {}", paths.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> std::result::Result<(), Failure> {
    let config = a.resolve()?;
    announce("train", &config);
    eprintln!("seed: {}", config.seed);
    let outcome = train::train_loop(&config, &a.out, a.resume.as_deref())?;
    if let Some(last) = outcome.log.last() {
        println!("{}", train::LOSS_HEADER);
        println!("{}", last.csv_row());
    }
    println!("loss log: {}", outcome.loss_csv.display());
    println!("checkpoint: {}", outcome.final_checkpoint.display());
    Ok(())
}

fn cmd_vocode(a: &VocodeArgs) -> std::result::Result<(), Failure> {
    announce("vocode", a);
    let ckpt = load_checkpoint(&a.ckpt)?;
    let vocoder = Vocoder::from_checkpoint(&ckpt)?;
    eprintln!("seed: {}", a.seed);
    let speech = wavio::read_wav(&a.input)?;
    let v = vocoder.vocode(&speech, a.seed, !a.skip_cross_synth)?;
    let written = wavio::quantize(v.output.samples());
    wavio::write_samples(&a.out, &written)?;
    let x = speech.samples();
    eprintln!(
        "ssnr_db={:.4} l1={:.6} lsd_db={:.4}",
        metrics::ssnr(x, &written, SsnrParams::default())?,
        metrics::l1_distance(x, &written)?,
        metrics::log_spectral_distance(x, &written, LsdParams::default())?
    );
    Ok(())
}

fn frame_len(frame_ms: usize) -> Result<usize> {
    let n = frame_ms * dsp::SAMPLE_RATE as usize / 1000;
    if n == 0 {
        return Err(Error::Config("frame length must be at least one sample".into()));
    }
    Ok(n)
}

fn cmd_cross_synth(a: &CrossSynthArgs) -> std::result::Result<(), Failure> {
    announce("cross-synth", a);
    let fl = frame_len(a.frame_ms)?;
    let mut carrier = wavio::read_wav(&a.carrier)?.to_f64();
    let mut envelope = wavio::read_wav(&a.envelope)?.to_f64();
    let n = carrier.len().min(envelope.len());
    if carrier.len() != envelope.len() {
        log::warn!(
            "carrier has {} samples, envelope source {}; both trimmed to {n}",
            carrier.len(),
            envelope.len()
        );
        carrier.truncate(n);
        envelope.truncate(n);
    }
    let track = dsp::estimate_track(&envelope, a.order, fl)?;
    let y = dsp::cross_synthesize_f64(&carrier, &track, Some(a.order))?;
    wavio::write_wav(&a.out, &AudioSignal::from_f64(&y, dsp::Role::Speech)?)?;
    Ok(())
}

fn cmd_lpc(a: &LpcArgs) -> std::result::Result<(), Failure> {
    announce("lpc", a);
    let fl = frame_len(a.frame_ms)?;
    let x = wavio::read_wav(&a.input)?.to_f64();
    let (track, residual) = dsp::analyze(&x, a.order, fl)?;
    match a.emit {
        LpcEmit::Residual => {
            wavio::write_wav(&a.out, &AudioSignal::from_f64(&residual[..x.len()], dsp::Role::Residual)?)?;
        }
        LpcEmit::Resynth => {
            let mut y = dsp::synthesize(&residual, &track)?;
            y.truncate(x.len());
            wavio::write_wav(&a.out, &AudioSignal::from_f64(&y, dsp::Role::Speech)?)?;
        }
        LpcEmit::CoeffsCsv => {
            std::fs::write(&a.out, coeffs_csv(&track))?;
        }
    }
    Ok(())
}

/// One row per frame: prediction error power, then `a_1..a_p`.
pub fn coeffs_csv(track: &dsp::LpcTrack) -> String {
    let mut s = String::from("gain_error");
    for k in 1..=track.order {
        write!(s, ",a{k}").expect("write to string");
    }
    s.push('\n');
    for f in &track.frames {
        write!(s, "{:.12e}", f.gain_error).expect("write to string");
        for c in &f.coeffs {
            write!(s, ",{c:.12e}").expect("write to string");
        }
        s.push('\n');
    }
    s
}

fn wav_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    Ok(std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .filter_map(|p| Some((p.file_name()?.to_string_lossy().into_owned(), p)))
        .collect())
}

fn cmd_eval(a: &EvalArgs) -> std::result::Result<(), Failure> {
    announce("eval", a);
    let refs = wav_files(&a.reference)?;
    let degs = wav_files(&a.deg)?;
    for name in refs.keys().filter(|n| !degs.contains_key(*n)) {
        log::warn!("{name}: no degraded counterpart, skipped");
    }
    for name in degs.keys().filter(|n| !refs.contains_key(*n)) {
        log::warn!("{name}: no reference counterpart, skipped");
    }
    let mut pairs = Vec::new();
    for (name, rp) in &refs {
        if let Some(dp) = degs.get(name) {
            pairs.push((name.clone(), wavio::read_wav(rp)?, wavio::read_wav(dp)?));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Config("no file names shared by the two directories".into()).into());
    }
    let report = metrics::evaluate_corpus(pairs.iter().map(|(n, r, d)| (n.as_str(), r.samples(), d.samples())))?;
    let csv = report.to_csv();
    match &a.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_grad_check(a: &GradCheckArgs) -> std::result::Result<(), Failure> {
    announce("grad-check", a);
    let scope = match a.scope {
        ScopeArg::Layer => SuiteScope::Layer,
        ScopeArg::Model => SuiteScope::Model,
    };
    let entries = run_grad_suite(scope, a.seed, a.inject_fault)?;
    let mut failed = Vec::new();
    for e in &entries {
        let verdict = if e.passed() { "PASS" } else { "FAIL" };
        println!(
            "{:<26} max_rel_err {:.3e}  coords {:>5}  {verdict}",
            e.name, e.report.max_rel_error, e.report.coords_checked
        );
        if !e.passed() {
            failed.push(e.name);
        }
    }
    if failed.is_empty() {
        println!("all {} checks within {TOLERANCE:e}", entries.len());
        Ok(())
    } else {
        Err(Failure::Verification(format!("gradient check failed for {}", failed.join(", "))))
    }
}

fn cmd_inspect(a: &InspectArgs) -> std::result::Result<(), Failure> {
    announce("inspect-checkpoint", a);
    let ckpt = load_checkpoint(&a.ckpt)?;
    let p = &ckpt.provenance;
    println!("step: {}", ckpt.step);
    println!("producer: {}", p.producer);
    println!("gate: {}  target: {}  seed: {}", p.gate, p.target, p.seed);
    if let Some(r) = &p.resumed_from {
        println!("resumed from: {r}");
    }
    let total: usize = ckpt.tensors.iter().map(|t| t.values.len()).sum();
    println!("tensors: {} ({} values)", ckpt.tensors.len(), total);
    let json = serde_json::to_string_pretty(&ckpt.config).map_err(|e| Error::Config(e.to_string()))?;
    println!("config: {json}");
    if a.tensors {
        for t in &ckpt.tensors {
            println!("{} {:?}", t.name, t.dims);
        }
    }
    Ok(())
}
