//! Writes the built-in speech-like corpus as 16 kHz PCM16 WAV files.
//!
//! cargo run --release --example synthetic_corpus -- [out_dir] [clips]

use std::path::PathBuf;

use abas::train::gen_synthetic_corpus;
use abas::wavio::read_wav;

fn main() -> abas::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_corpus".into()));
    let clips = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    for path in gen_synthetic_corpus(clips, 16000, 0, &out)? {
        let s = read_wav(&path)?;
        let peak = s.samples().iter().fold(0.0f32, |m, v| m.max(v.abs()));
        println!("{}  {} samples  peak {peak:.3}", path.display(), s.len());
    }
    Ok(())
}
