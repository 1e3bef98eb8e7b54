//! Writes a synthetic sentiment corpus and an experiment config into a
//! directory:
//!
//! ```text
//! cargo run --example synth_corpus -- out/ --dim 50 --max-len 40
//! faithkit train --config out/experiment.cfg
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use faithkit::synthetic::SyntheticConfig;
use faithkit_harness::synthetic::write_experiment;

#[derive(Parser)]
struct Args {
    dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 8)]
    min_len: usize,
    #[arg(long, default_value_t = 16)]
    max_len: usize,
    #[arg(long, default_value_t = 800)]
    train: usize,
    #[arg(long, default_value_t = 200)]
    test: usize,
}

fn main() -> ExitCode {
    let a = Args::parse();
    let corpus = SyntheticConfig {
        train: a.train,
        dev: a.train / 4,
        test: a.test,
        min_len: a.min_len,
        max_len: a.max_len,
        dim: a.dim,
        ..SyntheticConfig::default()
    };
    match write_experiment(&a.dir, &corpus, a.seed, "") {
        Ok(cfg) => {
            println!("{}", cfg.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
