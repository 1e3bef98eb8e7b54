use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use faithkit_harness::curves::{run_curves, write_curves};
use faithkit_harness::evaluate::{run_evaluate, FaithfulnessReport};
use faithkit_harness::interpolate::run_interpolate;
use faithkit_harness::report::{render, Format};
use faithkit_harness::train_cmd::{run_train, save_trained};
use faithkit_harness::{ExperimentConfig, HarnessError, Result};

#[derive(Parser)]
#[command(name = "faithkit", version, about = "Attribution faithfulness experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path, overriding the config's `output` (or `checkpoint` for `train`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier and write its checkpoint.
    Train,
    /// Evaluate attribution methods and write a JSON report plus per-example records.
    Evaluate,
    /// Write comprehensiveness and sensitivity per explicit token count as CSV.
    Curves,
    /// Write interpolation curves as CSV.
    Interpolate,
    /// Render a report as text or CSV.
    Report {
        /// Report file; defaults to the config's `output`.
        report: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn output(cli: &Cli, cfg: &ExperimentConfig) -> Result<PathBuf> {
    match &cli.out {
        Some(p) => Ok(p.clone()),
        None => cfg.require(&cfg.output, "output").map(PathBuf::from),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Train => {
            let summary = run_train(&cfg)?;
            let path = save_trained(&summary, &cfg, cli.out.clone())?;
            match summary.dev_accuracy {
                Some(a) => println!("dev accuracy: {a:.4}"),
                None => println!("dev accuracy: n/a (no dev data)"),
            }
            eprintln!("wrote {}", path.display());
        }
        Command::Evaluate => {
            let out = output(cli, &cfg)?;
            let eval = run_evaluate(&cfg)?;
            let dump = eval.write(&out)?;
            eprintln!("wrote {} and {}", out.display(), dump.display());
            if eval.all_failed() {
                return Err(HarnessError::AllFailed("every example failed on every metric".into()));
            }
        }
        Command::Curves => {
            let out = output(cli, &cfg)?;
            let rows = run_curves(&cfg)?;
            write_curves(&rows, &out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Interpolate => {
            let out = output(cli, &cfg)?;
            let table = run_interpolate(&cfg)?;
            table.write(&out)?;
            eprintln!(
                "wrote {} ({} examples, {} skipped)",
                out.display(),
                table.rows.len(),
                table.skipped
            );
        }
        Command::Report { report } => {
            let path = match report {
                Some(p) => p.clone(),
                None => cfg.require(&cfg.output, "output")?.to_path_buf(),
            };
            let text = render(&FaithfulnessReport::load(&path)?, cli.format)?;
            match &cli.out {
                Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::Io {
                    path: p.clone(),
                    source: e,
                })?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
