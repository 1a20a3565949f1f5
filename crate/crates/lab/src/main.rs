use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use optomech::config::load_config;
use optomech::{Error, Result};
use optomech_lab::{estimate, exit_code, figures, samples, sweep};

#[derive(Parser)]
#[command(name = "optomech-lab", version, about = "Sweeps, figure data, synthetic samples and disorder estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a one-dimensional sweep described by a config with a [sweep] section.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Abort on the first row where H − F is not positive semidefinite.
        #[arg(long)]
        strict: bool,
    },
    /// Write the data behind one figure as CSV plus a JSON manifest.
    Figure {
        id: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw synthetic homodyne outcomes at the config's disorder and setting.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(short = 'N')]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// CSV destination; defaults to samples_<seed>_<stream>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the disorder from one or more sample files.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// JSON report destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        samples: Vec<PathBuf>,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep { spec, out, strict } => {
            let spec = sweep::SweepSpec::load(&spec)?;
            let table = sweep::run_sweep(&spec, strict)?;
            write_or_print(out.as_deref(), &table.to_csv_string())
        }
        Command::Figure { id, config, out } => {
            let config = load_config(&config)?;
            let (csv, json) = figures::write_figure(&id, &config, &out)?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
            Ok(())
        }
        Command::Sample { config, n, seed, stream, out } => {
            let config = load_config(&config)?;
            let sample = samples::generate(&config, n, seed, stream)?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("samples_{seed}_{stream}.csv")));
            let side = samples::write(&sample, &out)?;
            eprintln!("wrote {} and {}", out.display(), side.display());
            Ok(())
        }
        Command::Estimate { config, out, samples: files } => {
            let config = load_config(&config)?;
            let loaded = files
                .iter()
                .map(|f| Ok((f.display().to_string(), samples::read(f)?)))
                .collect::<Result<Vec<_>>>()?;
            let report = estimate::estimate(&config, &loaded)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Input(e.to_string()))? + "\n";
            write_or_print(out.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
