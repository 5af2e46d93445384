use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eegchain::config::{Experiment, ExperimentConfig, Preset};
use eegchain::experiment::{self, Rendered, Reports};
use eegchain::Error;

/// Simulate and analyse the wireless EEG acquisition chain.
#[derive(Parser)]
#[command(name = "eegchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sinusoid frequency and amplitude sweeps
    SineSweep(RunArgs),
    /// Run the visual-evoked-potential comparison
    Vep(RunArgs),
    /// Re-analyse stored recordings
    Analyze {
        /// Recording file or directory searched recursively
        path: PathBuf,
        /// Also write the reports into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summaries of stored report files
    Report {
        /// Directory holding *_report.csv files
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run a single device preset
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Safe,
    Reference,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Safe => Preset::Safe,
            PresetArg::Reference => Preset::Reference,
        }
    }
}

fn load(args: &RunArgs, experiment: Experiment) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.experiment = experiment;
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(p) = args.preset {
        config.presets = vec![p.into()];
    }
    config.validate()?;
    Ok(config)
}

fn print(r: &Rendered) {
    print!("{}", r.summary);
}

fn print_all(reports: &Reports) {
    let mut first = true;
    for r in [&reports.sine, &reports.vep].into_iter().flatten() {
        if !first {
            println!();
        }
        print(r);
        first = false;
    }
}

fn written(out: &Path, n: usize) {
    eprintln!("wrote {n} recordings to {}", out.display());
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SineSweep(args) => {
            let config = load(&args, Experiment::SineSweep)?;
            let run = experiment::run_sine_experiment(&config)?;
            let r = run.write(&args.out)?;
            written(&args.out, run.sessions.len());
            print(&r);
        }
        Command::Vep(args) => {
            let config = load(&args, Experiment::VepSession)?;
            let run = experiment::run_vep_experiment(&config)?;
            let r = run.write(&args.out)?;
            written(&args.out, run.sessions.len());
            print(&r);
        }
        Command::Analyze { path, out } => {
            let reports = experiment::analyze(&path)?;
            if let Some(out) = out {
                reports.write(&out)?;
            }
            print_all(&reports);
        }
        Command::Report { out } => print_all(&experiment::report(&out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
