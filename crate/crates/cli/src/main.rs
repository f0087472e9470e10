//! `vibci`: synthetic visual-imagery BCI pipeline, end to end from one
//! config file and one master seed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vibci_cli::commands;
use vibci_cli::config::PipelineConfig;

#[derive(Parser)]
#[command(
    name = "vibci",
    version,
    about = "Synthetic visual-imagery BCI pipeline: generation, preprocessing, \
             statistics, channel optimization, and online-session simulation"
)]
struct Cli {
    /// Pipeline config file (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker thread cap; results are identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Print the full default config and exit.
    #[arg(long)]
    print_default_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic subject datasets.
    Synth,
    /// Decimate and band-pass a dataset, writing the processed copy.
    Preprocess {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Permutation-test channel significance against rest.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Train the decoder on the configured channels of one subject.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Scan single-channel decoding accuracy over the channel shortlist.
    ChannelScan {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Scan channel-pair decoding accuracy.
    PairScan {
        #[arg(long)]
        dataset: PathBuf,
        /// Reuse a channel-scan report for the top-3 pair candidates.
        #[arg(long)]
        channel_report: Option<PathBuf>,
    },
    /// Run simulated online sessions with a trained model.
    OnlineSim {
        #[arg(long)]
        model: PathBuf,
    },
    /// Render an emitted JSON report as a text table.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();

    if cli.print_default_config {
        print!("{}", PipelineConfig::default().to_pretty_json());
        return Ok(());
    }

    let Some(command) = cli.command else {
        anyhow::bail!("no command given (try --help or --print-default-config)");
    };

    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    config.validate()?;

    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .ok(); // pool may already exist; results do not depend on it
    }

    match command {
        Command::Synth => commands::synth(&config, &cli.out),
        Command::Preprocess { dataset } => commands::preprocess(&config, &dataset, &cli.out),
        Command::Stats { dataset } => commands::stats(&config, &dataset, &cli.out),
        Command::Train { dataset } => commands::train_command(&config, &dataset, &cli.out),
        Command::ChannelScan { dataset } => commands::channel_scan(&config, &dataset, &cli.out),
        Command::PairScan { dataset, channel_report } => {
            commands::pair_scan(&config, &dataset, channel_report.as_deref(), &cli.out)
        }
        Command::OnlineSim { model } => commands::online_sim(&config, &model, &cli.out),
        Command::Report { input } => commands::report(&input),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
