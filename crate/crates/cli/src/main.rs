use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdem_cli::{parse_config, run, Campaign};

const USAGE_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "pdem", version, about = "Regularized Schrödinger experiments with singular coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaigns described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the configured campaign.
        #[arg(long)]
        campaign: Option<String>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for ladder points (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
        /// Repeat for more logging.
        #[arg(short, long, action = clap::ArgAction::Count)]
        verbose: u8,
    },
}

fn main() -> ExitCode {
    let Command::Run { config, campaign, out, jobs, verbose } = Cli::parse().command;
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let mut cfg = match parse_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return ExitCode::from(USAGE_ERROR);
        }
    };
    if let Some(name) = campaign {
        match name.parse::<Campaign>() {
            Ok(c) => {
                if let (false, Err(why)) = (c == Campaign::All, cfg.check_campaign(c)) {
                    eprintln!("error: --campaign {name}: {why}");
                    return ExitCode::from(USAGE_ERROR);
                }
                cfg.campaign = c;
            }
            Err(e) => {
                eprintln!("error: --campaign: {e}");
                return ExitCode::from(USAGE_ERROR);
            }
        }
    }
    if let Some(dir) = out {
        cfg.output = dir;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(USAGE_ERROR);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start workers: {e}");
            return ExitCode::from(USAGE_ERROR);
        }
    };
    let summary = match pool.install(|| run(&cfg)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", cfg.output.display());
            return ExitCode::from(USAGE_ERROR);
        }
    };
    for outcome in &summary.outcomes {
        println!("{}", outcome.line());
    }
    ExitCode::from(summary.exit_code())
}
