use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpdyn_harness::{run, ExperimentConfig, HarnessError, Recipe, RunOptions};

#[derive(Parser)]
#[command(name = "qpdyn", version, about = "Quasi-periodic operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Site probabilities of e^{-itH} δ_site at the configured times
    Evolve(Common),
    /// Moment series and log-growth fit
    Moments(Common),
    /// Good / strongly good classification of every box
    GreensScan(Common),
    /// Bad-box counts and the sublinear exponent fit
    Sublinear(Common),
    /// Direct vs Parseval time averages, site by site
    ParsevalCheck(Common),
    /// Orbit discrepancy over sizes and phases
    Discrepancy(Common),
    /// Diophantine certificate for the model frequency
    Diophantine(Common),
    /// Lyapunov exponent over the energy grid
    Lyapunov(Common),
    /// Run the config's own recipe over its sweep axes
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides output.dir
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; overrides workers
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (recipe, common) = match cli.command {
        Command::Evolve(c) => (Some(Recipe::Evolve), c),
        Command::Moments(c) => (Some(Recipe::MomentGrowth), c),
        Command::GreensScan(c) => (Some(Recipe::GreensScan), c),
        Command::Sublinear(c) => (Some(Recipe::BadSetScan), c),
        Command::ParsevalCheck(c) => (Some(Recipe::ParsevalCrosscheck), c),
        Command::Discrepancy(c) => (Some(Recipe::DiscrepancySweep), c),
        Command::Diophantine(c) => (Some(Recipe::Diophantine), c),
        Command::Lyapunov(c) => (Some(Recipe::LyapunovMap), c),
        Command::Sweep(c) => (None, c),
    };
    let result = ExperimentConfig::load(&common.config).and_then(|cfg| {
        let opts = RunOptions {
            recipe,
            out_dir: common.out,
            workers: common.workers,
            config_path: Some(common.config.clone()),
            verbose: common.verbose,
        };
        run(&cfg, &opts)
    });
    match result {
        Ok(summary) => {
            if common.verbose {
                eprintln!(
                    "{} point(s), config hash {}",
                    summary.points, summary.config_hash
                );
                for f in &summary.files {
                    eprintln!("wrote {}", f.display());
                }
            }
            if summary.flags.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &summary.flags {
                    eprintln!("numerical safety: {f}");
                }
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &HarnessError) -> u8 {
    e.exit_code() as u8
}
