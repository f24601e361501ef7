use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qtorus_cli::report::outcome_exit_code;
use qtorus_cli::runner::{self, Command};

#[derive(Parser)]
#[command(
    name = "qtorus",
    version,
    about = "Verification harness for torus quantization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Operator norm against the weighted symbol norm, plus phase identities
    NormCheck(RunArgs),
    /// Finite-time averaging defects against the 4/T bound
    AverageConvergence(RunArgs),
    /// Decay scan of the averaged remainder over the energy grid
    SnScan(RunArgs),
    /// Finite-rank certificate for dimension-1 averages
    RankCertificate(RunArgs),
    /// Every check, in declaration order
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config file
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's output table
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks the machine default
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        CliCommand::NormCheck(args) => (Command::NormCheck, args),
        CliCommand::AverageConvergence(args) => (Command::AverageConvergence, args),
        CliCommand::SnScan(args) => (Command::SnScan, args),
        CliCommand::RankCertificate(args) => (Command::RankCertificate, args),
        CliCommand::All(args) => (Command::All, args),
    };
    match runner::execute(command, &args.config, args.out.as_deref(), args.threads) {
        Ok(summary) => {
            for section in &summary.report.sections {
                println!(
                    "{}: {}",
                    section.name,
                    if section.pass { "PASS" } else { "FAIL" }
                );
            }
            println!("report: {}", summary.run_dir.join("report.json").display());
            let code = outcome_exit_code(&summary.report);
            if code != 0 {
                if let Some((section, record)) = summary.report.first_failure() {
                    eprintln!("bound violated in {}: {}", section.name, record.note);
                }
            }
            ExitCode::from(code)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(runner::error_exit_code(&err))
        }
    }
}
