use clap::{Parser, Subcommand, ValueEnum};
use sclab_cli::commands::{CommandKind, Suite};
use sclab_cli::emit::OutputFormat;
use std::path::PathBuf;
use std::process::ExitCode;

/// Two-terminal source coding laboratory.
///
/// Exit codes: 0 success, 1 I/O error, 2 invalid config, 3 verification
/// assertion failed, 4 budget refusal.
#[derive(Parser)]
#[command(name = "sclab", version)]
struct Cli {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results are identical for any thread count).
    #[arg(long)]
    threads: Option<usize>,
    /// Artifact format for tabular outputs.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Information measures of the config's model.
    Info,
    /// Rate / rate-distortion region computation.
    Region,
    /// Monte-Carlo coding experiment over the block-length schedule.
    Simulate,
    /// Randomized verification suites.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Typicality,
    Identities,
    Containment,
    Coding,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // ignore failure when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let kind = match cli.command {
        Command::Info => CommandKind::Info,
        Command::Region => CommandKind::Region,
        Command::Simulate => CommandKind::Simulate,
        Command::Verify { suite } => CommandKind::Verify(match suite {
            SuiteArg::Typicality => Suite::Typicality,
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Containment => Suite::Containment,
            SuiteArg::Coding => Suite::Coding,
        }),
    };
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    match sclab_cli::execute(kind, &text, cli.out.as_deref(), cli.seed, format) {
        Ok(manifest) => {
            println!(
                "ok: {} wrote {} artifact(s) in {} ms",
                manifest.command,
                manifest.outputs.len(),
                manifest.wall_time_ms
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
