use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Zero-energy scattering computations driven by a configuration file.
#[derive(Debug, Parser)]
#[command(name = "zeroscat", version)]
struct Args {
    /// Configuration file (`key = value` with [model] and [run] sections).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the emitted CSV files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to the config's `threads` key or all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    match zeroscat_cli::run_file(&args.config, &args.out, args.threads, args.verbose) {
        Ok(report) => {
            println!("{}", report.summary.trim_end());
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
