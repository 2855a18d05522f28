use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dml::runner::{exit_code, run, ExperimentConfig, ExperimentKind};

/// Runs one experiment from a JSON config and writes `{kind}-{hash}.json/.csv`.
#[derive(Parser, Debug)]
#[command(name = "dml", version)]
struct Cli {
    /// eig, heat, theta, ns, density, logdet, groundstate, decay or verify.
    kind: String,
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = cli
        .kind
        .parse::<ExperimentKind>()
        .and_then(|kind| run(kind, &ExperimentConfig::from_path(&cli.config)?, cli.workers, cli.out.as_deref()));
    match &result {
        Ok(report) => {
            if let Some(table) = &report.table {
                print!("{table}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            for failure in &report.failures {
                eprintln!("FAILED: {failure}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
