use std::path::PathBuf;
use std::process::ExitCode;

use anosov_lab::{run, validate, LabConfig, LabError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "anosov-lab",
    version,
    about = "Run geodesic-flow experiments from a TOML config"
)]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment a config describes.
    Run {
        config: PathBuf,
        /// Write outputs here instead of the config's `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check a config and list every problem found.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Run { config, output_dir } => LabConfig::load(&config)
            .map_err(LabError::from)
            .and_then(|cfg| run(&cfg, output_dir.as_deref()))
            .map(|manifest| {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&manifest.summary).expect("summary serializes")
                );
                for f in &manifest.files {
                    println!("{}  {}", f.sha256, f.name);
                }
            }),
        Command::Validate { config } => {
            LabConfig::load(&config)
                .map_err(LabError::from)
                .and_then(|cfg| {
                    let d = validate(&cfg);
                    if d.is_empty() {
                        println!("ok");
                        Ok(())
                    } else {
                        Err(LabError::Config(d))
                    }
                })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
