//! `mwl`: run configured experiments on Witten-deformed products.
//!
//! Exit codes: 0 success, 1 verdict other than PASS, 2 configuration error,
//! 3 regime violation, 4 I/O error.

mod config;
mod run;

use clap::{Parser, Subcommand};
use config::Mode;
use run::Failure;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mwl", version, about = "Witten-deformed A-infinity products on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config.
    config: PathBuf,
    /// Override a config key, e.g. `--set grid.n=513` or `--set hbar=[0.1,0.08]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in the config.
    Run(RunArgs),
    /// Small spectrum and optional Green-kernel decay.
    Spectrum(RunArgs),
    /// Critical points, Morse differential and Agmon distances.
    Morse(RunArgs),
    /// Tree topologies and rigid gradient trees.
    Trees(RunArgs),
    /// Product pairing at the first `hbar`.
    Product(RunArgs),
    /// Pairings over the `hbar` list.
    Sweep(RunArgs),
    /// Sweep, fit and compare with the Morse product.
    Verify(RunArgs),
    /// Laplace expansions and transport along a flow line.
    Wkb(RunArgs),
    /// Print the config JSON schema.
    Schema,
}

fn load(args: &RunArgs, mode: Option<Mode>) -> Result<(config::ExperimentConfig, PathBuf), Failure> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Failure::Io(format!("{}: {e}", args.config.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("{}: {e}", args.config.display())))?;
    if let Some(m) = mode {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("mode".into(), serde_json::to_value(m).expect("mode serializes"));
        }
    }
    for o in &args.overrides {
        config::apply_override(&mut value, o)?;
    }
    let cfg = config::parse(value)?;
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("MWL_THREADS") {
        let n: usize = v.parse().map_err(|_| Failure::Schema(format!("MWL_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, mode) = match &cli.command {
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&config::schema()).expect("schema serializes"));
            return ExitCode::SUCCESS;
        }
        Command::Run(a) => (a, None),
        Command::Spectrum(a) => (a, Some(Mode::Spectrum)),
        Command::Morse(a) => (a, Some(Mode::Morse)),
        Command::Trees(a) => (a, Some(Mode::Trees)),
        Command::Product(a) => (a, Some(Mode::Product)),
        Command::Sweep(a) => (a, Some(Mode::Sweep)),
        Command::Verify(a) => (a, Some(Mode::Verify)),
        Command::Wkb(a) => (a, Some(Mode::Wkb)),
    };
    let result = init_threads().and_then(|_| load(args, mode)).and_then(|(cfg, base)| run::run(&cfg, &base));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mwl: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
