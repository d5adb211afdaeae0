use clap::{Parser, Subcommand};
use econdyn::analysis::summarize_runs;
use econdyn::config::{parse_scenarios, parse_seeds, RunManifest};
use econdyn::engine::run_suite;
use econdyn::output::{self, OutputError};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_MISSING: u8 = 3;
const EXIT_NON_FINITE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "econdyn",
    version,
    about = "Household collapse dynamics under deteriorating conditions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios over a range of seeds and write the results.
    Run {
        /// Configuration file (`key = value` lines or JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario label: 1, 2, 3, 4, 5a or 5b. Repeatable.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Seeds as `a..b` (inclusive) or a comma list.
        #[arg(long)]
        seeds: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override one configuration key. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Compare collapse windows in a results directory against the reference windows.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn config_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_CONFIG)
}

fn build_manifest(
    config: Option<PathBuf>,
    scenarios: Vec<String>,
    seeds: Option<String>,
    out: Option<PathBuf>,
    overrides: Vec<String>,
) -> Result<RunManifest, ExitCode> {
    let mut manifest = RunManifest::default();
    if let Some(path) = config {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| config_error(format_args!("{}: {e}", path.display())))?;
        manifest
            .apply_text(&text)
            .map_err(|e| config_error(format_args!("{}: {e}", path.display())))?;
    }
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| config_error(format_args!("--set {item}: expected KEY=VALUE")))?;
        manifest
            .set(key, value)
            .map_err(|e| config_error(format_args!("--set {item}: {e}")))?;
    }
    if !scenarios.is_empty() {
        manifest.scenarios = parse_scenarios(&scenarios.join(",")).map_err(config_error)?;
    }
    if let Some(seeds) = seeds {
        manifest.seeds = parse_seeds(&seeds).map_err(config_error)?;
    }
    if let Some(out) = out {
        manifest.output_dir = out;
    }
    manifest.validate().map_err(config_error)?;
    Ok(manifest)
}

fn output_failure(err: OutputError) -> ExitCode {
    eprintln!("error: {err}");
    let code = match err {
        OutputError::NonFinite { .. } => EXIT_NON_FINITE,
        OutputError::Missing(_) | OutputError::Partial(_) => EXIT_MISSING,
        OutputError::Config { .. } | OutputError::Parse { .. } | OutputError::Analysis(_) => {
            EXIT_MISSING
        }
        OutputError::Io { .. } => EXIT_IO,
    };
    ExitCode::from(code)
}

fn cmd_run(manifest: RunManifest) -> ExitCode {
    let started = Instant::now();
    let results = match run_suite(&manifest.params, &manifest.scenarios, &manifest.seeds) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    log::info!(
        "{} runs finished in {:.2?}",
        results.len(),
        started.elapsed()
    );
    let summaries = match summarize_runs(&results) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    if let Err(e) = output::write_suite(&manifest, &results, &summaries) {
        return output_failure(e);
    }
    println!(
        "wrote {} runs ({} scenarios x {} seeds) to {}",
        results.len(),
        manifest.scenarios.len(),
        manifest.seeds.len(),
        manifest.output_dir.display()
    );
    ExitCode::SUCCESS
}

fn cmd_report(input: PathBuf) -> ExitCode {
    match output::load_suite(&input) {
        Ok(summaries) => {
            print!(
                "{}",
                output::render_report(&output::report_rows(&summaries))
            );
            ExitCode::SUCCESS
        }
        Err(e) => output_failure(e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            scenarios,
            seeds,
            out,
            overrides,
        } => match build_manifest(config, scenarios, seeds, out, overrides) {
            Ok(manifest) => cmd_run(manifest),
            Err(code) => code,
        },
        Command::Report { input } => cmd_report(input),
    }
}
