use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mutascope_core::config::Config;
use mutascope_core::pipeline::{self, RunOptions, RunRecord};
use mutascope_core::study::StudyOptions;
use mutascope_core::PythonFrontend;

#[derive(Parser)]
#[command(name = "mutascope", version, about = "Method-level mutation scores and test-quality study")]
struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutate the workspace, execute covering tests, and write the reports.
    Run {
        #[arg(long)]
        workspace: PathBuf,
        /// Executable speaking the runner protocol.
        #[arg(long)]
        runner: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value = "mutascope-report")]
        report_dir: PathBuf,
        /// Continue from the checkpoint left in the report directory.
        #[arg(long)]
        resume: bool,
    },
    /// Recompute scores and the study from a persisted matrix.
    Score {
        #[arg(long)]
        matrix: PathBuf,
        /// Only `alpha` and `random_policy` are used here.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        k: usize,
        /// Defaults to the directory holding the matrix.
        #[arg(long)]
        report_dir: Option<PathBuf>,
    },
}

fn print_summary(dir: &Path) -> Result<()> {
    let path = dir.join("summary.txt");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    print!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { workspace, runner, config, jobs, seed, k, report_dir, resume } => {
            let config = Config::load(&config)?;
            let opts = RunOptions { workspace, runner, config, jobs: jobs as usize, k, seed, report_dir, resume };
            pipeline::run(&opts, &PythonFrontend)?;
            print_summary(&opts.report_dir)
        }
        Command::Score { matrix, config, seed, k, report_dir } => {
            let config = match config {
                Some(path) => Config::load(&path)?,
                None => Config::default(),
            };
            let record = RunRecord::load(&matrix)?;
            let dir = report_dir.unwrap_or_else(|| matrix.parent().map(Path::to_path_buf).unwrap_or_default());
            let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let study = StudyOptions { k, seed, alpha: config.alpha, random_policy: config.random_policy };
            pipeline::score(&record, &study, &dir)?;
            print_summary(&dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("MUTASCOPE_LOG").init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn run_requires_config_and_rejects_zero_jobs() {
        let base = ["mutascope", "run", "--workspace", "w", "--runner", "r"];
        assert!(Cli::try_parse_from(base).is_err());
        let with_config = [&base[..], &["--config", "c.json", "--jobs", "0"]].concat();
        assert!(Cli::try_parse_from(with_config).is_err());
    }
}
