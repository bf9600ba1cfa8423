//! `infochart`: text-to-infographic generation, rendering, evaluation and
//! dataset curation.
//!
//! Exit codes: 0 success, 1 runtime or i/o failure, 2 invalid configuration
//! or input, 3 some documents or records failed while the rest completed.

mod curate;
mod evaluate;
mod generate;
mod manifest;
mod render;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use run::{CliError, Context};

#[derive(Parser, Debug)]
#[command(name = "infochart", version, about = "Generate, render, evaluate and curate infographics")]
struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overriding the configuration.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Text to metadata to chart program to SVG.
    Generate(generate::Args),
    /// Render a metadata document directly.
    Render(render::Args),
    /// Score predicted metadata against gold metadata.
    Eval(evaluate::Args),
    /// Dataset curation steps.
    #[command(subcommand)]
    Curate(curate::Command),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    let ctx = Context::load(cli.config.as_deref(), cli.seed, cli.jobs)?;
    if cli.print_config {
        print!("{}", ctx.config.to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    match cli.command {
        Some(Command::Generate(a)) => generate::run(&ctx, a),
        Some(Command::Render(a)) => render::run(&ctx, a),
        Some(Command::Eval(a)) => evaluate::run(&ctx, a),
        Some(Command::Curate(c)) => curate::run(&ctx, c),
        None => Err(CliError::usage(anyhow::anyhow!("no command given; see --help"))),
    }
}
