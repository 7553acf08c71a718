mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use lime_audio::parallel::Execution;
use serde::Serialize;

use args::{Cli, Command};
use commands::{stage, Context, StageResult};

#[derive(Serialize)]
struct RunConfig<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    seed_from_flag: bool,
    out_dir: &'a std::path::Path,
    jobs: usize,
    log_level: String,
    args: serde_json::Value,
}

fn execution(jobs: usize) -> StageResult<Execution> {
    #[cfg(feature = "parallel")]
    {
        if jobs != 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .map_err(stage("start workers"))?;
            return Ok(Execution::Parallel);
        }
    }
    let _ = jobs;
    Ok(Execution::Sequential)
}

fn run(cli: Cli) -> StageResult<()> {
    let seed = cli.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("no --seed given, using seed {s}");
        s
    });
    std::fs::create_dir_all(&cli.out_dir).map_err(stage("create output directory"))?;
    let args = match &cli.command {
        Command::Explain(a) => serde_json::to_value(a),
        Command::Evaluate(a) => serde_json::to_value(a),
        Command::Decompose(a) => serde_json::to_value(a),
    }
    .map_err(stage("write run config"))?;
    let config = RunConfig {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        seed,
        seed_from_flag: cli.seed.is_some(),
        out_dir: &cli.out_dir,
        jobs: cli.jobs,
        log_level: cli.log_level.to_string().to_lowercase(),
        args,
    };
    let json = serde_json::to_string_pretty(&config).map_err(stage("write run config"))?;
    let path = cli.out_dir.join("run_config.json");
    std::fs::write(&path, json + "\n").map_err(stage("write run config"))?;

    let ctx = Context {
        seed,
        out_dir: cli.out_dir.clone(),
        execution: execution(cli.jobs)?,
    };
    match &cli.command {
        Command::Explain(a) => commands::explain(a, &ctx),
        Command::Evaluate(a) => commands::evaluate(a, &ctx),
        Command::Decompose(a) => commands::decompose_cmd(a, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
