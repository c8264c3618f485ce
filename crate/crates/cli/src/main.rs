use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plateflow_cli::{execute, prepare, Experiment, Invocation};

#[derive(Parser)]
#[command(name = "plateflow", version, about = "Plate-under-flow experiments")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory (default runs/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid and battery evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Integrator rtol; atol is set to 1e-2 of it.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Executes the experiment named in --config.
    Run,
    #[command(flatten)]
    Exp(Experiment),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let experiment = match cli.command {
        Command::Run => None,
        Command::Exp(e) => Some(e),
    };
    let inv = Invocation {
        config: cli.config,
        seed: cli.seed,
        tol: cli.tol,
        experiment,
    };
    let result = prepare(&inv).and_then(|cfg| {
        let name = cfg.experiment.as_ref().map_or("run", |e| e.name());
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(name));
        let m = execute(&cfg, &out, std::env::args().collect())?;
        Ok((out, m))
    });
    match result {
        Ok((out, m)) => {
            println!("{} -> {} ({:.2}s)", m.command, out.display(), m.wall_time_s);
            println!("{}", serde_json::to_string_pretty(&m.summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
