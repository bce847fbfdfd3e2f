use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lrpolymer_cli::{report, run_file, RunOptions, OUT_ENV};

#[derive(Parser)]
#[command(
    name = "lrpolymer",
    version,
    about = "Run and summarise long-range polymer experiments"
)]
struct Cli {
    /// Override the seed given in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replica-parallel sampling.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for this run.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root under which per-config output directories are created.
    #[arg(long, env = OUT_ENV, global = true)]
    out_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Summarise a results directory.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let code = match cli.command {
        Command::Run { config } => {
            let opts = RunOptions {
                seed: cli.seed,
                out: cli.out,
                out_root: cli.out_root,
            };
            run_file(&config, &opts).map(|outcome| {
                let m = &outcome.manifest;
                println!("{} -> {} ({:?})", m.kind, outcome.dir.display(), m.status);
                for t in m.tasks.iter().filter(|t| t.detail.is_some()) {
                    println!("  {}: {}", t.name, t.detail.as_deref().unwrap_or_default());
                }
                outcome.exit_code()
            })
        }
        Command::Report { dir } => report::report(&dir).map(|r| {
            print!("{}", r.render());
            0
        }),
    };
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
