use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sstac_harness::diag::cli_diag;
use sstac_harness::sweep::parse_values;
use sstac_harness::{cli_run, cli_sweep, ExperimentConfig, HarnessError, SweepParam};

#[derive(Parser)]
#[command(name = "sstac", version, about = "Single-timescale actor-critic experiments on tabular MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment per configured seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter over a list of values, for every configured seed.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of K, N, N_a, N_c, beta, R, m.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 64,256,1024.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the identities of a stored trace and write diag.csv next to it.
    Diag {
        #[arg(long)]
        trace: PathBuf,
    },
}

fn fail(e: &HarnessError) -> ExitCode {
    eprintln!("{}", e.to_json_line());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out } => {
            let result = ExperimentConfig::load(&config).and_then(|cfg| cli_run(&cfg, seed, out.as_deref()));
            match result {
                Ok(dirs) => {
                    for d in dirs {
                        println!("{}", d.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let result = ExperimentConfig::load(&config).and_then(|cfg| {
                let p = SweepParam::parse(&param)?;
                let vals = parse_values(p, &values)?;
                cli_sweep(&cfg, p, &vals, out.as_deref())
            });
            match result {
                Ok(outcome) => {
                    println!("{}", outcome.summary_path.display());
                    for (id, e) in &outcome.failures {
                        eprintln!("{}", serde_json::json!({"run_id": id, "error": e.class(), "message": e.to_string()}));
                    }
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Diag { trace } => match cli_diag(&trace) {
            Ok(report) => {
                for c in &report.checks {
                    println!("{c}");
                }
                println!("wrote {}", report.csv_path.display());
                if report.all_passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(&e),
        },
    }
}
