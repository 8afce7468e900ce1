use clap::{Parser, Subcommand};
use cvarmix_bench::{aggregate, dump_quantile_curve, metrics_files, parse_config, run_experiment, BenchError};
use cvarmix_core::oracles::suite::run_suite;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cvarmix", version, about = "Train and evaluate risk-averse tabular learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed and write seed_<n>.csv / seed_<n>.ckpt.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds overriding the config's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory; falls back to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean and standard error across every CSV in a directory.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical quantile function of a checkpoint's returns.
    QuantileCurve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the brute-force reference checks.
    Oracle {
        #[arg(long)]
        suite: String,
    },
}

fn run(cli: Cli) -> Result<ExitCode, BenchError> {
    match cli.command {
        Command::Train { config, seeds, out } => {
            let mut cfg = parse_config(&config)?;
            if let Some(seeds) = seeds {
                cfg.seeds = seeds;
            }
            let Some(out) = out.or_else(|| cfg.output_dir.clone()) else {
                return Err(BenchError::Invalid("no output directory: pass --out or set output_dir".into()));
            };
            let paths = run_experiment(&cfg, &out)?;
            for p in paths {
                println!("{}", p.display());
            }
        }
        Command::Aggregate { input, out } => {
            let files = metrics_files(&input)?;
            let summary = aggregate(&files)?;
            summary.write(&out)?;
            println!("aggregated {} files into {}", files.len(), out.display());
        }
        Command::QuantileCurve { config, checkpoint, episodes, out } => {
            let cfg = parse_config(&config)?;
            let curve = dump_quantile_curve(&cfg, &checkpoint, episodes, &out)?;
            println!("wrote {} points to {}", curve.points.len(), out.display());
        }
        Command::Oracle { suite } => {
            let results = run_suite(&suite)?;
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            println!("{} checks, {} failed", results.len(), failed);
            if failed > 0 {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
