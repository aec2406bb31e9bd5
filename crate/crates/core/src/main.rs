use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use chomet::config::{self, Algorithm, ExperimentConfig, Preset};
use chomet::harness::{self, ExperimentOutput};
use chomet::Result;

#[derive(Parser)]
#[command(name = "chomet", version, about = "Conditional-handover preparation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured algorithms and write per-slot records as CSV.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `[output] path`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Built-in headline experiment; used instead of a config file.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Score a hindsight oracle on the configured scenario.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: OracleKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Dp,
    PerSlot,
}

fn print_summary(out: &ExperimentOutput, algorithms: &[Algorithm]) {
    println!(
        "{:<18} {:>6} {:>14} {:>12} {:>10} {:>12} {:>12}",
        "algorithm", "seed", "total_obj", "tail_obj", "preps", "avg_regret", "path_len"
    );
    for s in &out.summaries {
        println!(
            "{:<18} {:>6} {:>14.3} {:>12.3} {:>10.2} {:>12.4} {:>12.3}",
            s.algorithm, s.seed, s.total_objective, s.tail_objective, s.mean_preparations,
            s.final_regret, s.path_length
        );
        if let Some(bound) = s.regret_bound {
            println!("{:<18} {:>6} regret bound {:.6e}", "", "", bound);
        }
    }
    for alg in algorithms {
        let id = alg.to_string();
        let mean = |f: fn(&harness::RunSummary) -> f64| out.mean_over_seeds(&id, f).unwrap_or(f64::NAN);
        println!(
            "{:<18} {:>6} {:>14.3} {:>12.3} {:>10.2} {:>12.4} {:>12.3}",
            id,
            "mean",
            mean(|s| s.total_objective),
            mean(|s| s.tail_objective),
            mean(|s| s.mean_preparations),
            mean(|s| s.final_regret),
            mean(|s| s.path_length),
        );
    }
}

fn execute(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let result = harness::run_experiment(cfg)?;
    if let Some(path) = out.or_else(|| cfg.output.clone()) {
        harness::write_csv(&result.records, &path)?;
        eprintln!("wrote {} records to {}", result.records.len(), path.display());
    }
    print_summary(&result, &cfg.algorithms);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            preset,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), None) => config::load_config(path)?,
                (None, Some(name)) => ExperimentConfig::preset(name.parse::<Preset>()?),
                (Some(_), Some(_)) => {
                    return Err(chomet::Error::Config {
                        key: "--preset".into(),
                        message: "give either --config or --preset, not both".into(),
                    })
                }
                (None, None) => {
                    return Err(chomet::Error::Config {
                        key: "--config".into(),
                        message: "one of --config or --preset is required".into(),
                    })
                }
            };
            if let Some(seeds) = seeds {
                cfg.seeds = seeds;
            }
            cfg.validate()?;
            execute(&cfg, out)
        }
        Command::Oracle { config, kind, out } => {
            let mut cfg = config::load_config(config)?;
            cfg.algorithms = vec![match kind {
                OracleKind::Dp => Algorithm::OracleDp,
                OracleKind::PerSlot => Algorithm::OraclePerSlot,
            }];
            execute(&cfg, out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
