use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use d2d_core::experiment::{emit_outputs, run_experiment, version_string, Algorithm, ExperimentSpec};
use d2d_core::oracle;

#[derive(Parser)]
#[command(
    name = "d2d-ee",
    version,
    about = "Energy-efficient D2D power allocation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo batch and write the curve table and metadata.
    Run(RunArgs),
    /// Validate a config file and print it with every default filled in.
    Check {
        /// Experiment config (TOML). Without it, the built-in defaults are shown.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Cross-check the solvers against brute-force references.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of energy_efficient, spectral_efficient, random.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write every game trace as JSON lines.
    #[arg(long)]
    verbose: bool,
}

fn load(config: Option<&PathBuf>) -> Result<ExperimentSpec> {
    match config {
        Some(path) => ExperimentSpec::read(path).with_context(|| format!("loading {}", path.display())),
        None => Ok(ExperimentSpec::default()),
    }
}

fn resolve(args: &RunArgs) -> Result<ExperimentSpec> {
    let mut spec = load(args.config.as_ref())?;
    let e = &mut spec.experiment;
    if let Some(n) = args.runs {
        e.num_runs = n;
    }
    if let Some(s) = args.seed {
        e.master_seed = s;
    }
    if let Some(list) = &args.algorithms {
        e.algorithms = Algorithm::parse_list(list)?;
    }
    if let Some(out) = &args.out {
        e.out_dir = out.clone();
    }
    if let Some(w) = args.workers {
        e.workers = w;
    }
    e.verbose |= args.verbose;
    spec.validate()?;
    Ok(spec)
}

fn run(args: &RunArgs) -> Result<()> {
    let spec = resolve(args)?;
    let result = run_experiment(&spec)?;
    let paths = emit_outputs(&result, &spec)?;

    println!("{}", version_string());
    println!(
        "{} runs, master seed {}, normalization divisor {:.6}",
        spec.experiment.num_runs, spec.experiment.master_seed, result.normalization_divisor
    );
    println!(
        "{:<20} {:>12} {:>12} {:>10} {:>9}",
        "algorithm", "d2d_ee", "cell_ee", "median_rd", "outages"
    );
    for alg in &result.algorithms {
        let last = alg.final_point();
        let median = alg
            .median_convergence_round()
            .map_or_else(|| "-".to_owned(), |m| m.to_string());
        println!(
            "{:<20} {:>12.4} {:>12.4} {:>10} {:>9}",
            alg.algorithm.name(),
            last.mean_d2d_ee,
            last.mean_cell_ee,
            median,
            alg.d2d_outages() + alg.cellular_outages()
        );
    }
    println!("wrote {}", paths.csv.display());
    println!("wrote {}", paths.metadata.display());
    if let Some(t) = &paths.traces {
        println!("wrote {}", t.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Check { config } => load(config.as_ref()).and_then(|spec| {
            print!("{}", spec.to_toml_string()?);
            Ok(())
        }),
        Command::Oracle { seed } => oracle::run_suite(*seed).map_err(Into::into).and_then(|checks| {
            for c in &checks {
                println!("{}", c.line());
            }
            anyhow::ensure!(checks.iter().all(|c| c.passed), "oracle checks failed");
            Ok(())
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
