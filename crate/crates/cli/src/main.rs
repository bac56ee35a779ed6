use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use banditlab::bounds::LemmaGrid;
use banditlab::harness::{self, GridConfig};
use banditlab::{Error, ExecutionMode};

#[derive(Parser, Debug)]
#[command(name = "banditlab", version, about = "Stochastic bandit experiments: simulate, tabulate, bound")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long, global = true, env = "BANDITLAB_OUT")]
    out: Option<PathBuf>,
    /// Master seed; overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Force the ordered, byte-reproducible reduction.
    #[arg(long, global = true)]
    ordered: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BANDITLAB_THREADS")]
    threads: Option<usize>,
    /// Comma-separated checkpoint rounds; the horizon is always added.
    #[arg(long, global = true, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a configuration that expands to a single cell.
    Run,
    /// Simulate every cell of the grid, resuming completed cells.
    Grid {
        /// Recompute every cell even if a matching completion marker exists.
        #[arg(long)]
        no_resume: bool,
    },
    /// Write theoretical curves for the grid to bounds.csv.
    Bounds {
        /// Slack of the pull-count bound; needs 2 tau eta < 1.
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        /// Free constant of the under-exploration bound.
        #[arg(long, default_value_t = 1.0)]
        proof_delta: f64,
    },
    /// Run the lemma validators and the invariant suite.
    Validate,
    /// Rebuild results.csv from the stored per-repetition samples.
    Summarize,
}

fn load_config(common: &Common) -> Result<GridConfig, Error> {
    let mut config = match &common.config {
        Some(path) => GridConfig::from_path(path)?,
        None => GridConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if common.ordered {
        config.mode = ExecutionMode::Ordered;
    }
    if let Some(cp) = &common.checkpoints {
        config = config.with_checkpoints(cp.clone())?;
    }
    Ok(config)
}

fn out_dir(common: &Common, config: Option<&GridConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let common = &cli.common;
    match cli.command {
        Command::Run => {
            let config = load_config(common)?;
            let out = out_dir(common, Some(&config));
            let outcome = harness::run_single(&config, &out)?;
            println!("{} rows -> {}", outcome.records.len(), out.join("results.csv").display());
        }
        Command::Grid { no_resume } => {
            let config = load_config(common)?;
            let out = out_dir(common, Some(&config));
            let outcome = harness::run_grid(&config, &out, !no_resume)?;
            for s in &outcome.skipped {
                println!("skipped {}: {}", s.coords.canonical(), s.diagnostic);
            }
            println!(
                "{} cells computed, {} reused, {} skipped; {} rows -> {}",
                outcome.computed,
                outcome.reused,
                outcome.skipped.len(),
                outcome.records.len(),
                out.join("results.csv").display()
            );
        }
        Command::Bounds { eta, proof_delta } => {
            let config = load_config(common)?;
            let out = out_dir(common, Some(&config));
            let rows = harness::write_bounds(&config, &out, eta, proof_delta)?;
            println!("{} rows -> {}", rows.len(), out.join("bounds.csv").display());
        }
        Command::Validate => {
            let report = harness::run_validation(&LemmaGrid::default());
            for c in &report.lemmas.checks {
                println!(
                    "lemma {:<13} evaluations {:>9}  min slack {:+.3e} at {}",
                    c.name, c.evaluations, c.min_slack, c.argmin
                );
            }
            for c in &report.invariants {
                println!("{} {:<34} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            let passed = report.passed();
            println!("validation {}", if passed { "passed" } else { "FAILED" });
            return Ok(passed);
        }
        Command::Summarize => {
            let config = common.config.as_ref().map(|_| load_config(common)).transpose()?;
            let out = out_dir(common, config.as_ref());
            let records = harness::summarize(&out)?;
            println!("{} rows -> {}", records.len(), out.join("results.csv").display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
