use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qram_cli::experiments::{self, AddressSpec};
use qram_cli::verify::{self, Suite};
use qram_cli::{CliError, Experiment, ExperimentOptions, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "qram", version, about = "Photonic QRAM experiments")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides run.out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Heralded transfer fidelity over cooperativity and coupling.
    Fig3 {
        /// Relative field deviation.
        #[arg(long = "deltaB", default_value_t = 0.0, allow_negative_numbers = true)]
        delta_b: f64,
    },
    /// GLM query rate against memory count.
    Fig4a,
    /// GLM rate and fidelity against coupling ratio.
    Fig4c,
    /// Teleportation scheme rate, crossover and fit.
    Fig5,
    /// Cavity reflection spectra.
    #[command(name = "figS1")]
    FigS1,
    /// Routing phase condition.
    #[command(name = "figS2")]
    FigS2,
    /// Filter linewidths against coupler phase.
    #[command(name = "figS3")]
    FigS3,
    /// Entanglement and address teleportation walk-through.
    #[command(name = "figS6-demo")]
    FigS6Demo {
        #[arg(long, default_value = "uniform")]
        address: String,
    },
    /// Decoherence and physical-error fidelity.
    #[command(name = "figS7")]
    FigS7,
    /// Full state-vector query of a toy database.
    QueryDemo {
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value = "uniform")]
        address: String,
    },
    /// Invariant checks.
    Verify {
        #[arg(default_value = "fast")]
        suite: String,
    },
    /// Print the resolved configuration and its hash.
    PrintConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(out) = cli.out {
        cfg.run.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.run.trials = trials;
    }
    cfg.validate()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }

    let mut opts = ExperimentOptions::default();
    let experiment = match cli.command {
        Command::Fig3 { delta_b } => {
            opts.delta_b = delta_b;
            Experiment::Fig3
        }
        Command::Fig4a => Experiment::Fig4a,
        Command::Fig4c => Experiment::Fig4c,
        Command::Fig5 => Experiment::Fig5,
        Command::FigS1 => Experiment::FigS1,
        Command::FigS2 => Experiment::FigS2,
        Command::FigS3 => Experiment::FigS3,
        Command::FigS6Demo { address } => {
            opts.address = address.parse::<AddressSpec>()?;
            Experiment::FigS6Demo
        }
        Command::FigS7 => Experiment::FigS7,
        Command::QueryDemo { depth, address } => {
            opts.depth = depth;
            opts.address = address.parse::<AddressSpec>()?;
            Experiment::QueryDemo
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let n = verify::run(suite, &cfg, |line| println!("{line}"))?;
            println!("{n} invariants passed");
            return Ok(());
        }
        Command::PrintConfig => {
            print!("{}", cfg.to_toml());
            println!("# config_sha256 = \"{}\"", cfg.hash());
            return Ok(());
        }
    };

    cfg.run.experiment = Some(experiment.to_string());
    let outcome = experiments::run(experiment, &cfg, &opts)?;
    let written = outcome.write(&cfg, &cfg.run.out_dir)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
