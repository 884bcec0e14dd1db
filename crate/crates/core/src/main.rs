use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use abr_bandit::bandit::format_priors;
use abr_bandit::harness::{
    calibrate_warm_start, load_traces, run_experiment, ExperimentConfig, PolicyKind, Report,
    TraceSelection,
};
use abr_bandit::trace::generate_adversarial;

#[derive(Parser)]
#[command(name = "abr-bandit", version, about = "Bandit-driven ABR policy selection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the adversarial trace as normalized CSV.
    GenTrace {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every arm over calibration traces and write the warm-start prior file.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute an experiment and write its results file.
    Run(RunArgs),
    /// Re-aggregate a stored results file.
    Report {
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u32>,
    /// Run seeds 1..=N.
    #[arg(long)]
    seeds: Option<u32>,
    /// Exploration rate in per-mille.
    #[arg(long)]
    epsilon: Option<u32>,
    /// Policies to run (repeat or comma-separate).
    #[arg(long, value_delimiter = ',')]
    policy: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace file or directory instead of the adversarial trace.
    #[arg(long)]
    traces: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_file(p)
            .with_context(|| format!("loading config {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenTrace { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let TraceSelection::Adversarial(spec) = &cfg.traces else {
                bail!("gen-trace needs an adversarial trace configuration");
            };
            emit(out.as_deref(), &generate_adversarial(spec)?.to_normalized_csv())
        }
        Command::Calibrate { config, traces, out } => {
            let cfg = load_config(config.as_deref())?;
            let paths = match traces {
                Some(t) => vec![t],
                None if !cfg.calibration_traces.is_empty() => cfg.calibration_traces.clone(),
                None => bail!("calibrate needs --traces or calibration_traces in the config"),
            };
            let traces = load_traces(&paths)?;
            let stats = calibrate_warm_start(&traces, &cfg.session)?;
            emit(out.as_deref(), &format_priors(&stats))
        }
        Command::Run(args) => {
            let mut cfg = load_config(args.config.as_deref())?;
            if let Some(t) = args.traces {
                let was_adversarial = cfg.traces.is_adversarial();
                cfg.traces = TraceSelection::Paths(vec![t]);
                if was_adversarial && args.epsilon.is_none() {
                    cfg.session.epsilon_permille = 100;
                }
            }
            if let Some(s) = args.seed {
                cfg.seeds = vec![s];
            }
            if let Some(n) = args.seeds {
                cfg.seeds = (1..=n).collect();
            }
            if let Some(e) = args.epsilon {
                cfg.session.epsilon_permille = e;
            }
            if !args.policy.is_empty() {
                cfg.policies = args
                    .policy
                    .iter()
                    .map(|p| p.parse::<PolicyKind>())
                    .collect::<Result<_, _>>()?;
            }
            if args.out.is_some() {
                cfg.output = args.out;
            }
            let experiment = cfg.resolve()?;
            let report = run_experiment(&experiment)?;
            if let Some(out) = &cfg.output {
                std::fs::write(out, report.to_results_file())
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            print!("{}", report.summary_table());
            Ok(())
        }
        Command::Report { results, out } => {
            let text = std::fs::read_to_string(&results)
                .with_context(|| format!("reading {}", results.display()))?;
            let report = Report::from_results_file(&text)?;
            if let Some(out) = out {
                std::fs::write(&out, report.to_results_file())
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            print!("{}", report.summary_table());
            Ok(())
        }
    }
}
