use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fjordtwin::config::ExperimentConfig;
use fjordtwin::experiment::{self, Controller};
use fjordtwin::scenario::ScenarioKind;
use fjordtwin::Error;

/// Digital twin and learned sluice controller for a gated tidal fjord.
#[derive(Parser)]
#[command(name = "fjordtwin", version)]
struct Cli {
    /// Experiment config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for learning and evaluation; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override any config key, e.g. `--set episodes=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic scenario CSV and its sidecar.
    Generate {
        kind: ScenarioKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train candidates on the configured scenario and keep the best.
    Learn {
        #[arg(long)]
        out: PathBuf,
        /// Training log CSV; defaults to `<out stem>.training.csv`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Evaluate controllers (`baseline` or strategy files) on the unperturbed scenario.
    Evaluate {
        #[arg(default_value = "baseline")]
        controllers: Vec<String>,
        /// Results CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Export the trace of a single rollout.
    Simulate {
        #[arg(default_value = "baseline")]
        controller: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate controllers across w1 values and scenarios.
    Sweep {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure(cli: &Cli) -> fjordtwin::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> fjordtwin::Result<()> {
    match out {
        Some(p) => experiment::write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> fjordtwin::Result<()> {
    let cfg = configure(&cli)?;
    match cli.command {
        Command::Generate { kind, out } => {
            let seed = cli.seed.unwrap_or(cfg.scenario_seed);
            experiment::cmd_generate(kind, seed, &out)?;
            eprintln!("wrote {} and its sidecar", out.display());
        }
        Command::Learn { out, log } => {
            let log = log.unwrap_or_else(|| experiment::default_log_path(&out));
            let outcome = experiment::cmd_learn(&cfg, &out, &log)?;
            eprintln!(
                "wrote {} ({} leaves); candidate scores {:?}",
                out.display(),
                outcome.strategy.total_leaves(),
                outcome.scores
            );
        }
        Command::Evaluate {
            controllers,
            out,
            format,
        } => {
            let controllers = controllers
                .iter()
                .map(|c| Controller::resolve(c))
                .collect::<fjordtwin::Result<Vec<_>>>()?;
            let table = experiment::cmd_evaluate(&cfg, &controllers)?;
            if let Some(p) = &out {
                experiment::write_atomic(p, &table.to_csv())?;
            }
            match format {
                Format::Table => print!("{}", table.render()),
                Format::Csv => print!("{}", table.to_csv()),
            }
        }
        Command::Simulate { controller, out } => {
            let c = Controller::resolve(&controller)?;
            emit(out.as_deref(), &experiment::cmd_simulate(&cfg, &c)?)?;
        }
        Command::Sweep { out } => {
            let rows = experiment::cmd_sweep(&cfg)?;
            emit(out.as_deref(), &experiment::sweep_csv(&rows))?;
        }
    }
    Ok(())
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("FJORDTWIN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("FJORDTWIN_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
