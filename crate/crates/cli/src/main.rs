use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rfsep_cli::commands::{self, SeparateArgs};
use rfsep_cli::{parse_override, ExperimentConfig, Result};
use rfsep_separators::evaluation::Method;

/// Separate FM voice from OFDM interference: generate sources, mix datasets,
/// train and evaluate separators, and benchmark real-time latency.
#[derive(Debug, Parser)]
#[command(name = "rfsep", version)]
struct Cli {
    /// Experiment config (TOML). Missing keys take their defaults.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Run directory; overrides `out_dir`.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Global seed; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override any config key, e.g. `--set train.epochs=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write SOI and interference source recordings (RFIQ and WAV).
    Generate {
        /// FM-modulate these WAV files instead of synthesizing audio.
        #[arg(long)]
        wav: Vec<PathBuf>,
    },
    /// Build the mixture dataset from the generated sources.
    Mix {
        #[arg(long)]
        count: Option<usize>,
        /// Rebuild even if the run directory already holds a dataset.
        #[arg(long)]
        force: bool,
    },
    /// Train the configured model on the dataset.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
        /// Accept a dataset built from a different config.
        #[arg(long)]
        force: bool,
    },
    /// Map one mixture file to an SOI estimate.
    Separate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// passthrough, matched_filter, lmmse or model.
        #[arg(long, default_value = "model")]
        method: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Also write the demodulated audio here.
        #[arg(long)]
        wav: Option<PathBuf>,
        /// Interference scale for lmmse; estimated from the input power when absent.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        force: bool,
    },
    /// Score methods over the SINR grid and write metrics.csv.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Comma-separated methods; overrides `evaluate.methods`.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Comma-separated SINR grid in dB; overrides `evaluate.sinr_grid_db`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sinr: Vec<f64>,
        /// Accept a checkpoint or dataset built from a different config.
        #[arg(long)]
        force: bool,
    },
    /// Stream a signal through the model (or a sleeping stub) and write latency.json.
    /// Exits with 4 when the run is not real-time feasible.
    Bench {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Replay this RFIQ file instead of a synthetic mixture.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Per-window time of a sleeping stub, in seconds.
        #[arg(long)]
        stub_tau: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        time_scale: Option<f64>,
        #[arg(long)]
        force: bool,
    },
    /// Measure forward time over a batch grid and write sweep.csv.
    Sweep {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Comma-separated batch sizes; overrides `bench.batch_sizes`.
        #[arg(long, value_delimiter = ',')]
        batches: Vec<usize>,
        #[arg(long)]
        stub_tau: Option<f64>,
        #[arg(long)]
        force: bool,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

fn overrides(cli: &Cli) -> Result<Vec<(String, toml::Value)>> {
    let mut o: Vec<(String, toml::Value)> = cli.set.iter().map(|s| parse_override(s)).collect::<Result<_>>()?;
    let mut put = |k: &str, v: toml::Value| o.push((k.to_string(), v));
    if let Some(p) = &cli.out {
        put("out_dir", toml::Value::String(p.to_string_lossy().into_owned()));
    }
    if let Some(s) = cli.seed {
        put("seed", toml::Value::Integer(s as i64));
    }
    match &cli.command {
        Command::Mix { count: Some(c), .. } => put("dataset.count", toml::Value::Integer(*c as i64)),
        Command::Train { epochs: Some(e), .. } => put("train.epochs", toml::Value::Integer(*e as i64)),
        Command::Evaluate { methods, sinr, .. } => {
            if !methods.is_empty() {
                put("evaluate.methods", toml::Value::Array(methods.iter().map(|m| toml::Value::String(m.clone())).collect()));
            }
            if !sinr.is_empty() {
                put("evaluate.sinr_grid_db", toml::Value::Array(sinr.iter().map(|&s| toml::Value::Float(s)).collect()));
            }
        }
        Command::Bench { stub_tau, batch, duration, time_scale, .. } => {
            if let Some(t) = stub_tau {
                put("bench.stub_tau_s", toml::Value::Float(*t));
            }
            if let Some(b) = batch {
                put("bench.batch_size", toml::Value::Integer(*b as i64));
            }
            if let Some(d) = duration {
                put("bench.duration_s", toml::Value::Float(*d));
            }
            if let Some(t) = time_scale {
                put("bench.time_scale", toml::Value::Float(*t));
            }
        }
        Command::Sweep { batches, stub_tau, .. } => {
            if !batches.is_empty() {
                put("bench.batch_sizes", toml::Value::Array(batches.iter().map(|&b| toml::Value::Integer(b as i64)).collect()));
            }
            if let Some(t) = stub_tau {
                put("bench.stub_tau_s", toml::Value::Float(*t));
            }
        }
        _ => {}
    }
    Ok(o)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides(&cli)?)?;
    match &cli.command {
        Command::Generate { wav } => commands::generate(&cfg, wav).map(drop),
        Command::Mix { force, .. } => commands::mix(&cfg, *force).map(drop),
        Command::Train { force, .. } => commands::train_model(&cfg, *force).map(drop),
        Command::Separate { input, output, method, checkpoint, wav, kappa, force } => {
            let method = Method::parse(method)?;
            let args = SeparateArgs {
                input,
                output,
                method,
                checkpoint: checkpoint.as_deref(),
                wav: wav.as_deref(),
                kappa: *kappa,
                force: *force,
            };
            commands::separate(&cfg, &args).map(drop)
        }
        Command::Evaluate { checkpoint, force, .. } => commands::evaluate(&cfg, checkpoint.as_deref(), *force).map(drop),
        Command::Bench { checkpoint, input, force, .. } => {
            commands::bench(&cfg, checkpoint.as_deref(), input.as_deref(), *force).map(drop)
        }
        Command::Sweep { checkpoint, force, .. } => commands::sweep(&cfg, checkpoint.as_deref(), *force).map(drop),
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
