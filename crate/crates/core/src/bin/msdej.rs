use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use msdej::experiment::{estimate_errors, moment_oracle, render, write_table, ExperimentConfig, Format};
use msdej::model::builtin::LinearInteraction;
use msdej::multiindex::{remainder_set, strong_hierarchical_set, weak_hierarchical_set, HalfInteger};
use msdej::Error;

#[derive(Parser)]
#[command(name = "msdej", version, about = "Itô-Taylor schemes for mean-field SDEs with jumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinModel {
    Example1,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Print a hierarchical set, one index per line.
    #[command(group(ArgGroup::new("order").required(true).args(["gamma", "eta"])))]
    Sets {
        /// Strong order (half-integer).
        #[arg(long)]
        gamma: Option<HalfInteger>,
        /// Weak order.
        #[arg(long)]
        eta: Option<u32>,
        /// Number of Brownian components.
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Print the remainder set instead.
        #[arg(long)]
        remainder: bool,
    },
    /// Exact first and second moments of the linear model.
    Oracle {
        #[arg(long, value_enum)]
        model: BuiltinModel,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.1)]
        x0: f64,
        #[arg(long, default_value_t = 1.0)]
        intensity: f64,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } | Error::NonFinite { .. } => 3,
        Error::AtStep { source, .. } => exit_code(source),
        Error::Io { .. } => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    let mut stdout = std::io::stdout().lock();
    let io = |source| Error::Io {
        path: "<stdout>".into(),
        source,
    };
    match command {
        Command::Run {
            config,
            seed,
            output,
            format,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(output) = output {
                cfg.output = Some(output);
            }
            if let Some(format) = format {
                cfg.format = match format {
                    OutputFormat::Csv => Format::Csv,
                    OutputFormat::Report => Format::Report,
                };
            }
            let table = estimate_errors(&cfg)?;
            if table.diverged > 0 {
                eprintln!(
                    "warning: {} of {} replications diverged and were excluded",
                    table.diverged,
                    table.diverged + table.replications
                );
            }
            match &cfg.output {
                Some(path) => write_table(&table, cfg.format, path)?,
                None => stdout.write_all(render(&table, cfg.format).as_bytes()).map_err(io)?,
            }
        }
        Command::Sets {
            gamma,
            eta,
            m,
            remainder,
        } => {
            let set = match (gamma, eta) {
                (Some(g), _) => strong_hierarchical_set(g, m)?,
                (None, Some(e)) => weak_hierarchical_set(e, m)?,
                (None, None) => unreachable!("clap enforces the group"),
            };
            let set = if remainder { remainder_set(&set)? } else { set };
            for alpha in &set {
                writeln!(stdout, "{alpha}").map_err(io)?;
            }
        }
        Command::Oracle { model, t, x0, intensity } => {
            let BuiltinModel::Example1 = model;
            let m = moment_oracle(&LinearInteraction::standard(intensity), x0, x0, t)?;
            writeln!(stdout, "t,mean,second_moment\n{t},{:.12e},{:.12e}", m.mean, m.second_moment).map_err(io)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
