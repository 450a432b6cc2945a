//! Runs a study from a config file, as `msdej run` does.
//!
//! `cargo run --release --example convergence_study -- path/to/study.conf`
//! Without an argument a small built-in study is used.

use std::env;
use std::path::Path;

use msdej::experiment::{estimate_errors, render, ExperimentConfig};

const DEFAULT: &str = "
model = example1
scheme = strong1
steps = 16..128
m_law = 300
m_err = 300
reference = fine_grid(10)
format = report
";

fn main() -> msdej::Result<()> {
    let config = match env::args().nth(1) {
        Some(path) => ExperimentConfig::from_file(Path::new(&path))?,
        None => ExperimentConfig::parse(DEFAULT)?,
    };
    let table = estimate_errors(&config)?;
    print!("{}", render(&table, config.format));
    Ok(())
}
