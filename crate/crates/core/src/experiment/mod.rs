//! Convergence studies: configuration, error estimation against a coupled
//! fine-grid or exact reference, rate fits and output.

mod config;
mod emit;
mod estimate;
mod fit;
mod oracle;

pub use config::{ExperimentConfig, Format, Mode, ModelChoice, Reference};
pub use emit::{render, to_csv, to_report, write_table, CSV_HEADER};
pub use estimate::{estimate_errors, law_pass, ErrorRow, ErrorTable, Estimate, DIVERGENCE_TOLERANCE};
pub use fit::fit_rate;
pub use oracle::{moment_oracle, Moments, ORACLE_STEP};
