use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::Format;
use super::estimate::{ErrorTable, Estimate};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "N,strong_error,strong_se,weak_error,weak_se";

fn cell(e: Option<Estimate>) -> String {
    match e {
        Some(e) => format!("{:.6e},{:.6e}", e.value, e.std_error),
        None => "NA,NA".into(),
    }
}

fn rate_cell(r: Option<f64>) -> String {
    r.map_or_else(|| "NA".into(), |r| format!("{r:.6}"))
}

/// One row per resolution, then the fitted rates as `CR_strong` and
/// `CR_weak`. Contains nothing run-dependent besides the estimates.
pub fn to_csv(table: &ErrorTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CSV_HEADER}");
    for row in &table.rows {
        let _ = writeln!(s, "{},{},{}", row.steps, cell(row.strong), cell(row.weak));
    }
    let _ = writeln!(s, "CR_strong,{}", rate_cell(table.strong_rate));
    let _ = writeln!(s, "CR_weak,{}", rate_cell(table.weak_rate));
    s
}

/// Human-readable summary including the configuration and run metadata.
pub fn to_report(table: &ErrorTable) -> String {
    let cfg = &table.config;
    let mut s = String::new();
    let _ = writeln!(s, "# configuration");
    for line in cfg.to_text().lines() {
        let _ = writeln!(s, "#   {line}");
    }
    let _ = writeln!(
        s,
        "# replications used: {} (diverged: {})",
        table.replications, table.diverged
    );
    let _ = writeln!(s, "# runtime: {:.3} s", table.runtime.as_secs_f64());
    let _ = writeln!(s);
    let _ = writeln!(s, "{:>8}  {:>26}  {:>26}", "N", "strong error (se)", "weak error (se)");
    let show = |e: Option<Estimate>| match e {
        Some(e) => format!("{:.4e} ({:.2e})", e.value, e.std_error),
        None => "-".into(),
    };
    for row in &table.rows {
        let _ = writeln!(s, "{:>8}  {:>26}  {:>26}", row.steps, show(row.strong), show(row.weak));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "strong rate: {}", rate_cell(table.strong_rate));
    let _ = writeln!(s, "weak rate:   {}", rate_cell(table.weak_rate));
    s
}

pub fn render(table: &ErrorTable, format: Format) -> String {
    match format {
        Format::Csv => to_csv(table),
        Format::Report => to_report(table),
    }
}

pub fn write_table(table: &ErrorTable, format: Format, path: &Path) -> Result<()> {
    fs::write(path, render(table, format)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
