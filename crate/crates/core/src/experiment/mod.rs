//! Config-driven reproduction of the static, online and real-data experiments.

mod config;
mod online;
pub mod real;
mod static_exp;

use std::io::Write;

pub use config::{
    ExperimentConfig, ExperimentKind, GraphSpec, PartitionMethod, RealDataSpec, RegionBox, SchedulerSpec, SignalSpec,
    SCHEMA_VERSION,
};
pub use online::{
    ablation_configs, load_real, run_ablation, run_online_experiment, run_real_experiment, AblationRow, OnlineOutput,
    OnlineRecord, METHOD_1, METHOD_2, METHOD_PROPOSED,
};
pub use static_exp::{run_static_experiment, StaticOutput, StaticRecord, StaticTableRow};

use crate::error::{Error, Result};

/// Writes a CSV after checking that every row has the header's width and
/// every numeric cell is finite.
pub(crate) fn write_checked_csv<W: Write>(header: &[&str], rows: &[Vec<String>], out: W) -> Result<()> {
    for (k, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::invalid(format!("row {k} has {} cells, header has {}", row.len(), header.len())));
        }
        if let Some(cell) = row.iter().find(|c| c.parse::<f64>().is_ok_and(|v| v.is_nan())) {
            return Err(Error::numerical(format!("row {k} contains {cell}")));
        }
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Mean of a sequence, `NaN` when empty.
pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}
