//! Subcommand implementations. Each writes its artifacts under the run's
//! output directory and prints a one-line summary; everything else goes
//! through the returned `Result`.

pub mod bound;
pub mod diagnose;
pub mod estimate;
pub mod report;
pub mod simulate;

use std::path::Path;

use decaybound::estimate::{decay_rows, DecayRow};
use decaybound::geo::SourceRecord;
use decaybound::ingest::{
    self, load_observations, load_sources, sniff_schema, time_average, FilterAudit, SchemaKind,
    TimeAveraged,
};
use decaybound::Result;

use crate::config::RunConfig;

/// Observations and sources pulled through the shared ingest pipeline:
/// schema detection, quality filters, time averaging, source assignment.
pub struct LoadedData {
    pub schema: SchemaKind,
    pub audit: FilterAudit,
    pub averaged: Vec<TimeAveraged>,
    pub sources: Vec<SourceRecord>,
    pub rows: Vec<DecayRow>,
}

pub fn load_pipeline(cfg: &RunConfig) -> Result<LoadedData> {
    let input = cfg.require_input()?;
    let sources_path = cfg.require_sources()?;

    let schema = sniff_schema(input)?;
    let (records, audit) = load_observations(input, schema, &cfg.policy)?;
    let sources = load_sources(sources_path)?;
    let averaged = time_average(&records)?;
    let rows = decay_rows(&averaged, &sources, cfg.weight_mode, None)?;

    Ok(LoadedData {
        schema,
        audit,
        averaged,
        sources,
        rows,
    })
}

/// `ingest` is re-exported for the subcommands' own writers.
pub use ingest::{write_monitor_csv, write_sources_csv};

pub fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| {
        decaybound::Error::Input(format!("cannot create {}: {e}", path.display()))
    })
}
