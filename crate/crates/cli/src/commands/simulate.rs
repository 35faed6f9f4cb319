//! `simulate`: scenario JSON in, synthetic dataset plus ground truth out.

use decaybound::synth::{generate, ScenarioSpec};
use decaybound::Result;

use crate::artifacts;
use crate::commands::{ensure_out_dir, write_monitor_csv, write_sources_csv};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let input = cfg.require_input()?;
    let out = cfg.require_out()?;

    let mut scenario: ScenarioSpec = artifacts::read_json(input)?;
    if let Some(seed) = cfg.seed {
        scenario.seed = seed;
    }

    let dataset = generate(&scenario)?;

    ensure_out_dir(out)?;
    write_monitor_csv(&dataset.observations, &out.join("dataset.csv"))?;
    write_sources_csv(&scenario.sources, &out.join("sources.csv"))?;
    artifacts::write_json(&out.join("truth.json"), &dataset.truth)?;

    println!(
        "simulate: {} observations from {} sources (seed {}) -> {}",
        dataset.observations.len(),
        scenario.sources.len(),
        scenario.seed,
        out.display()
    );
    Ok(())
}
