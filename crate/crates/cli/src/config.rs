//! Flag and config-file resolution shared by every subcommand.
//!
//! Each flag maps to a config-file key of the same name. File values
//! override flags, so a checked-in config pins a run even when the shell
//! invocation drifts. Keys the flags do not cover (filter overrides,
//! placebo seed count, temporal-ratio inputs) are file-only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use decaybound::estimate::SpecKind;
use decaybound::geo::WeightMode;
use decaybound::ingest::FilterPolicy;
use decaybound::{Error, Result};

/// Flags shared by every subcommand. All optional here; each command
/// demands the subset it needs after the config file is merged in.
#[derive(Debug, Default, clap::Args)]
pub struct CommonArgs {
    /// Primary input: dataset CSV, scenario JSON, fit JSON, or run directory.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Plants CSV with source locations and weights.
    #[arg(long)]
    pub sources: Option<PathBuf>,

    /// Comma-separated regression forms (first one leads).
    #[arg(long)]
    pub spec: Option<String>,

    /// Comma-separated detection thresholds, each in (0, 1).
    #[arg(long)]
    pub epsilon: Option<String>,

    /// Comma-separated stratum labels, or "auto" to take them from the data.
    #[arg(long)]
    pub strata: Option<String>,

    /// Seed override for simulation and placebo draws.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Source weighting: nearest, capacity, or emissions.
    #[arg(long)]
    pub weight_mode: Option<String>,

    /// Directory the command writes its artifacts into.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Flat key=value file; values here override the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "input",
    "sources",
    "spec",
    "epsilon",
    "strata",
    "seed",
    "weight_mode",
    "out",
    "min_coverage",
    "min_obs_per_period",
    "min_qa",
    "trim_quantile",
    "drop_negative",
    "placebo_seeds",
    "treatment_intensity",
    "diffusion",
];

/// Parsed config file: one `key = value` per line, `#` comments, no
/// sections. Unknown and duplicate keys are rejected so typos fail loudly
/// instead of silently falling back to a flag.
#[derive(Debug, Default)]
struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = || format!("{}:{}", path.display(), idx + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{}: expected key = value", at())))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!("{}: unknown key {key:?}", at())));
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("{}: duplicate key {key:?}", at())));
            }
        }
        Ok(Self { map })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("config key {key} = {raw:?}: {e}"))),
        }
    }
}

/// Fully resolved run settings: file over flag over default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub sources: Option<PathBuf>,
    pub specs: Vec<SpecKind>,
    pub epsilons: Vec<f64>,
    /// `None` skips stratified output; `Some(empty)` derives labels from
    /// the data.
    pub strata: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub weight_mode: WeightMode,
    pub out: Option<PathBuf>,
    pub policy: FilterPolicy,
    pub placebo_seeds: usize,
    pub treatment_intensity: Option<f64>,
    pub diffusion: Option<f64>,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let input = file
            .get("input")
            .map(PathBuf::from)
            .or_else(|| args.input.clone());
        let sources = file
            .get("sources")
            .map(PathBuf::from)
            .or_else(|| args.sources.clone());
        let out = file
            .get("out")
            .map(PathBuf::from)
            .or_else(|| args.out.clone());

        let specs = match file.get("spec").or(args.spec.as_deref()) {
            Some(raw) => parse_spec_list(raw)?,
            None => vec![SpecKind::LogLinear],
        };

        let epsilons = match file.get("epsilon").or(args.epsilon.as_deref()) {
            Some(raw) => parse_epsilon_list(raw)?,
            None => vec![0.1],
        };

        let strata = file
            .get("strata")
            .or(args.strata.as_deref())
            .map(parse_strata)
            .transpose()?;

        let seed = file.parse::<u64>("seed")?.or(args.seed);

        let weight_mode = match file.get("weight_mode").or(args.weight_mode.as_deref()) {
            Some(raw) => WeightMode::from_str(raw)?,
            None => WeightMode::Nearest,
        };

        let mut policy = FilterPolicy::default();
        if let Some(v) = file.parse("min_coverage")? {
            policy.min_coverage = v;
        }
        if let Some(v) = file.parse("min_obs_per_period")? {
            policy.min_obs_per_period = v;
        }
        if let Some(v) = file.parse("min_qa")? {
            policy.min_qa = v;
        }
        if let Some(v) = file.parse("trim_quantile")? {
            policy.trim_quantile = v;
        }
        if let Some(v) = file.parse("drop_negative")? {
            policy.drop_negative = v;
        }
        policy.validate()?;

        let placebo_seeds = file.parse("placebo_seeds")?.unwrap_or(50);
        let treatment_intensity = file.parse("treatment_intensity")?;
        let diffusion = file.parse("diffusion")?;

        Ok(Self {
            input,
            sources,
            specs,
            epsilons,
            strata,
            seed,
            weight_mode,
            out,
            policy,
            placebo_seeds,
            treatment_intensity,
            diffusion,
        })
    }

    pub fn require_input(&self) -> Result<&Path> {
        require_file(self.input.as_deref(), "--input")
    }

    pub fn require_sources(&self) -> Result<&Path> {
        require_file(self.sources.as_deref(), "--sources")
    }

    /// The output directory, created on demand by the caller.
    pub fn require_out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("missing --out directory".into()))
    }

    /// Leading spec: drives single-spec fits, strata, and diagnostics.
    pub fn primary_spec(&self) -> SpecKind {
        self.specs[0]
    }

    /// Leading threshold: drives single-threshold boundaries.
    pub fn primary_epsilon(&self) -> f64 {
        self.epsilons[0]
    }
}

fn require_file<'a>(path: Option<&'a Path>, flag: &str) -> Result<&'a Path> {
    let path = path.ok_or_else(|| Error::Config(format!("missing {flag}")))?;
    if !path.exists() {
        return Err(Error::Input(format!("{}: no such file", path.display())));
    }
    Ok(path)
}

fn parse_spec_list(raw: &str) -> Result<Vec<SpecKind>> {
    let specs: Vec<SpecKind> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(SpecKind::from_str)
        .collect::<Result<_>>()?;
    if specs.is_empty() {
        return Err(Error::Config("spec list is empty".into()));
    }
    Ok(specs)
}

fn parse_epsilon_list(raw: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let e: f64 = part
            .parse()
            .map_err(|_| Error::Config(format!("epsilon {part:?} is not a number")))?;
        if !(e.is_finite() && e > 0.0 && e < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must be in (0, 1), got {e}"
            )));
        }
        out.push(e);
    }
    if out.is_empty() {
        return Err(Error::Config("epsilon list is empty".into()));
    }
    Ok(out)
}

fn parse_strata(raw: &str) -> Result<Vec<String>> {
    if raw.trim() == "auto" {
        return Ok(Vec::new());
    }
    let labels: Vec<String> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    if labels.is_empty() {
        return Err(Error::Config("strata list is empty".into()));
    }
    Ok(labels)
}
