//! Scenario files, command-line overrides, and sweep expansion.

use std::fmt;
use std::path::{Path, PathBuf};

use dgroups::analysis::Buckets;
use dgroups::simulator::mix64;
use dgroups::{ChurnMode, GeneratorParams, Scheme, SimConfig};
use serde::Deserialize;

use crate::{CliError, ConfigError};

pub const DEFAULT_OUT: &str = "results";

/// Documented in every run's `config.toml`.
pub const SEED_MIX: &str = "stream = splitmix64(seed ^ splitmix64(run_index)); splitmix64(x): \
x += 0x9e3779b97f4a7c15; z = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9; z = (z ^ (z >> 27)) * 0x94d049bb133111eb; z ^ (z >> 31)";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub peak_level: Option<f64>,
    pub base_level: Option<f64>,
    pub spread: Option<f64>,
    pub noise: Option<f64>,
}

/// Keys accepted in a scenario file. Keys holding a list are swept.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub peers: Option<OneOrMany<usize>>,
    pub slots: Option<usize>,
    pub degree_min: Option<usize>,
    pub degree_max: Option<usize>,
    pub knowncount: Option<OneOrMany<usize>>,
    pub max_group_size: Option<OneOrMany<usize>>,
    pub metric: Option<OneOrMany<String>>,
    pub churn: Option<OneOrMany<String>>,
    pub seed: Option<OneOrMany<u64>>,
    pub max_rounds: Option<u64>,
    pub convergence_window: Option<u64>,
    pub min_contribution: Option<f64>,
    pub fixed_bins: Option<usize>,
    pub out: Option<PathBuf>,
    pub allow_nonconverged: Option<bool>,
    pub generator: Option<GeneratorSection>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<ScenarioFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(ScenarioFile::parse(&text)?)
    }
}

/// Values given on the command line; each replaces the matching scenario key.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct Overrides {
    #[arg(long)]
    pub peers: Option<usize>,
    #[arg(long)]
    pub slots: Option<usize>,
    #[arg(long)]
    pub degree_min: Option<usize>,
    #[arg(long)]
    pub degree_max: Option<usize>,
    #[arg(long)]
    pub knowncount: Option<usize>,
    #[arg(long)]
    pub max_group_size: Option<usize>,
    /// eq2, eq3 or random
    #[arg(long)]
    pub metric: Option<String>,
    /// idealized or sampled
    #[arg(long)]
    pub churn: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_rounds: Option<u64>,
    #[arg(long)]
    pub convergence_window: Option<u64>,
    #[arg(long)]
    pub min_contribution: Option<f64>,
    /// Use N equal-width buckets instead of Scott's rule
    #[arg(long, value_name = "N")]
    pub fixed_bins: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Exit 0 even if some run hits max_rounds without converging
    #[arg(long)]
    pub allow_nonconverged: bool,
}

/// One sweep combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub name: String,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub cells: Vec<Cell>,
    pub out: PathBuf,
    pub buckets: Buckets,
    pub allow_nonconverged: bool,
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} run(s) into {}", self.cells.len(), self.out.display())
    }
}

fn pick<T: Clone>(flag: Option<T>, file: Option<OneOrMany<T>>) -> Option<Vec<T>> {
    match flag {
        Some(v) => Some(vec![v]),
        None => file.map(OneOrMany::into_vec),
    }
}

fn non_empty<T>(key: &'static str, values: Vec<T>) -> Result<Vec<T>, ConfigError> {
    if values.is_empty() {
        Err(ConfigError::Invalid {
            key,
            message: "sweep list is empty".into(),
        })
    } else {
        Ok(values)
    }
}

fn parse_all<T: std::str::FromStr<Err = String>>(key: &'static str, raw: Vec<String>) -> Result<Vec<T>, ConfigError> {
    raw.iter()
        .map(|s| s.parse().map_err(|message| ConfigError::Invalid { key, message }))
        .collect()
}

/// Resolves flags over an optional scenario file into the list of runs.
pub fn resolve(file: ScenarioFile, flags: &Overrides) -> Result<Plan, ConfigError> {
    let base = SimConfig::default();

    let metrics_raw = pick(flags.metric.clone(), file.metric).ok_or(ConfigError::Missing("metric"))?;
    let metrics: Vec<Scheme> = parse_all("metric", non_empty("metric", metrics_raw)?)?;
    let churns: Vec<ChurnMode> = match pick(flags.churn.clone(), file.churn) {
        Some(raw) => parse_all("churn", non_empty("churn", raw)?)?,
        None => vec![base.churn],
    };
    let peers = non_empty("peers", pick(flags.peers, file.peers).unwrap_or(vec![base.peer_count]))?;
    let sizes = non_empty(
        "max_group_size",
        pick(flags.max_group_size, file.max_group_size).unwrap_or(vec![base.max_group_size]),
    )?;
    let knowncounts = non_empty(
        "knowncount",
        pick(flags.knowncount, file.knowncount).unwrap_or(vec![base.knowncount]),
    )?;
    let seeds = non_empty("seed", pick(flags.seed, file.seed).unwrap_or(vec![base.seed]))?;

    let gen = file.generator.unwrap_or_default();
    let defaults = GeneratorParams::default();
    let generator = GeneratorParams {
        peak_level: gen.peak_level.unwrap_or(defaults.peak_level),
        base_level: gen.base_level.unwrap_or(defaults.base_level),
        spread: gen.spread.unwrap_or(defaults.spread),
        noise: gen.noise.unwrap_or(defaults.noise),
    };

    let template = SimConfig {
        slots: flags.slots.or(file.slots).unwrap_or(base.slots),
        degree_min: flags.degree_min.or(file.degree_min).unwrap_or(base.degree_min),
        degree_max: flags.degree_max.or(file.degree_max).unwrap_or(base.degree_max),
        max_rounds: flags.max_rounds.or(file.max_rounds).unwrap_or(base.max_rounds),
        convergence_window: flags.convergence_window.or(file.convergence_window),
        min_contribution: flags
            .min_contribution
            .or(file.min_contribution)
            .unwrap_or(base.min_contribution),
        generator,
        ..base
    };

    let buckets = match flags.fixed_bins.or(file.fixed_bins) {
        Some(0) => {
            return Err(ConfigError::Invalid {
                key: "fixed_bins",
                message: "must be at least 1".into(),
            })
        }
        Some(n) => Buckets::Fixed(n),
        None => Buckets::Scott,
    };

    let mut cells = Vec::new();
    for &seed in &seeds {
        for &max_group_size in &sizes {
            for &scheme in &metrics {
                for &churn in &churns {
                    for &peer_count in &peers {
                        for &knowncount in &knowncounts {
                            let index = cells.len();
                            let mut name = format!("{}_g{}_s{}", scheme.name(), max_group_size, seed);
                            if churns.len() > 1 {
                                name.push_str(&format!("_{}", churn.name()));
                            }
                            if peers.len() > 1 {
                                name.push_str(&format!("_n{peer_count}"));
                            }
                            if knowncounts.len() > 1 {
                                name.push_str(&format!("_k{knowncount}"));
                            }
                            let config = SimConfig {
                                peer_count,
                                knowncount,
                                max_group_size,
                                scheme,
                                seed,
                                stream: mix64(seed ^ mix64(index as u64)),
                                churn,
                                ..template.clone()
                            };
                            config.validate().map_err(|e| ConfigError::Rejected {
                                run: name.clone(),
                                message: e.to_string(),
                            })?;
                            cells.push(Cell { index, name, config });
                        }
                    }
                }
            }
        }
    }
    let mut names: Vec<&str> = cells.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(ConfigError::Invalid {
            key: "seed",
            message: format!("sweep produces run `{}` twice", w[0]),
        });
    }

    Ok(Plan {
        cells,
        out: flags
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        buckets,
        allow_nonconverged: flags.allow_nonconverged || file.allow_nonconverged.unwrap_or(false),
    })
}
