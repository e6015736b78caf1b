//! Run configuration: a flat TOML file plus command-line overrides.
//!
//! ```toml
//! problem = "rastrigin_moo"
//! algo = "tdomino"
//! gens = 100
//! ```
//!
//! Recognized keys: `problem`, `algo`, `grid`, `neighbor_radius`, `history`,
//! `emitters`, `batch_size`, `gens`, `reps`, `seed`, `out`, `weights`,
//! `single_index`. Anything else is an error.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::BenchmarkId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    Tdomino,
    MeSingle,
    MeSum,
    Nsga2,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 4] = [
        AlgorithmId::Tdomino,
        AlgorithmId::MeSingle,
        AlgorithmId::MeSum,
        AlgorithmId::Nsga2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmId::Tdomino => "tdomino",
            AlgorithmId::MeSingle => "me_single",
            AlgorithmId::MeSum => "me_sum",
            AlgorithmId::Nsga2 => "nsga2",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = AlgorithmId::ALL.iter().map(|a| a.as_str()).collect();
                Error::Config(format!(
                    "unknown algorithm `{s}`; valid ids: {}",
                    valid.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: BenchmarkId,
    pub algo: AlgorithmId,
    pub grid: Vec<usize>,
    pub neighbor_radius: usize,
    pub history: usize,
    pub emitters: usize,
    pub batch_size: usize,
    pub gens: usize,
    pub reps: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Weighted-sum weights; `None` means `1, 10, 100, ...`.
    pub weights: Option<Vec<f64>>,
    pub single_index: usize,
}

impl RunConfig {
    pub fn new(problem: BenchmarkId, algo: AlgorithmId) -> Self {
        Self {
            problem,
            algo,
            grid: vec![20, 20],
            neighbor_radius: 4,
            history: 10,
            emitters: 2,
            batch_size: 200,
            gens: 100,
            reps: 30,
            seed: 0,
            out: PathBuf::from("runs"),
            weights: None,
            single_index: 0,
        }
    }

    pub fn replicate_seed(&self, rep: usize) -> u64 {
        self.seed.wrapping_add(rep as u64)
    }

    /// Solutions produced per generation by every algorithm.
    pub fn evaluations_per_generation(&self) -> usize {
        self.emitters * self.batch_size
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("emitters", self.emitters),
            ("batch_size", self.batch_size),
            ("gens", self.gens),
            ("reps", self.reps),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("`{key}` must be positive")));
            }
        }
        let spec = self.problem.build().spec().clone();
        if self.grid.len() != spec.feature_count() {
            return Err(Error::Config(format!(
                "`grid` has {} axes but {} has {} features",
                self.grid.len(),
                self.problem,
                spec.feature_count()
            )));
        }
        if self.grid.iter().any(|&d| d == 0) {
            return Err(Error::Config("`grid` bin counts must be positive".into()));
        }
        if self.single_index >= spec.objective_count() {
            return Err(Error::Config(format!(
                "`single_index` {} out of range for {} objectives",
                self.single_index,
                spec.objective_count()
            )));
        }
        if let Some(w) = &self.weights {
            if w.len() != spec.objective_count() || w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!(
                    "`weights` needs {} finite entries",
                    spec.objective_count()
                )));
            }
        }
        Ok(())
    }
}

/// Values given on the command line; each `Some` wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub problem: Option<String>,
    pub algo: Option<String>,
    pub gens: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

const KNOWN_KEYS: [&str; 13] = [
    "problem",
    "algo",
    "grid",
    "neighbor_radius",
    "history",
    "emitters",
    "batch_size",
    "gens",
    "reps",
    "seed",
    "out",
    "weights",
    "single_index",
];

fn as_count(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(Error::Config(format!(
            "`{key}` must be a non-negative integer, got {other}"
        ))),
    }
}

fn as_str<'v>(key: &str, v: &'v toml::Value) -> Result<&'v str> {
    v.as_str()
        .ok_or_else(|| Error::Config(format!("`{key}` must be a string, got {v}")))
}

/// Resolves a config from optional TOML text and overrides.
pub fn parse_config(file: Option<&str>, overrides: &ConfigOverrides) -> Result<RunConfig> {
    let table: toml::Table = match file {
        Some(text) => text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("invalid config file: {}", e.message())))?,
        None => toml::Table::new(),
    };
    if let Some(unknown) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "unknown key `{unknown}`; valid keys: {}",
            KNOWN_KEYS.join(", ")
        )));
    }

    let problem = match (&overrides.problem, table.get("problem")) {
        (Some(p), _) => p.clone(),
        (None, Some(v)) => as_str("problem", v)?.to_string(),
        (None, None) => return Err(Error::Config("missing `problem`".into())),
    };
    let algo = match (&overrides.algo, table.get("algo")) {
        (Some(a), _) => a.clone(),
        (None, Some(v)) => as_str("algo", v)?.to_string(),
        (None, None) => return Err(Error::Config("missing `algo`".into())),
    };
    let mut cfg = RunConfig::new(problem.parse()?, algo.parse()?);

    for (key, value) in &table {
        match key.as_str() {
            "problem" | "algo" => {}
            "grid" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| Error::Config(format!("`grid` must be an array, got {value}")))?;
                cfg.grid = arr.iter().map(|v| as_count("grid", v)).collect::<Result<_>>()?;
            }
            "neighbor_radius" => cfg.neighbor_radius = as_count(key, value)?,
            "history" => cfg.history = as_count(key, value)?,
            "emitters" => cfg.emitters = as_count(key, value)?,
            "batch_size" => cfg.batch_size = as_count(key, value)?,
            "gens" => cfg.gens = as_count(key, value)?,
            "reps" => cfg.reps = as_count(key, value)?,
            "seed" => cfg.seed = as_count(key, value)? as u64,
            "single_index" => cfg.single_index = as_count(key, value)?,
            "out" => cfg.out = PathBuf::from(as_str(key, value)?),
            "weights" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| Error::Config(format!("`weights` must be an array, got {value}")))?;
                let w = arr
                    .iter()
                    .map(|v| match v {
                        toml::Value::Float(f) => Ok(*f),
                        toml::Value::Integer(i) => Ok(*i as f64),
                        other => Err(Error::Config(format!("`weights` entries must be numbers, got {other}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                cfg.weights = Some(w);
            }
            _ => unreachable!("unknown keys rejected above"),
        }
    }

    if let Some(g) = overrides.gens {
        cfg.gens = g;
    }
    if let Some(r) = overrides.reps {
        cfg.reps = r;
    }
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(o) = &overrides.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}
