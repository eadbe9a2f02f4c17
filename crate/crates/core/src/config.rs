//! Run configuration: a flat `key = value` file, `#` starts a comment.
//! Every key has a default; the defaults reproduce the published case study.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::enumeration::{MerGrid, DEFAULT_SUBSET_BUDGET};
use crate::hazard::FragilityParams;
use crate::network::{load_network_files, Network, NodeId};
use crate::reduction::KMeansOptions;
use crate::{fixtures, Error};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("invalid value '{value}' for '{key}'")]
    InvalidValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateNodes {
    /// Every node with nonzero critical load.
    Critical,
    All,
    List(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Branch and load tables; the bundled 33-node feeder when unset.
    pub branches_file: Option<PathBuf>,
    pub loads_file: Option<PathBuf>,
    pub fragility: FragilityParams,
    pub wind_speed_ms: f64,
    pub n_scenarios: usize,
    pub k_reduced: usize,
    pub kmeans_restarts: usize,
    pub size_min_kw: f64,
    pub size_max_kw: f64,
    pub size_step_kw: f64,
    pub count_min: usize,
    pub count_max: usize,
    pub candidate_nodes: CandidateNodes,
    pub subset_budget: u64,
    pub source_can_island: bool,
    pub seed: u64,
    pub worker_count: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            branches_file: None,
            loads_file: None,
            fragility: FragilityParams::default(),
            wind_speed_ms: 38.0,
            n_scenarios: 10_000,
            k_reduced: 200,
            kmeans_restarts: KMeansOptions::default().restarts,
            size_min_kw: 500.0,
            size_max_kw: 1900.0,
            size_step_kw: 100.0,
            count_min: 1,
            count_max: 10,
            candidate_nodes: CandidateNodes::Critical,
            subset_budget: DEFAULT_SUBSET_BUDGET,
            source_can_island: false,
            seed: 1,
            worker_count: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

/// Parses `a,b,c` or `a;b;c` into node ids.
pub fn parse_node_list(key: &str, value: &str) -> Result<Vec<NodeId>, ConfigError> {
    value
        .split([',', ';', ' '])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse(key, t))
        .collect()
}

impl RunConfig {
    pub fn from_kv(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key = value, got '{line}'"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_kv(&text)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "branches_file" => self.branches_file = Some(PathBuf::from(value)),
            "loads_file" => self.loads_file = Some(PathBuf::from(value)),
            "p_normal" => self.fragility.p_normal = parse(key, value)?,
            "omega_crl" => self.fragility.omega_crl = parse(key, value)?,
            "omega_cpse" => self.fragility.omega_cpse = parse(key, value)?,
            "wind_speed_ms" => self.wind_speed_ms = parse(key, value)?,
            "n_scenarios" => self.n_scenarios = parse(key, value)?,
            "k_reduced" => self.k_reduced = parse(key, value)?,
            "kmeans_restarts" => self.kmeans_restarts = parse(key, value)?,
            "size_min_kw" => self.size_min_kw = parse(key, value)?,
            "size_max_kw" => self.size_max_kw = parse(key, value)?,
            "size_step_kw" => self.size_step_kw = parse(key, value)?,
            "count_min" => self.count_min = parse(key, value)?,
            "count_max" => self.count_max = parse(key, value)?,
            "candidate_nodes" => {
                self.candidate_nodes = match value {
                    "critical" => CandidateNodes::Critical,
                    "all" => CandidateNodes::All,
                    list => CandidateNodes::List(parse_node_list(key, list)?),
                }
            }
            "subset_budget" => self.subset_budget = parse(key, value)?,
            "source_can_island" => self.source_can_island = parse_bool(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "worker_count" | "workers" => self.worker_count = parse(key, value)?,
            "output_dir" | "out" => self.output_dir = PathBuf::from(value),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Checks everything that can be checked without the network.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if let Err(e) = self.fragility.validate() {
            return invalid(e.to_string());
        }
        if !(self.wind_speed_ms.is_finite() && self.wind_speed_ms >= 0.0) {
            return invalid(format!("wind_speed_ms must be nonnegative, got {}", self.wind_speed_ms));
        }
        if self.n_scenarios == 0 {
            return invalid("n_scenarios must be at least 1".into());
        }
        if self.k_reduced == 0 {
            return invalid("k_reduced must be at least 1".into());
        }
        if self.kmeans_restarts == 0 {
            return invalid("kmeans_restarts must be at least 1".into());
        }
        if self.worker_count == 0 {
            return invalid("worker_count must be at least 1".into());
        }
        if self.branches_file.is_some() != self.loads_file.is_some() {
            return invalid("branches_file and loads_file must be given together".into());
        }
        for p in [&self.branches_file, &self.loads_file].into_iter().flatten() {
            if !p.is_file() {
                return invalid(format!("file not found: {}", p.display()));
            }
        }
        let probe = MerGrid {
            candidate_nodes: (0..self.count_max.max(1) as NodeId).collect(),
            ..self.grid(Vec::new())
        };
        if let Err(e) = probe.validate() {
            return invalid(e.to_string());
        }
        Ok(())
    }

    pub fn load_network(&self) -> Result<Network, Error> {
        match (&self.branches_file, &self.loads_file) {
            (Some(b), Some(l)) => Ok(load_network_files(b, l)?),
            _ => Ok(fixtures::ieee33()),
        }
    }

    pub fn resolve_candidates(&self, network: &Network) -> Result<Vec<NodeId>, ConfigError> {
        Ok(match &self.candidate_nodes {
            CandidateNodes::Critical => network.critical_nodes(),
            CandidateNodes::All => network.nodes().to_vec(),
            CandidateNodes::List(list) => {
                if let Some(n) = list.iter().find(|&&n| !network.contains_node(n)) {
                    return Err(ConfigError::Invalid(format!("candidate node {n} is not in the network")));
                }
                list.clone()
            }
        })
    }

    pub fn grid(&self, candidate_nodes: Vec<NodeId>) -> MerGrid {
        MerGrid {
            size_min_kw: self.size_min_kw,
            size_max_kw: self.size_max_kw,
            size_step_kw: self.size_step_kw,
            count_min: self.count_min,
            count_max: self.count_max,
            candidate_nodes,
        }
    }

    pub fn kmeans_options(&self) -> KMeansOptions {
        KMeansOptions {
            restarts: self.kmeans_restarts,
            ..KMeansOptions::default()
        }
    }
}
