//! Wind fragility curve and Monte Carlo outage sampling.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{kruskal_spanning_forest, BranchId, Network, Reconfiguration};

#[derive(Debug, Error, PartialEq)]
pub enum HazardError {
    #[error("invalid fragility parameters: {0}")]
    InvalidParams(String),
    #[error("wind speed must be finite and nonnegative, got {0}")]
    InvalidWind(f64),
    #[error("scenario count must be at least 1")]
    ZeroCount,
}

/// Piecewise-linear line fragility: flat at `p_normal` below the critical
/// speed, linear up to certain failure at the collapse speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragilityParams {
    pub p_normal: f64,
    /// Wind speed (m/s) at which lines start to fail.
    pub omega_crl: f64,
    /// Wind speed (m/s) at and above which lines always fail.
    pub omega_cpse: f64,
}

impl Default for FragilityParams {
    fn default() -> Self {
        Self {
            p_normal: 0.01,
            omega_crl: 30.0,
            omega_cpse: 55.0,
        }
    }
}

impl FragilityParams {
    pub fn validate(&self) -> Result<(), HazardError> {
        if !(0.0..=1.0).contains(&self.p_normal) {
            return Err(HazardError::InvalidParams(format!(
                "p_normal {} outside [0, 1]",
                self.p_normal
            )));
        }
        if !(self.omega_crl > 0.0 && self.omega_crl < self.omega_cpse && self.omega_cpse.is_finite()) {
            return Err(HazardError::InvalidParams(format!(
                "need 0 < omega_crl < omega_cpse, got {} and {}",
                self.omega_crl, self.omega_cpse
            )));
        }
        Ok(())
    }
}

pub fn line_failure_probability(params: &FragilityParams, wind: f64) -> f64 {
    let FragilityParams {
        p_normal,
        omega_crl,
        omega_cpse,
    } = *params;
    if wind < omega_crl {
        p_normal
    } else if wind < omega_cpse {
        p_normal + (1.0 - p_normal) * (wind - omega_crl) / (omega_cpse - omega_crl)
    } else {
        1.0
    }
}

/// One sampled event realization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutageScenario {
    pub id: usize,
    pub out_branches: BTreeSet<BranchId>,
    /// Substation infeed lost. Only ever set when source islanding is enabled.
    #[serde(default)]
    pub source_out: bool,
}

impl OutageScenario {
    pub fn new(id: usize, out_branches: impl IntoIterator<Item = BranchId>) -> Self {
        Self {
            id,
            out_branches: out_branches.into_iter().collect(),
            source_out: false,
        }
    }

    /// Spanning-forest reconfiguration of the surviving network.
    pub fn reconfigure(&self, network: &Network) -> Reconfiguration {
        let mut r = kruskal_spanning_forest(network, &self.out_branches);
        r.scenario_id = self.id;
        r.grid_energized = !self.source_out;
        r
    }

    /// Semicolon-separated outage list; a lost substation is written as `source`.
    pub fn format_outages(&self) -> String {
        let mut parts: Vec<String> = self.out_branches.iter().map(|b| b.to_string()).collect();
        if self.source_out {
            parts.push("source".to_string());
        }
        parts.join(";")
    }

    pub fn parse_outages(id: usize, text: &str) -> Result<Self, String> {
        let mut s = OutageScenario::new(id, []);
        for tok in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            if tok == "source" {
                s.source_out = true;
            } else {
                let b = tok
                    .parse::<BranchId>()
                    .map_err(|_| format!("invalid branch id '{tok}'"))?;
                s.out_branches.insert(b);
            }
        }
        Ok(s)
    }
}

/// Samples `count` scenarios, each branch failing independently.
pub fn generate_scenarios(
    network: &Network,
    params: &FragilityParams,
    wind: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<OutageScenario>, HazardError> {
    generate_scenarios_with(network, params, wind, count, seed, false)
}

/// Like [`generate_scenarios`]; with `source_can_island` the substation
/// infeed is one more element sampled with the same probability, drawn
/// after all branches.
///
/// Scenario `i` uses ChaCha8 seeded from `seed` on stream `i` and draws one
/// uniform `f64` per branch in ascending branch id, so the output does not
/// depend on the thread count.
pub fn generate_scenarios_with(
    network: &Network,
    params: &FragilityParams,
    wind: f64,
    count: usize,
    seed: u64,
    source_can_island: bool,
) -> Result<Vec<OutageScenario>, HazardError> {
    params.validate()?;
    if !(wind.is_finite() && wind >= 0.0) {
        return Err(HazardError::InvalidWind(wind));
    }
    if count == 0 {
        return Err(HazardError::ZeroCount);
    }
    let p = line_failure_probability(params, wind);
    let ids: Vec<BranchId> = network.branch_ids().collect();
    let scenarios = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut s = OutageScenario::new(i, []);
            for &b in &ids {
                if rng.gen::<f64>() < p {
                    s.out_branches.insert(b);
                }
            }
            if source_can_island {
                s.source_out = rng.gen::<f64>() < p;
            }
            s
        })
        .collect();
    Ok(scenarios)
}
