//! k-means reduction of an outage population to representative scenarios.
//!
//! Scenarios are points in {0,1}^d, one coordinate per branch that fails in
//! at least one scenario (plus one for a lost substation, if any). Each final
//! cluster is represented by its medoid, so every reduced scenario is a real
//! outage pattern, and carries the fraction of the population in its cluster.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hazard::OutageScenario;
use crate::network::BranchId;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("scenario population is empty")]
    EmptyPopulation,
    #[error("number of reduced scenarios must be at least 1")]
    ZeroClusters,
    #[error("malformed reduced scenario file: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Independent seedings; the run with the lowest inertia is kept.
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            restarts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedScenarioSet {
    /// Representatives in ascending scenario id, each with its probability.
    pub scenarios: Vec<(OutageScenario, f64)>,
    /// Requested number of clusters; `scenarios.len()` may be smaller.
    pub k: usize,
    pub population: usize,
    pub inertia: f64,
}

impl ReducedScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn probability_sum(&self) -> f64 {
        self.scenarios.iter().map(|(_, p)| p).sum()
    }

    /// `scenario_id,probability,out_branches` with `;`-separated branch ids.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReductionError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario_id", "probability", "out_branches"])?;
        for (s, p) in &self.scenarios {
            w.write_record([s.id.to_string(), p.to_string(), s.format_outages()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, ReductionError> {
        let mut scenarios = Vec::new();
        for rec in csv::Reader::from_reader(input).records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let id: usize = field(0)
                .parse()
                .map_err(|_| ReductionError::Parse(format!("bad scenario id '{}'", field(0))))?;
            let p: f64 = field(1)
                .parse()
                .map_err(|_| ReductionError::Parse(format!("bad probability '{}'", field(1))))?;
            let s = OutageScenario::parse_outages(id, field(2)).map_err(ReductionError::Parse)?;
            scenarios.push((s, p));
        }
        scenarios.sort_by_key(|(s, _)| s.id);
        Ok(Self {
            k: scenarios.len(),
            population: 0,
            inertia: f64::NAN,
            scenarios,
        })
    }
}

/// Sparse binary point: indices of coordinates equal to 1.
type Point = Vec<usize>;

/// Squared distance from a binary point to a center, using
/// |x - c|² = |c|² + Σ_{i ∈ x} (1 - 2 c_i).
fn sq_dist(point: &Point, center: &[f64], center_norm: f64) -> f64 {
    center_norm + point.iter().map(|&i| 1.0 - 2.0 * center[i]).sum::<f64>()
}

fn norm2(c: &[f64]) -> f64 {
    c.iter().map(|v| v * v).sum()
}

/// Outcome of one seeded Lloyd run.
#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub assignment: Vec<usize>,
    /// Centroid of each cluster under the final assignment (stale for empty clusters).
    pub centers: Vec<Vec<f64>>,
    /// Total squared distance recorded at every assignment step.
    pub inertia_trace: Vec<f64>,
    pub inertia: f64,
}

fn seed_centers(points: &[Point], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let dense = |p: &Point| {
        let mut v = vec![0.0; dim];
        for &i in p {
            v[i] = 1.0;
        }
        v
    };
    let first = rng.gen_range(0..points.len());
    let mut centers = vec![dense(&points[first])];
    let mut nearest: Vec<f64> = {
        let (c, n) = (&centers[0], norm2(&centers[0]));
        points.iter().map(|p| sq_dist(p, c, n).max(0.0)).collect()
    };
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            // Every point coincides with a center already.
            break;
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in nearest.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            acc += d;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let Some(pick) = pick else { break };
        let c = dense(&points[pick]);
        let n = norm2(&c);
        for (p, d) in points.iter().zip(nearest.iter_mut()) {
            *d = d.min(sq_dist(p, &c, n).max(0.0));
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &[Point], centers: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let norms: Vec<f64> = centers.iter().map(|c| norm2(c)).collect();
    let best: Vec<(usize, f64)> = points
        .par_iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (j, (c, &n)) in centers.iter().zip(&norms).enumerate() {
                let d = sq_dist(p, c, n);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect();
    let inertia = best.iter().map(|&(_, d)| d).sum();
    (best.into_iter().map(|(j, _)| j).collect(), inertia)
}

fn centroids(points: &[Point], assignment: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = previous.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; previous.len()];
    let mut sizes = vec![0usize; previous.len()];
    for (p, &c) in points.iter().zip(assignment) {
        sizes[c] += 1;
        for &i in p {
            sums[c][i] += 1.0;
        }
    }
    sums.into_iter()
        .zip(sizes)
        .zip(previous)
        .map(|((mut s, n), old)| {
            if n == 0 {
                old.clone()
            } else {
                s.iter_mut().for_each(|v| *v /= n as f64);
                s
            }
        })
        .collect()
}

/// Greedy spread seeding followed by Lloyd iterations until the assignment
/// stops changing or `max_iter` assignment steps have run.
pub fn kmeans_run(points: &[Point], dim: usize, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> KMeansRun {
    let mut centers = seed_centers(points, dim, k, rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let (next, inertia) = assign(points, &centers);
        trace.push(inertia);
        let converged = next == assignment;
        assignment = next;
        centers = centroids(points, &assignment, &centers);
        if converged {
            break;
        }
    }
    let norms: Vec<f64> = centers.iter().map(|c| norm2(c)).collect();
    let inertia = points
        .iter()
        .zip(&assignment)
        .map(|(p, &c)| sq_dist(p, &centers[c], norms[c]))
        .sum();
    KMeansRun {
        assignment,
        centers,
        inertia_trace: trace,
        inertia,
    }
}

/// Maps scenarios to sparse binary points over the branches that fail at least once.
fn embed(population: &[OutageScenario]) -> (Vec<Point>, usize) {
    let mut coord: BTreeMap<BranchId, usize> = BTreeMap::new();
    for s in population {
        for &b in &s.out_branches {
            coord.insert(b, 0);
        }
    }
    for (i, v) in coord.values_mut().enumerate() {
        *v = i;
    }
    let source_dim = coord.len();
    let dim = source_dim + usize::from(population.iter().any(|s| s.source_out));
    let points = population
        .iter()
        .map(|s| {
            let mut p: Point = s.out_branches.iter().map(|b| coord[b]).collect();
            if s.source_out {
                p.push(source_dim);
            }
            p
        })
        .collect();
    (points, dim)
}

pub fn reduce_scenarios(
    population: &[OutageScenario],
    k: usize,
    seed: u64,
) -> Result<ReducedScenarioSet, ReductionError> {
    reduce_scenarios_with(population, k, seed, &KMeansOptions::default())
}

pub fn reduce_scenarios_with(
    population: &[OutageScenario],
    k: usize,
    seed: u64,
    options: &KMeansOptions,
) -> Result<ReducedScenarioSet, ReductionError> {
    if population.is_empty() {
        return Err(ReductionError::EmptyPopulation);
    }
    if k == 0 {
        return Err(ReductionError::ZeroClusters);
    }
    let (points, dim) = embed(population);

    let mut best: Option<KMeansRun> = None;
    for restart in 0..options.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let run = kmeans_run(&points, dim, k, options.max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");

    let n_clusters = run.centers.len();
    let norms: Vec<f64> = run.centers.iter().map(|c| norm2(c)).collect();
    // (distance, scenario id, population index, member count)
    let mut medoid: Vec<Option<(f64, usize, usize)>> = vec![None; n_clusters];
    let mut members = vec![0usize; n_clusters];
    for (idx, (p, &c)) in points.iter().zip(&run.assignment).enumerate() {
        members[c] += 1;
        let d = sq_dist(p, &run.centers[c], norms[c]);
        let id = population[idx].id;
        let better = match medoid[c] {
            None => true,
            Some((bd, bid, _)) => d < bd || (d == bd && id < bid),
        };
        if better {
            medoid[c] = Some((d, id, idx));
        }
    }
    let n = population.len() as f64;
    let mut scenarios: Vec<(OutageScenario, f64)> = medoid
        .into_iter()
        .zip(members)
        .filter_map(|(m, count)| m.map(|(_, _, idx)| (population[idx].clone(), count as f64 / n)))
        .collect();
    scenarios.sort_by_key(|(s, _)| s.id);

    Ok(ReducedScenarioSet {
        scenarios,
        k,
        population: population.len(),
        inertia: run.inertia,
    })
}
