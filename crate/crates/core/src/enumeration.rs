//! Exhaustive MER placement search and the minimum-ELC matrix.
//!
//! For every (total size, count) cell each count-subset of the candidate
//! nodes is evaluated against every reduced scenario. Per scenario the
//! island of each candidate node and the critical load of each island are
//! computed once, so evaluating one subset costs O(count + islands) per
//! scenario. The subset's island counts are shared by every size in a
//! column.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curtailment::{build_reconfig_cache, island_critical_loads, microgrid_deficit, CurtailmentError, ReconfigCache};
use crate::network::{Network, NodeId};
use crate::reduction::ReducedScenarioSet;

pub const DEFAULT_SUBSET_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum EnumerationError {
    #[error("invalid MER grid: {0}")]
    InvalidGrid(String),
    #[error("{count} MERs requested but only {candidates} candidate nodes")]
    CountExceedsCandidates { count: usize, candidates: usize },
    #[error("{subsets} placements for {count} MERs exceed the budget of {budget} per cell")]
    BudgetExceeded { count: usize, subsets: u128, budget: u64 },
    #[error("reduced scenario set is empty")]
    NoScenarios,
    #[error(transparent)]
    Curtailment(#[from] CurtailmentError),
    #[error("matrix parse error at line {row}, column '{column}': {message}")]
    MatrixParse { row: usize, column: String, message: String },
    #[error("failed to write matrix: {0}")]
    Write(String),
}

/// Ranges of total MER size and MER count, plus the nodes allowed to host MERs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MerGrid {
    pub size_min_kw: f64,
    pub size_max_kw: f64,
    pub size_step_kw: f64,
    pub count_min: usize,
    pub count_max: usize,
    pub candidate_nodes: Vec<NodeId>,
}

impl MerGrid {
    fn size_steps(&self) -> Result<usize, EnumerationError> {
        let bad = |m: String| Err(EnumerationError::InvalidGrid(m));
        if !(self.size_min_kw.is_finite() && self.size_max_kw.is_finite() && self.size_min_kw > 0.0) {
            return bad(format!("sizes must be positive, got min {}", self.size_min_kw));
        }
        if self.size_min_kw > self.size_max_kw {
            return bad(format!("size_min {} > size_max {}", self.size_min_kw, self.size_max_kw));
        }
        if !(self.size_step_kw.is_finite() && self.size_step_kw > 0.0) {
            return bad(format!("size_step must be positive, got {}", self.size_step_kw));
        }
        let steps = (self.size_max_kw - self.size_min_kw) / self.size_step_kw;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return bad(format!(
                "size range {}..{} is not a multiple of step {}",
                self.size_min_kw, self.size_max_kw, self.size_step_kw
            ));
        }
        Ok(steps.round() as usize)
    }

    pub fn validate(&self) -> Result<(), EnumerationError> {
        self.size_steps()?;
        if self.count_min < 1 || self.count_min > self.count_max {
            return Err(EnumerationError::InvalidGrid(format!(
                "need 1 <= count_min <= count_max, got {} and {}",
                self.count_min, self.count_max
            )));
        }
        let candidates = self.sorted_candidates().len();
        if self.count_max > candidates {
            return Err(EnumerationError::CountExceedsCandidates {
                count: self.count_max,
                candidates,
            });
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<f64> {
        let steps = self.size_steps().unwrap_or(0);
        (0..=steps)
            .map(|i| self.size_min_kw + i as f64 * self.size_step_kw)
            .collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        (self.count_min..=self.count_max).collect()
    }

    pub fn sorted_candidates(&self) -> Vec<NodeId> {
        let mut c = self.candidate_nodes.clone();
        c.sort_unstable();
        c.dedup();
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MerCombo {
    pub total_kw: f64,
    pub count: usize,
    pub unit_kw: f64,
}

/// Every (total size, count) pair, sizes outermost, with equal unit sizes.
pub fn enumerate_mer_grid(grid: &MerGrid) -> Result<Vec<MerCombo>, EnumerationError> {
    grid.validate()?;
    let counts = grid.counts();
    Ok(grid
        .sizes()
        .into_iter()
        .flat_map(|total_kw| {
            counts.iter().map(move |&count| MerCombo {
                total_kw,
                count,
                unit_kw: total_kw / count as f64,
            })
        })
        .collect())
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// All `k`-subsets of `0..n` in lexicographic order, flattened.
fn combinations(n: usize, k: usize) -> Vec<u16> {
    let mut out = Vec::with_capacity(binomial(n, k) as usize * k);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.extend(idx.iter().map(|&i| i as u16));
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            break;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

struct ScenarioRow {
    probability: f64,
    island_loads: Vec<f64>,
    /// Islands that may curtail (not grid-fed, nonzero load), ascending.
    exposed: Vec<usize>,
    /// Island of each candidate node.
    candidate_island: Vec<usize>,
}

/// Per-scenario island data for a fixed candidate list.
struct ScenarioTable {
    rows: Vec<ScenarioRow>,
    max_islands: usize,
}

impl ScenarioTable {
    fn new(
        network: &Network,
        reduced: &ReducedScenarioSet,
        cache: &ReconfigCache,
        candidates: &[NodeId],
    ) -> Result<Self, EnumerationError> {
        let mut ordered: Vec<_> = reduced.scenarios.iter().collect();
        ordered.sort_by_key(|(s, _)| s.id);
        let mut rows = Vec::with_capacity(ordered.len());
        for (s, p) in ordered {
            let r = cache
                .get(&s.id)
                .ok_or(CurtailmentError::MissingReconfiguration(s.id))?;
            let island_loads = island_critical_loads(network, r);
            let exposed = (0..r.island_count)
                .filter(|&i| !(i == 0 && r.grid_energized) && island_loads[i] > 0.0)
                .collect();
            let candidate_island = candidates
                .iter()
                .map(|&n| r.island_of_node(network, n).ok_or(CurtailmentError::UnknownNode(n)))
                .collect::<Result<_, _>>()?;
            rows.push(ScenarioRow {
                probability: *p,
                island_loads,
                exposed,
                candidate_island,
            });
        }
        let max_islands = cache.values().map(|r| r.island_count).max().unwrap_or(0);
        Ok(Self { rows, max_islands })
    }

    /// ELC of `subset` (candidate positions) for each unit size in `units`.
    fn elc(&self, subset: &[u16], units: &[f64], mers: &mut [usize], out: &mut [f64]) {
        out.fill(0.0);
        for row in &self.rows {
            for &c in subset {
                mers[row.candidate_island[c as usize]] += 1;
            }
            for (u, acc) in units.iter().zip(out.iter_mut()) {
                let mut lc = 0.0;
                for &isl in &row.exposed {
                    let load = row.island_loads[isl];
                    lc += match mers[isl] {
                        0 => load,
                        k => microgrid_deficit(load, k, *u),
                    };
                }
                *acc += row.probability * lc;
            }
            for &c in subset {
                mers[row.candidate_island[c as usize]] = 0;
            }
        }
    }

    /// Minimum ELC and arg-min subset index for each unit size, over all
    /// `count`-subsets. Ties go to the lowest (lexicographically first) subset.
    fn min_over_subsets(&self, n_candidates: usize, count: usize, units: &[f64]) -> Vec<(f64, usize, Vec<u16>)> {
        let combos = combinations(n_candidates, count);
        let best = combos
            .par_chunks(count)
            .enumerate()
            .fold(
                || {
                    (
                        vec![(f64::INFINITY, usize::MAX); units.len()],
                        vec![0usize; self.max_islands],
                        vec![0.0; units.len()],
                    )
                },
                |(mut best, mut mers, mut elc), (i, subset)| {
                    self.elc(subset, units, &mut mers, &mut elc);
                    for (b, &v) in best.iter_mut().zip(&elc) {
                        if (v, i) < *b {
                            *b = (v, i);
                        }
                    }
                    (best, mers, elc)
                },
            )
            .map(|(best, _, _)| best)
            .reduce(
                || vec![(f64::INFINITY, usize::MAX); units.len()],
                |a, b| {
                    a.into_iter()
                        .zip(b)
                        .map(|(x, y)| if y < x { y } else { x })
                        .collect()
                },
            );
        best.into_iter()
            .map(|(v, i)| (v, i, combos[i * count..(i + 1) * count].to_vec()))
            .collect()
    }
}

fn check_budget(candidates: usize, count: usize, budget: u64) -> Result<(), EnumerationError> {
    if count == 0 || count > candidates {
        return Err(EnumerationError::CountExceedsCandidates { count, candidates });
    }
    let subsets = binomial(candidates, count);
    if subsets > budget as u128 {
        return Err(EnumerationError::BudgetExceeded { count, subsets, budget });
    }
    Ok(())
}

/// Minimum ELC over every `count`-subset of `candidates` for one unit size,
/// with the lexicographically smallest arg-min location set.
pub fn min_elc_for_config(
    network: &Network,
    reduced: &ReducedScenarioSet,
    cache: &ReconfigCache,
    candidates: &[NodeId],
    unit_kw: f64,
    count: usize,
) -> Result<(f64, Vec<NodeId>), EnumerationError> {
    min_elc_for_config_with_budget(network, reduced, cache, candidates, unit_kw, count, DEFAULT_SUBSET_BUDGET)
}

pub fn min_elc_for_config_with_budget(
    network: &Network,
    reduced: &ReducedScenarioSet,
    cache: &ReconfigCache,
    candidates: &[NodeId],
    unit_kw: f64,
    count: usize,
    budget: u64,
) -> Result<(f64, Vec<NodeId>), EnumerationError> {
    if !(unit_kw.is_finite() && unit_kw > 0.0) {
        return Err(CurtailmentError::InvalidUnitSize(unit_kw).into());
    }
    if reduced.is_empty() {
        return Err(EnumerationError::NoScenarios);
    }
    let mut candidates = candidates.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    check_budget(candidates.len(), count, budget)?;
    let table = ScenarioTable::new(network, reduced, cache, &candidates)?;
    let (value, _, subset) = table
        .min_over_subsets(candidates.len(), count, &[unit_kw])
        .pop()
        .expect("one unit size");
    Ok((value, subset.iter().map(|&c| candidates[c as usize]).collect()))
}

/// Minimum ELC per (total size, count); rows are sizes, columns counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElcMatrix {
    pub sizes_kw: Vec<f64>,
    pub counts: Vec<usize>,
    pub values: Vec<Vec<f64>>,
    /// Best location set per cell; absent for matrices read from file.
    pub argmin_locations: Option<Vec<Vec<Vec<NodeId>>>>,
}

impl ElcMatrix {
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[c]).collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Every column is nonincreasing as total size grows.
    pub fn is_size_monotone(&self) -> bool {
        (0..self.counts.len()).all(|c| self.column(c).windows(2).all(|w| w[1] <= w[0]))
    }

    /// Header `size_kw,<counts…>`, one row per size, full-precision cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EnumerationError> {
        let mut w = csv::Writer::from_writer(out);
        let header = std::iter::once("size_kw".to_string()).chain(self.counts.iter().map(|c| c.to_string()));
        let werr = |e: csv::Error| EnumerationError::Write(e.to_string());
        w.write_record(header).map_err(werr)?;
        for (size, row) in self.sizes_kw.iter().zip(&self.values) {
            let rec = std::iter::once(size.to_string()).chain(row.iter().map(|v| v.to_string()));
            w.write_record(rec).map_err(werr)?;
        }
        w.flush().map_err(|e| EnumerationError::Write(e.to_string()))
    }

    /// Same layout as [`ElcMatrix::write_csv`], cells hold `;`-separated node ids.
    pub fn write_argmin_csv<W: Write>(&self, out: W) -> Result<(), EnumerationError> {
        let Some(locs) = &self.argmin_locations else {
            return Err(EnumerationError::Write("matrix carries no arg-min locations".into()));
        };
        let mut w = csv::Writer::from_writer(out);
        let werr = |e: csv::Error| EnumerationError::Write(e.to_string());
        let header = std::iter::once("size_kw".to_string()).chain(self.counts.iter().map(|c| c.to_string()));
        w.write_record(header).map_err(werr)?;
        for (size, row) in self.sizes_kw.iter().zip(locs) {
            let cells = row.iter().map(|set| {
                set.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";")
            });
            w.write_record(std::iter::once(size.to_string()).chain(cells)).map_err(werr)?;
        }
        w.flush().map_err(|e| EnumerationError::Write(e.to_string()))
    }

    pub fn from_csv<R: Read>(input: R) -> Result<Self, EnumerationError> {
        let parse_err = |row: usize, column: &str, message: String| EnumerationError::MatrixParse {
            row,
            column: column.to_string(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let mut records = reader.records();
        let header = match records.next() {
            Some(r) => r.map_err(|e| parse_err(1, "", e.to_string()))?,
            None => return Err(parse_err(1, "", "empty matrix file".into())),
        };
        let header: Vec<String> = header.iter().map(str::to_string).collect();
        if header.len() < 2 {
            return Err(parse_err(1, "", "header needs a size column and at least one count".into()));
        }
        let counts = header[1..]
            .iter()
            .map(|h| {
                h.parse::<usize>()
                    .map_err(|_| parse_err(1, h, format!("count label '{h}' is not an integer")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut sizes_kw = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(line, "", e.to_string()))?;
            if rec.len() != header.len() {
                return Err(parse_err(
                    line,
                    "",
                    format!("expected {} fields, found {}", header.len(), rec.len()),
                ));
            }
            let num = |col: usize| {
                let text = &rec[col];
                text.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, &header[col], format!("'{text}' is not a number")))
            };
            sizes_kw.push(num(0)?);
            values.push((1..header.len()).map(num).collect::<Result<Vec<_>, _>>()?);
        }
        if values.is_empty() {
            return Err(parse_err(2, "", "matrix has no rows".into()));
        }
        Ok(Self {
            sizes_kw,
            counts,
            values,
            argmin_locations: None,
        })
    }
}

/// Builds the minimum-ELC matrix with the default subset budget.
pub fn build_min_elc_matrix(
    network: &Network,
    reduced: &ReducedScenarioSet,
    grid: &MerGrid,
) -> Result<ElcMatrix, EnumerationError> {
    let cache = build_reconfig_cache(network, reduced);
    build_min_elc_matrix_with(network, reduced, &cache, grid, DEFAULT_SUBSET_BUDGET)
}

pub fn build_min_elc_matrix_with(
    network: &Network,
    reduced: &ReducedScenarioSet,
    cache: &ReconfigCache,
    grid: &MerGrid,
    budget: u64,
) -> Result<ElcMatrix, EnumerationError> {
    grid.validate()?;
    if reduced.is_empty() {
        return Err(EnumerationError::NoScenarios);
    }
    let candidates = grid.sorted_candidates();
    let sizes = grid.sizes();
    let counts = grid.counts();
    for &n in &counts {
        check_budget(candidates.len(), n, budget)?;
    }
    let table = ScenarioTable::new(network, reduced, cache, &candidates)?;

    let mut values = vec![vec![0.0; counts.len()]; sizes.len()];
    let mut argmin = vec![vec![Vec::new(); counts.len()]; sizes.len()];
    for (ci, &n) in counts.iter().enumerate() {
        let units: Vec<f64> = sizes.iter().map(|s| s / n as f64).collect();
        let best = table.min_over_subsets(candidates.len(), n, &units);
        for (si, (v, _, subset)) in best.into_iter().enumerate() {
            values[si][ci] = v;
            argmin[si][ci] = subset.iter().map(|&c| candidates[c as usize]).collect();
        }
    }
    Ok(ElcMatrix {
        sizes_kw: sizes,
        counts,
        values,
        argmin_locations: Some(argmin),
    })
}
