//! Stage orchestration and artifact files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::curtailment::{build_reconfig_cache, classify_islands, IslandKind, IslandReport, MerPlacement};
use crate::enumeration::{build_min_elc_matrix_with, ElcMatrix};
use crate::hazard::{generate_scenarios_with, OutageScenario};
use crate::network::{BranchId, Network, NodeId, Reconfiguration};
use crate::reduction::{reduce_scenarios_with, ReducedScenarioSet};
use crate::sizing::{select_optimal, DerivativeTables, SizingResult};
use crate::{Error, Result};

pub const REDUCED_SCENARIOS_CSV: &str = "reduced_scenarios.csv";
pub const ELC_MATRIX_CSV: &str = "elc_matrix.csv";
pub const ELC_ARGMIN_CSV: &str = "elc_argmin.csv";
pub const D1_CSV: &str = "d1_number.csv";
pub const D2_CSV: &str = "d2_size.csv";
pub const FIG6_CSV: &str = "fig6.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const MANIFEST_JSON: &str = "run_manifest.json";
pub const SCENARIOS_CSV: &str = "scenarios.csv";

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn join_nums<T: ToString>(label: impl ToString, values: impl IntoIterator<Item = T>) -> String {
    std::iter::once(label.to_string())
        .chain(values.into_iter().map(|v| v.to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

/// First-derivative table: one row per size, then an `average` row.
pub fn d1_csv(matrix: &ElcMatrix, tables: &DerivativeTables) -> String {
    let mut out = join_nums("size_kw", &matrix.counts) + "\n";
    for (size, row) in matrix.sizes_kw.iter().zip(&tables.d1_number) {
        out += &(join_nums(size, row) + "\n");
    }
    out + &join_nums("average", &tables.d1_avg_over_sizes) + "\n"
}

/// Second-derivative table with a trailing `average` column.
pub fn d2_csv(matrix: &ElcMatrix, tables: &DerivativeTables) -> String {
    let mut out = join_nums("size_kw", matrix.counts.iter().map(|c| c.to_string()).chain(["average".into()])) + "\n";
    for ((size, row), avg) in matrix.sizes_kw.iter().zip(&tables.d2_size).zip(&tables.d2_avg_over_counts) {
        out += &(join_nums(size, row.iter().chain([avg])) + "\n");
    }
    out
}

pub fn fig6_csv(matrix: &ElcMatrix, tables: &DerivativeTables) -> String {
    let mut out = String::from("total_size_kw,avg_second_derivative\n");
    for (size, v) in matrix.sizes_kw.iter().zip(&tables.d2_avg_over_counts) {
        let _ = writeln!(out, "{size},{v}");
    }
    out
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub tables: DerivativeTables,
    pub result: SizingResult,
}

pub fn analyze(matrix: &ElcMatrix) -> Result<Analysis> {
    let tables = DerivativeTables::compute(matrix)?;
    let result = select_optimal(
        &tables.d1_avg_over_sizes,
        &tables.d2_avg_over_counts,
        &matrix.counts,
        &matrix.sizes_kw,
    )?;
    Ok(Analysis { tables, result })
}

/// Writes the derivative tables, the size/curvature series and the summary.
/// Returns the written file names.
pub fn write_analysis(out_dir: &Path, matrix: &ElcMatrix, analysis: &Analysis) -> Result<Vec<String>> {
    ensure_dir(out_dir)?;
    write_file(&out_dir.join(D1_CSV), d1_csv(matrix, &analysis.tables).as_bytes())?;
    write_file(&out_dir.join(D2_CSV), d2_csv(matrix, &analysis.tables).as_bytes())?;
    write_file(&out_dir.join(FIG6_CSV), fig6_csv(matrix, &analysis.tables).as_bytes())?;
    let summary = serde_json::to_string_pretty(&analysis.result)? + "\n";
    write_file(&out_dir.join(SUMMARY_JSON), summary.as_bytes())?;
    Ok(vec![D1_CSV.into(), D2_CSV.into(), FIG6_CSV.into(), SUMMARY_JSON.into()])
}

/// Reads a labeled size × count matrix and runs the derivative analysis only.
pub fn analyze_matrix(matrix_file: &Path, out_dir: &Path) -> Result<(ElcMatrix, Analysis)> {
    let file = fs::File::open(matrix_file).map_err(|e| Error::io(matrix_file, e))?;
    let matrix = ElcMatrix::from_csv(file)?;
    let analysis = analyze(&matrix)?;
    write_analysis(out_dir, &matrix, &analysis)?;
    Ok((matrix, analysis))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub reconfiguration: Reconfiguration,
    pub closed_ties: Vec<BranchId>,
    pub open_ties: Vec<BranchId>,
    pub islands: Vec<IslandReport>,
    pub total_curtailment_kw: f64,
}

impl ScenarioReport {
    pub fn count(&self, kind: IslandKind) -> usize {
        self.islands.iter().filter(|i| i.kind == kind).count()
    }

    pub fn render(&self) -> String {
        let ids = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let _ = writeln!(out, "closed ties: {}", ids(&self.closed_ties));
        let _ = writeln!(out, "open ties: {}", ids(&self.open_ties));
        let _ = writeln!(
            out,
            "{:<7} {:<10} {:>5} {:>12} {:>13} {:>13}  nodes",
            "island", "kind", "mers", "critical_kw", "capacity_kw", "curtailed_kw"
        );
        for r in &self.islands {
            let _ = writeln!(
                out,
                "{:<7} {:<10} {:>5} {:>12.3} {:>13.3} {:>13.3}  {}",
                r.island,
                r.kind.to_string(),
                r.mer_count,
                r.critical_load_kw,
                r.mer_capacity_kw,
                r.curtailed_kw,
                ids(&r.nodes)
            );
        }
        let _ = writeln!(
            out,
            "microgrids: {}  isolates: {}",
            self.count(IslandKind::Microgrid),
            self.count(IslandKind::Isolate)
        );
        let _ = writeln!(out, "total curtailment kW: {}", self.total_curtailment_kw);
        out
    }
}

/// Reconfigures one outage pattern and reports every island under the placement.
pub fn validate_scenario(
    network: &Network,
    outages: &[BranchId],
    mer_nodes: &[NodeId],
    mer_size_kw: f64,
) -> Result<ScenarioReport> {
    let outaged: BTreeSet<BranchId> = outages.iter().copied().collect();
    if let Some(b) = outaged.iter().find(|&&b| network.branch(b).is_none()) {
        return Err(crate::config::ConfigError::Invalid(format!("outage references unknown branch {b}")).into());
    }
    let reconfig = OutageScenario::new(0, outaged).reconfigure(network);
    let placement = MerPlacement::new(mer_size_kw, mer_nodes.iter().copied());
    let islands = classify_islands(network, &reconfig, &placement)?;
    let total = islands.iter().fold(0.0, |acc, r| acc + r.curtailed_kw);
    Ok(ScenarioReport {
        closed_ties: reconfig.closed_ties(network),
        open_ties: reconfig.open_ties(network),
        reconfiguration: reconfig,
        islands,
        total_curtailment_kw: total,
    })
}

pub fn scenarios_csv(scenarios: &[OutageScenario]) -> String {
    let mut out = String::from("scenario_id,out_branches\n");
    for s in scenarios {
        let _ = writeln!(out, "{},{}", s.id, s.format_outages());
    }
    out
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Pool(e.to_string()))
}

/// Hazard stage only: samples scenarios and writes `scenarios.csv`.
pub fn gen_scenarios(config: &RunConfig) -> Result<(PathBuf, Vec<OutageScenario>)> {
    config.validate()?;
    let network = config.load_network()?;
    let scenarios = pool(config.worker_count)?.install(|| {
        generate_scenarios_with(
            &network,
            &config.fragility,
            config.wind_speed_ms,
            config.n_scenarios,
            config.seed,
            config.source_can_island,
        )
    })?;
    ensure_dir(&config.output_dir)?;
    let path = config.output_dir.join(SCENARIOS_CSV);
    write_file(&path, scenarios_csv(&scenarios).as_bytes())?;
    Ok((path, scenarios))
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub seed: u64,
    pub population: usize,
    pub k_requested: usize,
    /// Clusters that ended empty are dropped, so this may be below `k_requested`.
    pub reduced_scenarios: usize,
    pub candidate_nodes: Vec<NodeId>,
    pub timings_ms: Vec<(String, f64)>,
    pub files: Vec<ManifestFile>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub output_dir: PathBuf,
    pub reduced: ReducedScenarioSet,
    pub matrix: ElcMatrix,
    pub analysis: Analysis,
    pub manifest: RunManifest,
}

/// generate → reduce → reconfigure → matrix → derivatives → selection.
pub fn run_pipeline(config: &RunConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let network = config.load_network()?;
    let candidates = config.resolve_candidates(&network)?;
    let grid = config.grid(candidates.clone());
    grid.validate()?;
    let pool = pool(config.worker_count)?;
    let out = config.output_dir.clone();
    ensure_dir(&out)?;

    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, f64)>| {
        timings.push((name.to_string(), clock.elapsed().as_secs_f64() * 1e3));
        clock = Instant::now();
    };

    let (reduced, matrix) = pool.install(|| -> Result<_> {
        let population = generate_scenarios_with(
            &network,
            &config.fragility,
            config.wind_speed_ms,
            config.n_scenarios,
            config.seed,
            config.source_can_island,
        )?;
        lap("generate", &mut timings);
        let reduced = reduce_scenarios_with(&population, config.k_reduced, config.seed, &config.kmeans_options())?;
        lap("reduce", &mut timings);
        let cache = build_reconfig_cache(&network, &reduced);
        lap("reconfigure", &mut timings);
        let matrix = build_min_elc_matrix_with(&network, &reduced, &cache, &grid, config.subset_budget)?;
        lap("matrix", &mut timings);
        Ok((reduced, matrix))
    })?;

    let analysis = analyze(&matrix)?;
    lap("analysis", &mut timings);

    let mut buf = Vec::new();
    reduced.write_csv(&mut buf)?;
    write_file(&out.join(REDUCED_SCENARIOS_CSV), &buf)?;
    let mut buf = Vec::new();
    matrix.write_csv(&mut buf)?;
    write_file(&out.join(ELC_MATRIX_CSV), &buf)?;
    let mut buf = Vec::new();
    matrix.write_argmin_csv(&mut buf)?;
    write_file(&out.join(ELC_ARGMIN_CSV), &buf)?;
    let mut names = vec![REDUCED_SCENARIOS_CSV.to_string(), ELC_MATRIX_CSV.into(), ELC_ARGMIN_CSV.into()];
    names.extend(write_analysis(&out, &matrix, &analysis)?);

    let files = names
        .into_iter()
        .map(|name| {
            let path = out.join(&name);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            Ok(ManifestFile {
                sha256: sha256_hex(&bytes),
                bytes: bytes.len(),
                name,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        config: config.clone(),
        seed: config.seed,
        population: config.n_scenarios,
        k_requested: config.k_reduced,
        reduced_scenarios: reduced.len(),
        candidate_nodes: grid.sorted_candidates(),
        timings_ms: timings,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest)? + "\n";
    write_file(&out.join(MANIFEST_JSON), json.as_bytes())?;

    Ok(RunArtifacts {
        output_dir: out,
        reduced,
        matrix,
        analysis,
        manifest,
    })
}
