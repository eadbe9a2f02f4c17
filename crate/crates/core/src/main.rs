use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mer_sizing::config::{parse_node_list, RunConfig};
use mer_sizing::pipeline::{analyze_matrix, gen_scenarios, run_pipeline, validate_scenario};
use mer_sizing::Error;

#[derive(Parser)]
#[command(name = "mer-sizing", version, about = "Optimal size and number of movable energy resources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(w) = self.workers {
            cfg.worker_count = w;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: scenarios, reduction, placement enumeration, sizing.
    Run(RunArgs),
    /// Derivative analysis of an existing minimum-ELC matrix.
    Analyze {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Island table and curtailment for one outage pattern and placement.
    ValidateScenario {
        /// Network files are taken from this configuration; bundled feeder otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Outaged branch ids, comma separated.
        #[arg(long, default_value = "")]
        outages: String,
        /// MER host nodes, comma separated.
        #[arg(long)]
        mer_nodes: String,
        /// Capacity of each MER in kW.
        #[arg(long)]
        mer_size: f64,
    },
    /// Sample outage scenarios only.
    GenScenarios(RunArgs),
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let art = run_pipeline(&cfg)?;
            let r = &art.analysis.result;
            println!(
                "reduced scenarios: {} of {} requested",
                art.reduced.len(),
                art.manifest.k_requested
            );
            println!("optimal count: {}", r.optimal_count);
            println!("optimal total size kW: {}", r.optimal_total_kw);
            if !r.flags.is_empty() {
                println!("flags: {:?}", r.flags);
            }
            println!("artifacts: {}", art.output_dir.display());
        }
        Command::Analyze { matrix, out } => {
            let (_, analysis) = analyze_matrix(&matrix, &out)?;
            let avg = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ");
            println!("d1 average over sizes: {}", avg(&analysis.tables.d1_avg_over_sizes));
            println!("d2 average over counts: {}", avg(&analysis.tables.d2_avg_over_counts));
            println!("optimal count: {}", analysis.result.optimal_count);
            println!("optimal total size kW: {}", analysis.result.optimal_total_kw);
        }
        Command::ValidateScenario {
            config,
            outages,
            mer_nodes,
            mer_size,
        } => {
            let cfg = match config {
                Some(p) => RunConfig::from_file(&p)?,
                None => RunConfig::default(),
            };
            let network = cfg.load_network()?;
            let outages = parse_node_list("outages", &outages)?;
            let nodes = parse_node_list("mer-nodes", &mer_nodes)?;
            let report = validate_scenario(&network, &outages, &nodes, mer_size)?;
            print!("{}", report.render());
        }
        Command::GenScenarios(args) => {
            let cfg = args.resolve()?;
            let (path, scenarios) = gen_scenarios(&cfg)?;
            println!("{} scenarios written to {}", scenarios.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
