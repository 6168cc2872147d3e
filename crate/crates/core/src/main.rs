//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on configuration or input errors, 2 when
//! the run completed but some items failed and were recorded in the
//! manifest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sparesim::pipeline::{
    self, run_pipeline_until, synth_dataset, PipelineConfig, PipelineError, RunSummary, StageLimit,
    SynthSpec,
};
use sparesim::simcore::{self, InventoryPolicy};

#[derive(Parser)]
#[command(name = "sparesim", version, about = "Spare-parts inventory toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Path to the JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Stage 1 only: weights, consistency gate, ABC classification.
    Classify(CommonArgs),
    /// Stages 1-2: classification plus demand/lead-time fits for class A.
    Fit(CommonArgs),
    /// Replicated simulation of one configured (rop, roq) policy.
    Simulate(CommonArgs),
    /// Stages 1-3a: classification, fits, and policy optimization.
    Optimize(CommonArgs),
    /// Full run through service-level/cost curves.
    ServiceCurve {
        #[command(flatten)]
        common: CommonArgs,
        /// Additionally render one SVG chart per item.
        #[arg(long)]
        svg: bool,
    },
    /// Full pipeline: classify, fit, optimize, curves, manifest.
    Pipeline(CommonArgs),
    /// Generate a synthetic input bundle (items, lead times, judgment
    /// matrix, ready-to-run config).
    Synth {
        /// Optional JSON config; `--count`/`--years` override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed for generation.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory for the bundle.
        #[arg(long)]
        out: PathBuf,
        /// Number of items to generate.
        #[arg(long)]
        count: Option<usize>,
        /// Years of consumption history per item.
        #[arg(long)]
        years: Option<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<PipelineConfig, PipelineError> {
    let mut config = PipelineConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn finish(summary: &RunSummary) -> ExitCode {
    let manifest = &summary.manifest;
    let counts = &manifest.item_counts;
    println!(
        "items {} -> A {} / B {} / C {}; fitted {}, optimized {}, curves {}",
        counts.total,
        counts.class_a,
        counts.class_b,
        counts.class_c,
        counts.fitted,
        counts.optimized,
        counts.curves
    );
    println!("outputs in {}", summary.out_dir.display());
    if manifest.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for failure in &manifest.failures {
            eprintln!(
                "item {} failed at {}: {}",
                failure.id, failure.stage, failure.reason
            );
        }
        ExitCode::from(2)
    }
}

fn run_stage(common: &CommonArgs, limit: StageLimit, svg: bool) -> Result<ExitCode, PipelineError> {
    let config = load_config(common)?;
    let summary = run_pipeline_until(&config, limit, svg)?;
    Ok(finish(&summary))
}

/// Replicated simulation of one explicit policy, using the models fitted
/// for the configured item.
fn run_simulate(common: &CommonArgs) -> Result<ExitCode, PipelineError> {
    let config = load_config(common)?;
    let section = config.simulate.clone().ok_or_else(|| {
        PipelineError::Config("simulate requires a \"simulate\" section in the config".into())
    })?;
    let inputs = pipeline::load_inputs(&config)?;
    let item = inputs
        .items
        .iter()
        .find(|i| i.id == section.item_id)
        .ok_or_else(|| {
            PipelineError::Config(format!("simulate: unknown item id \"{}\"", section.item_id))
        })?;
    let lead_samples = inputs.lead_samples.get(&item.id).map(Vec::as_slice);
    let models = pipeline::fit_item(&config, item, lead_samples).map_err(PipelineError::Config)?;
    let policy = InventoryPolicy::new(section.rop, section.roq)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let sim_config = simcore::SimConfig {
        horizon_years: config.simulation.horizon_years,
        initial_on_hand: config.simulation.initial_on_hand,
        seed: config.seed,
        holding_rule: config.simulation.holding_rule,
        warmup_years: config.simulation.warmup_years,
    };
    let replications = section
        .replications
        .unwrap_or(config.simulation.replications);
    let stats = simcore::replicate(
        policy,
        &models.demand_model,
        &models.lead_model,
        &config.costs,
        &sim_config,
        replications,
    )
    .map_err(|e| PipelineError::Config(e.to_string()))?;

    std::fs::create_dir_all(&config.out_dir).map_err(|e| PipelineError::Output(e.to_string()))?;
    let mut outcome_buf = Vec::new();
    simcore::write_outcome_csv(
        &mut outcome_buf,
        &[(item.id.clone(), policy, stats.clone())],
    )
    .map_err(|e| PipelineError::Output(e.to_string()))?;
    let outcome_path = config.out_dir.join("outcome.csv");
    std::fs::write(&outcome_path, outcome_buf).map_err(|e| PipelineError::Output(e.to_string()))?;

    if section.trace {
        let (_, trace) = simcore::simulate_traced(
            policy,
            &models.demand_model,
            &models.lead_model,
            &config.costs,
            &sim_config,
        )
        .map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut trace_buf = Vec::new();
        simcore::write_trace_csv(&mut trace_buf, &trace)
            .map_err(|e| PipelineError::Output(e.to_string()))?;
        std::fs::write(config.out_dir.join("trace.csv"), trace_buf)
            .map_err(|e| PipelineError::Output(e.to_string()))?;
    }

    println!(
        "item {} at (rop {}, roq {}): mean total cost {:.4} over {} replications",
        item.id, policy.rop, policy.roq, stats.total_cost.mean, replications
    );
    println!("outputs in {}", config.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Deserialize, Default)]
struct SynthConfigFile {
    item_count: Option<usize>,
    years: Option<usize>,
    seed: Option<u64>,
}

fn run_synth(
    config: Option<PathBuf>,
    seed: u64,
    out: PathBuf,
    count: Option<usize>,
    years: Option<usize>,
) -> Result<ExitCode, PipelineError> {
    let file: SynthConfigFile = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Input {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?
        }
        None => SynthConfigFile::default(),
    };
    let spec = SynthSpec {
        item_count: count.or(file.item_count).unwrap_or(200),
        seed: file
            .seed
            .map_or(seed, |s| if seed == 42 { s } else { seed }),
        years: years.or(file.years).unwrap_or(7),
    };
    let output = synth_dataset(&spec, &out)?;
    println!(
        "generated {} items (seed {}) under {}",
        spec.item_count,
        spec.seed,
        out.display()
    );
    println!(
        "run: sparesim pipeline --config {}",
        output.config_json.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify(common) => run_stage(common, StageLimit::Classify, false),
        Command::Fit(common) => run_stage(common, StageLimit::Fit, false),
        Command::Simulate(common) => run_simulate(common),
        Command::Optimize(common) => run_stage(common, StageLimit::Optimize, false),
        Command::ServiceCurve { common, svg } => run_stage(common, StageLimit::Curve, *svg),
        Command::Pipeline(common) => run_stage(common, StageLimit::Curve, false),
        Command::Synth {
            config,
            seed,
            out,
            count,
            years,
        } => run_synth(config.clone(), *seed, out.clone(), *count, *years),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
