//! Deterministic synthetic item populations with planted Pareto structure.
//!
//! Each item carries a latent importance drawn from a heavy-tailed
//! lognormal; criterion scores track importance with multiplicative noise,
//! consumption grows super-linearly in importance, and price grows
//! sub-linearly. A minority of items therefore carries the majority of
//! combined value, which is what the classification stage is supposed to
//! find. A small stagnant tail gets all-zero consumption. Identical specs
//! produce identical files, byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};
use crate::classify::DEFAULT_CRITERIA;
use crate::distfit::Distribution;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub item_count: usize,
    pub seed: u64,
    /// Years of consumption history per item.
    pub years: usize,
}

impl SynthSpec {
    pub fn new(item_count: usize, seed: u64) -> Self {
        SynthSpec {
            item_count,
            seed,
            years: 7,
        }
    }
}

/// Paths of the generated bundle.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub items_csv: PathBuf,
    pub lead_times_csv: PathBuf,
    pub ahp_matrix_json: PathBuf,
    pub config_json: PathBuf,
}

/// The reference criterion weights used for the generated judgment matrix;
/// they sum to 1 and the matrix is built as `a_ij = w_i / w_j`, so weight
/// extraction recovers them exactly.
pub const REFERENCE_WEIGHTS: [f64; 5] = [0.52, 0.15, 0.14, 0.12, 0.07];

/// Fraction of items generated with no consumption at all.
const STAGNANT_FRACTION: f64 = 0.05;

/// Generate the full input bundle (items, lead times, judgment matrix,
/// ready-to-run config) under `dir`.
pub fn synth_dataset(spec: &SynthSpec, dir: &Path) -> Result<SynthOutput, PipelineError> {
    if spec.item_count == 0 {
        return Err(PipelineError::Config(
            "synth: item_count must be at least 1".into(),
        ));
    }
    if spec.years == 0 {
        return Err(PipelineError::Config(
            "synth: years must be at least 1".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| PipelineError::Output(e.to_string()))?;

    let importance_dist = Distribution::log_normal(0.0, 1.4).expect("static params");
    let score_noise = Distribution::log_normal(0.0, 0.3).expect("static params");
    let year_noise = Distribution::log_normal(0.0, 0.35).expect("static params");

    let mut rng = stream(spec.seed, "synth/items");
    let mut items = String::new();
    items.push_str("id,critical_degree,item_consumption,lead_time_score,availability,inventory_turnover,unit_price");
    for y in 1..=spec.years {
        items.push_str(&format!(",consumption_y{y}"));
    }
    items.push('\n');

    let mut lead_rows = String::from("id,lead_time_months\n");
    let mut lead_rng = stream(spec.seed, "synth/lead");
    let lead_dist = Distribution::gamma(4.0, 0.5).expect("static params");

    for i in 0..spec.item_count {
        let id = format!("item{i:04}");
        // Capped so the heaviest item stays at desk-scale consumption.
        let importance: f64 = importance_dist.sample(&mut rng).min(9.0);
        let stagnant = rng.random::<f64>() < STAGNANT_FRACTION;

        items.push_str(&id);
        let score_base = importance.powf(1.7);
        for _ in DEFAULT_CRITERIA {
            let score = score_base * score_noise.sample(&mut rng);
            items.push_str(&format!(",{:.4}", score.max(0.0001)));
        }
        let price = 5.0 * importance.sqrt() * score_noise.sample(&mut rng);
        items.push_str(&format!(",{:.2}", price.max(0.01)));

        let base_consumption = 40.0 * importance.powf(1.5);
        for _ in 0..spec.years {
            let qty = if stagnant {
                0.0
            } else {
                (base_consumption * year_noise.sample(&mut rng)).round()
            };
            items.push_str(&format!(",{}", qty.max(0.0) as u64));
        }
        items.push('\n');

        // Lead-time coverage rotates through the three ingestion paths:
        // fitted samples, a single constant sample, and config default.
        match i % 3 {
            0 => {
                for _ in 0..6 {
                    let months = 0.5 + lead_dist.sample(&mut lead_rng);
                    lead_rows.push_str(&format!("{id},{:.1}\n", months));
                }
            }
            1 => {
                let months = 0.5 + lead_dist.sample(&mut lead_rng);
                lead_rows.push_str(&format!("{id},{:.1}\n", months));
            }
            _ => {}
        }
    }

    let items_csv = dir.join("items.csv");
    fs::write(&items_csv, items).map_err(|e| PipelineError::Output(e.to_string()))?;
    let lead_times_csv = dir.join("lead_times.csv");
    fs::write(&lead_times_csv, lead_rows).map_err(|e| PipelineError::Output(e.to_string()))?;

    let matrix: Vec<Vec<f64>> = REFERENCE_WEIGHTS
        .iter()
        .map(|wi| REFERENCE_WEIGHTS.iter().map(|wj| wi / wj).collect())
        .collect();
    let doc = serde_json::json!({
        "criteria": DEFAULT_CRITERIA,
        "matrix": matrix,
    });
    let ahp_matrix_json = dir.join("ahp.json");
    fs::write(
        &ahp_matrix_json,
        serde_json::to_string_pretty(&doc).unwrap() + "\n",
    )
    .map_err(|e| PipelineError::Output(e.to_string()))?;

    let config = PipelineConfig {
        seed: spec.seed,
        out_dir: dir.join("out"),
        inputs: super::InputPaths {
            items_csv: PathBuf::from("items.csv"),
            ahp_matrix_json: PathBuf::from("ahp.json"),
            lead_times_csv: Some(PathBuf::from("lead_times.csv")),
        },
        abc: Default::default(),
        fitting: Default::default(),
        costs: crate::simcore::CostRates {
            holding: 1.0,
            ordering: 10.0,
            shortage: 40.0,
        },
        simulation: Default::default(),
        optimizer: Default::default(),
        service: Default::default(),
        lead_time: Default::default(),
        demand_source: Default::default(),
        simulate: None,
    };
    let config_json = dir.join("config.json");
    fs::write(
        &config_json,
        serde_json::to_string_pretty(&config).unwrap() + "\n",
    )
    .map_err(|e| PipelineError::Output(e.to_string()))?;

    Ok(SynthOutput {
        items_csv,
        lead_times_csv,
        ahp_matrix_json,
        config_json,
    })
}
