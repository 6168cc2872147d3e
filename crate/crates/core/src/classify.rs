//! Item scoring and ABC classification.
//!
//! Items are scored on two axes: a qualitative rank (the weighted sum of
//! column-normalized criterion scores) and a quantitative value (normalized
//! monetary consumption). The two combine at a fixed 6:1 ratio into a single
//! value, and items are partitioned into classes A/B/C by cumulative share
//! of that combined value.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::CriterionWeights;

/// The default criterion set, in item-master column order.
pub const DEFAULT_CRITERIA: [&str; 5] = [
    "critical_degree",
    "item_consumption",
    "lead_time_score",
    "availability",
    "inventory_turnover",
];

/// Weight of the qualitative rank in the combined value; the quantitative
/// side gets the complement. Fixed 6:1.
const QUALITATIVE_SHARE: f64 = 6.0 / 7.0;
const QUANTITATIVE_SHARE: f64 = 1.0 / 7.0;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("no items to classify")]
    NoItems,
    #[error("item {id}: expected {expected} criterion values, found {got}")]
    CriterionCount {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("item {id}: at least one historical consumption year is required")]
    NoHistory { id: String },
    #[error("item {id}: negative value in column {column}")]
    NegativeValue { id: String, column: String },
    #[error("criterion \"{name}\" sums to zero across all items; cannot normalize")]
    ZeroCriterionColumn { name: String },
    #[error("every item has zero consumption value; cannot normalize")]
    AllZeroConsumption,
    #[error("weight vector has {got} entries but items carry {expected} criteria")]
    WeightDimension { got: usize, expected: usize },
    #[error("invalid cut points ({a}, {b}): need 0 < a < b < 1")]
    BadCuts { a: f64, b: f64 },
    #[error("combined values sum to {0}, cannot form cumulative shares")]
    NonPositiveTotal(f64),
    #[error("csv: {0}")]
    Csv(String),
}

/// One inventory item: qualitative criterion scores, consumption history,
/// and unit price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    /// Scores for the configured criteria, in criterion order.
    pub criterion_values: Vec<f64>,
    /// Units consumed per historical year, oldest first.
    pub annual_consumption: Vec<f64>,
    pub unit_price: f64,
}

impl ItemRecord {
    pub fn mean_annual_consumption(&self) -> f64 {
        if self.annual_consumption.is_empty() {
            0.0
        } else {
            self.annual_consumption.iter().sum::<f64>() / self.annual_consumption.len() as f64
        }
    }
}

/// How annual consumption history is collapsed into one number for the
/// quantitative value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsumptionAggregation {
    /// Mean over all historical years. The default.
    #[default]
    MeanAnnual,
    /// Most recent year only.
    LastYear,
    /// Sum over all years.
    Total,
}

/// Per-item scores: qualitative rank, quantitative value, combined value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub id: String,
    pub qualitative_rank: f64,
    pub quantitative_value: f64,
    pub combined_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AbcClass {
    A,
    B,
    C,
}

impl std::fmt::Display for AbcClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbcClass::A => write!(f, "A"),
            AbcClass::B => write!(f, "B"),
            AbcClass::C => write!(f, "C"),
        }
    }
}

/// Final classification of one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbcAssignment {
    pub id: String,
    pub class: AbcClass,
    /// 1-based position in the descending combined-value order.
    pub rank: usize,
    pub combined_value: f64,
    /// Running share of total combined value up to and including this item.
    pub cumulative_value_share: f64,
}

/// Cumulative cut points for class boundaries: class A while the running
/// share is at most `a`, class B while at most `b`, class C beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcCuts {
    pub a: f64,
    pub b: f64,
}

impl Default for AbcCuts {
    fn default() -> Self {
        // Conventional Pareto reading; override via config.
        AbcCuts { a: 0.80, b: 0.95 }
    }
}

fn check_items(items: &[ItemRecord], criteria: &[String]) -> Result<(), ClassifyError> {
    if items.is_empty() {
        return Err(ClassifyError::NoItems);
    }
    for item in items {
        if item.criterion_values.len() != criteria.len() {
            return Err(ClassifyError::CriterionCount {
                id: item.id.clone(),
                expected: criteria.len(),
                got: item.criterion_values.len(),
            });
        }
        if item.annual_consumption.is_empty() {
            return Err(ClassifyError::NoHistory {
                id: item.id.clone(),
            });
        }
        for (j, &v) in item.criterion_values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(ClassifyError::NegativeValue {
                    id: item.id.clone(),
                    column: criteria[j].clone(),
                });
            }
        }
        if !item.unit_price.is_finite() || item.unit_price < 0.0 {
            return Err(ClassifyError::NegativeValue {
                id: item.id.clone(),
                column: "unit_price".into(),
            });
        }
        if item
            .annual_consumption
            .iter()
            .any(|&c| !c.is_finite() || c < 0.0)
        {
            return Err(ClassifyError::NegativeValue {
                id: item.id.clone(),
                column: "consumption".into(),
            });
        }
    }
    Ok(())
}

/// Column-normalize the criterion score matrix: `V[i][j] = v[i][j] / sum_i
/// v[i][j]`. Every column of the result sums to 1.
pub fn normalize_criteria(
    items: &[ItemRecord],
    criteria: &[String],
) -> Result<Vec<Vec<f64>>, ClassifyError> {
    check_items(items, criteria)?;
    let cols = criteria.len();
    let mut col_sums = vec![0.0; cols];
    for item in items {
        for (j, &v) in item.criterion_values.iter().enumerate() {
            col_sums[j] += v;
        }
    }
    for (j, &s) in col_sums.iter().enumerate() {
        if s <= 0.0 {
            return Err(ClassifyError::ZeroCriterionColumn {
                name: criteria[j].clone(),
            });
        }
    }
    Ok(items
        .iter()
        .map(|item| {
            item.criterion_values
                .iter()
                .zip(&col_sums)
                .map(|(v, s)| v / s)
                .collect()
        })
        .collect())
}

/// Weighted sum of normalized criterion scores per item.
pub fn qualitative_rank(
    normalized: &[Vec<f64>],
    weights: &CriterionWeights,
) -> Result<Vec<f64>, ClassifyError> {
    let cols = normalized.first().map_or(0, Vec::len);
    if weights.len() != cols {
        return Err(ClassifyError::WeightDimension {
            got: weights.len(),
            expected: cols,
        });
    }
    Ok(normalized
        .iter()
        .map(|row| row.iter().zip(&weights.weights).map(|(v, w)| v * w).sum())
        .collect())
}

/// Normalized monetary consumption per item: aggregated consumption times
/// unit price, scaled so the values sum to 1. Stagnant (all-zero) items are
/// permitted and receive 0.
pub fn quantitative_value(
    items: &[ItemRecord],
    aggregation: ConsumptionAggregation,
) -> Result<Vec<f64>, ClassifyError> {
    if items.is_empty() {
        return Err(ClassifyError::NoItems);
    }
    let raw: Vec<f64> = items
        .iter()
        .map(|item| {
            let consumption = match aggregation {
                ConsumptionAggregation::MeanAnnual => item.mean_annual_consumption(),
                ConsumptionAggregation::LastYear => {
                    item.annual_consumption.last().copied().unwrap_or(0.0)
                }
                ConsumptionAggregation::Total => item.annual_consumption.iter().sum(),
            };
            consumption * item.unit_price
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(ClassifyError::AllZeroConsumption);
    }
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Combine qualitative rank and quantitative value at the fixed 6:1 ratio.
pub fn combined_value(qualitative: f64, quantitative: f64) -> f64 {
    QUALITATIVE_SHARE * qualitative + QUANTITATIVE_SHARE * quantitative
}

/// Score a whole item set: normalize criteria, rank, normalize consumption,
/// combine.
pub fn score_items(
    items: &[ItemRecord],
    criteria: &[String],
    weights: &CriterionWeights,
    aggregation: ConsumptionAggregation,
) -> Result<Vec<ScoredItem>, ClassifyError> {
    let normalized = normalize_criteria(items, criteria)?;
    let ranks = qualitative_rank(&normalized, weights)?;
    let values = quantitative_value(items, aggregation)?;
    Ok(items
        .iter()
        .zip(ranks.iter().zip(&values))
        .map(|(item, (&r, &k))| ScoredItem {
            id: item.id.clone(),
            qualitative_rank: r,
            quantitative_value: k,
            combined_value: combined_value(r, k),
        })
        .collect())
}

/// Tolerance absorbing float dust when a running share lands exactly on a
/// configured cut point.
const CUT_EPS: f64 = 1e-12;

/// Partition scored items into classes by descending combined value.
///
/// Ties in combined value break by ascending id, so the assignment is
/// independent of input order. An item whose cumulative share equals a cut
/// point goes to the higher class, and the top-ranked item is always
/// class A regardless of how much of the total value it carries alone.
pub fn abc_classify(
    scored: &[ScoredItem],
    cuts: AbcCuts,
) -> Result<Vec<AbcAssignment>, ClassifyError> {
    if scored.is_empty() {
        return Err(ClassifyError::NoItems);
    }
    if !(cuts.a > 0.0 && cuts.a < cuts.b && cuts.b < 1.0) {
        return Err(ClassifyError::BadCuts {
            a: cuts.a,
            b: cuts.b,
        });
    }
    let total: f64 = scored.iter().map(|s| s.combined_value).sum();
    if total <= 0.0 {
        return Err(ClassifyError::NonPositiveTotal(total));
    }
    let mut order: Vec<&ScoredItem> = scored.iter().collect();
    order.sort_by(|x, y| {
        y.combined_value
            .partial_cmp(&x.combined_value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.id.cmp(&y.id))
    });
    let mut running = 0.0;
    let mut out = Vec::with_capacity(order.len());
    for (idx, item) in order.iter().enumerate() {
        running += item.combined_value;
        let share = running / total;
        let class = if idx == 0 || share <= cuts.a + CUT_EPS {
            AbcClass::A
        } else if share <= cuts.b + CUT_EPS {
            AbcClass::B
        } else {
            AbcClass::C
        };
        out.push(AbcAssignment {
            id: item.id.clone(),
            class,
            rank: idx + 1,
            combined_value: item.combined_value,
            cumulative_value_share: share,
        });
    }
    Ok(out)
}

/// Read the item master CSV:
/// `id,<criteria...>,unit_price,consumption_y1,...,consumption_yN`
/// with a variable number of trailing year columns.
pub fn read_items_csv(
    input: impl Read,
    criteria: &[String],
) -> Result<Vec<ItemRecord>, ClassifyError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| ClassifyError::Csv(e.to_string()))?
        .clone();
    let fixed = 1 + criteria.len() + 1; // id, criteria, unit_price
    if headers.len() < fixed + 1 {
        return Err(ClassifyError::Csv(format!(
            "expected at least {} columns (id, {} criteria, unit_price, one year), found {}",
            fixed + 1,
            criteria.len(),
            headers.len()
        )));
    }
    for (j, name) in criteria.iter().enumerate() {
        if headers.get(j + 1) != Some(name.as_str()) {
            return Err(ClassifyError::Csv(format!(
                "column {} is \"{}\", expected criterion \"{}\"",
                j + 1,
                headers.get(j + 1).unwrap_or(""),
                name
            )));
        }
    }
    let mut items = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ClassifyError::Csv(e.to_string()))?;
        let id = record.get(0).unwrap_or("").to_string();
        let parse = |idx: usize| -> Result<f64, ClassifyError> {
            record
                .get(idx)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| ClassifyError::Csv(format!("item {id}, column {idx}: {e}")))
        };
        let criterion_values = (1..=criteria.len())
            .map(parse)
            .collect::<Result<Vec<_>, _>>()?;
        let unit_price = parse(criteria.len() + 1)?;
        let annual_consumption = (fixed..record.len())
            .map(parse)
            .collect::<Result<Vec<_>, _>>()?;
        items.push(ItemRecord {
            id,
            criterion_values,
            annual_consumption,
            unit_price,
        });
    }
    if items.is_empty() {
        return Err(ClassifyError::NoItems);
    }
    Ok(items)
}

/// Write classification output CSV:
/// `id,R,K,G,rank,cumulative_share,class`.
pub fn write_classification_csv(
    out: impl Write,
    scored: &[ScoredItem],
    assignments: &[AbcAssignment],
) -> Result<(), ClassifyError> {
    let by_id: std::collections::BTreeMap<&str, &ScoredItem> =
        scored.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "R", "K", "G", "rank", "cumulative_share", "class"])
        .map_err(|e| ClassifyError::Csv(e.to_string()))?;
    for a in assignments {
        let s = by_id[a.id.as_str()];
        w.write_record([
            a.id.as_str(),
            &s.qualitative_rank.to_string(),
            &s.quantitative_value.to_string(),
            &s.combined_value.to_string(),
            &a.rank.to_string(),
            &a.cumulative_value_share.to_string(),
            &a.class.to_string(),
        ])
        .map_err(|e| ClassifyError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| ClassifyError::Csv(e.to_string()))?;
    Ok(())
}
