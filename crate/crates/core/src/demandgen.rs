//! Demand synthesis by roulette-wheel resampling of consumption history.
//!
//! Annual consumption observations are binned into an equal-width
//! histogram; each spin selects an interval with probability proportional
//! to its observed frequency and draws an integer annual quantity uniformly
//! from the interval. Annual quantities are then spread across the twelve
//! months by independent uniform month draws, so the monthly total always
//! equals the annual draw exactly.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DemandGenError {
    #[error("cannot build a histogram from an empty series")]
    EmptySeries,
    #[error("number of bins must be positive")]
    ZeroBins,
    #[error("observation {index} = {value} is not a finite nonnegative number")]
    BadObservation { index: usize, value: f64 },
}

/// Frequency histogram over annual consumption quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionHistogram {
    /// Interval boundaries, ascending; `edges.len() = counts.len() + 1`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `counts[b] / sum(counts)` per interval.
    pub probabilities: Vec<f64>,
}

impl ConsumptionHistogram {
    pub fn num_bins(&self) -> usize {
        self.counts.len()
    }

    /// Integer lattice bounds of bin `b`, edges rounded outward.
    fn lattice_bounds(&self, b: usize) -> (u64, u64) {
        let lo = self.edges[b].floor().max(0.0) as u64;
        let hi = self.edges[b + 1].ceil().max(0.0) as u64;
        (lo, hi.max(lo))
    }
}

/// Twelve monthly quantities summing exactly to the annual total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthlyDemandSchedule {
    pub quantities: [u64; 12],
    pub annual_total: u64,
}

impl MonthlyDemandSchedule {
    pub fn zero() -> Self {
        MonthlyDemandSchedule {
            quantities: [0; 12],
            annual_total: 0,
        }
    }

    pub fn from_quantities(quantities: [u64; 12]) -> Self {
        let annual_total = quantities.iter().sum();
        MonthlyDemandSchedule {
            quantities,
            annual_total,
        }
    }
}

/// Number of bins from the sample size: `ceil(1 + log2 n)`, capped at the
/// number of distinct values.
pub fn default_bin_count(series: &[f64]) -> usize {
    let n = series.len().max(1);
    let sturges = (1.0 + (n as f64).log2()).ceil() as usize;
    let mut sorted: Vec<u64> = series.iter().map(|v| v.to_bits()).collect();
    sorted.sort_unstable();
    sorted.dedup();
    sturges.clamp(1, sorted.len())
}

/// Bin an annual consumption series into an equal-width histogram spanning
/// `[min, max]`. The right-most bin is closed on both ends; a single
/// degenerate bin is used when all observations coincide. Non-integer
/// histories are rounded half-to-even at ingestion.
pub fn build_histogram(
    annual_series: &[f64],
    num_bins: Option<usize>,
) -> Result<ConsumptionHistogram, DemandGenError> {
    if annual_series.is_empty() {
        return Err(DemandGenError::EmptySeries);
    }
    for (index, &value) in annual_series.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(DemandGenError::BadObservation { index, value });
        }
    }
    let values: Vec<f64> = annual_series.iter().map(|v| round_half_even(*v)).collect();
    let bins = match num_bins {
        Some(0) => return Err(DemandGenError::ZeroBins),
        Some(b) => b,
        None => default_bin_count(&values),
    };
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    if min == max {
        let n = values.len() as u64;
        return Ok(ConsumptionHistogram {
            edges: vec![min, max],
            counts: vec![n],
            probabilities: vec![1.0],
        });
    }

    let width = (max - min) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| {
            if i == bins {
                max
            } else {
                min + width * i as f64
            }
        })
        .collect();
    let mut counts = vec![0u64; bins];
    for &v in &values {
        let mut b = ((v - min) / width) as usize;
        if b >= bins {
            b = bins - 1; // right-most bin closed
        }
        counts[b] += 1;
    }
    let total: u64 = counts.iter().sum();
    let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(ConsumptionHistogram {
        edges,
        counts,
        probabilities,
    })
}

fn round_half_even(v: f64) -> f64 {
    let floor = v.floor();
    let frac = v - floor;
    if (frac - 0.5).abs() < f64::EPSILON {
        if (floor as i64) % 2 == 0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        v.round()
    }
}

/// One roulette-wheel draw: the selected interval and an annual quantity
/// from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnualDraw {
    pub interval: usize,
    pub quantity: u64,
}

/// Spin the wheel: select interval `b` with probability `probabilities[b]`
/// by inverse CDF on a single uniform variate, then draw the quantity
/// uniformly from the integer lattice inside the interval.
pub fn spin(histogram: &ConsumptionHistogram, rng: &mut ChaCha12Rng) -> AnnualDraw {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut interval = histogram
        .probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(0);
    for (b, &p) in histogram.probabilities.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            interval = b;
            break;
        }
    }
    let (lo, hi) = histogram.lattice_bounds(interval);
    let quantity = if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    };
    AnnualDraw { interval, quantity }
}

/// Allocate an annual quantity over the twelve months: each unit lands in
/// an independently, uniformly chosen month. The monthly quantities sum to
/// the annual quantity exactly, by construction.
pub fn monthly_spread(annual_qty: u64, rng: &mut ChaCha12Rng) -> MonthlyDemandSchedule {
    let mut quantities = [0u64; 12];
    for _ in 0..annual_qty {
        let month = rng.random_range(0..12usize);
        quantities[month] += 1;
    }
    MonthlyDemandSchedule {
        quantities,
        annual_total: annual_qty,
    }
}

/// Convenience: one full synthesis step (spin then spread).
pub fn synthesize_year(
    histogram: &ConsumptionHistogram,
    rng: &mut ChaCha12Rng,
) -> MonthlyDemandSchedule {
    let draw = spin(histogram, rng);
    monthly_spread(draw.quantity, rng)
}

/// Dump generated schedules as audit CSV rows `item_id,year,month,qty`.
pub fn write_schedule_csv<W: std::io::Write>(
    out: W,
    item_id: &str,
    schedules: &[MonthlyDemandSchedule],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["item_id", "year", "month", "qty"])?;
    for (year, schedule) in schedules.iter().enumerate() {
        for (month, qty) in schedule.quantities.iter().enumerate() {
            w.write_record([
                item_id,
                &(year + 1).to_string(),
                &(month + 1).to_string(),
                &qty.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
