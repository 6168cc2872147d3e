//! Analytic reorder points from lead-time demand, and the service-level
//! versus cost curve.
//!
//! Per-period demand scales deterministically over a lead time of `a`
//! periods: the mean scales by `a` and the variance by `a^2`. The scaled
//! moments are matched back into the demand family when it has two free
//! parameters; one-parameter families cannot carry both moments and fall
//! back to a moment-matched normal, flagged on the output. The reorder
//! point for a target service level is the quantile of the lead-time
//! demand at that level, rounded up to whole units.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distfit::{DistError, Distribution, Family};
use crate::simcore::{
    replicate, CostRates, DemandModel, InventoryPolicy, LeadTimeModel, SimConfig, SimError,
};

/// The standard ladder of target service levels for curve generation.
pub const DEFAULT_ALPHAS: [f64; 8] = [0.50, 0.70, 0.80, 0.90, 0.95, 0.98, 0.99, 0.9999];

/// Reorder points above this multiple of the 0.99-level reorder point are
/// capped rather than simulated.
const CAP_FACTOR: u64 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum SvcLevelError {
    #[error("lead time must be positive, got {0}")]
    NonPositiveLeadTime(f64),
    #[error("demand distribution must have finite mean and variance")]
    NonFiniteMoments,
    #[error("service level {0} outside the open interval (0, 1)")]
    BadAlpha(f64),
    #[error("alphas list is empty")]
    NoAlphas,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Demand accumulated over one replenishment lead time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeDemand {
    pub mean: f64,
    pub variance: f64,
    /// Distribution used for quantiles, moment-matched to (mean, variance).
    pub matched: Distribution,
    /// True when the demand family could not hold both moments and a
    /// normal was substituted.
    pub fallback_used: bool,
}

/// Scale per-period demand to a lead time of `a` periods and moment-match
/// the result.
pub fn lead_time_demand(demand: &Distribution, a: f64) -> Result<LeadTimeDemand, SvcLevelError> {
    if a <= 0.0 || !a.is_finite() {
        return Err(SvcLevelError::NonPositiveLeadTime(a));
    }
    let mean = a * demand.mean();
    let variance = a * a * demand.variance();
    if !mean.is_finite() || !variance.is_finite() {
        return Err(SvcLevelError::NonFiniteMoments);
    }
    // A unit lead time changes nothing: keep the input distribution,
    // whatever its family.
    if a == 1.0 {
        return Ok(LeadTimeDemand {
            mean,
            variance,
            matched: demand.clone(),
            fallback_used: false,
        });
    }
    let matched = match demand.family() {
        Family::Normal => Some(Distribution::normal(mean, variance.sqrt())?),
        Family::LogNormal => {
            // mean m, variance v: sigma^2 = ln(1 + v/m^2), mu = ln m - sigma^2/2
            let s2 = (1.0 + variance / (mean * mean)).ln();
            Some(Distribution::log_normal(mean.ln() - 0.5 * s2, s2.sqrt())?)
        }
        Family::Gamma => Some(Distribution::gamma(
            mean * mean / variance,
            variance / mean,
        )?),
        Family::Uniform => {
            let half_width = (3.0 * variance).sqrt();
            Some(Distribution::uniform(mean - half_width, mean + half_width)?)
        }
        Family::Poisson | Family::Exponential => None,
    };
    match matched {
        Some(matched) => Ok(LeadTimeDemand {
            mean,
            variance,
            matched,
            fallback_used: false,
        }),
        None => Ok(LeadTimeDemand {
            mean,
            variance,
            matched: Distribution::normal(mean, variance.sqrt())?,
            fallback_used: true,
        }),
    }
}

/// Quantile of the lead-time demand before unit rounding.
pub fn rop_quantile(ltd: &LeadTimeDemand, alpha: f64) -> Result<f64, SvcLevelError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SvcLevelError::BadAlpha(alpha));
    }
    Ok(ltd.matched.quantile(alpha)?)
}

/// Reorder point meeting service level `alpha`: the quantile rounded UP to
/// whole units (never down; rounding down would silently miss the target),
/// floored at zero.
pub fn rop_for_alpha(ltd: &LeadTimeDemand, alpha: f64) -> Result<u64, SvcLevelError> {
    let q = rop_quantile(ltd, alpha)?;
    Ok(q.ceil().max(0.0) as u64)
}

/// One point on the service-level/cost curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceCurvePoint {
    pub alpha: f64,
    pub rop: u64,
    /// True when the reorder point was capped instead of simulated at an
    /// extreme quantile.
    pub capped: bool,
    pub total_cost_mean: f64,
    pub total_cost_ci: Option<f64>,
    pub holding_cost_mean: f64,
    pub ordering_cost_mean: f64,
    pub shortage_cost_mean: f64,
}

/// Everything needed to simulate one item during curve generation.
pub struct CurveInputs<'a> {
    /// Fitted per-period (monthly) demand distribution, for the analytic
    /// reorder points.
    pub demand_fit: &'a Distribution,
    /// Lead time in the same period units as the demand fit, for the
    /// analytic scaling.
    pub lead_periods: f64,
    /// Demand model driving the simulations (may be the fitted
    /// distribution or roulette resampling).
    pub demand_model: &'a DemandModel,
    pub lead_model: &'a LeadTimeModel,
    pub costs: &'a CostRates,
    pub config: &'a SimConfig,
    pub replications: u32,
}

/// Sweep the alpha ladder: analytic reorder point per level, then
/// replicated simulation at `(rop, roq)` under common random numbers (the
/// master seed is shared across every level).
pub fn service_curve(
    inputs: &CurveInputs<'_>,
    roq: u64,
    alphas: &[f64],
) -> Result<Vec<ServiceCurvePoint>, SvcLevelError> {
    if alphas.is_empty() {
        return Err(SvcLevelError::NoAlphas);
    }
    for &alpha in alphas {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SvcLevelError::BadAlpha(alpha));
        }
    }
    let ltd = lead_time_demand(inputs.demand_fit, inputs.lead_periods)?;
    let cap = CAP_FACTOR * rop_for_alpha(&ltd, 0.99)?;

    let mut sorted: Vec<f64> = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup(); // points are strictly increasing in alpha

    let mut points = Vec::with_capacity(sorted.len());
    for alpha in sorted {
        let raw_rop = rop_for_alpha(&ltd, alpha)?;
        let (rop, capped) = if raw_rop > cap {
            (cap, true)
        } else {
            (raw_rop, false)
        };
        let policy = InventoryPolicy {
            rop,
            roq: roq.max(1),
        };
        let stats = replicate(
            policy,
            inputs.demand_model,
            inputs.lead_model,
            inputs.costs,
            inputs.config,
            inputs.replications,
        )?;
        points.push(ServiceCurvePoint {
            alpha,
            rop,
            capped,
            total_cost_mean: stats.total_cost.mean,
            total_cost_ci: stats.total_cost.ci_half_width,
            holding_cost_mean: stats.holding_cost.mean,
            ordering_cost_mean: stats.ordering_cost.mean,
            shortage_cost_mean: stats.shortage_cost.mean,
        });
    }
    Ok(points)
}

/// Append curve rows for one item:
/// `item_id,alpha,rop,capped,total_cost_mean,holding,ordering,shortage,ci_halfwidth`.
pub fn write_curve_rows<W: std::io::Write>(
    writer: &mut csv::Writer<W>,
    item_id: &str,
    points: &[ServiceCurvePoint],
) -> Result<(), csv::Error> {
    for p in points {
        writer.write_record([
            item_id,
            &p.alpha.to_string(),
            &p.rop.to_string(),
            &p.capped.to_string(),
            &p.total_cost_mean.to_string(),
            &p.holding_cost_mean.to_string(),
            &p.ordering_cost_mean.to_string(),
            &p.shortage_cost_mean.to_string(),
            &p.total_cost_ci.unwrap_or(0.0).to_string(),
        ])?;
    }
    Ok(())
}

pub fn write_curves_csv<W: std::io::Write>(
    out: W,
    curves: &[(String, Vec<ServiceCurvePoint>)],
) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record([
        "item_id",
        "alpha",
        "rop",
        "capped",
        "total_cost_mean",
        "holding",
        "ordering",
        "shortage",
        "ci_halfwidth",
    ])?;
    for (item_id, points) in curves {
        write_curve_rows(&mut writer, item_id, points)?;
    }
    writer.flush()?;
    Ok(())
}

/// Render a minimal static SVG line chart of total cost against service
/// level. Pure plot data; deterministic output bytes.
pub fn curve_svg(item_id: &str, points: &[ServiceCurvePoint]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const MARGIN: f64 = 60.0;
    let (x0, x1) = (MARGIN, W - 20.0);
    let (y0, y1) = (H - 50.0, 30.0);

    let min_a = points.first().map_or(0.0, |p| p.alpha);
    let max_a = points.last().map_or(1.0, |p| p.alpha);
    let max_c = points
        .iter()
        .map(|p| p.total_cost_mean)
        .fold(f64::MIN, f64::max);
    let min_c = points
        .iter()
        .map(|p| p.total_cost_mean)
        .fold(f64::MAX, f64::min);
    let span_a = (max_a - min_a).max(1e-12);
    let span_c = (max_c - min_c).max(1e-12);

    let x = |a: f64| x0 + (a - min_a) / span_a * (x1 - x0);
    let y = |c: f64| y0 - (c - min_c) / span_c * (y0 - y1);

    let mut path = String::new();
    for (i, p) in points.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        path.push_str(&format!(
            "{cmd}{:.2},{:.2} ",
            x(p.alpha),
            y(p.total_cost_mean)
        ));
    }
    let mut markers = String::new();
    for p in points {
        markers.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f6feb\"/>",
            x(p.alpha),
            y(p.total_cost_mean)
        ));
    }
    let mut labels = String::new();
    for p in points {
        labels.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"middle\">{}</text>",
            x(p.alpha),
            y0 + 14.0,
            p.alpha
        ));
    }
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>",
            "<text x=\"{tx}\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">",
            "{id}: total cost vs service level</text>",
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>",
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>",
            "<text x=\"{tx}\" y=\"{h2}\" font-size=\"11\" text-anchor=\"middle\">service level</text>",
            "<text x=\"14\" y=\"{ty}\" font-size=\"11\" text-anchor=\"middle\" ",
            "transform=\"rotate(-90 14 {ty})\">mean total cost ({lo:.1}..{hi:.1})</text>",
            "<path d=\"{path}\" fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"1.5\"/>",
            "{markers}{labels}</svg>"
        ),
        w = W,
        h = H,
        h2 = H - 12.0,
        tx = (x0 + x1) / 2.0,
        ty = (y0 + y1) / 2.0,
        id = item_id,
        x0 = x0,
        x1 = x1,
        y0 = y0,
        y1 = y1,
        lo = min_c,
        hi = max_c,
        path = path.trim_end(),
        markers = markers,
        labels = labels,
    )
}
