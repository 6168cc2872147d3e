//! Maximum-likelihood fitting and information-criterion model selection.
//!
//! Each candidate family is fitted to an observation series by maximum
//! likelihood; candidates are ranked by `k * ln(n) - 2 * ln(L)` (lower is
//! better) and the head of the ranking is the selected model. Families
//! whose support or spread requirements the data cannot meet are skipped
//! with a recorded reason instead of failing the whole selection.

mod families;
mod special;

pub use families::{DistError, Distribution, Family};
pub use special::{digamma, gamma_p, gamma_q, ln_gamma, std_normal_cdf, trigamma};

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fitting refuses series shorter than this; callers fall back to
/// empirical resampling of the raw history.
pub const MIN_FIT_OBSERVATIONS: usize = 3;

/// Tolerance for treating an observation as integer-valued.
const INTEGER_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("series has {got} observations; fitting requires at least {MIN_FIT_OBSERVATIONS}")]
    InsufficientData { got: usize },
    #[error("observation {index} = {value} is not a finite nonnegative number")]
    BadObservation { index: usize, value: f64 },
    #[error("{family} not applicable: {reason}")]
    NotApplicable { family: Family, reason: String },
    #[error("{family}: estimator did not converge after {iterations} iterations")]
    NonConvergence { family: Family, iterations: usize },
    #[error("no applicable family; reasons: {}", .reasons.iter().map(|(f, r)| format!("{f}: {r}")).collect::<Vec<_>>().join("; "))]
    NoApplicableFamily { reasons: Vec<(Family, String)> },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Whether a series is treated as counts or as continuous measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Discrete,
    Continuous,
}

/// A validated series of nonnegative observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    values: Vec<f64>,
    kind: SeriesKind,
}

impl ObservationSeries {
    /// Build a series, inferring the kind: integer-valued data is
    /// discrete-eligible (and remains eligible for continuous families).
    pub fn new(values: Vec<f64>) -> Result<Self, FitError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(FitError::BadObservation { index, value });
            }
        }
        let integral = values.iter().all(|v| (v - v.round()).abs() <= INTEGER_TOL);
        let kind = if integral {
            SeriesKind::Discrete
        } else {
            SeriesKind::Continuous
        };
        Ok(ObservationSeries { values, kind })
    }

    /// Build a series with an explicitly declared kind.
    pub fn with_kind(values: Vec<f64>, kind: SeriesKind) -> Result<Self, FitError> {
        let mut s = Self::new(values)?;
        if kind == SeriesKind::Discrete && s.kind == SeriesKind::Continuous {
            let index = s
                .values
                .iter()
                .position(|v| (v - v.round()).abs() > INTEGER_TOL)
                .unwrap();
            return Err(FitError::BadObservation {
                index,
                value: s.values[index],
            });
        }
        s.kind = kind;
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Maximum-likelihood (n-denominator) variance.
    pub fn variance_mle(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }
}

/// A fitted model: the distribution plus the fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedDistribution {
    pub distribution: Distribution,
    pub log_likelihood: f64,
    pub bic: f64,
    pub n: usize,
}

impl FittedDistribution {
    pub fn family(&self) -> Family {
        self.distribution.family()
    }

    pub fn params(&self) -> &[f64] {
        self.distribution.params()
    }
}

/// Outcome of fitting every applicable family to one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Applicable candidates sorted ascending by information criterion.
    pub candidates: Vec<FittedDistribution>,
    /// Families that could not be fitted, with the reason.
    pub skipped: Vec<(Family, String)>,
}

impl FitReport {
    pub fn best(&self) -> &FittedDistribution {
        &self.candidates[0]
    }
}

/// The information criterion: `k * ln(n) - 2 * log_likelihood`.
pub fn bic(k: usize, n: usize, log_likelihood: f64) -> f64 {
    debug_assert!(k >= 1 && n >= 1);
    k as f64 * (n as f64).ln() - 2.0 * log_likelihood
}

fn not_applicable(family: Family, reason: &str) -> FitError {
    FitError::NotApplicable {
        family,
        reason: reason.to_string(),
    }
}

/// Fit one family to the series by maximum likelihood.
pub fn mle_fit(series: &ObservationSeries, family: Family) -> Result<FittedDistribution, FitError> {
    let n = series.len();
    if n < MIN_FIT_OBSERVATIONS {
        return Err(FitError::InsufficientData { got: n });
    }
    let xs = series.values();
    let mean = series.mean();
    let var = series.variance_mle();

    let distribution = match family {
        Family::Poisson => {
            if series.kind() != SeriesKind::Discrete {
                return Err(not_applicable(
                    family,
                    "requires integer-valued observations",
                ));
            }
            if mean <= 0.0 {
                return Err(not_applicable(
                    family,
                    "sample mean is zero; rate must be positive",
                ));
            }
            Distribution::poisson(mean)?
        }
        Family::Exponential => {
            if mean <= 0.0 {
                return Err(not_applicable(
                    family,
                    "sample mean is zero; mean must be positive",
                ));
            }
            Distribution::exponential(mean)?
        }
        Family::Normal => {
            if var <= 0.0 {
                return Err(not_applicable(
                    family,
                    "zero variance; sigma must be positive",
                ));
            }
            Distribution::normal(mean, var.sqrt())?
        }
        Family::LogNormal => {
            if xs.iter().any(|&x| x <= 0.0) {
                return Err(not_applicable(
                    family,
                    "requires strictly positive observations",
                ));
            }
            let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let mu = logs.iter().sum::<f64>() / n as f64;
            let s2 = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n as f64;
            if s2 <= 0.0 {
                return Err(not_applicable(family, "zero variance of logs"));
            }
            Distribution::log_normal(mu, s2.sqrt())?
        }
        Family::Gamma => {
            if xs.iter().any(|&x| x <= 0.0) {
                return Err(not_applicable(
                    family,
                    "requires strictly positive observations",
                ));
            }
            if var <= 0.0 {
                return Err(not_applicable(family, "zero variance"));
            }
            let shape = gamma_shape_mle(series, family)?;
            Distribution::gamma(shape, mean / shape)?
        }
        Family::Uniform => {
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi <= lo {
                return Err(not_applicable(family, "zero range; max must exceed min"));
            }
            Distribution::uniform(lo, hi)?
        }
    };

    let log_likelihood: f64 = xs.iter().map(|&x| distribution.ln_pdf(x)).sum();
    let bic = bic(family.param_count(), n, log_likelihood);
    Ok(FittedDistribution {
        distribution,
        log_likelihood,
        bic,
        n,
    })
}

const GAMMA_NEWTON_TOL: f64 = 1e-10;
const GAMMA_NEWTON_MAX_ITER: usize = 200;

/// Solve `ln(shape) - digamma(shape) = s` by Newton iteration, where
/// `s = ln(mean) - mean(ln x)`. Initialized with the closed-form
/// approximation `(3 - s + sqrt((s - 3)^2 + 24 s)) / (12 s)`.
fn gamma_shape_mle(series: &ObservationSeries, family: Family) -> Result<f64, FitError> {
    let n = series.len() as f64;
    let mean = series.mean();
    let mean_log = series.values().iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_log;
    if s <= 0.0 {
        // By Jensen's inequality s > 0 unless the data is constant.
        return Err(not_applicable(
            family,
            "degenerate data; log-moment gap is zero",
        ));
    }
    let mut shape = (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..GAMMA_NEWTON_MAX_ITER {
        let g = shape.ln() - digamma(shape) - s;
        let dg = 1.0 / shape - trigamma(shape);
        let mut step = g / dg;
        // keep the iterate in the domain
        while shape - step <= 0.0 {
            step *= 0.5;
        }
        shape -= step;
        if step.abs() <= GAMMA_NEWTON_TOL * shape.max(1.0) {
            return Ok(shape);
        }
    }
    Err(FitError::NonConvergence {
        family,
        iterations: GAMMA_NEWTON_MAX_ITER,
    })
}

/// Fit every family in `families` and rank the results.
///
/// Ties in the criterion break toward fewer parameters, then the fixed
/// family declaration order, so the ranking does not depend on the order
/// families are requested in.
pub fn select_best(series: &ObservationSeries, families: &[Family]) -> Result<FitReport, FitError> {
    let mut candidates = Vec::new();
    let mut skipped = Vec::new();
    for &family in families {
        match mle_fit(series, family) {
            Ok(fit) => candidates.push(fit),
            Err(FitError::NotApplicable { family, reason }) => skipped.push((family, reason)),
            Err(FitError::InsufficientData { got }) => {
                skipped.push((family, format!("insufficient data: {got} observations")));
            }
            Err(FitError::NonConvergence { family, iterations }) => {
                skipped.push((
                    family,
                    format!("estimator did not converge in {iterations} iterations"),
                ));
            }
            Err(e) => return Err(e),
        }
    }
    if candidates.is_empty() {
        return Err(FitError::NoApplicableFamily { reasons: skipped });
    }
    candidates.sort_by(|a, b| {
        a.bic
            .total_cmp(&b.bic)
            .then_with(|| a.family().param_count().cmp(&b.family().param_count()))
            .then_with(|| a.family().order().cmp(&b.family().order()))
    });
    Ok(FitReport {
        candidates,
        skipped,
    })
}

/// Append fit-report rows for one item to a CSV writer:
/// `item_id,family,params_json,log_likelihood,bic,selected`.
pub fn write_fit_report_rows<W: Write>(
    writer: &mut csv::Writer<W>,
    item_id: &str,
    report: &FitReport,
) -> Result<(), csv::Error> {
    for (idx, fit) in report.candidates.iter().enumerate() {
        writer.write_record([
            item_id,
            fit.family().name(),
            &serde_json::to_string(fit.params()).expect("params serialize"),
            &fit.log_likelihood.to_string(),
            &fit.bic.to_string(),
            if idx == 0 { "true" } else { "false" },
        ])?;
    }
    Ok(())
}

/// Write a complete fit-report CSV with header for a set of items.
pub fn write_fit_reports_csv<W: Write>(
    out: W,
    reports: &[(String, FitReport)],
) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record([
        "item_id",
        "family",
        "params_json",
        "log_likelihood",
        "bic",
        "selected",
    ])?;
    for (item_id, report) in reports {
        write_fit_report_rows(&mut writer, item_id, report)?;
    }
    writer.flush()?;
    Ok(())
}
