//! Probability families: densities, CDFs, quantiles, moments, sampling.
//!
//! Six families cover the demand and lead-time shapes the pipeline needs.
//! Parameter conventions:
//!
//! | family      | params            | notes                                  |
//! |-------------|-------------------|----------------------------------------|
//! | poisson     | `[rate]`          | support 0, 1, 2, ...                   |
//! | exponential | `[mean]`          | density `(1/m) exp(-x/m)`              |
//! | normal      | `[mu, sigma]`     |                                        |
//! | lognormal   | `[mu, sigma]`     | location/scale of `ln x`               |
//! | gamma       | `[shape, scale]`  |                                        |
//! | uniform     | `[min, max]`      | closed interval                        |
//!
//! The exponential distribution is parameterized by its MEAN, not its rate,
//! so the maximum-likelihood estimate is simply the sample mean.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::special::{gamma_p, gamma_q, ln_gamma, std_normal_cdf};

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("{family}: parameter {name} = {value} outside its domain")]
    BadParameter {
        family: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("{family}: expected {expected} parameters, got {got}")]
    ParamCount {
        family: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("quantile level {0} outside the open interval (0, 1)")]
    BadQuantileLevel(f64),
    #[error("quantile search failed to bracket level {0}")]
    BracketFailure(f64),
}

/// Probability family tag. Declaration order is the fixed tie-break order
/// used by model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Poisson,
    Exponential,
    Normal,
    LogNormal,
    Gamma,
    Uniform,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Poisson,
        Family::Exponential,
        Family::Normal,
        Family::LogNormal,
        Family::Gamma,
        Family::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Exponential => "exponential",
            Family::Normal => "normal",
            Family::LogNormal => "lognormal",
            Family::Gamma => "gamma",
            Family::Uniform => "uniform",
        }
    }

    /// Number of free parameters (the `k` in the information criterion).
    pub fn param_count(self) -> usize {
        match self {
            Family::Poisson | Family::Exponential => 1,
            Family::Normal | Family::LogNormal | Family::Gamma | Family::Uniform => 2,
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, Family::Poisson)
    }

    /// Order index for deterministic tie-breaking.
    pub fn order(self) -> usize {
        Family::ALL.iter().position(|f| *f == self).unwrap()
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully parameterized distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    family: Family,
    params: Vec<f64>,
}

impl Distribution {
    /// Validate parameters against the family's domain.
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self, DistError> {
        let expected = family.param_count();
        if params.len() != expected {
            return Err(DistError::ParamCount {
                family: family.name(),
                expected,
                got: params.len(),
            });
        }
        let bad = |name: &'static str, value: f64| DistError::BadParameter {
            family: family.name(),
            name,
            value,
        };
        let finite = params.iter().all(|p| p.is_finite());
        if !finite {
            return Err(bad("any", f64::NAN));
        }
        match family {
            Family::Poisson if params[0] <= 0.0 => return Err(bad("rate", params[0])),
            Family::Exponential if params[0] <= 0.0 => return Err(bad("mean", params[0])),
            Family::Normal | Family::LogNormal if params[1] <= 0.0 => {
                return Err(bad("sigma", params[1]))
            }
            Family::Gamma if params[0] <= 0.0 => return Err(bad("shape", params[0])),
            Family::Gamma if params[1] <= 0.0 => return Err(bad("scale", params[1])),
            Family::Uniform if params[1] <= params[0] => return Err(bad("max", params[1])),
            _ => {}
        }
        Ok(Distribution { family, params })
    }

    pub fn poisson(rate: f64) -> Result<Self, DistError> {
        Self::new(Family::Poisson, vec![rate])
    }

    pub fn exponential(mean: f64) -> Result<Self, DistError> {
        Self::new(Family::Exponential, vec![mean])
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self, DistError> {
        Self::new(Family::Normal, vec![mu, sigma])
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self, DistError> {
        Self::new(Family::LogNormal, vec![mu, sigma])
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self, DistError> {
        Self::new(Family::Gamma, vec![shape, scale])
    }

    pub fn uniform(min: f64, max: f64) -> Result<Self, DistError> {
        Self::new(Family::Uniform, vec![min, max])
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn mean(&self) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Poisson | Family::Exponential => p[0],
            Family::Normal => p[0],
            Family::LogNormal => (p[0] + 0.5 * p[1] * p[1]).exp(),
            Family::Gamma => p[0] * p[1],
            Family::Uniform => 0.5 * (p[0] + p[1]),
        }
    }

    pub fn variance(&self) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Poisson => p[0],
            Family::Exponential => p[0] * p[0],
            Family::Normal => p[1] * p[1],
            Family::LogNormal => {
                let s2 = p[1] * p[1];
                (s2.exp() - 1.0) * (2.0 * p[0] + s2).exp()
            }
            Family::Gamma => p[0] * p[1] * p[1],
            Family::Uniform => {
                let w = p[1] - p[0];
                w * w / 12.0
            }
        }
    }

    /// Log density (log mass for the discrete family). Outside the support
    /// the result is negative infinity.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Poisson => {
                if x < 0.0 || (x - x.round()).abs() > 1e-9 {
                    return f64::NEG_INFINITY;
                }
                let k = x.round();
                -p[0] + k * p[0].ln() - ln_gamma(k + 1.0)
            }
            Family::Exponential => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -p[0].ln() - x / p[0]
                }
            }
            Family::Normal => {
                let z = (x - p[0]) / p[1];
                -0.5 * z * z - p[1].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Family::LogNormal => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (x.ln() - p[0]) / p[1];
                -0.5 * z * z - x.ln() - p[1].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Family::Gamma => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                (p[0] - 1.0) * x.ln() - x / p[1] - p[0] * p[1].ln() - ln_gamma(p[0])
            }
            Family::Uniform => {
                if x < p[0] || x > p[1] {
                    f64::NEG_INFINITY
                } else {
                    -(p[1] - p[0]).ln()
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Poisson => {
                if x < 0.0 {
                    0.0
                } else {
                    // Poisson CDF at k via the upper incomplete gamma.
                    gamma_q(x.floor() + 1.0, p[0])
                }
            }
            Family::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / p[0]).exp_m1()
                }
            }
            Family::Normal => std_normal_cdf((x - p[0]) / p[1]),
            Family::LogNormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - p[0]) / p[1])
                }
            }
            Family::Gamma => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_p(p[0], x / p[1])
                }
            }
            Family::Uniform => ((x - p[0]) / (p[1] - p[0])).clamp(0.0, 1.0),
        }
    }

    /// Quantile at level `alpha` in (0, 1).
    ///
    /// Closed form for exponential and uniform; bisection on the CDF to an
    /// absolute tolerance of 1e-9 in probability for the other continuous
    /// families; smallest integer `k` with `F(k) >= alpha` for the discrete
    /// family.
    pub fn quantile(&self, alpha: f64) -> Result<f64, DistError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DistError::BadQuantileLevel(alpha));
        }
        let p = &self.params;
        match self.family {
            Family::Exponential => Ok(-p[0] * (1.0 - alpha).ln()),
            Family::Uniform => Ok(p[0] + alpha * (p[1] - p[0])),
            Family::Poisson => {
                // Binary search on the integer lattice with the invariant
                // F(lo) < alpha <= F(hi).
                let mut hi = (self.mean() + 10.0 * self.variance().sqrt())
                    .ceil()
                    .max(1.0) as i64;
                while self.cdf(hi as f64) < alpha {
                    hi = hi.saturating_mul(2);
                    if hi > 1_000_000_000_000 {
                        return Err(DistError::BracketFailure(alpha));
                    }
                }
                let mut lo = -1i64; // F(-1) = 0 < alpha
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if self.cdf(mid as f64) >= alpha {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Ok(hi as f64)
            }
            Family::Normal | Family::LogNormal | Family::Gamma => self.bisect_quantile(alpha),
        }
    }

    fn bisect_quantile(&self, alpha: f64) -> Result<f64, DistError> {
        let sd = self.variance().sqrt();
        let (mut lo, mut hi) = match self.family {
            Family::Normal => (self.mean() - 2.0 * sd, self.mean() + 2.0 * sd),
            // Positive support: zero is a hard lower bound.
            _ => (0.0, (self.mean() + 2.0 * sd).max(1e-12)),
        };
        // Expand the bracket until it straddles the level.
        let mut span = (hi - lo).max(1e-9);
        for _ in 0..200 {
            if self.cdf(lo) < alpha {
                break;
            }
            lo -= span;
            span *= 2.0;
            if matches!(self.family, Family::LogNormal | Family::Gamma) {
                lo = lo.max(0.0);
                break; // cdf(0) = 0 < alpha always holds here
            }
        }
        span = (hi - lo).max(1e-9);
        for _ in 0..200 {
            if self.cdf(hi) >= alpha {
                break;
            }
            hi += span;
            span *= 2.0;
        }
        if self.cdf(hi) < alpha || self.cdf(lo) >= alpha {
            return Err(DistError::BracketFailure(alpha));
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..300 {
            mid = 0.5 * (lo + hi);
            let f = self.cdf(mid);
            if (f - alpha).abs() <= 1e-9 {
                return Ok(mid);
            }
            if f < alpha {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) < 1e-13 * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok(mid)
    }

    /// Draw one value from this distribution.
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Poisson => {
                let d = rand_distr::Poisson::new(p[0]).expect("validated rate");
                rng.sample(d)
            }
            Family::Exponential => {
                let d = rand_distr::Exp::new(1.0 / p[0]).expect("validated mean");
                rng.sample(d)
            }
            Family::Normal => {
                let d = rand_distr::Normal::new(p[0], p[1]).expect("validated sigma");
                rng.sample(d)
            }
            Family::LogNormal => {
                let d = rand_distr::LogNormal::new(p[0], p[1]).expect("validated sigma");
                rng.sample(d)
            }
            Family::Gamma => {
                let d = rand_distr::Gamma::new(p[0], p[1]).expect("validated shape/scale");
                rng.sample(d)
            }
            Family::Uniform => p[0] + rng.random::<f64>() * (p[1] - p[0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_domains_enforced() {
        assert!(Distribution::poisson(0.0).is_err());
        assert!(Distribution::exponential(-1.0).is_err());
        assert!(Distribution::normal(0.0, 0.0).is_err());
        assert!(Distribution::gamma(2.0, -3.0).is_err());
        assert!(Distribution::uniform(1.0, 1.0).is_err());
        assert!(Distribution::new(Family::Normal, vec![1.0]).is_err());
    }

    #[test]
    fn moments_match_formulas() {
        let g = Distribution::gamma(2.0, 3.0).unwrap();
        assert!((g.mean() - 6.0).abs() < 1e-12);
        assert!((g.variance() - 18.0).abs() < 1e-12);
        let u = Distribution::uniform(2.0, 8.0).unwrap();
        assert!((u.mean() - 5.0).abs() < 1e-12);
        assert!((u.variance() - 3.0).abs() < 1e-12);
        let e = Distribution::exponential(2.0).unwrap();
        assert!((e.variance() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_mass_sums_to_one() {
        let d = Distribution::poisson(4.2).unwrap();
        let total: f64 = (0..60).map(|k| d.ln_pdf(k as f64).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(d.ln_pdf(2.5), f64::NEG_INFINITY);
        assert_eq!(d.ln_pdf(-1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn exponential_quantile_closed_form() {
        let d = Distribution::exponential(2.0).unwrap();
        let q = d.quantile(0.5).unwrap();
        assert!((q - 2.0 * (2.0f64).ln()).abs() < 1e-12);
        assert!((d.cdf(q) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quantile_round_trips_through_cdf() {
        let dists = [
            Distribution::normal(10.0, 3.0).unwrap(),
            Distribution::log_normal(1.0, 0.5).unwrap(),
            Distribution::gamma(2.5, 1.7).unwrap(),
            Distribution::uniform(3.0, 9.0).unwrap(),
            Distribution::exponential(4.0).unwrap(),
        ];
        for d in &dists {
            for alpha in [0.01, 0.25, 0.5, 0.9, 0.99, 0.9999] {
                let q = d.quantile(alpha).unwrap();
                assert!(
                    (d.cdf(q) - alpha).abs() < 1e-6,
                    "{:?} alpha={alpha}: q={q}, F(q)={}",
                    d.family(),
                    d.cdf(q)
                );
            }
        }
    }

    #[test]
    fn discrete_quantile_is_smallest_satisfying_integer() {
        let d = Distribution::poisson(3.0).unwrap();
        for alpha in [0.05, 0.3, 0.5, 0.77, 0.99] {
            let q = d.quantile(alpha).unwrap();
            assert_eq!(q, q.round());
            assert!(d.cdf(q) >= alpha);
            assert!(d.cdf(q - 1.0) < alpha);
        }
    }

    #[test]
    fn quantile_rejects_bad_levels() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.0).is_err());
        assert!(d.quantile(-0.3).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        use crate::rng::stream;
        let d = Distribution::gamma(2.0, 3.0).unwrap();
        let mut a = stream(9, "draws");
        let mut b = stream(9, "draws");
        for _ in 0..32 {
            assert_eq!(d.sample(&mut a), d.sample(&mut b));
        }
    }
}
