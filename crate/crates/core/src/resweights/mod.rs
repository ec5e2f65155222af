//! Residual moments and weights for probability-plot regression.
//!
//! For a sample of size `n`, the transformed order statistic at rank `r`
//! (logit of the fitted CDF for the log-logistic family, log-log of the
//! survival for Weibull) has a distribution free of the parameters. Its mean
//! is the regression response and the reciprocal of its variance is the
//! regression weight.

mod covariance;
pub mod weibull;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use covariance::{mc_covariance, CovarianceEstimate, DEFAULT_MC_REPLICATIONS};
pub use weibull::{
    weibull_moments, weibull_residual_mean, weibull_residual_second_moment, weibull_residual_var,
};

use crate::error::{Error, Result};
use crate::sampling::{log_neg_log_complement, logit, RngSeed};
use crate::specfun::{digamma, trigamma};
use weibull::check_rank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    LogLogistic,
    Weibull,
    /// Location-scale logistic, not log-logistic.
    Logistic,
}

impl DistributionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DistributionKind::LogLogistic => "loglogistic",
            DistributionKind::Weibull => "weibull",
            DistributionKind::Logistic => "logistic",
        }
    }

    /// Whether observations must be strictly positive.
    pub fn is_positive_support(self) -> bool {
        !matches!(self, DistributionKind::Logistic)
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "loglogistic" => Ok(DistributionKind::LogLogistic),
            "weibull" => Ok(DistributionKind::Weibull),
            "logistic" => Ok(DistributionKind::Logistic),
            other => Err(Error::InvalidArgument(format!(
                "unknown distribution '{other}'"
            ))),
        }
    }
}

/// Plotting position assigned to rank `r` of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlottingScheme {
    /// r / (n + 1)
    #[default]
    Standard,
    /// Median rank, (r - 0.3) / (n + 0.4)
    Bernard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentMethod {
    Exact,
    Asymptotic,
    MonteCarlo,
}

/// Per-rank response means, residual variances and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMomentTable {
    pub dist: DistributionKind,
    pub n: usize,
    pub method: MomentMethod,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub weights: Vec<f64>,
}

/// ψ(r) - ψ(n - r + 1): expected logit of the r-th uniform order statistic.
pub fn loglogistic_residual_mean(r: usize, n: usize) -> Result<f64> {
    check_rank(r, n)?;
    if 2 * r == n + 1 {
        return Ok(0.0);
    }
    Ok(digamma(r as f64)? - digamma((n - r + 1) as f64)?)
}

/// ψ'(r) + ψ'(n - r + 1).
pub fn loglogistic_residual_var(r: usize, n: usize) -> Result<f64> {
    check_rank(r, n)?;
    // summed in a fixed order so the value is exactly symmetric in r <-> n+1-r
    let (lo, hi) = if r <= n + 1 - r {
        (r, n + 1 - r)
    } else {
        (n + 1 - r, r)
    };
    Ok(trigamma(lo as f64)? + trigamma(hi as f64)?)
}

pub fn plotting_position(r: usize, n: usize, scheme: PlottingScheme) -> Result<f64> {
    check_rank(r, n)?;
    let (r, n) = (r as f64, n as f64);
    Ok(match scheme {
        PlottingScheme::Standard => r / (n + 1.0),
        PlottingScheme::Bernard => (r - 0.3) / (n + 0.4),
    })
}

/// Large-sample residual variance of the logit response,
/// 1 / (n p (1 - p)) at the plotting position p.
pub fn asymptotic_residual_var(r: usize, n: usize, scheme: PlottingScheme) -> Result<f64> {
    let p = plotting_position(r, n, scheme)?;
    Ok(1.0 / (n as f64 * p * (1.0 - p)))
}

/// Large-sample residual covariance of the logit response for r < s,
/// 1 / (n p_s (1 - p_r)).
pub fn asymptotic_residual_cov(
    r: usize,
    s: usize,
    n: usize,
    scheme: PlottingScheme,
) -> Result<f64> {
    if r == 0 || r >= s || s > n {
        return Err(Error::RankOrder { r, s, n });
    }
    covariance_form(r, s, n, scheme)
}

fn covariance_form(r: usize, s: usize, n: usize, scheme: PlottingScheme) -> Result<f64> {
    let pr = plotting_position(r, n, scheme)?;
    let ps = plotting_position(s, n, scheme)?;
    Ok(1.0 / (n as f64 * ps * (1.0 - pr)))
}

/// Large-sample residual variance of the log-log Weibull response by the
/// delta method: p / (n (1 - p) log²(1 - p)).
pub fn weibull_asymptotic_residual_var(r: usize, n: usize, scheme: PlottingScheme) -> Result<f64> {
    let p = plotting_position(r, n, scheme)?;
    let l = (-p).ln_1p();
    Ok(p / (n as f64 * (1.0 - p) * l * l))
}

/// Large-sample residual variance for any family.
pub fn asymptotic_var_for(
    dist: DistributionKind,
    r: usize,
    n: usize,
    scheme: PlottingScheme,
) -> Result<f64> {
    match dist {
        DistributionKind::LogLogistic | DistributionKind::Logistic => {
            asymptotic_residual_var(r, n, scheme)
        }
        DistributionKind::Weibull => weibull_asymptotic_residual_var(r, n, scheme),
    }
}

/// Exact response mean at rank `r`. The logistic response is
/// log((1 - F)/F), the negated logit.
pub fn exact_mean(dist: DistributionKind, r: usize, n: usize) -> Result<f64> {
    match dist {
        DistributionKind::LogLogistic => loglogistic_residual_mean(r, n),
        DistributionKind::Logistic => Ok(-loglogistic_residual_mean(r, n)?),
        DistributionKind::Weibull => weibull_residual_mean(r, n),
    }
}

pub fn exact_var(dist: DistributionKind, r: usize, n: usize) -> Result<f64> {
    match dist {
        DistributionKind::LogLogistic | DistributionKind::Logistic => {
            loglogistic_residual_var(r, n)
        }
        DistributionKind::Weibull => weibull_residual_var(r, n),
    }
}

fn asymptotic_mean(
    dist: DistributionKind,
    r: usize,
    n: usize,
    scheme: PlottingScheme,
) -> Result<f64> {
    let p = plotting_position(r, n, scheme)?;
    Ok(match dist {
        DistributionKind::LogLogistic => logit(p),
        DistributionKind::Logistic => -logit(p),
        DistributionKind::Weibull => log_neg_log_complement(p),
    })
}

/// Options for [`moment_table`] that only some methods use.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TableOptions {
    pub scheme: PlottingScheme,
    pub mc_m: Option<usize>,
    pub seed: Option<RngSeed>,
}

/// Builds the response means, variances and weights for all ranks.
///
/// Means are exact for the `Exact` and `MonteCarlo` methods and the
/// transformed plotting position for `Asymptotic`. `MonteCarlo` takes the
/// variances from the diagonal of [`mc_covariance`] and requires
/// `mc_m` (the seed defaults to zero).
pub fn moment_table(
    dist: DistributionKind,
    n: usize,
    method: MomentMethod,
    options: TableOptions,
) -> Result<ResidualMomentTable> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "moment tables need n >= 2 (got {n})"
        )));
    }
    if options.mc_m.is_some() != (method == MomentMethod::MonteCarlo) {
        return Err(Error::InvalidArgument(
            "a replication count is required for, and only for, Monte-Carlo weights".into(),
        ));
    }
    let ranks = 1..=n;
    let (means, variances) = match method {
        MomentMethod::Exact => (
            ranks
                .clone()
                .map(|r| exact_mean(dist, r, n))
                .collect::<Result<Vec<_>>>()?,
            ranks
                .map(|r| exact_var(dist, r, n))
                .collect::<Result<Vec<_>>>()?,
        ),
        MomentMethod::Asymptotic => (
            ranks
                .clone()
                .map(|r| asymptotic_mean(dist, r, n, options.scheme))
                .collect::<Result<Vec<_>>>()?,
            ranks
                .map(|r| asymptotic_var_for(dist, r, n, options.scheme))
                .collect::<Result<Vec<_>>>()?,
        ),
        MomentMethod::MonteCarlo => {
            let m = options.mc_m.unwrap_or(DEFAULT_MC_REPLICATIONS);
            let cov = mc_covariance(dist, n, m, options.seed.unwrap_or(RngSeed(0)))?;
            (
                ranks
                    .map(|r| exact_mean(dist, r, n))
                    .collect::<Result<Vec<_>>>()?,
                cov.diagonal(),
            )
        }
    };
    ResidualMomentTable::from_parts(dist, method, means, variances)
}

impl ResidualMomentTable {
    /// Assembles a table from means and variances; weights are reciprocals.
    pub fn from_parts(
        dist: DistributionKind,
        method: MomentMethod,
        means: Vec<f64>,
        variances: Vec<f64>,
    ) -> Result<Self> {
        if means.len() != variances.len() || means.is_empty() {
            return Err(Error::InvalidArgument(
                "means and variances must be non-empty and of equal length".into(),
            ));
        }
        if let Some(i) = variances.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NumericalInstability(format!(
                "variance at rank {} is not positive ({})",
                i + 1,
                variances[i]
            )));
        }
        let weights = variances.iter().map(|v| 1.0 / v).collect();
        Ok(Self {
            dist,
            n: means.len(),
            method,
            means,
            variances,
            weights,
        })
    }

    /// CSV with header `rank,mean,variance,weight`; numbers use the shortest
    /// representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,mean,variance,weight\n");
        for i in 0..self.n {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                self.means[i],
                self.variances[i],
                self.weights[i]
            ));
        }
        out
    }

    /// Parses the output of [`to_csv`](Self::to_csv). Weights are taken as
    /// written rather than recomputed.
    pub fn from_csv(dist: DistributionKind, method: MomentMethod, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "rank,mean,variance,weight" => {}
            _ => {
                return Err(Error::Parse {
                    row: 1,
                    message: "expected header rank,mean,variance,weight".into(),
                })
            }
        }
        let (mut means, mut variances, mut weights) = (vec![], vec![], vec![]);
        for (i, line) in lines {
            let row = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    row,
                    message: format!("expected 4 fields, found {}", fields.len()),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    message: format!("'{s}' is not a number"),
                })
            };
            let rank: usize = fields[0].parse().map_err(|_| Error::Parse {
                row,
                message: format!("'{}' is not a rank", fields[0]),
            })?;
            if rank != means.len() + 1 {
                return Err(Error::Parse {
                    row,
                    message: format!("rank {rank} out of sequence"),
                });
            }
            means.push(num(fields[1])?);
            variances.push(num(fields[2])?);
            weights.push(num(fields[3])?);
        }
        let mut table = Self::from_parts(dist, method, means, variances)?;
        table.weights = weights;
        Ok(table)
    }
}
