use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resweights::DistributionKind;
use crate::sampling::DistributionParams;

/// Large-sample bias and variance of the ML estimators.
///
/// Log-logistic values are the known first-order bias and inverse Fisher
/// information; for Weibull only the Cramér-Rao variance bounds are
/// available and the biases are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlAsymptotics {
    pub dist: DistributionKind,
    pub bias_alpha: Option<f64>,
    pub bias_beta: Option<f64>,
    pub var_alpha: f64,
    pub var_beta: f64,
}

pub fn ml_asymptotics(
    dist: DistributionKind,
    params: &DistributionParams,
    n: usize,
) -> Result<MlAsymptotics> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let n = n as f64;
    let DistributionParams { alpha, beta } = *params;
    match dist {
        DistributionKind::LogLogistic => Ok(MlAsymptotics {
            dist,
            bias_alpha: Some(1.5 * alpha / (n * beta * beta)),
            bias_beta: Some(1.2764 * beta / n),
            var_alpha: 3.0 * alpha * alpha / (n * beta * beta),
            var_beta: 0.6993 * beta * beta / n,
        }),
        DistributionKind::Weibull => Ok(MlAsymptotics {
            dist,
            bias_alpha: None,
            bias_beta: None,
            var_alpha: 1.109 * (alpha / beta).powi(2) / n,
            var_beta: 0.608 * beta * beta / n,
        }),
        DistributionKind::Logistic => Err(Error::Unsupported(
            "no ML asymptotics are tabulated for the logistic family".into(),
        )),
    }
}

/// Efficiency of an estimator relative to ML: var_ml / var_other.
pub fn efficiency(var_ml: f64, var_other: f64) -> Result<f64> {
    if !(var_ml > 0.0 && var_other > 0.0 && var_ml.is_finite() && var_other.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "variances must be positive (got {var_ml}, {var_other})"
        )));
    }
    Ok(var_ml / var_other)
}
