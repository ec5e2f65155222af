use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Estimator, FitOptions};
use crate::error::{Error, Result};
use crate::resweights::DistributionKind;
use crate::sampling::RngSeed;

const STREAM_LABEL: u64 = 0xB0_07_57_AA;
pub const MIN_BOOTSTRAP_REPS: usize = 100;
/// Largest tolerated fraction of failed refits.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

/// Nonparametric bootstrap standard errors. For the logistic family
/// `se_alpha` and `se_beta` refer to the location and scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSe {
    pub se_alpha: f64,
    pub se_beta: f64,
    pub reps: usize,
    pub failures: usize,
}

fn sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Resamples the data with replacement `reps` times, refits each resample
/// with the configured method and reports the standard deviations of the
/// estimates. Resamples that cannot be fitted (for example, a single
/// distinct value) are dropped and counted.
pub fn bootstrap_se(
    dist: DistributionKind,
    data: &[f64],
    options: &FitOptions,
    reps: usize,
    seed: RngSeed,
) -> Result<BootstrapSe> {
    if reps < MIN_BOOTSTRAP_REPS {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_REPS} replications (got {reps})"
        )));
    }
    let n = data.len();
    let estimator = Estimator::new(dist, n, *options)?;
    let fits: Vec<Option<(f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed.stream(&[STREAM_LABEL, rep as u64]);
            let resample: Vec<f64> = (0..n).map(|_| data[rng.random_range(0..n)]).collect();
            estimator.fit(&resample).ok().map(|f| f.params.pair())
        })
        .collect();
    let (alphas, betas): (Vec<f64>, Vec<f64>) = fits.iter().flatten().copied().unzip();
    let failures = reps - alphas.len();
    if failures as f64 > MAX_FAILURE_FRACTION * reps as f64 || alphas.len() < 2 {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: reps,
        });
    }
    Ok(BootstrapSe {
        se_alpha: sd(&alphas),
        se_beta: sd(&betas),
        reps,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitcore::FitMethod;

    #[test]
    fn deterministic_for_seed() {
        let data = [0.4, 1.1, 0.9, 2.5, 1.7, 0.6, 3.1, 1.2, 0.8, 1.9];
        let opts = FitOptions::default();
        let a = bootstrap_se(DistributionKind::LogLogistic, &data, &opts, 200, RngSeed(5)).unwrap();
        let b = bootstrap_se(DistributionKind::LogLogistic, &data, &opts, 200, RngSeed(5)).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_se(DistributionKind::LogLogistic, &data, &opts, 200, RngSeed(6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn two_point_data_fails_too_often() {
        // half of all resamples of two values are constant
        let e2 = std::f64::consts::E.powi(2);
        let r = bootstrap_se(
            DistributionKind::LogLogistic,
            &[1.0, e2],
            &FitOptions::default(),
            200,
            RngSeed(1),
        );
        assert!(matches!(r, Err(Error::TooManyFailures { .. })));
    }

    #[test]
    fn constant_resamples_dropped_and_counted() {
        // three distinct values: 3 of 27 resample patterns are constant
        let data = [1.0, 2.0, 4.0];
        let se = bootstrap_se(
            DistributionKind::Weibull,
            &data,
            &FitOptions::default(),
            1000,
            RngSeed(2),
        )
        .unwrap();
        assert!(se.failures > 50 && se.failures < 200, "{}", se.failures);
        assert!(se.se_alpha > 0.0 && se.se_beta > 0.0);
    }

    #[test]
    fn argument_checks() {
        let data = [1.0, 2.0, 4.0, 5.0];
        assert!(bootstrap_se(
            DistributionKind::Weibull,
            &data,
            &FitOptions::with_method(FitMethod::Ml),
            99,
            RngSeed(2)
        )
        .is_err());
    }
}
