//! Maximum likelihood by damped Newton iteration on the score equations.
//!
//! The iteration runs in unconstrained coordinates: (log alpha, log beta)
//! for the shape/scale families and (mu, log sigma) for the logistic.

use super::{Diagnostics, FitMethod, FitResult, FittedParams};
use crate::error::{Error, Result};
use crate::resweights::{moment_table, DistributionKind, MomentMethod, TableOptions};
use crate::sampling::{DistributionParams, LocScaleParams};
use crate::specfun::EULER_GAMMA;

pub const MAX_ITERATIONS: usize = 100;
pub const MAX_HALVINGS: usize = 30;
/// Convergence threshold on the per-observation score in the working
/// coordinates.
pub const SCORE_TOLERANCE: f64 = 1e-9;
/// Largest Newton step allowed in any working coordinate.
const MAX_STEP: f64 = 2.0;

type Vec2 = [f64; 2];
type Mat2 = [[f64; 2]; 2];

fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Log-likelihood with gradient and Hessian in working coordinates.
struct Likelihood<'a> {
    dist: DistributionKind,
    /// log x for the positive families, x for the logistic
    values: &'a [f64],
    /// Σ log x, the Jacobian term of the positive families
    log_sum: f64,
}

impl Likelihood<'_> {
    fn n(&self) -> f64 {
        self.values.len() as f64
    }

    fn value(&self, phi: Vec2) -> f64 {
        let n = self.n();
        match self.dist {
            DistributionKind::LogLogistic | DistributionKind::Weibull => {
                let (a, beta) = (phi[0], phi[1].exp());
                let body: f64 = self
                    .values
                    .iter()
                    .map(|&l| {
                        let s = beta * (l - a);
                        if self.dist == DistributionKind::LogLogistic {
                            s - 2.0 * softplus(s)
                        } else {
                            s - s.exp()
                        }
                    })
                    .sum();
                n * phi[1] - self.log_sum + body
            }
            DistributionKind::Logistic => {
                let (mu, sigma) = (phi[0], phi[1].exp());
                let body: f64 = self
                    .values
                    .iter()
                    .map(|&x| {
                        let z = (x - mu) / sigma;
                        z - 2.0 * softplus(z)
                    })
                    .sum();
                body - n * phi[1]
            }
        }
    }

    fn derivatives(&self, phi: Vec2) -> (f64, Vec2, Mat2) {
        let n = self.n();
        let value = self.value(phi);
        match self.dist {
            DistributionKind::LogLogistic | DistributionKind::Weibull => {
                let (a, beta) = (phi[0], phi[1].exp());
                // d = dl/ds, c = -d²l/ds²
                let (mut sd, mut sds, mut sc, mut scs, mut scss) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for &l in self.values {
                    let s = beta * (l - a);
                    let (d, c) = if self.dist == DistributionKind::LogLogistic {
                        let p = logistic(s);
                        (1.0 - 2.0 * p, 2.0 * p * (1.0 - p))
                    } else {
                        let e = s.exp();
                        (1.0 - e, e)
                    };
                    sd += d;
                    sds += d * s;
                    sc += c;
                    scs += c * s;
                    scss += c * s * s;
                }
                let grad = [-beta * sd, n + sds];
                let h_ab = -beta * sd + beta * scs;
                let hess = [[-beta * beta * sc, h_ab], [h_ab, sds - scss]];
                (value, grad, hess)
            }
            DistributionKind::Logistic => {
                let (mu, sigma) = (phi[0], phi[1].exp());
                let (mut sd, mut sdz, mut sh, mut shz, mut shzz) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for &x in self.values {
                    let z = (x - mu) / sigma;
                    let p = logistic(z);
                    let d = 1.0 - 2.0 * p;
                    let h = 2.0 * p * (1.0 - p);
                    sd += d;
                    sdz += d * z;
                    sh += h;
                    shz += h * z;
                    shzz += h * z * z;
                }
                let grad = [-sd / sigma, -sdz - n];
                let h_mc = (sd - shz) / sigma;
                let hess = [[-sh / (sigma * sigma), h_mc], [h_mc, sdz - shzz]];
                (value, grad, hess)
            }
        }
    }

    /// Score scaled to be dimensionless and per observation.
    fn relative_score(&self, phi: Vec2, grad: Vec2) -> f64 {
        let g0 = match self.dist {
            DistributionKind::Logistic => grad[0] * phi[1].exp(),
            _ => grad[0],
        };
        g0.abs().max(grad[1].abs()) / self.n()
    }

    fn to_params(&self, phi: Vec2) -> Result<FittedParams> {
        Ok(match self.dist {
            DistributionKind::Logistic => {
                FittedParams::LocationScale(LocScaleParams::new(phi[0], phi[1].exp())?)
            }
            _ => FittedParams::ShapeScale(DistributionParams::new(phi[0].exp(), phi[1].exp())?),
        })
    }
}

fn negative_definite(h: &Mat2) -> bool {
    h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0
}

fn newton_direction(g: Vec2, h: &Mat2) -> Vec2 {
    if negative_definite(h) {
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        [
            -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
            -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
        ]
    } else {
        // scaled ascent direction
        [g[0] / h[0][0].abs().max(1.0), g[1] / h[1][1].abs().max(1.0)]
    }
}

fn clamp_step(d: Vec2) -> Vec2 {
    let big = d[0].abs().max(d[1].abs());
    if big > MAX_STEP {
        [d[0] * MAX_STEP / big, d[1] * MAX_STEP / big]
    } else {
        d
    }
}

fn condition(h: &Mat2) -> f64 {
    let (a, b, d) = (-h[0][0], -h[0][1], -h[1][1]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (hi, lo) = (mean + rad, mean - rad);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Moment-matching start used when no regression fit is available.
fn moment_start(dist: DistributionKind, values: &[f64]) -> Vec2 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = sample_sd(values).max(1e-8);
    let pi = std::f64::consts::PI;
    match dist {
        DistributionKind::LogLogistic => [mean, (pi / (3f64.sqrt() * sd)).ln()],
        DistributionKind::Weibull => {
            let beta = pi / (6f64.sqrt() * sd);
            [mean + EULER_GAMMA / beta, beta.ln()]
        }
        DistributionKind::Logistic => [mean, (sd * 3f64.sqrt() / pi).ln()],
    }
}

fn working_coordinates(params: &FittedParams) -> Vec2 {
    match *params {
        FittedParams::ShapeScale(p) => [p.alpha.ln(), p.beta.ln()],
        FittedParams::LocationScale(p) => [p.mu, p.sigma.ln()],
    }
}

fn prepare(dist: DistributionKind, data: &[f64]) -> Result<Vec<f64>> {
    if data.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "maximum likelihood needs at least 3 observations (got {})",
            data.len()
        )));
    }
    super::sorted_regressor(dist, data)
}

/// Maximum-likelihood fit. Starts from `init` when given, otherwise from
/// the exact-weight regression fit (or a moment match if that fails).
pub fn fit_ml(dist: DistributionKind, data: &[f64], init: Option<&FitResult>) -> Result<FitResult> {
    let values = prepare(dist, data)?;
    let lik = Likelihood {
        dist,
        values: &values,
        log_sum: if dist.is_positive_support() {
            values.iter().sum()
        } else {
            0.0
        },
    };

    let mut phi = match init {
        Some(fit) => working_coordinates(&fit.params),
        None => {
            let table = moment_table(
                dist,
                data.len(),
                MomentMethod::Exact,
                TableOptions::default(),
            )?;
            match super::fit_wls(dist, data, &table) {
                Ok(fit) => working_coordinates(&fit.params),
                Err(_) => moment_start(dist, &values),
            }
        }
    };
    if !(phi[0].is_finite() && phi[1].is_finite()) {
        phi = moment_start(dist, &values);
    }

    let mut iterations = 0;
    let (mut value, mut grad, mut hess) = lik.derivatives(phi);
    let mut score = lik.relative_score(phi, grad);
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        if score <= SCORE_TOLERANCE {
            converged = true;
            // one polishing step, kept only if it does not make things worse
            if negative_definite(&hess) {
                let d = newton_direction(grad, &hess);
                let trial = [phi[0] + d[0], phi[1] + d[1]];
                let (v, g, h) = lik.derivatives(trial);
                let s = lik.relative_score(trial, g);
                if v.is_finite() && s <= score && v >= value - 1e-12 * value.abs().max(1.0) {
                    phi = trial;
                    value = v;
                    hess = h;
                    score = s;
                }
            }
            break;
        }
        iterations += 1;
        let d = clamp_step(newton_direction(grad, &hess));
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = [phi[0] + step * d[0], phi[1] + step * d[1]];
            let v = lik.value(trial);
            let flat = (v - value).abs() <= 1e-12 * value.abs().max(1.0);
            // near the optimum the likelihood is flat to rounding; accept a
            // step there if it shrinks the score
            if v.is_finite()
                && (v > value
                    || (flat && lik.relative_score(trial, lik.derivatives(trial).1) < score))
            {
                phi = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        (value, grad, hess) = lik.derivatives(phi);
        score = lik.relative_score(phi, grad);
    }
    if !converged && score <= SCORE_TOLERANCE {
        converged = true;
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            score_norm: score,
        });
    }
    if !negative_definite(&hess) {
        return Err(Error::NotNegativeDefinite);
    }
    let params = lik.to_params(phi)?;
    Ok(FitResult {
        dist,
        method: FitMethod::Ml,
        theta: params.theta(),
        params,
        diagnostics: Diagnostics {
            condition_number: condition(&hess),
            iterations,
            converged: true,
            log_likelihood: Some(value),
            warnings: vec![],
        },
    })
}

/// Score (gradient of the log-likelihood) with respect to the natural
/// parameters: (alpha, beta) or (mu, sigma).
pub fn ml_score(dist: DistributionKind, data: &[f64], params: &FittedParams) -> Result<[f64; 2]> {
    let values = prepare(dist, data)?;
    let lik = Likelihood {
        dist,
        values: &values,
        log_sum: 0.0,
    };
    let phi = working_coordinates(params);
    let (_, g, _) = lik.derivatives(phi);
    let (first, second) = params.pair();
    Ok(match dist {
        DistributionKind::Logistic => [g[0], g[1] / second],
        _ => [g[0] / first, g[1] / second],
    })
}

/// Weibull scale maximizing the likelihood for a fixed shape,
/// (Σ x^beta / n)^(1/beta).
pub fn weibull_scale_given_shape(data: &[f64], beta: f64) -> Result<f64> {
    if data.is_empty() || !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument(
            "need data and a positive shape".into(),
        ));
    }
    if let Some(i) = data.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::NonPositiveData {
            index: i + 1,
            value: data[i],
        });
    }
    let mean = data.iter().map(|x| x.powf(beta)).sum::<f64>() / data.len() as f64;
    Ok(mean.powf(1.0 / beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_logistic, sample_loglogistic, sample_weibull, RngSeed};

    fn finite_difference_check(dist: DistributionKind, data: &[f64], phi: Vec2) {
        let values = prepare(dist, data).unwrap();
        let lik = Likelihood {
            dist,
            values: &values,
            log_sum: values.iter().sum(),
        };
        let (_, g, h) = lik.derivatives(phi);
        let eps = 1e-5;
        for k in 0..2 {
            let mut up = phi;
            let mut down = phi;
            up[k] += eps;
            down[k] -= eps;
            let fd = (lik.value(up) - lik.value(down)) / (2.0 * eps);
            assert!(
                (fd - g[k]).abs() < 1e-5 * fd.abs().max(1.0),
                "grad {k}: {fd} vs {}",
                g[k]
            );
            let (_, gu, _) = lik.derivatives(up);
            let (_, gd, _) = lik.derivatives(down);
            for j in 0..2 {
                let fd = (gu[j] - gd[j]) / (2.0 * eps);
                assert!(
                    (fd - h[j][k]).abs() < 1e-5 * fd.abs().max(1.0),
                    "hess {j}{k}"
                );
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let p = DistributionParams::new(2.0, 1.3).unwrap();
        let data = sample_loglogistic(&p, 30, RngSeed(1)).unwrap();
        finite_difference_check(DistributionKind::LogLogistic, &data, [0.4, 0.1]);
        let data = sample_weibull(&p, 30, RngSeed(2)).unwrap();
        finite_difference_check(DistributionKind::Weibull, &data, [0.9, 0.5]);
        let q = LocScaleParams::new(1.0, 0.5).unwrap();
        let data = sample_logistic(&q, 30, RngSeed(3)).unwrap();
        let data_pos: Vec<f64> = data.clone();
        finite_difference_check(DistributionKind::Logistic, &data_pos, [0.8, -0.3]);
    }

    #[test]
    fn score_vanishes_at_optimum() {
        let p = DistributionParams::new(1.0, 2.0).unwrap();
        for seed in 0..30 {
            for dist in [DistributionKind::LogLogistic, DistributionKind::Weibull] {
                let data = match dist {
                    DistributionKind::LogLogistic => {
                        sample_loglogistic(&p, 20, RngSeed(seed)).unwrap()
                    }
                    _ => sample_weibull(&p, 20, RngSeed(seed)).unwrap(),
                };
                let fit = fit_ml(dist, &data, None).unwrap();
                let (a, b) = fit.params.pair();
                let s = ml_score(dist, &data, &fit.params).unwrap();
                assert!((s[0] * a).abs() / 20.0 < 1e-9, "{dist} seed {seed}: {s:?}");
                assert!((s[1] * b).abs() / 20.0 < 1e-9, "{dist} seed {seed}: {s:?}");
                assert!(fit.diagnostics.log_likelihood.is_some());
            }
        }
    }

    #[test]
    fn weibull_profile_scale_identity() {
        let p = DistributionParams::new(3.0, 1.0).unwrap();
        let data = sample_weibull(&p, 50, RngSeed(9)).unwrap();
        let mean = data.iter().sum::<f64>() / 50.0;
        assert!((weibull_scale_given_shape(&data, 1.0).unwrap() - mean).abs() < 1e-12 * mean);
        let fit = fit_ml(DistributionKind::Weibull, &data, None).unwrap();
        let (alpha, beta) = fit.params.pair();
        let profile = weibull_scale_given_shape(&data, beta).unwrap();
        assert!((alpha - profile).abs() < 1e-9 * alpha);
    }

    #[test]
    fn logistic_ml_recovers_parameters() {
        let q = LocScaleParams::new(-3.0, 2.0).unwrap();
        let data = sample_logistic(&q, 5000, RngSeed(10)).unwrap();
        let fit = fit_ml(DistributionKind::Logistic, &data, None).unwrap();
        let (mu, sigma) = fit.params.pair();
        assert!((mu + 3.0).abs() < 0.15 && (sigma - 2.0).abs() < 0.1);
    }

    #[test]
    fn bad_start_still_converges() {
        let p = DistributionParams::new(5.0, 0.5).unwrap();
        let data = sample_weibull(&p, 40, RngSeed(11)).unwrap();
        let from_default = fit_ml(DistributionKind::Weibull, &data, None).unwrap();
        let far = FitResult {
            params: FittedParams::ShapeScale(DistributionParams::new(1e3, 20.0).unwrap()),
            ..from_default.clone()
        };
        let from_far = fit_ml(DistributionKind::Weibull, &data, Some(&far)).unwrap();
        let (a1, b1) = from_default.params.pair();
        let (a2, b2) = from_far.params.pair();
        assert!((a1 - a2).abs() < 1e-8 * a1 && (b1 - b2).abs() < 1e-8 * b1);
    }

    #[test]
    fn too_few_observations() {
        assert!(fit_ml(DistributionKind::LogLogistic, &[1.0, 2.0], None).is_err());
        assert!(matches!(
            fit_ml(DistributionKind::Weibull, &[1.0, 0.0, 2.0], None),
            Err(Error::NonPositiveData { index: 2, .. })
        ));
    }
}
