//! Parameter estimation on the probability-plot regression.
//!
//! The response vector is the deterministic table of expected transformed
//! order statistics and the regressor is the sorted (log-)data, so the
//! slope estimates the shape and the intercept carries the scale:
//!
//! ```text
//! log-logistic, Weibull:  mean_r = theta1 + theta2 log x_(r),  theta2 = beta, theta1 = -beta log alpha
//! logistic:               mean_r = theta1 + theta2 x_(r),      theta2 = -1/sigma, theta1 = mu/sigma
//! ```
//!
//! Because the data sit on the design side, textbook regression standard
//! errors do not apply; use [`bootstrap_se`] instead.

mod asymptotics;
mod bootstrap;
mod ml;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use asymptotics::{efficiency, ml_asymptotics, MlAsymptotics};
pub use bootstrap::{bootstrap_se, BootstrapSe};
pub use ml::{fit_ml, ml_score, weibull_scale_given_shape};

use crate::error::{Error, Result};
use crate::resweights::{
    exact_mean, mc_covariance, moment_table, CovarianceEstimate, DistributionKind, MomentMethod,
    PlottingScheme, ResidualMomentTable, TableOptions, DEFAULT_MC_REPLICATIONS,
};
use crate::sampling::{DistributionParams, LocScaleParams, RngSeed};

/// Covariance condition number above which full GLS is flagged.
pub const GLS_CONDITION_WARNING: f64 = 1e12;
/// Covariance determinant below which full GLS is flagged.
pub const GLS_DETERMINANT_WARNING: f64 = 1e-20;
/// Relative pivot size below which a covariance is treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FitMethod {
    #[serde(rename = "wls-exact")]
    WlsExact,
    #[serde(rename = "wls-asymptotic")]
    WlsAsymptotic,
    #[serde(rename = "wls-mc")]
    WlsMc,
    #[serde(rename = "gls-full")]
    GlsFull,
    #[serde(rename = "ml")]
    Ml,
}

impl FitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMethod::WlsExact => "wls-exact",
            FitMethod::WlsAsymptotic => "wls-asymptotic",
            FitMethod::WlsMc => "wls-mc",
            FitMethod::GlsFull => "gls-full",
            FitMethod::Ml => "ml",
        }
    }

    fn for_table(method: MomentMethod) -> Self {
        match method {
            MomentMethod::Exact => FitMethod::WlsExact,
            MomentMethod::Asymptotic => FitMethod::WlsAsymptotic,
            MomentMethod::MonteCarlo => FitMethod::WlsMc,
        }
    }
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "wls-exact" => FitMethod::WlsExact,
            "wls-asymptotic" => FitMethod::WlsAsymptotic,
            "wls-mc" => FitMethod::WlsMc,
            "gls-full" => FitMethod::GlsFull,
            "ml" => FitMethod::Ml,
            other => return Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FittedParams {
    ShapeScale(DistributionParams),
    LocationScale(LocScaleParams),
}

impl FittedParams {
    /// (alpha, beta) for the shape/scale families, (mu, sigma) for the
    /// logistic.
    pub fn pair(&self) -> (f64, f64) {
        match *self {
            FittedParams::ShapeScale(p) => (p.alpha, p.beta),
            FittedParams::LocationScale(p) => (p.mu, p.sigma),
        }
    }

    /// Regression coefficients corresponding to these parameters.
    pub fn theta(&self) -> [f64; 2] {
        match *self {
            FittedParams::ShapeScale(p) => [-p.beta * p.alpha.ln(), p.beta],
            FittedParams::LocationScale(p) => [p.mu / p.sigma, -1.0 / p.sigma],
        }
    }

    /// Inverse of [`theta`](Self::theta). Fails when the slope has the wrong
    /// sign for the family.
    pub fn from_theta(dist: DistributionKind, theta: [f64; 2]) -> Result<Self> {
        let [t1, t2] = theta;
        if !(t1.is_finite() && t2.is_finite()) {
            return Err(Error::NumericalInstability(format!(
                "non-finite regression coefficients ({t1}, {t2})"
            )));
        }
        match dist {
            DistributionKind::LogLogistic | DistributionKind::Weibull => {
                if t2 <= 0.0 {
                    return Err(Error::NonPositiveSlope { slope: t2 });
                }
                Ok(FittedParams::ShapeScale(DistributionParams::new(
                    (-t1 / t2).exp(),
                    t2,
                )?))
            }
            DistributionKind::Logistic => {
                if t2 >= 0.0 {
                    return Err(Error::NonPositiveSlope { slope: t2 });
                }
                Ok(FittedParams::LocationScale(LocScaleParams::new(
                    -t1 / t2,
                    -1.0 / t2,
                )?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub condition_number: f64,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub dist: DistributionKind,
    pub method: FitMethod,
    pub params: FittedParams,
    pub theta: [f64; 2],
    pub diagnostics: Diagnostics,
}

/// Flat serialized form of a [`FitResult`]. For the logistic family
/// `alpha` and `beta` hold the location and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub dist: DistributionKind,
    pub method: FitMethod,
    pub alpha: f64,
    pub beta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub converged: bool,
    pub iterations: usize,
    pub condition_number: f64,
    pub log_likelihood: Option<f64>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn record(&self) -> FitRecord {
        let (alpha, beta) = self.params.pair();
        FitRecord {
            dist: self.dist,
            method: self.method,
            alpha,
            beta,
            theta1: self.theta[0],
            theta2: self.theta[1],
            converged: self.diagnostics.converged,
            iterations: self.diagnostics.iterations,
            condition_number: self.diagnostics.condition_number,
            log_likelihood: self.diagnostics.log_likelihood,
            warnings: self.diagnostics.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("fit record serializes")
    }
}

/// Validates the data and returns the regressor column in ascending order:
/// log x for the positive families, x for the logistic.
pub(crate) fn sorted_regressor(dist: DistributionKind, data: &[f64]) -> Result<Vec<f64>> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 observations (got {})",
            data.len()
        )));
    }
    for (i, &x) in data.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteData { index: i + 1 });
        }
        if dist.is_positive_support() && x <= 0.0 {
            return Err(Error::NonPositiveData {
                index: i + 1,
                value: x,
            });
        }
    }
    let mut xs = data.to_vec();
    xs.sort_by(f64::total_cmp);
    if xs[0] == xs[xs.len() - 1] {
        return Err(Error::DegenerateDesign("all observations are equal".into()));
    }
    if dist.is_positive_support() {
        xs.iter_mut().for_each(|x| *x = x.ln());
    }
    Ok(xs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares for `y ≈ theta1 c1 + theta2 c2` by modified Gram-Schmidt
/// (with one reorthogonalization) on the two columns. Returns the
/// coefficients and the condition number of the column matrix.
pub(crate) fn solve_two_column(c1: &[f64], c2: &[f64], y: &[f64]) -> Result<([f64; 2], f64)> {
    let r11 = dot(c1, c1).sqrt();
    if r11 == 0.0 {
        return Err(Error::DegenerateDesign("zero intercept column".into()));
    }
    let q1: Vec<f64> = c1.iter().map(|v| v / r11).collect();
    let mut r12 = dot(&q1, c2);
    let mut v: Vec<f64> = c2.iter().zip(&q1).map(|(c, q)| c - r12 * q).collect();
    let again = dot(&q1, &v);
    v.iter_mut().zip(&q1).for_each(|(vi, q)| *vi -= again * q);
    r12 += again;
    let r22 = dot(&v, &v).sqrt();
    if r22 <= 1e-12 * dot(c2, c2).sqrt() {
        return Err(Error::DegenerateDesign(
            "regressor column is (numerically) constant".into(),
        ));
    }
    let q2: Vec<f64> = v.iter().map(|x| x / r22).collect();
    let t2 = dot(&q2, y) / r22;
    let t1 = (dot(&q1, y) - r12 * t2) / r11;

    let sum = r11 * r11 + r12 * r12 + r22 * r22;
    let det = (r11 * r22).abs();
    let big = ((sum + (sum * sum - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
    let small = det / big;
    Ok(([t1, t2], big / small))
}

fn check_length(n_data: usize, n_table: usize) -> Result<()> {
    if n_data != n_table {
        return Err(Error::InvalidArgument(format!(
            "data has {n_data} observations but the weights are for n = {n_table}"
        )));
    }
    Ok(())
}

fn compatible(dist: DistributionKind, other: DistributionKind, allow_sign_flip: bool) -> bool {
    dist == other
        || (allow_sign_flip
            && matches!(
                (dist, other),
                (DistributionKind::Logistic, DistributionKind::LogLogistic)
                    | (DistributionKind::LogLogistic, DistributionKind::Logistic)
            ))
}

/// Weighted least squares on the probability plot with the diagonal
/// weights of `table`.
pub fn fit_wls(
    dist: DistributionKind,
    data: &[f64],
    table: &ResidualMomentTable,
) -> Result<FitResult> {
    if table.dist != dist {
        return Err(Error::InvalidArgument(format!(
            "weight table is for {} but the fit is for {}",
            table.dist, dist
        )));
    }
    check_length(data.len(), table.n)?;
    let xs = sorted_regressor(dist, data)?;
    let root_w: Vec<f64> = table.weights.iter().map(|w| w.sqrt()).collect();
    let c2: Vec<f64> = xs.iter().zip(&root_w).map(|(x, w)| x * w).collect();
    let y: Vec<f64> = table
        .means
        .iter()
        .zip(&root_w)
        .map(|(m, w)| m * w)
        .collect();
    let (theta, cond) = solve_two_column(&root_w, &c2, &y)?;
    let params = FittedParams::from_theta(dist, theta)?;
    Ok(FitResult {
        dist,
        method: FitMethod::for_table(table.method),
        params,
        theta,
        diagnostics: Diagnostics {
            condition_number: cond,
            iterations: 1,
            converged: true,
            log_likelihood: None,
            warnings: vec![],
        },
    })
}

/// Generalized least squares with the full inverse covariance `cov⁻¹` as
/// weight matrix, by whitening with the Cholesky factor of `cov`.
pub fn fit_gls_full(
    dist: DistributionKind,
    data: &[f64],
    cov: &CovarianceEstimate,
) -> Result<FitResult> {
    if !compatible(dist, cov.dist, true) {
        return Err(Error::InvalidArgument(format!(
            "covariance is for {} but the fit is for {}",
            cov.dist, dist
        )));
    }
    check_length(data.len(), cov.n)?;
    let xs = sorted_regressor(dist, data)?;
    let n = xs.len();
    let means = (1..=n)
        .map(|r| exact_mean(dist, r, n))
        .collect::<Result<Vec<_>>>()?;

    let scale = cov.matrix.diagonal().max();
    let chol = cov
        .matrix
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularCovariance("matrix is not positive definite".into()))?;
    let l = chol.l();
    let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |m, d| m.min(d * d));
    if min_pivot.is_nan() || min_pivot <= PIVOT_TOLERANCE * scale {
        return Err(Error::SingularCovariance(format!(
            "smallest pivot {min_pivot:e} relative to diagonal {scale:e}"
        )));
    }
    let whiten = |v: Vec<f64>| -> Vec<f64> {
        l.solve_lower_triangular(&DVector::from_vec(v))
            .expect("nonzero pivots")
            .iter()
            .copied()
            .collect()
    };
    let c1 = whiten(vec![1.0; n]);
    let c2 = whiten(xs);
    let y = whiten(means);
    let (theta, cond) = solve_two_column(&c1, &c2, &y)?;
    let params = FittedParams::from_theta(dist, theta)?;

    let mut warnings = vec![];
    let cov_cond = cov.condition_number();
    if cov_cond > GLS_CONDITION_WARNING {
        warnings.push(format!(
            "covariance condition number {cov_cond:.3e} exceeds {GLS_CONDITION_WARNING:e}; full GLS estimates may be unstable"
        ));
    }
    let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    if log_det < GLS_DETERMINANT_WARNING.ln() {
        warnings.push(format!(
            "covariance determinant {:e} (log {log_det:.3}) is numerically zero; prefer diagonal weights",
            log_det.exp()
        ));
    }
    Ok(FitResult {
        dist,
        method: FitMethod::GlsFull,
        params,
        theta,
        diagnostics: Diagnostics {
            condition_number: cond,
            iterations: 1,
            converged: true,
            log_likelihood: None,
            warnings,
        },
    })
}

/// Covariance estimate wrapping an explicit matrix, for callers that bring
/// their own Σ.
pub fn covariance_from_matrix(
    dist: DistributionKind,
    matrix: DMatrix<f64>,
) -> Result<CovarianceEstimate> {
    if !matrix.is_square() || matrix.nrows() < 2 {
        return Err(Error::InvalidArgument(
            "covariance must be square with n >= 2".into(),
        ));
    }
    Ok(CovarianceEstimate {
        dist,
        n: matrix.nrows(),
        m: 0,
        seed: RngSeed(0),
        matrix,
    })
}

/// How to fit: the method plus the knobs some methods need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub method: FitMethod,
    pub scheme: PlottingScheme,
    /// Replications for Monte-Carlo weights and covariances.
    pub mc_m: usize,
    pub seed: RngSeed,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            method: FitMethod::WlsExact,
            scheme: PlottingScheme::Standard,
            mc_m: DEFAULT_MC_REPLICATIONS,
            seed: RngSeed(0),
        }
    }
}

impl FitOptions {
    pub fn with_method(method: FitMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

/// A fitting method prepared for one family and sample size, so weights and
/// covariances are computed once and reused across many datasets.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub dist: DistributionKind,
    pub n: usize,
    pub options: FitOptions,
    table: Option<ResidualMomentTable>,
    cov: Option<CovarianceEstimate>,
}

impl Estimator {
    pub fn new(dist: DistributionKind, n: usize, options: FitOptions) -> Result<Self> {
        let exact = || moment_table(dist, n, MomentMethod::Exact, TableOptions::default());
        let (table, cov) = match options.method {
            FitMethod::WlsExact | FitMethod::Ml => (Some(exact()?), None),
            FitMethod::WlsAsymptotic => (
                Some(moment_table(
                    dist,
                    n,
                    MomentMethod::Asymptotic,
                    TableOptions {
                        scheme: options.scheme,
                        ..Default::default()
                    },
                )?),
                None,
            ),
            FitMethod::WlsMc => (
                Some(moment_table(
                    dist,
                    n,
                    MomentMethod::MonteCarlo,
                    TableOptions {
                        scheme: options.scheme,
                        mc_m: Some(options.mc_m),
                        seed: Some(options.seed),
                    },
                )?),
                None,
            ),
            FitMethod::GlsFull => (
                None,
                Some(mc_covariance(dist, n, options.mc_m, options.seed)?),
            ),
        };
        Ok(Self {
            dist,
            n,
            options,
            table,
            cov,
        })
    }

    pub fn method(&self) -> FitMethod {
        self.options.method
    }

    pub fn table(&self) -> Option<&ResidualMomentTable> {
        self.table.as_ref()
    }

    pub fn covariance(&self) -> Option<&CovarianceEstimate> {
        self.cov.as_ref()
    }

    pub fn fit(&self, data: &[f64]) -> Result<FitResult> {
        check_length(data.len(), self.n)?;
        match self.options.method {
            FitMethod::GlsFull => {
                fit_gls_full(self.dist, data, self.cov.as_ref().expect("prepared"))
            }
            FitMethod::Ml => {
                let table = self.table.as_ref().expect("prepared");
                let start = fit_wls(self.dist, data, table).ok();
                fit_ml(self.dist, data, start.as_ref())
            }
            _ => fit_wls(self.dist, data, self.table.as_ref().expect("prepared")),
        }
    }
}
