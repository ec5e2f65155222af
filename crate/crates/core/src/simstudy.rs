//! Monte-Carlo study of estimator bias and MSE, and the per-rank variance
//! comparison (exact, simulated, large-sample) behind the residual-variance
//! plots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitcore::{Estimator, FitMethod, FitOptions};
use crate::resweights::{
    asymptotic_var_for, exact_var, mc_covariance, DistributionKind, PlottingScheme,
};
use crate::sampling::{
    sample_logistic_with, sample_loglogistic_with, sample_weibull_with, DistributionParams,
    LocScaleParams, RngSeed,
};

const STREAM_LABEL: u64 = 0x5717_D1E5;

/// Study design. For the logistic family `alpha` is the true location and
/// the grid entries are true scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub dist: DistributionKind,
    pub alpha: f64,
    pub beta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: RngSeed,
    pub methods: Vec<FitMethod>,
}

impl StudyConfig {
    /// The default design: alpha = 1, 1000 replications,
    /// n ∈ {15, 25, 50, 100}, and the shape grid of the family.
    pub fn standard_grid(dist: DistributionKind, seed: RngSeed) -> Self {
        let beta_grid = match dist {
            DistributionKind::Weibull => vec![0.25, 1.0, 1.5],
            _ => vec![1.0, 1.5, 2.0, 2.5],
        };
        Self {
            dist,
            alpha: 1.0,
            beta_grid,
            n_grid: vec![15, 25, 50, 100],
            reps: 1000,
            seed,
            methods: vec![FitMethod::WlsExact, FitMethod::Ml],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.beta_grid.is_empty() || self.n_grid.is_empty() || self.methods.is_empty() {
            return bad("grids and method list must be non-empty");
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be finite and positive");
        }
        if self.beta_grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return bad("every beta must be finite and positive");
        }
        if self.n_grid.iter().any(|&n| n < 3) {
            return bad("every sample size must be at least 3");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    Alpha,
    Beta,
}

impl Parameter {
    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::Alpha => "alpha",
            Parameter::Beta => "beta",
        }
    }
}

/// Bias and MSE of one parameter under one method in one design cell, with
/// Monte-Carlo standard errors estimated from the replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub n: usize,
    pub beta_true: f64,
    pub method: FitMethod,
    pub parameter: Parameter,
    pub bias: f64,
    pub mse: f64,
    pub failures: usize,
    /// Successful fits contributing to the moments.
    pub count: usize,
    pub se_bias: f64,
    pub se_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub dist: DistributionKind,
    pub cells: Vec<StudyCell>,
}

/// Neumaier-compensated sum.
#[derive(Default, Clone, Copy)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

fn summarize(errors: &[f64]) -> (f64, f64, f64, f64) {
    let k = errors.len() as f64;
    let (mut e, mut e2) = (Sum::default(), Sum::default());
    for &x in errors {
        e.add(x);
        e2.add(x * x);
    }
    let bias = e.value() / k;
    let mse = e2.value() / k;
    if errors.len() < 2 {
        return (bias, mse, f64::NAN, f64::NAN);
    }
    let (mut d, mut d2) = (Sum::default(), Sum::default());
    for &x in errors {
        d.add((x - bias).powi(2));
        d2.add((x * x - mse).powi(2));
    }
    let se_bias = (d.value() / (k - 1.0) / k).sqrt();
    let se_mse = (d2.value() / (k - 1.0) / k).sqrt();
    (bias, mse, se_bias, se_mse)
}

fn draw(
    dist: DistributionKind,
    alpha: f64,
    beta: f64,
    n: usize,
    seed: RngSeed,
    labels: &[u64],
) -> Vec<f64> {
    let mut rng = seed.stream(labels);
    match dist {
        DistributionKind::LogLogistic => {
            sample_loglogistic_with(&DistributionParams { alpha, beta }, n, &mut rng)
        }
        DistributionKind::Weibull => {
            sample_weibull_with(&DistributionParams { alpha, beta }, n, &mut rng)
        }
        DistributionKind::Logistic => sample_logistic_with(
            &LocScaleParams {
                mu: alpha,
                sigma: beta,
            },
            n,
            &mut rng,
        ),
    }
}

/// Runs every (n, beta) cell of the design. Within a replication all
/// methods fit the same sample; failed fits are counted and left out of
/// the moments.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let mut cells = vec![];
    for &n in &config.n_grid {
        let estimators = config
            .methods
            .iter()
            .map(|&m| {
                Estimator::new(
                    config.dist,
                    n,
                    FitOptions {
                        seed: config.seed,
                        ..FitOptions::with_method(m)
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        for &beta in &config.beta_grid {
            let outcomes: Vec<Vec<Option<(f64, f64)>>> = (0..config.reps)
                .into_par_iter()
                .map(|rep| {
                    let labels = [STREAM_LABEL, n as u64, beta.to_bits(), rep as u64];
                    let sample = draw(config.dist, config.alpha, beta, n, config.seed, &labels);
                    estimators
                        .iter()
                        .map(|e| e.fit(&sample).ok().map(|f| f.params.pair()))
                        .collect()
                })
                .collect();
            for (k, &method) in config.methods.iter().enumerate() {
                let fits: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o[k]).collect();
                let failures = config.reps - fits.len();
                for parameter in [Parameter::Alpha, Parameter::Beta] {
                    let errors: Vec<f64> = fits
                        .iter()
                        .map(|&(a, b)| match parameter {
                            Parameter::Alpha => a - config.alpha,
                            Parameter::Beta => b - beta,
                        })
                        .collect();
                    let (bias, mse, se_bias, se_mse) = if errors.is_empty() {
                        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
                    } else {
                        summarize(&errors)
                    };
                    cells.push(StudyCell {
                        n,
                        beta_true: beta,
                        method,
                        parameter,
                        bias,
                        mse,
                        failures,
                        count: fits.len(),
                        se_bias,
                        se_mse,
                    });
                }
            }
        }
    }
    Ok(StudyReport {
        dist: config.dist,
        cells,
    })
}

/// Formats with at most `digits` significant digits, trailing zeros
/// removed.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let exponent = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&exponent) {
        return format!("{:.*e}", digits - 1, v);
    }
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl StudyReport {
    pub fn cell(
        &self,
        n: usize,
        beta: f64,
        method: FitMethod,
        parameter: Parameter,
    ) -> Option<&StudyCell> {
        self.cells.iter().find(|c| {
            c.n == n && c.beta_true == beta && c.method == method && c.parameter == parameter
        })
    }

    /// CSV with header `dist,n,beta_true,method,parameter,bias,mse,failures`
    /// and seven significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dist,n,beta_true,method,parameter,bias,mse,failures\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.dist,
                c.n,
                format_significant(c.beta_true, 7),
                c.method,
                c.parameter.as_str(),
                format_significant(c.bias, 7),
                format_significant(c.mse, 7),
                c.failures
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub rank: usize,
    pub exact_var: f64,
    pub mc_var: f64,
    pub asymptotic_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub dist: DistributionKind,
    pub n: usize,
    pub rows: Vec<FigureRow>,
}

/// Exact, simulated and large-sample residual variances for every rank.
pub fn figure_data(
    dist: DistributionKind,
    n: usize,
    mc_m: usize,
    seed: RngSeed,
    scheme: PlottingScheme,
) -> Result<FigureData> {
    let cov = mc_covariance(dist, n, mc_m, seed)?;
    let mc = cov.diagonal();
    let rows = (1..=n)
        .map(|r| {
            Ok(FigureRow {
                rank: r,
                exact_var: exact_var(dist, r, n)?,
                mc_var: mc[r - 1],
                asymptotic_var: asymptotic_var_for(dist, r, n, scheme)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureData { dist, n, rows })
}

impl FigureData {
    /// CSV with header `rank,exact,mc,asymptotic` and seven significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,exact,mc,asymptotic\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.rank,
                format_significant(r.exact_var, 7),
                format_significant(r.mc_var, 7),
                format_significant(r.asymptotic_var, 7)
            ));
        }
        out
    }
}
