//! Moments of log(-log(1 - Z)) for Z ~ Beta(r, n - r + 1), the expected
//! values and residual variances of the Weibull probability plot.
//!
//! The closed form is an alternating binomial sum built from
//! `∫ e^{-kt} log t dt = -(γ + log k)/k` and
//! `∫ e^{-kt} log² t dt = (π²/6 + (γ + log k)²)/k`. Its terms grow like
//! `n C(n-1, r-1) C(r-1, j)`, so for central ranks the sum cancels
//! catastrophically; the running error bound decides when to hand over to
//! quadrature of the same expectation.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::specfun::{self, EULER_GAMMA, PI_SQ_OVER_6};

/// Largest sample size for which the binomial sum is attempted.
pub const BINOMIAL_MAX_N: usize = 60;

/// Accept the binomial sum only when its rounding-error bound is below this
/// fraction of `max(1, |value|)`.
pub const BINOMIAL_REL_TOL: f64 = 1e-10;

/// Which evaluation produced a set of moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentRoute {
    ClosedFormMinimum,
    BinomialSum,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullMoments {
    pub mean: f64,
    pub second: f64,
    pub variance: f64,
    pub route: MomentRoute,
}

/// Neumaier-compensated accumulator that also tracks `Σ|term|`.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
    magnitude: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
        self.magnitude += x.abs();
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }

    /// Bound on the error inherited from rounding in the individual terms,
    /// each of which carries a handful of roundings.
    fn error_bound(&self) -> f64 {
        8.0 * f64::EPSILON * self.magnitude
    }
}

pub(crate) fn check_rank(r: usize, n: usize) -> Result<()> {
    if n == 0 || r == 0 || r > n {
        Err(Error::RankOutOfRange { rank: r, n })
    } else {
        Ok(())
    }
}

fn minimum_moments(n: usize) -> WeibullMoments {
    let c = EULER_GAMMA + (n as f64).ln();
    WeibullMoments {
        mean: -c,
        second: PI_SQ_OVER_6 + c * c,
        variance: PI_SQ_OVER_6,
        route: MomentRoute::ClosedFormMinimum,
    }
}

/// Evaluates the binomial sums. Returns `None` when the rounding-error bound
/// exceeds [`BINOMIAL_REL_TOL`].
pub fn binomial_moments(r: usize, n: usize) -> Result<Option<WeibullMoments>> {
    check_rank(r, n)?;
    // 1 / B(r, n - r + 1) = n C(n - 1, r - 1)
    let mut norm = n as f64;
    for i in 0..(r - 1) {
        norm = norm * (n - 1 - i) as f64 / (i + 1) as f64;
    }
    let mut first = CompensatedSum::default();
    let mut second = CompensatedSum::default();
    let mut binom = 1.0;
    for j in 0..r {
        if j > 0 {
            binom = binom * (r - j) as f64 / j as f64;
        }
        let k = (n - r + 1 + j) as f64;
        let c = EULER_GAMMA + k.ln();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * norm * binom / k;
        first.add(-coef * c);
        second.add(coef * (PI_SQ_OVER_6 + c * c));
    }
    let mean = first.value();
    let raw = second.value();
    if first.error_bound() > BINOMIAL_REL_TOL * mean.abs().max(1.0)
        || second.error_bound() > BINOMIAL_REL_TOL * raw.abs().max(1.0)
    {
        return Ok(None);
    }
    Ok(Some(WeibullMoments {
        mean,
        second: raw,
        variance: raw - mean * mean,
        route: MomentRoute::BinomialSum,
    }))
}

/// Moments by adaptive Gauss-Legendre quadrature in `w = log(-log(1 - z))`,
/// where the integrand is `w^k` against the smooth density
/// `exp(w) (1 - exp(-e^w))^(r-1) exp(-(n-r+1) e^w) / B(r, n-r+1)`.
pub fn quadrature_moments(r: usize, n: usize) -> Result<WeibullMoments> {
    check_rank(r, n)?;
    let a = (r - 1) as f64;
    let b = (n - r + 1) as f64;
    let log_norm = -specfun::log_beta(r as f64, b)?;
    let log_density = move |w: f64| {
        let s = w.exp();
        let head = if a == 0.0 {
            0.0
        } else {
            a * (-(-s).exp_m1()).ln()
        };
        log_norm + head - b * s + w
    };

    // Locate the mass: scan a wide grid, keep where the density is within
    // e^-80 of its peak.
    let (lo_scan, hi_scan, step) = (-60.0, 8.0, 0.05);
    let steps = ((hi_scan - lo_scan) / step) as usize;
    let grid: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let w = lo_scan + i as f64 * step;
            (w, log_density(w))
        })
        .collect();
    let peak = grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    let inside = |g: &&(f64, f64)| g.1 > peak - 80.0;
    let lo = grid
        .iter()
        .find(inside)
        .map(|g| g.0 - step)
        .unwrap_or(lo_scan);
    let hi = grid
        .iter()
        .rev()
        .find(inside)
        .map(|g| g.0 + step)
        .unwrap_or(hi_scan);

    let density = |w: f64| log_density(w).exp();
    let tol = 1e-14;
    let mass = quadrature::integrate(density, lo, hi, tol);
    let mean = quadrature::integrate(|w| w * density(w), lo, hi, tol) / mass;
    let variance = quadrature::integrate(|w| (w - mean).powi(2) * density(w), lo, hi, tol) / mass;
    if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
        return Err(Error::NumericalInstability(format!(
            "quadrature of Weibull residual moments failed at r = {r}, n = {n}"
        )));
    }
    Ok(WeibullMoments {
        mean,
        second: variance + mean * mean,
        variance,
        route: MomentRoute::Quadrature,
    })
}

/// Moments of the Weibull plot response at rank `r` of `n`, choosing the
/// closed form for the minimum, the binomial sum where it is numerically
/// safe, and quadrature otherwise.
pub fn weibull_moments(r: usize, n: usize) -> Result<WeibullMoments> {
    check_rank(r, n)?;
    if r == 1 {
        return Ok(minimum_moments(n));
    }
    if n <= BINOMIAL_MAX_N {
        if let Some(m) = binomial_moments(r, n)? {
            return Ok(m);
        }
    }
    quadrature_moments(r, n)
}

/// E[log(-log(1 - Z))], Z ~ Beta(r, n - r + 1).
pub fn weibull_residual_mean(r: usize, n: usize) -> Result<f64> {
    Ok(weibull_moments(r, n)?.mean)
}

/// E[log(-log(1 - Z))²], Z ~ Beta(r, n - r + 1).
pub fn weibull_residual_second_moment(r: usize, n: usize) -> Result<f64> {
    Ok(weibull_moments(r, n)?.second)
}

/// Variance of the Weibull plot residual at rank `r` of `n`.
pub fn weibull_residual_var(r: usize, n: usize) -> Result<f64> {
    let m = weibull_moments(r, n)?;
    if m.variance > 0.0 {
        Ok(m.variance)
    } else {
        Err(Error::NumericalInstability(format!(
            "nonpositive Weibull residual variance at r = {r}, n = {n}"
        )))
    }
}
