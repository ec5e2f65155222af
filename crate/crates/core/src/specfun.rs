//! Scalar special functions used by the order-statistic moment formulas.
//!
//! All three functions shift small arguments upward with the standard
//! recurrences and then evaluate the Bernoulli-number asymptotic series at
//! `x >= SERIES_THRESHOLD`, where the truncated series is accurate to a few
//! ulps.

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// pi^2 / 6, which is also trigamma(1).
pub const PI_SQ_OVER_6: f64 = 1.644_934_066_848_226_4;

const SERIES_THRESHOLD: f64 = 10.0;

/// The constants that appear in the closed-form residual moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathConstants {
    pub euler_gamma: f64,
    pub pi_sq_over_6: f64,
}

impl MathConstants {
    pub const fn new() -> Self {
        Self {
            euler_gamma: EULER_GAMMA,
            pi_sq_over_6: PI_SQ_OVER_6,
        }
    }
}

impl Default for MathConstants {
    fn default() -> Self {
        Self::new()
    }
}

fn check_domain(function: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { function, value: x })
    }
}

/// Digamma function, the logarithmic derivative of the gamma function.
pub fn digamma(x: f64) -> Result<f64> {
    check_domain("digamma", x)?;
    let mut y = x;
    let mut shift = 0.0;
    while y < SERIES_THRESHOLD {
        shift += 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    // B_2k / (2k y^2k), k = 1..7
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    Ok(y.ln() - 0.5 / y - series - shift)
}

/// Trigamma function, the derivative of [`digamma`].
pub fn trigamma(x: f64) -> Result<f64> {
    check_domain("trigamma", x)?;
    let mut y = x;
    let mut shift = 0.0;
    while y < SERIES_THRESHOLD {
        shift += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // B_2k / y^(2k+1), k = 1..7
    let series = inv
        * inv2
        * (1.0 / 6.0
            - inv2
                * (1.0 / 30.0
                    - inv2
                        * (1.0 / 42.0
                            - inv2
                                * (1.0 / 30.0
                                    - inv2
                                        * (5.0 / 66.0
                                            - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
    Ok(inv + 0.5 * inv2 + series + shift)
}

/// Natural logarithm of the gamma function for positive arguments.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_domain("log_gamma", x)?;
    let mut y = x;
    let mut product = 1.0;
    while y < SERIES_THRESHOLD {
        product *= y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2
                * (1.0 / 360.0
                    - inv2
                        * (1.0 / 1260.0
                            - inv2
                                * (1.0 / 1680.0
                                    - inv2
                                        * (1.0 / 1188.0
                                            - inv2 * (691.0 / 360_360.0 - inv2 / 156.0))))));
    let half_ln_two_pi = 0.918_938_533_204_672_8;
    let stirling = (y - 0.5) * y.ln() - y + half_ln_two_pi + series;
    Ok(stirling - product.ln())
}

/// log B(a, b) = ln Γ(a) + ln Γ(b) - ln Γ(a + b).
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn harmonic(k: u32) -> f64 {
        (1..=k).map(|j| 1.0 / j as f64).sum()
    }

    #[test]
    fn constants_match_reference_digits() {
        let c = MathConstants::default();
        assert!((c.euler_gamma - 0.5772156649015329).abs() <= 1e-15);
        assert!((c.pi_sq_over_6 - 1.6449340668482264).abs() <= 1e-15);
        assert!((c.pi_sq_over_6 - std::f64::consts::PI.powi(2) / 6.0).abs() <= 1e-15);
    }

    #[test]
    fn digamma_special_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() <= 1e-12);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() <= 1e-12);
        let want = harmonic(14) - EULER_GAMMA;
        assert!((digamma(15.0).unwrap() - want).abs() <= 1e-12);
        assert!((digamma(15.0).unwrap() - 2.6743466616).abs() <= 1e-10);
    }

    #[test]
    fn digamma_integer_arguments_match_harmonic_numbers() {
        for k in 1..200u32 {
            let want = harmonic(k - 1) - EULER_GAMMA;
            let got = digamma(k as f64).unwrap();
            assert!((got - want).abs() <= 1e-12, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn trigamma_special_values() {
        assert!((trigamma(1.0).unwrap() - PI_SQ_OVER_6).abs() <= 1e-12);
        assert!((trigamma(2.0).unwrap() - (PI_SQ_OVER_6 - 1.0)).abs() <= 1e-12);
        let partial: f64 = (1..=14).map(|k| 1.0 / (k * k) as f64).sum();
        assert!((trigamma(15.0).unwrap() - (PI_SQ_OVER_6 - partial)).abs() <= 1e-12);
        assert!((trigamma(15.0).unwrap() - 0.0689382278).abs() <= 1e-10);
    }

    #[test]
    fn half_integer_reference_values() {
        // psi(1/2) = -gamma - 2 ln 2, psi'(1/2) = pi^2 / 2
        let want = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert!((digamma(0.5).unwrap() - want).abs() <= 1e-12);
        assert!((trigamma(0.5).unwrap() - 3.0 * PI_SQ_OVER_6).abs() <= 1e-12);
    }

    #[test]
    fn small_and_large_arguments() {
        // psi(x) ~ -1/x - gamma + (pi^2/6) x near zero
        let x = 1e-3;
        let approx = -1.0 / x - EULER_GAMMA + PI_SQ_OVER_6 * x;
        assert!((digamma(x).unwrap() - approx).abs() <= 1e-5);
        // psi'(x) ~ 1/x^2 + pi^2/6 near zero; relative accuracy is what f64 allows here
        let t = trigamma(x).unwrap();
        assert!(((t - 1.0 / (x * x)) - PI_SQ_OVER_6).abs() <= 5e-3);

        let big: f64 = 1e6;
        let want = big.ln() - 0.5 / big - 1.0 / (12.0 * big * big);
        assert!((digamma(big).unwrap() - want).abs() <= 1e-12);
        let want = 1.0 / big + 0.5 / (big * big);
        assert!((trigamma(big).unwrap() - want).abs() <= 1e-18);
    }

    #[test]
    fn log_gamma_factorials() {
        assert!(log_gamma(1.0).unwrap().abs() <= 1e-13);
        assert!(log_gamma(2.0).unwrap().abs() <= 1e-13);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() <= 1e-12 * 24f64.ln());
        let mut ln_fact = 0.0;
        for k in 1..170u32 {
            ln_fact += (k as f64).ln();
            let got = log_gamma(k as f64 + 1.0).unwrap();
            assert!((got - ln_fact).abs() <= 1e-12 * ln_fact.max(1.0), "k={k}");
        }
        let half = 0.5 * std::f64::consts::PI.ln();
        assert!((log_gamma(0.5).unwrap() - half).abs() <= 1e-13);
    }

    #[test]
    fn domain_errors() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            assert!(digamma(bad).is_err());
            assert!(trigamma(bad).is_err());
            assert!(log_gamma(bad).is_err());
        }
    }

    #[test]
    fn trigamma_decreasing_on_grid() {
        let mut prev = f64::INFINITY;
        let mut x = 0.01;
        while x < 100.0 {
            let t = trigamma(x).unwrap();
            assert!(t < prev && t > 0.0);
            prev = t;
            x += 0.01;
        }
    }

    #[test]
    fn digamma_is_derivative_of_log_gamma() {
        let h = 1e-5;
        let mut x = 1.0;
        while x <= 50.0 {
            let fd = (log_gamma(x + h).unwrap() - log_gamma(x - h).unwrap()) / (2.0 * h);
            assert!((fd - digamma(x).unwrap()).abs() <= 1e-6, "x={x}");
            x += 0.25;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn recurrences(x in 0.5f64..100.0) {
            let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
            prop_assert!(d.abs() <= 1e-12);
            let t = trigamma(x + 1.0).unwrap() - trigamma(x).unwrap() + 1.0 / (x * x);
            prop_assert!(t.abs() <= 1e-12);
        }
    }
}
