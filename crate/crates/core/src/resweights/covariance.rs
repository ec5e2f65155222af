//! Monte-Carlo estimate of the full residual covariance matrix.
//!
//! Each replication sorts `n` open-interval uniforms and maps them through
//! the plot transform of the family; the sample covariance of the `m`
//! transformed vectors estimates Σ. Replications are generated in fixed
//! chunks on independent substreams and merged in chunk order, so the
//! result does not depend on the number of worker threads.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::DistributionKind;
use crate::error::{Error, Result};
use crate::sampling::{log_neg_log_complement, logit, open_uniform, RngSeed};

pub const DEFAULT_MC_REPLICATIONS: usize = 5000;
const CHUNK: usize = 512;
const STREAM_LABEL: u64 = 0xC0_7A_21_A4;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub dist: DistributionKind,
    pub n: usize,
    pub m: usize,
    pub seed: RngSeed,
    pub matrix: DMatrix<f64>,
}

/// Running mean and co-moment matrix of a batch of vectors.
struct Moments {
    count: f64,
    mean: DVector<f64>,
    comoment: DMatrix<f64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Self {
            count: 0.0,
            mean: DVector::zeros(n),
            comoment: DMatrix::zeros(n, n),
        }
    }

    fn push(&mut self, z: &DVector<f64>) {
        self.count += 1.0;
        let delta = z - &self.mean;
        self.mean += &delta / self.count;
        let after = z - &self.mean;
        self.comoment.ger(1.0, &delta, &after, 1.0);
    }

    fn merge(mut self, other: Moments) -> Self {
        if other.count == 0.0 {
            return self;
        }
        let total = self.count + other.count;
        let delta = &other.mean - &self.mean;
        let scale = self.count * other.count / total;
        self.comoment += other.comoment;
        self.comoment.ger(scale, &delta, &delta, 1.0);
        self.mean += delta * (other.count / total);
        self.count = total;
        self
    }
}

fn transform(dist: DistributionKind) -> fn(f64) -> f64 {
    match dist {
        DistributionKind::LogLogistic | DistributionKind::Logistic => logit,
        DistributionKind::Weibull => log_neg_log_complement,
    }
}

/// Sample covariance matrix of the transformed ordered uniforms.
pub fn mc_covariance(
    dist: DistributionKind,
    n: usize,
    m: usize,
    seed: RngSeed,
) -> Result<CovarianceEstimate> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "covariance needs n >= 2 (got {n})"
        )));
    }
    if m < 100 {
        return Err(Error::InvalidArgument(format!(
            "covariance needs at least 100 replications (got {m})"
        )));
    }
    let f = transform(dist);
    let chunks = m.div_ceil(CHUNK);
    let partials: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::new(n);
            let mut u = vec![0.0; n];
            let mut z = DVector::zeros(n);
            for rep in c * CHUNK..((c + 1) * CHUNK).min(m) {
                let mut rng = seed.stream(&[STREAM_LABEL, rep as u64]);
                u.iter_mut().for_each(|v| *v = open_uniform(&mut rng));
                u.sort_by(f64::total_cmp);
                for (zi, &ui) in z.iter_mut().zip(&u) {
                    *zi = f(ui);
                }
                acc.push(&z);
            }
            acc
        })
        .collect();
    let total = partials.into_iter().fold(Moments::new(n), Moments::merge);
    let mut matrix = total.comoment / (total.count - 1.0);
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    Ok(CovarianceEstimate {
        dist,
        n,
        m,
        seed,
        matrix,
    })
}

impl CovarianceEstimate {
    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().copied().collect()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Ratio of the largest to the smallest eigenvalue; infinite when the
    /// smallest is not positive.
    pub fn condition_number(&self) -> f64 {
        let ev = self.eigenvalues();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// log det Σ from the Cholesky factor, which stays finite long after the
    /// determinant itself underflows.
    pub fn log_det(&self) -> Result<f64> {
        let chol = self
            .matrix
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularCovariance("Cholesky factorization failed".into()))?;
        Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    pub fn det(&self) -> Result<f64> {
        Ok(self.log_det()?.exp())
    }

    /// Positive definite in floating point: every eigenvalue above
    /// `rel_tol` times the largest.
    pub fn is_full_rank(&self, rel_tol: f64) -> bool {
        let ev = self.eigenvalues();
        let hi = ev[ev.len() - 1];
        ev[0] > rel_tol * hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resweights::{loglogistic_residual_var, weibull_residual_var};

    #[test]
    fn symmetric_psd_and_close_to_exact() {
        let est = mc_covariance(DistributionKind::LogLogistic, 8, 20_000, RngSeed(5)).unwrap();
        let m = &est.matrix;
        for i in 0..8 {
            for j in 0..8 {
                assert!((m[(i, j)] - m[(j, i)]).abs() <= 1e-12);
            }
            let exact = loglogistic_residual_var(i + 1, 8).unwrap();
            assert!((m[(i, i)] - exact).abs() < 0.05 * exact.max(1.0));
        }
        let ev = est.eigenvalues();
        assert!(ev[0] >= -1e-8 * ev[ev.len() - 1]);
    }

    #[test]
    fn weibull_diagonal_matches_exact() {
        let est = mc_covariance(DistributionKind::Weibull, 6, 20_000, RngSeed(6)).unwrap();
        for (i, v) in est.diagonal().iter().enumerate() {
            let exact = weibull_residual_var(i + 1, 6).unwrap();
            assert!((v - exact).abs() < 0.05 * exact.max(1.0), "rank {}", i + 1);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_covariance(DistributionKind::Weibull, 5, 3000, RngSeed(42)).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn log_det_matches_direct_determinant() {
        let est = mc_covariance(DistributionKind::LogLogistic, 4, 2000, RngSeed(7)).unwrap();
        let direct = est.matrix.determinant();
        assert!((est.det().unwrap() - direct).abs() < 1e-12 * direct.abs().max(1e-300));
    }

    #[test]
    fn argument_checks() {
        assert!(mc_covariance(DistributionKind::Weibull, 1, 500, RngSeed(1)).is_err());
        assert!(mc_covariance(DistributionKind::Weibull, 5, 99, RngSeed(1)).is_err());
    }
}
