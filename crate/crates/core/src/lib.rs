//! Weighted order-statistic regression for the log-logistic, Weibull and
//! logistic distributions, with maximum-likelihood baselines and a
//! Monte-Carlo study harness.

pub mod cli;
pub mod error;
pub mod fitcore;
pub mod quadrature;
pub mod resweights;
pub mod sampling;
pub mod simstudy;
pub mod specfun;

pub use error::{Error, Result};
pub use resweights::{DistributionKind, MomentMethod, PlottingScheme, ResidualMomentTable};
pub use sampling::{DistributionParams, LocScaleParams, RngSeed};
