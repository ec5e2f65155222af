use orderfit::fitcore::{bootstrap_se, fit_wls, Estimator, FitMethod, FitOptions, FittedParams};
use orderfit::resweights::{
    asymptotic_residual_var, loglogistic_residual_var, moment_table, MomentMethod, PlottingScheme,
    TableOptions,
};
use orderfit::sampling::{sample_loglogistic, sample_weibull, DistributionParams, LocScaleParams};
use orderfit::simstudy::{run_study, Parameter, StudyConfig, StudyReport};
use orderfit::{DistributionKind, RngSeed};
use proptest::prelude::*;

const FAMILIES: [DistributionKind; 3] = [
    DistributionKind::LogLogistic,
    DistributionKind::Weibull,
    DistributionKind::Logistic,
];

fn regressor(dist: DistributionKind, data: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = data
        .iter()
        .map(|&v| {
            if dist.is_positive_support() {
                v.ln()
            } else {
                v
            }
        })
        .collect();
    x.sort_by(f64::total_cmp);
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wls_residuals_are_weight_orthogonal(
        data in prop::collection::vec(0.05f64..20.0, 3..40),
        which in 0usize..3,
    ) {
        let dist = FAMILIES[which];
        let table = moment_table(dist, data.len(), MomentMethod::Exact, TableOptions::default()).unwrap();
        let fit = fit_wls(dist, &data, &table).unwrap();
        let x = regressor(dist, &data);
        let [t1, t2] = fit.theta;
        let (mut s0, mut s1, mut scale0, mut scale1) = (0.0, 0.0, 0.0, 0.0);
        for ((xi, mi), wi) in x.iter().zip(&table.means).zip(&table.weights) {
            let e = wi * (mi - t1 - t2 * xi);
            s0 += e;
            s1 += e * xi;
            scale0 += (wi * mi).abs();
            scale1 += (wi * mi * xi).abs();
        }
        prop_assert!(s0.abs() <= 1e-9 * scale0.max(1.0), "sum {s0}");
        prop_assert!(s1.abs() <= 1e-9 * scale1.max(1.0), "x-sum {s1}");
    }

    #[test]
    fn parameter_map_round_trip(alpha in 0.01f64..100.0, beta in 0.05f64..20.0) {
        let p = FittedParams::ShapeScale(DistributionParams::new(alpha, beta).unwrap());
        let [t1, t2] = p.theta();
        prop_assert!((t1 + t2 * alpha.ln()).abs() <= 1e-10 * t1.abs().max(1.0));
        let back = FittedParams::from_theta(DistributionKind::Weibull, [t1, t2]).unwrap();
        let (a, b) = back.pair();
        prop_assert!((a / alpha - 1.0).abs() <= 1e-10 && (b / beta - 1.0).abs() <= 1e-10);

        let q = FittedParams::LocationScale(LocScaleParams::new(alpha.ln(), beta).unwrap());
        let back = FittedParams::from_theta(DistributionKind::Logistic, q.theta()).unwrap();
        let (m, s) = back.pair();
        prop_assert!((m - alpha.ln()).abs() <= 1e-10 * alpha.ln().abs().max(1.0));
        prop_assert!((s / beta - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn scale_equivariance_all_methods(
        seed in any::<u64>(),
        c in 0.01f64..100.0,
        beta in 0.3f64..4.0,
        which in 0usize..2,
    ) {
        let dist = FAMILIES[which];
        let params = DistributionParams::new(1.0, beta).unwrap();
        let data = match dist {
            DistributionKind::Weibull => sample_weibull(&params, 12, RngSeed(seed)).unwrap(),
            _ => sample_loglogistic(&params, 12, RngSeed(seed)).unwrap(),
        };
        let scaled: Vec<f64> = data.iter().map(|x| c * x).collect();
        for method in [FitMethod::WlsExact, FitMethod::WlsAsymptotic, FitMethod::WlsMc, FitMethod::GlsFull, FitMethod::Ml] {
            let opts = FitOptions { mc_m: 500, ..FitOptions::with_method(method) };
            let est = Estimator::new(dist, 12, opts).unwrap();
            let (a0, b0) = est.fit(&data).unwrap().params.pair();
            let (a1, b1) = est.fit(&scaled).unwrap().params.pair();
            prop_assert!((a1 / (c * a0) - 1.0).abs() <= 1e-9, "{method:?} alpha");
            prop_assert!((b1 / b0 - 1.0).abs() <= 1e-9, "{method:?} beta");
        }
    }
}

#[test]
fn exact_and_asymptotic_variances_agree_mid_sample() {
    let exact = loglogistic_residual_var(8, 15).unwrap();
    let asym = asymptotic_residual_var(8, 15, PlottingScheme::Standard).unwrap();
    assert!((exact - asym).abs() < 1e-3);
    assert!((exact - 0.2662740293880628).abs() < 1e-15);
}

fn standard_report(dist: DistributionKind) -> StudyReport {
    run_study(&StudyConfig::standard_grid(dist, RngSeed(77))).unwrap()
}

fn beta_bias(report: &StudyReport, n: usize, beta: f64, method: FitMethod) -> f64 {
    report.cell(n, beta, method, Parameter::Beta).unwrap().bias
}

#[test]
fn study_is_reproducible() {
    let mut config = StudyConfig::standard_grid(DistributionKind::Weibull, RngSeed(3));
    config.reps = 100;
    assert_eq!(run_study(&config).unwrap(), run_study(&config).unwrap());
}

#[test]
fn wls_has_smaller_shape_bias_in_small_samples() {
    for dist in [DistributionKind::LogLogistic, DistributionKind::Weibull] {
        let config = StudyConfig::standard_grid(dist, RngSeed(77));
        let report = standard_report(dist);
        for n in [15, 25] {
            for &beta in &config.beta_grid {
                let w = beta_bias(&report, n, beta, FitMethod::WlsExact);
                let m = beta_bias(&report, n, beta, FitMethod::Ml);
                assert!(
                    w.abs() < m.abs(),
                    "{dist} n={n} beta={beta}: wls {w} ml {m}"
                );
            }
        }
    }
}

#[test]
fn shape_bias_signs_in_every_cell() {
    for dist in [DistributionKind::LogLogistic, DistributionKind::Weibull] {
        let config = StudyConfig::standard_grid(dist, RngSeed(77));
        let report = standard_report(dist);
        for &n in &config.n_grid {
            for &beta in &config.beta_grid {
                let w = beta_bias(&report, n, beta, FitMethod::WlsExact);
                let m = beta_bias(&report, n, beta, FitMethod::Ml);
                assert!(
                    w < 0.0 && m > 0.0,
                    "{dist} n={n} beta={beta}: wls {w} ml {m}"
                );
            }
        }
    }
}

#[test]
fn ml_wins_weibull_scale_mse() {
    let config = StudyConfig::standard_grid(DistributionKind::Weibull, RngSeed(77));
    let report = standard_report(DistributionKind::Weibull);
    for &n in &config.n_grid {
        for &beta in &config.beta_grid {
            let w = report
                .cell(n, beta, FitMethod::WlsExact, Parameter::Alpha)
                .unwrap()
                .mse;
            let m = report
                .cell(n, beta, FitMethod::Ml, Parameter::Alpha)
                .unwrap()
                .mse;
            assert!(m <= w, "n={n} beta={beta}: ml {m} wls {w}");
        }
    }
}

#[test]
fn ml_wins_shape_mse_in_large_samples() {
    for dist in [DistributionKind::LogLogistic, DistributionKind::Weibull] {
        let mut config = StudyConfig::standard_grid(dist, RngSeed(78));
        config.n_grid = vec![500];
        config.beta_grid = vec![1.5];
        config.reps = 500;
        let report = run_study(&config).unwrap();
        let w = report
            .cell(500, 1.5, FitMethod::WlsExact, Parameter::Beta)
            .unwrap()
            .mse;
        let m = report
            .cell(500, 1.5, FitMethod::Ml, Parameter::Beta)
            .unwrap()
            .mse;
        assert!(m <= w, "{dist}: ml {m} wls {w}");
    }
}

#[test]
fn bootstrap_matches_large_sample_se() {
    let params = DistributionParams::new(1.0, 2.0).unwrap();
    let data = sample_loglogistic(&params, 100, RngSeed(11)).unwrap();
    let opts = FitOptions::with_method(FitMethod::Ml);
    let se = bootstrap_se(
        DistributionKind::LogLogistic,
        &data,
        &opts,
        1000,
        RngSeed(12),
    )
    .unwrap();
    let theory = (0.6993f64 * 4.0 / 100.0).sqrt();
    assert!(
        (se.se_beta / theory - 1.0).abs() < 0.25,
        "{} vs {theory}",
        se.se_beta
    );
    assert_eq!(se.failures, 0);
}
