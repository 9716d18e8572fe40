use fullmatch::regression::{estimate_beta_reg, estimate_beta_reg_match, Dataset};
use fullmatch::simulation::{
    factorial_grid, generate_dataset, run_cell, DoseModel, EstimatorSummary, SimulationConfig,
};
use fullmatch::{full_match, mahalanobis_matrix, CardinalityPenalty, Execution};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coefficients from the normal equations, solved by Cholesky.
fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    xtx.cholesky().expect("full rank").solve(&xty)
}

fn small_dataset(seed: u64, n: usize) -> Dataset {
    let cfg = SimulationConfig {
        seed,
        ..SimulationConfig::new(3, n, DoseModel::UniformShifted, 2.0, 0.5, -0.5)
    };
    generate_dataset(&cfg, 0).unwrap()
}

#[test]
fn regression_matches_normal_equations() {
    for seed in 0..20 {
        let data = small_dataset(seed, 80);
        let u = &data.units;
        let x = DMatrix::from_fn(u.len(), u.dim() + 2, |i, j| match j {
            0 => 1.0,
            1 => u.dose[i],
            _ => u.covariates[(i, j - 2)],
        });
        let beta = normal_equations(&x, &DVector::from_column_slice(&data.response));
        let got = estimate_beta_reg(&data).unwrap();
        assert!((got - beta[1]).abs() <= 1e-9 * beta[1].abs().max(1.0));
    }
}

#[test]
fn fixed_effects_match_dummy_variable_regression() {
    for seed in 0..20 {
        let data = small_dataset(seed, 60);
        let u = &data.units;
        let pi = full_match(&mahalanobis_matrix(u).unwrap(), CardinalityPenalty::default()).unwrap();
        let labels = pi.labels();
        let (n, d, k) = (u.len(), u.dim(), pi.len());
        // one indicator column per subclass, no intercept
        let x = DMatrix::from_fn(n, k + 1 + d, |i, j| {
            if j < k {
                (labels[i] == Some(j)) as u8 as f64
            } else if j == k {
                u.dose[i]
            } else {
                u.covariates[(i, j - k - 1)]
            }
        });
        let beta = normal_equations(&x, &DVector::from_column_slice(&data.response));
        let got = estimate_beta_reg_match(&data, &pi).unwrap();
        assert!((got - beta[k]).abs() <= 1e-8 * beta[k].abs().max(1.0), "{got} vs {}", beta[k]);
    }
}

#[test]
fn correctly_specified_model_recovers_beta() {
    let cfg = SimulationConfig::new(2, 20_000, DoseModel::Uniform01, 0.0, 0.0, 0.0);
    let data = generate_dataset(&cfg, 0).unwrap();
    assert!((estimate_beta_reg(&data).unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn shifted_uniform_has_unit_mean_and_variance() {
    let cfg = SimulationConfig::new(1, 100_000, DoseModel::UniformShifted, 0.0, 0.0, 0.0);
    let z = generate_dataset(&cfg, 0).unwrap().units.dose;
    let m = z.iter().sum::<f64>() / z.len() as f64;
    let v = z.iter().map(|x| (x - m).powi(2)).sum::<f64>() / z.len() as f64;
    assert!((m - 1.0).abs() < 0.02 && (v - 1.0).abs() < 0.02, "{m} {v}");
}

#[test]
fn uncoupled_covariate_is_uncorrelated_with_dose() {
    let cfg = SimulationConfig::new(2, 50_000, DoseModel::Exponential1, 0.0, 0.0, 0.0);
    let u = generate_dataset(&cfg, 0).unwrap().units;
    let n = u.len() as f64;
    let x: Vec<f64> = (0..u.len()).map(|i| u.covariates[(i, 0)]).collect();
    let (mz, mx) = (u.dose.iter().sum::<f64>() / n, x.iter().sum::<f64>() / n);
    let cov: f64 = u.dose.iter().zip(&x).map(|(z, x)| (z - mz) * (x - mx)).sum::<f64>() / n;
    let sz = (u.dose.iter().map(|z| (z - mz).powi(2)).sum::<f64>() / n).sqrt();
    let sx = (x.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n).sqrt();
    assert!((cov / (sz * sx)).abs() < 0.02);
}

#[test]
fn mse_decomposes_into_bias_and_spread() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..100 {
        let est: Vec<f64> = (0..rng.random_range(1..200)).map(|_| rng.random::<f64>() * 4.0 - 1.0).collect();
        let s = EstimatorSummary::from_estimates(&est, 1.0);
        assert!((s.mse - (s.bias * s.bias + s.se * s.se)).abs() <= 1e-9 * s.mse.max(1.0));
    }
}

#[test]
fn cells_are_identical_across_execution_modes() {
    let cfg = SimulationConfig {
        replications: 12,
        ..SimulationConfig::new(3, 60, DoseModel::MultilevelU5, -2.0, 0.5, 0.5)
    };
    let a = run_cell(&cfg, Execution::Sequential).unwrap();
    let b = run_cell(&cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    for s in [a.reg, a.reg_match] {
        assert!((s.mse - (s.bias * s.bias + s.se * s.se)).abs() <= 1e-9 * s.mse.max(1.0));
    }
    let recomputed = EstimatorSummary::from_estimates(&a.reg_match_estimates, cfg.beta);
    assert_eq!(recomputed, a.reg_match);
}

#[test]
fn grid_size() {
    let grid = factorial_grid(&[DoseModel::MultilevelU5, DoseModel::Exponential1], &[5, 10], &[100], 3, 9);
    assert_eq!(grid.len(), 2 * 2 * 2 * 4);
    assert!(grid.iter().all(|c| c.replications == 3 && c.seed == 9));
}
