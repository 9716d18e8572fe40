//! Monte Carlo harness: data generating processes, estimator summaries over
//! replications, and pair-versus-full matching comparisons.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::cover::{full_match, optimal_pair_match, CardinalityPenalty};
use crate::distance::{apply_dose_penalty, mahalanobis_matrix_with, DosePenaltyConfig, UnitTable};
use crate::error::{Error, Result};
use crate::homogeneity::{prematch_ss, report, HomogeneityReport};
use crate::par::Execution;
use crate::regression::{estimate_beta_reg, estimate_beta_reg_match, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoseModel {
    /// Uniform on {-2, -1, 0, 1, 2}.
    MultilevelU5,
    /// Uniform on [1 - √3, 1 + √3]: mean 1, variance 1.
    UniformShifted,
    Exponential1,
    Uniform01,
}

impl DoseModel {
    fn draw(self, rng: &mut impl Rng) -> f64 {
        match self {
            DoseModel::MultilevelU5 => rng.random_range(-2..=2) as f64,
            DoseModel::UniformShifted => {
                let s = 3f64.sqrt();
                rng.sample(Uniform::new(1.0 - s, 1.0 + s).expect("valid bounds"))
            }
            DoseModel::Exponential1 => rng.sample(Exp1),
            DoseModel::Uniform01 => rng.random::<f64>(),
        }
    }
}

/// Nonlinear part of the mean response, `g(X)`, added to `beta * Z + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseModel {
    /// `exp(a X1 + b X2)` when it is at most 100, else 0.
    #[default]
    TruncatedExp,
    /// `1{exp(a X1 + b X2) <= 100}`.
    Indicator,
}

impl ResponseModel {
    fn mean(self, a: f64, b: f64, x1: f64, x2: f64) -> f64 {
        let e = (a * x1 + b * x2).exp();
        let inside = e <= 100.0;
        match self {
            ResponseModel::TruncatedExp if inside => e,
            ResponseModel::Indicator if inside => 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub d: usize,
    pub n: usize,
    pub dose_model: DoseModel,
    /// Coupling of the first covariate's mean to the dose.
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub intercept: f64,
    pub response_model: ResponseModel,
    pub replications: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// Factorial-study defaults: β = 1, intercept 1.
    pub fn new(d: usize, n: usize, dose_model: DoseModel, c: f64, a: f64, b: f64) -> Self {
        SimulationConfig {
            d,
            n,
            dose_model,
            c,
            a,
            b,
            beta: 1.0,
            intercept: 1.0,
            response_model: ResponseModel::default(),
            replications: 200,
            seed: 1,
        }
    }

    /// Uniform(0, 1) dose with the given dimension, size and coupling.
    pub fn uniform_dose(d: usize, n: usize, c: f64) -> Self {
        SimulationConfig::new(d, n, DoseModel::Uniform01, c, 0.5, 0.5)
    }

    /// Three covariates, c = -2, response coefficients 0.8 and 0.5, intercept 2.
    pub fn lambda_example(n: usize) -> Self {
        SimulationConfig {
            intercept: 2.0,
            ..SimulationConfig::new(3, n, DoseModel::Uniform01, -2.0, 0.8, 0.5)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n < self.d + 2 {
            return Err(Error::InvalidParameter(format!(
                "need d >= 1 and n >= d + 2, got d = {}, n = {}",
                self.d, self.n
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        Ok(())
    }
}

/// One simulated dataset. Replication `rep` draws from its own stream of the
/// seeded generator, so any replication can be regenerated on its own.
pub fn generate_dataset(cfg: &SimulationConfig, rep: usize) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);
    let (n, d) = (cfg.n, cfg.d);
    let mut dose = Vec::with_capacity(n);
    let mut x = DMatrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let z = cfg.dose_model.draw(&mut rng);
        for k in 0..d {
            let e: f64 = rng.sample(StandardNormal);
            x[(i, k)] = if k == 0 { cfg.c * z + 2.0 * e } else { e };
        }
        let x2 = if d > 1 { x[(i, 1)] } else { 0.0 };
        let mean = cfg.response_model.mean(cfg.a, cfg.b, x[(i, 0)], x2) + cfg.beta * z + cfg.intercept;
        let noise: f64 = rng.sample(StandardNormal);
        dose.push(z);
        y.push(mean + noise);
    }
    Ok(Dataset {
        units: UnitTable::unnamed(dose, x)?,
        response: y,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    /// Mean signed error.
    pub bias: f64,
    /// Mean absolute error.
    pub mean_abs_error: f64,
    /// Standard deviation of the estimates (divisor = replications).
    pub se: f64,
    pub mse: f64,
    pub replications: usize,
}

impl EstimatorSummary {
    /// Summary of estimates of `truth`. `mse == bias² + se²` up to rounding.
    pub fn from_estimates(estimates: &[f64], truth: f64) -> Self {
        let m = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / m;
        EstimatorSummary {
            bias: mean - truth,
            mean_abs_error: estimates.iter().map(|e| (e - truth).abs()).sum::<f64>() / m,
            se: (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / m).sqrt(),
            mse: estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / m,
            replications: estimates.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: SimulationConfig,
    pub reg: EstimatorSummary,
    pub reg_match: EstimatorSummary,
    /// Replications that could not be matched or estimated.
    pub failures: usize,
    pub reg_estimates: Vec<f64>,
    pub reg_match_estimates: Vec<f64>,
}

/// Both estimators on one replication. Matching uses covariate distance only.
pub fn replicate(cfg: &SimulationConfig, rep: usize) -> Result<(f64, f64)> {
    let data = generate_dataset(cfg, rep)?;
    let dm = mahalanobis_matrix_with(&data.units, Execution::Sequential)?;
    let pi = full_match(&dm, CardinalityPenalty::default())?;
    Ok((estimate_beta_reg(&data)?, estimate_beta_reg_match(&data, &pi)?))
}

/// Runs every replication of one cell. Failed replications are counted and
/// left out of both summaries.
pub fn run_cell(cfg: &SimulationConfig, exec: Execution) -> Result<CellResult> {
    cfg.validate()?;
    let outcomes = exec.map(cfg.replications, |rep| replicate(cfg, rep));
    let ok: Vec<(f64, f64)> = outcomes.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    if ok.is_empty() {
        return Err(outcomes.into_iter().find_map(|r| r.err()).unwrap_or(Error::RankDeficient));
    }
    let reg: Vec<f64> = ok.iter().map(|e| e.0).collect();
    let reg_match: Vec<f64> = ok.iter().map(|e| e.1).collect();
    Ok(CellResult {
        config: *cfg,
        reg: EstimatorSummary::from_estimates(&reg, cfg.beta),
        reg_match: EstimatorSummary::from_estimates(&reg_match, cfg.beta),
        failures: cfg.replications - ok.len(),
        reg_estimates: reg,
        reg_match_estimates: reg_match,
    })
}

pub fn run_factorial(cells: &[SimulationConfig], exec: Execution) -> Result<Vec<CellResult>> {
    cells.iter().map(|c| run_cell(c, exec)).collect()
}

/// Full factorial grid in table order: dose model, then (d, n), then c, then (a, b).
pub fn factorial_grid(
    dose_models: &[DoseModel],
    dims: &[usize],
    sizes: &[usize],
    replications: usize,
    seed: u64,
) -> Vec<SimulationConfig> {
    let coefficients = [(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)];
    let mut out = Vec::new();
    for &model in dose_models {
        for &d in dims {
            for &n in sizes {
                for c in [-2.0, 2.0] {
                    for (a, b) in coefficients {
                        out.push(SimulationConfig {
                            replications,
                            seed,
                            ..SimulationConfig::new(d, n, model, c, a, b)
                        });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub tau0: f64,
    pub pair: HomogeneityReport,
    pub full: HomogeneityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVsFull {
    pub prematch_mean_distance: f64,
    pub prematch_ss: f64,
    pub rows: Vec<ComparisonRow>,
}

/// Pair and full matching on one dataset across a grid of dose separations.
/// Reports use the covariate distance without the dose penalty.
pub fn run_pair_vs_full(
    cfg: &SimulationConfig,
    tau0_grid: &[f64],
    c_penalty: f64,
    lambda: CardinalityPenalty,
    exec: Execution,
) -> Result<PairVsFull> {
    let data = generate_dataset(cfg, 0)?;
    let u = &data.units;
    let dm = mahalanobis_matrix_with(u, exec)?;
    let rows = exec.map(tau0_grid.len(), |t| -> Result<ComparisonRow> {
        let tau0 = tau0_grid[t];
        let penalised = apply_dose_penalty(&dm, u, &DosePenaltyConfig::new(c_penalty, tau0)?)?;
        let pair = optimal_pair_match(&penalised)?;
        let full = full_match(&penalised, lambda)?;
        Ok(ComparisonRow {
            tau0,
            pair: report(&pair, &dm, u)?,
            full: report(&full, &dm, u)?,
        })
    });
    Ok(PairVsFull {
        prematch_mean_distance: dm.mean_pairwise(),
        prematch_ss: prematch_ss(u),
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub report: HomogeneityReport,
}

/// Full matching on one dataset across a grid of cardinality penalties.
pub fn run_lambda_sweep(
    cfg: &SimulationConfig,
    penalty: DosePenaltyConfig,
    lambdas: &[f64],
    exec: Execution,
) -> Result<Vec<LambdaRow>> {
    let data = generate_dataset(cfg, 0)?;
    let u = &data.units;
    let dm = mahalanobis_matrix_with(u, exec)?;
    let penalised = apply_dose_penalty(&dm, u, &penalty)?;
    exec.map(lambdas.len(), |k| {
        let pi = full_match(&penalised, CardinalityPenalty::new(lambdas[k])?)?;
        Ok(LambdaRow {
            lambda: lambdas[k],
            report: report(&pi, &dm, u)?,
        })
    })
    .into_iter()
    .collect()
}
