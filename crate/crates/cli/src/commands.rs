use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fullmatch::homogeneity::report;
use fullmatch::inference::{randomization_test, TestOptions};
use fullmatch::io::{
    fmt_f64, load_clustered_study, load_units, read_subclasses, write_json,
    write_reference_distribution, write_subclasses,
};
use fullmatch::simulation::{
    factorial_grid, run_cell, run_lambda_sweep, run_pair_vs_full, CellResult, DoseModel,
    ResponseModel, SimulationConfig,
};
use fullmatch::{
    apply_dose_penalty, full_match, mahalanobis_matrix, optimal_pair_match, Alternative,
    CardinalityPenalty, DosePenaltyConfig, Error, Execution, HomogeneityReport, UnitTable,
};
use log::warn;
use serde::Serialize;

use crate::settings::Settings;
use crate::Failure;

const REGRESSORS: &str = "REG: intercept, dose, all covariates; REG_MATCH: one intercept per subclass, dose, all covariates";

#[derive(Serialize)]
struct Metadata<'a> {
    software: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    /// Every effective setting, so the run can be repeated.
    settings: &'a BTreeMap<String, String>,
}

impl<'a> Metadata<'a> {
    fn new(command: &'static str, seed: u64, s: &'a Settings) -> Self {
        Metadata {
            software: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            settings: s.entries(),
        }
    }
}

#[derive(Serialize)]
struct MatchParameters {
    mode: &'static str,
    distance: &'static str,
    tau0: f64,
    c_penalty: f64,
    lambda: f64,
    covariates: usize,
    units: usize,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    report: &'a HomogeneityReport,
    discarded: Vec<&'a str>,
    parameters: Option<MatchParameters>,
    metadata: Metadata<'a>,
}

fn io_failure(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::Io(m) if !m.contains(&*path.to_string_lossy()) => {
            Failure::Data(format!("{}: {m}", path.display()))
        }
        e => Failure::from(e),
    }
}

fn units(s: &Settings) -> Result<UnitTable, Failure> {
    let path = PathBuf::from(s.require("input")?);
    let (mut spec, explicit_id) = s.columns()?;
    match load_units(&path, &spec) {
        // without --id-col, a file with no `id` column is numbered by row
        Err(Error::MissingColumn(c)) if !explicit_id && Some(&c) == spec.id.as_ref() => {
            spec.id = None;
            load_units(&path, &spec).map_err(io_failure(&path))
        }
        r => r.map_err(io_failure(&path)),
    }
}

pub fn run_match(s: &Settings) -> Result<(), Failure> {
    let u = units(s)?;
    let tau0 = s.get_or("tau0", 0.0)?;
    let c = s.get_or("C", DosePenaltyConfig::default().c)?;
    let lambda = s.get_or("lambda", 0.0)?;
    let pairs = s.flag("pairs")?;
    let seed = s.get_or("seed", 1u64)?;
    let dm = mahalanobis_matrix(&u)?;
    let penalised = apply_dose_penalty(&dm, &u, &DosePenaltyConfig::new(c, tau0)?)?;
    let pi = if pairs {
        if lambda != 0.0 {
            warn!("lambda has no effect on a pair match");
        }
        optimal_pair_match(&penalised)?
    } else {
        full_match(&penalised, CardinalityPenalty::new(lambda)?)?
    };
    for &d in pi.discarded() {
        warn!("odd number of units; unit {:?} was left unmatched", u.ids[d]);
    }
    let out = s.out_dir()?;
    let subclasses = out.join("subclasses.csv");
    write_subclasses(&subclasses, &pi, &u.ids).map_err(io_failure(&subclasses))?;
    let r = report(&pi, &dm, &u)?;
    let file = out.join("report.json");
    write_json(
        &file,
        &ReportFile {
            report: &r,
            discarded: pi.discarded().iter().map(|&d| u.ids[d].as_str()).collect(),
            parameters: Some(MatchParameters {
                mode: if pairs { "pairs" } else { "full" },
                distance: "squared mahalanobis",
                tau0,
                c_penalty: c,
                lambda,
                covariates: u.dim(),
                units: u.len(),
            }),
            metadata: Metadata::new("match", seed, s),
        },
    )
    .map_err(io_failure(&file))?;
    println!("{} subclasses over {} units", pi.len(), u.len() - pi.discarded().len());
    Ok(())
}

pub fn evaluate(s: &Settings) -> Result<(), Failure> {
    let u = units(s)?;
    let out = s.out_dir()?;
    let assignment = s
        .raw("subclasses")
        .map(PathBuf::from)
        .unwrap_or_else(|| out.join("subclasses.csv"));
    let pi = read_subclasses(&assignment, &u.ids).map_err(io_failure(&assignment))?;
    let dm = mahalanobis_matrix(&u)?;
    let r = report(&pi, &dm, &u)?;
    let file = out.join("report.json");
    write_json(
        &file,
        &ReportFile {
            report: &r,
            discarded: pi.discarded().iter().map(|&d| u.ids[d].as_str()).collect(),
            parameters: None,
            metadata: Metadata::new("evaluate", s.get_or("seed", 1u64)?, s),
        },
    )
    .map_err(io_failure(&file))?;
    println!("HM1 {} HM2 {} SS {}", fmt_f64(r.hm1), fmt_f64(r.hm2), fmt_f64(r.ss));
    Ok(())
}

#[derive(Serialize)]
struct InferFile<'a> {
    t_obs: f64,
    p_value: f64,
    draws: usize,
    exhaustive: bool,
    alternative: Alternative,
    seed: u64,
    sets: usize,
    clusters: usize,
    reference_distribution: &'static str,
    metadata: Metadata<'a>,
}

pub fn infer(s: &Settings) -> Result<(), Failure> {
    let path = PathBuf::from(s.require("input")?);
    let study = load_clustered_study(&path).map_err(io_failure(&path))?;
    let alternative = match s.raw("alternative").unwrap_or("greater") {
        "less" => Alternative::Less,
        "greater" => Alternative::Greater,
        other => return Err(Failure::Usage(format!("alternative must be less or greater, got {other:?}"))),
    };
    let seed = s.get_or("seed", 1u64)?;
    let r = randomization_test(&study, &TestOptions::new(s.get_or("draws", 10_000)?, seed, alternative))?;
    let out = s.out_dir()?;
    let csv = out.join("reference_distribution.csv");
    write_reference_distribution(&csv, &r).map_err(io_failure(&csv))?;
    let file = out.join("result.json");
    write_json(
        &file,
        &InferFile {
            t_obs: r.t_obs,
            p_value: r.p_value,
            draws: r.draws,
            exhaustive: r.exhaustive,
            alternative: r.alternative,
            seed: r.seed,
            sets: study.sets().len(),
            clusters: study.len(),
            reference_distribution: "reference_distribution.csv",
            metadata: Metadata::new("infer", seed, s),
        },
    )
    .map_err(io_failure(&file))?;
    println!("T = {}, p = {}", fmt_f64(r.t_obs), fmt_f64(r.p_value));
    Ok(())
}

fn dose_model(name: &str) -> Result<DoseModel, Failure> {
    match name.replace('_', "-").as_str() {
        "multilevel-u5" => Ok(DoseModel::MultilevelU5),
        "uniform-shifted" => Ok(DoseModel::UniformShifted),
        "exponential1" => Ok(DoseModel::Exponential1),
        "uniform01" => Ok(DoseModel::Uniform01),
        other => Err(Failure::Usage(format!(
            "unknown dose model {other:?} (multilevel-u5, uniform-shifted, exponential1, uniform01)"
        ))),
    }
}

/// Applies the per-cell keys shared by every experiment.
fn configure(s: &Settings, mut cfg: SimulationConfig) -> Result<SimulationConfig, Failure> {
    if let Some(m) = s.raw("dose-model") {
        cfg.dose_model = dose_model(m)?;
    }
    cfg.response_model = match s.raw("response-model").map(|m| m.replace('_', "-")).as_deref() {
        None => cfg.response_model,
        Some("truncated-exp") => ResponseModel::TruncatedExp,
        Some("indicator") => ResponseModel::Indicator,
        Some(other) => return Err(Failure::Usage(format!("unknown response model {other:?}"))),
    };
    cfg.d = s.get_or("d", cfg.d)?;
    cfg.n = s.get_or("n", cfg.n)?;
    cfg.c = s.get_or("c", cfg.c)?;
    cfg.a = s.get_or("a", cfg.a)?;
    cfg.b = s.get_or("b", cfg.b)?;
    cfg.beta = s.get_or("beta", cfg.beta)?;
    cfg.intercept = s.get_or("intercept", cfg.intercept)?;
    cfg.replications = s.get_or("replications", cfg.replications)?;
    cfg.seed = s.get_or("seed", cfg.seed)?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SimulationFile<'a, T: Serialize> {
    experiment: &'a str,
    regressors: &'static str,
    results: T,
    metadata: Metadata<'a>,
}

fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), Failure> {
    let fail = |e: csv::Error| Failure::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

const REPORT_COLUMNS: [&str; 14] = [
    "nu_p25", "nu_p50", "nu_p75", "nu_p90", "hm1", "hm2", "hm3", "hm4", "mu_min", "mu_p25", "mu_p50",
    "mu_p75", "ss", "sets",
];

fn report_cells(r: &HomogeneityReport) -> Vec<String> {
    let mut v: Vec<String> = r.nu_quantiles.iter().map(|x| fmt_f64(*x)).collect();
    v.extend([r.hm1, r.hm2, r.hm3, r.hm4].iter().map(|x| fmt_f64(*x)));
    v.extend(r.mu_quantiles.iter().map(|x| fmt_f64(*x)));
    v.push(fmt_f64(r.ss));
    v.push(r.set_count.to_string());
    v
}

fn cell_rows(cells: &[CellResult]) -> Vec<Vec<String>> {
    cells
        .iter()
        .map(|r| {
            let c = &r.config;
            let mut row = vec![
                format!("{:?}", c.dose_model),
                c.d.to_string(),
                c.n.to_string(),
                fmt_f64(c.c),
                fmt_f64(c.a),
                fmt_f64(c.b),
                r.reg.replications.to_string(),
                r.failures.to_string(),
            ];
            for s in [&r.reg, &r.reg_match] {
                row.extend([s.bias, s.mean_abs_error, s.se, s.mse].iter().map(|x| fmt_f64(*x)));
            }
            row
        })
        .collect()
}

const CELL_COLUMNS: [&str; 16] = [
    "dose_model", "d", "n", "c", "a", "b", "replications", "failures", "reg_bias", "reg_mean_abs_error",
    "reg_se", "reg_mse", "match_bias", "match_mean_abs_error", "match_se", "match_mse",
];

pub fn simulate(s: &Settings) -> Result<(), Failure> {
    let experiment = s.raw("experiment").unwrap_or("cell").replace('_', "-");
    let out = s.out_dir()?;
    let csv = out.join("results.csv");
    let json = out.join("results.json");
    let exec = Execution::default();
    let seed = s.get_or("seed", 1u64)?;
    let meta = || Metadata::new("simulate", seed, s);
    match experiment.as_str() {
        "cell" => {
            let cfg = configure(s, SimulationConfig::new(5, 500, DoseModel::Exponential1, 2.0, 0.5, -0.5))?;
            let cells = vec![run_cell(&cfg, exec)?];
            write_table(&csv, &CELL_COLUMNS, cell_rows(&cells))?;
            let results: Vec<_> = cells.iter().map(|c| (c.config, c.reg, c.reg_match, c.failures)).collect();
            write_json(&json, &SimulationFile { experiment: &experiment, regressors: REGRESSORS, results, metadata: meta() })
                .map_err(io_failure(&json))?;
        }
        "factorial" => {
            let models = match s.list::<String>("dose-models")? {
                Some(names) => names.iter().map(|n| dose_model(n)).collect::<Result<Vec<_>, _>>()?,
                None => vec![DoseModel::MultilevelU5, DoseModel::UniformShifted, DoseModel::Exponential1],
            };
            let dims = s.list("dims")?.unwrap_or_else(|| vec![5, 10]);
            let sizes = s.list("sizes")?.unwrap_or_else(|| vec![500, 2000]);
            let grid = factorial_grid(&models, &dims, &sizes, s.get_or("replications", 200)?, seed);
            let mut cells = Vec::with_capacity(grid.len());
            for cfg in &grid {
                cells.push(run_cell(cfg, exec)?);
            }
            write_table(&csv, &CELL_COLUMNS, cell_rows(&cells))?;
            let results: Vec<_> = cells.iter().map(|c| (c.config, c.reg, c.reg_match, c.failures)).collect();
            write_json(&json, &SimulationFile { experiment: &experiment, regressors: REGRESSORS, results, metadata: meta() })
                .map_err(io_failure(&json))?;
        }
        "pair-vs-full" => {
            let cfg = configure(s, SimulationConfig::uniform_dose(5, 2000, -2.0))?;
            let taus = s.list("tau0-grid")?.unwrap_or_else(|| vec![0.0, 0.1, 0.2, 0.3, 0.4]);
            let c = s.get_or("C", DosePenaltyConfig::default().c)?;
            let lambda = CardinalityPenalty::new(s.get_or("lambda", 0.0)?)?;
            let res = run_pair_vs_full(&cfg, &taus, c, lambda, exec)?;
            let mut header = vec!["method", "tau0"];
            header.extend(REPORT_COLUMNS);
            let mut rows = Vec::new();
            for (method, pick) in [("pair", true), ("full", false)] {
                for row in &res.rows {
                    let mut r = vec![method.to_string(), fmt_f64(row.tau0)];
                    r.extend(report_cells(if pick { &row.pair } else { &row.full }));
                    rows.push(r);
                }
            }
            write_table(&csv, &header, rows)?;
            write_json(&json, &SimulationFile { experiment: &experiment, regressors: REGRESSORS, results: &res, metadata: meta() })
                .map_err(io_failure(&json))?;
        }
        "lambda-sweep" => {
            let cfg = configure(s, SimulationConfig::lambda_example(1000))?;
            let penalty = DosePenaltyConfig::new(
                s.get_or("C", DosePenaltyConfig::default().c)?,
                s.get_or("tau0", 0.3)?,
            )?;
            let lambdas = s.list("lambdas")?.unwrap_or_else(|| vec![0.01, 0.1, 1.0, 10.0, 100.0]);
            let rows = run_lambda_sweep(&cfg, penalty, &lambdas, exec)?;
            let mut header = vec!["lambda"];
            header.extend(REPORT_COLUMNS);
            let table = rows
                .iter()
                .map(|r| {
                    let mut v = vec![fmt_f64(r.lambda)];
                    v.extend(report_cells(&r.report));
                    v
                })
                .collect();
            write_table(&csv, &header, table)?;
            write_json(&json, &SimulationFile { experiment: &experiment, regressors: REGRESSORS, results: &rows, metadata: meta() })
                .map_err(io_failure(&json))?;
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown experiment {other:?} (cell, factorial, pair-vs-full, lambda-sweep)"
            )))
        }
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}
