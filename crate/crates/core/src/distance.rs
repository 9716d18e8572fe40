//! Unit tables, pairwise distance matrices, Mahalanobis distances and the
//! dose penalty.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::par::Execution;

/// Condition number of the sample covariance above which it is regularised.
const RIDGE_TRIGGER: f64 = 1e10;
/// Relative ridge added to the covariance diagonal when regularising.
const RIDGE: f64 = 1e-8;
/// Condition number above which even the regularised covariance is rejected.
const SINGULAR_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitTable {
    pub ids: Vec<String>,
    pub dose: Vec<f64>,
    /// N x d covariate matrix.
    pub covariates: DMatrix<f64>,
}

impl UnitTable {
    pub fn new(ids: Vec<String>, dose: Vec<f64>, covariates: DMatrix<f64>) -> Result<Self> {
        let n = ids.len();
        if n < 2 {
            return Err(Error::InvalidUnits(format!("need at least 2 units, got {n}")));
        }
        if dose.len() != n || covariates.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if dose.len() != n { dose.len() } else { covariates.nrows() },
            });
        }
        if covariates.ncols() == 0 {
            return Err(Error::InvalidUnits("at least one covariate is required".into()));
        }
        if let Some(i) = dose.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidUnits(format!("dose of unit {i} is not finite")));
        }
        if covariates.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidUnits("covariates contain non-finite values".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(UnitTable {
            ids,
            dose,
            covariates,
        })
    }

    /// Table with ids "0", "1", ...
    pub fn unnamed(dose: Vec<f64>, covariates: DMatrix<f64>) -> Result<Self> {
        let ids = (0..dose.len()).map(|i| i.to_string()).collect();
        UnitTable::new(ids, dose, covariates)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.covariates.ncols()
    }
}

/// Symmetric matrix of pairwise distances. Forbidden pairs are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    // row-major; NaN marks an absent entry
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// All-zero matrix on `n` units.
    pub fn zeros(n: usize) -> Self {
        DistanceMatrix {
            n,
            values: vec![0.0; n * n],
        }
    }

    /// Builds from `f(i, j)` for `i < j`; `None` marks a forbidden pair.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Option<f64>) -> Result<Self> {
        let mut d = DistanceMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                d.set(i, j, f(i, j))?;
            }
        }
        Ok(d)
    }

    /// Builds from a full square table, which must be symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(Error::InvalidParameter(format!("diagonal entry {i} is nonzero")));
            }
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::InvalidParameter(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        DistanceMatrix::from_fn(n, |i, j| Some(rows[i][j]))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.values[i * self.n + j];
        (!v.is_nan()).then_some(v)
    }

    /// Distance that must be present.
    #[inline]
    pub fn present(&self, i: usize, j: usize) -> Result<f64> {
        self.get(i, j).ok_or(Error::AbsentDistance(i, j))
    }

    pub fn set(&mut self, i: usize, j: usize, value: Option<f64>) -> Result<()> {
        if i == j {
            return Err(Error::InvalidParameter("the diagonal is fixed at zero".into()));
        }
        let v = match value {
            Some(v) if v.is_finite() && v >= 0.0 => v,
            Some(v) => return Err(Error::NegativeCost(i, j, v)),
            None => f64::NAN,
        };
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
        Ok(())
    }

    /// Element-wise square root, turning squared Mahalanobis into a metric.
    pub fn sqrt(&self) -> Self {
        DistanceMatrix {
            n: self.n,
            values: self.values.iter().map(|v| v.sqrt()).collect(),
        }
    }

    /// Mean over present off-diagonal entries.
    pub fn mean_pairwise(&self) -> f64 {
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..self.n {
            for j in i + 1..self.n {
                if let Some(v) = self.get(i, j) {
                    sum += v;
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Graph with one edge per present pair.
    pub fn to_graph(&self) -> WeightedGraph {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if let Some(c) = self.get(i, j) {
                    edges.push(Edge::new(i, j, c));
                }
            }
        }
        WeightedGraph::new(self.n, edges).expect("distance entries are valid edge costs")
    }
}

/// Squared Mahalanobis distances under the sample covariance of all units.
pub fn mahalanobis_matrix(u: &UnitTable) -> Result<DistanceMatrix> {
    mahalanobis_matrix_with(u, Execution::default())
}

pub fn mahalanobis_matrix_with(u: &UnitTable, exec: Execution) -> Result<DistanceMatrix> {
    let n = u.len();
    let d = u.dim();
    let x = &u.covariates;
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let whiten = whitening(cov)?;
    // In whitened coordinates the distance is plain squared Euclidean.
    let y = centered * whiten;
    let rows: Vec<DVector<f64>> = (0..n).map(|i| y.row(i).transpose()).collect();

    let mut values = vec![0.0; n * n];
    exec.for_each_chunk(&mut values, n.max(1), |i, row| {
        for j in 0..n {
            if j != i {
                let mut s = 0.0;
                for k in 0..d {
                    let t = rows[i][k] - rows[j][k];
                    s += t * t;
                }
                row[j] = s;
            }
        }
    });
    // enforce exact symmetry
    for i in 0..n {
        for j in i + 1..n {
            values[j * n + i] = values[i * n + j];
        }
    }
    Ok(DistanceMatrix { n, values })
}

/// Returns W with W Wᵀ = S⁻¹, regularising S when it is ill-conditioned.
fn whitening(mut cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    let trace = cov.trace();
    if !(trace > 0.0) {
        return Err(Error::SingularCovariance(f64::INFINITY));
    }
    let mut eig = cov.clone().symmetric_eigen();
    let cond = condition(&eig.eigenvalues);
    if cond > RIDGE_TRIGGER {
        for i in 0..d {
            cov[(i, i)] += RIDGE * trace / d as f64;
        }
        eig = cov.symmetric_eigen();
        let cond = condition(&eig.eigenvalues);
        if cond > SINGULAR_LIMIT {
            return Err(Error::SingularCovariance(cond));
        }
    }
    let mut w = eig.eigenvectors;
    for (k, mut col) in w.column_iter_mut().enumerate() {
        col /= eig.eigenvalues[k].sqrt();
    }
    Ok(w)
}

fn condition(eigenvalues: &DVector<f64>) -> f64 {
    let max = eigenvalues.max();
    let min = eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `c = inf` forbids pairs closer than `tau0` instead of penalising them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DosePenaltyConfig {
    pub c: f64,
    pub tau0: f64,
}

impl Default for DosePenaltyConfig {
    fn default() -> Self {
        DosePenaltyConfig {
            c: 100_000.0,
            tau0: 0.0,
        }
    }
}

impl DosePenaltyConfig {
    pub fn new(c: f64, tau0: f64) -> Result<Self> {
        if c.is_nan() || c < 0.0 {
            return Err(Error::InvalidParameter(format!("C must be >= 0, got {c}")));
        }
        if !(tau0.is_finite() && tau0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau0 must be finite and >= 0, got {tau0}"
            )));
        }
        Ok(DosePenaltyConfig { c, tau0 })
    }

    /// Whether two doses count as within `tau0` of each other.
    ///
    /// The difference of two decimal doses is rarely exact in binary (0.8 - 0.5
    /// is 0.30000000000000004), so the boundary is widened by one rounding unit
    /// of the operands.
    pub fn too_close(&self, zi: f64, zj: f64) -> bool {
        let diff = (zi - zj).abs();
        let slack = f64::EPSILON * zi.abs().max(zj.abs()).max(self.tau0);
        diff - self.tau0 <= slack
    }
}

/// Adds `C` to every present pair whose doses differ by at most `tau0`.
pub fn apply_dose_penalty(
    dm: &DistanceMatrix,
    u: &UnitTable,
    cfg: &DosePenaltyConfig,
) -> Result<DistanceMatrix> {
    if dm.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: dm.len(),
            found: u.len(),
        });
    }
    let n = dm.len();
    let mut out = dm.clone();
    if cfg.c == 0.0 {
        return Ok(out);
    }
    for i in 0..n {
        for j in i + 1..n {
            if let Some(v) = dm.get(i, j) {
                if cfg.too_close(u.dose[i], u.dose[j]) {
                    out.set(i, j, cfg.c.is_finite().then_some(v + cfg.c))?;
                }
            }
        }
    }
    Ok(out)
}
