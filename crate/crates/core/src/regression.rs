//! Least-squares effect estimators: plain regression adjustment and the
//! matched-set fixed-effects version.

use nalgebra::{DMatrix, DVector};

use crate::distance::UnitTable;
use crate::error::{Error, Result};
use crate::subclass::Subclassification;

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Units with an observed response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub units: UnitTable,
    pub response: Vec<f64>,
}

/// Least-squares coefficients via SVD; fails unless `x` has full column rank.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() < x.ncols() || x.ncols() == 0 {
        return Err(Error::RankDeficient);
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = RANK_TOL * smax;
    if !(smax > 0.0) || svd.singular_values.iter().any(|&s| s <= tol) {
        return Err(Error::RankDeficient);
    }
    svd.solve(y, tol).map_err(|_| Error::RankDeficient)
}

/// Coefficient on dose from regressing Y on an intercept, Z and every covariate.
pub fn estimate_beta_reg(data: &Dataset) -> Result<f64> {
    let u = &data.units;
    let (n, d) = (u.len(), u.dim());
    let x = DMatrix::from_fn(n, d + 2, |i, j| match j {
        0 => 1.0,
        1 => u.dose[i],
        _ => u.covariates[(i, j - 2)],
    });
    let beta = ols(&x, &DVector::from_column_slice(&data.response))?;
    Ok(beta[1])
}

/// Coefficient on dose with one intercept per subclass, computed by demeaning
/// Y, Z and X within subclasses and fitting without an intercept. Units
/// outside every subclass are dropped.
pub fn estimate_beta_reg_match(data: &Dataset, pi: &Subclassification) -> Result<f64> {
    let u = &data.units;
    if pi.unit_count() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: pi.unit_count(),
        });
    }
    let d = u.dim();
    let rows: usize = pi.sizes().iter().sum();
    let mut x = DMatrix::zeros(rows, d + 1);
    let mut y = DVector::zeros(rows);
    let mut r = 0;
    for s in pi.subclasses() {
        let k = s.len() as f64;
        let y_bar = s.members.iter().map(|&m| data.response[m]).sum::<f64>() / k;
        let z_bar = s.members.iter().map(|&m| u.dose[m]).sum::<f64>() / k;
        let x_bar: Vec<f64> = (0..d)
            .map(|c| s.members.iter().map(|&m| u.covariates[(m, c)]).sum::<f64>() / k)
            .collect();
        for &m in &s.members {
            y[r] = data.response[m] - y_bar;
            x[(r, 0)] = u.dose[m] - z_bar;
            for c in 0..d {
                x[(r, c + 1)] = u.covariates[(m, c)] - x_bar[c];
            }
            r += 1;
        }
    }
    let beta = ols(&x, &y)?;
    Ok(beta[0])
}
