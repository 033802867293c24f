//! Studies: convergence, calibration, inversion accuracy, size scaling,
//! Lipschitz continuity, and report emission.

mod convergence;
mod emit;
mod invnet;
mod lipschitz;
mod scaling;

pub use convergence::{calibrate, calibrate_family, convergence_study, ErrorReference};
pub use emit::{emit_report, ReportFormat};
pub use invnet::invnet_study;
pub use lipschitz::lipschitz_study;
pub use scaling::size_scaling_study;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::ApproxError;
use crate::onet::BuildError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("fit underdetermined: {points} point(s), need at least 2")]
    UnderdeterminedFit { points: usize },
    #[error("study failed: {0}")]
    StudyFailed(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A named fitted constant.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Fit {
    pub name: String,
    pub value: f64,
}

/// Grid, measurement rows, fitted constants and environment stamp of one
/// study. Rows carry the exact component sizes and depths used, so fits are
/// reproducible from the rows alone.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StudyReport {
    pub kind: String,
    pub seed: u64,
    pub precision: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub fits: Vec<Fit>,
    /// Cells that failed to build; the study continues past them.
    pub failures: Vec<String>,
}

impl StudyReport {
    pub fn new(kind: &str, seed: u64, columns: &[&str]) -> Self {
        StudyReport {
            kind: kind.to_string(),
            seed,
            precision: "f64".to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fits: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn fit(&self, name: &str) -> Option<f64> {
        self.fits.iter().find(|f| f.name == name).map(|f| f.value)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Least-squares line with its worst residual relative to the data range.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub range: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, StudyError> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(StudyError::UnderdeterminedFit { points: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(StudyError::UnderdeterminedFit { points: xs.len() });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut max_residual: f64 = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        max_residual = max_residual.max((y - slope * x - intercept).abs());
    }
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(LinearFit {
        slope,
        intercept,
        max_residual,
        range: hi - lo,
    })
}

/// Two-variable exponent regression
/// `log size = c + a log N + b log |log eps|` over study rows; returns
/// `(a, b)`.
pub fn exponent_fits(
    rows: &[Vec<f64>],
    n_col: usize,
    eps_col: usize,
    size_col: usize,
) -> Result<(f64, f64), StudyError> {
    use nalgebra::{DMatrix, DVector};
    if rows.len() < 4 {
        return Err(StudyError::UnderdeterminedFit { points: rows.len() });
    }
    let x = DMatrix::from_fn(rows.len(), 3, |r, c| match c {
        0 => 1.0,
        1 => rows[r][n_col].ln(),
        _ => rows[r][eps_col].ln().abs().ln(),
    });
    let y = DVector::from_fn(rows.len(), |r, _| rows[r][size_col].ln());
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    let beta = xtx
        .lu()
        .solve(&xty)
        .ok_or_else(|| StudyError::StudyFailed("exponent regression is singular".into()))?;
    Ok((beta[1], beta[2]))
}
