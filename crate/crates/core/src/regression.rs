//! Least-squares trend regression with Newey-West HAC inference.
//!
//! The HAC covariance is the sandwich `B M B` with bread `B = (XᵀX)⁻¹` and
//! meat
//!
//! ```text
//! M = Σ_t e_t² x_t x_tᵀ + Σ_{l=1}^{L} w_l Σ_t e_t e_{t-l} (x_t x_{t-l}ᵀ + x_{t-l} x_tᵀ)
//! w_l = 1 - l / (L + 1)
//! ```
//!
//! Coefficient t statistics are referred to Student-t with `n - k` degrees
//! of freedom.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::PValues;
use crate::series::AnnualSeries;

/// Relative threshold on pivoted-QR diagonals below which a design is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Residual norm, relative to `‖y‖`, at or below which a fit counts as exact.
const EXACT_FIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("design matrix is rank deficient")]
    RankDeficientDesign,
    #[error("need more observations ({n}) than parameters ({k})")]
    InsufficientObservations { n: usize, k: usize },
    #[error("invalid design: {0}")]
    InvalidDesign(String),
}

/// Named regressor columns; the first column is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    matrix: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(columns: Vec<(String, Vec<f64>)>) -> Result<Self, RegressionError> {
        let Some((_, first)) = columns.first() else {
            return Err(RegressionError::InvalidDesign("no columns".into()));
        };
        let n = first.len();
        if first.iter().any(|&v| v != 1.0) {
            return Err(RegressionError::InvalidDesign(
                "first column must be the intercept".into(),
            ));
        }
        if let Some((name, _)) = columns.iter().find(|(_, c)| c.len() != n) {
            return Err(RegressionError::InvalidDesign(format!(
                "column `{name}` has the wrong length"
            )));
        }
        let k = columns.len();
        let matrix = DMatrix::from_fn(n, k, |i, j| columns[j].1[i]);
        let names = columns.into_iter().map(|(name, _)| name).collect();
        Ok(Self { names, matrix })
    }

    /// `[1, t]` for `t = 0..n`.
    pub fn linear_trend(n: usize) -> Self {
        Self::new(vec![
            ("intercept".into(), vec![1.0; n]),
            ("trend".into(), (0..n).map(|t| t as f64).collect()),
        ])
        .expect("well-formed")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Newey-West settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct HacOptions {
    /// Bartlett truncation lag; `None` picks `floor(4 (n/100)^(2/9))`.
    pub lags: Option<usize>,
    /// Scale the covariance by `n / (n - k)`.
    pub small_sample: bool,
}

impl HacOptions {
    pub fn with_lags(lags: usize) -> Self {
        Self {
            lags: Some(lags),
            small_sample: false,
        }
    }

    pub fn lags_for(&self, n: usize) -> usize {
        self.lags.unwrap_or_else(|| default_hac_lags(n))
    }
}

pub fn default_hac_lags(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Fitted linear-in-parameters trend model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub cov_hac: Vec<Vec<f64>>,
    /// Classical `s² (XᵀX)⁻¹` with `s² = SSE / (n - k)`.
    pub cov_ols: Vec<Vec<f64>>,
    pub se: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_two: Vec<f64>,
    pub p_pos: Vec<f64>,
    pub p_neg: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub sse: f64,
    #[serde(rename = "logL")]
    pub log_lik: f64,
    pub bic: f64,
    pub n: usize,
    pub k: usize,
    pub hac_lags: usize,
}

impl TrendFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn p_values(&self, i: usize) -> PValues {
        PValues {
            two_sided: self.p_two[i],
            positive: self.p_pos[i],
            negative: self.p_neg[i],
        }
    }

    pub fn ols_se(&self) -> Vec<f64> {
        (0..self.k)
            .map(|i| self.cov_ols[i][i].max(0.0).sqrt())
            .collect()
    }
}

/// Gaussian profile log-likelihood `-(n/2) log(SSE/n)`, constants dropped.
pub fn gaussian_log_lik(sse: f64, n: usize) -> f64 {
    let n = n as f64;
    -0.5 * n * (sse / n).ln()
}

pub fn bic(log_lik: f64, k: usize, n: usize) -> f64 {
    -2.0 * log_lik + k as f64 * (n as f64).ln()
}

/// Newey-West meat with Bartlett weights.
pub fn hac_meat(x: &DMatrix<f64>, residuals: &[f64], lags: usize) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let mut meat = DMatrix::zeros(k, k);
    for (t, e) in residuals.iter().enumerate() {
        let xt = x.row(t);
        meat += xt.transpose() * xt * (e * e);
    }
    for l in 1..=lags.min(n.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let mut gamma = DMatrix::zeros(k, k);
        for t in l..n {
            gamma += x.row(t).transpose() * x.row(t - l) * (residuals[t] * residuals[t - l]);
        }
        meat += (&gamma + gamma.transpose()) * w;
    }
    meat
}

pub fn sandwich(bread: &DMatrix<f64>, meat: &DMatrix<f64>) -> DMatrix<f64> {
    let cov = bread * meat * bread;
    (&cov + cov.transpose()) * 0.5
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn check_rank(x: &DMatrix<f64>) -> Result<(), RegressionError> {
    let r = x.clone().col_piv_qr().r();
    let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 || diag.iter().any(|&d| d <= RANK_TOLERANCE * largest) {
        return Err(RegressionError::RankDeficientDesign);
    }
    Ok(())
}

pub fn ols_fit(
    y: &AnnualSeries,
    design: &DesignMatrix,
    hac: HacOptions,
) -> Result<TrendFit, RegressionError> {
    ols_fit_values(y.values(), design, hac)
}

pub fn ols_fit_values(
    y: &[f64],
    design: &DesignMatrix,
    hac: HacOptions,
) -> Result<TrendFit, RegressionError> {
    let x = design.matrix();
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(RegressionError::InvalidDesign(format!(
            "design has {n} rows but the series has {} values",
            y.len()
        )));
    }
    if n <= k {
        return Err(RegressionError::InsufficientObservations { n, k });
    }
    check_rank(x)?;

    let qr = x.clone().qr();
    let r = qr.r();
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or(RegressionError::RankDeficientDesign)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(RegressionError::RankDeficientDesign)?;
    let bread = &r_inv * r_inv.transpose();

    let fitted_v = x * &coef;
    let fitted: Vec<f64> = fitted_v.iter().copied().collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();

    let lags = hac.lags_for(n);
    let mut cov = sandwich(&bread, &hac_meat(x, &residuals, lags));
    if hac.small_sample {
        cov *= n as f64 / (n - k) as f64;
    }
    let cov_ols = &bread * (sse / (n - k) as f64);

    let df = (n - k) as f64;
    let coef: Vec<f64> = coef.iter().copied().collect();
    // A zero-residual fit has no sampling variability: se = 0, and t is 0 for
    // coefficients that vanish at working precision, ±inf otherwise.
    let ynorm = yv.norm();
    let exact = sse.sqrt() <= EXACT_FIT_TOLERANCE * ynorm;
    let se: Vec<f64> = (0..k)
        .map(|i| {
            if exact {
                0.0
            } else {
                cov[(i, i)].max(0.0).sqrt()
            }
        })
        .collect();
    let t_stats: Vec<f64> = (0..k)
        .map(|i| {
            let b = coef[i];
            if se[i] > 0.0 {
                b / se[i]
            } else if b.abs() * x.column(i).norm() <= EXACT_FIT_TOLERANCE * ynorm {
                0.0
            } else {
                b.signum() * f64::INFINITY
            }
        })
        .collect();
    let p: Vec<PValues> = t_stats.iter().map(|&t| PValues::student_t(t, df)).collect();
    let log_lik = gaussian_log_lik(sse, n);

    Ok(TrendFit {
        names: design.names().to_vec(),
        coef,
        cov_hac: to_rows(&cov),
        cov_ols: to_rows(&cov_ols),
        se,
        t_stats,
        p_two: p.iter().map(|p| p.two_sided).collect(),
        p_pos: p.iter().map(|p| p.positive).collect(),
        p_neg: p.iter().map(|p| p.negative).collect(),
        residuals,
        fitted,
        sse,
        log_lik,
        bic: bic(log_lik, k, n),
        n,
        k,
        hac_lags: lags,
    })
}

/// Linear trend `y_t = a + b t + e_t` with the three p-values for `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    pub fit: TrendFit,
    pub slope: PValues,
}

pub fn trend_test(y: &AnnualSeries, hac: HacOptions) -> Result<TrendTest, RegressionError> {
    trend_test_values(y.values(), hac)
}

pub fn trend_test_values(y: &[f64], hac: HacOptions) -> Result<TrendTest, RegressionError> {
    let fit = ols_fit_values(y, &DesignMatrix::linear_trend(y.len()), hac)?;
    let slope = fit.p_values(1);
    Ok(TrendTest { fit, slope })
}
