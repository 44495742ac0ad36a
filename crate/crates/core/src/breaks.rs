//! Single-break trend models, least-squares break-date search and nested
//! model comparison.
//!
//! With `D_t = I(t >= tau)` the two models are
//!
//! ```text
//! InterceptBreakOnly:     y_t = a1 + b t + a2 D_t + e_t
//! InterceptAndTrendBreak: y_t = a1 + b1 t + a2 D_t + b2 (t - tau) D_t + e_t
//! ```
//!
//! The break date minimizes the OLS sum of squared errors over the searched
//! grid; HAC inference is applied afterwards at the chosen date.
//!
//! The likelihood-ratio p-value uses the fixed-date χ²(1) reference. When
//! `tau` itself came out of the search that reference is only approximate
//! (the searched statistic follows a sup-type distribution).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{chi2_sf, PValues};
use crate::regression::{ols_fit_values, DesignMatrix, HacOptions, RegressionError, TrendFit};
use crate::series::AnnualSeries;

#[derive(Debug, Error, PartialEq)]
pub enum BreakError {
    #[error("break at index {tau} leaves too few observations on one side (n = {n})")]
    DegenerateBreakPlacement { tau: usize, n: usize },
    #[error("series of length {n} is too short for trim {trim} (need n > 2*trim + 4)")]
    SeriesTooShortForTrim { n: usize, trim: usize },
    #[error(transparent)]
    Regression(#[from] RegressionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BreakModelKind {
    /// Break in intercept and trend slope (4 parameters).
    InterceptAndTrendBreak,
    /// Break in intercept only (3 parameters); nested in the above with `b2 = 0`.
    InterceptBreakOnly,
}

impl BreakModelKind {
    pub fn n_params(self) -> usize {
        match self {
            Self::InterceptAndTrendBreak => 4,
            Self::InterceptBreakOnly => 3,
        }
    }

    pub fn design(self, n: usize, tau: usize) -> DesignMatrix {
        let t = |i: usize| i as f64;
        let step = |i: usize| if i >= tau { 1.0 } else { 0.0 };
        let mut cols = vec![
            ("a1".to_string(), vec![1.0; n]),
            (
                match self {
                    Self::InterceptAndTrendBreak => "b1",
                    Self::InterceptBreakOnly => "b",
                }
                .to_string(),
                (0..n).map(t).collect(),
            ),
            ("a2".to_string(), (0..n).map(step).collect()),
        ];
        if self == Self::InterceptAndTrendBreak {
            cols.push((
                "b2".to_string(),
                (0..n).map(|i| (t(i) - tau as f64) * step(i)).collect(),
            ));
        }
        DesignMatrix::new(cols).expect("well-formed")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakFit {
    pub kind: BreakModelKind,
    /// Index of the first observation after the break.
    pub tau: usize,
    pub break_year: i32,
    pub fit: TrendFit,
    /// `(tau, SSE)` over the searched grid; empty for a fixed-date fit.
    pub sse_profile: Vec<(usize, f64)>,
}

/// HAC p-values for the break coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakTests {
    /// Two-sided p-value for `a2 = 0`.
    pub p_intercept: f64,
    /// Two-sided p-value for `b2 = 0`, when the model has a slope break.
    pub p_trend: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub tau: usize,
    #[serde(rename = "logL_1")]
    pub log_lik_1: f64,
    #[serde(rename = "logL_2")]
    pub log_lik_2: f64,
    pub bic_1: f64,
    pub bic_2: f64,
    pub lr_stat: f64,
    pub lr_pvalue: f64,
    pub preferred: BreakModelKind,
}

fn fit_at(
    y: &[f64],
    kind: BreakModelKind,
    tau: usize,
    hac: HacOptions,
) -> Result<TrendFit, BreakError> {
    let n = y.len();
    if tau < 1 || tau + 2 > n {
        return Err(BreakError::DegenerateBreakPlacement { tau, n });
    }
    ols_fit_values(y, &kind.design(n, tau), hac).map_err(|e| match e {
        RegressionError::RankDeficientDesign => BreakError::DegenerateBreakPlacement { tau, n },
        e => e.into(),
    })
}

/// Fits `kind` with the break at index `tau` (`1 <= tau <= n - 2`).
pub fn fit_break_model(
    y: &AnnualSeries,
    kind: BreakModelKind,
    tau: usize,
    hac: HacOptions,
) -> Result<BreakFit, BreakError> {
    let fit = fit_at(y.values(), kind, tau, hac)?;
    Ok(BreakFit {
        kind,
        tau,
        break_year: y.year(tau),
        fit,
        sse_profile: Vec::new(),
    })
}

/// Candidate break indices for a series of length `n`: `trim + 1 ..= n - trim`,
/// which keeps at least `trim + 1` observations before the break and `trim`
/// after it. For `n = 61`, `trim = 10` this is `11..=51`.
pub fn break_grid(n: usize, trim: usize) -> Result<std::ops::RangeInclusive<usize>, BreakError> {
    if n <= 2 * trim + 4 {
        return Err(BreakError::SeriesTooShortForTrim { n, trim });
    }
    Ok(trim + 1..=n - trim)
}

/// Exhaustive SSE search; ties go to the smallest `tau`.
pub fn search_break(
    y: &AnnualSeries,
    kind: BreakModelKind,
    trim: usize,
    hac: HacOptions,
) -> Result<BreakFit, BreakError> {
    let values = y.values();
    let grid: Vec<usize> = break_grid(values.len(), trim)?.collect();
    let profile = grid
        .par_iter()
        .map(|&tau| fit_at(values, kind, tau, hac).map(|f| (tau, f.sse)))
        .collect::<Result<Vec<_>, _>>()?;
    let (tau, _) = profile
        .iter()
        .copied()
        .reduce(|best, cur| if cur.1 < best.1 { cur } else { best })
        .expect("non-empty grid");
    let mut bf = fit_break_model(y, kind, tau, hac)?;
    bf.sse_profile = profile;
    Ok(bf)
}

pub fn test_break_coefficients(bf: &BreakFit) -> BreakTests {
    let fit = &bf.fit;
    let p = |name: &str| fit.index_of(name).map(|i| fit.p_two[i]);
    BreakTests {
        p_intercept: p("a2").expect("break models carry a2"),
        p_trend: p("b2"),
    }
}

impl BreakFit {
    pub fn tests(&self) -> BreakTests {
        test_break_coefficients(self)
    }

    pub fn coefficient_p_values(&self, name: &str) -> Option<PValues> {
        self.fit.index_of(name).map(|i| self.fit.p_values(i))
    }
}

/// Intercept-break (Model 1) against intercept-and-trend-break (Model 2) at `tau`.
pub fn compare_models(y: &AnnualSeries, tau: usize) -> Result<ModelComparison, BreakError> {
    let hac = HacOptions::default();
    let m1 = fit_at(y.values(), BreakModelKind::InterceptBreakOnly, tau, hac)?;
    let m2 = fit_at(y.values(), BreakModelKind::InterceptAndTrendBreak, tau, hac)?;
    Ok(comparison_from_fits(tau, &m1, &m2))
}

pub fn comparison_from_fits(tau: usize, m1: &TrendFit, m2: &TrendFit) -> ModelComparison {
    // Nesting guarantees logL_2 >= logL_1 up to rounding. An SSE gain at
    // rounding level (e.g. both fits exact) is no evidence for Model 2.
    let total: f64 = m1
        .fitted
        .iter()
        .zip(&m1.residuals)
        .map(|(f, e)| (f + e) * (f + e))
        .sum();
    let lr_stat = if m1.sse - m2.sse <= 1e-13 * total {
        0.0
    } else {
        (-2.0 * (m1.log_lik - m2.log_lik)).max(0.0)
    };
    ModelComparison {
        tau,
        log_lik_1: m1.log_lik,
        log_lik_2: m2.log_lik,
        bic_1: m1.bic,
        bic_2: m2.bic,
        lr_stat,
        lr_pvalue: chi2_sf(lr_stat, 1.0),
        preferred: if m1.bic < m2.bic {
            BreakModelKind::InterceptBreakOnly
        } else {
            BreakModelKind::InterceptAndTrendBreak
        },
    }
}
