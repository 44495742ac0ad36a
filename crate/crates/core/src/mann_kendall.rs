//! Mann-Kendall trend test with tie-corrected variance.
//!
//! `S = Σ_{i<j} sgn(x_j - x_i)` is standardized with the tie-corrected
//! variance `[n(n-1)(2n+5) - Σ_g t_g(t_g-1)(2t_g+5)] / 18` and referred to
//! the standard normal. The ±1 continuity correction is on by default.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::PValues;
use crate::series::AnnualSeries;

#[derive(Debug, Error, PartialEq)]
pub enum MkError {
    #[error("Mann-Kendall test needs at least 4 observations, got {0}")]
    TooFewObservations(usize),
    #[error("all values are tied; the Mann-Kendall variance is zero")]
    AllValuesTied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MkOptions {
    pub continuity_correction: bool,
}

impl Default for MkOptions {
    fn default() -> Self {
        Self {
            continuity_correction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MkResult {
    #[serde(rename = "S")]
    pub s: i64,
    #[serde(rename = "var_S")]
    pub var_s: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub p_two: f64,
    pub p_pos: f64,
    pub p_neg: f64,
}

impl MkResult {
    pub fn p_values(&self) -> PValues {
        PValues {
            two_sided: self.p_two,
            positive: self.p_pos,
            negative: self.p_neg,
        }
    }
}

/// Mann-Kendall score over all ordered pairs.
pub fn mk_score(x: &[f64]) -> i64 {
    let mut s = 0i64;
    for (i, xi) in x.iter().enumerate() {
        for xj in &x[i + 1..] {
            s += match xj.partial_cmp(xi) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s
}

/// Tie-corrected variance of S.
pub fn mk_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tie_term: f64 = sorted
        .chunk_by(|a, b| a == b)
        .map(|g| g.len() as f64)
        .filter(|&t| t > 1.0)
        .map(|t| t * (t - 1.0) * (2.0 * t + 5.0))
        .sum();
    (n * (n - 1.0) * (2.0 * n + 5.0) - tie_term) / 18.0
}

pub fn mk_test(series: &AnnualSeries, options: MkOptions) -> Result<MkResult, MkError> {
    mk_test_values(series.values(), options)
}

pub fn mk_test_values(x: &[f64], options: MkOptions) -> Result<MkResult, MkError> {
    if x.len() < 4 {
        return Err(MkError::TooFewObservations(x.len()));
    }
    let s = mk_score(x);
    let var_s = mk_variance(x);
    if var_s <= 0.0 {
        return Err(MkError::AllValuesTied);
    }
    let correction = if options.continuity_correction {
        1.0
    } else {
        0.0
    };
    let sd = var_s.sqrt();
    let z = match s.signum() {
        1 => (s as f64 - correction) / sd,
        -1 => (s as f64 + correction) / sd,
        _ => 0.0,
    };
    let p = PValues::normal(z);
    Ok(MkResult {
        s,
        var_s,
        z,
        p_two: p.two_sided,
        p_pos: p.positive,
        p_neg: p.negative,
    })
}
