//! Running average of year-to-year changes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::local_level::Z_95;
use crate::series::AnnualSeries;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least 3 observations, got {0}")]
    TooFewObservations(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    None,
    /// `mean ± 1.96 s / √m` treating the differences as iid.
    #[default]
    Iid,
}

/// Running mean of `Δy` over the first `tau - 1` differences, `tau = 2..=T`
/// (1-based, so `tau` names the last observation used).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningChangeResult {
    pub taus: Vec<usize>,
    pub years: Vec<i32>,
    pub running_mean: Vec<f64>,
    /// `None` where the band is undefined (a single difference) or not requested.
    pub ci_lower: Vec<Option<f64>>,
    pub ci_upper: Vec<Option<f64>>,
}

pub fn running_change(
    y: &AnnualSeries,
    ci: CiMethod,
) -> Result<RunningChangeResult, DiagnosticsError> {
    let v = y.values();
    let n = v.len();
    if n < 3 {
        return Err(DiagnosticsError::TooFewObservations(n));
    }
    let mut out = RunningChangeResult {
        taus: Vec::with_capacity(n - 1),
        years: Vec::with_capacity(n - 1),
        running_mean: Vec::with_capacity(n - 1),
        ci_lower: Vec::with_capacity(n - 1),
        ci_upper: Vec::with_capacity(n - 1),
    };
    // Welford over the differences for the band
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for tau in 2..=n {
        let m = (tau - 1) as f64;
        let d = v[tau - 1] - v[tau - 2];
        let delta = d - mean;
        mean += delta / m;
        m2 += delta * (d - mean);
        // the sum of differences telescopes
        let running = (v[tau - 1] - v[0]) / m;
        let band = match ci {
            CiMethod::Iid if tau >= 3 => {
                let sd = (m2 / (m - 1.0)).max(0.0).sqrt();
                Some(Z_95 * sd / m.sqrt())
            }
            _ => None,
        };
        out.taus.push(tau);
        out.years.push(y.year(tau - 1));
        out.running_mean.push(running);
        out.ci_lower.push(band.map(|h| running - h));
        out.ci_upper.push(band.map(|h| running + h));
    }
    Ok(out)
}
