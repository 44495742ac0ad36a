//! Local level (random walk plus noise) model.
//!
//! ```text
//! y_t = mu_t + eps_t,        eps_t ~ N(0, sigma2_eps)
//! mu_{t+1} = mu_t + eta_t,   eta_t ~ N(0, sigma2_eta)
//! ```
//!
//! The initial level is diffuse. Under exact diffuse initialization the
//! first observation pins the level down to `N(y_1, sigma2_eps)`, so the
//! filter starts from that posterior and the likelihood is that of
//! `y_2..y_n` given `y_1`.
//!
//! Variances are estimated by maximum likelihood with `sigma2_eps`
//! concentrated out, leaving a one-dimensional search over the
//! signal-to-noise ratio `q = sigma2_eta / sigma2_eps`: a log-spaced grid on
//! `[1e-8, 1e8]` followed by golden-section refinement. The likelihood is
//! flat near its peak, so an interior optimum is then polished by bisecting
//! the analytic score, which pins `q` down to rounding level. `q = 0` is
//! checked separately as the lower boundary.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::AnnualSeries;

pub const Q_MIN: f64 = 1e-8;
pub const Q_MAX: f64 = 1e8;
const GRID_POINTS_PER_DECADE: usize = 10;
/// Golden-section stopping width on `ln q`.
const LN_Q_TOLERANCE: f64 = 1e-10;
const MAX_GOLDEN_ITERATIONS: usize = 200;
const MAX_POLISH_ITERATIONS: usize = 100;
/// Two-sided 95% normal quantile used for pointwise bands.
pub const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Error, PartialEq)]
pub enum LocalLevelError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("likelihood optimization failed: {0}")]
    OptimizerFailed(String),
    #[error("invalid variances: sigma2_eps = {0}, sigma2_eta = {1}")]
    InvalidParams(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLevelParams {
    pub sigma2_eps: f64,
    pub sigma2_eta: f64,
}

impl LocalLevelParams {
    pub fn new(sigma2_eps: f64, sigma2_eta: f64) -> Result<Self, LocalLevelError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(sigma2_eps) || !ok(sigma2_eta) || sigma2_eps + sigma2_eta <= 0.0 {
            return Err(LocalLevelError::InvalidParams(sigma2_eps, sigma2_eta));
        }
        Ok(Self {
            sigma2_eps,
            sigma2_eta,
        })
    }
}

/// Kalman filter output. Index `t` follows the series; innovation
/// quantities at `t = 0` are undefined (the diffuse step) and stored as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub predicted_mean: Vec<f64>,
    pub predicted_var: Vec<f64>,
    pub filtered_mean: Vec<f64>,
    pub filtered_var: Vec<f64>,
    pub innovation: Vec<f64>,
    pub innovation_var: Vec<f64>,
    pub loglik: f64,
}

/// Runs the exact-diffuse filter for fixed variances.
pub fn kalman_filter(y: &[f64], p: LocalLevelParams) -> FilterOutput {
    let n = y.len();
    let mut out = FilterOutput {
        predicted_mean: vec![f64::NAN; n],
        predicted_var: vec![f64::INFINITY; n],
        filtered_mean: vec![0.0; n],
        filtered_var: vec![0.0; n],
        innovation: vec![f64::NAN; n],
        innovation_var: vec![f64::NAN; n],
        loglik: 0.0,
    };
    if n == 0 {
        return out;
    }
    out.filtered_mean[0] = y[0];
    out.filtered_var[0] = p.sigma2_eps;
    let mut loglik = 0.0;
    for (t, obs) in y.iter().enumerate().skip(1) {
        let a = out.filtered_mean[t - 1];
        let pv = out.filtered_var[t - 1] + p.sigma2_eta;
        let f = pv + p.sigma2_eps;
        let v = obs - a;
        let k = pv / f;
        out.predicted_mean[t] = a;
        out.predicted_var[t] = pv;
        out.innovation[t] = v;
        out.innovation_var[t] = f;
        out.filtered_mean[t] = a + k * v;
        out.filtered_var[t] = pv * p.sigma2_eps / f;
        loglik -= 0.5 * ((2.0 * PI).ln() + f.ln() + v * v / f);
    }
    out.loglik = loglik;
    out
}

/// Log-likelihood of `y_2..y_n` given `y_1` under diffuse initialization.
pub fn log_likelihood(y: &[f64], p: LocalLevelParams) -> f64 {
    kalman_filter(y, p).loglik
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedLevel {
    pub level: Vec<f64>,
    pub variance: Vec<f64>,
    pub filtered_var: Vec<f64>,
}

/// Fixed-interval (Rauch-Tung-Striebel) smoother.
pub fn smooth(y: &[f64], p: LocalLevelParams) -> SmoothedLevel {
    let f = kalman_filter(y, p);
    let n = y.len();
    let mut level = f.filtered_mean.clone();
    let mut variance = f.filtered_var.clone();
    for t in (0..n.saturating_sub(1)).rev() {
        let next_pred = f.predicted_var[t + 1];
        let gain = if next_pred > 0.0 {
            f.filtered_var[t] / next_pred
        } else {
            0.0
        };
        level[t] = f.filtered_mean[t] + gain * (level[t + 1] - f.predicted_mean[t + 1]);
        variance[t] = f.filtered_var[t] + gain * gain * (variance[t + 1] - next_pred);
        variance[t] = variance[t].max(0.0);
    }
    SmoothedLevel {
        level,
        variance,
        filtered_var: f.filtered_var,
    }
}

/// Filter run with `sigma2_eps = 1`, `sigma2_eta = q`: returns
/// `(Σ v²/F, Σ ln F, m)` over the `m = n - 1` innovations.
fn scaled_sums(y: &[f64], q: f64) -> (f64, f64, f64) {
    let f = kalman_filter(
        y,
        LocalLevelParams {
            sigma2_eps: 1.0,
            sigma2_eta: q,
        },
    );
    let mut ss = 0.0;
    let mut logdet = 0.0;
    for t in 1..y.len() {
        ss += f.innovation[t] * f.innovation[t] / f.innovation_var[t];
        logdet += f.innovation_var[t].ln();
    }
    (ss, logdet, (y.len() - 1) as f64)
}

/// Log-likelihood maximized over `sigma2_eps` for fixed `q`.
pub fn concentrated_loglik(y: &[f64], q: f64) -> f64 {
    let (ss, logdet, m) = scaled_sums(y, q);
    let s2 = ss / m;
    -0.5 * m * ((2.0 * PI).ln() + 1.0 + s2.ln()) - 0.5 * logdet
}

/// Derivative of [`concentrated_loglik`] with respect to `ln q`, from the
/// filter recursions differentiated in `q`.
pub fn concentrated_score(y: &[f64], q: f64) -> f64 {
    let (mut a, mut da) = (y[0], 0.0);
    let (mut pf, mut dpf) = (1.0, 0.0);
    let (mut ss, mut dss, mut dlogdet) = (0.0, 0.0, 0.0);
    for &obs in &y[1..] {
        let pp = pf + q;
        let dpp = dpf + 1.0;
        let f = pp + 1.0;
        let v = obs - a;
        let dv = -da;
        ss += v * v / f;
        dss += 2.0 * v * dv / f - v * v * dpp / (f * f);
        dlogdet += dpp / f;
        let k = pp / f;
        let dk = dpp / (f * f);
        a += k * v;
        da += dk * v + k * dv;
        pf = k;
        dpf = dk;
    }
    let m = (y.len() - 1) as f64;
    q * (-0.5 * m * dss / ss - 0.5 * dlogdet)
}

fn sigma2_eps_hat(y: &[f64], q: f64) -> f64 {
    let (ss, _, m) = scaled_sums(y, q);
    ss / m
}

/// Result of a one-dimensional maximization over `ln q`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct QSearch {
    pub q: f64,
    pub value: f64,
    pub converged: bool,
    pub at_boundary: bool,
    pub iterations: usize,
    /// Best value after each accepted refinement step.
    pub trace: Vec<f64>,
}

/// Grid on `[Q_MIN, Q_MAX]`, golden-section refinement, boundary checks.
/// `score`, the derivative in `ln q` taking `ln q`, enables the bisection
/// polish.
pub(crate) fn maximize_over_q(
    objective: impl Fn(f64) -> f64,
    score: Option<&dyn Fn(f64) -> f64>,
) -> QSearch {
    let decades = (Q_MAX.log10() - Q_MIN.log10()).round() as usize;
    let points = decades * GRID_POINTS_PER_DECADE + 1;
    let (lo_ln, hi_ln) = (Q_MIN.ln(), Q_MAX.ln());
    let step = (hi_ln - lo_ln) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo_ln + step * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&g| objective(g.exp())).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |acc: Option<(usize, f64)>, (i, &v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((i, v)),
        });
    let Some((i, grid_best)) = best else {
        return QSearch {
            q: f64::NAN,
            value: f64::NAN,
            converged: false,
            at_boundary: false,
            iterations: 0,
            trace: Vec::new(),
        };
    };

    let mut trace = vec![grid_best];
    let mut a = grid[i.saturating_sub(1)];
    let mut b = grid[(i + 1).min(points - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let f = |x: f64| objective(x.exp());
    let (mut fc, mut fd) = (f(c), f(d));
    let (mut best_x, mut best_v) = (grid[i], grid_best);
    let mut iterations = 0;
    while (b - a) > LN_Q_TOLERANCE && iterations < MAX_GOLDEN_ITERATIONS {
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v > best_v {
                best_v = v;
                best_x = x;
                trace.push(v);
            }
        }
    }
    let converged = (b - a) <= LN_Q_TOLERANCE;
    if let Some(g) = score.filter(|_| i > 0 && i < points - 1) {
        let (mut lo, mut hi) = (grid[i - 1], grid[i + 1]);
        if g(lo) > 0.0 && g(hi) < 0.0 {
            for _ in 0..MAX_POLISH_ITERATIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = 0.5 * (lo + hi);
            let v = f(x);
            // the root of the score beats a golden-section point that is
            // ahead only by rounding noise
            if v >= best_v - 1e-10 * (1.0 + best_v.abs()) {
                if v > best_v {
                    trace.push(v);
                }
                best_x = x;
                best_v = v;
            }
        }
    }
    let mut q = best_x.exp();
    let mut at_boundary = i == points - 1 && (best_x - hi_ln).abs() < 1e-6;
    if i == 0 {
        let v0 = objective(0.0);
        if v0.is_finite() && v0 >= best_v {
            best_v = v0;
            q = 0.0;
            trace.push(v0);
        }
        at_boundary = q == 0.0 || (best_x - lo_ln).abs() < 1e-6;
    }
    QSearch {
        q,
        value: best_v,
        converged,
        at_boundary,
        iterations,
        trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLevelFit {
    pub sigma2_eps: f64,
    pub sigma2_eta: f64,
    /// Signal-to-noise ratio `sigma2_eta / sigma2_eps`.
    pub q: f64,
    pub smoothed_level: Vec<f64>,
    pub smoothed_var: Vec<f64>,
    pub filtered_var: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub at_boundary: bool,
    pub iterations: usize,
}

impl LocalLevelFit {
    pub fn params(&self) -> LocalLevelParams {
        LocalLevelParams {
            sigma2_eps: self.sigma2_eps,
            sigma2_eta: self.sigma2_eta,
        }
    }

    /// Pointwise 95% band `(lower, upper)` around the smoothed level.
    pub fn band_95(&self) -> (Vec<f64>, Vec<f64>) {
        self.smoothed_level
            .iter()
            .zip(&self.smoothed_var)
            .map(|(m, v)| {
                let h = Z_95 * v.sqrt();
                (m - h, m + h)
            })
            .unzip()
    }
}

fn check_input(y: &[f64], needed: usize) -> Result<(), LocalLevelError> {
    if y.len() < needed {
        return Err(LocalLevelError::TooFewObservations {
            needed,
            got: y.len(),
        });
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(LocalLevelError::DegenerateSeries);
    }
    Ok(())
}

pub fn fit_local_level(y: &AnnualSeries) -> Result<LocalLevelFit, LocalLevelError> {
    fit_local_level_values(y.values())
}

pub fn fit_local_level_values(y: &[f64]) -> Result<LocalLevelFit, LocalLevelError> {
    check_input(y, 5)?;
    let score = |lnq: f64| concentrated_score(y, lnq.exp());
    let search = maximize_over_q(|q| concentrated_loglik(y, q), Some(&score));
    if !search.q.is_finite() {
        return Err(LocalLevelError::OptimizerFailed(
            "likelihood is not finite anywhere on the search grid".into(),
        ));
    }
    let sigma2_eps = sigma2_eps_hat(y, search.q);
    let params = LocalLevelParams::new(sigma2_eps, search.q * sigma2_eps)?;
    let sm = smooth(y, params);
    Ok(LocalLevelFit {
        sigma2_eps: params.sigma2_eps,
        sigma2_eta: params.sigma2_eta,
        q: search.q,
        smoothed_level: sm.level,
        smoothed_var: sm.variance,
        filtered_var: sm.filtered_var,
        loglik: log_likelihood(y, params),
        converged: search.converged,
        at_boundary: search.at_boundary,
        iterations: search.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ScanOptions {
    /// Re-estimate the variances at every break date instead of holding
    /// them at the no-break estimate.
    pub reestimate_variances: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakScanResult {
    /// Index of the first observation carrying the level shift.
    pub taus: Vec<usize>,
    pub years: Vec<i32>,
    pub t_stats: Vec<f64>,
    pub dummy_estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl BreakScanResult {
    /// Break index with the largest `|t|`; ties go to the earliest.
    pub fn argmax_abs(&self) -> Option<usize> {
        self.t_stats
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (i, t)| match acc {
                Some((_, best)) if best >= t.abs() => acc,
                _ => Some((i, t.abs())),
            })
            .map(|(i, _)| self.taus[i])
    }
}

/// GLS sums for the intervention regressor, run through the filter gains.
/// Returns `(Σ v_y²/F, Σ v_x v_y/F, Σ v_x²/F, Σ ln F)`.
fn intervention_sums(y: &[f64], tau: usize, p: LocalLevelParams) -> (f64, f64, f64, f64) {
    let x = |t: usize| if t >= tau { 1.0 } else { 0.0 };
    let (mut ay, mut ax) = (y[0], x(0));
    let mut pf = p.sigma2_eps;
    let (mut syy, mut sxy, mut sxx, mut logdet) = (0.0, 0.0, 0.0, 0.0);
    for (t, obs) in y.iter().enumerate().skip(1) {
        let pv = pf + p.sigma2_eta;
        let f = pv + p.sigma2_eps;
        let k = pv / f;
        let vy = obs - ay;
        let vx = x(t) - ax;
        syy += vy * vy / f;
        sxy += vx * vy / f;
        sxx += vx * vx / f;
        logdet += f.ln();
        ay += k * vy;
        ax += k * vx;
        pf = pv * p.sigma2_eps / f;
    }
    (syy, sxy, sxx, logdet)
}

/// Restricted log-likelihood for fixed `q` with `sigma2_eps` and the
/// diffuse shift coefficient profiled out.
fn concentrated_loglik_with_shift(y: &[f64], tau: usize, q: f64) -> f64 {
    let (syy, sxy, sxx, logdet) = intervention_sums(
        y,
        tau,
        LocalLevelParams {
            sigma2_eps: 1.0,
            sigma2_eta: q,
        },
    );
    let m = (y.len() - 2) as f64;
    let s2 = (syy - sxy * sxy / sxx) / m;
    -0.5 * m * ((2.0 * PI).ln() + 1.0 + s2.ln()) - 0.5 * logdet - 0.5 * sxx.ln()
}

/// Estimates a one-time level shift `delta * I(t >= tau)` at each break date
/// and returns its t statistic.
pub fn break_dummy_scan(
    y: &AnnualSeries,
    options: ScanOptions,
) -> Result<BreakScanResult, LocalLevelError> {
    let values = y.values();
    let rows = scan_values(values, options)?;
    Ok(BreakScanResult {
        taus: rows.iter().map(|r| r.0).collect(),
        years: rows.iter().map(|r| y.year(r.0)).collect(),
        t_stats: rows.iter().map(|r| r.1).collect(),
        dummy_estimates: rows.iter().map(|r| r.2).collect(),
        std_errors: rows.iter().map(|r| r.3).collect(),
    })
}

fn scan_values(
    y: &[f64],
    options: ScanOptions,
) -> Result<Vec<(usize, f64, f64, f64)>, LocalLevelError> {
    check_input(y, 10)?;
    let n = y.len();
    let held = if options.reestimate_variances {
        None
    } else {
        Some(fit_local_level_values(y)?.params())
    };
    let rows = (2..=n - 2)
        .into_par_iter()
        .map(|tau| {
            let (params, scale) = match held {
                Some(p) => (p, 1.0),
                None => {
                    let s = maximize_over_q(|q| concentrated_loglik_with_shift(y, tau, q), None);
                    let p = LocalLevelParams {
                        sigma2_eps: 1.0,
                        sigma2_eta: s.q,
                    };
                    let (syy, sxy, sxx, _) = intervention_sums(y, tau, p);
                    let s2 = (syy - sxy * sxy / sxx) / (n - 2) as f64;
                    (p, s2)
                }
            };
            let (_, sxy, sxx, _) = intervention_sums(y, tau, params);
            let delta = sxy / sxx;
            let se = (scale / sxx).sqrt();
            (tau, delta / se, delta, se)
        })
        .collect();
    Ok(rows)
}
