//! Monte Carlo size and power of the trend tests, plus the
//! perturb-the-observed-data design for comparison.
//!
//! Every replication draws from its own ChaCha8 stream: the key comes from
//! the user seed and the stream id is the replication index, so results do
//! not depend on how replications are scheduled across threads. Gaussian
//! variates are produced by inverting the normal CDF on 53-bit uniforms.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{normal_quantile, PValues};
use crate::mann_kendall::{mk_test_values, MkOptions};
use crate::regression::{trend_test_values, HacOptions};
use crate::series::AnnualSeries;

pub const PERCENTILES: [f64; 9] = [1.0, 2.5, 5.0, 10.0, 50.0, 90.0, 95.0, 97.5, 99.0];

pub const VANMARLE_NOTE: &str =
    "detection frequency: not interpretable as size, power, or trend probability";

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("invalid Monte Carlo specification: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Noise {
    Iid {
        sd: f64,
    },
    /// `u_t = phi u_{t-1} + sd e_t`, started from the stationary distribution.
    Ar1 {
        phi: f64,
        sd: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DgpKind {
    NullConstant { mean: f64 },
    LinearTrend { a: f64, b: f64 },
    PerturbObserved { base: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub noise: Noise,
    pub n: usize,
    pub seed: u64,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: &str| Err(McError::InvalidSpec(m.to_string()));
        let sd = match self.noise {
            Noise::Iid { sd } => sd,
            Noise::Ar1 { phi, sd } => {
                if phi.is_nan() || phi.abs() >= 1.0 {
                    return bad("AR(1) coefficient must satisfy |phi| < 1");
                }
                sd
            }
        };
        if !(sd >= 0.0 && sd.is_finite()) {
            return bad("noise sd must be finite and non-negative");
        }
        if self.n < 4 {
            return bad("series length must be at least 4");
        }
        if let DgpKind::PerturbObserved { base } = &self.kind {
            if base.len() != self.n {
                return bad("base series length differs from n");
            }
        }
        Ok(())
    }

    /// Draws replication `rep`.
    pub fn simulate(&self, rep: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep);
        let mut gauss = || normal_quantile(unit_open(rng.next_u64()));
        let noise: Vec<f64> = match self.noise {
            Noise::Iid { sd } => (0..self.n).map(|_| sd * gauss()).collect(),
            Noise::Ar1 { phi, sd } => {
                let mut u = sd / (1.0 - phi * phi).sqrt() * gauss();
                let mut out = Vec::with_capacity(self.n);
                out.push(u);
                for _ in 1..self.n {
                    u = phi * u + sd * gauss();
                    out.push(u);
                }
                out
            }
        };
        match &self.kind {
            DgpKind::NullConstant { mean } => noise.iter().map(|e| mean + e).collect(),
            DgpKind::LinearTrend { a, b } => noise
                .iter()
                .enumerate()
                .map(|(t, e)| a + b * t as f64 + e)
                .collect(),
            DgpKind::PerturbObserved { base } => {
                base.iter().zip(&noise).map(|(x, e)| x + e).collect()
            }
        }
    }
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestKind {
    MannKendall(MkOptions),
    HacTrend(HacOptions),
}

impl TestKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::MannKendall(_) => "mann-kendall",
            Self::HacTrend(_) => "hac-trend",
        }
    }

    /// Test statistic (Z or t) and its p-values; `None` when undefined.
    pub fn apply(&self, y: &[f64]) -> Option<(f64, PValues)> {
        match self {
            Self::MannKendall(opts) => mk_test_values(y, *opts).ok().map(|r| (r.z, r.p_values())),
            Self::HacTrend(hac) => trend_test_values(y, *hac)
                .ok()
                .map(|r| (r.fit.t_stats[1], r.slope)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentile {
    pub percentile: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub design: String,
    pub test: String,
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
    pub reject_two: f64,
    pub reject_pos: f64,
    pub reject_neg: f64,
    /// Replications where the statistic was undefined (e.g. all values tied);
    /// they count as non-rejections.
    pub failed: usize,
    pub statistic_percentiles: Vec<Percentile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Per-replication outcomes, in replication order.
pub fn simulate_outcomes(
    dgp: &DgpSpec,
    test: TestKind,
    reps: usize,
) -> Vec<Option<(f64, PValues)>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| test.apply(&dgp.simulate(rep)))
        .collect()
}

fn validate_run(reps: usize, level: f64) -> Result<(), McError> {
    if reps < 100 {
        return Err(McError::InvalidSpec("reps must be at least 100".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(McError::InvalidSpec("level must lie in (0, 1)".into()));
    }
    Ok(())
}

/// Linear-interpolation percentile of sorted data.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * pct / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(
    outcomes: &[Option<(f64, PValues)>],
    level: f64,
    design: &str,
    test: &str,
    seed: u64,
) -> McResult {
    let reps = outcomes.len();
    let (mut two, mut pos, mut neg, mut failed) = (0usize, 0usize, 0usize, 0usize);
    let mut stats = Vec::with_capacity(reps);
    for o in outcomes {
        match o {
            Some((stat, p)) => {
                two += (p.two_sided < level) as usize;
                pos += (p.positive < level) as usize;
                neg += (p.negative < level) as usize;
                if stat.is_finite() {
                    stats.push(*stat);
                }
            }
            None => failed += 1,
        }
    }
    stats.sort_by(f64::total_cmp);
    let freq = |c: usize| c as f64 / reps as f64;
    McResult {
        design: design.to_string(),
        test: test.to_string(),
        reps,
        seed,
        level,
        reject_two: freq(two),
        reject_pos: freq(pos),
        reject_neg: freq(neg),
        failed,
        statistic_percentiles: PERCENTILES
            .iter()
            .map(|&p| Percentile {
                percentile: p,
                value: percentile(&stats, p),
            })
            .collect(),
        note: None,
    }
}

fn design_label(kind: &DgpKind) -> &'static str {
    match kind {
        DgpKind::NullConstant { .. } => "size",
        DgpKind::LinearTrend { .. } => "power",
        DgpKind::PerturbObserved { .. } => "vanmarle",
    }
}

pub fn run_mc(dgp: &DgpSpec, test: TestKind, reps: usize, level: f64) -> Result<McResult, McError> {
    dgp.validate()?;
    validate_run(reps, level)?;
    let outcomes = simulate_outcomes(dgp, test, reps);
    let mut r = summarize(
        &outcomes,
        level,
        design_label(&dgp.kind),
        test.label(),
        dgp.seed,
    );
    if matches!(dgp.kind, DgpKind::PerturbObserved { .. }) {
        r.note = Some(VANMARLE_NOTE.to_string());
    }
    Ok(r)
}

/// Observed series plus iid Gaussian perturbations, scored by Mann-Kendall.
/// `reject_pos` / `reject_neg` are the frequencies of detected positive and
/// negative trends at `level`.
pub fn run_vanmarle_design(
    base: &AnnualSeries,
    perturb_sd: f64,
    reps: usize,
    seed: u64,
    level: f64,
) -> Result<McResult, McError> {
    if !(perturb_sd >= 0.0 && perturb_sd.is_finite()) {
        return Err(McError::InvalidSpec(
            "perturbation sd must be finite and non-negative".into(),
        ));
    }
    let dgp = DgpSpec {
        kind: DgpKind::PerturbObserved {
            base: base.values().to_vec(),
        },
        noise: Noise::Iid { sd: perturb_sd },
        n: base.len(),
        seed,
    };
    run_mc(
        &dgp,
        TestKind::MannKendall(MkOptions::default()),
        reps,
        level,
    )
}
