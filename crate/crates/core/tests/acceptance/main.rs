//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.
//!
//! Criteria 1-3 need the six airborne-fraction series; point
//! `AFTREND_DATASET` at a CSV with a `year` column and columns such as
//! `gcp_raw`, `gcp_filter`, `hn_raw`, `hn_filter`, `new_raw`, `new_filter`.
//! Without it they are reported as SKIP.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 5 7`.


use std::process::Command;
use std::time::{Duration, Instant};

use aftrend::breaks::{compare_models, fit_break_model, BreakFit, BreakModelKind};
use aftrend::dist::{chi2_critical, chi2_sf, normal_quantile};
use aftrend::local_level::{
    break_dummy_scan, fit_local_level_values, log_likelihood, smooth, LocalLevelParams, ScanOptions,
};
use aftrend::mann_kendall::{mk_score, mk_variance, MkOptions};
use aftrend::monte_carlo::{simulate_outcomes, summarize, DgpKind, DgpSpec, Noise, TestKind};
use aftrend::regression::{bic, gaussian_log_lik, trend_test_values, HacOptions, TrendFit};
use aftrend::report::{analyze_bundle, summary_from, AnalysisOptions, SeriesAnalysis};
use aftrend::series::{load_csv, AnnualSeries, ColumnSchema, DatasetBundle};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DATASET_ENV: &str = "AFTREND_DATASET";

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Status {
    if ok {
        Status::Pass(detail)
    } else {
        Status::Fail(detail)
    }
}

struct Rng(ChaCha8Rng);

impl Rng {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    fn gauss(&mut self) -> f64 {
        normal_quantile(self.uniform())
    }

    fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }
}

fn series(v: Vec<f64>) -> AnnualSeries {
    AnnualSeries::from_values(v).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn time_t(n: usize) -> Vec<f64> {
    (0..n).map(|t| t as f64).collect()
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

// ---------------------------------------------------------------------------
// dataset-conditional criteria

struct Dataset {
    bundle: DatasetBundle,
}

fn load_dataset() -> Result<Option<Dataset>, String> {
    let Some(path) = std::env::var_os(DATASET_ENV) else {
        return Ok(None);
    };
    let bundle = load_csv(&path, &ColumnSchema::All).map_err(|e| e.to_string())?;
    for key in reference::keys() {
        if bundle.get(&key).is_none() {
            return Err(format!("{DATASET_ENV} file has no column for {key}"));
        }
    }
    Ok(Some(Dataset { bundle }))
}

#[derive(Clone, Copy)]
struct Setting {
    lags: usize,
    small_sample: bool,
    continuity: bool,
}

impl Setting {
    fn options(self) -> AnalysisOptions {
        AnalysisOptions {
            hac: HacOptions {
                lags: Some(self.lags),
                small_sample: self.small_sample,
            },
            mk: MkOptions {
                continuity_correction: self.continuity,
            },
            ..AnalysisOptions::default()
        }
    }

    fn describe(self) -> String {
        format!(
            "HAC L={}, small-sample scaling {}, continuity correction {}",
            self.lags,
            if self.small_sample { "on" } else { "off" },
            if self.continuity { "on" } else { "off" }
        )
    }
}

fn analyses_in_reference_order(d: &Dataset, opts: &AnalysisOptions) -> Vec<SeriesAnalysis> {
    let all = analyze_bundle(&d.bundle, opts);
    reference::keys()
        .iter()
        .map(|k| all.iter().find(|a| &a.key == k).unwrap().clone())
        .collect()
}

fn p_value_deviation(analyses: &[SeriesAnalysis], opts: &AnalysisOptions) -> f64 {
    let table = summary_from(analyses, 61, opts);
    let mut worst: f64 = 0.0;
    for (row, expected) in table.rows.iter().zip(reference::P_VALUES) {
        for (cell, e) in row.cells().iter().zip(expected) {
            worst = worst.max(cell.map_or(f64::INFINITY, |c| (c - e).abs()));
        }
    }
    worst
}

/// The HAC lag, small-sample scaling and continuity setting that best match
/// the reference p-values.
fn best_setting(d: &Dataset) -> (Setting, f64) {
    let mut best: Option<(Setting, f64)> = None;
    for lags in 0..=8 {
        for small_sample in [false, true] {
            for continuity in [true, false] {
                let s = Setting {
                    lags,
                    small_sample,
                    continuity,
                };
                let opts = s.options();
                let dev = p_value_deviation(&analyses_in_reference_order(d, &opts), &opts);
                if best.as_ref().is_none_or(|(_, b)| dev < *b) {
                    best = Some((s, dev));
                }
            }
        }
    }
    best.unwrap()
}

fn criterion_1(d: Option<&Dataset>, best: &dyn Fn(&Dataset) -> (Setting, f64)) -> Status {
    let Some(d) = d else {
        return Status::Skip(format!("{DATASET_ENV} not set"));
    };
    let (s, dev) = best(d);
    check(
        dev <= 5e-4,
        format!(
            "42 p-value cells, max |diff| = {dev:.2e} (tol 5e-4) with {}",
            s.describe()
        ),
    )
}

fn coef_deviation(fit: &TrendFit, names: &[&str], expected: &[[f64; 3]]) -> f64 {
    let mut worst: f64 = 0.0;
    for (name, e) in names.iter().zip(expected) {
        let i = fit.index_of(name).unwrap();
        for (got, want) in [fit.coef[i], fit.se[i], fit.t_stats[i]].iter().zip(e) {
            worst = worst.max((got - want).abs());
        }
    }
    worst
}

fn criterion_2(d: Option<&Dataset>, best: &dyn Fn(&Dataset) -> (Setting, f64)) -> Status {
    let Some(d) = d else {
        return Status::Skip(format!("{DATASET_ENV} not set"));
    };
    let (s, _) = best(d);
    let opts = s.options();
    let analyses = analyses_in_reference_order(d, &opts);
    let (mut coef_dev, mut lik_dev): (f64, f64) = (0.0, 0.0);
    for (i, a) in analyses.iter().enumerate() {
        let (Some(trend), Some(m2), Some(m1), Some(cmp)) =
            (&a.trend, &a.trend_break, &a.intercept_break, &a.comparison)
        else {
            return Status::Fail(format!("{}: incomplete analysis {:?}", a.key, a.errors));
        };
        coef_dev = coef_dev
            .max(coef_deviation(
                &trend.fit,
                &["intercept", "trend"],
                &reference::LINEAR[i],
            ))
            .max(coef_deviation(
                &m2.fit,
                &["a1", "b1", "a2", "b2"],
                &reference::TREND_BREAK[i],
            ))
            .max(coef_deviation(
                &m1.fit,
                &["a1", "b", "a2"],
                &reference::INTERCEPT_BREAK[i],
            ))
            .max((trend.slope.positive - reference::SLOPE_ONE_SIDED[i][0]).abs())
            .max((trend.slope.negative - reference::SLOPE_ONE_SIDED[i][1]).abs());
        let got = [
            cmp.log_lik_1,
            cmp.log_lik_2,
            cmp.bic_1,
            cmp.bic_2,
            cmp.lr_stat,
        ];
        lik_dev = lik_dev.max(max_abs_diff(&got, &reference::COMPARISON[i]));
    }
    check(
        coef_dev <= 5e-4 && lik_dev <= 1e-3,
        format!(
            "regression tables max |diff| = {coef_dev:.2e} (tol 5e-4), logL/BIC/LR max |diff| = {lik_dev:.2e} (tol 1e-3) with {}",
            s.describe()
        ),
    )
}

fn criterion_3(d: Option<&Dataset>) -> Status {
    let Some(d) = d else {
        return Status::Skip(format!("{DATASET_ENV} not set"));
    };
    let analyses = analyses_in_reference_order(d, &AnalysisOptions::default());
    let taus: Vec<Option<usize>> = analyses.iter().map(|a| a.tau).collect();
    let raw = [taus[0], taus[2], taus[4]];
    let filt = [taus[1], taus[3], taus[5]];
    let common = |v: [Option<usize>; 3]| v[0].filter(|t| v.iter().all(|x| *x == Some(*t)));
    let detail = format!(
        "raw taus {raw:?}, filtered taus {filt:?} (reference {} / {})",
        reference::TAU_RAW,
        reference::TAU_FILTER
    );
    match (common(raw), common(filt)) {
        (Some(r), Some(f)) => check(f == r + 2, detail),
        _ => Status::Fail(detail),
    }
}

// ---------------------------------------------------------------------------
// self-contained criteria

fn criterion_4() -> Status {
    let start = Instant::now();
    let mut rng = Rng::new(4);
    let mut mk_mismatch = 0;
    let (mut ols_dev, mut break_dev, mut kalman_dev): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in 0..200 {
        let n = 3 + rng.below(10) as usize;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                if case % 2 == 0 {
                    rng.below(4) as f64
                } else {
                    rng.gauss()
                }
            })
            .collect();
        let (num, den) = oracle::mk_var_exact(&x);
        let var18 = mk_variance(&x) * 18.0;
        let var18_int = var18.round() as i128;
        if mk_score(&x) != oracle::mk_s(&x)
            || (var18 - var18_int as f64).abs() > 1e-9
            || 18 * num != var18_int * den
        {
            mk_mismatch += 1;
        }

        let n = 6 + rng.below(7) as usize;
        let y: Vec<f64> = (0..n).map(|_| rng.gauss()).collect();
        let t = time_t(n);
        let fit = trend_test_values(&y, HacOptions::default()).unwrap().fit;
        let want = oracle::normal_equations(&[vec![1.0; n], t.clone()], &y);
        ols_dev = ols_dev.max(max_abs_diff(&fit.coef, &want));

        let tau = 2 + rng.below((n - 4) as u64) as usize;
        let d: Vec<f64> = t.iter().map(|&s| (s >= tau as f64) as u8 as f64).collect();
        let ramp: Vec<f64> = t
            .iter()
            .zip(&d)
            .map(|(s, d)| (s - tau as f64) * d)
            .collect();
        let ys = series(y.clone());
        let m1 = fit_break_model(
            &ys,
            BreakModelKind::InterceptBreakOnly,
            tau,
            HacOptions::default(),
        )
        .unwrap();
        let m2 = fit_break_model(
            &ys,
            BreakModelKind::InterceptAndTrendBreak,
            tau,
            HacOptions::default(),
        )
        .unwrap();
        let w1 = oracle::normal_equations(&[vec![1.0; n], t.clone(), d.clone()], &y);
        let w2 = oracle::normal_equations(&[vec![1.0; n], t.clone(), d, ramp], &y);
        break_dev = break_dev
            .max(max_abs_diff(&m1.fit.coef, &w1))
            .max(max_abs_diff(&m2.fit.coef, &w2));

        let y5: Vec<f64> = (0..5).map(|_| rng.gauss()).collect();
        let s_eps = 0.05 + 2.0 * rng.uniform();
        let s_eta = if case % 5 == 0 {
            0.0
        } else {
            2.0 * rng.uniform()
        };
        let got = log_likelihood(&y5, LocalLevelParams::new(s_eps, s_eta).unwrap());
        kalman_dev = kalman_dev.max((got - oracle::local_level_loglik(&y5, s_eps, s_eta)).abs());
    }
    let elapsed = start.elapsed();
    check(
        mk_mismatch == 0
            && ols_dev <= 1e-10
            && break_dev <= 1e-10
            && kalman_dev <= 1e-8
            && elapsed < Duration::from_secs(10),
        format!(
            "200 series: MK mismatches {mk_mismatch}, OLS max |diff| {ols_dev:.1e}, break models {break_dev:.1e}, Kalman logL {kalman_dev:.1e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Status {
    let start = Instant::now();
    let dgp = DgpSpec {
        kind: DgpKind::NullConstant { mean: 0.0 },
        noise: Noise::Iid { sd: 1.0 },
        n: 61,
        seed: 20_240_501,
    };
    let outcomes = single_threaded(|| {
        simulate_outcomes(&dgp, TestKind::MannKendall(MkOptions::default()), 10_000)
    });
    let at = |level: f64| summarize(&outcomes, level, "size", "mann-kendall", dgp.seed);
    let (r01, r05, r10) = (at(0.01), at(0.05), at(0.10));
    let nested = |f: fn(&aftrend::McResult) -> f64| f(&r01) <= f(&r05) && f(&r05) <= f(&r10);
    let nested_all =
        nested(|r| r.reject_two) && nested(|r| r.reject_pos) && nested(|r| r.reject_neg);
    let elapsed = start.elapsed();
    check(
        (0.044..=0.056).contains(&r05.reject_two) && nested_all && elapsed < Duration::from_secs(60),
        format!(
            "size at 5%: {:.4}; rejection at 1/5/10%: {:.4} / {:.4} / {:.4}; {:.1} s single-threaded",
            r05.reject_two,
            r01.reject_two,
            r05.reject_two,
            r10.reject_two,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Status {
    let slopes = [0.0, 0.005, 0.01, 0.015, 0.02];
    let power: Vec<f64> = slopes
        .iter()
        .map(|&b| {
            let dgp = DgpSpec {
                kind: DgpKind::LinearTrend { a: 0.0, b },
                noise: Noise::Iid { sd: 1.0 },
                n: 61,
                seed: 606,
            };
            let outcomes =
                simulate_outcomes(&dgp, TestKind::HacTrend(HacOptions::default()), 10_000);
            summarize(&outcomes, 0.05, "power", "hac-trend", dgp.seed).reject_two
        })
        .collect();
    let drops: Vec<f64> = power
        .windows(2)
        .filter(|w| w[1] < w[0])
        .map(|w| w[0] - w[1])
        .collect();
    check(
        drops.len() <= 1 && drops.iter().all(|d| *d <= 0.005),
        format!("power over slopes {slopes:?}: {power:.4?}"),
    )
}

fn criterion_7() -> Status {
    let runs = [
        vec![
            "mc", "--design", "size", "--test", "mk", "--reps", "3000", "--seed", "17",
        ],
        vec![
            "mc",
            "--design",
            "power",
            "--test",
            "hac-trend",
            "--slope",
            "0.01",
            "--noise",
            "ar1",
            "--phi",
            "0.4",
            "--reps",
            "3000",
            "--seed",
            "18",
        ],
    ];
    let mut detail = Vec::new();
    for args in &runs {
        let outputs: Vec<Vec<u8>> = ["1", "4", "8"]
            .iter()
            .map(|threads| {
                let out = Command::new(env!("CARGO_BIN_EXE_aftrend"))
                    .args(args)
                    .env("AFTREND_THREADS", threads)
                    .output()
                    .expect("run aftrend");
                if out.status.success() {
                    out.stdout
                } else {
                    Vec::new()
                }
            })
            .collect();
        let same = !outputs[0].is_empty() && outputs.iter().all(|o| o == &outputs[0]);
        if !same {
            return Status::Fail(format!(
                "`aftrend {}` differs across 1/4/8 threads",
                args.join(" ")
            ));
        }
        detail.push(format!("{} bytes", outputs[0].len()));
    }
    Status::Pass(format!(
        "mc size and power runs byte-identical at 1/4/8 threads ({})",
        detail.join(", ")
    ))
}

fn criterion_8() -> Status {
    let mut rng = Rng::new(8);
    let mut worst: f64 = 0.0;
    let mut negative_lr = 0;
    for _ in 0..100 {
        let n = 61;
        let step = rng.gauss() * 0.1;
        let tau = 11 + rng.below(41) as usize;
        let y: Vec<f64> = (0..n)
            .map(|t| {
                0.4 + 0.001 * t as f64 + if t >= tau { step } else { 0.0 } + 0.05 * rng.gauss()
            })
            .collect();
        let ys = series(y.clone());
        let hac = HacOptions::default();
        let fits: Vec<BreakFit> = [
            BreakModelKind::InterceptBreakOnly,
            BreakModelKind::InterceptAndTrendBreak,
        ]
        .iter()
        .map(|&k| fit_break_model(&ys, k, tau, hac).unwrap())
        .collect();
        let linear = trend_test_values(&y, hac).unwrap().fit;
        for fit in [&linear, &fits[0].fit, &fits[1].fit] {
            let sse: f64 = y
                .iter()
                .zip(&fit.fitted)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            let logl = -(n as f64) / 2.0 * (sse / n as f64).ln();
            let bic_v = -2.0 * logl + fit.k as f64 * (n as f64).ln();
            worst = worst
                .max((fit.sse - sse).abs() / sse)
                .max((fit.log_lik - logl).abs())
                .max((fit.bic - bic_v).abs())
                .max((gaussian_log_lik(sse, n) - logl).abs())
                .max((bic(logl, fit.k, n) - bic_v).abs());
        }
        let cmp = compare_models(&ys, tau).unwrap();
        let lr = -2.0 * (cmp.log_lik_1 - cmp.log_lik_2);
        if cmp.lr_stat < 0.0 {
            negative_lr += 1;
        }
        worst = worst
            .max((cmp.lr_stat - lr).abs())
            .max((cmp.lr_pvalue - chi2_sf(lr, 1.0)).abs())
            .max((cmp.log_lik_1 - fits[0].fit.log_lik).abs())
            .max((cmp.bic_2 - fits[1].fit.bic).abs());
    }
    let crit = chi2_critical(0.05, 1.0);
    check(
        worst <= 1e-9 && negative_lr == 0 && (crit - 3.8415).abs() <= 1e-4,
        format!(
            "100 series: max identity error {worst:.1e}, negative LR {negative_lr}; chi2(1) 5% critical value {crit:.6}"
        ),
    )
}

fn random_walk_plus_noise(rng: &mut Rng, n: usize, s_eps: f64, s_eta: f64) -> Vec<f64> {
    let mut level = 0.4;
    (0..n)
        .map(|_| {
            let v = level + s_eps.sqrt() * rng.gauss();
            level += s_eta.sqrt() * rng.gauss();
            v
        })
        .collect()
}

fn criterion_9() -> Status {
    let mut rng = Rng::new(9);
    let (mut shift_dev, mut shift_var_dev, mut scale_dev, mut grad): (f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0);
    let mut interior = 0;
    for _ in 0..30 {
        let y = random_walk_plus_noise(&mut rng, 61, 1e-3, 5e-4);
        let fit = fit_local_level_values(&y).unwrap();

        let c = 7.25;
        let shifted = fit_local_level_values(&y.iter().map(|v| v + c).collect::<Vec<_>>()).unwrap();
        let moved: Vec<f64> = fit.smoothed_level.iter().map(|v| v + c).collect();
        let rel = |got: f64, want: f64| {
            if want == 0.0 {
                got.abs()
            } else {
                (got / want - 1.0).abs()
            }
        };
        shift_dev = shift_dev.max(max_abs_diff(&shifted.smoothed_level, &moved));
        shift_var_dev = shift_var_dev
            .max(rel(shifted.sigma2_eps, fit.sigma2_eps))
            .max(rel(shifted.sigma2_eta, fit.sigma2_eta));

        let a = 3.0;
        let scaled = fit_local_level_values(&y.iter().map(|v| v * a).collect::<Vec<_>>()).unwrap();
        scale_dev = scale_dev
            .max(rel(scaled.sigma2_eps, a * a * fit.sigma2_eps))
            .max(rel(scaled.sigma2_eta, a * a * fit.sigma2_eta));
        for (s, l) in scaled.smoothed_level.iter().zip(&fit.smoothed_level) {
            scale_dev = scale_dev.max(rel(*s, a * l));
        }

        if !fit.at_boundary {
            interior += 1;
            let h = 1e-5;
            let ll = |le: f64, ln: f64| {
                log_likelihood(&y, LocalLevelParams::new(le.exp(), ln.exp()).unwrap())
            };
            let (le, ln) = (fit.sigma2_eps.ln(), fit.sigma2_eta.ln());
            let g_eps = (ll(le + h, ln) - ll(le - h, ln)) / (2.0 * h);
            let g_eta = (ll(le, ln + h) - ll(le, ln - h)) / (2.0 * h);
            grad = grad.max(g_eps.abs()).max(g_eta.abs());
        }
    }

    // q = 0: fixed variances, and white-noise fits that land on the boundary
    let mut flat_dev: f64 = 0.0;
    let mut q_zero_fits = 0;
    for _ in 0..30 {
        let y: Vec<f64> = (0..61).map(|_| 0.45 + 0.03 * rng.gauss()).collect();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let sm = smooth(&y, LocalLevelParams::new(0.0009, 0.0).unwrap());
        flat_dev = flat_dev.max(
            sm.level
                .iter()
                .map(|l| (l - mean).abs())
                .fold(0.0, f64::max),
        );
        let fit = fit_local_level_values(&y).unwrap();
        if fit.q == 0.0 {
            q_zero_fits += 1;
            flat_dev = flat_dev.max(
                fit.smoothed_level
                    .iter()
                    .map(|l| (l - mean).abs())
                    .fold(0.0, f64::max),
            );
        }
    }
    check(
        shift_dev <= 1e-8 && shift_var_dev <= 1e-6 && scale_dev <= 1e-6 && grad <= 1e-4 && interior >= 10 && flat_dev <= 1e-8 && q_zero_fits > 0,
        format!(
            "shift: level max dev {shift_dev:.1e}, variance max rel dev {shift_var_dev:.1e}; scale max rel dev {scale_dev:.1e}, max |grad| {grad:.1e} over {interior} interior fits, q=0 level vs mean {flat_dev:.1e} ({q_zero_fits} boundary fits)"
        ),
    )
}

fn criterion_10() -> Status {
    let mut rng = Rng::new(10);
    let n = 61;
    let reps = 500;
    let mut hits = 0;
    for _ in 0..reps {
        let tau = 2 + rng.below((n - 3) as u64) as usize;
        let y: Vec<f64> = (0..n)
            .map(|t| if t >= tau { 5.0 } else { 0.0 } + rng.gauss())
            .collect();
        let scan = break_dummy_scan(&series(y), ScanOptions::default()).unwrap();
        if scan.argmax_abs() == Some(tau) {
            hits += 1;
        }
    }
    let rate = hits as f64 / reps as f64;
    check(
        rate >= 0.95,
        format!("step of 5 noise sd located exactly in {hits}/{reps} replications ({rate:.3})"),
    )
}

fn main() {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |i: u32| selected.is_empty() || selected.contains(&i);
    let dataset = load_dataset();
    let setting = std::cell::OnceCell::new();
    let best = |d: &Dataset| *setting.get_or_init(|| best_setting(d));

    let criteria: [(u32, &str, &dyn Fn() -> Status); 10] = [
        (1, "p-value table", &|| match &dataset {
            Ok(d) => criterion_1(d.as_ref(), &best),
            Err(e) => Status::Fail(e.clone()),
        }),
        (2, "regression and comparison tables", &|| match &dataset {
            Ok(d) => criterion_2(d.as_ref(), &best),
            Err(e) => Status::Fail(e.clone()),
        }),
        (3, "break-date recovery", &|| match &dataset {
            Ok(d) => criterion_3(d.as_ref()),
            Err(e) => Status::Fail(e.clone()),
        }),
        (4, "oracle equivalence", &criterion_4),
        (5, "Monte Carlo size calibration", &criterion_5),
        (6, "Monte Carlo power monotonicity", &criterion_6),
        (7, "determinism across thread counts", &criterion_7),
        (8, "likelihood identities", &criterion_8),
        (9, "local level properties", &criterion_9),
        (10, "break-scan recovery", &criterion_10),
    ];

    let mut failures = 0;
    for (i, name, run) in criteria {
        if !wanted(i) {
            continue;
        }
        let (tag, detail) = match run() {
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => {
                failures += 1;
                ("FAIL", d)
            }
            Status::Skip(d) => ("SKIP", d),
        };
        println!("criterion {i:>2} {tag} {name}: {detail}");
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
