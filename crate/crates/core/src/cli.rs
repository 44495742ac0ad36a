//! `aftrend` command-line front end.
//!
//! Exit codes: 0 on success, 1 when the analysis fails (unreadable input,
//! degenerate data), 2 on usage errors. Results go to stdout or `--out`;
//! diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::breaks::{compare_models, fit_break_model, search_break, BreakFit, BreakModelKind};
use crate::diagnostics::{running_change, CiMethod};
use crate::dist::Alternative;
use crate::local_level::{break_dummy_scan, fit_local_level, ScanOptions};
use crate::mann_kendall::{mk_test, MkOptions};
use crate::monte_carlo::{run_mc, run_vanmarle_design, DgpKind, DgpSpec, Noise, TestKind};
use crate::regression::{trend_test, HacOptions, TrendFit};
use crate::report::{analyze_bundle, fitted_csv, summary_from, AnalysisOptions};
use crate::series::{load_csv, AnnualSeries, ColumnSchema, DatasetBundle};

pub const THREADS_ENV: &str = "AFTREND_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Analysis(_) => 1,
        }
    }
}

fn analysis<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Analysis(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "aftrend",
    version,
    about = "Trend and structural-break tests for annual time series"
)]
pub struct Cli {
    /// CSV file with a `year` column and one column per series.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Series column to analyse.
    #[arg(long, global = true)]
    pub column: Option<String>,
    /// Random seed for Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Emit JSON (default for most subcommands).
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Output file (output directory for `report`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mann-Kendall trend test.
    Mk(MkArgs),
    /// Linear trend regression with Newey-West standard errors.
    Trend(TrendArgs),
    /// Single-break trend models and break-date search.
    Break(BreakArgs),
    /// Local level model, smoothed level and break-dummy scan.
    Locallevel(LocalLevelArgs),
    /// Monte Carlo size, power and perturbation designs.
    Mc(McArgs),
    /// Running average of year-to-year changes.
    Changes(ChangesArgs),
    /// Full battery over every series in the input file.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlternativeArg {
    TwoSided,
    Positive,
    Negative,
}

impl From<AlternativeArg> for Alternative {
    fn from(a: AlternativeArg) -> Self {
        match a {
            AlternativeArg::TwoSided => Alternative::TwoSided,
            AlternativeArg::Positive => Alternative::Positive,
            AlternativeArg::Negative => Alternative::Negative,
        }
    }
}

#[derive(Debug, Args)]
pub struct MkArgs {
    #[arg(long, value_enum, default_value = "two-sided")]
    pub alternative: AlternativeArg,
    #[arg(long)]
    pub no_continuity_correction: bool,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct HacArgs {
    /// Newey-West truncation lag (default floor(4 (n/100)^(2/9))).
    #[arg(long)]
    pub hac_lags: Option<usize>,
    /// Scale the HAC covariance by n/(n-k).
    #[arg(long)]
    pub hac_small_sample: bool,
}

impl From<HacArgs> for HacOptions {
    fn from(a: HacArgs) -> Self {
        HacOptions {
            lags: a.hac_lags,
            small_sample: a.hac_small_sample,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    #[command(flatten)]
    pub hac: HacArgs,
    /// Write year,observed,fitted CSV.
    #[arg(long)]
    pub emit_fitted: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Intercept,
    InterceptTrend,
}

impl From<ModelArg> for BreakModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Intercept => BreakModelKind::InterceptBreakOnly,
            ModelArg::InterceptTrend => BreakModelKind::InterceptAndTrendBreak,
        }
    }
}

#[derive(Debug, Args)]
pub struct BreakArgs {
    #[arg(long, value_enum, default_value = "intercept-trend")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 10)]
    pub trim: usize,
    /// Fixed break index; skips the search.
    #[arg(long)]
    pub tau: Option<usize>,
    #[command(flatten)]
    pub hac: HacArgs,
    /// Write tau,year,sse CSV of the search profile.
    #[arg(long)]
    pub emit_profile: Option<PathBuf>,
    /// Write year,observed,fitted CSV of the segmented trend.
    #[arg(long)]
    pub emit_fitted: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LocalLevelArgs {
    #[arg(long)]
    pub break_scan: bool,
    #[arg(long, requires = "break_scan")]
    pub reestimate_variances: bool,
    /// Write year,level,lower95,upper95 CSV.
    #[arg(long)]
    pub emit_level: Option<PathBuf>,
    /// Write year,t_stat CSV of the break scan.
    #[arg(long, requires = "break_scan")]
    pub emit_scan: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DesignArg {
    Size,
    Power,
    Vanmarle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TestArg {
    Mk,
    HacTrend,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseArg {
    Iid,
    Ar1,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, value_enum)]
    pub design: DesignArg,
    #[arg(long, value_enum, default_value = "mk")]
    pub test: TestArg,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 61)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "iid")]
    pub noise: NoiseArg,
    /// Noise (innovation) standard deviation; for `vanmarle` defaults to the
    /// sample sd of the input series.
    #[arg(long)]
    pub sd: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    /// Trend slope for the power design.
    #[arg(long)]
    pub slope: Option<f64>,
    /// Mean (size design) or intercept (power design).
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[command(flatten)]
    pub hac: HacArgs,
    #[arg(long)]
    pub no_continuity_correction: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CiArg {
    None,
    Iid,
}

#[derive(Debug, Args)]
pub struct ChangesArgs {
    #[arg(long, value_enum, default_value = "iid")]
    pub ci: CiArg,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub hac: HacArgs,
    #[arg(long, default_value_t = 10)]
    pub trim: usize,
    /// Fixed break index for every series.
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub no_continuity_correction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

struct Context<'a> {
    cli: &'a Cli,
    stdout: &'a mut Vec<u8>,
}

impl Context<'_> {
    fn format(&self, default: Format) -> Format {
        if self.cli.csv {
            Format::Csv
        } else if self.cli.json {
            Format::Json
        } else {
            default
        }
    }

    fn input(&self) -> Result<&Path, CliError> {
        self.cli
            .input
            .as_deref()
            .ok_or_else(|| CliError::Usage("--input <path> is required".into()))
    }

    fn bundle(&self, schema: &ColumnSchema) -> Result<DatasetBundle, CliError> {
        let path = self.input()?;
        load_csv(path, schema).map_err(|e| CliError::Analysis(format!("{}: {e}", path.display())))
    }

    fn series(&self) -> Result<AnnualSeries, CliError> {
        let column = self
            .cli
            .column
            .clone()
            .ok_or_else(|| CliError::Usage("--column <name> is required".into()))?;
        let bundle = self.bundle(&ColumnSchema::Columns(vec![column.clone()]))?;
        Ok(bundle.by_name(&column).expect("loaded column").clone())
    }

    fn emit(&mut self, text: &str) -> Result<(), CliError> {
        match &self.cli.out {
            Some(path) => write_file(path, text),
            None => self.stdout.write_all(text.as_bytes()).map_err(analysis),
        }
    }

    fn emit_json<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(analysis)?;
        s.push('\n');
        self.emit(&s)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Analysis(format!("cannot write {}: {e}", path.display())))
}

fn csv_string(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(analysis)?;
    for r in rows {
        w.write_record(&r).map_err(analysis)?;
    }
    let bytes = w.into_inner().map_err(|e| analysis(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn coefficient_table(fit: &TrendFit) -> Vec<serde_json::Value> {
    let se_ols = fit.ols_se();
    (0..fit.k)
        .map(|i| {
            json!({
                "name": fit.names[i],
                "estimate": fit.coef[i],
                "se": fit.se[i],
                "t": fit.t_stats[i],
                "p_two": fit.p_two[i],
                "p_pos": fit.p_pos[i],
                "p_neg": fit.p_neg[i],
                "se_ols": se_ols[i],
            })
        })
        .collect()
}

fn coefficient_csv(fit: &TrendFit) -> Result<String, CliError> {
    let se_ols = fit.ols_se();
    csv_string(
        &[
            "name", "estimate", "se", "t", "p_two", "p_pos", "p_neg", "se_ols",
        ],
        (0..fit.k).map(|i| {
            vec![
                fit.names[i].clone(),
                fit.coef[i].to_string(),
                fit.se[i].to_string(),
                fit.t_stats[i].to_string(),
                fit.p_two[i].to_string(),
                fit.p_pos[i].to_string(),
                fit.p_neg[i].to_string(),
                se_ols[i].to_string(),
            ]
        }),
    )
}

fn fitted_rows(y: &AnnualSeries, fit: &TrendFit) -> Result<String, CliError> {
    csv_string(
        &["year", "observed", "fitted"],
        y.values()
            .iter()
            .zip(&fit.fitted)
            .enumerate()
            .map(|(t, (v, f))| vec![y.year(t).to_string(), v.to_string(), f.to_string()]),
    )
}

fn cmd_mk(ctx: &mut Context, args: &MkArgs) -> Result<(), CliError> {
    let y = ctx.series()?;
    let opts = MkOptions {
        continuity_correction: !args.no_continuity_correction,
    };
    let r = mk_test(&y, opts).map_err(analysis)?;
    let alternative = Alternative::from(args.alternative);
    match ctx.format(Format::Json) {
        Format::Json => ctx.emit_json(&json!({
            "series": y.name(),
            "n": y.len(),
            "S": r.s,
            "var_S": r.var_s,
            "Z": r.z,
            "p_two": r.p_two,
            "p_pos": r.p_pos,
            "p_neg": r.p_neg,
            "alternative": alternative,
            "p_value": r.p_values().get(alternative),
            "continuity_correction": opts.continuity_correction,
        })),
        Format::Csv => {
            let s = csv_string(
                &["S", "var_S", "Z", "p_two", "p_pos", "p_neg"],
                [vec![
                    r.s.to_string(),
                    r.var_s.to_string(),
                    r.z.to_string(),
                    r.p_two.to_string(),
                    r.p_pos.to_string(),
                    r.p_neg.to_string(),
                ]],
            )?;
            ctx.emit(&s)
        }
    }
}

fn cmd_trend(ctx: &mut Context, args: &TrendArgs) -> Result<(), CliError> {
    let y = ctx.series()?;
    let t = trend_test(&y, args.hac.into()).map_err(analysis)?;
    if let Some(path) = &args.emit_fitted {
        write_file(path, &fitted_rows(&y, &t.fit)?)?;
    }
    match ctx.format(Format::Json) {
        Format::Json => ctx.emit_json(&json!({
            "series": y.name(),
            "n": t.fit.n,
            "start_year": y.start_year(),
            "hac_lags": t.fit.hac_lags,
            "hac_small_sample": args.hac.hac_small_sample,
            "coefficients": coefficient_table(&t.fit),
            "slope": {
                "p_two": t.slope.two_sided,
                "p_pos": t.slope.positive,
                "p_neg": t.slope.negative,
            },
            "sse": t.fit.sse,
            "logL": t.fit.log_lik,
            "bic": t.fit.bic,
        })),
        Format::Csv => {
            let s = coefficient_csv(&t.fit)?;
            ctx.emit(&s)
        }
    }
}

fn cmd_break(ctx: &mut Context, args: &BreakArgs) -> Result<(), CliError> {
    let y = ctx.series()?;
    let hac: HacOptions = args.hac.into();
    let kind: BreakModelKind = args.model.into();
    let bf: BreakFit = match args.tau {
        Some(tau) => fit_break_model(&y, kind, tau, hac),
        None => search_break(&y, kind, args.trim, hac),
    }
    .map_err(analysis)?;
    let tau = bf.tau;
    let other = |k: BreakModelKind| -> Result<BreakFit, CliError> {
        if k == kind {
            Ok(bf.clone())
        } else {
            fit_break_model(&y, k, tau, hac).map_err(analysis)
        }
    };
    let p_br_trend = other(BreakModelKind::InterceptAndTrendBreak)?
        .tests()
        .p_trend;
    let p_br_intercept = other(BreakModelKind::InterceptBreakOnly)?
        .tests()
        .p_intercept;
    let comparison = compare_models(&y, tau).map_err(analysis)?;

    if let Some(path) = &args.emit_profile {
        let s = csv_string(
            &["tau", "year", "sse"],
            bf.sse_profile
                .iter()
                .map(|(t, sse)| vec![t.to_string(), y.year(*t).to_string(), sse.to_string()]),
        )?;
        write_file(path, &s)?;
    }
    if let Some(path) = &args.emit_fitted {
        write_file(path, &fitted_rows(&y, &bf.fit)?)?;
    }
    match ctx.format(Format::Json) {
        Format::Json => ctx.emit_json(&json!({
            "series": y.name(),
            "model": kind,
            "tau": tau,
            "year": bf.break_year,
            "searched": args.tau.is_none(),
            "trim": args.trim,
            "hac_lags": bf.fit.hac_lags,
            "coefficients": coefficient_table(&bf.fit),
            "tests": {
                "p_br_trend": p_br_trend,
                "p_br_intercept": p_br_intercept,
            },
            "comparison": comparison,
            "sse": bf.fit.sse,
            "logL": bf.fit.log_lik,
            "bic": bf.fit.bic,
        })),
        Format::Csv => {
            let s = coefficient_csv(&bf.fit)?;
            ctx.emit(&s)
        }
    }
}

fn cmd_locallevel(ctx: &mut Context, args: &LocalLevelArgs) -> Result<(), CliError> {
    let y = ctx.series()?;
    let fit = fit_local_level(&y).map_err(analysis)?;
    let (lower, upper) = fit.band_95();
    let level_csv = csv_string(
        &["year", "level", "lower95", "upper95"],
        (0..y.len()).map(|t| {
            vec![
                y.year(t).to_string(),
                fit.smoothed_level[t].to_string(),
                lower[t].to_string(),
                upper[t].to_string(),
            ]
        }),
    )?;
    if let Some(path) = &args.emit_level {
        write_file(path, &level_csv)?;
    }
    let scan = if args.break_scan {
        let s = break_dummy_scan(
            &y,
            ScanOptions {
                reestimate_variances: args.reestimate_variances,
            },
        )
        .map_err(analysis)?;
        if let Some(path) = &args.emit_scan {
            let text = csv_string(
                &["year", "t_stat"],
                s.years
                    .iter()
                    .zip(&s.t_stats)
                    .map(|(y, t)| vec![y.to_string(), t.to_string()]),
            )?;
            write_file(path, &text)?;
        }
        Some(s)
    } else {
        None
    };
    match ctx.format(Format::Json) {
        Format::Json => {
            let scan_json = scan.as_ref().map(|s| {
                let best = s.argmax_abs();
                let at = best.and_then(|tau| s.taus.iter().position(|&t| t == tau));
                json!({
                    "reestimate_variances": args.reestimate_variances,
                    "tau_max_abs_t": best,
                    "year_max_abs_t": at.map(|i| s.years[i]),
                    "max_abs_t": at.map(|i| s.t_stats[i].abs()),
                    "taus": s.taus,
                    "years": s.years,
                    "t_stats": s.t_stats,
                    "dummy_estimates": s.dummy_estimates,
                })
            });
            ctx.emit_json(&json!({
                "series": y.name(),
                "sigma2_eps": fit.sigma2_eps,
                "sigma2_eta": fit.sigma2_eta,
                "q": fit.q,
                "loglik": fit.loglik,
                "converged": fit.converged,
                "at_boundary": fit.at_boundary,
                "iterations": fit.iterations,
                "break_scan": scan_json,
            }))
        }
        Format::Csv => ctx.emit(&level_csv),
    }
}

fn cmd_mc(ctx: &mut Context, args: &McArgs) -> Result<(), CliError> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Usage("--level must lie in (0, 1)".into()));
    }
    let test = match args.test {
        TestArg::Mk => TestKind::MannKendall(MkOptions {
            continuity_correction: !args.no_continuity_correction,
        }),
        TestArg::HacTrend => TestKind::HacTrend(args.hac.into()),
    };
    let seed = ctx.cli.seed;
    let result = match args.design {
        DesignArg::Vanmarle => {
            let base = ctx.series()?;
            if !matches!(args.test, TestArg::Mk) {
                return Err(CliError::Usage("the vanmarle design uses --test mk".into()));
            }
            let sd = args.sd.unwrap_or_else(|| base.sample_sd());
            run_vanmarle_design(&base, sd, args.reps, seed, args.level)
        }
        DesignArg::Size | DesignArg::Power => {
            let sd = args.sd.unwrap_or(1.0);
            let noise = match args.noise {
                NoiseArg::Iid => Noise::Iid { sd },
                NoiseArg::Ar1 => Noise::Ar1 { phi: args.phi, sd },
            };
            let kind = match args.design {
                DesignArg::Size => DgpKind::NullConstant { mean: args.mean },
                _ => DgpKind::LinearTrend {
                    a: args.mean,
                    b: args.slope.ok_or_else(|| {
                        CliError::Usage("--slope is required for --design power".into())
                    })?,
                },
            };
            let dgp = DgpSpec {
                kind,
                noise,
                n: args.n,
                seed,
            };
            run_mc(&dgp, test, args.reps, args.level)
        }
    }
    .map_err(analysis)?;
    match ctx.format(Format::Json) {
        Format::Json => ctx.emit_json(&result),
        Format::Csv => {
            let s = csv_string(
                &[
                    "design",
                    "test",
                    "reps",
                    "seed",
                    "level",
                    "reject_two",
                    "reject_pos",
                    "reject_neg",
                    "failed",
                ],
                [vec![
                    result.design.clone(),
                    result.test.clone(),
                    result.reps.to_string(),
                    result.seed.to_string(),
                    result.level.to_string(),
                    result.reject_two.to_string(),
                    result.reject_pos.to_string(),
                    result.reject_neg.to_string(),
                    result.failed.to_string(),
                ]],
            )?;
            ctx.emit(&s)
        }
    }
}

fn cmd_changes(ctx: &mut Context, args: &ChangesArgs) -> Result<(), CliError> {
    let y = ctx.series()?;
    let ci = match args.ci {
        CiArg::None => CiMethod::None,
        CiArg::Iid => CiMethod::Iid,
    };
    let r = running_change(&y, ci).map_err(analysis)?;
    match ctx.format(Format::Csv) {
        Format::Json => ctx.emit_json(&r),
        Format::Csv => {
            let s = csv_string(
                &["year", "running_mean", "lower95", "upper95"],
                (0..r.taus.len()).map(|i| {
                    vec![
                        r.years[i].to_string(),
                        r.running_mean[i].to_string(),
                        opt(r.ci_lower[i]),
                        opt(r.ci_upper[i]),
                    ]
                }),
            )?;
            ctx.emit(&s)
        }
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_report(ctx: &mut Context, args: &ReportArgs) -> Result<(), CliError> {
    let dir = ctx
        .cli
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("report needs --out <dir>".into()))?;
    let schema = match &ctx.cli.column {
        Some(c) => ColumnSchema::Columns(vec![c.clone()]),
        None => ColumnSchema::All,
    };
    let bundle = ctx.bundle(&schema)?;
    let options = AnalysisOptions {
        hac: args.hac.into(),
        mk: MkOptions {
            continuity_correction: !args.no_continuity_correction,
        },
        trim: args.trim,
        tau: args.tau,
        ..AnalysisOptions::default()
    };
    let analyses = analyze_bundle(&bundle, &options);
    let n = bundle.entries().first().map_or(0, |(_, s)| s.len());
    let table = summary_from(&analyses, n, &options);

    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Analysis(format!("cannot create {}: {e}", dir.display())))?;
    write_file(&dir.join("summary.txt"), &table.to_text())?;
    write_file(&dir.join("summary.csv"), &table.to_csv().map_err(analysis)?)?;
    let mut js = serde_json::to_string_pretty(&table).map_err(analysis)?;
    js.push('\n');
    write_file(&dir.join("summary.json"), &js)?;
    for ((_, s), a) in bundle.entries().iter().zip(&analyses) {
        let path = dir.join(format!("fitted_{}.csv", sanitize(s.name())));
        write_file(&path, &fitted_csv(s, a).map_err(analysis)?)?;
    }
    ctx.stdout
        .write_all(table.to_text().as_bytes())
        .map_err(analysis)?;
    let failures: Vec<&String> = table.rows.iter().flat_map(|r| &r.errors).collect();
    for e in &failures {
        eprintln!("warning: {e}");
    }
    Ok(())
}

/// Parses `AFTREND_THREADS`; `0` or unset means one thread per core.
pub fn thread_cap(value: Option<&str>) -> Result<usize, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(0),
        Some(v) => v.parse().map_err(|_| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{v}`"
            ))
        }),
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let threads = thread_cap(std::env::var(THREADS_ENV).ok().as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(analysis)?;
    let mut buffer = Vec::new();
    pool.install(|| {
        let mut ctx = Context {
            cli,
            stdout: &mut buffer,
        };
        match &cli.command {
            Command::Mk(a) => cmd_mk(&mut ctx, a),
            Command::Trend(a) => cmd_trend(&mut ctx, a),
            Command::Break(a) => cmd_break(&mut ctx, a),
            Command::Locallevel(a) => cmd_locallevel(&mut ctx, a),
            Command::Mc(a) => cmd_mc(&mut ctx, a),
            Command::Changes(a) => cmd_changes(&mut ctx, a),
            Command::Report(a) => cmd_report(&mut ctx, a),
        }
    })?;
    stdout.write_all(&buffer).map_err(analysis)?;
    stdout.flush().map_err(analysis)
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return 0;
                }
                _ => 2,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if let CliError::Usage(_) = e {
                let _ = writeln!(stderr, "run `aftrend --help` for usage");
            }
            e.exit_code()
        }
    }
}
