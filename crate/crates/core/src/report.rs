//! Per-series test battery and the p-value summary table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::breaks::{
    compare_models, fit_break_model, search_break, BreakFit, BreakModelKind, ModelComparison,
};
use crate::mann_kendall::{mk_test, MkOptions, MkResult};
use crate::regression::{trend_test, HacOptions, TrendTest};
use crate::series::{AnnualSeries, DatasetBundle, SeriesKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub hac: HacOptions,
    pub mk: MkOptions,
    pub trim: usize,
    /// Model whose SSE profile picks the break date.
    pub search_model: BreakModelKind,
    /// Skip the search and use this break index for every series.
    pub tau: Option<usize>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            hac: HacOptions::default(),
            mk: MkOptions::default(),
            trim: 10,
            search_model: BreakModelKind::InterceptAndTrendBreak,
            tau: None,
        }
    }
}

/// Everything computed for one series. Failed steps are `None` and their
/// messages land in `errors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesAnalysis {
    pub key: SeriesKey,
    pub name: String,
    pub mk: Option<MkResult>,
    pub trend: Option<TrendTest>,
    pub tau: Option<usize>,
    pub break_year: Option<i32>,
    pub trend_break: Option<BreakFit>,
    pub intercept_break: Option<BreakFit>,
    pub comparison: Option<ModelComparison>,
    pub errors: Vec<String>,
}

fn keep<T, E: std::fmt::Display>(
    r: Result<T, E>,
    what: &str,
    label: &str,
    errors: &mut Vec<String>,
) -> Option<T> {
    r.map_err(|e| errors.push(format!("{label}: {what}: {e}")))
        .ok()
}

/// Break date used for `y`: the override, or the SSE-search argmin.
pub fn select_break(
    y: &AnnualSeries,
    options: &AnalysisOptions,
) -> Result<BreakFit, crate::breaks::BreakError> {
    match options.tau {
        Some(tau) => fit_break_model(y, options.search_model, tau, options.hac),
        None => search_break(y, options.search_model, options.trim, options.hac),
    }
}

pub fn analyze_series(
    key: &SeriesKey,
    y: &AnnualSeries,
    options: &AnalysisOptions,
) -> SeriesAnalysis {
    let label = format!("{key} ({})", y.name());
    let mut errors = Vec::new();
    let mk = keep(mk_test(y, options.mk), "mann-kendall", &label, &mut errors);
    let trend = keep(trend_test(y, options.hac), "trend", &label, &mut errors);
    let selected = keep(
        select_break(y, options),
        "break search",
        &label,
        &mut errors,
    );
    let tau = selected.as_ref().map(|b| b.tau);
    let mut fit_kind = |kind: BreakModelKind| {
        tau.and_then(|tau| {
            if selected.as_ref().is_some_and(|s| s.kind == kind) {
                return selected.clone();
            }
            keep(
                fit_break_model(y, kind, tau, options.hac),
                "break fit",
                &label,
                &mut errors,
            )
        })
    };
    let trend_break = fit_kind(BreakModelKind::InterceptAndTrendBreak);
    let intercept_break = fit_kind(BreakModelKind::InterceptBreakOnly);
    let comparison = tau.and_then(|tau| {
        keep(
            compare_models(y, tau),
            "model comparison",
            &label,
            &mut errors,
        )
    });
    SeriesAnalysis {
        key: key.clone(),
        name: y.name().to_string(),
        mk,
        trend,
        tau,
        break_year: tau.map(|t| y.year(t)),
        trend_break,
        intercept_break,
        comparison,
        errors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub series: String,
    pub name: String,
    pub tau: Option<usize>,
    pub break_year: Option<i32>,
    pub p_mk_two: Option<f64>,
    pub p_mk_pos: Option<f64>,
    pub p_mk_neg: Option<f64>,
    /// `b = 0` in the linear trend model.
    pub p_slope1: Option<f64>,
    /// `b = 0` in the intercept-break model.
    pub p_slope2: Option<f64>,
    /// `b2 = 0` in the intercept-and-trend-break model.
    pub p_br_trend: Option<f64>,
    /// `a2 = 0` in the intercept-break model.
    pub p_br_intercept: Option<f64>,
    pub errors: Vec<String>,
}

impl SummaryRow {
    pub const COLUMNS: [&'static str; 7] = [
        "p_MK_two",
        "p_MK_pos",
        "p_MK_neg",
        "p_slope1",
        "p_slope2",
        "p_br_trend",
        "p_br_intercept",
    ];

    pub fn cells(&self) -> [Option<f64>; 7] {
        [
            self.p_mk_two,
            self.p_mk_pos,
            self.p_mk_neg,
            self.p_slope1,
            self.p_slope2,
            self.p_br_trend,
            self.p_br_intercept,
        ]
    }

    pub fn from_analysis(a: &SeriesAnalysis) -> Self {
        let ib = a.intercept_break.as_ref();
        Self {
            series: a.key.to_string(),
            name: a.name.clone(),
            tau: a.tau,
            break_year: a.break_year,
            p_mk_two: a.mk.map(|m| m.p_two),
            p_mk_pos: a.mk.map(|m| m.p_pos),
            p_mk_neg: a.mk.map(|m| m.p_neg),
            p_slope1: a.trend.as_ref().map(|t| t.slope.two_sided),
            p_slope2: ib
                .and_then(|b| b.coefficient_p_values("b"))
                .map(|p| p.two_sided),
            p_br_trend: a.trend_break.as_ref().and_then(|b| b.tests().p_trend),
            p_br_intercept: ib.map(|b| b.tests().p_intercept),
            errors: a.errors.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub options: AnalysisOptions,
    /// HAC lag actually used (resolved from the options for the series length).
    pub hac_lags: usize,
    pub rows: Vec<SummaryRow>,
}

pub fn analyze_bundle(bundle: &DatasetBundle, options: &AnalysisOptions) -> Vec<SeriesAnalysis> {
    use rayon::prelude::*;
    bundle
        .entries()
        .par_iter()
        .map(|(key, s)| analyze_series(key, s, options))
        .collect()
}

pub fn summary_from(
    analyses: &[SeriesAnalysis],
    n: usize,
    options: &AnalysisOptions,
) -> SummaryTable {
    SummaryTable {
        options: *options,
        hac_lags: options.hac.lags_for(n),
        rows: analyses.iter().map(SummaryRow::from_analysis).collect(),
    }
}

pub fn build_summary(bundle: &DatasetBundle, options: &AnalysisOptions) -> SummaryTable {
    let n = bundle.entries().first().map_or(0, |(_, s)| s.len());
    summary_from(&analyze_bundle(bundle, options), n, options)
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

impl SummaryTable {
    fn header_lines(&self) -> Vec<String> {
        let o = &self.options;
        vec![
            format!(
                "hac_lags={} hac_small_sample={} continuity_correction={} trim={} search_model={} tau={}",
                self.hac_lags,
                o.hac.small_sample,
                o.mk.continuity_correction,
                o.trim,
                match o.search_model {
                    BreakModelKind::InterceptAndTrendBreak => "intercept-trend",
                    BreakModelKind::InterceptBreakOnly => "intercept",
                },
                o.tau.map_or("search".to_string(), |t| t.to_string()),
            ),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in self.header_lines() {
            let _ = writeln!(out, "# {l}");
        }
        let _ = write!(out, "{:<22} {:>4} {:>6}", "series", "tau", "year");
        for c in SummaryRow::COLUMNS {
            let _ = write!(out, " {c:>14}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{:<22} {:>4} {:>6}",
                r.series,
                r.tau.map_or("NA".into(), |t| t.to_string()),
                r.break_year.map_or("NA".into(), |y| y.to_string())
            );
            for c in r.cells() {
                let _ = write!(out, " {:>14}", fmt_cell(c));
            }
            out.push('\n');
        }
        for e in self.rows.iter().flat_map(|r| &r.errors) {
            let _ = writeln!(out, "! {e}");
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["series", "name", "tau", "break_year"];
        header.extend(SummaryRow::COLUMNS);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.series.clone(),
                r.name.clone(),
                r.tau.map_or(String::new(), |t| t.to_string()),
                r.break_year.map_or(String::new(), |y| y.to_string()),
            ];
            rec.extend(
                r.cells()
                    .iter()
                    .map(|c| c.map_or(String::new(), |v| v.to_string())),
            );
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

/// `year,observed,linear_fit,break_fit` rows for plotting; the break fit is
/// the intercept-and-trend-break model at the selected date.
pub fn fitted_csv(y: &AnnualSeries, a: &SeriesAnalysis) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["year", "observed", "linear_fit", "break_fit"])?;
    for (t, v) in y.values().iter().enumerate() {
        let lin = a.trend.as_ref().map(|tr| tr.fit.fitted[t]);
        let brk = a.trend_break.as_ref().map(|b| b.fit.fitted[t]);
        w.write_record([
            y.year(t).to_string(),
            v.to_string(),
            lin.map_or(String::new(), |x| x.to_string()),
            brk.map_or(String::new(), |x| x.to_string()),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}
