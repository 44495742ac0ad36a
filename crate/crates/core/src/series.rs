//! Annual series data model, CSV ingestion and the airborne-fraction ratio.
//!
//! Every analysis in this crate consumes an [`AnnualSeries`]: a run of
//! values observed on consecutive calendar years with no gaps. Index `t`
//! maps to calendar year `start_year + t`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("no value columns besides `year`")]
    NoValueColumns,
    #[error("no data rows")]
    Empty,
    #[error("row {row}: year {found} does not follow {previous} (years must be consecutive and ascending)")]
    NonConsecutiveYears {
        row: usize,
        previous: i32,
        found: i32,
    },
    #[error("row {row}, column `{column}`: cannot parse `{cell}` as a number")]
    NonNumericCell {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("series `{name}`: value at index {index} is not finite")]
    NonFinite { name: String, index: usize },
    #[error("length mismatch: {left} vs {right} (or misaligned start years)")]
    LengthMismatch { left: usize, right: usize },
    #[error("denominator is not strictly positive at index {0}")]
    NonPositiveDenominator(usize),
}

/// Values observed on consecutive calendar years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualSeries {
    name: String,
    start_year: i32,
    values: Vec<f64>,
}

impl AnnualSeries {
    pub fn new(
        name: impl Into<String>,
        start_year: i32,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let name = name.into();
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite { name, index });
        }
        Ok(Self {
            name,
            start_year,
            values,
        })
    }

    /// Series indexed from year 0; convenient for synthetic data.
    pub fn from_values(values: Vec<f64>) -> Result<Self, SeriesError> {
        Self::new("y", 0, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Calendar year of index `t`.
    pub fn year(&self, t: usize) -> i32 {
        self.start_year + t as i32
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.len()).map(|t| self.year(t))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample standard deviation (n - 1 denominator); zero for a single value.
    pub fn sample_sd(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Same calendar alignment, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, SeriesError> {
        Self::new(self.name.clone(), self.start_year, values)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Emissions-data source of an airborne-fraction series.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    Gcp,
    HN,
    New,
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    Raw,
    Filter,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub source: Source,
    pub variant: Variant,
}

impl SeriesKey {
    pub fn new(source: Source, variant: Variant) -> Self {
        Self { source, variant }
    }

    /// Infers a key from column names such as `gcp_raw`, `hn_filter`,
    /// `H&N-filtered` or `new_raw`. Unrecognized sources become
    /// [`Source::Other`]; a missing variant suffix means raw.
    pub fn infer(column: &str) -> Self {
        let lower = column.trim().to_ascii_lowercase();
        let (stem, variant) = match lower.rsplit_once(['_', '-', ' ']) {
            Some((stem, "raw")) => (stem.to_string(), Variant::Raw),
            Some((stem, "filter" | "filtered" | "filt")) => (stem.to_string(), Variant::Filter),
            _ => (lower.clone(), Variant::Raw),
        };
        let source = match stem.as_str() {
            "gcp" => Source::Gcp,
            "hn" | "h&n" | "handn" | "h_n" => Source::HN,
            "new" => Source::New,
            _ => Source::Other(stem),
        };
        Self { source, variant }
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let source = match &self.source {
            Source::Gcp => "GCP",
            Source::HN => "H&N",
            Source::New => "New",
            Source::Other(s) => s.as_str(),
        };
        let variant = match self.variant {
            Variant::Raw => "raw",
            Variant::Filter => "filter",
        };
        write!(f, "{source} {variant}")
    }
}

/// Which CSV columns become series.
#[derive(Debug, Clone, Default)]
pub enum ColumnSchema {
    /// Every column other than `year`, keys inferred from the header.
    #[default]
    All,
    /// Only the named columns, keys inferred from the header.
    Columns(Vec<String>),
    /// Explicit column → key mapping.
    Mapped(Vec<(String, SeriesKey)>),
}

/// A set of aligned series sharing start year and length, kept in
/// (source, variant) order.
#[derive(Debug, Clone, Default)]
pub struct DatasetBundle {
    entries: Vec<(SeriesKey, AnnualSeries)>,
}

impl DatasetBundle {
    pub fn new(mut entries: Vec<(SeriesKey, AnnualSeries)>) -> Result<Self, SeriesError> {
        if let Some((_, first)) = entries.first() {
            for (_, s) in &entries[1..] {
                if s.len() != first.len() || s.start_year() != first.start_year() {
                    return Err(SeriesError::LengthMismatch {
                        left: first.len(),
                        right: s.len(),
                    });
                }
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(SeriesKey, AnnualSeries)] {
        &self.entries
    }

    pub fn get(&self, key: &SeriesKey) -> Option<&AnnualSeries> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, s)| s)
    }

    pub fn by_name(&self, name: &str) -> Option<&AnnualSeries> {
        self.entries
            .iter()
            .find(|(_, s)| s.name() == name)
            .map(|(_, s)| s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads `year,<series1>,<series2>,...` from `path`.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &ColumnSchema,
) -> Result<DatasetBundle, SeriesError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SeriesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &ColumnSchema) -> Result<DatasetBundle, SeriesError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let year_col = find("year").ok_or_else(|| SeriesError::MissingColumn("year".into()))?;

    let wanted: Vec<(usize, String, SeriesKey)> = match schema {
        ColumnSchema::All => headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != year_col)
            .map(|(i, h)| (i, h.to_string(), SeriesKey::infer(h)))
            .collect(),
        ColumnSchema::Columns(cols) => cols
            .iter()
            .map(|c| {
                find(c)
                    .map(|i| (i, c.clone(), SeriesKey::infer(c)))
                    .ok_or_else(|| SeriesError::MissingColumn(c.clone()))
            })
            .collect::<Result<_, _>>()?,
        ColumnSchema::Mapped(map) => map
            .iter()
            .map(|(c, k)| {
                find(c)
                    .map(|i| (i, c.clone(), k.clone()))
                    .ok_or_else(|| SeriesError::MissingColumn(c.clone()))
            })
            .collect::<Result<_, _>>()?,
    };
    if wanted.is_empty() {
        return Err(SeriesError::NoValueColumns);
    }

    let mut start_year = None;
    let mut previous: Option<i32> = None;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); wanted.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row, header excluded
        let row = r + 1;
        let cell = |i: usize| record.get(i).unwrap_or("");
        let year_cell = cell(year_col);
        let year: i32 = year_cell.parse().map_err(|_| SeriesError::NonNumericCell {
            row,
            column: "year".into(),
            cell: year_cell.to_string(),
        })?;
        match previous {
            Some(p) if year != p + 1 => {
                return Err(SeriesError::NonConsecutiveYears {
                    row,
                    previous: p,
                    found: year,
                })
            }
            None => start_year = Some(year),
            _ => {}
        }
        previous = Some(year);
        for ((i, name, _), col) in wanted.iter().zip(columns.iter_mut()) {
            let raw = cell(*i);
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| SeriesError::NonNumericCell {
                    row,
                    column: name.clone(),
                    cell: raw.to_string(),
                })?;
            col.push(v);
        }
    }
    let start_year = start_year.ok_or(SeriesError::Empty)?;
    let entries = wanted
        .into_iter()
        .zip(columns)
        .map(|((_, name, key), values)| Ok((key, AnnualSeries::new(name, start_year, values)?)))
        .collect::<Result<Vec<_>, SeriesError>>()?;
    DatasetBundle::new(entries)
}

/// Writes series sharing a calendar as `year,<name>...`. Values use the
/// shortest decimal representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(writer: W, series: &[&AnnualSeries]) -> Result<(), SeriesError> {
    let mut w = csv::Writer::from_writer(writer);
    let Some(first) = series.first() else {
        return Err(SeriesError::NoValueColumns);
    };
    for s in &series[1..] {
        if s.len() != first.len() || s.start_year() != first.start_year() {
            return Err(SeriesError::LengthMismatch {
                left: first.len(),
                right: s.len(),
            });
        }
    }
    let mut header = vec!["year".to_string()];
    header.extend(series.iter().map(|s| s.name().to_string()));
    w.write_record(&header)?;
    for t in 0..first.len() {
        let mut row = vec![first.year(t).to_string()];
        row.extend(series.iter().map(|s| s.values()[t].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| SeriesError::Csv(e.into()))?;
    Ok(())
}

/// Element-wise ratio `growth_t / emissions_total_t`.
pub fn compute_af(
    growth: &AnnualSeries,
    emissions_total: &AnnualSeries,
) -> Result<AnnualSeries, SeriesError> {
    if growth.len() != emissions_total.len() || growth.start_year() != emissions_total.start_year()
    {
        return Err(SeriesError::LengthMismatch {
            left: growth.len(),
            right: emissions_total.len(),
        });
    }
    if let Some(t) = emissions_total.values().iter().position(|&e| e <= 0.0) {
        return Err(SeriesError::NonPositiveDenominator(t));
    }
    let values = growth
        .values()
        .iter()
        .zip(emissions_total.values())
        .map(|(g, e)| g / e)
        .collect();
    AnnualSeries::new("af", growth.start_year(), values)
}
