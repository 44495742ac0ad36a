//! Statistical battery for trend detection in annual series: Mann-Kendall,
//! HAC linear-trend regression, single-break models with least-squares date
//! search, the local level model, running year-to-year changes, and a Monte
//! Carlo harness for test size and power.

pub mod breaks;
pub mod cli;
pub mod diagnostics;
pub mod dist;
pub mod local_level;
pub mod mann_kendall;
pub mod monte_carlo;
pub mod regression;
pub mod report;
pub mod series;

pub use breaks::{BreakFit, BreakModelKind, ModelComparison};
pub use local_level::{BreakScanResult, LocalLevelFit};
pub use mann_kendall::{MkOptions, MkResult};
pub use monte_carlo::{DgpSpec, McResult};
pub use regression::{DesignMatrix, HacOptions, TrendFit};
pub use series::{AnnualSeries, DatasetBundle};
