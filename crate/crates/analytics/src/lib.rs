//! Statistics for the cooking usability study: the six study metrics, the
//! normality-gated choice between a paired t test and the Wilcoxon
//! signed-rank test, and Table-style group summaries.

pub mod distributions;
mod error;
pub mod records;
pub mod report;
pub mod shapiro;
pub mod stops;
pub mod ttest;
pub mod wilcoxon;

pub use error::{DataError, StatsError};
pub use records::{load_records, read_records, Condition, Group, Metric, TrialRecord};
pub use report::{analyze, summarize, AnalysisReport, SummaryRow, SummaryTable, TestKind, TestReport};
pub use shapiro::{shapiro_wilk, ShapiroWilk};
pub use stops::{count_stops, AttentionEvent, AttentionKind};
pub use ttest::{paired_t, PairedT};
pub use wilcoxon::{wilcoxon_signed_rank, PMethod, Wilcoxon};
