//! Dataset summaries, sampling traces, run comparisons and charts.

pub mod compare;
pub mod hist;
pub mod svg;
pub mod trace;

pub use compare::{compare, compare_dirs, Comparison, CurvePoint, StrategySummary};
pub use hist::{class_summaries, ClassSummary};
pub use trace::{run_trace, TraceConfig, TraceReport, WindowSummary};
