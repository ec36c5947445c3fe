//! The design-space studies: expressive range and weight controllability.

mod controllability;
mod export;
mod expressive;
mod signed_rank;

pub use controllability::{
    controllability, expected_direction, sample_playable_games, ControllabilityReport, MetricControl,
    OptimizerMode,
};
pub use export::{export_report, render_report, ExportError, ExportFormat, Tabular};
pub use expressive::{
    expressive_range, study_design, DesignRow, ExpressiveRangeReport, Histogram, MetricDistribution,
    MetricStats, HISTOGRAM_BINS,
};
pub use signed_rank::{signed_rank_test, Direction};
