//! Statistics over traces and delay records: windowed rates, order
//! statistics, interval distributions and delay tables.

mod rate;
mod report;
mod stats;
mod table;

use thiserror::Error;

pub use rate::{sliding_rate, windowed_rate, windowed_rate_by, RateSample, RateSeries};
pub use report::{round_dp, AnalysisWindow, DelayStats, LayerRates, StatsSummary};
pub use stats::{
    interval_cdf, interval_histogram, mpdu_gaps, summary, threshold_fraction, IntervalCdf, Summary,
};
pub use table::{delay_table, DelayRow, DelayTable};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("invalid input: {0}")]
    Input(String),
}
