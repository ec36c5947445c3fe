//! Play-through simulation with a tabular Q-learning player.

mod metrics;
mod playthrough;
mod qlearn;
mod summary;

pub use metrics::{
    compute_step_metrics, step_reward, Metric, MetricVector, MetricWeights, Polarity, StepHistory,
    UnknownMetric, WeightError,
};
pub(crate) use playthrough::simulate_compiled;
pub use playthrough::{
    simulate, simulate_observed, PlaythroughReport, PolicyKey, ResourceTotals, SimConfig, StepView,
    TerminationReason, TrainedPolicy, REWARD_LIMIT,
};
pub use qlearn::{q_update, select_action, QTable};
pub use summary::{evaluate, summarize, PlaythroughDigest};

use crate::design::ValidationReport;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SimError {
    #[error("design is invalid")]
    InvalidDesign(ValidationReport),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("metric weights must be finite")]
    InvalidWeights,
    #[error("no valid actions to choose from")]
    NoValidActions,
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::InvalidDesign(_) => "INVALID_DESIGN",
            SimError::InvalidConfig(_) => "INVALID_CONFIG",
            SimError::InvalidWeights => "INVALID_WEIGHTS",
            SimError::NoValidActions => "NO_VALID_ACTIONS",
        }
    }
}
