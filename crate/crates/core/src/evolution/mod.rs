//! Random design sampling and the genetic balancer and generator.

mod chromosome;
mod ga;
mod mutation;
mod sampler;

pub use chromosome::{NumericChromosome, StructuralChromosome};
pub use ga::{
    balance, fitness, generate, ArgmaxSelector, Candidate, CandidateSelector, EvolutionConfig,
    EvolutionResult, GenerationStats, Member, Selection,
};
pub use mutation::{legal_edits, mutate_numbers, mutate_numbers_except, mutate_structure, Edit};
pub use sampler::{sample_random_design, CapsError, SamplerCaps};

use crate::design::ValidationReport;

#[derive(Debug, Clone, thiserror::Error)]
pub enum EvolutionError {
    #[error("design is invalid")]
    InvalidDesign(ValidationReport),
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("no structural edit is legal under the frozen categories and caps")]
    NoLegalEdit,
    #[error("selector chose candidate {index} but only {shown} were shown")]
    InvalidChoice { index: usize, shown: usize },
    #[error("run aborted by the selector")]
    SelectorAborted(Box<EvolutionResult>),
}

impl EvolutionError {
    pub fn code(&self) -> &'static str {
        match self {
            EvolutionError::InvalidDesign(_) => "INVALID_DESIGN",
            EvolutionError::InvalidConfig(_) => "INVALID_CONFIG",
            EvolutionError::NoLegalEdit => "NO_LEGAL_EDIT",
            EvolutionError::InvalidChoice { .. } => "INDEX_OUT_OF_RANGE",
            EvolutionError::SelectorAborted(_) => "SELECTOR_ABORTED",
        }
    }

    /// Best-so-far result of an aborted run.
    pub fn partial_result(&self) -> Option<&EvolutionResult> {
        match self {
            EvolutionError::SelectorAborted(r) => Some(r),
            _ => None,
        }
    }
}
