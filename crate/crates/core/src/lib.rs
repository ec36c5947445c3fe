//! Co-creative game-system design engine.
//!
//! - [`design`]: the component model (resources, actions, states,
//!   transitions, taps, drains, converters), validation, the JSON file
//!   format and the resource-flow rules.
//! - [`sim`]: play-through simulation with a Q-learning player scored by
//!   ten weighted metrics.
//! - [`evolution`]: random design sampling, the numeric balancer and the
//!   structural generator, with optional human candidate selection.
//! - [`analysis`]: expressive-range and controllability studies.

pub mod analysis;
pub mod design;
pub mod evolution;
pub mod seeds;
pub mod sim;
