//! EVOC: an agent-based model of cultural evolution.
//!
//! Agents on a toroidal grid invent new actions or imitate the actions of
//! their neighbours (and of a broadcasting leader). Actions are six ternary
//! body-part positions scored by an epistatic fitness landscape. The
//! [`experiments`] module sweeps leader and follower creativity and
//! aggregates fitness and diversity over many seeded runs.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod fitness;
pub mod metrics;
pub mod model;
pub mod operators;
pub mod output;
pub mod seed;

pub use engine::{run, step, RunConfig, Simulation, Trajectory};
pub use error::{EvocError, Result};
pub use experiments::{ExperimentSpec, Metric, SeriesTable, SweepParam};
pub use fitness::{EpistaticLandscape, FitnessScore, FitnessTable, Landscape};
pub use metrics::IterationRecord;
pub use model::{Action, AgentParams, AgentState, Neighborhood, Part, Role, World};
pub use operators::OperatorState;
