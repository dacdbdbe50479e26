//! PMU placement and the attacker/defender deployment game.

pub mod equilibrium;
pub mod error;
pub mod evaluation;
pub mod game;
pub mod grid;
pub mod lp;
pub mod matrix;
pub mod observability;
pub mod scenario;

pub use error::{
    EquilibriumError, EvaluationError, GameError, GridError, ObservabilityError, ScenarioError,
};
pub use grid::{dc_power_flow, BaseState, BusId, Grid, Placement};
pub use matrix::Matrix;
