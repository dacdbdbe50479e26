use thiserror::Error;

use crate::grid::BusId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("grid has no buses")]
    Empty,
    #[error("bus ids must be 1..n without gaps: expected {expected}, found {found}")]
    BusNumbering { expected: BusId, found: BusId },
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("line from bus {0} to itself")]
    SelfLoop(BusId),
    #[error("duplicate line {from}-{to}")]
    DuplicateLine { from: BusId, to: BusId },
    #[error("line {from}-{to} has non-positive reactance {x}")]
    NonPositiveReactance { from: BusId, to: BusId, x: f64 },
    #[error("zero-injection bus {bus} has injection {injection}")]
    ZibInjection { bus: BusId, injection: f64 },
    #[error("bus {bus} has invalid placement weight {weight}")]
    NegativeWeight { bus: BusId, weight: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("grid is disconnected: bus {0} unreachable from bus 1")]
    Disconnected(BusId),
    #[error("injections sum to {0}, expected 0")]
    Unbalanced(f64),
    #[error("DC power flow system is singular")]
    Singular,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservabilityError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("affected bus set is empty")]
    EmptyAffected,
    #[error("no placement achieves full observability")]
    Infeasible,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("placement has no PMU to attack")]
    NoPmu,
    #[error("every bus already hosts a PMU; no defense candidates")]
    NoCandidates,
    #[error("invalid attack action: {0}")]
    InvalidAttack(String),
    #[error("invalid attack model: {0}")]
    InvalidModel(String),
    #[error("empty action set")]
    EmptyActions,
    #[error("malformed payoff CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("action index {index} out of range for {actions} actions")]
    ActionOutOfRange { index: usize, actions: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("empty payoff matrix")]
    EmptyMatrix,
    #[error("linear program failed: {0}")]
    Solver(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("defense action set is empty")]
    EmptyDefenseSet,
    #[error("inconsistent scenario inputs: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Observability(#[from] ObservabilityError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}
