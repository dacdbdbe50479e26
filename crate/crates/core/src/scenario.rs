//! End-to-end construction of one game instance: placement, action sets and
//! payoff matrix.

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::game::{
    build_payoff_matrix, defense_candidates, enumerate_attacks, AttackModel, DefenseAction,
    PayoffMatrix,
};
use crate::grid::{dc_power_flow, BaseState, Grid, Placement};
use crate::observability::optimal_placement;

/// Placement the defense candidates are derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefenseSource {
    /// The adjacency-only optimal placement, whatever the scenario. Candidates
    /// that already host a PMU in the scenario are dropped.
    #[default]
    Adjacency,
    /// The scenario's own placement.
    Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub use_zib: bool,
    pub model: AttackModel,
    pub defense_source: DefenseSource,
}

impl ScenarioConfig {
    pub fn new(use_zib: bool) -> ScenarioConfig {
        ScenarioConfig {
            use_zib,
            model: AttackModel::default(),
            defense_source: DefenseSource::default(),
        }
    }

    pub fn with_model(self, model: AttackModel) -> ScenarioConfig {
        ScenarioConfig { model, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: Grid,
    pub config: ScenarioConfig,
    pub base: BaseState,
    pub placement: Placement,
    pub matrix: PayoffMatrix,
}

impl Scenario {
    /// Places PMUs optimally and builds the game.
    pub fn build(grid: Grid, config: ScenarioConfig) -> Result<Scenario, ScenarioError> {
        let placement = optimal_placement(&grid, config.use_zib)?;
        Scenario::with_placement(grid, placement, config)
    }

    /// Builds the game on a given placement.
    pub fn with_placement(
        grid: Grid,
        placement: Placement,
        config: ScenarioConfig,
    ) -> Result<Scenario, ScenarioError> {
        config.model.validate()?;
        let base = dc_power_flow(&grid)?;
        let defenses = match config.defense_source {
            DefenseSource::Scenario => defense_candidates(&grid, &placement)?,
            DefenseSource::Adjacency => {
                let reference = if config.use_zib {
                    optimal_placement(&grid, false)?
                } else {
                    placement.clone()
                };
                let kept: Vec<DefenseAction> = defense_candidates(&grid, &reference)?
                    .into_iter()
                    .filter(|d| !placement.contains(d.bus()))
                    .collect();
                if kept.is_empty() {
                    return Err(crate::error::GameError::NoCandidates.into());
                }
                kept
            }
        };
        let attacks = enumerate_attacks(&grid, &placement)?;
        let matrix =
            build_payoff_matrix(&grid, &base, &placement, &attacks, &defenses, &config.model)?;
        Ok(Scenario {
            grid,
            config,
            base,
            placement,
            matrix,
        })
    }

    pub fn label(&self) -> &'static str {
        if self.config.use_zib {
            "with ZIB"
        } else {
            "without ZIB"
        }
    }
}
