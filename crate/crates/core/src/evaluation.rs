//! Detection rates at an equilibrium and for baseline defenses.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::equilibrium::MixedStrategy;
use crate::error::{EquilibriumError, EvaluationError};
use crate::game::{describe_measurements, PayoffMatrix};
use crate::grid::Placement;

/// Probabilities at or below this are left out of the aggregated tables.
pub const TABLE_SUPPORT_TOL: f64 = 1e-9;

fn check(
    m: &PayoffMatrix,
    attacker: &MixedStrategy,
    defender: Option<&MixedStrategy>,
) -> Result<(), EvaluationError> {
    if m.cols() == 0 {
        return Err(EvaluationError::EmptyDefenseSet);
    }
    if attacker.len() != m.rows() {
        return Err(EquilibriumError::DimensionMismatch {
            expected: m.rows(),
            got: attacker.len(),
        }
        .into());
    }
    if let Some(d) = defender {
        if d.len() != m.cols() {
            return Err(EquilibriumError::DimensionMismatch {
                expected: m.cols(),
                got: d.len(),
            }
            .into());
        }
    }
    Ok(())
}

/// `Pr[O(a,d) > 1] = Σ ρ_a μ_d 1[detected(a,d)]`.
pub fn detection_rate(
    m: &PayoffMatrix,
    attacker: &MixedStrategy,
    defender: &MixedStrategy,
) -> Result<f64, EvaluationError> {
    check(m, attacker, Some(defender))?;
    let mut rate = 0.0;
    for a in 0..m.rows() {
        let row: f64 = m
            .detection_row(a)
            .iter()
            .zip(defender.probabilities())
            .filter(|(hit, _)| **hit)
            .map(|(_, p)| p)
            .sum();
        rate += attacker.get(a) * row;
    }
    Ok(rate)
}

/// `Pr[O(a,d) = 1]`, the complement of [`detection_rate`].
pub fn undetected_rate(
    m: &PayoffMatrix,
    attacker: &MixedStrategy,
    defender: &MixedStrategy,
) -> Result<f64, EvaluationError> {
    Ok(1.0 - detection_rate(m, attacker, defender)?)
}

/// Detection rate when the defender picks uniformly from its candidates.
pub fn naive_detection_rate(
    m: &PayoffMatrix,
    attacker: &MixedStrategy,
) -> Result<f64, EvaluationError> {
    check(m, attacker, None)?;
    detection_rate(m, attacker, &MixedStrategy::uniform(m.cols()))
}

/// Detection rate of the base placement with no extra PMU.
pub fn no_defense_rate(m: &PayoffMatrix, attacker: &MixedStrategy) -> Result<f64, EvaluationError> {
    check(m, attacker, None)?;
    Ok((0..m.rows())
        .filter(|a| m.is_detected_without_defense(*a))
        .map(|a| attacker.get(a))
        .sum())
}

/// Attack rows merged by identical detection vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub label: String,
    pub attacks: Vec<String>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseRow {
    pub bus: u32,
    pub probability: f64,
}

/// Supported attacks grouped by their detection vectors, in order of first
/// appearance.
pub fn aggregate_attacks(m: &PayoffMatrix, attacker: &MixedStrategy) -> Vec<AttackRow> {
    let mut groups: Vec<(Vec<bool>, Vec<usize>)> = Vec::new();
    for a in attacker.support(TABLE_SUPPORT_TOL) {
        let key = m.detection_row(a).to_vec();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(a),
            None => groups.push((key, vec![a])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| AttackRow {
            label: describe_measurements(members.iter().map(|a| &m.attacks()[*a])),
            attacks: members
                .iter()
                .map(|a| m.attacks()[*a].to_string())
                .collect(),
            probability: members.iter().map(|a| attacker.get(*a)).sum(),
        })
        .collect()
}

pub fn defense_table(m: &PayoffMatrix, defender: &MixedStrategy) -> Vec<DefenseRow> {
    defender
        .support(TABLE_SUPPORT_TOL)
        .into_iter()
        .map(|d| DefenseRow {
            bus: m.defenses()[d].bus().0,
            probability: defender.get(d),
        })
        .collect()
}

fn round4(v: f64) -> f64 {
    // adding zero clears the sign of an empty-sum -0.0
    (v * 1e4).round() / 1e4 + 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub scenario: String,
    pub solver: String,
    pub placement: Vec<u32>,
    pub defense_candidates: Vec<u32>,
    pub value: f64,
    pub attacker_table: Vec<AttackRow>,
    pub defender_table: Vec<DefenseRow>,
    pub detection_rate: f64,
    pub naive_rate: f64,
    pub no_defense_rate: f64,
    /// NE rate minus naive rate.
    pub improvement: f64,
}

/// Assembles the report for one scenario and one strategy pair. Rates are
/// rounded to four decimals.
pub fn build_report(
    scenario: &str,
    solver: &str,
    placement: &Placement,
    m: &PayoffMatrix,
    attacker: &MixedStrategy,
    defender: &MixedStrategy,
) -> Result<DetectionReport, EvaluationError> {
    check(m, attacker, Some(defender))?;
    if let Some(a) = m.attacks().iter().find(|a| !placement.contains(a.target())) {
        return Err(EvaluationError::Inconsistent(format!(
            "attack {a} targets a bus without a PMU"
        )));
    }
    if let Some(d) = m.defenses().iter().find(|d| placement.contains(d.bus())) {
        return Err(EvaluationError::Inconsistent(format!(
            "defense bus {d} already hosts a PMU"
        )));
    }
    let rate = detection_rate(m, attacker, defender)?;
    let naive = naive_detection_rate(m, attacker)?;
    Ok(DetectionReport {
        scenario: scenario.to_string(),
        solver: solver.to_string(),
        placement: placement.buses().iter().map(|b| b.0).collect(),
        defense_candidates: m.defenses().iter().map(|d| d.bus().0).collect(),
        value: crate::equilibrium::expected_payoff(m.values(), attacker, defender)?,
        attacker_table: aggregate_attacks(m, attacker)
            .into_iter()
            .map(|r| AttackRow {
                probability: round4(r.probability),
                ..r
            })
            .collect(),
        defender_table: defense_table(m, defender)
            .into_iter()
            .map(|r| DefenseRow {
                probability: round4(r.probability),
                ..r
            })
            .collect(),
        detection_rate: round4(rate),
        naive_rate: round4(naive),
        no_defense_rate: round4(no_defense_rate(m, attacker)?),
        improvement: round4(rate - naive),
    })
}

impl DetectionReport {
    /// Plain-text tables with percentages.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Scenario: {} ({})", self.scenario, self.solver);
        let list = |v: &[u32]| {
            v.iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(out, "PMU buses: {}", list(&self.placement));
        let _ = writeln!(
            out,
            "Defense candidates: {}",
            list(&self.defense_candidates)
        );
        let _ = writeln!(out, "Game value: {:.6}", self.value);
        let _ = writeln!(out, "\n{:<32} {:>11}", "Attacker action", "Probability");
        for row in &self.attacker_table {
            let _ = writeln!(out, "{:<32} {:>11.4}", row.label, row.probability);
        }
        let _ = writeln!(out, "\n{:<32} {:>11}", "Defender action", "Probability");
        for row in &self.defender_table {
            let _ = writeln!(
                out,
                "{:<32} {:>11.4}",
                format!("Bus {}", row.bus),
                row.probability
            );
        }
        let _ = writeln!(out, "\n{:<32} {:>11}", "Defense", "Detection");
        let pct = |v: f64| format!("{:.2}%", v * 100.0);
        let _ = writeln!(
            out,
            "{:<32} {:>11}",
            "Equilibrium",
            pct(self.detection_rate)
        );
        let _ = writeln!(
            out,
            "{:<32} {:>11}",
            "Naive (uniform)",
            pct(self.naive_rate)
        );
        let _ = writeln!(
            out,
            "{:<32} {:>11}",
            "No additional PMU",
            pct(self.no_defense_rate)
        );
        let _ = writeln!(
            out,
            "{:<32} {:>11}",
            "Improvement over naive",
            pct(self.improvement)
        );
        out
    }

    /// `strategy,rate` rows for plotting.
    pub fn rates_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["strategy", "rate"])
            .expect("in-memory write");
        for (name, rate) in [
            ("equilibrium", self.detection_rate),
            ("naive", self.naive_rate),
            ("none", self.no_defense_rate),
        ] {
            w.write_record([name.to_string(), format!("{rate:.4}")])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }
}
