//! Attacker and defender action sets, attack effects and the zero-sum payoff
//! matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::grid::{propagate_angle, BaseState, BusId, Grid, Placement};
use crate::matrix::Matrix;
use crate::observability::{attack_observing_count, observing_count};

/// One measurement reported by the PMU at the attacked bus `u`.
///
/// Ordering puts flows first (by far-end bus) and the angle last, which is the
/// canonical order used when listing subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measurement {
    /// Flow `p_uk` on the line towards bus `k`.
    Flow(BusId),
    /// Phase angle `θ_u`.
    Angle,
}

/// `a = (u, V_u)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttackAction {
    target: BusId,
    manipulated: Vec<Measurement>,
}

impl AttackAction {
    pub fn new(
        grid: &Grid,
        placement: &Placement,
        target: BusId,
        manipulated: impl IntoIterator<Item = Measurement>,
    ) -> Result<AttackAction, GameError> {
        if !placement.contains(target) {
            return Err(GameError::InvalidAttack(format!("bus {target} has no PMU")));
        }
        let set: BTreeSet<Measurement> = manipulated.into_iter().collect();
        if set.is_empty() {
            return Err(GameError::InvalidAttack(
                "no manipulated measurement".into(),
            ));
        }
        for m in &set {
            if let Measurement::Flow(k) = m {
                if grid.line_index(target, *k).is_none() {
                    return Err(GameError::InvalidAttack(format!("no line {target}-{k}")));
                }
            }
        }
        Ok(AttackAction {
            target,
            manipulated: set.into_iter().collect(),
        })
    }

    /// Attacked PMU bus `u`.
    pub fn target(&self) -> BusId {
        self.target
    }

    pub fn manipulated(&self) -> &[Measurement] {
        &self.manipulated
    }

    pub fn manipulates_angle(&self) -> bool {
        self.manipulated.contains(&Measurement::Angle)
    }

    pub fn manipulates_flow(&self, k: BusId) -> bool {
        self.manipulated.contains(&Measurement::Flow(k))
    }

    /// Far ends of the manipulated lines.
    pub fn flow_ends(&self) -> impl Iterator<Item = BusId> + '_ {
        self.manipulated.iter().filter_map(|m| match m {
            Measurement::Flow(k) => Some(*k),
            Measurement::Angle => None,
        })
    }

    /// Human-readable description, e.g. `Lines 6-11, 6-12` or `Line 1-2 + angle 2`.
    pub fn describe(&self) -> String {
        describe_measurements(std::iter::once(self))
    }
}

/// Serialized as `u:{m1,m2,...}` with `p<u>-<k>` for flows and `theta<u>`
/// for the angle.
impl fmt::Display for AttackAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = self.target;
        let parts: Vec<String> = self
            .manipulated
            .iter()
            .map(|m| match m {
                Measurement::Flow(k) => format!("p{u}-{k}"),
                Measurement::Angle => format!("theta{u}"),
            })
            .collect();
        write!(f, "{u}:{{{}}}", parts.join(","))
    }
}

/// Parsed form of an [`AttackAction`] label, not yet checked against a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackLabel {
    pub target: BusId,
    pub manipulated: Vec<Measurement>,
}

impl AttackLabel {
    pub fn resolve(self, grid: &Grid, placement: &Placement) -> Result<AttackAction, GameError> {
        AttackAction::new(grid, placement, self.target, self.manipulated)
    }
}

impl FromStr for AttackLabel {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GameError::InvalidAttack(format!("cannot parse attack label {s:?}"));
        let (u, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let target = BusId(u.trim().parse().map_err(|_| bad())?);
        let body = rest
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(bad)?;
        let mut manipulated = Vec::new();
        for item in body.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            if let Some(bus) = item.strip_prefix("theta") {
                if bus.parse::<u32>().map_err(|_| bad())? != target.0 {
                    return Err(bad());
                }
                manipulated.push(Measurement::Angle);
            } else if let Some(line) = item.strip_prefix('p') {
                let (from, to) = line.split_once('-').ok_or_else(bad)?;
                if from.parse::<u32>().map_err(|_| bad())? != target.0 {
                    return Err(bad());
                }
                manipulated.push(Measurement::Flow(BusId(to.parse().map_err(|_| bad())?)));
            } else {
                return Err(bad());
            }
        }
        Ok(AttackLabel {
            target,
            manipulated,
        })
    }
}

/// Describes a group of attack actions by the lines and angles they touch.
pub fn describe_measurements<'a>(actions: impl IntoIterator<Item = &'a AttackAction>) -> String {
    let mut lines = BTreeSet::new();
    let mut angles = BTreeSet::new();
    for a in actions {
        for m in a.manipulated() {
            match m {
                Measurement::Flow(k) => {
                    lines.insert((a.target().min(*k), a.target().max(*k)));
                }
                Measurement::Angle => {
                    angles.insert(a.target());
                }
            }
        }
    }
    let mut parts = Vec::new();
    if !lines.is_empty() {
        let list: Vec<String> = lines.iter().map(|(i, j)| format!("{i}-{j}")).collect();
        let noun = if lines.len() == 1 { "Line" } else { "Lines" };
        parts.push(format!("{noun} {}", list.join(", ")));
    }
    if !angles.is_empty() {
        let list: Vec<String> = angles.iter().map(|b| b.to_string()).collect();
        let noun = if angles.len() == 1 { "angle" } else { "angles" };
        parts.push(format!("{noun} {}", list.join(", ")));
    }
    let text = parts.join(" + ");
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => text,
    }
}

/// Bus `d` chosen for the additional PMU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DefenseAction(pub BusId);

impl DefenseAction {
    pub fn bus(self) -> BusId {
        self.0
    }
}

impl fmt::Display for DefenseAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How injected data relates to the true measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bias {
    /// `θ + ε_θ`, `p + ε_flow`.
    Additive,
    /// `θ (1 + ε_θ)`, `p (1 + ε_flow)`.
    Relative,
}

impl FromStr for Bias {
    type Err = GameError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "additive" => Ok(Bias::Additive),
            "relative" => Ok(Bias::Relative),
            other => Err(GameError::InvalidModel(format!("unknown bias {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn apply(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => v.iter().fold(0.0, |m, x| f64::max(m, x.abs())),
        }
    }
}

impl FromStr for Norm {
    type Err = GameError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "inf" => Ok(Norm::Linf),
            other => Err(GameError::InvalidModel(format!("unknown norm {other:?}"))),
        }
    }
}

/// Magnitude and shape of the injected false data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackModel {
    pub bias: Bias,
    pub epsilon_theta: f64,
    pub epsilon_flow: f64,
    pub norm: Norm,
}

impl Default for AttackModel {
    /// Flow-proportional 10% bias on flows, 5% on angles, Euclidean effect.
    fn default() -> Self {
        AttackModel {
            bias: Bias::Relative,
            epsilon_theta: 0.05,
            epsilon_flow: 0.1,
            norm: Norm::L2,
        }
    }
}

impl AttackModel {
    pub fn additive(epsilon_theta: f64, epsilon_flow: f64, norm: Norm) -> Self {
        AttackModel {
            bias: Bias::Additive,
            epsilon_theta,
            epsilon_flow,
            norm,
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        for (name, eps) in [
            ("epsilon_theta", self.epsilon_theta),
            ("epsilon_flow", self.epsilon_flow),
        ] {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(GameError::InvalidModel(format!(
                    "{name} must be positive, got {eps}"
                )));
            }
        }
        Ok(())
    }

    /// Both epsilons multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        AttackModel {
            epsilon_theta: self.epsilon_theta * c,
            epsilon_flow: self.epsilon_flow * c,
            ..*self
        }
    }

    fn angle_bias(&self, theta: f64) -> f64 {
        match self.bias {
            Bias::Additive => self.epsilon_theta,
            Bias::Relative => self.epsilon_theta * theta,
        }
    }

    fn flow_bias(&self, flow: f64) -> f64 {
        match self.bias {
            Bias::Additive => self.epsilon_flow,
            Bias::Relative => self.epsilon_flow * flow,
        }
    }
}

/// `Σ_{u ∈ N_PMU} (2^{|L_u|+1} − 1)`.
pub fn attack_count_formula(grid: &Grid, placement: &Placement) -> usize {
    placement
        .buses()
        .iter()
        .map(|u| (1usize << (grid.degree(*u) + 1)) - 1)
        .sum()
}

/// Every nonempty subset of each PMU's measurements. PMUs ascend; subsets of
/// one PMU are listed by size, then lexicographically over
/// `[p_u,k1, p_u,k2, …, θ_u]`.
pub fn enumerate_attacks(
    grid: &Grid,
    placement: &Placement,
) -> Result<Vec<AttackAction>, GameError> {
    if placement.is_empty() {
        return Err(GameError::NoPmu);
    }
    let mut out = Vec::with_capacity(attack_count_formula(grid, placement));
    for &u in placement.buses() {
        let items: Vec<Measurement> = grid
            .neighbors(u)
            .iter()
            .map(|k| Measurement::Flow(*k))
            .chain(std::iter::once(Measurement::Angle))
            .collect();
        let mut masks: Vec<u64> = (1..(1u64 << items.len())).collect();
        // size first, then lexicographic over item positions
        masks.sort_by_key(|m| {
            let positions: Vec<u32> = (0..items.len() as u32)
                .filter(|i| m >> i & 1 == 1)
                .collect();
            (m.count_ones(), positions)
        });
        for mask in masks {
            let subset: Vec<Measurement> = items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, m)| *m)
                .collect();
            out.push(AttackAction {
                target: u,
                manipulated: subset,
            });
        }
    }
    Ok(out)
}

/// For every non-PMU bus `α`: the singly-observed non-PMU buses that would
/// become doubly observed by a PMU at `α`.
pub fn redundancy_sets(grid: &Grid, placement: &Placement) -> BTreeMap<BusId, BTreeSet<BusId>> {
    let complement = placement.complement(grid);
    let single: BTreeSet<BusId> = complement
        .iter()
        .copied()
        .filter(|k| observing_count(grid, placement, *k).expect("bus from grid") == 1)
        .collect();
    complement
        .iter()
        .map(|&alpha| {
            let reach = std::iter::once(alpha).chain(grid.neighbors(alpha).iter().copied());
            (alpha, reach.filter(|k| single.contains(k)).collect())
        })
        .collect()
}

/// Candidate buses for the additional PMU.
///
/// A bus is kept when no other candidate's redundancy set strictly contains
/// its own; among buses with equal sets only the smallest id is kept.
pub fn defense_candidates(
    grid: &Grid,
    placement: &Placement,
) -> Result<Vec<DefenseAction>, GameError> {
    let sets = redundancy_sets(grid, placement);
    if sets.is_empty() {
        return Err(GameError::NoCandidates);
    }
    let mut kept = Vec::new();
    for (&alpha, b_alpha) in &sets {
        let dominated = sets.iter().any(|(&beta, b_beta)| {
            (b_alpha.is_subset(b_beta) && b_alpha.len() < b_beta.len())
                || (b_alpha == b_beta && beta < alpha)
        });
        if !dominated {
            kept.push(DefenseAction(alpha));
        }
    }
    Ok(kept)
}

/// Buses whose estimated angle is corrupted by `a` (`C_a`).
pub fn affected_buses(grid: &Grid, a: &AttackAction) -> BTreeSet<BusId> {
    let mut out: BTreeSet<BusId> = a.flow_ends().collect();
    if a.manipulates_angle() {
        out.insert(a.target());
        out.extend(grid.neighbors(a.target()).iter().copied());
    }
    out
}

/// PMU that supplies the angle estimate of `bus`: the lowest-indexed PMU
/// among the bus and its neighbours.
fn estimating_pmu(grid: &Grid, placement: &Placement, bus: BusId) -> Option<BusId> {
    let own = placement.contains(bus).then_some(bus);
    let adjacent = grid
        .neighbors(bus)
        .iter()
        .copied()
        .find(|b| placement.contains(*b));
    match (own, adjacent) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// `E = Θ − Θ_bad` over all buses.
///
/// `placement` should already include the defensive PMU, if any.
pub fn attack_effect(
    grid: &Grid,
    base: &BaseState,
    placement: &Placement,
    a: &AttackAction,
    model: &AttackModel,
) -> Vec<f64> {
    let u = a.target();
    let theta_u = base.theta(u);
    let reported_theta = if a.manipulates_angle() {
        theta_u + model.angle_bias(theta_u)
    } else {
        theta_u
    };
    let affected = affected_buses(grid, a);
    grid.bus_ids()
        .map(|k| {
            if !affected.contains(&k) || estimating_pmu(grid, placement, k) != Some(u) {
                return 0.0;
            }
            let estimate = if k == u {
                reported_theta
            } else {
                let line = grid.line_between(u, k).expect("estimating PMU is adjacent");
                let p = base.flow(grid, u, k).expect("line exists");
                let reported_p = if a.manipulates_flow(k) {
                    p + model.flow_bias(p)
                } else {
                    p
                };
                propagate_angle(reported_theta, reported_p, line.x)
            };
            base.theta(k) - estimate
        })
        .collect()
}

/// Attacker payoffs `F_A(a, d)` with detection flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    attacks: Vec<AttackAction>,
    defenses: Vec<DefenseAction>,
    values: Matrix,
    detected: Vec<bool>,
    base_detected: Vec<bool>,
}

impl PayoffMatrix {
    pub fn attacks(&self) -> &[AttackAction] {
        &self.attacks
    }

    pub fn defenses(&self) -> &[DefenseAction] {
        &self.defenses
    }

    pub fn rows(&self) -> usize {
        self.attacks.len()
    }

    pub fn cols(&self) -> usize {
        self.defenses.len()
    }

    /// `F_A`.
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// `F_D = −F_A`.
    pub fn defender_values(&self) -> Matrix {
        self.values.map(|v| -v)
    }

    pub fn value(&self, a: usize, d: usize) -> f64 {
        self.values.get(a, d)
    }

    /// `O(a, d) > 1`.
    pub fn is_detected(&self, a: usize, d: usize) -> bool {
        self.detected[a * self.defenses.len() + d]
    }

    /// Detection of attack `a` by the base placement alone.
    pub fn is_detected_without_defense(&self, a: usize) -> bool {
        self.base_detected[a]
    }

    /// Detection indicators of one attack across all defenses.
    pub fn detection_row(&self, a: usize) -> &[bool] {
        let k = self.defenses.len();
        &self.detected[a * k..(a + 1) * k]
    }

    /// 0/1 matrix of detection indicators.
    pub fn indicator_matrix(&self) -> Matrix {
        Matrix::from_vec(
            self.rows(),
            self.cols(),
            self.detected.iter().map(|&d| d as u8 as f64).collect(),
        )
    }

    /// CSV export: header of defense bus ids, one row per attack, cells
    /// `value|detected`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec!["attack".to_string()];
        header.extend(self.defenses.iter().map(|d| d.to_string()));
        w.write_record(&header).expect("in-memory write");
        for (a, attack) in self.attacks.iter().enumerate() {
            let mut record = vec![attack.to_string()];
            for d in 0..self.cols() {
                record.push(format!("{}|{}", self.value(a, d), self.is_detected(a, d)));
            }
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }

    /// Reads a matrix written by [`PayoffMatrix::to_csv`]. Base-placement
    /// detection is recomputed from the grid.
    pub fn from_csv(
        text: &str,
        grid: &Grid,
        placement: &Placement,
    ) -> Result<PayoffMatrix, GameError> {
        let csv_err = |e: csv::Error| GameError::Csv(e.to_string());
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        let defenses = header
            .iter()
            .skip(1)
            .map(|h| {
                h.trim()
                    .parse::<u32>()
                    .map(|b| DefenseAction(BusId(b)))
                    .map_err(|_| GameError::Csv(format!("bad defense header {h:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut attacks = Vec::new();
        let mut values = Vec::new();
        let mut detected = Vec::new();
        for record in r.records() {
            let record = record.map_err(csv_err)?;
            let label: AttackLabel = record.get(0).unwrap_or_default().parse()?;
            attacks.push(label.resolve(grid, placement)?);
            for cell in record.iter().skip(1) {
                let (v, d) = cell
                    .split_once('|')
                    .ok_or_else(|| GameError::Csv(format!("bad cell {cell:?}")))?;
                values.push(
                    v.parse::<f64>()
                        .map_err(|_| GameError::Csv(format!("bad value {v:?}")))?,
                );
                detected.push(
                    d.parse::<bool>()
                        .map_err(|_| GameError::Csv(format!("bad flag {d:?}")))?,
                );
            }
        }
        if values.len() != attacks.len() * defenses.len() {
            return Err(GameError::Csv("row length does not match header".into()));
        }
        let base_detected = attacks
            .iter()
            .map(|a| is_detected(grid, placement, a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PayoffMatrix {
            values: Matrix::from_vec(attacks.len(), defenses.len(), values),
            attacks,
            defenses,
            detected,
            base_detected,
        })
    }
}

fn is_detected(grid: &Grid, placement: &Placement, a: &AttackAction) -> Result<bool, GameError> {
    let affected = affected_buses(grid, a);
    let count = attack_observing_count(grid, placement, &affected).map_err(|e| match e {
        crate::error::ObservabilityError::Grid(g) => GameError::Grid(g),
        other => GameError::InvalidAttack(other.to_string()),
    })?;
    Ok(count > 1)
}

/// Builds `F_A` over `attacks × defenses`.
pub fn build_payoff_matrix(
    grid: &Grid,
    base: &BaseState,
    placement: &Placement,
    attacks: &[AttackAction],
    defenses: &[DefenseAction],
    model: &AttackModel,
) -> Result<PayoffMatrix, GameError> {
    if attacks.is_empty() || defenses.is_empty() {
        return Err(GameError::EmptyActions);
    }
    model.validate()?;
    let defended: Vec<Placement> = defenses.iter().map(|d| placement.with(d.bus())).collect();
    let mut values = Matrix::zeros(attacks.len(), defenses.len());
    let mut detected = Vec::with_capacity(attacks.len() * defenses.len());
    let mut base_detected = Vec::with_capacity(attacks.len());
    for (i, a) in attacks.iter().enumerate() {
        base_detected.push(is_detected(grid, placement, a)?);
        for (j, p) in defended.iter().enumerate() {
            let hit = is_detected(grid, p, a)?;
            detected.push(hit);
            if !hit {
                values.set(
                    i,
                    j,
                    model.norm.apply(&attack_effect(grid, base, p, a, model)),
                );
            }
        }
    }
    Ok(PayoffMatrix {
        attacks: attacks.to_vec(),
        defenses: defenses.to_vec(),
        values,
        detected,
        base_detected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::dc_power_flow;

    fn fourbus() -> Grid {
        Grid::from_json(include_str!("../fixtures/fourbus.grid")).unwrap()
    }

    fn pmus(grid: &Grid, ids: &[u32]) -> Placement {
        Placement::new(grid, ids.iter().map(|i| BusId(*i))).unwrap()
    }

    #[test]
    fn fourbus_attack_listing_matches_published_order() {
        let grid = fourbus();
        let attacks = enumerate_attacks(&grid, &pmus(&grid, &[1])).unwrap();
        let labels: Vec<String> = attacks.iter().map(|a| a.to_string()).collect();
        assert_eq!(
            labels,
            [
                "1:{p1-2}",
                "1:{p1-3}",
                "1:{theta1}",
                "1:{p1-2,p1-3}",
                "1:{p1-2,theta1}",
                "1:{p1-3,theta1}",
                "1:{p1-2,p1-3,theta1}"
            ]
        );
    }

    #[test]
    fn leaf_pmu_has_three_attacks() {
        let grid = fourbus();
        let path = Grid::from_json(
            r#"{"buses":[{"id":1,"injection":0},{"id":2,"injection":0}],
                "lines":[{"from":1,"to":2,"x":0.1}],"slack":1}"#,
        )
        .unwrap();
        assert_eq!(
            enumerate_attacks(&path, &pmus(&path, &[1])).unwrap().len(),
            3
        );
        assert!(matches!(
            enumerate_attacks(&grid, &Placement::empty()),
            Err(GameError::NoPmu)
        ));
    }

    #[test]
    fn labels_round_trip() {
        let grid = fourbus();
        let p = pmus(&grid, &[1]);
        for a in enumerate_attacks(&grid, &p).unwrap() {
            let parsed: AttackLabel = a.to_string().parse().unwrap();
            assert_eq!(parsed.resolve(&grid, &p).unwrap(), a);
        }
        assert!("1:{p2-3}".parse::<AttackLabel>().is_err());
        assert!("x".parse::<AttackLabel>().is_err());
    }

    #[test]
    fn affected_buses_follow_the_propagation_rule() {
        let grid = fourbus();
        let p = pmus(&grid, &[1]);
        let flow = AttackAction::new(&grid, &p, BusId(1), [Measurement::Flow(BusId(2))]).unwrap();
        assert_eq!(affected_buses(&grid, &flow), [BusId(2)].into());
        let angle = AttackAction::new(&grid, &p, BusId(1), [Measurement::Angle]).unwrap();
        assert_eq!(
            affected_buses(&grid, &angle),
            [BusId(1), BusId(2), BusId(3)].into()
        );
        let all = AttackAction::new(
            &grid,
            &p,
            BusId(1),
            [
                Measurement::Flow(BusId(2)),
                Measurement::Flow(BusId(3)),
                Measurement::Angle,
            ],
        )
        .unwrap();
        assert_eq!(
            affected_buses(&grid, &all),
            [BusId(1), BusId(2), BusId(3)].into()
        );
    }

    #[test]
    fn additive_flow_bias_moves_only_the_far_bus() {
        let grid = fourbus();
        let base = dc_power_flow(&grid).unwrap();
        let p = pmus(&grid, &[1]);
        let model = AttackModel::additive(0.05, 0.1, Norm::L2);
        let a = AttackAction::new(&grid, &p, BusId(1), [Measurement::Flow(BusId(2))]).unwrap();
        let e = attack_effect(&grid, &base, &p, &a, &model);
        assert!((e[1] - 0.01).abs() < 1e-12, "{e:?}");
        assert!(e.iter().enumerate().all(|(i, v)| i == 1 || *v == 0.0));
    }

    #[test]
    fn additive_angle_bias_propagates_unchanged() {
        let grid = fourbus();
        let base = dc_power_flow(&grid).unwrap();
        let p = pmus(&grid, &[1]);
        let model = AttackModel::additive(0.05, 0.1, Norm::L2);
        let a = AttackAction::new(&grid, &p, BusId(1), [Measurement::Angle]).unwrap();
        let e = attack_effect(&grid, &base, &p, &a, &model);
        for (i, v) in e.iter().enumerate() {
            let expected = if i < 3 { -0.05 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "bus {} -> {v}", i + 1);
        }
    }

    #[test]
    fn relative_flow_bias_scales_with_the_angle_drop() {
        let grid = fourbus();
        let base = dc_power_flow(&grid).unwrap();
        let p = pmus(&grid, &[1]);
        let a = AttackAction::new(&grid, &p, BusId(1), [Measurement::Flow(BusId(3))]).unwrap();
        let e = attack_effect(&grid, &base, &p, &a, &AttackModel::default());
        let drop = base.theta(BusId(1)) - base.theta(BusId(3));
        assert!((e[2] - 0.1 * drop).abs() < 1e-12);
    }

    #[test]
    fn fourbus_detection_by_a_pmu_on_bus_four() {
        let grid = fourbus();
        let base = dc_power_flow(&grid).unwrap();
        let p = pmus(&grid, &[1]);
        let attacks = enumerate_attacks(&grid, &p).unwrap();
        let m = build_payoff_matrix(
            &grid,
            &base,
            &p,
            &attacks,
            &[DefenseAction(BusId(4))],
            &AttackModel::default(),
        )
        .unwrap();
        // p12 corrupts bus 2, watched by PMUs 1 and 4
        assert!(m.is_detected(0, 0));
        assert_eq!(m.value(0, 0), 0.0);
        // p13 corrupts bus 3, also adjacent to bus 4 through line 3-4
        assert!(m.is_detected(1, 0));
        // nothing is detected by PMU 1 alone
        assert!((0..m.rows()).all(|a| !m.is_detected_without_defense(a)));
    }

    #[test]
    fn model_validation() {
        assert!(AttackModel::default().validate().is_ok());
        assert!(AttackModel::additive(0.0, 0.1, Norm::L1)
            .validate()
            .is_err());
        assert!(AttackModel::additive(0.1, f64::NAN, Norm::L1)
            .validate()
            .is_err());
    }

    #[test]
    fn describe_groups_lines_and_angles() {
        let grid = Grid::from_json(include_str!("../fixtures/ieee14.grid")).unwrap();
        let p = pmus(&grid, &[2, 6, 7, 9]);
        let six = AttackAction::new(
            &grid,
            &p,
            BusId(6),
            [BusId(11), BusId(12), BusId(13)].map(Measurement::Flow),
        )
        .unwrap();
        assert_eq!(six.describe(), "Lines 6-11, 6-12, 6-13");
        let mixed = AttackAction::new(
            &grid,
            &p,
            BusId(2),
            [Measurement::Flow(BusId(1)), Measurement::Angle],
        )
        .unwrap();
        assert_eq!(mixed.describe(), "Line 1-2 + angle 2");
    }
}
