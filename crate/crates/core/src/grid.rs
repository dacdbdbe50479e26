//! Power network model: buses, lines, PMU placements and the base-case DC
//! power flow that supplies the "true" angles and line flows.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// Tolerance on the net injection balance required by [`dc_power_flow`].
pub const BALANCE_TOLERANCE: f64 = 1e-6;

/// 1-based bus identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl BusId {
    /// Zero-based position of the bus in per-bus vectors.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Self {
        BusId(index as u32 + 1)
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    /// Net real power injection in per-unit.
    pub injection: f64,
    pub zib: bool,
}

/// Undirected line stored with `from < to`. Flow signs follow that direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    /// Series reactance in per-unit.
    pub x: f64,
}

impl Line {
    /// The endpoint opposite to `bus`, if `bus` is an endpoint.
    pub fn other(&self, bus: BusId) -> Option<BusId> {
        if bus == self.from {
            Some(self.to)
        } else if bus == self.to {
            Some(self.from)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    slack: BusId,
    weights: Vec<f64>,
    adjacency: Vec<BTreeSet<BusId>>,
    line_lookup: HashMap<(BusId, BusId), usize>,
}

fn canonical(a: BusId, b: BusId) -> (BusId, BusId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Grid {
    /// Builds a grid and checks every structural invariant.
    ///
    /// Bus ids must be exactly `1..=n`. Lines may be given in either
    /// orientation; they are stored canonically. Missing weights default to 1.
    pub fn new(
        mut buses: Vec<Bus>,
        lines: Vec<Line>,
        slack: BusId,
        weights: &BTreeMap<BusId, f64>,
    ) -> Result<Grid, GridError> {
        if buses.is_empty() {
            return Err(GridError::Empty);
        }
        buses.sort_by_key(|b| b.id);
        for (pos, bus) in buses.iter().enumerate() {
            if bus.id != BusId::from_index(pos) {
                return Err(GridError::BusNumbering {
                    expected: BusId::from_index(pos),
                    found: bus.id,
                });
            }
            if !bus.injection.is_finite() {
                return Err(GridError::NonFinite(format!("injection of bus {}", bus.id)));
            }
            if bus.zib && bus.injection != 0.0 {
                return Err(GridError::ZibInjection {
                    bus: bus.id,
                    injection: bus.injection,
                });
            }
        }
        let n = buses.len();
        let known = |b: BusId| b.0 >= 1 && (b.0 as usize) <= n;
        if !known(slack) {
            return Err(GridError::UnknownBus(slack));
        }

        let mut stored = Vec::with_capacity(lines.len());
        let mut line_lookup = HashMap::new();
        let mut adjacency = vec![BTreeSet::new(); n];
        for line in lines {
            for end in [line.from, line.to] {
                if !known(end) {
                    return Err(GridError::UnknownBus(end));
                }
            }
            if line.from == line.to {
                return Err(GridError::SelfLoop(line.from));
            }
            if !(line.x.is_finite() && line.x > 0.0) {
                return Err(GridError::NonPositiveReactance {
                    from: line.from,
                    to: line.to,
                    x: line.x,
                });
            }
            let (from, to) = canonical(line.from, line.to);
            if line_lookup.insert((from, to), stored.len()).is_some() {
                return Err(GridError::DuplicateLine { from, to });
            }
            adjacency[from.index()].insert(to);
            adjacency[to.index()].insert(from);
            stored.push(Line {
                from,
                to,
                x: line.x,
            });
        }

        let mut weight_vec = vec![1.0; n];
        for (&bus, &w) in weights {
            if !known(bus) {
                return Err(GridError::UnknownBus(bus));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(GridError::NegativeWeight { bus, weight: w });
            }
            weight_vec[bus.index()] = w;
        }

        let grid = Grid {
            buses,
            lines: stored,
            slack,
            weights: weight_vec,
            adjacency,
            line_lookup,
        };
        if let Some(unreached) = grid.first_unreachable() {
            return Err(GridError::Disconnected(unreached));
        }
        Ok(grid)
    }

    /// Parses the JSON grid document.
    pub fn from_json(source: &str) -> Result<Grid, GridError> {
        let doc: GridDocument = serde_json::from_str(source).map_err(|e| GridError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        doc.into_grid()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Grid, GridError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GridError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Grid::from_json(&text)
    }

    fn first_unreachable(&self) -> Option<BusId> {
        let n = self.buses.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for nb in &self.adjacency[i] {
                if !seen[nb.index()] {
                    seen[nb.index()] = true;
                    queue.push_back(nb.index());
                }
            }
        }
        seen.iter().position(|s| !s).map(BusId::from_index)
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn bus_ids(&self) -> impl Iterator<Item = BusId> + '_ {
        self.buses.iter().map(|b| b.id)
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn slack(&self) -> BusId {
        self.slack
    }

    pub fn contains(&self, bus: BusId) -> bool {
        bus.0 >= 1 && (bus.0 as usize) <= self.buses.len()
    }

    fn check(&self, bus: BusId) -> Result<(), GridError> {
        if self.contains(bus) {
            Ok(())
        } else {
            Err(GridError::UnknownBus(bus))
        }
    }

    pub fn bus(&self, bus: BusId) -> Result<&Bus, GridError> {
        self.check(bus)?;
        Ok(&self.buses[bus.index()])
    }

    pub fn zib(&self) -> BTreeSet<BusId> {
        self.buses.iter().filter(|b| b.zib).map(|b| b.id).collect()
    }

    pub fn is_zib(&self, bus: BusId) -> bool {
        self.contains(bus) && self.buses[bus.index()].zib
    }

    /// Placement cost `w_m` of a PMU at `bus`.
    pub fn weight(&self, bus: BusId) -> f64 {
        self.weights[bus.index()]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Adjacent buses `A_i` of bus `i`. Never contains `i` itself.
    pub fn adjacency(&self, bus: BusId) -> Result<&BTreeSet<BusId>, GridError> {
        self.check(bus)?;
        Ok(&self.adjacency[bus.index()])
    }

    /// Unchecked variant of [`Grid::adjacency`] for ids already validated.
    pub(crate) fn neighbors(&self, bus: BusId) -> &BTreeSet<BusId> {
        &self.adjacency[bus.index()]
    }

    pub fn degree(&self, bus: BusId) -> usize {
        self.adjacency[bus.index()].len()
    }

    /// Index into [`Grid::lines`] of the line joining `a` and `b`.
    pub fn line_index(&self, a: BusId, b: BusId) -> Option<usize> {
        self.line_lookup.get(&canonical(a, b)).copied()
    }

    pub fn line_between(&self, a: BusId, b: BusId) -> Option<&Line> {
        self.line_index(a, b).map(|i| &self.lines[i])
    }
}

/// Parses and validates a grid document.
pub fn load_grid(source: &str) -> Result<Grid, GridError> {
    Grid::from_json(source)
}

/// On-disk grid format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub buses: Vec<BusRecord>,
    pub lines: Vec<LineRecord>,
    pub slack: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmu_weights: Option<BTreeMap<u32, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: u32,
    pub injection: f64,
    #[serde(default)]
    pub zib: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub from: u32,
    pub to: u32,
    pub x: f64,
}

impl Grid {
    /// The on-disk form; weights are written only when some bus differs from 1.
    pub fn to_document(&self) -> GridDocument {
        let weighted = self.weights.iter().any(|w| *w != 1.0);
        GridDocument {
            buses: self
                .buses
                .iter()
                .map(|b| BusRecord {
                    id: b.id.0,
                    injection: b.injection,
                    zib: b.zib,
                })
                .collect(),
            lines: self
                .lines
                .iter()
                .map(|l| LineRecord {
                    from: l.from.0,
                    to: l.to.0,
                    x: l.x,
                })
                .collect(),
            slack: self.slack.0,
            pmu_weights: weighted.then(|| self.bus_ids().map(|b| (b.0, self.weight(b))).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("grid serializes")
    }
}

impl GridDocument {
    pub fn into_grid(self) -> Result<Grid, GridError> {
        let buses = self
            .buses
            .into_iter()
            .map(|b| Bus {
                id: BusId(b.id),
                injection: b.injection,
                zib: b.zib,
            })
            .collect();
        let lines = self
            .lines
            .into_iter()
            .map(|l| Line {
                from: BusId(l.from),
                to: BusId(l.to),
                x: l.x,
            })
            .collect();
        let weights = self
            .pmu_weights
            .unwrap_or_default()
            .into_iter()
            .map(|(b, w)| (BusId(b), w))
            .collect();
        Grid::new(buses, lines, BusId(self.slack), &weights)
    }
}

/// Set of buses hosting a PMU (`N_PMU`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Placement {
    pmus: BTreeSet<BusId>,
}

impl Placement {
    pub fn new(
        grid: &Grid,
        buses: impl IntoIterator<Item = BusId>,
    ) -> Result<Placement, GridError> {
        let pmus: BTreeSet<BusId> = buses.into_iter().collect();
        if let Some(&bad) = pmus.iter().find(|b| !grid.contains(**b)) {
            return Err(GridError::UnknownBus(bad));
        }
        Ok(Placement { pmus })
    }

    pub fn empty() -> Placement {
        Placement::default()
    }

    pub fn contains(&self, bus: BusId) -> bool {
        self.pmus.contains(&bus)
    }

    pub fn buses(&self) -> &BTreeSet<BusId> {
        &self.pmus
    }

    pub fn len(&self) -> usize {
        self.pmus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmus.is_empty()
    }

    /// This placement plus one additional PMU.
    pub fn with(&self, extra: BusId) -> Placement {
        let mut pmus = self.pmus.clone();
        pmus.insert(extra);
        Placement { pmus }
    }

    /// `Σ w_m y_m`.
    pub fn cost(&self, grid: &Grid) -> f64 {
        self.pmus.iter().map(|b| grid.weight(*b)).sum()
    }

    /// Buses without a PMU (`N̄_PMU`), ascending.
    pub fn complement(&self, grid: &Grid) -> Vec<BusId> {
        grid.bus_ids().filter(|b| !self.contains(*b)).collect()
    }
}

/// Angles and line flows of the base operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseState {
    theta: Vec<f64>,
    flows: Vec<f64>,
}

impl BaseState {
    /// Phase angle of `bus` in radians.
    pub fn theta(&self, bus: BusId) -> f64 {
        self.theta[bus.index()]
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    /// Flows per line in [`Grid::lines`] order, positive from `from` to `to`.
    pub fn flows(&self) -> &[f64] {
        &self.flows
    }

    /// Signed flow `p_ij` leaving `i` towards `j`.
    pub fn flow(&self, grid: &Grid, i: BusId, j: BusId) -> Option<f64> {
        let idx = grid.line_index(i, j)?;
        let p = self.flows[idx];
        Some(if grid.lines()[idx].from == i { p } else { -p })
    }
}

/// `θ_j = θ_i − p_ij · x_ij`.
pub fn propagate_angle(theta_i: f64, p_ij: f64, x_ij: f64) -> f64 {
    theta_i - p_ij * x_ij
}

/// Solves `B' θ = P` with the slack angle pinned at zero.
pub fn dc_power_flow(grid: &Grid) -> Result<BaseState, GridError> {
    let total: f64 = grid.buses().iter().map(|b| b.injection).sum();
    if total.abs() > BALANCE_TOLERANCE {
        return Err(GridError::Unbalanced(total));
    }
    let n = grid.bus_count();
    let slack = grid.slack().index();
    // reduced position of every non-slack bus
    let reduced: Vec<Option<usize>> = (0..n)
        .scan(0usize, |next, i| {
            Some(if i == slack {
                None
            } else {
                *next += 1;
                Some(*next - 1)
            })
        })
        .collect();

    let mut theta = vec![0.0; n];
    if n > 1 {
        let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
        for line in grid.lines() {
            let y = 1.0 / line.x;
            let (i, j) = (reduced[line.from.index()], reduced[line.to.index()]);
            if let Some(i) = i {
                b[(i, i)] += y;
            }
            if let Some(j) = j {
                b[(j, j)] += y;
            }
            if let (Some(i), Some(j)) = (i, j) {
                b[(i, j)] -= y;
                b[(j, i)] -= y;
            }
        }
        let p = DVector::from_iterator(
            n - 1,
            grid.buses()
                .iter()
                .filter(|bus| bus.id.index() != slack)
                .map(|bus| bus.injection),
        );
        let solved = b.lu().solve(&p).ok_or(GridError::Singular)?;
        for (i, slot) in reduced.iter().enumerate() {
            if let Some(r) = slot {
                theta[i] = solved[*r];
            }
        }
    }
    let flows = grid
        .lines()
        .iter()
        .map(|l| (theta[l.from.index()] - theta[l.to.index()]) / l.x)
        .collect();
    Ok(BaseState { theta, flows })
}
