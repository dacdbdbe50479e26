//! Observability predicates, observation counts and minimum-cost PMU placement.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ObservabilityError;
use crate::grid::{BusId, Grid, Placement};

/// Per-bus observability flags `g_m` (or `g′_m` after ZIB refinement).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservabilityVector(Vec<bool>);

impl ObservabilityVector {
    pub fn is_observed(&self, bus: BusId) -> bool {
        self.0[bus.index()]
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&o| o)
    }

    pub fn observed_count(&self) -> usize {
        self.0.iter().filter(|&&o| o).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The vector as 0/1 entries.
    pub fn bits(&self) -> Vec<u8> {
        self.0.iter().map(|&o| o as u8).collect()
    }

    /// Elementwise `self ≥ other`.
    pub fn dominates(&self, other: &ObservabilityVector) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a || !*b)
    }
}

/// `g_m = 1` iff `m` hosts a PMU or has a PMU neighbour.
pub fn observability_vector(grid: &Grid, placement: &Placement) -> ObservabilityVector {
    ObservabilityVector(
        grid.bus_ids()
            .map(|m| {
                placement.contains(m) || grid.neighbors(m).iter().any(|k| placement.contains(*k))
            })
            .collect(),
    )
}

/// Zero-injection refinement of `g`, iterated to a fixpoint.
///
/// An unobserved bus becomes observable once all of its neighbours are
/// observable and the bus or one of its neighbours is a ZIB.
pub fn zib_observability(grid: &Grid, g: &ObservabilityVector) -> ObservabilityVector {
    let mut obs = g.0.clone();
    loop {
        let mut changed = false;
        for m in grid.bus_ids() {
            if obs[m.index()] {
                continue;
            }
            let nbrs = grid.neighbors(m);
            let touches_zib = grid.is_zib(m) || nbrs.iter().any(|k| grid.is_zib(*k));
            if touches_zib && nbrs.iter().all(|k| obs[k.index()]) {
                obs[m.index()] = true;
                changed = true;
            }
        }
        if !changed {
            return ObservabilityVector(obs);
        }
    }
}

/// `g(Y)` or, with `use_zib`, `g′(Y)`.
pub fn observability(grid: &Grid, placement: &Placement, use_zib: bool) -> ObservabilityVector {
    let g = observability_vector(grid, placement);
    if use_zib {
        zib_observability(grid, &g)
    } else {
        g
    }
}

/// Number of PMUs observing bus `k`: `|N_PMU ∩ (A_k ∪ {k})|`.
pub fn observing_count(
    grid: &Grid,
    placement: &Placement,
    k: BusId,
) -> Result<usize, ObservabilityError> {
    let nbrs = grid.adjacency(k)?;
    Ok(placement.contains(k) as usize + nbrs.iter().filter(|b| placement.contains(**b)).count())
}

/// Number of PMUs observing any bus in `affected`:
/// `|N_PMU ∩ ⋃_{i ∈ affected} (A_i ∪ {i})|`.
pub fn attack_observing_count(
    grid: &Grid,
    placement: &Placement,
    affected: &BTreeSet<BusId>,
) -> Result<usize, ObservabilityError> {
    if affected.is_empty() {
        return Err(ObservabilityError::EmptyAffected);
    }
    let mut watchers = BTreeSet::new();
    for &i in affected {
        let nbrs = grid.adjacency(i)?;
        for b in std::iter::once(&i).chain(nbrs) {
            if placement.contains(*b) {
                watchers.insert(*b);
            }
        }
    }
    Ok(watchers.len())
}

/// Minimum-cost placement achieving full observability (`g ≥ 1`, or `g′ ≥ 1`
/// with `use_zib`). Exact depth-first branch and bound; cost ties resolve to
/// the lexicographically smallest bus set.
pub fn optimal_placement(grid: &Grid, use_zib: bool) -> Result<Placement, ObservabilityError> {
    let mut order: Vec<BusId> = grid.bus_ids().collect();
    order.sort_by(|a, b| grid.degree(*b).cmp(&grid.degree(*a)).then(a.cmp(b)));
    let zib_credit: usize = if use_zib {
        grid.zib().iter().map(|z| grid.degree(*z) + 1).sum()
    } else {
        0
    };
    let mut search = Search {
        grid,
        use_zib,
        order,
        zib_credit,
        chosen: BTreeSet::new(),
        best: None,
    };
    search.descend(0, 0.0);
    let (_, best) = search.best.ok_or(ObservabilityError::Infeasible)?;
    Ok(Placement::new(grid, best)?)
}

const COST_EPS: f64 = 1e-9;

struct Search<'a> {
    grid: &'a Grid,
    use_zib: bool,
    order: Vec<BusId>,
    zib_credit: usize,
    chosen: BTreeSet<BusId>,
    best: Option<(f64, BTreeSet<BusId>)>,
}

impl Search<'_> {
    fn observed(&self, pmus: &BTreeSet<BusId>) -> ObservabilityVector {
        let placement =
            Placement::new(self.grid, pmus.iter().copied()).expect("ids come from the grid");
        observability(self.grid, &placement, self.use_zib)
    }

    fn improves(&self, cost: f64, set: &BTreeSet<BusId>) -> bool {
        match &self.best {
            None => true,
            Some((best_cost, best_set)) => {
                cost < best_cost - COST_EPS
                    || (cost <= best_cost + COST_EPS && set.iter().lt(best_set.iter()))
            }
        }
    }

    /// Admissible bound on the cost still needed to observe every bus.
    fn remaining_bound(&self, depth: usize) -> f64 {
        let rest = &self.order[depth..];
        if rest.is_empty() {
            return 0.0;
        }
        let covered = {
            let placement =
                Placement::new(self.grid, self.chosen.iter().copied()).expect("grid ids");
            observability_vector(self.grid, &placement).observed_count()
        };
        let uncovered = (self.grid.bus_count() - covered).saturating_sub(self.zib_credit);
        if uncovered == 0 {
            return 0.0;
        }
        let reach = rest
            .iter()
            .map(|b| self.grid.degree(*b) + 1)
            .max()
            .unwrap_or(1);
        let cheapest = rest
            .iter()
            .map(|b| self.grid.weight(*b))
            .fold(f64::INFINITY, f64::min);
        uncovered.div_ceil(reach) as f64 * cheapest
    }

    fn descend(&mut self, depth: usize, cost: f64) {
        if let Some((best_cost, _)) = &self.best {
            if cost > best_cost + COST_EPS {
                return;
            }
        }
        if self.observed(&self.chosen).is_full() {
            if self.improves(cost, &self.chosen) {
                self.best = Some((cost, self.chosen.clone()));
            }
            // adding PMUs never lowers the cost, but a zero-weight bus could
            // still produce a lexicographically smaller set
            if !self.order[depth..]
                .iter()
                .any(|b| self.grid.weight(*b) <= COST_EPS)
            {
                return;
            }
        }
        if depth == self.order.len() {
            return;
        }
        if let Some((best_cost, _)) = &self.best {
            if cost + self.remaining_bound(depth) > best_cost + COST_EPS {
                return;
            }
        }
        // everything still undecided switched on must reach full observability
        let mut optimistic = self.chosen.clone();
        optimistic.extend(self.order[depth..].iter().copied());
        if !self.observed(&optimistic).is_full() {
            return;
        }

        let bus = self.order[depth];
        self.chosen.insert(bus);
        self.descend(depth + 1, cost + self.grid.weight(bus));
        self.chosen.remove(&bus);
        self.descend(depth + 1, cost);
    }
}

/// Serialized placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementDocument {
    pub pmu_buses: Vec<u32>,
    pub cost: f64,
    pub zib_used: bool,
}

impl PlacementDocument {
    pub fn new(grid: &Grid, placement: &Placement, zib_used: bool) -> Self {
        PlacementDocument {
            pmu_buses: placement.buses().iter().map(|b| b.0).collect(),
            cost: placement.cost(grid),
            zib_used,
        }
    }

    pub fn to_placement(&self, grid: &Grid) -> Result<Placement, ObservabilityError> {
        Ok(Placement::new(
            grid,
            self.pmu_buses.iter().map(|b| BusId(*b)),
        )?)
    }
}
