//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use pmugame::grid::{BusRecord, GridDocument, LineRecord};
use pmugame::{BusId, Grid};
use proptest::prelude::*;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> Grid {
    Grid::load(fixture_path(name)).expect("fixture loads")
}

/// Every bundled grid small enough for exhaustive placement search.
pub const SMALL_FIXTURES: [&str; 4] = ["fourbus.grid", "ring6.grid", "wscc9.grid", "mesh12.grid"];

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|i, j| a[*i][col].abs().partial_cmp(&a[*j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot = a[col].clone();
            for (x, p) in a[row][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Bus angles from `B'θ = P` with the slack angle pinned to zero.
pub fn dc_oracle(grid: &Grid) -> Vec<f64> {
    let n = grid.bus_count();
    let mut b = vec![vec![0.0; n]; n];
    for l in grid.lines() {
        let (i, j) = ((l.from.0 - 1) as usize, (l.to.0 - 1) as usize);
        let y = 1.0 / l.x;
        b[i][i] += y;
        b[j][j] += y;
        b[i][j] -= y;
        b[j][i] -= y;
    }
    let slack = (grid.slack().0 - 1) as usize;
    let keep: Vec<usize> = (0..n).filter(|i| *i != slack).collect();
    let reduced: Vec<Vec<f64>> = keep
        .iter()
        .map(|i| keep.iter().map(|j| b[*i][*j]).collect())
        .collect();
    let p: Vec<f64> = keep.iter().map(|i| grid.buses()[*i].injection).collect();
    let solved = gauss_solve(reduced, p);
    let mut theta = vec![0.0; n];
    for (k, i) in keep.iter().enumerate() {
        theta[*i] = solved[k];
    }
    theta
}

/// Adjacency lists built straight from the line list, indexed by bus id − 1.
pub fn adjacency(grid: &Grid) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); grid.bus_count()];
    for l in grid.lines() {
        let (i, j) = ((l.from.0 - 1) as usize, (l.to.0 - 1) as usize);
        adj[i].insert(j);
        adj[j].insert(i);
    }
    adj
}

/// Observability by definition: direct coverage, then the zero-injection
/// rule applied until nothing changes.
pub fn observed_by_definition(
    grid: &Grid,
    adj: &[BTreeSet<usize>],
    pmus: &BTreeSet<usize>,
    zib: bool,
) -> Vec<bool> {
    let n = grid.bus_count();
    let mut obs: Vec<bool> = (0..n)
        .map(|m| pmus.contains(&m) || adj[m].iter().any(|k| pmus.contains(k)))
        .collect();
    if zib {
        let is_zib = |m: usize| grid.buses()[m].zib;
        loop {
            let before = obs.clone();
            for m in 0..n {
                if !obs[m]
                    && (is_zib(m) || adj[m].iter().any(|k| is_zib(*k)))
                    && adj[m].iter().all(|k| obs[*k])
                {
                    obs[m] = true;
                }
            }
            if obs == before {
                break;
            }
        }
    }
    obs
}

/// Minimum-cost fully observing placement by trying every subset; ties go to
/// the lexicographically smallest sorted id list.
pub fn exhaustive_placement(grid: &Grid, zib: bool) -> Vec<u32> {
    let n = grid.bus_count();
    assert!(n <= 16, "exhaustive search is for small grids");
    let adj = adjacency(grid);
    let mut best: Option<(f64, Vec<u32>)> = None;
    for mask in 0u32..(1 << n) {
        let pmus: BTreeSet<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if !observed_by_definition(grid, &adj, &pmus, zib)
            .iter()
            .all(|o| *o)
        {
            continue;
        }
        let cost: f64 = pmus.iter().map(|i| grid.weight(BusId(*i as u32 + 1))).sum();
        let ids: Vec<u32> = pmus.iter().map(|i| *i as u32 + 1).collect();
        let better = match &best {
            None => true,
            Some((c, set)) => cost < c - 1e-9 || (cost <= c + 1e-9 && ids < *set),
        };
        if better {
            best = Some((cost, ids));
        }
    }
    best.expect("all-PMU placement is always feasible").1
}

/// Connected grids with 2..=max_buses buses: a random spanning tree plus a few
/// chords, balanced injections and zero-injection flags on some buses.
pub fn arb_grid(max_buses: usize) -> impl Strategy<Value = Grid> {
    (2..=max_buses)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
            (
                Just(n),
                parents,
                prop::collection::vec((0..n, 0..n), 0..n),
                prop::collection::vec(0.05f64..0.5, n * 2),
                prop::collection::vec(-1.0f64..1.0, n),
                prop::collection::vec(prop::bool::weighted(0.25), n),
                0..n,
            )
        })
        .prop_map(|(n, parents, chords, xs, raw, zib, slack)| {
            let mut edges = BTreeSet::new();
            for (i, p) in parents.iter().enumerate() {
                edges.insert((*p, i + 1));
            }
            for (a, b) in chords {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            let lines = edges
                .iter()
                .enumerate()
                .map(|(k, (a, b))| LineRecord {
                    from: *a as u32 + 1,
                    to: *b as u32 + 1,
                    x: xs[k % xs.len()],
                })
                .collect();
            // zero-injection buses carry nothing; the last non-ZIB bus balances
            let mut inj: Vec<f64> = (0..n).map(|i| if zib[i] { 0.0 } else { raw[i] }).collect();
            let balancer = (0..n).rev().find(|i| !zib[*i]);
            let mut zib = zib;
            match balancer {
                Some(k) => {
                    let rest: f64 = (0..n).filter(|i| *i != k).map(|i| inj[i]).sum();
                    inj[k] = -rest;
                }
                None => zib[0] = false,
            }
            GridDocument {
                buses: (0..n)
                    .map(|i| BusRecord {
                        id: i as u32 + 1,
                        injection: inj[i],
                        zib: zib[i],
                    })
                    .collect(),
                lines,
                slack: slack as u32 + 1,
                pmu_weights: None,
            }
            .into_grid()
            .expect("generated grid is valid")
        })
}
