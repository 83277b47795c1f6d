//! Greedy separated sets and dynamical ball covers on an [`OrbitTable`].
//!
//! Candidate pairs are found through a grid over the coordinates at time 0
//! and, for low-dimensional tables, at time `n − 1`: two points within `ε` in
//! `d_n` are within `ε` at both times, so they sit in the same or adjacent
//! cells (cells are at least `ε` wide). Symbolic tables are bucketed by the
//! prefix that a distance below `ε` forces to agree.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use crate::covers::setcover::{self, SetCoverSolution};
use crate::error::{Error, Result};
use crate::metrics::{Kernel, OrbitTable};

const BLOCK: usize = 512;

#[derive(Clone, Copy, Debug)]
enum Grid {
    /// One bucket for everything.
    All,
    Real { cell: f64 },
    /// `cells` buckets per coordinate on `[0, 1)`.
    Periodic { cells: i64 },
    Prefix { len: usize },
}

/// Keying on a second time slice squares the number of probed cells; it
/// pays off only while that stays small.
const MAX_SLICED_WIDTH: usize = 2;

/// Buckets of table rows keyed by their cells at the probed time slices.
pub(crate) struct NeighborIndex {
    grid: Grid,
    slices: Vec<usize>,
    width: usize,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl NeighborIndex {
    /// Index for `d_n`-queries at radius `eps`.
    pub(crate) fn new(table: &OrbitTable, eps: f64, n: usize) -> Self {
        let grid = match table.kernel() {
            Kernel::Symbolic { lambda } => {
                // λ^k < ε forces agreement on the first k symbols
                let len = (0..).find(|&k| lambda.powi(k) < eps).unwrap_or(0) as usize;
                let short = (0..table.len()).any(|i| table.word(i, 0).len() < len);
                if len == 0 || short { Grid::All } else { Grid::Prefix { len } }
            }
            Kernel::ArcMax => {
                let cells = (1.0 / eps).floor().min(1024.0) as i64;
                if cells < 3 { Grid::All } else { Grid::Periodic { cells } }
            }
            Kernel::L2 | Kernel::PairMax => Grid::Real { cell: eps },
        };
        let coords = match grid {
            Grid::Real { .. } | Grid::Periodic { .. } if !table.is_empty() => table.coords(0, 0).len(),
            _ => 0,
        };
        let slices = if coords > 0 && coords <= MAX_SLICED_WIDTH && n > 1 { vec![0, n - 1] } else { vec![0] };
        let width = match grid {
            Grid::Prefix { len } => len,
            _ => coords * slices.len(),
        };
        NeighborIndex { grid, slices, width, cells: HashMap::new() }
    }

    /// Index holding every row of the table.
    pub(crate) fn full(table: &OrbitTable, eps: f64, n: usize) -> Self {
        let mut index = Self::new(table, eps, n);
        for i in 0..table.len() {
            index.insert(table, i);
        }
        index
    }

    fn key(&self, table: &OrbitTable, i: usize) -> Vec<i64> {
        match self.grid {
            Grid::All => Vec::new(),
            Grid::Real { cell } => self
                .slices
                .iter()
                .flat_map(|&t| table.coords(i, t).iter().map(move |&x| (x / cell).floor() as i64))
                .collect(),
            Grid::Periodic { cells } => self
                .slices
                .iter()
                .flat_map(|&t| {
                    table
                        .coords(i, t)
                        .iter()
                        .map(move |&x| ((x.rem_euclid(1.0) * cells as f64).floor() as i64).min(cells - 1))
                })
                .collect(),
            Grid::Prefix { len } => table.word(i, 0)[..len].iter().map(|&s| s as i64).collect(),
        }
    }

    pub(crate) fn insert(&mut self, table: &OrbitTable, i: usize) {
        let key = self.key(table, i);
        self.cells.entry(key).or_default().push(i);
    }

    /// Calls `f` on every indexed row that may lie within `ε` of row `i`
    /// until `f` returns true; reports whether it did.
    fn any_candidate(&self, table: &OrbitTable, i: usize, mut f: impl FnMut(usize) -> bool) -> bool {
        let key = self.key(table, i);
        match self.grid {
            Grid::All | Grid::Prefix { .. } => self.cells.get(&key).is_some_and(|rows| rows.iter().any(|&r| f(r))),
            Grid::Real { .. } | Grid::Periodic { .. } => {
                let mut probe = key.clone();
                let total = 3usize.pow(self.width as u32);
                for code in 0..total {
                    let mut c = code;
                    for (d, slot) in probe.iter_mut().enumerate() {
                        let offset = (c % 3) as i64 - 1;
                        c /= 3;
                        *slot = match self.grid {
                            Grid::Periodic { cells } => (key[d] + offset).rem_euclid(cells),
                            _ => key[d].saturating_add(offset),
                        };
                    }
                    if self.cells.get(&probe).is_some_and(|rows| rows.iter().any(|&r| f(r))) {
                        return true;
                    }
                }
                false
            }
        }
    }
}

/// `d_n(x_a, x_b) < ε`, testing the last time step first: under expansion
/// that is where separation shows up.
#[inline]
pub(crate) fn close(table: &OrbitTable, a: usize, b: usize, n: usize, eps: f64) -> bool {
    table.step_distance(a, b, n - 1) < eps && (0..n - 1).all(|j| table.step_distance(a, b, j) < eps)
}

pub(crate) fn check_args(table: &OrbitTable, n: usize, eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    if n == 0 {
        return Err(Error::EmptyOrbit);
    }
    if n > table.horizon() {
        return Err(Error::InvalidParameter(format!("n = {n} exceeds the orbit horizon {}", table.horizon())));
    }
    Ok(())
}

/// Rows of a greedy maximal `(n, ε)`-separated subset: the table is scanned
/// in row order and a row is kept when it is at `d_n`-distance at least `ε`
/// from every row kept before it. Ascending.
pub fn separated_rows(table: &OrbitTable, n: usize, eps: f64) -> Result<Vec<usize>> {
    check_args(table, n, eps)?;
    let mut index = NeighborIndex::new(table, eps, n);
    let mut chosen = Vec::new();
    let mut start = 0;
    while start < table.len() {
        // rows of a block are tested in parallel against the rows kept
        // before it, then against each other in order
        let end = (start + BLOCK).min(table.len());
        let free: Vec<usize> = (start..end)
            .into_par_iter()
            .filter(|&i| !index.any_candidate(table, i, |r| close(table, r, i, n, eps)))
            .collect();
        let mut added: Vec<usize> = Vec::new();
        for i in free {
            if added.iter().all(|&a| !close(table, a, i, n, eps)) {
                added.push(i);
            }
        }
        for i in added {
            index.insert(table, i);
            chosen.push(i);
        }
        start = end;
    }
    Ok(chosen)
}

/// Whether every row lies within `ε` (in `d_n`) of some row of `rows`.
pub fn covers_table(table: &OrbitTable, rows: &[usize], n: usize, eps: f64) -> bool {
    let mut index = NeighborIndex::new(table, eps, n);
    for &r in rows {
        index.insert(table, r);
    }
    (0..table.len())
        .into_par_iter()
        .all(|i| index.any_candidate(table, i, |r| close(table, r, i, n, eps)))
}

/// Membership sets of the open `d_n`-balls of radius `ε` centred at every row.
pub fn ball_supports(table: &OrbitTable, n: usize, eps: f64) -> Result<Vec<FixedBitSet>> {
    check_args(table, n, eps)?;
    let index = NeighborIndex::full(table, eps, n);
    Ok((0..table.len())
        .into_par_iter()
        .map(|c| {
            let mut s = FixedBitSet::with_capacity(table.len());
            index.any_candidate(table, c, |r| {
                if close(table, c, r, n, eps) {
                    s.insert(r);
                }
                false
            });
            s
        })
        .collect())
}

/// Fewest `d_n`-balls of radius `ε` centred at rows that cover all rows.
///
/// The balls around a greedy maximal separated set are a valid cover and
/// seed the search, so the count never exceeds that set's size.
pub fn spanning_count(table: &OrbitTable, n: usize, eps: f64) -> Result<SetCoverSolution> {
    let supports = ball_supports(table, n, eps)?;
    let separated = separated_rows(table, n, eps)?;
    setcover::solve(&supports, table.len(), Some(&separated))
        .map_err(|index| Error::NotACover { index, point: format!("row {index}") })
}
