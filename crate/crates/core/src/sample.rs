//! Finite witness samples standing in for the state space or a compact part of it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{DynamicalSystem, Point, Sft, Space};

/// Where a sample came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Grid,
    Orbit,
    Random { seed: u64 },
    Words,
    Union,
}

/// A nonempty list of points of one space.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSample {
    space: Space,
    points: Vec<Point>,
    provenance: Provenance,
}

impl WitnessSample {
    pub fn new(points: Vec<Point>, provenance: Provenance) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidParameter("witness sample is empty".into()))?;
        let space = first.space();
        for p in &points[1..] {
            space.check(p)?;
        }
        Ok(WitnessSample { space, points, provenance })
    }

    /// `count` equally spaced points of `[lo, hi]`, both ends included.
    pub fn grid_line(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::grid_box(&[lo], &[hi], count)
    }

    /// Product grid with `per_dim` points per axis, ends included, in
    /// lexicographic order with the last axis varying fastest.
    pub fn grid_box(lo: &[f64], hi: &[f64], per_dim: usize) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(lo.len(), hi.len()));
        }
        if lo.is_empty() || per_dim == 0 || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidParameter(format!(
                "bad grid box {lo:?}..{hi:?} with {per_dim} points per axis"
            )));
        }
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| {
                if per_dim == 1 {
                    return vec![a];
                }
                let last = (per_dim - 1) as f64;
                (0..per_dim).map(|i| a + (b - a) * (i as f64 / last)).collect()
            })
            .collect();
        let points = product(&axes).into_iter().map(Point::euclidean).collect();
        Self::new(points, Provenance::Grid)
    }

    /// `k / count` for `k = 0..count`.
    pub fn circle_grid(count: usize) -> Result<Self> {
        let points = (0..count).map(|k| Point::circle(k as f64 / count as f64)).collect();
        Self::new(points, Provenance::Grid)
    }

    pub fn torus_grid(dim: usize, per_dim: usize) -> Result<Self> {
        let axis: Vec<f64> = (0..per_dim).map(|k| k as f64 / per_dim as f64).collect();
        let points = product(&vec![axis; dim]).into_iter().map(Point::torus).collect();
        Self::new(points, Provenance::Grid)
    }

    /// Points of `R` evenly spaced in angle on the compactifying circle:
    /// `tan(π(k/count − ½))` for `k = 1..count`.
    pub fn stereographic_grid(count: usize) -> Result<Self> {
        let points = (1..count)
            .map(|k| {
                let t = std::f64::consts::PI * (k as f64 / count as f64 - 0.5);
                Point::euclidean(vec![t.tan()])
            })
            .collect();
        Self::new(points, Provenance::Grid)
    }

    /// Uniform random points of the box `[lo, hi)`.
    pub fn random_box(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(lo.len(), hi.len()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| {
                Point::euclidean(lo.iter().zip(hi).map(|(&a, &b)| a + (b - a) * rng.gen::<f64>()).collect::<Vec<f64>>())
            })
            .collect();
        Self::new(points, Provenance::Random { seed })
    }

    pub fn random_circle(count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count).map(|_| Point::circle(rng.gen::<f64>())).collect();
        Self::new(points, Provenance::Random { seed })
    }

    /// Every admissible word of length `len`, in lexicographic order.
    pub fn words(sft: &Sft, len: usize) -> Result<Self> {
        let k = sft.alphabet();
        let points = sft
            .enumerate_words(len)
            .into_iter()
            .map(|w| Point::word(w, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, Provenance::Words)
    }

    /// This sample followed by the points of `other`.
    pub fn union(&self, other: &WitnessSample) -> Result<Self> {
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Self::new(points, Provenance::Union)
    }

    /// Adds the first `n` orbit points of every sample point, skipping
    /// orbits that leave the representable range.
    pub fn with_orbits(&self, sys: &DynamicalSystem, n: usize) -> Result<Self> {
        let mut points = Vec::with_capacity(self.points.len() * n.max(1));
        for p in &self.points {
            let mut q = p.clone();
            points.push(q.clone());
            for _ in 1..n {
                match sys.apply(&q) {
                    Ok(next) => q = next,
                    Err(Error::Overflow { .. }) | Err(Error::WordExhausted) => break,
                    Err(e) => return Err(e),
                }
                points.push(q.clone());
            }
        }
        Self::new(points, Provenance::Orbit)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}
