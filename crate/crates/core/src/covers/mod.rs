//! Covers and partitions: refinement, join, iteration under a map, minimal
//! subcovers, admissibility and cover entropy.
//!
//! Emptiness and containment are decided exactly for interval, box and
//! cylinder elements and on a witness sample otherwise, so every count is a
//! lower bound for the continuum quantity.

mod element;
pub mod interval;
pub mod setcover;

use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use element::{Compact, Cover, CoverElement, CoverKind, Itinerary};
pub use interval::{Domain, Interval, IntervalSet};
pub use setcover::SetCoverSolution;

use crate::error::{Error, Result};
use crate::systems::{DynamicalSystem, Point, Sft, Space};

/// Whether every element of `fine` lies inside some element of `coarse`.
///
/// Interval, box and cylinder pairs are compared exactly; other pairs are
/// compared on the sample.
pub fn refines(fine: &Cover, coarse: &Cover, sample: &[Point]) -> Result<bool> {
    same_space(fine, coarse)?;
    for f in fine.elements() {
        let mut inside = false;
        for c in coarse.elements() {
            let sub = match f.symbolic_subset(c) {
                Some(s) => s,
                None if sample.is_empty() => return Err(Error::UndecidableRefinement),
                None => sample.iter().all(|p| !f.contains(p) || c.contains(p)),
            };
            if sub {
                inside = true;
                break;
            }
        }
        if !inside {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All pairwise intersections that are nonempty (exactly, or on the sample).
pub fn join(a: &Cover, b: &Cover, sample: &[Point]) -> Result<Cover> {
    same_space(a, b)?;
    let mut elements = Vec::new();
    for x in a.elements() {
        for y in b.elements() {
            let Some(e) = x.meet(y) else { continue };
            let keep = e.symbolic_empty().is_some() || sample.is_empty() || sample.iter().any(|p| e.contains(p));
            if keep {
                elements.push(e);
            }
        }
    }
    let kind = if a.is_partition() && b.is_partition() { CoverKind::Partition } else { CoverKind::Cover };
    Ok(Cover::new(a.space(), elements, kind))
}

/// `A ∨ T^{-1}A ∨ … ∨ T^{-(n-1)}A` as itinerary elements over `a`, in
/// lexicographic order, keeping only nonempty itineraries.
///
/// Cylinder partitions under a shift are pruned exactly; everything else is
/// pruned on the sample.
pub fn iterate_cover(a: &Cover, sys: &DynamicalSystem, n: usize, sample: &[Point]) -> Result<Cover> {
    if n == 0 {
        return Err(Error::InvalidParameter("cover iterate count must be at least 1".into()));
    }
    if n == 1 {
        return Ok(a.clone());
    }
    let itineraries: Vec<Vec<usize>> = if let Some((sft, stride)) = symbolic_shift(a, sys) {
        let mut level = symbolic_level_one(a, sft);
        for _ in 1..n {
            level = symbolic_extend(a, sft, stride, &level);
        }
        level
    } else {
        if sample.is_empty() {
            return Err(Error::UndecidableRefinement);
        }
        let timed = timed_supports(a, sys, sample, n)?;
        let mut level: Vec<(Vec<usize>, FixedBitSet)> = timed[0]
            .iter()
            .enumerate()
            .filter(|(_, s)| s.count_ones(..) > 0)
            .map(|(i, s)| (vec![i], s.clone()))
            .collect();
        for at_time in &timed[1..] {
            level = extend_supports(&level, at_time);
        }
        level.into_iter().map(|(it, _)| it).collect()
    };
    let base = Arc::new(a.clone());
    let system = Arc::new(sys.clone());
    let elements = itineraries
        .into_iter()
        .map(|indices| CoverElement::Itinerary(Itinerary { base: base.clone(), system: system.clone(), indices }))
        .collect();
    Ok(Cover::new(a.space(), elements, a.kind()))
}

/// Minimum number of elements of `a` covering the sample.
pub fn min_subcover_cardinality(a: &Cover, sample: &[Point]) -> Result<SetCoverSolution> {
    let supports: Vec<FixedBitSet> = a.elements().par_iter().map(|e| support(e, sample)).collect();
    solve_supports(&supports, sample, None)
}

pub(crate) fn solve_supports(
    supports: &[FixedBitSet],
    sample: &[Point],
    incumbent: Option<&[usize]>,
) -> Result<SetCoverSolution> {
    setcover::solve(supports, sample.len(), incumbent)
        .map_err(|index| Error::NotACover { index, point: sample[index].to_string() })
}

/// `log N(a)` on the sample.
pub fn cover_entropy(a: &Cover, sample: &[Point]) -> Result<f64> {
    Ok((min_subcover_cardinality(a, sample)?.count.max(1) as f64).ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    /// Some element has compact complement.
    pub admissible: bool,
    /// Every element has compact complement.
    pub strong: bool,
}

pub fn is_admissible(a: &Cover) -> Admissibility {
    let flags: Vec<bool> = a.elements().iter().map(|e| e.complement_is_compact(a.space())).collect();
    Admissibility { admissible: flags.iter().any(|&f| f), strong: !flags.is_empty() && flags.iter().all(|&f| f) }
}

/// Overlapping mesh of `K` with spacing `delta`, plus a neighbourhood of
/// infinity when the space is not compact.
///
/// On `R^d` the mesh boxes are centred at `lo + iδ` for `i = 0..=⌈(hi−lo)/δ⌉`
/// with half-width `3δ/4`, and the patch at infinity is the complement of `K`
/// shrunk by `δ/2`. On the circle the mesh is `⌈1/δ⌉` overlapping arcs.
pub fn build_admissible_cover(space: Space, compact: &Compact, delta: f64) -> Result<Cover> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("mesh {delta} must be positive")));
    }
    compact.validate()?;
    match (space, compact) {
        (Space::Euclidean { dim }, Compact::Box { lo, hi }) => {
            if lo.len() != dim {
                return Err(Error::DimensionMismatch(dim, lo.len()));
            }
            let axes: Vec<Vec<IntervalSet>> = lo
                .iter()
                .zip(hi)
                .map(|(&a, &b)| {
                    let steps = ((b - a) / delta).ceil() as usize;
                    (0..=steps)
                        .map(|i| {
                            let c = a + i as f64 * delta;
                            IntervalSet::line([Interval::open(c - 0.75 * delta, c + 0.75 * delta)]).unwrap()
                        })
                        .collect()
                })
                .collect();
            let mut elements: Vec<CoverElement> = product_sets(&axes)
                .into_iter()
                .map(|mut factors| {
                    if dim == 1 {
                        CoverElement::Intervals { set: factors.remove(0) }
                    } else {
                        CoverElement::Product { factors }
                    }
                })
                .collect();
            let (shrunk_lo, shrunk_hi): (Vec<f64>, Vec<f64>) = lo
                .iter()
                .zip(hi)
                .map(|(&a, &b)| {
                    let (s, t) = (a + delta / 2.0, b - delta / 2.0);
                    if s <= t { (s, t) } else { ((a + b) / 2.0, (a + b) / 2.0) }
                })
                .unzip();
            elements.push(CoverElement::ComplementOfCompact {
                compact: Compact::Box { lo: shrunk_lo, hi: shrunk_hi },
            });
            Ok(Cover::cover(space, elements))
        }
        (Space::Circle, Compact::Whole | Compact::Arcs { .. }) => {
            let k = (1.0 / delta).ceil() as usize;
            let elements = (0..k)
                .map(|i| {
                    let (lo, hi) = ((i as f64 - 0.25) / k as f64, (i as f64 + 1.25) / k as f64);
                    CoverElement::intervals(IntervalSet::circle([Interval::open(lo, hi)]).unwrap())
                })
                .collect();
            Ok(Cover::cover(space, elements))
        }
        (Space::Torus { dim }, Compact::Whole) => {
            let k = (1.0 / delta).ceil() as usize;
            let arcs: Vec<IntervalSet> = (0..k)
                .map(|i| {
                    let (lo, hi) = ((i as f64 - 0.25) / k as f64, (i as f64 + 1.25) / k as f64);
                    IntervalSet::circle([Interval::open(lo, hi)]).unwrap()
                })
                .collect();
            let elements = product_sets(&vec![arcs; dim])
                .into_iter()
                .map(|factors| CoverElement::Product { factors })
                .collect();
            Ok(Cover::cover(space, elements))
        }
        (Space::Word { alphabet }, Compact::Whole) => {
            let depth = (-delta.log2()).ceil().max(1.0) as usize;
            let sft = Sft::full(alphabet as usize);
            let elements = sft
                .enumerate_words(depth)
                .into_iter()
                .map(|symbols| CoverElement::Cylinder { symbols })
                .collect();
            Ok(Cover::partition(space, elements))
        }
        _ => Err(Error::DegenerateCompact(format!("{compact:?} is not a compact part of {space}"))),
    }
}

/// `N` of `A^n` on the sample, for `n = 1..=n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcoverCount {
    pub n: usize,
    pub count: usize,
    pub exact: bool,
}

/// Minimal subcover counts of the iterates `A^n`, `n = 1..=n_max`.
///
/// Equivalent to running [`min_subcover_cardinality`] on each
/// [`iterate_cover`], but itineraries with identical or dominated sample
/// support are dropped level by level: a dominated itinerary only has
/// dominated extensions, so the minimum is unchanged.
pub fn iterated_cover_counts(
    a: &Cover,
    sys: &DynamicalSystem,
    sample: &[Point],
    n_max: usize,
) -> Result<Vec<SubcoverCount>> {
    if let Some((sft, stride)) = symbolic_shift(a, sys) {
        let mut out = Vec::with_capacity(n_max);
        let mut level = symbolic_level_one(a, sft);
        for n in 1..=n_max {
            if n > 1 {
                level = symbolic_extend(a, sft, stride, &level);
            }
            out.push(SubcoverCount { n, count: level.len(), exact: true });
        }
        return Ok(out);
    }
    let timed = timed_supports(a, sys, sample, n_max)?;
    let mut out = Vec::with_capacity(n_max);
    let mut level: Vec<FixedBitSet> = Vec::new();
    for (j, at_time) in timed.iter().enumerate() {
        let next: Vec<FixedBitSet> = if j == 0 {
            at_time.clone()
        } else {
            level
                .par_iter()
                .flat_map_iter(|s| {
                    at_time.iter().filter_map(move |t| {
                        let mut m = s.clone();
                        m.intersect_with(t);
                        (m.count_ones(..) > 0).then_some(m)
                    })
                })
                .collect()
        };
        let kept = setcover::undominated(&next);
        level = kept.into_iter().map(|i| next[i].clone()).collect();
        let sol = solve_supports(&level, sample, None)?;
        out.push(SubcoverCount { n: j + 1, count: sol.count, exact: sol.exact });
    }
    Ok(out)
}

fn same_space(a: &Cover, b: &Cover) -> Result<()> {
    if a.space() != b.space() {
        return Err(Error::WrongSpace { expected: a.space().to_string(), found: b.space().to_string() });
    }
    Ok(())
}

fn support(e: &CoverElement, sample: &[Point]) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(sample.len());
    for (i, p) in sample.iter().enumerate() {
        if e.contains(p) {
            s.insert(i);
        }
    }
    s
}

/// `out[j][i]` = sample points `x` with `T^j x` in element `i`, for `j < horizon`.
///
/// Orbits overflowing `R^d` continue at infinity; exhausted words drop out.
fn timed_supports(
    a: &Cover,
    sys: &DynamicalSystem,
    sample: &[Point],
    horizon: usize,
) -> Result<Vec<Vec<FixedBitSet>>> {
    let space = a.space();
    for p in sample {
        space.check(p)?;
    }
    let mut current: Vec<Option<Point>> = sample.iter().cloned().map(Some).collect();
    let mut out = Vec::with_capacity(horizon);
    for j in 0..horizon {
        if j > 0 {
            current = current
                .par_iter()
                .map(|q| match q {
                    None => Ok(None),
                    Some(q) => match sys.apply(q) {
                        Ok(next) => Ok(Some(next)),
                        Err(Error::Overflow { .. }) => Ok(Some(element::at_infinity(q))),
                        Err(Error::WordExhausted) => Ok(None),
                        Err(e) => Err(e),
                    },
                })
                .collect::<Result<_>>()?;
        }
        let sets: Vec<FixedBitSet> = a
            .elements()
            .par_iter()
            .map(|e| {
                let mut s = FixedBitSet::with_capacity(sample.len());
                for (i, q) in current.iter().enumerate() {
                    if q.as_ref().is_some_and(|q| e.contains(q)) {
                        s.insert(i);
                    }
                }
                s
            })
            .collect();
        out.push(sets);
    }
    Ok(out)
}

fn extend_supports(level: &[(Vec<usize>, FixedBitSet)], at_time: &[FixedBitSet]) -> Vec<(Vec<usize>, FixedBitSet)> {
    let mut next = Vec::new();
    for (it, s) in level {
        for (i, t) in at_time.iter().enumerate() {
            let mut m = s.clone();
            m.intersect_with(t);
            if m.count_ones(..) > 0 {
                let mut longer = it.clone();
                longer.push(i);
                next.push((longer, m));
            }
        }
    }
    next
}

pub(crate) fn symbolic_shift<'a>(a: &Cover, sys: &'a DynamicalSystem) -> Option<(&'a Sft, usize)> {
    let all_cylinders = a.elements().iter().all(|e| matches!(e, CoverElement::Cylinder { .. }));
    (a.is_partition() && all_cylinders).then(|| sys.shift_stride()).flatten()
}

fn cylinder(a: &Cover, i: usize) -> &[u16] {
    match &a.elements()[i] {
        CoverElement::Cylinder { symbols } => symbols,
        _ => unreachable!("symbolic path only sees cylinders"),
    }
}

fn symbolic_level_one(a: &Cover, sft: &Sft) -> Vec<Vec<usize>> {
    (0..a.len())
        .filter(|&i| itinerary_admissible(a, sft, 1, &[i]))
        .map(|i| vec![i])
        .collect()
}

fn symbolic_extend(a: &Cover, sft: &Sft, stride: usize, level: &[Vec<usize>]) -> Vec<Vec<usize>> {
    level
        .par_iter()
        .flat_map_iter(|it| {
            (0..a.len()).filter_map(move |i| {
                let mut longer = it.clone();
                longer.push(i);
                itinerary_admissible(a, sft, stride, &longer).then_some(longer)
            })
        })
        .collect()
}

/// Whether some admissible sequence reads cylinder `i_j` at offset `j·stride`.
fn itinerary_admissible(a: &Cover, sft: &Sft, stride: usize, indices: &[usize]) -> bool {
    let len = indices
        .iter()
        .enumerate()
        .map(|(j, &i)| j * stride + cylinder(a, i).len())
        .max()
        .unwrap_or(0);
    let mut constraint: Vec<Option<u16>> = vec![None; len];
    for (j, &i) in indices.iter().enumerate() {
        for (k, &s) in cylinder(a, i).iter().enumerate() {
            let slot = &mut constraint[j * stride + k];
            match slot {
                Some(t) if *t != s => return false,
                _ => *slot = Some(s),
            }
        }
    }
    constrained_path_exists(sft, &constraint)
}

/// Whether an admissible word matches `constraint` (`None` = any symbol).
pub(crate) fn constrained_path_exists(sft: &Sft, constraint: &[Option<u16>]) -> bool {
    let k = sft.alphabet();
    let mut reach: Vec<bool> = (0..k).map(|s| constraint.first().is_none_or(|c| c.is_none_or(|c| c == s))).collect();
    for c in constraint.iter().skip(1) {
        reach = (0..k)
            .map(|b| c.is_none_or(|c| c == b) && (0..k).any(|a| reach[a as usize] && sft.allows(a, b)))
            .collect();
    }
    reach.iter().any(|&r| r)
}

fn product_sets(axes: &[Vec<IntervalSet>]) -> Vec<Vec<IntervalSet>> {
    let mut out: Vec<Vec<IntervalSet>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |s| {
                    let mut p = prefix.clone();
                    p.push(s.clone());
                    p
                })
            })
            .collect();
    }
    out
}
