use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::interval::{Domain, IntervalSet};
use crate::error::{Error, Result};
use crate::metrics::{distance, stereographic_lift, Metric};
use crate::systems::{DynamicalSystem, Point, Space};

/// A compact subset, used as the hole of a neighbourhood of infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Compact {
    /// Closed box `[lo, hi]` in `R^d`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Closed arcs of the circle.
    Arcs { arcs: IntervalSet },
    /// The whole (compact) space.
    Whole,
}

impl Compact {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Compact::Box { lo: vec![lo], hi: vec![hi] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Compact::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::DegenerateCompact(format!("box ends {lo:?} and {hi:?}")));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
                    return Err(Error::DegenerateCompact(format!("empty or unbounded box {lo:?}..{hi:?}")));
                }
                Ok(())
            }
            Compact::Arcs { arcs } if arcs.is_empty() || arcs.domain() != Domain::Circle => {
                Err(Error::DegenerateCompact("no circle arcs".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (Compact::Whole, _) => true,
            (Compact::Box { lo, hi }, Point::Euclidean { coords }) => {
                coords.len() == lo.len()
                    && coords.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| a <= x && x <= b)
            }
            (Compact::Arcs { arcs }, Point::Circle { angle }) => arcs.contains(*angle),
            _ => false,
        }
    }
}

/// `∩_j T^{-j}(A_{i_j})` for a base cover `A` and indices `i_0 … i_{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Itinerary {
    pub base: Arc<Cover>,
    pub system: Arc<DynamicalSystem>,
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoverElement {
    Whole,
    /// Subset of the line (points of `R^1`) or of the circle.
    Intervals { set: IntervalSet },
    /// Product of one interval set per coordinate, on `R^d` or `T^d`.
    Product { factors: Vec<IntervalSet> },
    Ball { metric: Metric, center: Point, radius: f64 },
    /// Words beginning with `symbols`.
    Cylinder { symbols: Vec<u16> },
    ComplementOfCompact { compact: Compact },
    Intersection { parts: Vec<CoverElement> },
    #[serde(skip)]
    Itinerary(Itinerary),
}

impl CoverElement {
    pub fn intervals(set: IntervalSet) -> Self {
        CoverElement::Intervals { set }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            CoverElement::Whole => true,
            CoverElement::Intervals { set } => match (set.domain(), p) {
                (Domain::Line, Point::Euclidean { coords }) if coords.len() == 1 => set.contains(coords[0]),
                (Domain::Circle, Point::Circle { angle }) => set.contains(*angle),
                _ => false,
            },
            CoverElement::Product { factors } => match p {
                Point::Euclidean { coords } | Point::Torus { coords } => {
                    coords.len() == factors.len() && factors.iter().zip(coords).all(|(f, &x)| f.contains(x))
                }
                _ => false,
            },
            CoverElement::Ball { metric, center, radius } => {
                distance(metric, center, p).is_ok_and(|d| d < *radius)
            }
            CoverElement::Cylinder { symbols } => p.symbols().is_some_and(|w| w.starts_with(symbols)),
            CoverElement::ComplementOfCompact { compact } => !compact.contains(p),
            CoverElement::Intersection { parts } => parts.iter().all(|e| e.contains(p)),
            CoverElement::Itinerary(it) => {
                let mut q = p.clone();
                for (j, &i) in it.indices.iter().enumerate() {
                    if j > 0 {
                        match it.system.apply(&q) {
                            Ok(next) => q = next,
                            Err(Error::Overflow { .. }) => q = at_infinity(&q),
                            Err(_) => return false,
                        }
                    }
                    if !it.base.elements()[i].contains(&q) {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Whether the complement of this element in `space` is compact.
    pub fn complement_is_compact(&self, space: Space) -> bool {
        if space.is_compact() {
            return true;
        }
        match self {
            CoverElement::Whole | CoverElement::ComplementOfCompact { .. } => true,
            CoverElement::Intervals { set } => set.complement_is_compact(),
            CoverElement::Product { factors } => factors.iter().all(IntervalSet::complement_is_compact),
            CoverElement::Ball { metric: Metric::Compactified, center, radius } => {
                // the chordal ball contains a punctured neighbourhood of infinity
                // exactly when infinity itself is within the radius
                center.real_coords().is_some_and(|c| {
                    let s = stereographic_lift(c);
                    let north = s.len() - 1;
                    let d2: f64 = s
                        .iter()
                        .enumerate()
                        .map(|(k, v)| if k == north { (v - 1.0).powi(2) } else { v * v })
                        .sum();
                    d2.sqrt() < *radius
                })
            }
            CoverElement::Ball { .. } | CoverElement::Cylinder { .. } => false,
            CoverElement::Intersection { parts } => parts.iter().all(|e| e.complement_is_compact(space)),
            CoverElement::Itinerary(it) => {
                (it.indices.len() <= 1 || it.system.is_proper())
                    && it.indices.iter().all(|&i| it.base.elements()[i].complement_is_compact(space))
            }
        }
    }

    /// Whether emptiness and containment can be decided without a sample.
    pub fn is_symbolic(&self) -> bool {
        matches!(
            self,
            CoverElement::Whole
                | CoverElement::Intervals { .. }
                | CoverElement::Product { .. }
                | CoverElement::Cylinder { .. }
        )
    }

    /// Exact emptiness for symbolic elements, `None` otherwise.
    pub fn symbolic_empty(&self) -> Option<bool> {
        match self {
            CoverElement::Whole | CoverElement::Cylinder { .. } => Some(false),
            CoverElement::Intervals { set } => Some(set.is_empty()),
            CoverElement::Product { factors } => Some(factors.iter().any(IntervalSet::is_empty)),
            _ => None,
        }
    }

    /// Exact containment `self ⊆ other` where decidable.
    pub fn symbolic_subset(&self, other: &CoverElement) -> Option<bool> {
        match (self, other) {
            (_, CoverElement::Whole) => Some(true),
            (CoverElement::Intervals { set: a }, CoverElement::Intervals { set: b }) => Some(a.is_subset(b)),
            (CoverElement::Product { factors: a }, CoverElement::Product { factors: b }) => {
                Some(a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.is_subset(y)))
            }
            (CoverElement::Cylinder { symbols: a }, CoverElement::Cylinder { symbols: b }) => {
                Some(a.starts_with(b))
            }
            _ if self.symbolic_empty() == Some(true) => Some(true),
            _ => None,
        }
    }

    /// `self ∩ other`, simplified where possible; `None` when symbolically empty.
    pub fn meet(&self, other: &CoverElement) -> Option<CoverElement> {
        use CoverElement::*;
        let met = match (self, other) {
            (Whole, x) | (x, Whole) => x.clone(),
            (Intervals { set: a }, Intervals { set: b }) if a.domain() == b.domain() => {
                Intervals { set: a.intersect(b).ok()? }
            }
            (Product { factors: a }, Product { factors: b }) if a.len() == b.len() => Product {
                factors: a.iter().zip(b).map(|(x, y)| x.intersect(y)).collect::<Result<_>>().ok()?,
            },
            (Cylinder { symbols: a }, Cylinder { symbols: b }) => {
                if a.starts_with(b) {
                    self.clone()
                } else if b.starts_with(a) {
                    other.clone()
                } else {
                    return None;
                }
            }
            _ => {
                let mut parts = Vec::new();
                for e in [self, other] {
                    match e {
                        Intersection { parts: inner } => parts.extend(inner.iter().cloned()),
                        e => parts.push(e.clone()),
                    }
                }
                Intersection { parts }
            }
        };
        match met.symbolic_empty() {
            Some(true) => None,
            _ => Some(met),
        }
    }
}

/// The point at infinity of `R^d`, reached by overflowing orbits.
pub(crate) fn at_infinity(p: &Point) -> Point {
    let dim = p.real_coords().map_or(1, <[f64]>::len);
    Point::euclidean(vec![f64::INFINITY; dim])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverKind {
    Cover,
    /// Every sample point lies in exactly one element.
    Partition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cover {
    space: Space,
    elements: Vec<CoverElement>,
    kind: CoverKind,
}

impl Cover {
    pub fn new(space: Space, elements: Vec<CoverElement>, kind: CoverKind) -> Self {
        Cover { space, elements, kind }
    }

    pub fn cover(space: Space, elements: Vec<CoverElement>) -> Self {
        Self::new(space, elements, CoverKind::Cover)
    }

    pub fn partition(space: Space, elements: Vec<CoverElement>) -> Self {
        Self::new(space, elements, CoverKind::Partition)
    }

    /// `{X}`
    pub fn trivial(space: Space) -> Self {
        Self::partition(space, vec![CoverElement::Whole])
    }

    /// `{[0,1/k), [1/k,2/k), …}` on the circle.
    pub fn circle_arcs(k: usize) -> Self {
        let elements = (0..k)
            .map(|i| {
                let arc = super::interval::Interval::half_open(i as f64 / k as f64, (i + 1) as f64 / k as f64);
                CoverElement::intervals(IntervalSet::circle([arc]).unwrap())
            })
            .collect();
        Self::partition(Space::Circle, elements)
    }

    /// Half-open intervals between consecutive `cuts` on the line, with the two
    /// outer rays.
    pub fn line_cuts(cuts: &[f64]) -> Self {
        use super::interval::Interval;
        let mut ends = vec![f64::NEG_INFINITY];
        ends.extend_from_slice(cuts);
        let mut elements: Vec<CoverElement> = ends
            .windows(2)
            .map(|w| CoverElement::intervals(IntervalSet::line([Interval::half_open(w[0], w[1])]).unwrap()))
            .collect();
        let last = *ends.last().unwrap();
        elements.push(CoverElement::intervals(
            IntervalSet::line([Interval::half_open(last, f64::INFINITY)]).unwrap(),
        ));
        Self::partition(Space::Euclidean { dim: 1 }, elements)
    }

    /// Cylinders of every admissible word of length `depth` of the shift.
    pub fn cylinders(sys: &DynamicalSystem, depth: usize) -> Result<Self> {
        let sft = sys
            .sft()
            .ok_or_else(|| Error::InvalidSystem("cylinder partition needs a shift".into()))?;
        let elements = sft
            .enumerate_words(depth)
            .into_iter()
            .map(|symbols| CoverElement::Cylinder { symbols })
            .collect();
        Ok(Self::partition(sys.space(), elements))
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn elements(&self) -> &[CoverElement] {
        &self.elements
    }

    pub fn kind(&self) -> CoverKind {
        self.kind
    }

    pub fn is_partition(&self) -> bool {
        self.kind == CoverKind::Partition
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of the unique element containing `p`.
    pub fn cell_of(&self, p: &Point) -> Result<usize> {
        let mut hits = self.elements.iter().enumerate().filter(|(_, e)| e.contains(p)).map(|(i, _)| i);
        match (hits.next(), hits.next()) {
            (Some(i), None) => Ok(i),
            (None, _) => Err(Error::PartitionGap(p.to_string())),
            (Some(_), Some(_)) => Err(Error::PartitionOverlap(p.to_string())),
        }
    }

    /// Checks the cover (or partition) condition on a sample.
    pub fn check_on(&self, sample: &[Point]) -> Result<()> {
        for (index, p) in sample.iter().enumerate() {
            let hits = self.elements.iter().filter(|e| e.contains(p)).count();
            if hits == 0 {
                return Err(Error::NotACover { index, point: p.to_string() });
            }
            if hits > 1 && self.is_partition() {
                return Err(Error::PartitionOverlap(p.to_string()));
            }
        }
        Ok(())
    }
}
