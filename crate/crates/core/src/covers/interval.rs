//! Finite unions of intervals on the line and of arcs on the unit circle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Line,
    /// `[0, 1)` with `1` identified with `0`.
    Circle,
}

/// One interval; ends may be infinite on the line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub lo_closed: bool,
    #[serde(default)]
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: false }
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        (x > self.lo || (x == self.lo && self.lo_closed))
            && (x < self.hi || (x == self.hi && self.hi_closed))
    }

    fn meet(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }

    fn within(&self, outer: &Interval) -> bool {
        let lo_ok = outer.lo < self.lo || (outer.lo == self.lo && (outer.lo_closed || !self.lo_closed));
        let hi_ok = outer.hi > self.hi || (outer.hi == self.hi && (outer.hi_closed || !self.hi_closed));
        lo_ok && hi_ok
    }
}

/// A normalized union: pieces sorted, disjoint and not touching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntervalSet", into = "RawIntervalSet")]
pub struct IntervalSet {
    domain: Domain,
    pieces: Vec<Interval>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntervalSet {
    domain: Domain,
    pieces: Vec<Interval>,
}

impl TryFrom<RawIntervalSet> for IntervalSet {
    type Error = Error;

    fn try_from(raw: RawIntervalSet) -> Result<Self> {
        match raw.domain {
            Domain::Line => IntervalSet::line(raw.pieces),
            Domain::Circle => IntervalSet::circle(raw.pieces),
        }
    }
}

impl From<IntervalSet> for RawIntervalSet {
    fn from(s: IntervalSet) -> Self {
        RawIntervalSet { domain: s.domain, pieces: s.pieces }
    }
}

impl IntervalSet {
    pub fn line(pieces: impl IntoIterator<Item = Interval>) -> Result<Self> {
        let pieces: Vec<Interval> = pieces.into_iter().collect();
        for p in &pieces {
            if p.lo.is_nan() || p.hi.is_nan() {
                return Err(Error::InvalidParameter(format!("interval with NaN end: {p:?}")));
            }
        }
        Ok(IntervalSet { domain: Domain::Line, pieces: normalize(pieces) })
    }

    /// Arcs given by real ends; an arc may wrap past 1 (`lo < 1 < hi`).
    pub fn circle(arcs: impl IntoIterator<Item = Interval>) -> Result<Self> {
        let mut pieces = Vec::new();
        for a in arcs {
            if !(a.lo.is_finite() && a.hi.is_finite()) {
                return Err(Error::InvalidParameter(format!("arc with non-finite end: {a:?}")));
            }
            if a.is_empty() {
                continue;
            }
            if a.hi - a.lo >= 1.0 {
                pieces.push(Interval::half_open(0.0, 1.0));
                continue;
            }
            let shift = a.lo.floor();
            let (lo, hi) = (a.lo - shift, a.hi - shift);
            if hi < 1.0 {
                pieces.push(Interval { lo, hi, ..a });
            } else {
                pieces.push(Interval { lo, hi: 1.0, lo_closed: a.lo_closed, hi_closed: false });
                // 1 ≡ 0 is inside the arc unless it is the open right end
                if hi > 1.0 || a.hi_closed {
                    pieces.push(Interval { lo: 0.0, hi: hi - 1.0, lo_closed: true, hi_closed: a.hi_closed });
                }
            }
        }
        Ok(IntervalSet { domain: Domain::Circle, pieces: normalize(pieces) })
    }

    pub fn whole(domain: Domain) -> Self {
        let piece = match domain {
            Domain::Line => Interval::open(f64::NEG_INFINITY, f64::INFINITY),
            Domain::Circle => Interval::half_open(0.0, 1.0),
        };
        IntervalSet { domain, pieces: vec![piece] }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn pieces(&self) -> &[Interval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    pub fn intersect(&self, other: &IntervalSet) -> Result<IntervalSet> {
        if self.domain != other.domain {
            return Err(Error::WrongSpace {
                expected: format!("{:?}", self.domain),
                found: format!("{:?}", other.domain),
            });
        }
        let mut out = Vec::new();
        for a in &self.pieces {
            for b in &other.pieces {
                let m = a.meet(b);
                if !m.is_empty() {
                    out.push(m);
                }
            }
        }
        Ok(IntervalSet { domain: self.domain, pieces: normalize(out) })
    }

    /// Exact containment.
    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.domain == other.domain
            && self.pieces.iter().all(|a| other.pieces.iter().any(|b| a.within(b)))
    }

    /// Whether the complement is bounded (on the line) or the domain is compact.
    pub fn complement_is_compact(&self) -> bool {
        match self.domain {
            Domain::Circle => true,
            Domain::Line => {
                self.pieces.first().is_some_and(|p| p.lo == f64::NEG_INFINITY)
                    && self.pieces.last().is_some_and(|p| p.hi == f64::INFINITY)
            }
        }
    }
}

fn normalize(mut pieces: Vec<Interval>) -> Vec<Interval> {
    pieces.retain(|p| !p.is_empty());
    pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
    let mut out: Vec<Interval> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = out.last_mut() {
            let touches = p.lo < last.hi || (p.lo == last.hi && (p.lo_closed || last.hi_closed));
            if touches {
                if p.hi > last.hi {
                    last.hi = p.hi;
                    last.hi_closed = p.hi_closed;
                } else if p.hi == last.hi {
                    last.hi_closed |= p.hi_closed;
                }
                continue;
            }
        }
        out.push(p);
    }
    out
}
