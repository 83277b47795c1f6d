//! State spaces and the continuous maps acting on them.
//!
//! Every system is an immutable value: a [`Space`] together with a [`MapKind`].
//! Circle and torus coordinates are kept reduced to `[0, 1)`, and shift maps act
//! on finite words by dropping the leading symbol.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced coordinates within this distance of `1.0` snap to `0.0`.
pub const WRAP_SNAP: f64 = 1e-12;

/// Reduces `x` modulo 1 into `[0, 1)`.
pub fn reduce_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 - WRAP_SNAP {
        0.0
    } else {
        r
    }
}

/// A state of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Point {
    Euclidean { coords: Vec<f64> },
    Circle { angle: f64 },
    Torus { coords: Vec<f64> },
    Word { symbols: Vec<u16>, alphabet: u16 },
}

impl Point {
    pub fn euclidean(coords: impl Into<Vec<f64>>) -> Self {
        Point::Euclidean {
            coords: coords.into(),
        }
    }

    pub fn circle(angle: f64) -> Self {
        Point::Circle {
            angle: reduce_unit(angle),
        }
    }

    pub fn torus(coords: impl Into<Vec<f64>>) -> Self {
        let mut coords = coords.into();
        coords.iter_mut().for_each(|c| *c = reduce_unit(*c));
        Point::Torus { coords }
    }

    /// Builds a word point, rejecting symbols outside `0..alphabet`.
    pub fn word(symbols: impl Into<Vec<u16>>, alphabet: u16) -> Result<Self> {
        let symbols = symbols.into();
        if let Some(bad) = symbols.iter().find(|&&s| s >= alphabet) {
            return Err(Error::InvalidPoint(format!(
                "symbol {bad} outside alphabet of size {alphabet}"
            )));
        }
        Ok(Point::Word { symbols, alphabet })
    }

    /// The space descriptor this point lives in.
    pub fn space(&self) -> Space {
        match self {
            Point::Euclidean { coords } => Space::Euclidean { dim: coords.len() },
            Point::Circle { .. } => Space::Circle,
            Point::Torus { coords } => Space::Torus { dim: coords.len() },
            Point::Word { alphabet, .. } => Space::Word {
                alphabet: *alphabet,
            },
        }
    }

    /// Real coordinates of a Euclidean, circle or torus point.
    pub fn real_coords(&self) -> Option<&[f64]> {
        match self {
            Point::Euclidean { coords } | Point::Torus { coords } => Some(coords),
            Point::Circle { angle } => Some(std::slice::from_ref(angle)),
            Point::Word { .. } => None,
        }
    }

    pub fn symbols(&self) -> Option<&[u16]> {
        match self {
            Point::Word { symbols, .. } => Some(symbols),
            _ => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
        match self {
            Point::Euclidean { coords } => {
                write!(f, "(")?;
                list(f, coords)?;
                write!(f, ")")
            }
            Point::Circle { angle } => write!(f, "circle({angle})"),
            Point::Torus { coords } => {
                write!(f, "torus(")?;
                list(f, coords)?;
                write!(f, ")")
            }
            Point::Word { symbols, .. } => {
                write!(f, "word[")?;
                list(f, symbols)?;
                write!(f, "]")
            }
        }
    }
}

/// Which variant of [`Point`] a system acts on, with its dimension or alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Space {
    Euclidean { dim: usize },
    Circle,
    Torus { dim: usize },
    Word { alphabet: u16 },
}

impl Space {
    pub fn is_compact(&self) -> bool {
        !matches!(self, Space::Euclidean { .. })
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        let found = p.space();
        if found == *self {
            Ok(())
        } else {
            Err(Error::WrongSpace {
                expected: self.to_string(),
                found: found.to_string(),
            })
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Euclidean { dim } => write!(f, "R^{dim}"),
            Space::Circle => write!(f, "circle"),
            Space::Torus { dim } => write!(f, "T^{dim}"),
            Space::Word { alphabet } => write!(f, "words over {alphabet} symbols"),
        }
    }
}

/// A subshift of finite type given by a 0/1 adjacency matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Sft {
    adjacency: Vec<Vec<bool>>,
}

/// Perron data of an irreducible adjacency matrix.
#[derive(Clone, Debug)]
pub struct Perron {
    pub root: f64,
    /// Left eigenvector, normalised to unit sum.
    pub left: Vec<f64>,
    /// Right eigenvector, normalised to unit sum.
    pub right: Vec<f64>,
}

impl Sft {
    pub fn new(adjacency: Vec<Vec<u8>>) -> Result<Self> {
        let k = adjacency.len();
        if k == 0 || k > u16::MAX as usize {
            return Err(Error::InvalidSystem(format!("alphabet size {k} unsupported")));
        }
        let mut rows = Vec::with_capacity(k);
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidSystem(format!(
                    "adjacency row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|&&v| v > 1) {
                return Err(Error::InvalidSystem(format!("adjacency entry {v} is not 0/1")));
            }
            if row.iter().all(|&v| v == 0) {
                return Err(Error::InvalidSystem(format!("symbol {i} is a dead end")));
            }
            rows.push(row.iter().map(|&v| v == 1).collect());
        }
        Ok(Sft { adjacency: rows })
    }

    /// The full shift on `k` symbols.
    pub fn full(k: usize) -> Self {
        Sft {
            adjacency: vec![vec![true; k]; k],
        }
    }

    /// The golden-mean shift: binary sequences without two consecutive ones.
    pub fn golden_mean() -> Self {
        Sft {
            adjacency: vec![vec![true, true], vec![true, false]],
        }
    }

    pub fn alphabet(&self) -> u16 {
        self.adjacency.len() as u16
    }

    pub fn allows(&self, a: u16, b: u16) -> bool {
        self.adjacency[a as usize][b as usize]
    }

    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        self.adjacency
            .iter()
            .map(|r| r.iter().map(|&b| b as u8).collect())
            .collect()
    }

    pub fn is_admissible(&self, word: &[u16]) -> bool {
        let k = self.alphabet();
        word.iter().all(|&s| s < k) && word.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    /// Number of admissible words of length `n` (`1` for the empty word).
    ///
    /// Counts saturate at `u128::MAX`.
    pub fn admissible_words(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let k = self.adjacency.len();
        let mut counts = vec![1u128; k];
        for _ in 1..n {
            let mut next = vec![0u128; k];
            for (a, &c) in counts.iter().enumerate() {
                for (b, slot) in next.iter_mut().enumerate() {
                    if self.adjacency[a][b] {
                        *slot = slot.saturating_add(c);
                    }
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |acc, &c| acc.saturating_add(c))
    }

    /// All admissible words of length `n`, in lexicographic order.
    pub fn enumerate_words(&self, n: usize) -> Vec<Vec<u16>> {
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(n);
        self.extend_words(n, &mut word, &mut out);
        out
    }

    fn extend_words(&self, n: usize, word: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if word.len() == n {
            out.push(word.clone());
            return;
        }
        for s in 0..self.alphabet() {
            if word.last().is_none_or(|&prev| self.allows(prev, s)) {
                word.push(s);
                self.extend_words(n, word, out);
                word.pop();
            }
        }
    }

    /// Whether the adjacency graph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        let k = self.adjacency.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; k];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(a) = stack.pop() {
                for b in 0..k {
                    let edge = if forward {
                        self.adjacency[a][b]
                    } else {
                        self.adjacency[b][a]
                    };
                    if edge && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        let has_cycle = k > 1 || self.adjacency[0][0];
        has_cycle && reach(true) && reach(false)
    }

    /// Perron root and eigenvectors by power iteration on `A + I`.
    ///
    /// The shift by the identity makes the matrix primitive, so the iteration
    /// converges even for periodic adjacency graphs.
    pub fn perron(&self) -> Result<Perron> {
        if !self.is_irreducible() {
            return Err(Error::ReducibleSft);
        }
        let k = self.adjacency.len();
        let power = |transpose: bool| -> (f64, Vec<f64>) {
            let mut v = vec![1.0 / k as f64; k];
            let mut lambda = 0.0;
            for _ in 0..1_000_000 {
                let mut w = v.clone();
                for a in 0..k {
                    for b in 0..k {
                        let edge = if transpose {
                            self.adjacency[b][a]
                        } else {
                            self.adjacency[a][b]
                        };
                        if edge {
                            w[a] += v[b];
                        }
                    }
                }
                let total: f64 = w.iter().sum();
                let next_lambda = total; // v sums to one
                w.iter_mut().for_each(|x| *x /= total);
                let delta = w
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                v = w;
                let converged = (next_lambda - lambda).abs() <= 1e-10 * next_lambda.abs()
                    && delta <= 1e-13;
                lambda = next_lambda;
                if converged {
                    break;
                }
            }
            (lambda - 1.0, v)
        };
        let (root, right) = power(false);
        let (_, left) = power(true);
        Ok(Perron { root, left, right })
    }

    /// `log` of the Perron root: the exact entropy of the shift.
    pub fn entropy_exact(&self) -> Result<f64> {
        Ok(self.perron()?.root.ln())
    }
}

/// The map part of a [`DynamicalSystem`].
#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Identity,
    Linear { matrix: Vec<Vec<f64>> },
    CircleAffine { multiplier: i64, rotation: f64 },
    Tent { slope: f64 },
    TorusEndomorphism { matrix: Vec<Vec<i64>> },
    Shift(Sft),
    Iterate { base: Box<DynamicalSystem>, times: usize },
}

/// A continuous self-map of one of the supported spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemDescriptor", into = "SystemDescriptor")]
pub struct DynamicalSystem {
    space: Space,
    map: MapKind,
}

impl DynamicalSystem {
    pub fn identity(space: Space) -> Self {
        DynamicalSystem {
            space,
            map: MapKind::Identity,
        }
    }

    pub fn linear(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let dim = matrix.len();
        if dim == 0 || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidSystem("linear map needs a square matrix".into()));
        }
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSystem("linear map entries must be finite".into()));
        }
        Ok(DynamicalSystem {
            space: Space::Euclidean { dim },
            map: MapKind::Linear { matrix },
        })
    }

    /// `x ↦ m·x + α (mod 1)` on the circle.
    pub fn circle_affine(multiplier: i64, rotation: f64) -> Result<Self> {
        if !rotation.is_finite() {
            return Err(Error::InvalidSystem("rotation must be finite".into()));
        }
        Ok(DynamicalSystem {
            space: Space::Circle,
            map: MapKind::CircleAffine {
                multiplier,
                rotation,
            },
        })
    }

    /// The doubling map `x ↦ 2x (mod 1)`.
    pub fn doubling() -> Self {
        DynamicalSystem {
            space: Space::Circle,
            map: MapKind::CircleAffine {
                multiplier: 2,
                rotation: 0.0,
            },
        }
    }

    pub fn rotation(alpha: f64) -> Result<Self> {
        Self::circle_affine(1, alpha)
    }

    /// `x ↦ s·min(x, 1 − x)` on `[0, 1] ⊂ R`.
    pub fn tent(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope <= 2.0) {
            return Err(Error::InvalidSystem(format!("tent slope {slope} outside (0, 2]")));
        }
        Ok(DynamicalSystem {
            space: Space::Euclidean { dim: 1 },
            map: MapKind::Tent { slope },
        })
    }

    pub fn torus_endomorphism(matrix: Vec<Vec<i64>>) -> Result<Self> {
        let dim = matrix.len();
        if dim == 0 || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidSystem("torus map needs a square matrix".into()));
        }
        Ok(DynamicalSystem {
            space: Space::Torus { dim },
            map: MapKind::TorusEndomorphism { matrix },
        })
    }

    pub fn shift(sft: Sft) -> Self {
        DynamicalSystem {
            space: Space::Word {
                alphabet: sft.alphabet(),
            },
            map: MapKind::Shift(sft),
        }
    }

    /// The `k`-fold composition `T^k`.
    pub fn power(&self, k: usize) -> Result<Self> {
        match k {
            0 => Err(Error::InvalidParameter("iterate count must be at least 1".into())),
            1 => Ok(self.clone()),
            _ => Ok(DynamicalSystem {
                space: self.space,
                map: MapKind::Iterate {
                    base: Box::new(self.clone()),
                    times: k,
                },
            }),
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn map(&self) -> &MapKind {
        &self.map
    }

    pub fn sft(&self) -> Option<&Sft> {
        match &self.map {
            MapKind::Shift(sft) => Some(sft),
            _ => None,
        }
    }

    /// For a shift or an iterate of one: the SFT and how many symbols one
    /// application drops.
    pub fn shift_stride(&self) -> Option<(&Sft, usize)> {
        match &self.map {
            MapKind::Shift(sft) => Some((sft, 1)),
            MapKind::Iterate { base, times } => {
                base.shift_stride().map(|(sft, s)| (sft, s * times))
            }
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        match &self.map {
            MapKind::Identity => true,
            MapKind::Iterate { base, .. } => base.is_identity(),
            _ => false,
        }
    }

    /// Whether preimages of compact sets are compact.
    pub fn is_proper(&self) -> bool {
        match &self.map {
            MapKind::Linear { matrix } => determinant(matrix).abs() > 1e-12,
            MapKind::Iterate { base, .. } => base.is_proper(),
            _ => true,
        }
    }

    /// Applies the map once.
    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.space.check(x)?;
        self.step(x)
    }

    fn step(&self, x: &Point) -> Result<Point> {
        match (&self.map, x) {
            (MapKind::Identity, _) => Ok(x.clone()),
            (MapKind::Linear { matrix }, Point::Euclidean { coords }) => {
                let out: Vec<f64> = matrix
                    .iter()
                    .map(|row| row.iter().zip(coords).map(|(a, b)| a * b).sum())
                    .collect();
                if out.iter().all(|v: &f64| v.is_finite()) {
                    Ok(Point::Euclidean { coords: out })
                } else {
                    Err(Error::Overflow { step: 1 })
                }
            }
            (
                MapKind::CircleAffine {
                    multiplier,
                    rotation,
                },
                Point::Circle { angle },
            ) => Ok(Point::circle(*multiplier as f64 * angle + rotation)),
            (MapKind::Tent { slope }, Point::Euclidean { coords }) => {
                let x = coords[0];
                Ok(Point::euclidean(vec![slope * x.min(1.0 - x)]))
            }
            (MapKind::TorusEndomorphism { matrix }, Point::Torus { coords }) => {
                let out: Vec<f64> = matrix
                    .iter()
                    .map(|row| {
                        let s: f64 = row.iter().zip(coords).map(|(&a, b)| a as f64 * b).sum();
                        reduce_unit(s)
                    })
                    .collect();
                Ok(Point::Torus { coords: out })
            }
            (MapKind::Shift(_), Point::Word { symbols, alphabet }) => {
                if symbols.is_empty() {
                    return Err(Error::WordExhausted);
                }
                Ok(Point::Word {
                    symbols: symbols[1..].to_vec(),
                    alphabet: *alphabet,
                })
            }
            (MapKind::Iterate { base, times }, _) => {
                let mut y = x.clone();
                for _ in 0..*times {
                    y = base.step(&y)?;
                }
                Ok(y)
            }
            _ => Err(Error::WrongSpace {
                expected: self.space.to_string(),
                found: x.space().to_string(),
            }),
        }
    }

    /// `(x, Tx, …, T^{n−1}x)`, computed incrementally.
    pub fn orbit(&self, x: &Point, n: usize) -> Result<Vec<Point>> {
        if n == 0 {
            return Err(Error::EmptyOrbit);
        }
        self.space.check(x)?;
        let mut out = Vec::with_capacity(n);
        out.push(x.clone());
        for step in 1..n {
            let next = self.step(&out[step - 1]).map_err(|e| match e {
                Error::Overflow { .. } => Error::Overflow { step },
                other => other,
            })?;
            out.push(next);
        }
        Ok(out)
    }

    /// The JSON-facing descriptor of this system.
    pub fn descriptor(&self) -> SystemDescriptor {
        self.clone().into()
    }
}

fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// JSON form of a system; field names are part of the CLI contract.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemDescriptor {
    Identity {
        space: Space,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    CircleAffine {
        m: i64,
        #[serde(default)]
        alpha: f64,
    },
    Tent {
        slope: f64,
    },
    Torus {
        matrix: Vec<Vec<i64>>,
    },
    Sft {
        adjacency: Vec<Vec<u8>>,
    },
    Iterate {
        base: Box<SystemDescriptor>,
        k: usize,
    },
}

impl TryFrom<SystemDescriptor> for DynamicalSystem {
    type Error = Error;

    fn try_from(d: SystemDescriptor) -> Result<Self> {
        match d {
            SystemDescriptor::Identity { space } => Ok(DynamicalSystem::identity(space)),
            SystemDescriptor::Linear { matrix } => DynamicalSystem::linear(matrix),
            SystemDescriptor::CircleAffine { m, alpha } => DynamicalSystem::circle_affine(m, alpha),
            SystemDescriptor::Tent { slope } => DynamicalSystem::tent(slope),
            SystemDescriptor::Torus { matrix } => DynamicalSystem::torus_endomorphism(matrix),
            SystemDescriptor::Sft { adjacency } => Ok(DynamicalSystem::shift(Sft::new(adjacency)?)),
            SystemDescriptor::Iterate { base, k } => DynamicalSystem::try_from(*base)?.power(k),
        }
    }
}

impl From<DynamicalSystem> for SystemDescriptor {
    fn from(s: DynamicalSystem) -> Self {
        match s.map {
            MapKind::Identity => SystemDescriptor::Identity { space: s.space },
            MapKind::Linear { matrix } => SystemDescriptor::Linear { matrix },
            MapKind::CircleAffine {
                multiplier,
                rotation,
            } => SystemDescriptor::CircleAffine {
                m: multiplier,
                alpha: rotation,
            },
            MapKind::Tent { slope } => SystemDescriptor::Tent { slope },
            MapKind::TorusEndomorphism { matrix } => SystemDescriptor::Torus { matrix },
            MapKind::Shift(sft) => SystemDescriptor::Sft {
                adjacency: sft.adjacency(),
            },
            MapKind::Iterate { base, times } => SystemDescriptor::Iterate {
                base: Box::new((*base).into()),
                k: times,
            },
        }
    }
}
